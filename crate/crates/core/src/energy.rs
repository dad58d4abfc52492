//! Double-time interaction energies `H_Λ(x) = -∫∫_Λ W(x_t, x_s, |t-s|)` on
//! the time grid, the doubled (folded) path representation, outward shifts,
//! and the path-level checks of the shift inequality and its sufficient
//! condition.
//!
//! Quadrature is the tensor trapezoid rule restricted to grid rectangles.
//! Composite regions are assembled from rectangles by inclusion–exclusion, so
//! every region shares the same nodes and weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{c_infinity, Interaction, PairPotentialW, PotentialV};
use crate::quadrature::trapezoid_weights;
use crate::reference::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnergyRegion {
    /// `[-T, T]²`.
    Square { t: f64 },
    /// `([-T,T] × [-S,S]) ∪ ([-S,S] × [-T,T])`.
    Frame { s: f64, t: f64 },
    /// `(R × [-S,S]) ∪ ([-S,S] × R)`, truncated at `t_max`.
    InfiniteFrame { s: f64, t_max: f64 },
}

impl EnergyRegion {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            EnergyRegion::Square { t } => t > 0.0,
            EnergyRegion::Frame { s, t } => s > 0.0 && s <= t,
            EnergyRegion::InfiniteFrame { s, t_max } => s > 0.0 && s <= t_max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid region {self:?}")))
        }
    }

    /// Largest `|t|` the region touches.
    pub fn span(&self) -> f64 {
        match *self {
            EnergyRegion::Square { t } | EnergyRegion::Frame { t, .. } => t,
            EnergyRegion::InfiniteFrame { t_max, .. } => t_max,
        }
    }
}

/// Trapezoid `∫_{a1}^{b1} du ∫_{a2}^{b2} dv W(x_u, x_v, |u - v|)` (note the sign).
pub fn rect_integral(w: &dyn Interaction, path: &Path, (a1, b1): (f64, f64), (a2, b2): (f64, f64)) -> Result<f64> {
    let g = &path.grid;
    let (i0, i1) = (g.slot(a1)?, g.slot(b1)?);
    let (j0, j1) = (g.slot(a2)?, g.slot(b2)?);
    if i1 < i0 || j1 < j0 {
        return Err(Error::Domain(format!("empty rectangle [{a1},{b1}] x [{a2},{b2}]")));
    }
    let wi = trapezoid_weights(i1 - i0 + 1, g.dt);
    let wj = trapezoid_weights(j1 - j0 + 1, g.dt);
    let x = &path.positions;
    let mut total = 0.0;
    for (a, &ca) in wi.iter().enumerate() {
        if ca == 0.0 {
            continue;
        }
        let i = i0 + a;
        let mut row = 0.0;
        for (b, &cb) in wj.iter().enumerate() {
            let j = j0 + b;
            let lag = (i as f64 - j as f64).abs() * g.dt;
            row += cb * w.pair(x[i], x[j], lag);
        }
        total += ca * row;
    }
    Ok(total)
}

fn region_integral(w: &dyn Interaction, path: &Path, region: &EnergyRegion) -> Result<f64> {
    region.validate()?;
    if region.span() > path.grid.t_half + 1e-12 {
        return Err(Error::Domain(format!(
            "region reaches |t| = {} but the path covers only [-{1}, {1}]",
            region.span(),
            path.grid.t_half
        )));
    }
    match *region {
        EnergyRegion::Square { t } => rect_integral(w, path, (-t, t), (-t, t)),
        EnergyRegion::Frame { s, t } | EnergyRegion::InfiniteFrame { s, t_max: t } => {
            let a = rect_integral(w, path, (-t, t), (-s, s))?;
            let b = rect_integral(w, path, (-s, s), (-t, t))?;
            let c = rect_integral(w, path, (-s, s), (-s, s))?;
            Ok(a + b - c)
        }
    }
}

/// `H_Λ(x)`; the Gibbs weight is `exp(H_Λ)`.
pub fn energy(w: &dyn Interaction, path: &Path, region: &EnergyRegion) -> Result<f64> {
    Ok(-region_integral(w, path, region)?)
}

/// JSON energy record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub region: EnergyRegion,
    pub value: f64,
    /// A-priori bound on `|H_Λ|` from the single-time budget, when finite.
    pub bound: Option<f64>,
    /// Enclosure of the untruncated value (InfiniteFrame only).
    pub tail_interval: Option<(f64, f64)>,
}

/// Energy plus bookkeeping for a catalog pair potential.
pub fn energy_record(w: &PairPotentialW, path: &Path, region: EnergyRegion) -> Result<EnergyRecord> {
    let value = energy(w, path, &region)?;
    let cinf = c_infinity(w).ok();
    let (bound, tail_interval) = match region {
        EnergyRegion::Square { t } => (cinf.map(|c| 2.0 * t * c), None),
        EnergyRegion::Frame { s, .. } => (cinf.map(|c| 4.0 * s * c), None),
        EnergyRegion::InfiniteFrame { s, t_max } => {
            let tail = 8.0 * s * w.envelope_tail(t_max - s)?;
            (cinf.map(|c| 4.0 * s * c), Some((value - tail, value + tail)))
        }
    };
    Ok(EnergyRecord { region, value, bound, tail_interval })
}

/// Folded representation `(x'_i, x''_i) = (x_{+i dt}, x_{-i dt})`, `i = 0..=N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubledPath {
    pub dt: f64,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl DoubledPath {
    pub fn new(dt: f64, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        if plus.len() != minus.len() || plus.is_empty() {
            return Err(Error::Dimension { expected: plus.len(), got: minus.len() });
        }
        Ok(Self { dt, plus, minus })
    }

    /// The folding map applied to a two-sided path.
    pub fn from_path(path: &Path) -> Self {
        Self::shifted(path, 0, path.grid.n).expect("zero shift always fits")
    }

    /// Fold of the outward shift by `k` steps, restricted to `[-n dt, n dt]`:
    /// `x'_i = x_{i+k}`, `x''_i = x_{-i-k}`.
    pub fn shifted(path: &Path, k: usize, n: usize) -> Result<Self> {
        if n + k > path.grid.n {
            return Err(Error::Domain(format!("shift by {k} steps needs {} steps per side, path has {}", n + k, path.grid.n)));
        }
        let plus = (0..=n).map(|i| path.step((i + k) as i64)).collect();
        let minus = (0..=n).map(|i| path.step(-((i + k) as i64))).collect();
        Ok(Self { dt: path.grid.dt, plus, minus })
    }

    pub fn steps(&self) -> usize {
        self.plus.len() - 1
    }
}

/// `H̃_T` of a folded path: minus the four-term integral over `[0,T]²`.
pub fn doubled_energy(w: &dyn Interaction, dp: &DoubledPath, t_half: f64) -> Result<f64> {
    let n = (t_half / dp.dt).round() as usize;
    if ((n as f64) * dp.dt - t_half).abs() > 1e-9 * dp.dt || n > dp.steps() {
        return Err(Error::Domain(format!("T = {t_half} not covered by the doubled path")));
    }
    let wts = trapezoid_weights(n + 1, dp.dt);
    let (p, m) = (&dp.plus, &dp.minus);
    let mut total = 0.0;
    for i in 0..=n {
        let mut row = 0.0;
        for j in 0..=n {
            let same = (i as f64 - j as f64).abs() * dp.dt;
            let cross = (i + j) as f64 * dp.dt;
            row += wts[j]
                * (w.pair(p[i], p[j], same) + w.pair(m[i], m[j], same) + w.pair(p[i], m[j], cross) + w.pair(m[i], p[j], cross));
        }
        total += wts[i] * row;
    }
    Ok(-total)
}

fn shift_steps(dt: f64, tau: f64) -> Result<usize> {
    let k = (tau / dt).round();
    if tau < 0.0 || (k * dt - tau).abs() > 1e-9 * dt {
        return Err(Error::Grid(format!("shift {tau} is not a nonnegative multiple of dt = {dt}")));
    }
    Ok(k as usize)
}

/// Outward shift `(θ_τ x)_t = x_{t+τ}` for `t ≥ 0`, `x_{t-τ}` for `t < 0`,
/// restricted to `[-t_half, t_half]`.
pub fn apply_shift(path: &Path, tau: f64, t_half: f64) -> Result<Path> {
    let k = shift_steps(path.grid.dt, tau)?;
    let grid = crate::reference::TimeGrid::new(t_half, path.grid.dt)?;
    if grid.n + k > path.grid.n {
        return Err(Error::Domain(format!("path too short for shift {tau} on [-{t_half}, {t_half}]")));
    }
    let n = grid.n as i64;
    let k = k as i64;
    let positions = (-n..=n).map(|i| if i >= 0 { path.step(i + k) } else { path.step(i - k) }).collect();
    Path::new(grid, positions)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftViolation {
    pub path: usize,
    pub tau: f64,
    /// `H_T(x) - H_T(θ_τ x)`.
    pub gap: f64,
    pub budget: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShiftReport {
    pub taus: Vec<f64>,
    /// `gaps[p][k] = H_T(x_p) - H_T(θ_{τ_k} x_p)`.
    pub gaps: Vec<Vec<f64>>,
    pub violations: Vec<ShiftViolation>,
    pub fitted_c: f64,
    pub fitted_d: f64,
}

/// Smallest `(a, b)` with `a, b ≥ 0`, `a` the OLS slope of the per-τ maxima,
/// such that `max_k ≤ a τ_k + b` for every sampled τ.
fn fit_linear_envelope(taus: &[f64], values: &[Vec<f64>]) -> (f64, f64) {
    let maxima: Vec<f64> = (0..taus.len())
        .map(|k| values.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if maxima.is_empty() || values.is_empty() {
        return (0.0, 0.0);
    }
    let pts: Vec<(f64, f64)> = taus.iter().copied().zip(maxima.iter().copied()).collect();
    let a = crate::stats::ols(&pts).0.max(0.0);
    let b = pts.iter().map(|(t, m)| m - a * t).fold(0.0f64, f64::max);
    (a, b)
}

/// Check `H_T(x) ≤ H_T(θ_τ x) + Cτ + D` on each path and shift.
pub fn check_w2_on_paths(w: &dyn Interaction, paths: &[Path], t_half: f64, taus: &[f64], c: f64, d: f64) -> Result<ShiftReport> {
    let gaps: Vec<Vec<f64>> = paths
        .par_iter()
        .map(|p| {
            let n = shift_steps(p.grid.dt, t_half)?;
            let base = doubled_energy(w, &DoubledPath::shifted(p, 0, n)?, t_half)?;
            taus.iter()
                .map(|&tau| {
                    let k = shift_steps(p.grid.dt, tau)?;
                    Ok(base - doubled_energy(w, &DoubledPath::shifted(p, k, n)?, t_half)?)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut violations = Vec::new();
    for (pi, row) in gaps.iter().enumerate() {
        for (&tau, &gap) in taus.iter().zip(row) {
            let budget = c * tau + d;
            if gap > budget + 1e-12 {
                violations.push(ShiftViolation { path: pi, tau, gap, budget });
            }
        }
    }
    let (fitted_c, fitted_d) = fit_linear_envelope(taus, &gaps);
    Ok(ShiftReport { taus: taus.to_vec(), gaps, violations, fitted_c, fitted_d })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuffcondReport {
    pub taus: Vec<f64>,
    /// `lhs[p][k] = ∫_{-T}^0 ds ∫_0^T dt [W(x_s,x_t,|s-t|) - W(x_s,x_t,|s-t|+2τ_k)]`.
    pub lhs: Vec<Vec<f64>>,
    pub fitted_l: f64,
    pub fitted_m: f64,
}

pub fn check_suffcond(w: &dyn Interaction, paths: &[Path], t_half: f64, taus: &[f64]) -> Result<SuffcondReport> {
    let lhs: Vec<Vec<f64>> = paths
        .par_iter()
        .map(|p| {
            taus.iter()
                .map(|&tau| {
                    let diff = |a: f64, b: f64, lag: f64| w.pair(a, b, lag) - w.pair(a, b, lag + 2.0 * tau);
                    rect_integral(&diff, p, (-t_half, 0.0), (0.0, t_half))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let (fitted_l, fitted_m) = fit_linear_envelope(taus, &lhs);
    Ok(SuffcondReport { taus: taus.to_vec(), lhs, fitted_l, fitted_m })
}

/// `-∫ V(x_s) ds - (1/2T) ∫∫ W̃(x_s, x_t)` over `[-T, T]`.
pub fn mean_field_energy(v: &PotentialV, wt: &dyn Fn(f64, f64) -> f64, path: &Path, t_half: f64) -> Result<f64> {
    let g = &path.grid;
    let (i0, i1) = (g.slot(-t_half)?, g.slot(t_half)?);
    let wts = trapezoid_weights(i1 - i0 + 1, g.dt);
    let x = &path.positions[i0..=i1];
    let mut pot = 0.0;
    for (c, &xi) in wts.iter().zip(x) {
        pot += c * v.eval_1d(xi)?;
    }
    let mut pair = 0.0;
    for (ci, &xi) in wts.iter().zip(x) {
        for (cj, &xj) in wts.iter().zip(x) {
            pair += ci * cj * wt(xi, xj);
        }
    }
    Ok(-pot - pair / (2.0 * t_half))
}
