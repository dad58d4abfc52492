//! Potential catalog: single-site potentials `V`, pair potentials `W`, and
//! the integrability / shift conditions that relate them.

use std::f64::consts::FRAC_PI_2;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::reference::Path;

/// Value returned for `V` at a Coulomb singularity unless configured otherwise.
pub const DEFAULT_COULOMB_CLAMP: f64 = -1.0e6;

/// Piecewise-linear table `x -> V(x)` with strictly increasing abscissae.
/// Outside the table the end values are held constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1D {
    xs: Vec<f64>,
    values: Vec<f64>,
}

impl Table1D {
    pub fn new(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::Format("table needs >= 2 rows of equal length".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format("table abscissae must be strictly increasing".into()));
        }
        if values.iter().chain(&xs).any(|v| !v.is_finite()) {
            return Err(Error::Format("table contains non-finite values".into()));
        }
        Ok(Self { xs, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= self.xs[n - 1] {
            return self.values[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let s = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.values[k] + s * (self.values[k + 1] - self.values[k])
    }
}

/// Rectangular table `(r, t) -> W` with `r = |x - y|`. Bilinear inside;
/// `r` is clamped to the table range and `W = 0` for `t` beyond the last row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table2D {
    rs: Vec<f64>,
    ts: Vec<f64>,
    /// Row-major over `rs`, inner index over `ts`.
    values: Vec<f64>,
}

impl Table2D {
    pub fn new(rs: Vec<f64>, ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if rs.len() < 2 || ts.len() < 2 || values.len() != rs.len() * ts.len() {
            return Err(Error::Format("pair table must be a full rectangular grid".into()));
        }
        if rs.windows(2).any(|w| w[1] <= w[0]) || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format("pair table abscissae must be strictly increasing".into()));
        }
        if rs[0] < 0.0 || ts[0] < 0.0 {
            return Err(Error::Format("pair table needs r >= 0 and t >= 0".into()));
        }
        Ok(Self { rs, ts, values })
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ts.len() + j]
    }

    fn bracket(xs: &[f64], x: f64) -> (usize, f64) {
        let n = xs.len();
        if x <= xs[0] {
            return (0, 0.0);
        }
        if x >= xs[n - 1] {
            return (n - 2, 1.0);
        }
        let k = xs.partition_point(|&v| v <= x) - 1;
        (k, (x - xs[k]) / (xs[k + 1] - xs[k]))
    }

    /// Value along row `i` interpolated in `t`.
    fn row_at(&self, i: usize, t: f64) -> f64 {
        if t > *self.ts.last().unwrap() {
            return 0.0;
        }
        let (j, s) = Self::bracket(&self.ts, t);
        self.at(i, j) + s * (self.at(i, j + 1) - self.at(i, j))
    }

    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let (i, s) = Self::bracket(&self.rs, r);
        let a = self.row_at(i, t);
        let b = self.row_at(i + 1, t);
        a + s * (b - a)
    }

    /// `max_r |W(r, t)|`; attained at a table node in `r` since `W` is piecewise linear there.
    pub fn envelope(&self, t: f64) -> f64 {
        (0..self.rs.len()).map(|i| self.row_at(i, t).abs()).fold(0.0, f64::max)
    }

    pub fn t_max(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    pub fn nodes_t(&self) -> &[f64] {
        &self.ts
    }

    /// Nondecreasing in `t` along every row, including the drop to 0 after the last row.
    fn is_monotone(&self) -> bool {
        (0..self.rs.len()).all(|i| {
            let row: Vec<f64> = (0..self.ts.len()).map(|j| self.at(i, j)).collect();
            row.windows(2).all(|w| w[1] >= w[0]) && *row.last().unwrap() <= 0.0
        })
    }
}

fn parse_columns(text: &str, ncols: usize) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let vals = vals.map_err(|e| Error::Parse { line: lineno + 1, msg: e.to_string() })?;
        if vals.len() != ncols {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("expected {ncols} columns, found {}", vals.len()),
            });
        }
        rows.push(vals);
    }
    Ok(rows)
}

/// Parse a two-column `x V(x)` table.
pub fn parse_table_1d(text: &str) -> Result<Table1D> {
    let rows = parse_columns(text, 2)?;
    Table1D::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

/// Parse a three-column `r t W` table, `r` outer and `t` inner, both ascending.
pub fn parse_table_2d(text: &str) -> Result<Table2D> {
    let rows = parse_columns(text, 3)?;
    let mut rs: Vec<f64> = Vec::new();
    let mut ts: Vec<f64> = Vec::new();
    for r in &rows {
        if rs.last() != Some(&r[0]) {
            rs.push(r[0]);
        }
    }
    for r in rows.iter().take_while(|r| r[0] == rows[0][0]) {
        ts.push(r[1]);
    }
    if rows.len() != rs.len() * ts.len() {
        return Err(Error::Format("pair table rows do not form a rectangular grid".into()));
    }
    for (k, r) in rows.iter().enumerate() {
        if r[0] != rs[k / ts.len()] || r[1] != ts[k % ts.len()] {
            return Err(Error::Parse { line: k + 1, msg: "row out of (r outer, t inner) order".into() });
        }
    }
    Table2D::new(rs, ts, rows.iter().map(|r| r[2]).collect())
}

pub fn load_table_1d(path: impl AsRef<FsPath>) -> Result<Table1D> {
    parse_table_1d(&std::fs::read_to_string(path)?)
}

pub fn load_table_2d(path: impl AsRef<FsPath>) -> Result<Table2D> {
    parse_table_2d(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    /// `omega^2 |x|^2 / 2`
    Harmonic { omega: f64 },
    /// `V = 0`; confinement comes from the Dirichlet walls of the grid.
    DirichletBoxZero,
    /// `-charge / |x|` in three dimensions.
    Coulomb3D { charge: f64 },
    /// Tabulated in `|x|` (or `x` when `dim == 1`).
    UserTable(Table1D),
}

/// Single-site potential `V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialV {
    pub kind: PotentialKind,
    pub dim: usize,
    /// Additive constant; set to `-E0` after a ground-state solve.
    pub shift: f64,
    /// Declared `liminf_{|x|->inf} V(x)` before the shift.
    alpha_unshifted: f64,
    /// Value returned at the Coulomb singularity; `None` turns it into an error.
    pub clamp: Option<f64>,
}

impl PotentialV {
    pub fn harmonic(omega: f64) -> Self {
        Self::harmonic_in(1, omega)
    }

    pub fn harmonic_in(dim: usize, omega: f64) -> Self {
        Self {
            kind: PotentialKind::Harmonic { omega },
            dim,
            shift: 0.0,
            alpha_unshifted: f64::INFINITY,
            clamp: None,
        }
    }

    pub fn box_zero() -> Self {
        Self { kind: PotentialKind::DirichletBoxZero, dim: 1, shift: 0.0, alpha_unshifted: f64::INFINITY, clamp: None }
    }

    pub fn box_zero_in(dim: usize) -> Self {
        Self { dim, ..Self::box_zero() }
    }

    pub fn coulomb3d(charge: f64) -> Self {
        Self {
            kind: PotentialKind::Coulomb3D { charge },
            dim: 3,
            shift: 0.0,
            alpha_unshifted: 0.0,
            clamp: Some(DEFAULT_COULOMB_CLAMP),
        }
    }

    /// Tabulated potential; `alpha` is the declared liminf at infinity (catalog metadata).
    pub fn table(dim: usize, table: Table1D, alpha: f64) -> Self {
        Self { kind: PotentialKind::UserTable(table), dim, shift: 0.0, alpha_unshifted: alpha, clamp: None }
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn with_clamp(mut self, clamp: Option<f64>) -> Self {
        self.clamp = clamp;
        self
    }

    /// `liminf V` at infinity including the current shift.
    pub fn alpha(&self) -> f64 {
        self.alpha_unshifted + self.shift
    }

    /// All catalog entries depend on `|x|` only.
    pub fn is_radial(&self) -> bool {
        true
    }

    /// `V(x) + shift` at a point of matching dimension.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite point".into()));
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        match (&self.kind, self.dim) {
            (PotentialKind::UserTable(t), 1) => Ok(t.eval(x[0]) + self.shift),
            _ => self.eval_radial(r),
        }
    }

    /// `V` as a function of the radius `r = |x|`.
    pub fn eval_radial(&self, r: f64) -> Result<f64> {
        let base = match &self.kind {
            PotentialKind::Harmonic { omega } => 0.5 * omega * omega * r * r,
            PotentialKind::DirichletBoxZero => 0.0,
            PotentialKind::Coulomb3D { charge } => {
                if r == 0.0 {
                    return self
                        .clamp
                        .map(|c| c + self.shift)
                        .ok_or_else(|| Error::Domain("Coulomb potential evaluated at the origin without a clamp".into()));
                }
                -charge / r
            }
            PotentialKind::UserTable(t) => t.eval(r),
        };
        Ok(base + self.shift)
    }

    /// One-dimensional evaluation used on the space grid.
    pub fn eval_1d(&self, x: f64) -> Result<f64> {
        match &self.kind {
            PotentialKind::UserTable(t) => Ok(t.eval(x) + self.shift),
            _ => self.eval_radial(x.abs()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PairKind {
    Zero,
    /// `W = value` everywhere.
    Constant { value: f64 },
    /// `-1 / (|x-y|^2 + t^2 + 1)`
    Nelson,
    /// `-1/(t^2+1)` when `|x-y| <= 2t`, else 0 (one-dimensional).
    StepCounterexample,
    UserTable(Table2D),
}

/// Pair potential `W(x, y, t)`; the catalog value is multiplied by `coupling`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairPotentialW {
    pub kind: PairKind,
    pub coupling: f64,
}

/// Anything that can act as a pair interaction on one-dimensional positions.
pub trait Interaction: Sync {
    fn pair(&self, x: f64, y: f64, t: f64) -> f64;
}

impl<F> Interaction for F
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn pair(&self, x: f64, y: f64, t: f64) -> f64 {
        self(x, y, t)
    }
}

impl Interaction for PairPotentialW {
    #[inline]
    fn pair(&self, x: f64, y: f64, t: f64) -> f64 {
        self.eval_1d(x, y, t)
    }
}

impl PairPotentialW {
    pub fn zero() -> Self {
        Self { kind: PairKind::Zero, coupling: 1.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self { kind: PairKind::Constant { value }, coupling: 1.0 }
    }

    pub fn nelson(coupling: f64) -> Self {
        Self { kind: PairKind::Nelson, coupling }
    }

    pub fn step_counterexample(coupling: f64) -> Self {
        Self { kind: PairKind::StepCounterexample, coupling }
    }

    pub fn table(table: Table2D, coupling: f64) -> Self {
        Self { kind: PairKind::UserTable(table), coupling }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PairKind::Zero) || self.coupling == 0.0
    }

    #[inline]
    fn base(&self, r2: f64, t: f64) -> f64 {
        match &self.kind {
            PairKind::Zero => 0.0,
            PairKind::Constant { value } => *value,
            PairKind::Nelson => -1.0 / (r2 + t * t + 1.0),
            PairKind::StepCounterexample => {
                if r2.sqrt() <= 2.0 * t {
                    -1.0 / (t * t + 1.0)
                } else {
                    0.0
                }
            }
            PairKind::UserTable(tab) => tab.eval(r2.sqrt(), t),
        }
    }

    /// `W(x, y, t)` for points in `R^d`.
    pub fn eval(&self, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("pair potential needs t >= 0, got {t}")));
        }
        if x.len() != y.len() {
            return Err(Error::Dimension { expected: x.len(), got: y.len() });
        }
        let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(self.coupling * self.base(r2, t))
    }

    /// Unchecked one-dimensional evaluation for inner loops (`t >= 0` assumed).
    #[inline]
    pub fn eval_1d(&self, x: f64, y: f64, t: f64) -> f64 {
        let d = x - y;
        self.coupling * self.base(d * d, t)
    }

    /// `w(t)` with `|W(x, y, t)| <= w(t)` for all `x, y`.
    pub fn envelope(&self, t: f64) -> f64 {
        let c = self.coupling.abs();
        match &self.kind {
            PairKind::Zero => 0.0,
            PairKind::Constant { value } => c * value.abs(),
            PairKind::Nelson | PairKind::StepCounterexample => c / (1.0 + t * t),
            PairKind::UserTable(tab) => c * tab.envelope(t),
        }
    }

    /// `int_a^inf w(t) dt`, or an error when the envelope is not integrable.
    pub fn envelope_tail(&self, a: f64) -> Result<f64> {
        let c = self.coupling.abs();
        match &self.kind {
            PairKind::Zero => Ok(0.0),
            PairKind::Constant { value } => {
                if c * value.abs() == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::DivergentEnvelope("constant pair potential".into()))
                }
            }
            PairKind::Nelson | PairKind::StepCounterexample => Ok(c * (FRAC_PI_2 - a.atan())),
            PairKind::UserTable(tab) => {
                if a >= tab.t_max() {
                    Ok(0.0)
                } else {
                    Ok(integrate_piecewise(&|t| self.envelope(t), a, tab.t_max(), tab.nodes_t()))
                }
            }
        }
    }

    /// Whether `t -> W(x, y, t)` is nondecreasing for every `x, y`.
    pub fn monotone_in_t(&self) -> bool {
        let sign_ok = self.coupling >= 0.0;
        match &self.kind {
            PairKind::Zero | PairKind::Constant { .. } => true,
            PairKind::Nelson => sign_ok,
            PairKind::StepCounterexample => self.coupling == 0.0,
            PairKind::UserTable(tab) => {
                if self.coupling >= 0.0 {
                    tab.is_monotone()
                } else {
                    self.coupling == 0.0
                }
            }
        }
    }
}

/// Integrate over `[a, b]` splitting at the table nodes so each piece is smooth.
fn integrate_piecewise<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, nodes: &[f64]) -> f64 {
    let mut cuts = vec![a];
    cuts.extend(nodes.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    cuts.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], 1e-13)).sum()
}

const C_INFINITY_SPLIT: f64 = 64.0;

/// `C_inf = 2 int_0^inf w(t) dt`: adaptive quadrature on `[0, 64]` plus the analytic tail.
pub fn c_infinity(w: &PairPotentialW) -> Result<f64> {
    let tail = w.envelope_tail(C_INFINITY_SPLIT)?;
    let body = match &w.kind {
        PairKind::Zero => 0.0,
        PairKind::UserTable(tab) => {
            let end = tab.t_max().min(C_INFINITY_SPLIT);
            integrate_piecewise(&|t| w.envelope(t), 0.0, end, tab.nodes_t())
        }
        _ => {
            // the Lorentzian varies on a unit scale; split so the tolerance is met everywhere
            let cuts = [0.0, 1.0, 4.0, 16.0, C_INFINITY_SPLIT];
            cuts.windows(2).map(|c| adaptive_simpson(&|t| w.envelope(t), c[0], c[1], 1e-14)).sum()
        }
    };
    Ok(2.0 * (body + tail))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum W2Mode {
    /// Assumes the left/right interaction energy `I` is finite: `8 C_inf < alpha`.
    FiniteI,
    /// Requires `t -> W` increasing (so `L = M = 0`): `12 C_inf < alpha`.
    Monotone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct W2Report {
    pub holds: bool,
    pub margin: f64,
    pub threshold: f64,
    pub c_infinity: f64,
    pub alpha: f64,
    pub mode: W2Mode,
}

/// Sufficient conditions for the shift inequality (W2).
pub fn check_w2_sufficient(v: &PotentialV, w: &PairPotentialW, mode: W2Mode) -> Result<W2Report> {
    let alpha = v.alpha();
    if alpha == f64::NEG_INFINITY || alpha.is_nan() {
        return Err(Error::InvalidCatalog(format!("alpha = {alpha} is not admissible")));
    }
    let c_inf = c_infinity(w)?;
    let factor = match mode {
        W2Mode::FiniteI => 8.0,
        W2Mode::Monotone => 12.0,
    };
    let threshold = factor * c_inf;
    let margin = alpha - threshold;
    let structural = match mode {
        W2Mode::FiniteI => true,
        W2Mode::Monotone => w.monotone_in_t(),
    };
    Ok(W2Report { holds: structural && threshold < alpha, margin, threshold, c_infinity: c_inf, alpha, mode })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub monotone: bool,
    /// `(x, y, t_lo, t_hi)` with `W(x, y, t_hi) < W(x, y, t_lo)`.
    pub witness: Option<(f64, f64, f64, f64)>,
}

/// Scan `t -> W(x, y, t)` along every sampled line for a decrease.
pub fn check_monotone_in_t(w: &PairPotentialW, pairs: &[(f64, f64)], ts: &[f64]) -> Result<MonotoneReport> {
    if pairs.is_empty() || ts.is_empty() {
        return Err(Error::Empty("monotonicity grid"));
    }
    let mut ts = ts.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    if ts[0] < 0.0 {
        return Err(Error::Domain("negative t in monotonicity grid".into()));
    }
    for &(x, y) in pairs {
        for pair in ts.windows(2) {
            let lo = w.eval_1d(x, y, pair[0]);
            let hi = w.eval_1d(x, y, pair[1]);
            if hi < lo {
                return Ok(MonotoneReport { monotone: false, witness: Some((x, y, pair[0], pair[1])) });
            }
        }
    }
    Ok(MonotoneReport { monotone: true, witness: None })
}

/// Largest `|int_{-T}^0 ds int_0^T dt W(x_t, x_s, |t-s|)|` over an ensemble.
/// An empirical lower bound for the supremum `I`, nothing more.
pub fn estimate_interaction_i(w: &dyn Interaction, paths: &[Path], t_half: f64) -> Result<f64> {
    if paths.is_empty() {
        return Err(Error::Empty("path ensemble"));
    }
    let mut best: f64 = 0.0;
    for p in paths {
        let v = crate::energy::rect_integral(w, p, (0.0, t_half), (-t_half, 0.0))?;
        best = best.max(v.abs());
    }
    Ok(best)
}

/// Left/right interaction integrals for the step counterexample along `x_t = t`:
/// `(int int W(x_s, x_t, |t-s|), int int W(x_{s-1}, x_{t+1}, |t-s|))` over `[-T,0] x [0,T]`.
pub fn step_counterexample_integrals(w: &PairPotentialW, t_half: f64, dt: f64) -> Result<(f64, f64)> {
    let tg = crate::reference::TimeGrid::new(t_half + 1.0, dt)?;
    let line = Path::from_fn(tg, |t| t);
    let direct = crate::energy::rect_integral(w, &line, (-t_half, 0.0), (0.0, t_half))?;
    // W(x_{s-1}, x_{t+1}, |t-s|) with x_t = t; the time lag is unaffected by the offsets
    let shifted_w = |a: f64, b: f64, lag: f64| w.eval_1d(a - 1.0, b + 1.0, lag);
    let shifted = crate::energy::rect_integral(&shifted_w, &line, (-t_half, 0.0), (0.0, t_half))?;
    Ok((direct, shifted))
}

/// Least-squares slope of `value` against `ln T`: a growth-rate proxy for divergence.
pub fn log_growth_rate(samples: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, v)| (t.ln(), v)).collect();
    crate::stats::ols(&pts).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_value() {
        assert_eq!(PotentialV::harmonic(1.0).eval(&[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn coulomb_unit_radius_and_clamp() {
        let v = PotentialV::coulomb3d(1.0);
        assert_eq!(v.eval(&[0.0, 1.0, 0.0]).unwrap(), -1.0);
        assert_eq!(v.eval(&[0.0, 0.0, 0.0]).unwrap(), -1.0e6);
        let unclamped = v.clone().with_clamp(None);
        assert!(matches!(unclamped.eval(&[0.0; 3]), Err(Error::Domain(_))));
        assert!(matches!(v.eval(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn alpha_catalog() {
        assert_eq!(PotentialV::harmonic(1.0).alpha(), f64::INFINITY);
        assert_eq!(PotentialV::coulomb3d(1.0).alpha(), 0.0);
        assert_eq!(PotentialV::coulomb3d(1.0).with_shift(0.5).alpha(), 0.5);
    }

    #[test]
    fn nelson_values() {
        let w = PairPotentialW::nelson(1.0);
        assert_eq!(w.eval(&[0.0], &[0.0], 0.0).unwrap(), -1.0);
        assert_eq!(w.eval(&[0.3], &[0.3], 1.0).unwrap(), -0.5);
        assert!(w.eval(&[0.0], &[0.0], -1.0).is_err());
        assert_eq!(PairPotentialW::zero().eval(&[1.0], &[-2.0], 3.0).unwrap(), 0.0);
    }

    #[test]
    fn c_infinity_catalog() {
        assert!((c_infinity(&PairPotentialW::nelson(1.0)).unwrap() - PI).abs() < 1e-8);
        assert!((c_infinity(&PairPotentialW::nelson(2.0)).unwrap() - 2.0 * PI).abs() < 1e-8);
        assert_eq!(c_infinity(&PairPotentialW::zero()).unwrap(), 0.0);
        assert!(matches!(c_infinity(&PairPotentialW::constant(-1.0)), Err(Error::DivergentEnvelope(_))));
    }

    #[test]
    fn w2_sufficient_examples() {
        let r = check_w2_sufficient(&PotentialV::harmonic(1.0), &PairPotentialW::nelson(1.0), W2Mode::Monotone).unwrap();
        assert!(r.holds);
        assert_eq!(r.margin, f64::INFINITY);

        let t = Table1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let v1 = PotentialV::table(1, t, 1.0);
        let r = check_w2_sufficient(&v1, &PairPotentialW::nelson(1.0), W2Mode::Monotone).unwrap();
        assert!(!r.holds);
        assert!((r.threshold - 12.0 * PI).abs() < 1e-7);

        let r = check_w2_sufficient(&v1, &PairPotentialW::zero(), W2Mode::FiniteI).unwrap();
        assert!(r.holds);
        assert_eq!(r.margin, 1.0);

        let bad = PotentialV::table(1, Table1D::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(check_w2_sufficient(&bad, &PairPotentialW::zero(), W2Mode::FiniteI), Err(Error::InvalidCatalog(_))));
    }

    #[test]
    fn monotone_detector() {
        let pairs = [(0.0, 0.0), (0.0, 1.0), (-1.0, 2.0), (0.5, 3.5)];
        let ts: Vec<f64> = (0..=40).map(|k| 0.1 * k as f64).collect();
        assert!(check_monotone_in_t(&PairPotentialW::nelson(1.0), &pairs, &ts).unwrap().monotone);
        assert!(check_monotone_in_t(&PairPotentialW::constant(-2.0), &pairs, &ts).unwrap().monotone);
        let step = check_monotone_in_t(&PairPotentialW::step_counterexample(1.0), &pairs, &ts).unwrap();
        assert!(!step.monotone);
        let (x, y, lo, hi) = step.witness.unwrap();
        let w = PairPotentialW::step_counterexample(1.0);
        assert!(w.eval_1d(x, y, hi) < w.eval_1d(x, y, lo));
    }

    #[test]
    fn table_parsing() {
        let t = parse_table_1d("# x V\n0 0\n1 0.5\n2 2.0\n").unwrap();
        assert!((t.eval(1.5) - 1.25).abs() < 1e-15);
        assert_eq!(t.eval(5.0), 2.0);
        assert!(parse_table_1d("0 0\n0 1\n").is_err());
        assert!(matches!(parse_table_1d("0 0 1\n"), Err(Error::Parse { line: 1, .. })));

        let w = parse_table_2d("0 0 -1\n0 1 -0.5\n1 0 -0.5\n1 1 -0.25\n").unwrap();
        assert!((w.eval(0.5, 0.5) - (-0.5625)).abs() < 1e-15);
        assert_eq!(w.eval(0.5, 2.0), 0.0);
        assert!((w.envelope(0.0) - 1.0).abs() < 1e-15);
        assert!(w.is_monotone());
        assert!(parse_table_2d("0 0 -1\n0 1 -0.5\n1 0 -0.5\n").is_err());
    }

    #[test]
    fn table_pair_c_infinity() {
        // |W| = 1 - t on [0, 1]: C_inf = 2 * 1/2
        let tab = parse_table_2d("0 0 -1\n0 1 0\n5 0 -1\n5 1 0\n").unwrap();
        let w = PairPotentialW::table(tab, 1.0);
        assert!((c_infinity(&w).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn envelope_dominates_catalog() {
        let ws = [PairPotentialW::nelson(0.7), PairPotentialW::step_counterexample(1.0), PairPotentialW::constant(-0.3)];
        for w in &ws {
            for i in -10..=10 {
                for j in -10..=10 {
                    for k in 0..=30 {
                        let (x, y, t) = (0.37 * i as f64, 0.41 * j as f64, 0.2 * k as f64);
                        assert!(w.eval_1d(x, y, t).abs() <= w.envelope(t) + 1e-15);
                    }
                }
            }
        }
    }
}
