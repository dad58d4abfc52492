//! Numerical counterparts of the tightness argument: exceedance tables against
//! ψ0 tails, window convergence along volume ladders, exponential moments of
//! the doubled-process hitting time, the sup/inf ratio of conditional
//! partition functions, and the almost-sure growth envelope of paths.
//!
//! "Bounded in T" is always operationalized as "no significant upward trend
//! over the tested ladder"; a finite experiment cannot certify a supremum.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{doubled_energy, energy, DoubledPath, EnergyRegion};
use crate::error::{Error, Result};
use crate::model::{PairPotentialW, PotentialV};
use crate::reference::{Path, ReferenceChain, TimeGrid};
use crate::rng::stream_rng;
use crate::sampler::{window_slots, Boundary, ChainConfig, GibbsChain, OracleBoundary, OracleInstance};
use crate::spectral::{GroundState, SpaceGrid};
use crate::stats::{batch_mean_se, histogram, ks_distance, ols, total_variation, weighted_trend};

/// `∫_{|y| > R} ψ0(y) dy` for the piecewise-linear interpolant of ψ0.
pub fn psi_tail(gs: &GroundState, r: f64) -> f64 {
    let xs = gs.grid.xs();
    let psi = &gs.psi;
    // ∫ of the interpolant over {x > a}
    let above = |a: f64| -> f64 {
        let mut total = 0.0;
        for k in 0..xs.len() - 1 {
            let (x0, x1) = (xs[k], xs[k + 1]);
            if x1 <= a {
                continue;
            }
            let lo = x0.max(a);
            let f = |x: f64| psi[k] + (psi[k + 1] - psi[k]) * (x - x0) / (x1 - x0);
            total += 0.5 * (x1 - lo) * (f(lo) + psi[k + 1]);
        }
        total
    };
    let below = |a: f64| -> f64 {
        let mut total = 0.0;
        for k in 0..xs.len() - 1 {
            let (x0, x1) = (xs[k], xs[k + 1]);
            if x0 >= a {
                continue;
            }
            let hi = x1.min(a);
            let f = |x: f64| psi[k] + (psi[k + 1] - psi[k]) * (x - x0) / (x1 - x0);
            total += 0.5 * (hi - x0) * (psi[k] + f(hi));
        }
        total
    };
    let r = r.max(0.0);
    if r == 0.0 {
        return above(gs.grid.lower);
    }
    above(r) + below(-r)
}

/// `Σ_{|x_i| > R} ψ_i² h`, the exact exceedance of the grid chain's stationary law.
pub fn discrete_tail(chain: &ReferenceChain, r: f64) -> f64 {
    let h = chain.grid.spacing();
    (0..chain.points()).filter(|&i| chain.x(i).abs() > r).map(|i| chain.psi[i] * chain.psi[i] * h).sum()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TailFit {
    pub beta: f64,
    pub log_a: f64,
    pub s: f64,
    pub r_squared: f64,
}

/// Fit `ln ψ0(y) ≈ ln A - β |y|^{s+1}` over grid points with `|y| ≥ min_abs`
/// and `ψ0 ≥ floor`.
pub fn fit_psi_tail(gs: &GroundState, s: f64, min_abs: f64, floor: f64) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = gs
        .grid
        .xs()
        .into_iter()
        .zip(&gs.psi)
        .filter(|(x, &p)| x.abs() >= min_abs && p >= floor)
        .map(|(x, &p)| (x.abs().powf(s + 1.0), p.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Empty("tail fit points"));
    }
    let (slope, intercept) = ols(&pts);
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    Ok(TailFit { beta: -slope, log_a: intercept, s, r_squared: 1.0 - ss_res / ss_tot })
}

/// Growth envelope `f(n) = (γ ln n)^{1/(s+1)}`.
pub fn growth_envelope(n: f64, gamma: f64, s: f64) -> f64 {
    (gamma * n.ln()).max(0.0).powf(1.0 / (s + 1.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathGrowthReport {
    pub fit: TailFit,
    pub fit_ok: bool,
    pub gamma: f64,
    pub times: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub observed: Vec<f64>,
    pub exact: Vec<f64>,
    pub ci_halfwidth: Vec<f64>,
    pub within_ci: bool,
    /// Partial sums of `∫_{|y|>f(n)} ψ0` at `n = 10, 100, ...`.
    pub partial_sums: Vec<(usize, f64)>,
    /// Log-log slope of the summands over the upper decades.
    pub term_slope: f64,
    pub summable: bool,
}

/// Minimum R² for the ψ0 tail fit to be trusted.
pub const TAIL_FIT_R2: f64 = 0.999;

/// Exceedances of `|x_n| > f(n)` at positive integer times against the exact
/// stationary tail, and summability of `Σ_n ∫_{|y|>f(n)} ψ0`.
pub fn path_growth_check(paths: &[Path], chain: &ReferenceChain, gs: &GroundState, s: f64, gamma: f64, n_sum: usize, z: f64) -> Result<PathGrowthReport> {
    if paths.is_empty() {
        return Err(Error::Empty("path ensemble"));
    }
    let fit = fit_psi_tail(gs, s, 1.0, 1e-10)?;
    let fit_ok = fit.r_squared >= TAIL_FIT_R2;
    let t_half = paths[0].grid.t_half;
    let times: Vec<usize> = (2..=t_half.floor() as usize).collect();
    let m = paths.len() as f64;
    let mut thresholds = Vec::new();
    let mut observed = Vec::new();
    let mut exact = Vec::new();
    let mut ci = Vec::new();
    let mut within = true;
    for &n in &times {
        let f = growth_envelope(n as f64, gamma, s);
        let mut hits = 0usize;
        for p in paths {
            if p.at(n as f64)?.abs() > f {
                hits += 1;
            }
        }
        let obs = hits as f64 / m;
        let p = discrete_tail(chain, f);
        let half = z * (p * (1.0 - p) / m).sqrt() + 1.0 / m;
        within &= (obs - p).abs() <= half;
        thresholds.push(f);
        observed.push(obs);
        exact.push(p);
        ci.push(half);
    }
    let mut partial_sums = Vec::new();
    let mut total = 0.0;
    let mut terms = Vec::new();
    let mut next = 10;
    for n in 2..=n_sum {
        let term = psi_tail(gs, growth_envelope(n as f64, gamma, s));
        total += term;
        if n >= n_sum / 100 && term > 0.0 {
            terms.push(((n as f64).ln(), term.ln()));
        }
        if n == next {
            partial_sums.push((n, total));
            next *= 10;
        }
    }
    let term_slope = ols(&terms).0;
    Ok(PathGrowthReport {
        fit,
        fit_ok,
        gamma,
        times,
        thresholds,
        observed,
        exact,
        ci_halfwidth: ci,
        within_ci: within,
        partial_sums,
        term_slope,
        summable: term_slope < -1.0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HittingReport {
    pub estimate: f64,
    pub std_error: f64,
    pub tail_bound: f64,
    pub rhs: f64,
    pub r: f64,
    pub gamma: f64,
    pub c: f64,
    pub horizon: f64,
    pub samples: usize,
    pub truncated: usize,
}

/// Smallest grid-aligned `r` with `V(x) > C + γ` at every grid point with `|x| > r/√2`.
pub fn hitting_radius(v: &PotentialV, grid: &SpaceGrid, c: f64, gamma: f64) -> Result<f64> {
    let mut xmax: f64 = 0.0;
    for x in grid.xs() {
        if v.eval_1d(x)? <= c + gamma {
            xmax = xmax.max(x.abs());
        }
    }
    let h = grid.spacing();
    Ok((std::f64::consts::SQRT_2 * xmax / h - 1e-9).ceil() * h)
}

/// Default `γ`: half the gap `α - C`, or 1 when `α = ∞`.
pub fn default_gamma(v: &PotentialV, c: f64) -> Result<f64> {
    let alpha = v.alpha();
    if alpha.is_infinite() && alpha > 0.0 {
        return Ok(1.0);
    }
    if !(alpha > c) {
        return Err(Error::Domain(format!("need C < α, got C = {c}, α = {alpha}")));
    }
    Ok(0.5 * (alpha - c))
}

/// `E[e^{C τ_r}]` for the doubled reference process started at `(z', z'')`,
/// by truncated Monte Carlo with the exponential tail bound added as an error term.
pub fn hitting_time_moment(
    chain: &ReferenceChain,
    v: &PotentialV,
    start: (f64, f64),
    c: f64,
    gamma: Option<f64>,
    horizon: f64,
    samples: usize,
    seed: u64,
) -> Result<HittingReport> {
    let gamma = match gamma {
        Some(g) => g,
        None => default_gamma(v, c)?,
    };
    let r = hitting_radius(v, &chain.grid, c, gamma)?;
    let a = chain.grid.index_of(start.0)?;
    let b = chain.grid.index_of(start.1)?;
    let psi_max = chain.psi.iter().fold(0.0f64, |m, &p| m.max(p));
    let amp = psi_max * (1.0 / chain.psi[a] + 1.0 / chain.psi[b]);
    let rhs = 1.0 + c * amp / gamma;
    let steps = (horizon / chain.dt).round() as usize;
    let inside = |i: usize, j: usize| chain.x(i).powi(2) + chain.x(j).powi(2) <= r * r + 1e-12;
    let mut values = Vec::with_capacity(samples);
    let mut truncated = 0;
    for k in 0..samples {
        let mut rng = stream_rng(seed, k as u64);
        let (mut i, mut j) = (a, b);
        let mut hit = None;
        for step in 0..=steps {
            if inside(i, j) {
                hit = Some(step);
                break;
            }
            if step < steps {
                i = chain.sample_step(i, &mut rng);
                j = chain.sample_step(j, &mut rng);
            }
        }
        let tau = match hit {
            Some(s) => s as f64 * chain.dt,
            None => {
                truncated += 1;
                steps as f64 * chain.dt
            }
        };
        values.push((c * tau).exp());
    }
    let n = values.len() as f64;
    let estimate = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let std_error = (var / n).sqrt();
    let horizon = steps as f64 * chain.dt;
    let tail_bound = if c == 0.0 { 0.0 } else { amp * c * (-gamma * horizon).exp() / gamma };
    if tail_bound > 0.1 * estimate {
        let suggested = (amp * c / (gamma * 0.05 * estimate)).ln() / gamma;
        return Err(Error::HorizonTooShort { tail: tail_bound, estimate, suggested });
    }
    Ok(HittingReport { estimate, std_error, tail_bound, rhs, r, gamma, c, horizon, samples, truncated })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub ns: Vec<usize>,
    pub t_values: Vec<f64>,
    pub r: f64,
    /// `sup/inf` over `|y| ≤ r` of `E_{μ0}(e^{H_T} | x_0 = y)`, per T.
    pub m_hat: Vec<f64>,
    /// `sup_y ψ0(y) E(·|y) / inf_{|z| ≤ r} E(·|z)`, per T.
    pub k_hat: Vec<f64>,
    /// Conditional expectations per T over all grid points.
    pub conditional: Vec<Vec<f64>>,
    /// Largest relative disagreement between the two-sided and folded routes.
    pub route_gap: f64,
    /// `max M̂ < 2 M̂(first T)`.
    pub bounded: bool,
}

/// Conditional expectation of `e^{H_T}` given `x_0 = y`, via the folded
/// pair of independent chains started at `(y, y)`.
fn folded_conditional(chain: &ReferenceChain, w: &PairPotentialW, n: usize) -> Result<Vec<f64>> {
    let m = chain.points();
    let tp: Vec<Vec<f64>> = (0..m).map(|i| chain.transition_probs(i)).collect();
    let t_half = n as f64 * chain.dt;
    let half = m.pow(n as u32);
    let mut out = Vec::with_capacity(m);
    let mut plus = vec![0usize; n + 1];
    let mut minus = vec![0usize; n + 1];
    for y in 0..m {
        let mut acc = 0.0;
        for c1 in 0..half {
            plus[0] = y;
            let mut code = c1;
            for k in (1..=n).rev() {
                plus[k] = code % m;
                code /= m;
            }
            let p1: f64 = plus.windows(2).map(|p| tp[p[0]][p[1]]).product();
            if p1 == 0.0 {
                continue;
            }
            for c2 in 0..half {
                minus[0] = y;
                let mut code = c2;
                for k in (1..=n).rev() {
                    minus[k] = code % m;
                    code /= m;
                }
                let p2: f64 = minus.windows(2).map(|p| tp[p[0]][p[1]]).product();
                let dp = DoubledPath {
                    dt: chain.dt,
                    plus: plus.iter().map(|&i| chain.x(i)).collect(),
                    minus: minus.iter().map(|&i| chain.x(i)).collect(),
                };
                acc += p1 * p2 * doubled_energy(w, &dp, t_half)?.exp();
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Sup/inf ratio of conditional partition functions over a ladder of volumes,
/// computed exactly twice: from the two-sided enumeration and from the
/// folded (doubled) enumeration.
pub fn ratio_bound_check(v: &PotentialV, space: SpaceGrid, dt: f64, w: &PairPotentialW, ns: &[usize], r: f64) -> Result<RatioReport> {
    let mut m_hat = Vec::new();
    let mut k_hat = Vec::new();
    let mut conditional = Vec::new();
    let mut t_values = Vec::new();
    let mut route_gap: f64 = 0.0;
    for &n in ns {
        let time = TimeGrid::from_steps(n, dt)?;
        let inst = OracleInstance::new(v, space, time, w.clone(), OracleBoundary::Smeared)?;
        let exact = inst.brute_force()?;
        let pi = inst.chain.stationary_probs();
        let marg = exact.marginal(n);
        let two_sided: Vec<f64> = marg.iter().zip(&pi).map(|(q, p)| exact.z * q / p).collect();
        let folded = folded_conditional(&inst.chain, w, n)?;
        for (a, b) in two_sided.iter().zip(&folded) {
            route_gap = route_gap.max((a - b).abs() / b.abs());
        }
        let ball: Vec<usize> = (0..inst.states()).filter(|&i| inst.chain.x(i).abs() <= r + 1e-12).collect();
        if ball.is_empty() {
            return Err(Error::Domain(format!("no grid point within r = {r}")));
        }
        let sup = ball.iter().map(|&i| folded[i]).fold(f64::NEG_INFINITY, f64::max);
        let inf = ball.iter().map(|&i| folded[i]).fold(f64::INFINITY, f64::min);
        let weighted = (0..inst.states()).map(|i| inst.chain.psi[i] * folded[i]).fold(f64::NEG_INFINITY, f64::max);
        m_hat.push(sup / inf);
        k_hat.push(weighted / inf);
        conditional.push(folded);
        t_values.push(time.t_half);
    }
    let first = m_hat.first().copied().unwrap_or(1.0);
    let bounded = m_hat.iter().all(|&v| v < 2.0 * first);
    Ok(RatioReport { ns: ns.to_vec(), t_values, r, m_hat, k_hat, conditional, route_gap, bounded })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TightnessCell {
    pub t: f64,
    pub r: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub tail: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TightnessReport {
    pub cells: Vec<TightnessCell>,
    /// Smallest K̂ with `μ̂ ≤ K̂ · tail` over all unflagged cells.
    pub k_hat: f64,
    /// `(T, K̂_T, se)` per volume.
    pub k_per_t: Vec<(f64, f64, f64)>,
    pub trend_slope: f64,
    pub trend_p: f64,
    /// Every cell satisfies `μ̂ - z·se ≤ K̂ · tail`.
    pub holds_all: bool,
    pub warnings: Vec<String>,
}

/// Cells whose relative CI half-width exceeds this are flagged.
pub const MAX_RELATIVE_CI: f64 = 0.5;
const BATCHES: usize = 20;

/// Runs one smeared chain per `T` and records `|x_0|` after every sweep.
fn origin_series(reference: &Arc<ReferenceChain>, w: &PairPotentialW, t: f64, cfg: &ChainConfig, stream: u64) -> Result<(Vec<f64>, Vec<String>)> {
    let time = TimeGrid::new(t, reference.dt)?;
    let c = ChainConfig { stream, ..*cfg };
    let mut chain = GibbsChain::new(reference.clone(), w.clone(), time, Boundary::Smeared, &c)?;
    let mid = time.n;
    let mut series = Vec::with_capacity(cfg.sweeps);
    chain.run(cfg.burnin, cfg.sweeps, |ch| series.push(ch.positions()[mid]))?;
    Ok((series, chain.warnings.clone()))
}

/// Exceedance table `μ̂_T(|x_0| > R)` against `∫_{|y|>R} ψ0` with a fitted
/// domination constant and a trend test of `K̂_T` over `T`.
pub fn tightness_profile(
    reference: Arc<ReferenceChain>,
    gs: &GroundState,
    w: &PairPotentialW,
    ts: &[f64],
    rs: &[f64],
    cfg: &ChainConfig,
    z: f64,
) -> Result<TightnessReport> {
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        let (series, warn) = origin_series(&reference, w, t, cfg, cfg.stream + k as u64)?;
        warnings.extend(warn.into_iter().map(|s| format!("T = {t}: {s}")));
        for &r in rs {
            let ind: Vec<f64> = series.iter().map(|x| (x.abs() > r) as u8 as f64).collect();
            let (est, se) = batch_mean_se(&ind, BATCHES);
            let tail = psi_tail(gs, r);
            let flagged = tail <= 0.0 || est <= 0.0 || z * se > MAX_RELATIVE_CI * est;
            cells.push(TightnessCell { t, r, estimate: est, std_error: se, tail, flagged });
        }
    }
    let mut k_hat: f64 = 0.0;
    let mut k_per_t = Vec::new();
    for &t in ts {
        let best = cells
            .iter()
            .filter(|c| c.t == t && !c.flagged)
            .map(|c| (c.estimate / c.tail, c.std_error / c.tail))
            .fold(None, |acc: Option<(f64, f64)>, v| match acc {
                Some(a) if a.0 >= v.0 => Some(a),
                _ => Some(v),
            });
        if let Some((kt, se)) = best {
            k_hat = k_hat.max(kt);
            k_per_t.push((t, kt, se));
        }
    }
    let (trend_slope, _, trend_p) = if k_per_t.len() >= 2 {
        let x: Vec<f64> = k_per_t.iter().map(|v| v.0).collect();
        let y: Vec<f64> = k_per_t.iter().map(|v| v.1).collect();
        let se: Vec<f64> = k_per_t.iter().map(|v| v.2).collect();
        weighted_trend(&x, &y, &se)
    } else {
        (0.0, f64::INFINITY, 1.0)
    };
    let holds_all = cells.iter().all(|c| c.estimate - z * c.std_error <= k_hat * c.tail + 1e-15);
    Ok(TightnessReport { cells, k_hat, k_per_t, trend_slope, trend_p, holds_all, warnings })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactLadder {
    pub ns: Vec<usize>,
    /// Window law per N.
    pub laws: Vec<Vec<f64>>,
    /// TV between consecutive entries.
    pub distances: Vec<f64>,
    pub strictly_decreasing: bool,
}

/// Exact joint law of the slots `-k..=k` around 0 for each N, and TV
/// distances between consecutive volumes.
pub fn window_convergence_exact(v: &PotentialV, space: SpaceGrid, dt: f64, w: &PairPotentialW, ns: &[usize], k: usize) -> Result<ExactLadder> {
    let mut laws = Vec::new();
    for &n in ns {
        if n < k {
            return Err(Error::Domain(format!("window of {k} steps does not fit N = {n}")));
        }
        let inst = OracleInstance::new(v, space, TimeGrid::from_steps(n, dt)?, w.clone(), OracleBoundary::Smeared)?;
        let exact = inst.brute_force()?;
        let slots: Vec<usize> = (n - k..=n + k).collect();
        laws.push(exact.joint(&slots));
    }
    let distances: Vec<f64> = laws.windows(2).map(|p| total_variation(&p[0], &p[1])).collect();
    let strictly_decreasing = distances.windows(2).all(|d| d[1] < d[0]);
    Ok(ExactLadder { ns: ns.to_vec(), laws, distances, strictly_decreasing })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McLadder {
    pub ts: Vec<f64>,
    pub s: f64,
    /// KS distance of the `x_0` marginals for consecutive T.
    pub ks: Vec<f64>,
    /// TV distance of binned `(x_{-S}, x_S)` joint histograms for consecutive T.
    pub tv_joint: Vec<f64>,
    /// Same-T distances between independent chains (noise scale).
    pub ks_floor: Vec<f64>,
    pub tv_floor: Vec<f64>,
    pub nonincreasing: bool,
}

struct WindowSample {
    origin: Vec<usize>,
    pair: Vec<usize>,
}

fn window_sample(reference: &Arc<ReferenceChain>, w: &PairPotentialW, time: TimeGrid, s: f64, boundary: Boundary, cfg: &ChainConfig, bins: usize, span: f64) -> Result<(WindowSample, Vec<String>)> {
    let (lo, hi) = window_slots(&time, s)?;
    let mid = time.n;
    let mut chain = GibbsChain::new(reference.clone(), w.clone(), time, boundary, cfg)?;
    let bin = |x: f64| (((x + span) / (2.0 * span) * bins as f64).floor().max(0.0) as usize).min(bins - 1);
    let mut origin = Vec::with_capacity(cfg.sweeps);
    let mut pair = Vec::with_capacity(cfg.sweeps);
    chain.run(cfg.burnin, cfg.sweeps, |ch| {
        origin.push(ch.indices()[mid]);
        pair.push(bin(ch.positions()[lo]) * bins + bin(ch.positions()[hi]));
    })?;
    Ok((WindowSample { origin, pair }, chain.warnings.clone()))
}

fn sample_distances(a: &WindowSample, b: &WindowSample, points: usize, bins: usize) -> (f64, f64) {
    let ka = histogram(a.origin.iter().copied(), points);
    let kb = histogram(b.origin.iter().copied(), points);
    let ja = histogram(a.pair.iter().copied(), bins * bins);
    let jb = histogram(b.pair.iter().copied(), bins * bins);
    (ks_distance(&ka, &kb), total_variation(&ja, &jb))
}

/// Window marginals of smeared chains along `ts`; two independent chains per
/// T give the noise scale, and the ladder is nonincreasing when each distance
/// exceeds its predecessor by less than twice the noise scale.
pub fn window_convergence_mc(reference: Arc<ReferenceChain>, w: &PairPotentialW, ts: &[f64], s: f64, cfg: &ChainConfig, bins: usize) -> Result<McLadder> {
    let span = 0.5 * (reference.grid.upper - reference.grid.lower);
    let mut samples = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        let time = TimeGrid::new(t, reference.dt)?;
        let mut pair = Vec::new();
        for rep in 0..2u64 {
            let c = ChainConfig { stream: cfg.stream + 2 * k as u64 + rep, ..*cfg };
            pair.push(window_sample(&reference, w, time, s, Boundary::Smeared, &c, bins, span)?.0);
        }
        samples.push(pair);
    }
    let pts = reference.points();
    let mut ks = Vec::new();
    let mut tv_joint = Vec::new();
    for p in samples.windows(2) {
        let (k1, t1) = sample_distances(&p[0][0], &p[1][0], pts, bins);
        let (k2, t2) = sample_distances(&p[0][1], &p[1][1], pts, bins);
        ks.push(0.5 * (k1 + k2));
        tv_joint.push(0.5 * (t1 + t2));
    }
    let floors: Vec<(f64, f64)> = samples.iter().map(|p| sample_distances(&p[0], &p[1], pts, bins)).collect();
    let ks_floor: Vec<f64> = floors.iter().map(|f| f.0).collect();
    let tv_floor: Vec<f64> = floors.iter().map(|f| f.1).collect();
    let ks_noise = ks_floor.iter().fold(0.0f64, |m, &v| m.max(v));
    let tv_noise = tv_floor.iter().fold(0.0f64, |m, &v| m.max(v));
    let nonincreasing = ks.windows(2).all(|d| d[1] <= d[0] + 2.0 * ks_noise) && tv_joint.windows(2).all(|d| d[1] <= d[0] + 2.0 * tv_noise);
    Ok(McLadder { ts: ts.to_vec(), s, ks, tv_joint, ks_floor, tv_floor, nonincreasing })
}

/// KS distance between smeared and pinned `x_0` marginals per T (reported only).
pub fn boundary_sensitivity(reference: Arc<ReferenceChain>, w: &PairPotentialW, ts: &[f64], pin: (f64, f64), cfg: &ChainConfig) -> Result<Vec<f64>> {
    let span = 0.5 * (reference.grid.upper - reference.grid.lower);
    let pts = reference.points();
    let mut out = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        let time = TimeGrid::new(t, reference.dt)?;
        let s = 0.5 * t;
        let c = ChainConfig { stream: cfg.stream + 2 * k as u64, ..*cfg };
        let (a, _) = window_sample(&reference, w, time, s, Boundary::Smeared, &c, 1, span)?;
        let c = ChainConfig { stream: cfg.stream + 2 * k as u64 + 1, ..*cfg };
        let (b, _) = window_sample(&reference, w, time, s, Boundary::Pinned { y: pin.0, z: pin.1 }, &c, 1, span)?;
        out.push(sample_distances(&a, &b, pts, 1).0);
    }
    Ok(out)
}

/// Energies of the strips `R × [-S,S]` (truncated at the path span) for an
/// ensemble; used to confirm `|H| ≤ 2 C∞ S` path by path.
pub fn strip_energies(w: &PairPotentialW, paths: &[Path], s: f64) -> Result<Vec<f64>> {
    paths
        .iter()
        .map(|p| {
            let t = p.grid.t_half;
            let inner = crate::energy::rect_integral(w, p, (-t, t), (-s, s))?;
            Ok(-inner)
        })
        .collect()
}

/// Square energies of an ensemble (for summaries).
pub fn square_energies(w: &PairPotentialW, paths: &[Path]) -> Result<Vec<f64>> {
    paths.iter().map(|p| energy(w, p, &EnergyRegion::Square { t: p.grid.t_half })).collect()
}
