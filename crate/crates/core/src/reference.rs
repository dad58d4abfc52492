//! The reference process `μ0` (the P(φ)₁ process of `V`) on the space grid:
//! stationary law ψ0², transition densities from the heat kernel, exact
//! grid-chain path and bridge sampling, an Euler–Maruyama cross-check, and a
//! Feynman–Kac consistency check.
//!
//! Discrete path weights factor as `ψ(x_first) ψ(x_last) Π M(x_k, x_{k+1})`
//! (up to the constant `h`), where `M` is the `h`-weighted kernel of the shifted
//! operator. Every sampler below uses that form, so ψ never appears in a
//! denominator.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PotentialV;
use crate::quadrature::trapezoid_weights;
use crate::rng::{stream_rng, StreamRng};
use crate::spectral::{log_derivative, GroundState, HeatKernel, RadialGroundState, SpaceGrid, SymTridiagonal};

/// Discretization of `[-T, T]` with `N = T / dt` steps on each side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_half: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t_half: f64, dt: f64) -> Result<Self> {
        if !(t_half > 0.0) || !(dt > 0.0) {
            return Err(Error::Grid(format!("need T > 0 and dt > 0, got T={t_half}, dt={dt}")));
        }
        let ratio = t_half / dt;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-12 * ratio.max(1.0) || n < 1.0 {
            return Err(Error::Grid(format!("T = {t_half} is not a positive multiple of dt = {dt}")));
        }
        Ok(Self { t_half, dt, n: n as usize })
    }

    pub fn from_steps(n: usize, dt: f64) -> Result<Self> {
        Self::new(n as f64 * dt, dt)
    }

    pub fn len(&self) -> usize {
        2 * self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Time of storage slot `k` (slot `n` is `t = 0`).
    pub fn time(&self, k: usize) -> f64 {
        (k as f64 - self.n as f64) * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    /// Storage slot of time `t`, which must lie on the grid.
    pub fn slot(&self, t: f64) -> Result<usize> {
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > 1e-9 * self.dt || k.abs() > self.n as f64 {
            return Err(Error::Grid(format!("time {t} is not on the grid of [-{}, {}]", self.t_half, self.t_half)));
        }
        Ok((k as i64 + self.n as i64) as usize)
    }

    /// Trapezoid weights over the whole grid.
    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.len(), self.dt)
    }
}

/// Positions on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: TimeGrid,
    pub positions: Vec<f64>,
}

impl Path {
    pub fn new(grid: TimeGrid, positions: Vec<f64>) -> Result<Self> {
        if positions.len() != grid.len() {
            return Err(Error::Grid(format!("path has {} values, time grid needs {}", positions.len(), grid.len())));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("path contains non-finite positions".into()));
        }
        Ok(Self { grid, positions })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let positions = grid.times().into_iter().map(f).collect();
        Self { grid, positions }
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        Ok(self.positions[self.grid.slot(t)?])
    }

    /// Value at signed step index `i ∈ [-N, N]`.
    pub fn step(&self, i: i64) -> f64 {
        self.positions[(i + self.grid.n as i64) as usize]
    }

    /// Restriction to `[-t_half, t_half]`.
    pub fn restrict(&self, t_half: f64) -> Result<Path> {
        let g = TimeGrid::new(t_half, self.grid.dt)?;
        if g.n > self.grid.n {
            return Err(Error::Grid(format!("cannot restrict a path on [-{0}, {0}] to a wider window", self.grid.t_half)));
        }
        let off = self.grid.n - g.n;
        Ok(Path { grid: g, positions: self.positions[off..off + g.len()].to_vec() })
    }
}

/// `ψ0²` normalized to trapezoid mass 1.
pub fn stationary_density(gs: &GroundState) -> Vec<f64> {
    let w = trapezoid_weights(gs.psi.len(), gs.spacing());
    let sq: Vec<f64> = gs.psi.iter().map(|p| p * p).collect();
    let mass: f64 = sq.iter().zip(&w).map(|(a, b)| a * b).sum();
    sq.into_iter().map(|v| v / mass).collect()
}

/// Transition density `z -> K(y, z) ψ(z) / ψ(y)` from grid point `y`.
pub fn transition_density(gs: &GroundState, k: &HeatKernel, y: usize) -> Result<Vec<f64>> {
    if k.grid != gs.grid {
        return Err(Error::Grid("kernel and ground state live on different grids".into()));
    }
    if y >= gs.psi.len() {
        return Err(Error::Grid(format!("index {y} outside the grid")));
    }
    let py = gs.psi[y];
    let dens: Vec<f64> = (0..gs.psi.len()).map(|z| k.density(y, z) * gs.psi[z] / py).collect();
    let mass = dens.iter().sum::<f64>() * gs.spacing();
    if (mass - 1.0).abs() > 1e-4 {
        return Err(Error::TransitionMass { index: y, mass });
    }
    Ok(dens)
}

/// Relative cutoff for kernel entries treated as zero when sampling.
const BAND_CUTOFF: f64 = 1e-18;

/// The discrete reference chain with time step `dt`: exact sampling of
/// paths, bridges, and single-site / block conditionals.
#[derive(Clone, Debug)]
pub struct ReferenceChain {
    pub grid: SpaceGrid,
    pub dt: f64,
    pub psi: Vec<f64>,
    /// `h`-weighted heat kernel `M`.
    pub kernel: DMatrix<f64>,
    /// Row-major copy of `M` for cache-friendly row access.
    rows: Vec<f64>,
    /// Support of each kernel row, `[lo, hi)`.
    bands: Vec<(usize, usize)>,
    stationary_cdf: Vec<f64>,
    transition_cdf: Vec<f64>,
}

impl ReferenceChain {
    pub fn new(gs: &GroundState, k: &HeatKernel) -> Result<Self> {
        if k.grid != gs.grid {
            return Err(Error::Grid("kernel and ground state live on different grids".into()));
        }
        let n = gs.psi.len();
        let mut rows = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                rows[i * n + j] = k.matrix[(i, j)];
            }
        }
        let bands = (0..n)
            .map(|i| {
                let row = &rows[i * n..(i + 1) * n];
                let cut = row.iter().fold(0.0f64, |m, &v| m.max(v)) * BAND_CUTOFF;
                let lo = row.iter().position(|&v| v > cut).unwrap_or(i);
                let hi = n - row.iter().rev().position(|&v| v > cut).unwrap_or(n - 1 - i);
                (lo, hi)
            })
            .collect();
        let mut stationary_cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for p in &gs.psi {
            acc += p * p;
            stationary_cdf.push(acc);
        }
        let mut transition_cdf = vec![0.0; n * n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += rows[i * n + j] * gs.psi[j];
                transition_cdf[i * n + j] = acc;
            }
        }
        Ok(Self {
            grid: gs.grid,
            dt: k.dt,
            psi: gs.psi.clone(),
            kernel: k.matrix.clone(),
            rows,
            bands,
            stationary_cdf,
            transition_cdf,
        })
    }

    /// Build the chain for `v` on `grid` with step `dt`.
    pub fn for_potential(v: &PotentialV, grid: &SpaceGrid, dt: f64) -> Result<(GroundState, Self)> {
        let gs = crate::spectral::solve_ground_state(v, grid)?;
        let k = crate::spectral::heat_kernel(&gs, dt)?;
        let chain = Self::new(&gs, &k)?;
        Ok((gs, chain))
    }

    pub fn points(&self) -> usize {
        self.psi.len()
    }

    #[inline]
    pub fn m(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.psi.len() + j]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.grid.x(i)
    }

    /// Stationary probabilities `ψ_i² h` (exact fixed point of the chain).
    pub fn stationary_probs(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.psi.iter().map(|p| p * p * h).collect()
    }

    /// Transition probabilities `P(i, j) = M(i, j) ψ_j / ψ_i`.
    pub fn transition_probs(&self, i: usize) -> Vec<f64> {
        let n = self.points();
        (0..n).map(|j| self.m(i, j) * self.psi[j] / self.psi[i]).collect()
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        if (dt - self.dt).abs() > 1e-12 * self.dt.max(1.0) {
            return Err(Error::Grid(format!("time step {dt} differs from kernel step {}", self.dt)));
        }
        Ok(())
    }

    fn sample_cdf(cdf: &[f64], rng: &mut StreamRng) -> usize {
        let total = *cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }

    pub fn sample_stationary(&self, rng: &mut StreamRng) -> usize {
        Self::sample_cdf(&self.stationary_cdf, rng)
    }

    pub fn sample_step(&self, from: usize, rng: &mut StreamRng) -> usize {
        let n = self.points();
        Self::sample_cdf(&self.transition_cdf[from * n..(from + 1) * n], rng)
    }

    /// Sample grid indices of a stationary path on `tg`.
    pub fn sample_indices(&self, tg: &TimeGrid, rng: &mut StreamRng) -> Result<Vec<usize>> {
        self.check_dt(tg.dt)?;
        let mut idx = Vec::with_capacity(tg.len());
        let mut cur = self.sample_stationary(rng);
        idx.push(cur);
        for _ in 1..tg.len() {
            cur = self.sample_step(cur, rng);
            idx.push(cur);
        }
        Ok(idx)
    }

    pub fn to_path(&self, tg: TimeGrid, idx: &[usize]) -> Path {
        Path { grid: tg, positions: idx.iter().map(|&i| self.x(i)).collect() }
    }

    /// One stationary path from stream `(seed, stream)`.
    pub fn sample_path(&self, tg: TimeGrid, seed: u64, stream: u64) -> Result<Path> {
        let mut rng = stream_rng(seed, stream);
        let idx = self.sample_indices(&tg, &mut rng)?;
        Ok(self.to_path(tg, &idx))
    }

    /// `count` independent stationary paths, stream `k` for path `k`.
    pub fn sample_ensemble(&self, tg: TimeGrid, seed: u64, count: usize) -> Result<Vec<Path>> {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(|k| self.sample_path(tg, seed, k as u64)).collect()
    }

    fn left_factor(&self, left: Option<usize>, z: usize) -> f64 {
        match left {
            Some(a) => self.m(a, z),
            None => self.psi[z],
        }
    }

    /// Support of the block endpoint factors.
    fn support(&self, anchor: Option<usize>) -> (usize, usize) {
        match anchor {
            Some(a) => self.bands[a],
            None => (0, self.points()),
        }
    }

    /// Unnormalized single-site conditional weights given the neighbours
    /// (`None` marks a free path end). Returns the first index of `out`.
    pub fn site_weights(&self, left: Option<usize>, right: Option<usize>, out: &mut Vec<f64>) -> usize {
        let (l0, l1) = self.support(left);
        let (r0, r1) = self.support(right);
        let lo = l0.max(r0);
        let hi = l1.min(r1).max(lo);
        out.clear();
        for z in lo..hi {
            out.push(self.left_factor(left, z) * self.left_factor(right, z));
        }
        lo
    }

    /// Sample one site from its reference conditional.
    pub fn sample_site(&self, left: Option<usize>, right: Option<usize>, scratch: &mut Vec<f64>, rng: &mut StreamRng) -> Result<usize> {
        let lo = self.site_weights(left, right, scratch);
        let total: f64 = scratch.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroBridgeMass { from: left.unwrap_or(0), to: right.unwrap_or(0), steps: 2 });
        }
        let mut u = rng.random::<f64>() * total;
        for (k, w) in scratch.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                return Ok(lo + k);
            }
        }
        Ok(lo + scratch.len() - 1)
    }

    /// Backward messages `β_k(z)` for a block of `len` free sites followed by
    /// `right` (anchor or free end). `β[len-1]` is the right factor.
    fn block_messages(&self, right: Option<usize>, len: usize) -> Vec<Vec<f64>> {
        let n = self.points();
        let mut beta = vec![vec![0.0; n]; len];
        for z in 0..n {
            beta[len - 1][z] = self.left_factor(right, z);
        }
        for k in (0..len - 1).rev() {
            let (next, cur) = {
                let (a, b) = beta.split_at_mut(k + 1);
                (&b[0], &mut a[k])
            };
            for z in 0..n {
                let (lo, hi) = self.bands[z];
                let row = &self.rows[z * n..(z + 1) * n];
                cur[z] = (lo..hi).map(|w| row[w] * next[w]).sum();
            }
        }
        beta
    }

    /// Sample `len` consecutive sites from the reference law conditioned on
    /// the anchors on either side (forward sampling on backward messages).
    pub fn sample_block(&self, left: Option<usize>, right: Option<usize>, len: usize, rng: &mut StreamRng) -> Result<Vec<usize>> {
        if len == 0 {
            return Ok(Vec::new());
        }
        let n = self.points();
        let beta = self.block_messages(right, len);
        let mut out = Vec::with_capacity(len);
        let mut prev = left;
        for (k, b) in beta.iter().enumerate() {
            let weights: Vec<f64> = (0..n).map(|z| self.left_factor(prev, z) * b[z]).collect();
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::ZeroBridgeMass { from: left.unwrap_or(0), to: right.unwrap_or(0), steps: len + 1 - k });
            }
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (z, w) in weights.iter().enumerate() {
                u -= w;
                if u < 0.0 {
                    pick = z;
                    break;
                }
            }
            while weights[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            out.push(pick);
            prev = Some(pick);
        }
        Ok(out)
    }

    /// Exact law of the single free point between anchors `a` and `b`.
    pub fn midpoint_law(&self, a: usize, b: usize) -> Vec<f64> {
        let n = self.points();
        let w: Vec<f64> = (0..n).map(|z| self.m(a, z) * self.m(z, b)).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    }

    /// Bridge from grid index `a` at `-T` to `b` at `T`.
    pub fn sample_bridge(&self, tg: TimeGrid, a: usize, b: usize, seed: u64, stream: u64) -> Result<Path> {
        self.check_dt(tg.dt)?;
        let n = self.points();
        if a >= n || b >= n {
            return Err(Error::Grid("bridge endpoints outside the grid".into()));
        }
        let mut rng = stream_rng(seed, stream);
        let inner = self.sample_block(Some(a), Some(b), tg.len() - 2, &mut rng)?;
        let mut idx = Vec::with_capacity(tg.len());
        idx.push(a);
        idx.extend(inner);
        idx.push(b);
        Ok(self.to_path(tg, &idx))
    }

    /// `M^k` applied to a vector.
    pub fn propagate(&self, v: &[f64], steps: usize) -> Vec<f64> {
        let n = self.points();
        let mut cur = v.to_vec();
        for _ in 0..steps {
            cur = (0..n)
                .map(|i| {
                    let (lo, hi) = self.bands[i];
                    (lo..hi).map(|j| self.rows[i * n + j] * cur[j]).sum()
                })
                .collect();
        }
        cur
    }
}

/// Euler–Maruyama trajectory with its reflection count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdeTrajectory {
    pub dt: f64,
    pub positions: Vec<f64>,
    pub reflections: usize,
}

/// Drift ψ0'/ψ0 on the grid, frozen where ψ0 falls below `floor`.
pub fn drift_table(psi: &[f64], h: f64, floor: f64) -> Vec<f64> {
    let mut d = log_derivative(psi, h);
    let n = psi.len();
    if let Some(first) = psi.iter().position(|&p| p >= floor) {
        let last = n - 1 - psi.iter().rev().position(|&p| p >= floor).unwrap();
        for i in 0..first {
            d[i] = d[first];
        }
        for i in last + 1..n {
            d[i] = d[last];
        }
    }
    d
}

/// Drift clamp threshold for ψ0.
pub const DRIFT_FLOOR: f64 = 1e-12;

fn interp(table: &[f64], grid: &SpaceGrid, x: f64) -> f64 {
    let h = grid.spacing();
    let s = ((x - grid.lower) / h).clamp(0.0, (table.len() - 1) as f64);
    let k = (s.floor() as usize).min(table.len() - 2);
    let f = s - k as f64;
    table[k] * (1.0 - f) + table[k + 1] * f
}

/// Euler–Maruyama for `dX = (ψ0'/ψ0)(X) dt + noise dB` on the grid box,
/// reflecting at the walls. `noise = 0` gives the deterministic flow.
pub fn sde_simulate(
    gs: &GroundState,
    duration: f64,
    dt: f64,
    x_init: f64,
    noise: f64,
    seed: u64,
    stream: u64,
) -> Result<SdeTrajectory> {
    if !(dt > 0.0) || !(duration > 0.0) {
        return Err(Error::Domain("sde needs positive duration and step".into()));
    }
    let drift = drift_table(&gs.psi, gs.spacing(), DRIFT_FLOOR);
    let (lo, hi) = (gs.grid.lower, gs.grid.upper);
    let steps = (duration / dt).round() as usize;
    let mut rng = stream_rng(seed, stream);
    let sq = dt.sqrt();
    let mut x = x_init;
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(x);
    let mut reflections = 0;
    for _ in 0..steps {
        let z: f64 = if noise != 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        x += interp(&drift, &gs.grid, x) * dt + noise * sq * z;
        while x < lo || x > hi {
            x = if x < lo { 2.0 * lo - x } else { 2.0 * hi - x };
            reflections += 1;
        }
        positions.push(x);
    }
    Ok(SdeTrajectory { dt, positions, reflections })
}

/// Three-dimensional trajectory under the radial drift `(ψ0'(r)/ψ0(r)) x / r`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialSdeTrajectory {
    pub dt: f64,
    pub positions: Vec<[f64; 3]>,
    pub reflections: usize,
}

pub fn sde_simulate_radial(
    rgs: &RadialGroundState,
    duration: f64,
    dt: f64,
    x_init: [f64; 3],
    noise: f64,
    seed: u64,
    stream: u64,
) -> Result<RadialSdeTrajectory> {
    if !(dt > 0.0) || !(duration > 0.0) {
        return Err(Error::Domain("sde needs positive duration and step".into()));
    }
    let drift = drift_table(&rgs.psi, rgs.grid.spacing(), DRIFT_FLOOR);
    let r_max = rgs.grid.upper;
    let steps = (duration / dt).round() as usize;
    let mut rng = stream_rng(seed, stream);
    let sq = dt.sqrt();
    let mut x = x_init;
    let mut positions = Vec::with_capacity(steps + 1);
    positions.push(x);
    let mut reflections = 0;
    for _ in 0..steps {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let g = if r > 0.0 { interp(&drift, &rgs.grid, r) / r } else { 0.0 };
        for c in x.iter_mut() {
            let z: f64 = if noise != 0.0 { rng.sample(StandardNormal) } else { 0.0 };
            *c += g * *c * dt + noise * sq * z;
        }
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r > r_max {
            let s = (2.0 * r_max - r).max(0.0) / r;
            x.iter_mut().for_each(|c| *c *= s);
            reflections += 1;
        }
        positions.push(x);
    }
    Ok(RadialSdeTrajectory { dt, positions, reflections })
}

/// Both sides of the Feynman–Kac identity for `E_{μ0}[f(x_T)]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FkfCheck {
    pub chain_value: f64,
    pub trotter_value: f64,
    pub residual: f64,
}

/// Heat kernel `e^{dt Δ_h / 2}` of the free grid Laplacian (Dirichlet), `h`-weighted.
pub fn free_kernel(grid: &SpaceGrid, dt: f64) -> DMatrix<f64> {
    let n = grid.points;
    let h = grid.spacing();
    let np1 = (n + 1) as f64;
    let norm = (2.0 / np1).sqrt();
    let kept: Vec<usize> = (1..=n)
        .filter(|&k| {
            let lam = (1.0 - (k as f64 * std::f64::consts::PI / np1).cos()) / (h * h);
            (-dt * lam).exp() > 1e-20
        })
        .collect();
    let mut a = DMatrix::zeros(n, kept.len());
    for (col, &k) in kept.iter().enumerate() {
        let theta = k as f64 * std::f64::consts::PI / np1;
        let lam = (1.0 - theta.cos()) / (h * h);
        let s = (-0.5 * dt * lam).exp() * norm;
        for i in 0..n {
            a[(i, col)] = s * ((i + 1) as f64 * theta).sin();
        }
    }
    &a * a.transpose()
}

/// Compare the transfer-chain expectation of `f(x_T)` under `μ0` with the
/// Feynman–Kac form: ψ0-weighted symmetric Trotter product of the free grid
/// kernel and `e^{-dt V}`, normalized by the same product for `f ≡ 1`.
pub fn verify_fkf(chain: &ReferenceChain, v: &PotentialV, gs: &GroundState, tg: &TimeGrid, f: &[f64]) -> Result<FkfCheck> {
    chain.check_dt(tg.dt)?;
    let n = chain.points();
    if f.len() != n {
        return Err(Error::Grid("observable length differs from the space grid".into()));
    }
    let h = chain.grid.spacing();
    let steps = tg.n;
    // chain: Σ_j (ψ h M^N)_j ψ_j f_j, with M symmetric
    let mpsi = chain.propagate(&chain.psi, steps);
    let chain_value: f64 = (0..n).map(|j| h * mpsi[j] * chain.psi[j] * f[j]).sum();

    let shifted = gs.shifted_potential(v);
    let half: Vec<f64> = (0..n)
        .map(|i| shifted.eval_1d(chain.x(i)).map(|vv| (-0.5 * tg.dt * vv).exp()))
        .collect::<Result<_>>()?;
    let g = free_kernel(&chain.grid, tg.dt);
    let trotter = |start: Vec<f64>| -> f64 {
        let mut cur = start;
        for _ in 0..steps {
            let scaled: Vec<f64> = cur.iter().zip(&half).map(|(c, e)| c * e).collect();
            let moved = &g * nalgebra::DVector::from_vec(scaled);
            cur = moved.iter().zip(&half).map(|(c, e)| c * e).collect();
        }
        cur.iter().zip(&chain.psi).map(|(c, p)| c * p).sum()
    };
    let num = trotter(chain.psi.iter().zip(f).map(|(p, fv)| p * fv).collect());
    let den = trotter(chain.psi.clone());
    let trotter_value = num / den;
    Ok(FkfCheck { chain_value, trotter_value, residual: (chain_value - trotter_value).abs() })
}

/// Residuals over a ladder of time steps and the fitted order `d ln r / d ln dt`.
pub fn fkf_convergence(gs: &GroundState, v: &PotentialV, t_final: f64, f: &[f64], dts: &[f64]) -> Result<(Vec<f64>, f64)> {
    let spec = gs.spectrum();
    let mut residuals = Vec::with_capacity(dts.len());
    for &dt in dts {
        let k = spec.heat_kernel(dt, gs.grid)?;
        let chain = ReferenceChain::new(gs, &k)?;
        let tg = TimeGrid::new(t_final, dt)?;
        residuals.push(verify_fkf(&chain, v, gs, &tg, f)?.residual);
    }
    let pts: Vec<(f64, f64)> = dts.iter().zip(&residuals).map(|(d, r)| (d.ln(), r.ln())).collect();
    Ok((residuals, crate::stats::ols(&pts).0))
}

/// Operator used by [`verify_fkf`]'s free part, exposed for tests.
pub fn free_operator(grid: &SpaceGrid) -> SymTridiagonal {
    let h = grid.spacing();
    let kin = 1.0 / (h * h);
    SymTridiagonal { diag: vec![kin; grid.points], off: vec![-0.5 * kin; grid.points - 1] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{heat_kernel, solve_ground_state};

    fn harmonic(grid: SpaceGrid, dt: f64) -> (GroundState, HeatKernel, ReferenceChain) {
        let gs = solve_ground_state(&PotentialV::harmonic(1.0), &grid).unwrap();
        let k = heat_kernel(&gs, dt).unwrap();
        let c = ReferenceChain::new(&gs, &k).unwrap();
        (gs, k, c)
    }

    #[test]
    fn timegrid_validation() {
        let g = TimeGrid::new(1.0, 0.1).unwrap();
        assert_eq!(g.n, 10);
        assert_eq!(g.len(), 21);
        assert!(TimeGrid::new(1.0, 0.3).is_err());
        assert_eq!(g.slot(0.0).unwrap(), 10);
        assert!(g.slot(0.05).is_err());
    }

    #[test]
    fn stationary_density_properties() {
        let gs = solve_ground_state(&PotentialV::harmonic(1.0), &SpaceGrid::reference()).unwrap();
        let d = stationary_density(&gs);
        let w = trapezoid_weights(d.len(), gs.spacing());
        let mass: f64 = d.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert!((mass - 1.0).abs() < 1e-10);
        let n = d.len();
        for i in 0..n {
            assert!((d[i] - d[n - 1 - i]).abs() < 1e-10);
            let x = gs.grid.x(i);
            let exact = (-x * x).exp() / std::f64::consts::PI.sqrt();
            assert!((d[i] - exact).abs() < 2e-3);
        }
    }

    #[test]
    fn ou_transition_density() {
        let (gs, k, _) = harmonic(SpaceGrid::reference(), 0.5);
        let y = gs.grid.index_of(0.0).unwrap();
        let dens = transition_density(&gs, &k, y).unwrap();
        let var = (1.0 - (-1.0f64).exp()) / 2.0;
        let mut worst: f64 = 0.0;
        for (z, d) in dens.iter().enumerate() {
            let x = gs.grid.x(z);
            let exact = (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
            worst = worst.max((d - exact).abs());
        }
        assert!(worst <= 5e-3, "{worst}");
        let mass = dens.iter().sum::<f64>() * gs.spacing();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn long_step_transition_is_stationary() {
        let (gs, k, _) = harmonic(SpaceGrid::symmetric(6.0, 241).unwrap(), 40.0);
        let dens = transition_density(&gs, &k, 100).unwrap();
        for (z, d) in dens.iter().enumerate() {
            assert!((d - gs.psi[z] * gs.psi[z]).abs() < 1e-8);
        }
    }

    #[test]
    fn stationarity_and_reversibility() {
        let (_, _, c) = harmonic(SpaceGrid::symmetric(6.0, 241).unwrap(), 0.1);
        let pi = c.stationary_probs();
        let n = c.points();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| c.transition_probs(i)).collect();
        for j in 0..n {
            let v: f64 = (0..n).map(|i| pi[i] * rows[i][j]).sum();
            assert!((v - pi[j]).abs() < 1e-8);
        }
        for i in (0..n).step_by(7) {
            for j in (0..n).step_by(5) {
                assert!((pi[i] * rows[i][j] - pi[j] * rows[j][i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn paths_are_deterministic() {
        let (_, _, c) = harmonic(SpaceGrid::symmetric(6.0, 121).unwrap(), 0.1);
        let tg = TimeGrid::new(1.0, 0.1).unwrap();
        assert_eq!(c.sample_path(tg, 5, 9).unwrap(), c.sample_path(tg, 5, 9).unwrap());
        assert_ne!(c.sample_path(tg, 5, 9).unwrap(), c.sample_path(tg, 5, 10).unwrap());
        assert!(c.sample_path(TimeGrid::new(1.0, 0.2).unwrap(), 5, 9).is_err());
    }

    #[test]
    fn bridge_midpoint_and_determinism() {
        let (_, _, c) = harmonic(SpaceGrid::symmetric(3.0, 31).unwrap(), 0.2);
        let tg = TimeGrid::new(0.2, 0.2).unwrap();
        let a = 12;
        let law = c.midpoint_law(a, a);
        let direct: Vec<f64> = {
            let w: Vec<f64> = (0..c.points()).map(|z| c.kernel[(a, z)] * c.kernel[(z, a)]).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect()
        };
        for (p, q) in law.iter().zip(&direct) {
            assert!((p - q).abs() < 1e-10);
        }
        let p1 = c.sample_bridge(tg, a, a, 1, 2).unwrap();
        let p2 = c.sample_bridge(tg, a, a, 1, 2).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.positions[0], c.x(a));
        assert_eq!(p1.positions[2], c.x(a));
    }

    #[test]
    fn zero_noise_sde_fixed_point() {
        let gs = solve_ground_state(&PotentialV::harmonic(1.0), &SpaceGrid::reference()).unwrap();
        let tr = sde_simulate(&gs, 5.0, 0.01, 0.0, 0.0, 1, 0).unwrap();
        assert!(tr.positions.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn harmonic_drift_is_minus_x() {
        let gs = solve_ground_state(&PotentialV::harmonic(1.0), &SpaceGrid::reference()).unwrap();
        let d = drift_table(&gs.psi, gs.spacing(), DRIFT_FLOOR);
        for (i, x) in gs.grid.xs().into_iter().enumerate() {
            if x.abs() <= 4.0 {
                assert!((d[i] + x).abs() < 1e-3, "x={x} drift={}", d[i]);
            }
        }
    }

    #[test]
    fn free_kernel_matches_eigen_route() {
        let g = SpaceGrid::symmetric(2.0, 41).unwrap();
        let via_sines = free_kernel(&g, 0.05);
        let spec = free_operator(&g).eigen();
        let mut worst: f64 = 0.0;
        for i in 0..41 {
            for j in 0..41 {
                let v: f64 = (0..41).map(|k| (-0.05 * spec.values[k]).exp() * spec.vectors[(i, k)] * spec.vectors[(j, k)]).sum();
                worst = worst.max((v - via_sines[(i, j)]).abs());
            }
        }
        assert!(worst < 1e-12);
    }
}
