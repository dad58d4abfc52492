//! Finite-volume Gibbs measures `dμ_T ∝ exp(H_T) dμ0` on the grid chain.
//!
//! [`GibbsChain`] is Metropolis-within-Gibbs with reference-conditional
//! proposals: a site (or a block) is redrawn from the reference law given its
//! neighbours, so the acceptance ratio is `exp(ΔH)` alone. Frozen sites cover
//! both pinned endpoints and the outside configuration of a local Gibbs
//! kernel. [`OracleInstance`] enumerates small instances exactly.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy, EnergyRegion};
use crate::error::{Error, Result};
use crate::model::{Interaction, PairPotentialW, PotentialV};
use crate::reference::{Path, ReferenceChain, TimeGrid};
use crate::rng::{stream_rng, StreamRng};
use crate::spectral::SpaceGrid;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// Free endpoints distributed by the reference process.
    Smeared,
    /// Endpoints fixed at `x_{-T} = y`, `x_T = z`.
    Pinned { y: f64, z: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsSpec {
    pub v: PotentialV,
    pub w: PairPotentialW,
    pub space: SpaceGrid,
    pub time: TimeGrid,
    pub boundary: Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub sweeps: usize,
    pub burnin: usize,
    pub block_len: usize,
    pub seed: u64,
    pub stream: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { sweeps: 10_000, burnin: 1_000, block_len: 4, seed: 0, stream: 0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }
}

/// Snapshot of a chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainState {
    pub path: Path,
    pub sweep: usize,
    pub single: MoveStats,
    pub block: MoveStats,
}

/// Acceptance rate below which a warning is issued after burn-in.
pub const LOW_ACCEPTANCE: f64 = 0.01;

pub struct GibbsChain {
    reference: Arc<ReferenceChain>,
    w: PairPotentialW,
    time: TimeGrid,
    coef: Vec<f64>,
    lags: Vec<f64>,
    frozen: Vec<bool>,
    block_starts: Vec<usize>,
    block_len: usize,
    idx: Vec<usize>,
    x: Vec<f64>,
    rng: StreamRng,
    sweep: usize,
    single: MoveStats,
    block: MoveStats,
    scratch: Vec<f64>,
    pub warnings: Vec<String>,
}

impl GibbsChain {
    /// Chain started from `idx` with the given frozen sites.
    pub fn from_indices(
        reference: Arc<ReferenceChain>,
        w: PairPotentialW,
        time: TimeGrid,
        idx: Vec<usize>,
        frozen: Vec<bool>,
        block_len: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if (time.dt - reference.dt).abs() > 1e-12 * reference.dt.max(1.0) {
            return Err(Error::Grid(format!("time step {} differs from kernel step {}", time.dt, reference.dt)));
        }
        if idx.len() != time.len() || frozen.len() != time.len() {
            return Err(Error::Dimension { expected: time.len(), got: idx.len().min(frozen.len()) });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= reference.points()) {
            return Err(Error::Grid(format!("grid index {bad} out of range")));
        }
        let len = time.len();
        let block_len = block_len.min(len);
        let block_starts = if block_len == 0 {
            Vec::new()
        } else {
            (0..=len - block_len).filter(|&s| frozen[s..s + block_len].iter().all(|f| !f)).collect()
        };
        let x = idx.iter().map(|&i| reference.x(i)).collect();
        Ok(Self {
            coef: time.weights(),
            lags: (0..len).map(|d| d as f64 * time.dt).collect(),
            reference,
            w,
            time,
            frozen,
            block_starts,
            block_len,
            idx,
            x,
            rng: stream_rng(seed, stream),
            sweep: 0,
            single: MoveStats::default(),
            block: MoveStats::default(),
            scratch: Vec::new(),
            warnings: Vec::new(),
        })
    }

    /// Chain for `boundary`, started from a reference path (or bridge).
    pub fn new(reference: Arc<ReferenceChain>, w: PairPotentialW, time: TimeGrid, boundary: Boundary, cfg: &ChainConfig) -> Result<Self> {
        let len = time.len();
        let mut rng = stream_rng(cfg.seed, cfg.stream);
        let (idx, frozen) = match boundary {
            Boundary::Smeared => (reference.sample_indices(&time, &mut rng)?, vec![false; len]),
            Boundary::Pinned { y, z } => {
                let a = reference.grid.index_of(y)?;
                let b = reference.grid.index_of(z)?;
                let mut idx = vec![a];
                idx.extend(reference.sample_block(Some(a), Some(b), len - 2, &mut rng)?);
                idx.push(b);
                let mut frozen = vec![false; len];
                frozen[0] = true;
                frozen[len - 1] = true;
                (idx, frozen)
            }
        };
        // the initial draw used its own stream; the chain continues on the next one
        Self::from_indices(reference, w, time, idx, frozen, cfg.block_len, cfg.seed, cfg.stream.wrapping_add(1 << 32))
    }

    pub fn from_spec(spec: &GibbsSpec, cfg: &ChainConfig) -> Result<Self> {
        let (_, reference) = ReferenceChain::for_potential(&spec.v, &spec.space, spec.time.dt)?;
        Self::new(Arc::new(reference), spec.w.clone(), spec.time, spec.boundary, cfg)
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn reference(&self) -> &ReferenceChain {
        &self.reference
    }

    pub fn set_indices(&mut self, idx: &[usize]) {
        self.idx.copy_from_slice(idx);
        for (x, &i) in self.x.iter_mut().zip(idx) {
            *x = self.reference.x(i);
        }
    }

    pub fn state(&self) -> ChainState {
        ChainState {
            path: Path { grid: self.time, positions: self.x.clone() },
            sweep: self.sweep,
            single: self.single,
            block: self.block,
        }
    }

    pub fn stats(&self) -> (MoveStats, MoveStats) {
        (self.single, self.block)
    }

    /// Full `H_T` of the current path.
    pub fn energy(&self) -> f64 {
        let mut s = 0.0;
        for (j, &cj) in self.coef.iter().enumerate() {
            for (k, &ck) in self.coef.iter().enumerate() {
                s += cj * ck * self.w.pair(self.x[j], self.x[k], self.lags[j.abs_diff(k)]);
            }
        }
        -s
    }

    /// `Σ_k c_i c_k [W(y, x_k) + W(x_k, y)]` over `k ≠ i`, plus the diagonal.
    fn site_sum(&self, i: usize, y: f64) -> f64 {
        let ci = self.coef[i];
        let mut s = 0.0;
        for (k, (&ck, &xk)) in self.coef.iter().zip(&self.x).enumerate() {
            if k != i {
                let lag = self.lags[i.abs_diff(k)];
                s += ck * (self.w.pair(y, xk, lag) + self.w.pair(xk, y, lag));
            }
        }
        ci * s + ci * ci * self.w.pair(y, y, 0.0)
    }

    fn accept(&mut self, delta_h: f64) -> bool {
        delta_h >= 0.0 || self.rng.random::<f64>() < delta_h.exp()
    }

    fn neighbours(&self, lo: usize, hi: usize) -> (Option<usize>, Option<usize>) {
        let left = if lo > 0 { Some(self.idx[lo - 1]) } else { None };
        let right = if hi < self.idx.len() { Some(self.idx[hi]) } else { None };
        (left, right)
    }

    /// Heat-bath proposal at site `i` with Metropolis correction.
    pub fn single_site(&mut self, i: usize) -> Result<bool> {
        if self.frozen[i] {
            return Ok(false);
        }
        let (left, right) = self.neighbours(i, i + 1);
        let mut scratch = std::mem::take(&mut self.scratch);
        let proposal = self.reference.sample_site(left, right, &mut scratch, &mut self.rng);
        self.scratch = scratch;
        let b = proposal?;
        let a = self.idx[i];
        let accepted = if a == b || self.w.is_zero() {
            true
        } else {
            let (xa, xb) = (self.x[i], self.reference.x(b));
            let delta_h = -(self.site_sum(i, xb) - self.site_sum(i, xa));
            self.accept(delta_h)
        };
        if accepted {
            self.idx[i] = b;
            self.x[i] = self.reference.x(b);
        }
        self.single.record(accepted);
        Ok(accepted)
    }

    /// Interaction sum of the pairs touching `[lo, hi)` for block values `y`.
    fn block_sum(&self, lo: usize, hi: usize, y: &[f64]) -> f64 {
        let mut s = 0.0;
        for (a, j) in (lo..hi).enumerate() {
            let cj = self.coef[j];
            for (k, (&ck, &xk)) in self.coef.iter().zip(&self.x).enumerate() {
                let lag = self.lags[j.abs_diff(k)];
                if (lo..hi).contains(&k) {
                    s += cj * ck * self.w.pair(y[a], y[k - lo], lag);
                } else {
                    s += cj * ck * (self.w.pair(y[a], xk, lag) + self.w.pair(xk, y[a], lag));
                }
            }
        }
        s
    }

    /// Redraw a block from the reference bridge law at a random allowed location.
    pub fn block_move(&mut self) -> Result<bool> {
        if self.block_starts.is_empty() {
            return Ok(false);
        }
        let s = self.block_starts[self.rng.random_range(0..self.block_starts.len())];
        let e = s + self.block_len;
        let (left, right) = self.neighbours(s, e);
        let proposal = self.reference.sample_block(left, right, self.block_len, &mut self.rng)?;
        let accepted = if self.w.is_zero() {
            true
        } else {
            let old: Vec<f64> = self.x[s..e].to_vec();
            let new: Vec<f64> = proposal.iter().map(|&i| self.reference.x(i)).collect();
            let delta_h = -(self.block_sum(s, e, &new) - self.block_sum(s, e, &old));
            self.accept(delta_h)
        };
        if accepted {
            for (k, &i) in proposal.iter().enumerate() {
                self.idx[s + k] = i;
                self.x[s + k] = self.reference.x(i);
            }
        }
        self.block.record(accepted);
        Ok(accepted)
    }

    /// One pass of single-site moves over the free sites, then one block move.
    pub fn sweep(&mut self) -> Result<()> {
        for i in 0..self.idx.len() {
            if !self.frozen[i] {
                self.single_site(i)?;
            }
        }
        self.block_move()?;
        self.sweep += 1;
        Ok(())
    }

    /// Run `burnin` sweeps and warn if either move type is nearly always rejected.
    pub fn burn_in(&mut self, burnin: usize) -> Result<()> {
        for _ in 0..burnin {
            self.sweep()?;
        }
        if burnin > 0 {
            if self.single.rate() < LOW_ACCEPTANCE {
                self.warnings.push(format!("single-site acceptance {:.4} over burn-in", self.single.rate()));
            }
            if self.block.rate() < LOW_ACCEPTANCE {
                let suggested = (self.block_len / 2).max(1);
                self.warnings.push(format!(
                    "block acceptance {:.4} over burn-in; reduce block length from {} to {}",
                    self.block.rate(),
                    self.block_len,
                    suggested
                ));
            }
        }
        Ok(())
    }

    /// Burn in, then call `observe` after each of `sweeps` sweeps.
    pub fn run(&mut self, burnin: usize, sweeps: usize, mut observe: impl FnMut(&GibbsChain)) -> Result<()> {
        self.burn_in(burnin)?;
        for _ in 0..sweeps {
            self.sweep()?;
            observe(self);
        }
        Ok(())
    }
}

/// Gibbs chain for the local kernel on the open window `(-S, S)` with the
/// outside of `outside` frozen.
pub fn dlr_chain(
    reference: Arc<ReferenceChain>,
    w: PairPotentialW,
    time: TimeGrid,
    s: f64,
    outside: Vec<usize>,
    block_len: usize,
    seed: u64,
    stream: u64,
) -> Result<GibbsChain> {
    let (lo, hi) = window_slots(&time, s)?;
    let frozen = (0..time.len()).map(|k| k <= lo || k >= hi).collect();
    GibbsChain::from_indices(reference, w, time, outside, frozen, block_len, seed, stream)
}

/// Slots of `-S` and `S`; `0 < S < T` required.
pub fn window_slots(time: &TimeGrid, s: f64) -> Result<(usize, usize)> {
    if !(s > 0.0 && s < time.t_half) {
        return Err(Error::Domain(format!("window half-width {s} must lie in (0, {})", time.t_half)));
    }
    Ok((time.slot(-s)?, time.slot(s)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleBoundary {
    Smeared,
    /// Grid indices of the pinned endpoints.
    Pinned { y: usize, z: usize },
}

/// Cap on enumerated configurations.
pub const ORACLE_CAP: u128 = 10_000_000;

/// A grid instance small enough to enumerate.
#[derive(Clone, Debug)]
pub struct OracleInstance {
    pub chain: ReferenceChain,
    pub time: TimeGrid,
    pub w: PairPotentialW,
    pub boundary: OracleBoundary,
}

impl OracleInstance {
    pub fn new(v: &PotentialV, space: SpaceGrid, time: TimeGrid, w: PairPotentialW, boundary: OracleBoundary) -> Result<Self> {
        let (_, chain) = ReferenceChain::for_potential(v, &space, time.dt)?;
        let inst = Self { chain, time, w, boundary };
        inst.check_size()?;
        Ok(inst)
    }

    pub fn states(&self) -> usize {
        self.chain.points()
    }

    fn free_slots(&self) -> Vec<usize> {
        let len = self.time.len();
        match self.boundary {
            OracleBoundary::Smeared => (0..len).collect(),
            OracleBoundary::Pinned { .. } => (1..len - 1).collect(),
        }
    }

    fn check_size(&self) -> Result<u128> {
        let size = (self.states() as u128).checked_pow(self.free_slots().len() as u32).unwrap_or(u128::MAX);
        if size > ORACLE_CAP {
            return Err(Error::OracleTooLarge { size, cap: ORACLE_CAP });
        }
        Ok(size)
    }

    fn path_of(&self, idx: &[usize]) -> Path {
        self.chain.to_path(self.time, idx)
    }

    /// Reference probability of the path: `π(x_first) Π P(x_k, x_{k+1})`
    /// (only the product for pinned instances).
    fn reference_weight(&self, idx: &[usize], transition: &[Vec<f64>], pi: &[f64]) -> f64 {
        let start = match self.boundary {
            OracleBoundary::Smeared => pi[idx[0]],
            OracleBoundary::Pinned { .. } => 1.0,
        };
        idx.windows(2).fold(start, |acc, p| acc * transition[p[0]][p[1]])
    }

    /// Exact law of the whole path by enumeration.
    pub fn brute_force(&self) -> Result<ExactMeasure> {
        let size = self.check_size()? as usize;
        let m = self.states();
        let len = self.time.len();
        let free = self.free_slots();
        let transition: Vec<Vec<f64>> = (0..m).map(|i| self.chain.transition_probs(i)).collect();
        let pi = self.chain.stationary_probs();
        let sq = EnergyRegion::Square { t: self.time.t_half };
        let mut idx = vec![0usize; len];
        if let OracleBoundary::Pinned { y, z } = self.boundary {
            idx[0] = y;
            idx[len - 1] = z;
        }
        let mut weights = Vec::with_capacity(size);
        for code in 0..size {
            decode(code, m, &free, &mut idx);
            let base = self.reference_weight(&idx, &transition, &pi);
            let h = if self.w.is_zero() { 0.0 } else { energy(&self.w, &self.path_of(&idx), &sq)? };
            weights.push(base * h.exp());
        }
        let z: f64 = weights.iter().sum();
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::Domain(format!("partition sum {z} is not positive and finite")));
        }
        let probs = weights.into_iter().map(|wt| wt / z).collect();
        Ok(ExactMeasure { m, template: idx_template(&self.boundary, len), free, probs, z })
    }

    /// Exact local kernel on the open window `(-S, S)` given the outside:
    /// reference bridge across the window times `exp(H_{Λ(S,T)})`. Indexed by
    /// the window configuration (earliest slot most significant).
    pub fn dlr_kernel(&self, s: f64, outside: &[usize]) -> Result<Vec<f64>> {
        let (lo, hi) = window_slots(&self.time, s)?;
        if outside.len() != self.time.len() {
            return Err(Error::Dimension { expected: self.time.len(), got: outside.len() });
        }
        let m = self.states();
        let slots: Vec<usize> = (lo + 1..hi).collect();
        let size = (m as u128).pow(slots.len() as u32);
        if size > ORACLE_CAP {
            return Err(Error::OracleTooLarge { size, cap: ORACLE_CAP });
        }
        let transition: Vec<Vec<f64>> = (0..m).map(|i| self.chain.transition_probs(i)).collect();
        let frame = EnergyRegion::Frame { s, t: self.time.t_half };
        let mut idx = outside.to_vec();
        let mut weights = Vec::with_capacity(size as usize);
        for code in 0..size as usize {
            decode(code, m, &slots, &mut idx);
            let bridge: f64 = (lo..hi).map(|k| transition[idx[k]][idx[k + 1]]).product();
            let h = energy(&self.w, &self.path_of(&idx), &frame)?;
            weights.push(bridge * h.exp());
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroBridgeMass { from: outside[lo], to: outside[hi], steps: hi - lo });
        }
        Ok(weights.into_iter().map(|w| w / total).collect())
    }
}

fn idx_template(boundary: &OracleBoundary, len: usize) -> Vec<Option<usize>> {
    let mut t = vec![None; len];
    if let OracleBoundary::Pinned { y, z } = *boundary {
        t[0] = Some(y);
        t[len - 1] = Some(z);
    }
    t
}

/// Write the base-`m` digits of `code` into `idx` at `slots` (first slot most significant).
fn decode(mut code: usize, m: usize, slots: &[usize], idx: &mut [usize]) {
    for &s in slots.iter().rev() {
        idx[s] = code % m;
        code /= m;
    }
}

fn encode(m: usize, slots: &[usize], idx: &[usize]) -> usize {
    slots.iter().fold(0, |acc, &s| acc * m + idx[s])
}

/// Normalized probability table of an enumerated instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactMeasure {
    pub m: usize,
    template: Vec<Option<usize>>,
    free: Vec<usize>,
    pub probs: Vec<f64>,
    /// `E_{μ0}[exp(H_T)]` (smeared) or the unnormalized bridge sum (pinned).
    pub z: f64,
}

impl ExactMeasure {
    pub fn len(&self) -> usize {
        self.template.len()
    }

    pub fn is_empty(&self) -> bool {
        self.template.is_empty()
    }

    /// Full index configuration of table entry `code`.
    pub fn config(&self, code: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self.template.iter().map(|t| t.unwrap_or(0)).collect();
        decode(code, self.m, &self.free, &mut idx);
        idx
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(c, &p)| (self.config(c), p))
    }

    pub fn marginal(&self, slot: usize) -> Vec<f64> {
        self.joint(&[slot])
    }

    /// Joint law of `slots` (first slot most significant).
    pub fn joint(&self, slots: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.m.pow(slots.len() as u32)];
        for (idx, p) in self.iter() {
            out[encode(self.m, slots, &idx)] += p;
        }
        out
    }

    /// Conditional law of the open window `(lo, hi)` given every other slot of `outside`.
    pub fn conditional(&self, lo: usize, hi: usize, outside: &[usize]) -> Result<Vec<f64>> {
        let inside: Vec<usize> = (lo + 1..hi).collect();
        let mut out = vec![0.0; self.m.pow(inside.len() as u32)];
        for (idx, p) in self.iter() {
            let matches = idx.iter().zip(outside).enumerate().all(|(k, (a, b))| (k > lo && k < hi) || a == b);
            if matches {
                out[encode(self.m, &inside, &idx)] += p;
            }
        }
        let total: f64 = out.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("outside configuration has probability zero".into()));
        }
        Ok(out.into_iter().map(|v| v / total).collect())
    }

    /// Draw a configuration.
    pub fn sample(&self, rng: &mut StreamRng) -> Vec<usize> {
        let mut u = rng.random::<f64>();
        for (c, &p) in self.probs.iter().enumerate() {
            u -= p;
            if u < 0.0 {
                return self.config(c);
            }
        }
        self.config(self.probs.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::total_variation;

    fn small(w: PairPotentialW, n: usize, boundary: OracleBoundary) -> OracleInstance {
        let space = SpaceGrid::symmetric(2.0, 5).unwrap();
        let time = TimeGrid::from_steps(n, 0.5).unwrap();
        OracleInstance::new(&PotentialV::harmonic(1.0), space, time, w, boundary).unwrap()
    }

    #[test]
    fn zero_w_oracle_is_reference_chain() {
        let inst = small(PairPotentialW::zero(), 2, OracleBoundary::Smeared);
        let exact = inst.brute_force().unwrap();
        let pi = inst.chain.stationary_probs();
        for slot in 0..5 {
            let marg = exact.marginal(slot);
            for (a, b) in marg.iter().zip(&pi) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!((exact.z - 1.0).abs() < 1e-13);
    }

    #[test]
    fn constant_w_scales_partition_sum() {
        let c = 0.3;
        let z0 = small(PairPotentialW::zero(), 1, OracleBoundary::Smeared).brute_force().unwrap().z;
        let zc = small(PairPotentialW::constant(c), 1, OracleBoundary::Smeared).brute_force().unwrap().z;
        let t = 0.5;
        assert!((zc - z0 * (-c * (2.0 * t) * (2.0 * t) as f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn pinned_midpoint_is_bridge_law() {
        let inst = small(PairPotentialW::zero(), 1, OracleBoundary::Pinned { y: 1, z: 3 });
        let exact = inst.brute_force().unwrap();
        let law = inst.chain.midpoint_law(1, 3);
        for (a, b) in exact.marginal(1).iter().zip(&law) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_cap() {
        let space = SpaceGrid::symmetric(4.0, 9).unwrap();
        let time = TimeGrid::from_steps(4, 0.5).unwrap();
        let err = OracleInstance::new(&PotentialV::harmonic(1.0), space, time, PairPotentialW::zero(), OracleBoundary::Smeared);
        assert!(matches!(err, Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn incremental_energy_matches_full() {
        let inst = small(PairPotentialW::nelson(0.7), 2, OracleBoundary::Smeared);
        let reference = Arc::new(inst.chain.clone());
        let cfg = ChainConfig { block_len: 2, seed: 3, ..Default::default() };
        let mut chain = GibbsChain::new(reference, inst.w.clone(), inst.time, Boundary::Smeared, &cfg).unwrap();
        for (i, y) in [(0, 1.0), (2, -2.0), (4, 0.0), (3, 2.0)] {
            let before = chain.energy();
            let predicted = -(chain.site_sum(i, y) - chain.site_sum(i, chain.x[i]));
            chain.x[i] = y;
            assert!((chain.energy() - before - predicted).abs() < 1e-12);
        }
        let direct = energy(&inst.w, &chain.state().path, &EnergyRegion::Square { t: inst.time.t_half }).unwrap();
        assert!((chain.energy() - direct).abs() < 1e-12);
    }

    #[test]
    fn block_delta_matches_full() {
        let inst = small(PairPotentialW::nelson(0.9), 3, OracleBoundary::Smeared);
        let reference = Arc::new(inst.chain.clone());
        let cfg = ChainConfig { block_len: 3, seed: 11, ..Default::default() };
        let mut chain = GibbsChain::new(reference, inst.w.clone(), inst.time, Boundary::Smeared, &cfg).unwrap();
        let old = chain.x.clone();
        let mut new = old.clone();
        new[2] = 1.0;
        new[3] = -2.0;
        new[4] = 0.0;
        let e_old = chain.energy();
        let d = -(chain.block_sum(2, 5, &new[2..5]) - chain.block_sum(2, 5, &old[2..5]));
        chain.x = new;
        assert!((chain.energy() - e_old - d).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_chain() {
        let inst = small(PairPotentialW::nelson(0.5), 2, OracleBoundary::Smeared);
        let reference = Arc::new(inst.chain.clone());
        let cfg = ChainConfig { block_len: 2, seed: 9, ..Default::default() };
        let run = || {
            let mut c = GibbsChain::new(reference.clone(), inst.w.clone(), inst.time, Boundary::Smeared, &cfg).unwrap();
            let mut trace = Vec::new();
            c.run(10, 100, |c| trace.extend_from_slice(c.indices())).unwrap();
            trace
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn pinned_endpoints_never_move() {
        let space = SpaceGrid::symmetric(3.0, 31).unwrap();
        let spec = GibbsSpec {
            v: PotentialV::harmonic(1.0),
            w: PairPotentialW::nelson(0.5),
            space,
            time: TimeGrid::new(1.0, 0.1).unwrap(),
            boundary: Boundary::Pinned { y: -1.0, z: 2.0 },
        };
        let mut c = GibbsChain::from_spec(&spec, &ChainConfig { block_len: 3, ..Default::default() }).unwrap();
        c.run(0, 200, |c| {
            assert_eq!(c.positions()[0], -1.0);
            assert_eq!(*c.positions().last().unwrap(), 2.0);
        })
        .unwrap();
    }

    #[test]
    fn dlr_kernel_zero_w_is_bridge() {
        let inst = small(PairPotentialW::zero(), 2, OracleBoundary::Smeared);
        let outside = vec![1, 2, 0, 3, 2];
        let k = inst.dlr_kernel(0.5, &outside).unwrap();
        let law = inst.chain.midpoint_law(2, 3);
        assert!(total_variation(&k, &law) < 1e-14);
    }

    #[test]
    fn dlr_kernel_matches_conditional() {
        let inst = small(PairPotentialW::nelson(0.5), 2, OracleBoundary::Smeared);
        let exact = inst.brute_force().unwrap();
        let outside = vec![4, 2, 0, 1, 0];
        let k = inst.dlr_kernel(0.5, &outside).unwrap();
        let c = exact.conditional(1, 3, &outside).unwrap();
        assert!(total_variation(&k, &c) < 1e-12);
    }
}
