//! Discretized Schrödinger operator `H0 = -1/2 Δ + V`, its ground state and
//! the heat kernels `e^{-t H0}` of the shifted operator.
//!
//! The Laplacian is the three-point stencil with homogeneous Dirichlet values
//! one spacing beyond each end of the grid, so every grid point is an unknown.
//! Eigenvectors are normalized with `Σ ψ² h = 1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PotentialV;

/// Uniform grid `lower + i h`, `i = 0..points`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

impl SpaceGrid {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Grid(format!("need lower < upper, got [{lower}, {upper}]")));
        }
        if points < 3 {
            return Err(Error::Grid(format!("need at least 3 points, got {points}")));
        }
        Ok(Self { lower, upper, points })
    }

    /// Symmetric box `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    /// Default box for the one-dimensional solver: `[-8, 8]`, 801 points.
    pub fn reference() -> Self {
        Self { lower: -8.0, upper: 8.0, points: 801 }
    }

    pub fn spacing(&self) -> f64 {
        (self.upper - self.lower) / (self.points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    /// Index of the grid point equal to `x` (within `1e-9 h`).
    pub fn index_of(&self, x: f64) -> Result<usize> {
        let h = self.spacing();
        let k = ((x - self.lower) / h).round();
        if k < 0.0 || k >= self.points as f64 || (self.lower + k * h - x).abs() > 1e-9 * h {
            return Err(Error::Grid(format!("{x} is not a grid point")));
        }
        Ok(k as usize)
    }

    /// Nearest grid index, clamped to the box.
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x - self.lower) / self.spacing()).round();
        k.clamp(0.0, (self.points - 1) as f64) as usize
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Grid("tridiagonal: off-diagonal must have n-1 entries".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn shifted(&self, by: f64) -> Self {
        Self { diag: self.diag.iter().map(|d| d + by).collect(), off: self.off.clone() }
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.dim() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Smallest eigenvalue by bisection on the Sturm count.
    pub fn lowest_eigenvalue(&self) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 2.0 * f64::EPSILON * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solve `(A - sigma I) x = b` for an `A - sigma I` with nonzero LDLᵀ pivots.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = self.diag[0] - sigma;
        for i in 1..n {
            l[i - 1] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - sigma - l[i - 1] * self.off[i - 1];
        }
        let mut y = b.to_vec();
        for i in 1..n {
            y[i] -= l[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= l[i] * y[i + 1];
        }
        y
    }

    /// Full eigendecomposition by the implicit QL algorithm.
    pub fn eigen(&self) -> Spectrum {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = vec![0.0; n];
        e[..n - 1].copy_from_slice(&self.off);
        // z[i * n + k]: component k of eigenvector i
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        tql2(&mut d, &mut e, &mut z, n);

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            for k in 0..n {
                vectors[(k, col)] = z[i * n + k];
            }
        }
        Spectrum { values, vectors }
    }
}

/// Implicit QL with Wilkinson-type shifts (after the EISPACK `tql2` routine).
/// Rotations are accumulated into the rows of `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) {
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            loop {
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let zi = &mut head[i * n..(i + 1) * n];
                    let zi1 = &mut tail[..n];
                    for k in 0..n {
                        let hk = zi1[k];
                        zi1[k] = s * zi[k] + c * hk;
                        zi[k] = c * zi[k] - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns, `Σ v² = 1`).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Below this Boltzmann factor an eigencomponent is dropped from the kernel sum.
const KERNEL_CUTOFF: f64 = 1e-20;
/// Entries in `[-NEG_CLAMP, 0)` are roundoff and are set to zero.
const NEG_CLAMP: f64 = 1e-12;

impl Spectrum {
    /// `e^{-dt A}` as an `h`-weighted transfer matrix (`Σ_k e^{-dt λ_k} v_k v_kᵀ`).
    pub fn heat_kernel(&self, dt: f64, grid: SpaceGrid) -> Result<HeatKernel> {
        if !(dt > 0.0) {
            return Err(Error::Domain(format!("heat kernel needs dt > 0, got {dt}")));
        }
        let n = self.values.len();
        let l0 = self.values[0];
        let kept: Vec<usize> = (0..n).filter(|&k| (-(self.values[k] - l0) * dt).exp() > KERNEL_CUTOFF).collect();
        let mut a = DMatrix::zeros(n, kept.len());
        for (col, &k) in kept.iter().enumerate() {
            let s = (-0.5 * dt * self.values[k]).exp();
            for i in 0..n {
                a[(i, col)] = s * self.vectors[(i, k)];
            }
        }
        let mut m = &a * a.transpose();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if v < 0.0 {
                    if v < -NEG_CLAMP {
                        return Err(Error::NegativeKernel { row: i, col: j, value: v });
                    }
                    m[(i, j)] = 0.0;
                }
            }
        }
        Ok(HeatKernel { dt, grid, matrix: m })
    }
}

/// `-1/2 Δ + V` on the grid with Dirichlet ends.
pub fn build_hamiltonian(v: &PotentialV, grid: &SpaceGrid) -> Result<SymTridiagonal> {
    if v.dim != 1 {
        return Err(Error::Dimension { expected: 1, got: v.dim });
    }
    let h = grid.spacing();
    let kin = 1.0 / (h * h);
    let mut diag = Vec::with_capacity(grid.points);
    for i in 0..grid.points {
        let x = grid.x(i);
        let value = v.eval_1d(x)?;
        if !value.is_finite() {
            return Err(Error::NonFinitePotential { index: i, x, value });
        }
        diag.push(kin + value);
    }
    SymTridiagonal::new(diag, vec![-0.5 * kin; grid.points - 1])
}

/// Ground state of a one-dimensional (or radial) grid operator.
#[derive(Clone, Debug)]
pub struct GroundState {
    /// Lowest eigenvalue before the shift.
    pub energy: f64,
    /// Strictly positive, `Σ ψ² h = 1`.
    pub psi: Vec<f64>,
    pub grid: SpaceGrid,
    /// Operator with `V` replaced by `V - E0`, so its bottom eigenvalue is 0.
    pub shifted: SymTridiagonal,
}

impl GroundState {
    pub fn spacing(&self) -> f64 {
        self.grid.spacing()
    }

    /// `max |H_shifted ψ|`.
    pub fn residual(&self) -> f64 {
        self.shifted.apply(&self.psi).iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn psi_max(&self) -> f64 {
        self.psi.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// The potential with the shift that makes `inf spec(H0) = 0`.
    pub fn shifted_potential(&self, v: &PotentialV) -> PotentialV {
        v.clone().with_shift(v.shift - self.energy)
    }

    /// Full spectrum of the shifted operator.
    pub fn spectrum(&self) -> Spectrum {
        self.shifted.eigen()
    }

    /// Linear interpolation of ψ at an off-grid point (0 outside the box).
    pub fn psi_at(&self, x: f64) -> f64 {
        let h = self.grid.spacing();
        let s = (x - self.grid.lower) / h;
        if s < 0.0 || s > (self.grid.points - 1) as f64 {
            return 0.0;
        }
        let k = (s.floor() as usize).min(self.grid.points - 2);
        let f = s - k as f64;
        self.psi[k] * (1.0 - f) + self.psi[k + 1] * f
    }
}

/// Lowest eigenpair by bisection and inverse iteration; ψ sign-fixed positive.
pub fn ground_state(h: &SymTridiagonal, grid: &SpaceGrid) -> Result<GroundState> {
    let n = h.dim();
    if n != grid.points {
        return Err(Error::Grid(format!("operator has {n} rows, grid has {} points", grid.points)));
    }
    let lambda = h.lowest_eigenvalue();
    let (glo, ghi) = h.gershgorin();
    let delta = 1e-9 * glo.abs().max(ghi.abs()).max(1.0);
    let sigma = lambda - delta;
    let spacing = grid.spacing();

    let mut v = vec![1.0; n];
    for _ in 0..8 {
        v = h.solve_shifted(sigma, &v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    if v.iter().sum::<f64>() < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let hv = h.apply(&v);
    let energy = v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>();
    let scale = 1.0 / spacing.sqrt();
    let psi: Vec<f64> = v.iter().map(|x| x * scale).collect();
    if let Some((index, &value)) = psi.iter().enumerate().find(|(_, &p)| !(p > 0.0)) {
        return Err(Error::NonPositiveGroundState { index, value });
    }
    Ok(GroundState { energy, psi, grid: *grid, shifted: h.shifted(-energy) })
}

/// Convenience: build `H0` for `v` on `grid` and solve for the ground state.
pub fn solve_ground_state(v: &PotentialV, grid: &SpaceGrid) -> Result<GroundState> {
    ground_state(&build_hamiltonian(v, grid)?, grid)
}

/// Radial ground state `ψ0(r) = u(r) / (r √(4π))` on `r_i = i R / n`, `i = 1..=n`.
#[derive(Clone, Debug)]
pub struct RadialGroundState {
    pub energy: f64,
    /// `Σ u² h = 1`.
    pub u: Vec<f64>,
    /// Three-dimensional profile, `∫ ψ0² d³x = 1`.
    pub psi: Vec<f64>,
    pub grid: SpaceGrid,
}

impl RadialGroundState {
    /// `d/dr ln ψ0` by central differences (one-sided at the ends).
    pub fn log_derivative(&self) -> Vec<f64> {
        log_derivative(&self.psi, self.grid.spacing())
    }
}

pub(crate) fn log_derivative(psi: &[f64], h: f64) -> Vec<f64> {
    let n = psi.len();
    let lp: Vec<f64> = psi.iter().map(|p| p.ln()).collect();
    (0..n)
        .map(|i| {
            if i == 0 {
                (lp[1] - lp[0]) / h
            } else if i == n - 1 {
                (lp[n - 1] - lp[n - 2]) / h
            } else {
                (lp[i + 1] - lp[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Solve `-1/2 u'' + V(r) u = E u`, `u(0) = 0`, on `(0, r_max]` with `points` nodes.
pub fn ground_state_radial(v: &PotentialV, r_max: f64, points: usize) -> Result<RadialGroundState> {
    if !v.is_radial() {
        return Err(Error::Domain("radial solver needs a spherically symmetric potential".into()));
    }
    let h = r_max / points as f64;
    let grid = SpaceGrid::new(h, r_max, points)?;
    let kin = 1.0 / (h * h);
    let mut diag = Vec::with_capacity(points);
    for i in 0..points {
        let r = grid.x(i);
        let value = v.eval_radial(r)?;
        if !value.is_finite() {
            return Err(Error::NonFinitePotential { index: i, x: r, value });
        }
        diag.push(kin + value);
    }
    let op = SymTridiagonal::new(diag, vec![-0.5 * kin; points - 1])?;
    let gs = ground_state(&op, &grid)?;
    let norm = (4.0 * std::f64::consts::PI).sqrt();
    let psi = gs.psi.iter().enumerate().map(|(i, u)| u / (grid.x(i) * norm)).collect();
    Ok(RadialGroundState { energy: gs.energy, u: gs.psi, psi, grid })
}

/// `h`-weighted kernel of `e^{-dt H0}` (shifted operator): `row · K` is one transfer step,
/// and the continuum kernel is `K(x, y) = matrix / h`.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    pub dt: f64,
    pub grid: SpaceGrid,
    pub matrix: DMatrix<f64>,
}

impl HeatKernel {
    pub fn points(&self) -> usize {
        self.matrix.nrows()
    }

    /// Continuum kernel value `K_dt(x_i, x_j)`.
    pub fn density(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)] / self.grid.spacing()
    }

    /// Kernel for `dt1 + dt2` by Chapman–Kolmogorov.
    pub fn compose(&self, other: &HeatKernel) -> Result<HeatKernel> {
        if self.grid != other.grid {
            return Err(Error::Grid("cannot compose kernels on different grids".into()));
        }
        Ok(HeatKernel { dt: self.dt + other.dt, grid: self.grid, matrix: &self.matrix * &other.matrix })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.points();
        (0..n).map(|i| (0..n).map(|j| self.matrix[(i, j)] * v[j]).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |K_ij - K_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.points();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    /// `max |K ψ - ψ|`.
    pub fn eigen_residual(&self, psi: &[f64]) -> f64 {
        self.apply(psi).iter().zip(psi).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max_x ∫ K(x, y) dy`.
    pub fn max_row_integral(&self) -> f64 {
        (0..self.points()).map(|i| self.matrix.row(i).sum()).fold(0.0, f64::max)
    }
}

/// Heat kernel of the shifted operator of `gs` by full eigendecomposition.
pub fn heat_kernel(gs: &GroundState, dt: f64) -> Result<HeatKernel> {
    gs.spectrum().heat_kernel(dt, gs.grid)
}
