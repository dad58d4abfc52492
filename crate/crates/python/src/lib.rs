//! Python bindings: potentials, ground states, the reference chain, Gibbs
//! chains, energies and the exact oracle.

use std::sync::Arc;

use gibbslab::energy::{self, DoubledPath, EnergyRegion};
use gibbslab::model::{self, PairPotentialW, PotentialV, W2Mode};
use gibbslab::reference::{Path, ReferenceChain, TimeGrid};
use gibbslab::sampler::{Boundary, ChainConfig, GibbsChain, OracleBoundary, OracleInstance};
use gibbslab::spectral::{self, SpaceGrid};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: gibbslab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Potential", module = "gibbslab", frozen)]
struct PyPotential {
    inner: PotentialV,
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    #[pyo3(signature = (omega = 1.0))]
    fn harmonic(omega: f64) -> Self {
        Self { inner: PotentialV::harmonic(omega) }
    }

    /// `V = 0` inside the grid box.
    #[staticmethod]
    fn box_zero() -> Self {
        Self { inner: PotentialV::box_zero() }
    }

    #[staticmethod]
    #[pyo3(signature = (charge = 1.0))]
    fn coulomb3d(charge: f64) -> Self {
        Self { inner: PotentialV::coulomb3d(charge) }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Declared floor at infinity (`inf` when confining).
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn __call__(&self, x: f64) -> PyResult<f64> {
        if self.inner.dim == 1 {
            self.inner.eval_1d(x).map_err(err)
        } else {
            self.inner.eval_radial(x.abs()).map_err(err)
        }
    }

    fn __repr__(&self) -> String {
        format!("Potential({:?}, dim={})", self.inner.kind, self.inner.dim)
    }
}

#[pyclass(name = "PairPotential", module = "gibbslab", frozen)]
struct PyPair {
    inner: PairPotentialW,
}

#[pymethods]
impl PyPair {
    #[staticmethod]
    fn zero() -> Self {
        Self { inner: PairPotentialW::zero() }
    }

    #[staticmethod]
    fn constant(value: f64) -> Self {
        Self { inner: PairPotentialW::constant(value) }
    }

    #[staticmethod]
    #[pyo3(signature = (coupling = 1.0))]
    fn nelson(coupling: f64) -> Self {
        Self { inner: PairPotentialW::nelson(coupling) }
    }

    #[staticmethod]
    #[pyo3(signature = (coupling = 1.0))]
    fn step(coupling: f64) -> Self {
        Self { inner: PairPotentialW::step_counterexample(coupling) }
    }

    fn __call__(&self, x: f64, y: f64, t: f64) -> f64 {
        self.inner.eval_1d(x, y, t)
    }

    fn envelope(&self, t: f64) -> f64 {
        self.inner.envelope(t)
    }

    /// `2 ∫_0^∞ w̄(t) dt`; raises when the envelope is not integrable.
    fn c_infinity(&self) -> PyResult<f64> {
        model::c_infinity(&self.inner).map_err(err)
    }

    #[getter]
    fn monotone_in_t(&self) -> bool {
        self.inner.monotone_in_t()
    }

    fn __repr__(&self) -> String {
        format!("PairPotential({:?}, coupling={})", self.inner.kind, self.inner.coupling)
    }
}

#[pyclass(name = "GroundState", module = "gibbslab", frozen)]
struct PyGroundState {
    inner: spectral::GroundState,
}

#[pymethods]
impl PyGroundState {
    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.inner.psi.clone()
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.grid.xs()
    }

    /// `max |H ψ - E ψ|` on the grid.
    fn residual(&self) -> f64 {
        self.inner.residual()
    }

    /// `h`-weighted heat kernel `e^{-dt (H - E0)}` as nested rows.
    fn heat_kernel(&self, dt: f64) -> PyResult<Vec<Vec<f64>>> {
        let k = spectral::heat_kernel(&self.inner, dt).map_err(err)?;
        Ok(k.matrix.row_iter().map(|r| r.iter().copied().collect()).collect())
    }
}

/// Ground state of `-Δ/2 + V` on `[-half_width, half_width]` (1D) or of the
/// radial problem on `[0, half_width]` (3D). Returns the energy only for 3D.
#[pyfunction]
#[pyo3(signature = (potential, half_width = 8.0, points = 801))]
fn solve_ground_state(py: Python<'_>, potential: &PyPotential, half_width: f64, points: usize) -> PyResult<Py<PyAny>> {
    if potential.inner.dim != 1 {
        let rgs = spectral::ground_state_radial(&potential.inner, half_width, points).map_err(err)?;
        return Ok(rgs.energy.into_pyobject(py)?.into_any().unbind());
    }
    let grid = SpaceGrid::symmetric(half_width, points).map_err(err)?;
    let gs = spectral::solve_ground_state(&potential.inner, &grid).map_err(err)?;
    Ok(Py::new(py, PyGroundState { inner: gs })?.into_any())
}

#[pyclass(name = "ReferenceChain", module = "gibbslab", frozen)]
struct PyReference {
    inner: Arc<ReferenceChain>,
}

#[pymethods]
impl PyReference {
    #[new]
    #[pyo3(signature = (potential, dt, half_width = 6.0, points = 121))]
    fn new(potential: &PyPotential, dt: f64, half_width: f64, points: usize) -> PyResult<Self> {
        let grid = SpaceGrid::symmetric(half_width, points).map_err(err)?;
        let (_, chain) = ReferenceChain::for_potential(&potential.inner, &grid, dt).map_err(err)?;
        Ok(Self { inner: Arc::new(chain) })
    }

    #[getter]
    fn xs(&self) -> Vec<f64> {
        self.inner.grid.xs()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    /// `ψ0² h` on the grid.
    fn stationary_probs(&self) -> Vec<f64> {
        self.inner.stationary_probs()
    }

    #[pyo3(signature = (t_half, seed, stream = 0))]
    fn sample_path(&self, t_half: f64, seed: u64, stream: u64) -> PyResult<Vec<f64>> {
        let tg = TimeGrid::new(t_half, self.inner.dt).map_err(err)?;
        Ok(self.inner.sample_path(tg, seed, stream).map_err(err)?.positions)
    }

    fn sample_ensemble(&self, py: Python<'_>, t_half: f64, seed: u64, count: usize) -> PyResult<Vec<Vec<f64>>> {
        let tg = TimeGrid::new(t_half, self.inner.dt).map_err(err)?;
        let chain = self.inner.clone();
        let paths = py.detach(move || chain.sample_ensemble(tg, seed, count)).map_err(err)?;
        Ok(paths.into_iter().map(|p| p.positions).collect())
    }
}

#[pyclass(name = "GibbsChain", module = "gibbslab")]
struct PyGibbsChain {
    inner: GibbsChain,
}

#[pymethods]
impl PyGibbsChain {
    /// Chain over the Gibbs measure on `[-t_half, t_half]`. `pin = (y, z)`
    /// fixes both endpoints; otherwise the ends are free (smeared).
    #[new]
    #[pyo3(signature = (reference, pair, t_half, pin = None, block_len = 4, seed = 0, stream = 0))]
    fn new(reference: &PyReference, pair: &PyPair, t_half: f64, pin: Option<(f64, f64)>, block_len: usize, seed: u64, stream: u64) -> PyResult<Self> {
        let time = TimeGrid::new(t_half, reference.inner.dt).map_err(err)?;
        let boundary = match pin {
            Some((y, z)) => Boundary::Pinned { y, z },
            None => Boundary::Smeared,
        };
        let cfg = ChainConfig { block_len, seed, stream, ..Default::default() };
        let inner = GibbsChain::new(reference.inner.clone(), pair.inner.clone(), time, boundary, &cfg).map_err(err)?;
        Ok(Self { inner })
    }

    /// Run `sweeps` sweeps, returning `x` at `t` after each one.
    #[pyo3(signature = (sweeps, t = 0.0))]
    fn run(&mut self, sweeps: usize, t: f64) -> PyResult<Vec<f64>> {
        let slot = self.inner.time().slot(t).map_err(err)?;
        let mut out = Vec::with_capacity(sweeps);
        self.inner.run(0, sweeps, |c| out.push(c.positions()[slot])).map_err(err)?;
        Ok(out)
    }

    #[getter]
    fn positions(&self) -> Vec<f64> {
        self.inner.positions().to_vec()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.time().times()
    }

    /// Current interaction energy `H`.
    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy()
    }

    /// `(single-site, block)` acceptance rates.
    #[getter]
    fn acceptance(&self) -> (f64, f64) {
        let (s, b) = self.inner.stats();
        (s.rate(), b.rate())
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }
}

fn region(kind: &str, t: f64, s: Option<f64>) -> PyResult<EnergyRegion> {
    let need_s = || s.ok_or_else(|| PyValueError::new_err(format!("region {kind:?} needs s")));
    Ok(match kind {
        "square" => EnergyRegion::Square { t },
        "frame" => EnergyRegion::Frame { s: need_s()?, t },
        "infinite_frame" => EnergyRegion::InfiniteFrame { s: need_s()?, t_max: t },
        other => return Err(PyValueError::new_err(format!("unknown region {other:?}; expected square, frame or infinite_frame"))),
    })
}

/// `-∫∫ W` over a region for a path sampled on the symmetric grid of step `dt`.
#[pyfunction]
#[pyo3(signature = (pair, path, dt, t, region_kind = "square", s = None))]
fn path_energy(pair: &PyPair, path: Vec<f64>, dt: f64, t: f64, region_kind: &str, s: Option<f64>) -> PyResult<f64> {
    let n = path.len().saturating_sub(1) / 2;
    let p = Path::new(TimeGrid::from_steps(n, dt).map_err(err)?, path).map_err(err)?;
    energy::energy(&pair.inner, &p, &region(region_kind, t, s)?).map_err(err)
}

/// The same square energy through the folded (doubled) path.
#[pyfunction]
fn folded_energy(pair: &PyPair, path: Vec<f64>, dt: f64, t: f64) -> PyResult<f64> {
    let n = path.len().saturating_sub(1) / 2;
    let p = Path::new(TimeGrid::from_steps(n, dt).map_err(err)?, path).map_err(err)?;
    energy::doubled_energy(&pair.inner, &DoubledPath::from_path(&p.restrict(t).map_err(err)?), t).map_err(err)
}

/// `C_inf`, monotonicity in `t` and both sufficient shift conditions.
#[pyfunction]
fn conditions<'py>(py: Python<'py>, potential: &PyPotential, pair: &PyPair) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", potential.inner.alpha())?;
    d.set_item("monotone", pair.inner.monotone_in_t())?;
    match model::c_infinity(&pair.inner) {
        Ok(c) => {
            d.set_item("c_infinity", c)?;
            for (key, mode) in [("w2_finite_i", W2Mode::FiniteI), ("w2_monotone", W2Mode::Monotone)] {
                d.set_item(key, model::check_w2_sufficient(&potential.inner, &pair.inner, mode).map_err(err)?.holds)?;
            }
        }
        Err(_) => d.set_item("c_infinity", py.None())?,
    }
    Ok(d)
}

/// Exact enumeration of a tiny smeared instance: `(Z, marginals per slot)`.
#[pyfunction]
#[pyo3(signature = (potential, pair, half_width = 2.0, points = 5, dt = 0.5, steps = 2))]
fn oracle(py: Python<'_>, potential: &PyPotential, pair: &PyPair, half_width: f64, points: usize, dt: f64, steps: usize) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let space = SpaceGrid::symmetric(half_width, points).map_err(err)?;
    let time = TimeGrid::from_steps(steps, dt).map_err(err)?;
    let (v, w) = (potential.inner.clone(), pair.inner.clone());
    py.detach(move || {
        let inst = OracleInstance::new(&v, space, time, w, OracleBoundary::Smeared)?;
        let exact = inst.brute_force()?;
        Ok((exact.z, (0..time.len()).map(|s| exact.marginal(s)).collect()))
    })
    .map_err(err)
}

#[pymodule(name = "gibbslab")]
pub fn gibbslab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotential>()?;
    m.add_class::<PyPair>()?;
    m.add_class::<PyGroundState>()?;
    m.add_class::<PyReference>()?;
    m.add_class::<PyGibbsChain>()?;
    m.add_function(wrap_pyfunction!(solve_ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(path_energy, m)?)?;
    m.add_function(wrap_pyfunction!(folded_energy, m)?)?;
    m.add_function(wrap_pyfunction!(conditions, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
