use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gibbslab::model::{load_table_1d, load_table_2d, PairPotentialW, PotentialV, DEFAULT_COULOMB_CLAMP};
use gibbslab::reference::TimeGrid;
use gibbslab::sampler::{Boundary, ChainConfig};
use gibbslab::spectral::SpaceGrid;
use serde::{Deserialize, Serialize};

/// Environment variable that overrides `output.dir`.
pub const OUT_ENV: &str = "GIBBSLAB_OUT";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub run: RunConfig,
    pub oracle: OracleConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `harmonic`, `box`, `coulomb3d` or `table`.
    pub v: String,
    pub omega: f64,
    pub charge: f64,
    /// Value used at the Coulomb singularity.
    pub clamp: f64,
    pub v_table: Option<PathBuf>,
    /// Declared liminf of a tabulated V at infinity.
    pub v_alpha: f64,
    /// `zero`, `constant`, `nelson`, `step` or `table`.
    pub w: String,
    pub lambda: f64,
    /// Value of the constant pair potential.
    pub w_value: f64,
    pub w_table: Option<PathBuf>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            v: "harmonic".into(),
            omega: 1.0,
            charge: 1.0,
            clamp: DEFAULT_COULOMB_CLAMP,
            v_table: None,
            v_alpha: 0.0,
            w: "nelson".into(),
            lambda: 1.0,
            w_value: 0.0,
            w_table: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Space box `[-half_width, half_width]` (radial: `[0, half_width]`).
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
    /// Half-length `T` of the time interval.
    pub t: f64,
    /// Half-width `S` of the inner window.
    pub s: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_width: 8.0, points: 321, dt: 0.1, t: 4.0, s: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sweeps: usize,
    pub burnin: usize,
    pub block_len: usize,
    pub seed: Option<u64>,
    pub chains: usize,
    /// `smeared` or `pinned`.
    pub boundary: String,
    pub pin: [f64; 2],
    /// Record every `thin`-th sweep.
    pub thin: usize,
    /// Reference paths drawn by `energy-check`.
    pub paths: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sweeps: 10_000,
            burnin: 1_000,
            block_len: 4,
            seed: None,
            chains: 4,
            boundary: "smeared".into(),
            pin: [0.0, 0.0],
            thin: 10,
            paths: 1_000,
        }
    }
}

/// Small fully enumerable instance used by `oracle-compare`, `dlr-test` and
/// the exact diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub half_width: f64,
    pub points: usize,
    pub dt: f64,
    /// Time slots are `-steps..=steps`.
    pub steps: usize,
    pub s: f64,
    pub sweeps: usize,
    /// Outside configurations drawn by `dlr-test`.
    pub boundaries: usize,
    /// TV tolerance for MCMC against exact laws.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { half_width: 2.0, points: 5, dt: 0.5, steps: 2, s: 0.5, sweeps: 200_000, boundaries: 3, tolerance: 0.02 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Any of `hitting`, `ratio`, `fkf`, `tightness`, `window`, `growth`.
    pub reports: Vec<String>,
    pub t_ladder: Vec<f64>,
    pub r_list: Vec<f64>,
    /// Normal quantile for confidence bands.
    pub z: f64,
    pub ks_tolerance: f64,
    pub taus: Vec<f64>,
    pub hitting_c: f64,
    pub hitting_gamma: Option<f64>,
    pub hitting_start: [f64; 2],
    pub hitting_horizon: f64,
    pub hitting_samples: usize,
    pub ratio_ns: Vec<usize>,
    pub ratio_r: f64,
    pub fkf_t: f64,
    pub fkf_dts: Vec<f64>,
    pub fkf_order_tol: f64,
    pub window_k: usize,
    pub window_bins: usize,
    pub growth_t: f64,
    pub growth_paths: usize,
    pub growth_s: f64,
    /// `γ = growth_factor / β̂` where `β̂` is the fitted ψ0 tail rate.
    pub growth_factor: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            reports: vec!["hitting".into(), "ratio".into(), "fkf".into()],
            t_ladder: vec![2.0, 4.0, 8.0],
            r_list: vec![1.0, 2.0, 3.0],
            z: 2.0,
            ks_tolerance: 0.02,
            taus: vec![0.5, 1.0, 2.0],
            hitting_c: 0.2,
            hitting_gamma: None,
            hitting_start: [2.0, 2.0],
            hitting_horizon: 15.0,
            hitting_samples: 20_000,
            ratio_ns: vec![1, 2, 3],
            ratio_r: 1.0,
            fkf_t: 1.0,
            fkf_dts: vec![0.2, 0.1, 0.05],
            fkf_order_tol: 0.05,
            window_k: 1,
            window_bins: 8,
            growth_t: 40.0,
            growth_paths: 2_000,
            growth_s: 1.0,
            growth_factor: 1.25,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Data formats besides the JSON summary: `csv`, `jsonl`, `bin`.
    pub formats: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec!["csv".into(), "jsonl".into()] }
    }
}

const REPORTS: [&str; 6] = ["hitting", "ratio", "fkf", "tightness", "window", "growth"];
const FORMATS: [&str; 3] = ["csv", "jsonl", "bin"];

fn positive(path: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{path}: must be positive and finite, got {v}");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).context("config is not valid TOML")?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| anyhow::anyhow!("{}: {}", e.path(), e.inner().message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        // table paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.model.v_table, &mut cfg.model.w_table].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        match m.v.as_str() {
            "harmonic" => positive("model.omega", m.omega)?,
            "box" => {}
            "coulomb3d" => {
                positive("model.charge", m.charge)?;
                if !m.clamp.is_finite() {
                    bail!("model.clamp: must be finite");
                }
            }
            "table" if m.v_table.is_none() => bail!("model.v_table: required when model.v = \"table\""),
            "table" => {}
            other => bail!("model.v: unknown potential {other:?}; expected harmonic, box, coulomb3d or table"),
        }
        match m.w.as_str() {
            "zero" | "constant" | "nelson" | "step" => {}
            "table" if m.w_table.is_none() => bail!("model.w_table: required when model.w = \"table\""),
            "table" => {}
            other => bail!("model.w: unknown pair potential {other:?}; expected zero, constant, nelson, step or table"),
        }
        if !m.lambda.is_finite() {
            bail!("model.lambda: must be finite");
        }
        let g = &self.grid;
        positive("grid.half_width", g.half_width)?;
        positive("grid.dt", g.dt)?;
        positive("grid.t", g.t)?;
        if g.points < 3 {
            bail!("grid.points: need at least 3, got {}", g.points);
        }
        TimeGrid::new(g.t, g.dt).map_err(|e| anyhow::anyhow!("grid.t / grid.dt: {e}"))?;
        if !(g.s > 0.0 && g.s < g.t) {
            bail!("grid.s: need 0 < s < t, got s = {} with t = {}", g.s, g.t);
        }
        let r = &self.run;
        if r.seed.is_none() {
            bail!("run.seed: required");
        }
        if r.chains == 0 {
            bail!("run.chains: need at least one chain");
        }
        if r.thin == 0 {
            bail!("run.thin: must be at least 1");
        }
        if r.sweeps == 0 {
            bail!("run.sweeps: must be at least 1");
        }
        if r.paths == 0 {
            bail!("run.paths: must be at least 1");
        }
        match r.boundary.as_str() {
            "smeared" | "pinned" => {}
            other => bail!("run.boundary: unknown boundary {other:?}; expected smeared or pinned"),
        }
        let o = &self.oracle;
        positive("oracle.half_width", o.half_width)?;
        positive("oracle.dt", o.dt)?;
        positive("oracle.tolerance", o.tolerance)?;
        if o.points < 3 {
            bail!("oracle.points: need at least 3, got {}", o.points);
        }
        if o.steps == 0 {
            bail!("oracle.steps: need at least 1");
        }
        let d = &self.diagnostics;
        for (k, rep) in d.reports.iter().enumerate() {
            if !REPORTS.contains(&rep.as_str()) {
                bail!("diagnostics.reports[{k}]: unknown report {rep:?}; expected one of {}", REPORTS.join(", "));
            }
        }
        for (k, f) in self.output.formats.iter().enumerate() {
            if !FORMATS.contains(&f.as_str()) {
                bail!("output.formats[{k}]: unknown format {f:?}; expected one of {}", FORMATS.join(", "));
            }
        }
        positive("diagnostics.z", d.z)?;
        positive("diagnostics.ks_tolerance", d.ks_tolerance)?;
        if d.fkf_dts.len() < 2 {
            bail!("diagnostics.fkf_dts: need at least two steps to fit an order");
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.run.seed.expect("validated")
    }

    pub fn potential(&self) -> Result<PotentialV> {
        let m = &self.model;
        Ok(match m.v.as_str() {
            "harmonic" => PotentialV::harmonic(m.omega),
            "box" => PotentialV::box_zero(),
            "coulomb3d" => PotentialV::coulomb3d(m.charge).with_clamp(Some(m.clamp)),
            "table" => {
                let path = m.v_table.as_ref().expect("validated");
                let table = load_table_1d(path).with_context(|| format!("model.v_table: {}", path.display()))?;
                PotentialV::table(1, table, m.v_alpha)
            }
            _ => unreachable!("validated"),
        })
    }

    pub fn pair(&self) -> Result<PairPotentialW> {
        let m = &self.model;
        Ok(match m.w.as_str() {
            "zero" => PairPotentialW::zero(),
            "constant" => PairPotentialW::constant(m.w_value),
            "nelson" => PairPotentialW::nelson(m.lambda),
            "step" => PairPotentialW::step_counterexample(m.lambda),
            "table" => {
                let path = m.w_table.as_ref().expect("validated");
                let table = load_table_2d(path).with_context(|| format!("model.w_table: {}", path.display()))?;
                PairPotentialW::table(table, m.lambda)
            }
            _ => unreachable!("validated"),
        })
    }

    /// One-dimensional potential for the path-space commands.
    pub fn potential_1d(&self) -> Result<PotentialV> {
        let v = self.potential()?;
        if v.dim != 1 {
            bail!("model.v: {:?} is three-dimensional; only solve-ground-state and conditions accept it", self.model.v);
        }
        Ok(v)
    }

    pub fn space(&self) -> Result<SpaceGrid> {
        Ok(SpaceGrid::symmetric(self.grid.half_width, self.grid.points)?)
    }

    pub fn time(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(self.grid.t, self.grid.dt)?)
    }

    pub fn oracle_space(&self) -> Result<SpaceGrid> {
        Ok(SpaceGrid::symmetric(self.oracle.half_width, self.oracle.points)?)
    }

    pub fn boundary(&self) -> Boundary {
        match self.run.boundary.as_str() {
            "pinned" => Boundary::Pinned { y: self.run.pin[0], z: self.run.pin[1] },
            _ => Boundary::Smeared,
        }
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            sweeps: self.run.sweeps,
            burnin: self.run.burnin,
            block_len: self.run.block_len,
            seed: self.seed(),
            stream: 0,
        }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }

    /// Output directory: `GIBBSLAB_OUT` wins over `output.dir`.
    pub fn resolve_out_dir(&mut self) {
        if let Some(dir) = std::env::var_os(OUT_ENV).filter(|d| !d.is_empty()) {
            self.output.dir = PathBuf::from(dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = ExperimentConfig::parse("[run]\nseed = 9\n").unwrap();
        assert_eq!(cfg.seed(), 9);
        assert_eq!(cfg.grid.points, 321);
        assert_eq!(cfg.boundary(), Boundary::Smeared);
        // the resolved config parses back to the same thing
        let again = ExperimentConfig::parse(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&cfg).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn table_paths_follow_the_config_file() {
        let dir = std::env::temp_dir().join(format!("gibbslab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("v.txt"), "0 0\n1 0.5\n2 2\n").unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "[model]\nv = \"table\"\nv_table = \"v.txt\"\n[run]\nseed = 1\n").unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.model.v_table.as_deref(), Some(dir.join("v.txt").as_path()));
        assert!((cfg.potential().unwrap().eval_1d(1.0).unwrap() - 0.5).abs() < 1e-12);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
