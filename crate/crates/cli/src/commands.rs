use std::sync::Arc;

use anyhow::{bail, Context, Result};
use gibbslab::diagnostics::{
    fit_psi_tail, hitting_time_moment, path_growth_check, ratio_bound_check, tightness_profile, window_convergence_exact, window_convergence_mc,
};
use gibbslab::energy::{check_suffcond, check_w2_on_paths, doubled_energy, energy_record, DoubledPath, EnergyRegion};
use gibbslab::io::{write_ground_state, write_heat_kernel};
use gibbslab::model::{c_infinity, check_monotone_in_t, check_w2_sufficient, PairKind, PotentialKind, W2Mode};
use gibbslab::reference::{fkf_convergence, Path, ReferenceChain, TimeGrid};
use gibbslab::rng::stream_rng;
use gibbslab::sampler::{dlr_chain, window_slots, Boundary, ChainConfig, GibbsChain, MoveStats, OracleBoundary, OracleInstance, LOW_ACCEPTANCE};
use gibbslab::spectral::{ground_state_radial, solve_ground_state};
use gibbslab::stats::{histogram, ks_distance, total_variation};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{Check, Output, Report};

const RESIDUAL_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-3;
const EXACT_TOL: f64 = 1e-10;

fn closed_form_energy(cfg: &ExperimentConfig, spacing: f64) -> Option<f64> {
    match cfg.model.v.as_str() {
        "harmonic" => Some(0.5 * cfg.model.omega),
        "box" => {
            // Dirichlet ghosts sit one cell outside the box
            let l = 2.0 * cfg.grid.half_width + 2.0 * spacing;
            Some(std::f64::consts::PI.powi(2) / (2.0 * l * l))
        }
        "coulomb3d" => Some(-0.5 * cfg.model.charge.powi(2)),
        _ => None,
    }
}

pub fn solve_ground_state_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    let v = cfg.potential()?;
    let mut checks = Vec::new();
    if v.dim != 1 {
        let rgs = ground_state_radial(&v, cfg.grid.half_width, cfg.grid.points)?;
        let exact = closed_form_energy(cfg, rgs.grid.spacing());
        if let Some(e) = exact {
            checks.push(Check::new("ground_energy", (rgs.energy - e).abs() <= ENERGY_TOL, format!("E0 = {:.6}, closed form {e}", rgs.energy)));
        }
        let rows: Vec<Vec<f64>> = rgs.grid.xs().into_iter().zip(&rgs.psi).map(|(r, p)| vec![r, *p]).collect();
        out.table("_psi.csv", &["r", "psi"], &rows)?;
        let results = json!({ "dimension": 3, "energy": rgs.energy, "closed_form": exact, "r_max": rgs.grid.upper, "spacing": rgs.grid.spacing() });
        return Ok(Report { results, checks, warnings: Vec::new() });
    }
    let space = cfg.space()?;
    let gs = solve_ground_state(&v, &space)?;
    let spec = gs.spectrum();
    let dt = cfg.grid.dt;
    let k1 = spec.heat_kernel(dt, gs.grid)?;
    let k2 = spec.heat_kernel(2.0 * dt, gs.grid)?;
    let ck = (&k1.compose(&k1)?.matrix - &k2.matrix).abs().max();
    let eig = k1.eigen_residual(&gs.psi);
    let psi_min = gs.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let exact = closed_form_energy(cfg, space.spacing());
    if let Some(e) = exact {
        checks.push(Check::new("ground_energy", (gs.energy - e).abs() <= ENERGY_TOL, format!("E0 = {:.6}, closed form {e}", gs.energy)));
    }
    checks.push(Check::new("eigen_equation", eig <= RESIDUAL_TOL, format!("max |K psi - psi| = {eig:.3e}")));
    checks.push(Check::new("semigroup", ck <= RESIDUAL_TOL, format!("max |K_dt K_dt - K_2dt| = {ck:.3e}")));
    checks.push(Check::new("positivity", psi_min > 0.0, format!("min psi = {psi_min:.3e}")));
    let shifted = gs.shifted_potential(&v);
    let rows: Vec<Vec<f64>> = space
        .xs()
        .into_iter()
        .zip(&gs.psi)
        .map(|(x, p)| Ok(vec![x, *p, shifted.eval_1d(x)?]))
        .collect::<gibbslab::Result<_>>()?;
    out.table("_psi.csv", &["x", "psi", "v_shifted"], &rows)?;
    out.binary("_ground_state.bin", |w| write_ground_state(w, &gs))?;
    out.binary("_kernel.bin", |w| write_heat_kernel(w, &k1))?;
    let results = json!({
        "dimension": 1,
        "energy": gs.energy,
        "closed_form": exact,
        "operator_residual": gs.residual(),
        "eigen_residual": eig,
        "semigroup_residual": ck,
        "psi_min": psi_min,
        "psi_max": gs.psi_max(),
        "spacing": space.spacing(),
        "dt": dt,
    });
    Ok(Report { results, checks, warnings: Vec::new() })
}

#[derive(Serialize)]
struct TraceRecord {
    chain: usize,
    sweep: usize,
    energy: f64,
    x0: f64,
}

struct ChainRun {
    origin: Vec<usize>,
    trace: Vec<TraceRecord>,
    last: Path,
    single: MoveStats,
    block: MoveStats,
    warnings: Vec<String>,
}

fn run_chain(reference: &Arc<ReferenceChain>, cfg: &ExperimentConfig, time: TimeGrid, boundary: Boundary, k: usize) -> Result<ChainRun> {
    let w = cfg.pair()?;
    let c = ChainConfig { stream: k as u64, ..cfg.chain_config() };
    let mut chain = GibbsChain::new(reference.clone(), w, time, boundary, &c)?;
    let mid = time.n;
    let thin = cfg.run.thin;
    let mut origin = Vec::with_capacity(c.sweeps);
    let mut trace = Vec::new();
    let mut sweep = 0;
    chain.run(c.burnin, c.sweeps, |ch| {
        sweep += 1;
        origin.push(ch.indices()[mid]);
        if sweep % thin == 0 {
            trace.push(TraceRecord { chain: k, sweep, energy: ch.energy(), x0: ch.positions()[mid] });
        }
    })?;
    let (single, block) = chain.stats();
    let warnings = chain.warnings.iter().map(|s| format!("chain {k}: {s}")).collect();
    Ok(ChainRun { origin, trace, last: chain.state().path, single, block, warnings })
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

pub fn sample_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    let v = cfg.potential_1d()?;
    let w = cfg.pair()?;
    let (_, reference) = ReferenceChain::for_potential(&v, &cfg.space()?, cfg.grid.dt)?;
    let reference = Arc::new(reference);
    let time = cfg.time()?;
    let boundary = cfg.boundary();
    let runs: Vec<ChainRun> = (0..cfg.run.chains).into_par_iter().map(|k| run_chain(&reference, cfg, time, boundary, k)).collect::<Result<_>>()?;

    let mut checks = Vec::new();
    let worst = runs.iter().map(|r| r.single.rate()).fold(f64::INFINITY, f64::min);
    checks.push(Check::new("acceptance", worst >= LOW_ACCEPTANCE, format!("lowest single-site acceptance {worst:.4}")));
    let pooled = histogram(runs.iter().flat_map(|r| r.origin.iter().copied()), reference.points());
    let ks = ks_distance(&pooled, &reference.stationary_probs());
    if w.is_zero() && boundary == Boundary::Smeared {
        let tol = cfg.diagnostics.ks_tolerance;
        checks.push(Check::new("reference_marginal", ks <= tol, format!("KS(x_0, psi^2) = {ks:.4} (tolerance {tol})")));
    }
    let chains: Vec<_> = runs
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let (x_mean, x_var) = mean_var(r.origin.iter().map(|&i| reference.x(i)));
            let e_mean = r.trace.iter().map(|t| t.energy).sum::<f64>() / r.trace.len().max(1) as f64;
            json!({ "chain": k, "single_rate": r.single.rate(), "block_rate": r.block.rate(), "x0_mean": x_mean, "x0_var": x_var, "energy_mean": e_mean })
        })
        .collect();
    let (x_mean, x_var) = mean_var(runs.iter().flat_map(|r| r.origin.iter().map(|&i| reference.x(i))));
    let trace: Vec<&TraceRecord> = runs.iter().flat_map(|r| r.trace.iter()).collect();
    out.records(".jsonl", &trace)?;
    let last: Vec<Path> = runs.iter().map(|r| r.last.clone()).collect();
    out.paths("_paths", &last)?;
    let results = json!({
        "chains": chains,
        "x0_mean": x_mean,
        "x0_var": x_var,
        "ks_to_reference": ks,
        "slots": time.len(),
    });
    Ok(Report { results, checks, warnings: runs.into_iter().flat_map(|r| r.warnings).collect() })
}

fn oracle_instance(cfg: &ExperimentConfig, boundary: Boundary) -> Result<OracleInstance> {
    let space = cfg.oracle_space()?;
    let time = TimeGrid::from_steps(cfg.oracle.steps, cfg.oracle.dt)?;
    let ob = match boundary {
        Boundary::Smeared => OracleBoundary::Smeared,
        Boundary::Pinned { y, z } => OracleBoundary::Pinned {
            y: space.index_of(y).context("run.pin[0] must lie on the oracle grid")?,
            z: space.index_of(z).context("run.pin[1] must lie on the oracle grid")?,
        },
    };
    Ok(OracleInstance::new(&cfg.potential_1d()?, space, time, cfg.pair()?, ob)?)
}

fn oracle_chain_config(cfg: &ExperimentConfig, stream: u64) -> ChainConfig {
    ChainConfig { sweeps: cfg.oracle.sweeps, stream, ..cfg.chain_config() }
}

pub fn oracle_compare_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    let boundary = cfg.boundary();
    let inst = oracle_instance(cfg, boundary)?;
    let exact = inst.brute_force()?;
    let time = inst.time;
    let m = inst.chain.points();
    let c = oracle_chain_config(cfg, 0);
    let mut chain = GibbsChain::new(Arc::new(inst.chain.clone()), inst.w.clone(), time, boundary, &c)?;
    let mut counts = vec![vec![0.0; m]; time.len()];
    chain.run(c.burnin, c.sweeps, |ch| {
        for (slot, &i) in ch.indices().iter().enumerate() {
            counts[slot][i] += 1.0;
        }
    })?;
    let slots: Vec<_> = (0..time.len())
        .map(|s| {
            let emp: Vec<f64> = counts[s].iter().map(|c| c / c_sweeps(cfg)).collect();
            let ex = exact.marginal(s);
            let tv = total_variation(&emp, &ex);
            json!({ "slot": s, "time": time.time(s), "exact": ex, "empirical": emp, "tv": tv })
        })
        .collect();
    let worst = slots.iter().map(|s| s["tv"].as_f64().unwrap_or(f64::NAN)).fold(0.0f64, f64::max);
    let tol = cfg.oracle.tolerance;
    let checks = vec![
        Check::new("oracle_marginals", worst <= tol, format!("max TV over slots {worst:.4} (tolerance {tol})")),
        Check::new("partition_sum", exact.z.is_finite() && exact.z > 0.0, format!("Z = {:.6e}", exact.z)),
    ];
    out.records(".jsonl", &slots)?;
    let (single, block) = chain.stats();
    let results = json!({
        "states": inst.states(),
        "configurations": exact.len(),
        "z": exact.z,
        "max_tv": worst,
        "single_rate": single.rate(),
        "block_rate": block.rate(),
    });
    Ok(Report { results, checks, warnings: chain.warnings.clone() })
}

fn c_sweeps(cfg: &ExperimentConfig) -> f64 {
    cfg.oracle.sweeps as f64
}

pub fn dlr_test_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    let inst = oracle_instance(cfg, Boundary::Smeared)?;
    let exact = inst.brute_force()?;
    let time = inst.time;
    let s = cfg.oracle.s;
    let (lo, hi) = window_slots(&time, s).context("oracle.s")?;
    if hi <= lo + 1 {
        bail!("oracle.s: window ({lo}, {hi}) holds no free slot");
    }
    let m = inst.chain.points();
    let reference = Arc::new(inst.chain.clone());
    let mut rng = stream_rng(cfg.seed(), u64::MAX);
    let outsides: Vec<Vec<usize>> = (0..cfg.oracle.boundaries).map(|_| exact.sample(&mut rng)).collect();
    let rows: Vec<_> = outsides
        .par_iter()
        .enumerate()
        .map(|(b, outside)| -> Result<_> {
            let kernel = inst.dlr_kernel(s, outside)?;
            let cond = exact.conditional(lo, hi, outside)?;
            let gap = kernel.iter().zip(&cond).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
            let c = oracle_chain_config(cfg, b as u64);
            let mut chain = dlr_chain(reference.clone(), inst.w.clone(), time, s, outside.clone(), c.block_len, c.seed, c.stream)?;
            let mut counts = vec![0.0; kernel.len()];
            chain.run(c.burnin, c.sweeps, |ch| {
                let code = (lo + 1..hi).fold(0, |a, k| a * m + ch.indices()[k]);
                counts[code] += 1.0;
            })?;
            let emp: Vec<f64> = counts.iter().map(|v| v / c.sweeps as f64).collect();
            let tv = total_variation(&emp, &kernel);
            Ok(json!({ "boundary": b, "outside": outside, "kernel": kernel, "conditional": cond, "exact_gap": gap, "mcmc_tv": tv }))
        })
        .collect::<Result<_>>()?;
    let gap = rows.iter().map(|r| r["exact_gap"].as_f64().unwrap_or(f64::NAN)).fold(0.0f64, f64::max);
    let tv = rows.iter().map(|r| r["mcmc_tv"].as_f64().unwrap_or(f64::NAN)).fold(0.0f64, f64::max);
    let tol = cfg.oracle.tolerance;
    let checks = vec![
        Check::new("kernel_equals_conditional", gap <= EXACT_TOL, format!("max |kernel - conditional| = {gap:.3e}")),
        Check::new("local_chain", tv <= tol, format!("max TV(local chain, kernel) = {tv:.4} (tolerance {tol})")),
    ];
    out.records(".jsonl", &rows)?;
    let results = json!({ "window": [lo, hi], "boundaries": rows.len(), "max_exact_gap": gap, "max_mcmc_tv": tv });
    Ok(Report { results, checks, warnings: Vec::new() })
}

pub fn energy_check_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    let v = cfg.potential_1d()?;
    let w = cfg.pair()?;
    let (_, chain) = ReferenceChain::for_potential(&v, &cfg.space()?, cfg.grid.dt)?;
    let (t, s) = (cfg.grid.t, cfg.grid.s);
    let taus = &cfg.diagnostics.taus;
    let tau_max = taus.iter().copied().fold(0.0f64, f64::max);
    let tg = TimeGrid::new(t + tau_max, cfg.grid.dt).context("diagnostics.taus must be multiples of grid.dt")?;
    let paths = chain.sample_ensemble(tg, cfg.seed(), cfg.run.paths)?;
    let cinf = c_infinity(&w).ok();
    let mut warnings = Vec::new();
    if cinf.is_none() {
        warnings.push("C_inf diverges for this pair potential; a-priori bounds are skipped".to_string());
    }
    let records: Vec<_> = paths
        .par_iter()
        .enumerate()
        .map(|(k, p)| -> Result<_> {
            let square = energy_record(&w, p, EnergyRegion::Square { t })?;
            let frame = energy_record(&w, p, EnergyRegion::Frame { s, t })?;
            let infinite = if cinf.is_some() { Some(energy_record(&w, p, EnergyRegion::InfiniteFrame { s, t_max: tg.t_half })?) } else { None };
            let folded = doubled_energy(&w, &DoubledPath::from_path(&p.restrict(t)?), t)?;
            Ok(json!({ "path": k, "square": square, "frame": frame, "infinite_frame": infinite, "folded": folded }))
        })
        .collect::<Result<_>>()?;
    let field = |r: &serde_json::Value, a: &str, b: &str| r[a][b].as_f64();
    let mut fold_gap: f64 = 0.0;
    let mut square_excess = f64::NEG_INFINITY;
    let mut frame_excess = f64::NEG_INFINITY;
    for r in &records {
        let sq = field(r, "square", "value").unwrap_or(f64::NAN);
        fold_gap = fold_gap.max((sq - r["folded"].as_f64().unwrap_or(f64::NAN)).abs() / sq.abs().max(1.0));
        if let (Some(b), Some(fb)) = (field(r, "square", "bound"), field(r, "frame", "bound")) {
            square_excess = square_excess.max(sq.abs() - b);
            frame_excess = frame_excess.max(field(r, "frame", "value").unwrap_or(f64::NAN).abs() - fb);
        }
    }
    let mut checks = vec![Check::new("fold_identity", fold_gap <= EXACT_TOL, format!("max relative |H_T - folded H_T| = {fold_gap:.3e}"))];
    let budget = cinf.map(|c| 12.0 * c);
    let shift = check_w2_on_paths(&w, &paths, t, taus, budget.unwrap_or(0.0), 0.0)?;
    let suff = check_suffcond(&w, &paths, t, taus)?;
    if let Some(b) = budget {
        checks.push(Check::new("square_bound", square_excess <= 1e-12, format!("max |H_T| - 2T C_inf = {square_excess:.4}")));
        checks.push(Check::new("frame_bound", frame_excess <= 1e-12, format!("max |H_frame| - 4S C_inf = {frame_excess:.4}")));
        checks.push(Check::new(
            "shift_budget",
            shift.violations.is_empty(),
            format!("{} violations of H_T(x) <= H_T(shifted x) + {b:.4} tau", shift.violations.len()),
        ));
    }
    out.records(".jsonl", &records)?;
    let gap_rows: Vec<Vec<f64>> = shift.gaps.iter().map(|g| g.clone()).collect();
    let header: Vec<String> = taus.iter().map(|t| format!("gap_tau_{t}")).collect();
    out.table("_shift_gaps.csv", &header.iter().map(|s| s.as_str()).collect::<Vec<_>>(), &gap_rows)?;
    let results = json!({
        "paths": paths.len(),
        "c_infinity": cinf,
        "fold_gap": fold_gap,
        "shift": { "taus": taus, "fitted_c": shift.fitted_c, "fitted_d": shift.fitted_d, "violations": shift.violations.len() },
        "suffcond": { "fitted_l": suff.fitted_l, "fitted_m": suff.fitted_m },
    });
    Ok(Report { results, checks, warnings })
}

pub fn diagnose_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    let v = cfg.potential_1d()?;
    let w = cfg.pair()?;
    let d = &cfg.diagnostics;
    let (gs, chain) = ReferenceChain::for_potential(&v, &cfg.space()?, cfg.grid.dt)?;
    let reference = Arc::new(chain);
    let mut results = serde_json::Map::new();
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let wants = |r: &str| d.reports.iter().any(|x| x == r);

    if wants("hitting") {
        let start = (d.hitting_start[0], d.hitting_start[1]);
        let rep = hitting_time_moment(&reference, &v, start, d.hitting_c, d.hitting_gamma, d.hitting_horizon, d.hitting_samples, cfg.seed())?;
        let lhs = rep.estimate + rep.tail_bound + d.z * rep.std_error;
        checks.push(Check::new("hitting_moment", lhs <= rep.rhs, format!("E[e^(C tau)] = {:.4} +- {:.4}, bound {:.4}", rep.estimate, rep.std_error, rep.rhs)));
        results.insert("hitting".into(), serde_json::to_value(&rep)?);
    }
    if wants("ratio") {
        let rep = ratio_bound_check(&v, cfg.oracle_space()?, cfg.oracle.dt, &w, &d.ratio_ns, d.ratio_r)?;
        let trivial = matches!(w.kind, PairKind::Zero | PairKind::Constant { .. });
        let unit = rep.m_hat.iter().fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
        let pass = rep.bounded && rep.route_gap <= EXACT_TOL && (!trivial || unit <= 1e-12);
        checks.push(Check::new("ratio_bound", pass, format!("M_hat {:?}, route gap {:.2e}", rep.m_hat, rep.route_gap)));
        results.insert("ratio".into(), serde_json::to_value(&rep)?);
    }
    if wants("fkf") {
        let f: Vec<f64> = gs.grid.xs().iter().map(|x| x * x).collect();
        let (residuals, order) = fkf_convergence(&gs, &v, d.fkf_t, &f, &d.fkf_dts)?;
        checks.push(Check::new("feynman_kac_order", order >= 2.0 - d.fkf_order_tol, format!("residuals [{}], order {order:.3}", residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(", "))));
        results.insert("fkf".into(), json!({ "dts": d.fkf_dts, "residuals": residuals, "order": order }));
    }
    if wants("tightness") {
        let rep = tightness_profile(reference.clone(), &gs, &w, &d.t_ladder, &d.r_list, &cfg.chain_config(), d.z)?;
        checks.push(Check::new(
            "tightness",
            rep.holds_all && rep.trend_p >= 0.05,
            format!("K_hat {:.4}, trend p = {:.3}", rep.k_hat, rep.trend_p),
        ));
        warnings.extend(rep.warnings.iter().cloned());
        let rows: Vec<Vec<f64>> = rep.cells.iter().map(|c| vec![c.t, c.r, c.estimate, c.std_error, c.tail, c.flagged as u8 as f64]).collect();
        out.table("_tightness.csv", &["t", "r", "estimate", "std_error", "tail", "flagged"], &rows)?;
        results.insert("tightness".into(), serde_json::to_value(&rep)?);
    }
    if wants("window") {
        let exact = window_convergence_exact(&v, cfg.oracle_space()?, cfg.oracle.dt, &w, &d.ratio_ns, d.window_k)?;
        let mc = window_convergence_mc(reference.clone(), &w, &d.t_ladder, cfg.grid.s, &cfg.chain_config(), d.window_bins)?;
        checks.push(Check::new("window_exact", exact.strictly_decreasing, format!("TV ladder {:?}", exact.distances)));
        checks.push(Check::new("window_mc", mc.nonincreasing, format!("KS ladder {:?}, noise {:?}", mc.ks, mc.ks_floor)));
        results.insert("window".into(), json!({ "exact": exact, "mc": mc }));
    }
    if wants("growth") {
        let fit = fit_psi_tail(&gs, d.growth_s, 1.0, 1e-10)?;
        let gamma = d.growth_factor / fit.beta;
        let tg = TimeGrid::new(d.growth_t, cfg.grid.dt)?;
        let paths = reference.sample_ensemble(tg, cfg.seed(), d.growth_paths)?;
        let rep = path_growth_check(&paths, &reference, &gs, d.growth_s, gamma, 10_000, d.z)?;
        let expect = d.growth_factor > 1.0;
        checks.push(Check::new(
            "path_growth",
            rep.fit_ok && rep.within_ci && rep.summable == expect,
            format!("beta_hat {:.4}, term slope {:.3}, summable {}", fit.beta, rep.term_slope, rep.summable),
        ));
        results.insert("growth".into(), serde_json::to_value(&rep)?);
    }
    Ok(Report { results: serde_json::Value::Object(results), checks, warnings })
}

/// JSON has no infinities; those are written as `"inf"` / `"-inf"`.
fn number_or_label(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

const MONOTONE_PAIRS: [(f64, f64); 5] = [(0.0, 0.0), (0.0, 1.0), (-1.0, 2.0), (0.5, -3.0), (2.0, 2.5)];

pub fn conditions_cmd(cfg: &ExperimentConfig, _out: &mut Output) -> Result<Report> {
    let v = cfg.potential()?;
    let w = cfg.pair()?;
    let ts: Vec<f64> = (0..400).map(|k| k as f64 * 0.05).collect();
    let mono = check_monotone_in_t(&w, &MONOTONE_PAIRS, &ts)?;
    let cinf = c_infinity(&w);
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let (finite_i, monotone) = match &cinf {
        Ok(_) => (Some(check_w2_sufficient(&v, &w, W2Mode::FiniteI)?), Some(check_w2_sufficient(&v, &w, W2Mode::Monotone)?)),
        Err(e) => {
            warnings.push(format!("C_inf: {e}"));
            (None, None)
        }
    };
    if mono.monotone != w.monotone_in_t() {
        warnings.push(format!("sampled monotonicity {} disagrees with the catalog flag {}", mono.monotone, w.monotone_in_t()));
    }
    let holds = finite_i.as_ref().is_some_and(|r| r.holds) || monotone.as_ref().is_some_and(|r| r.holds);
    checks.push(Check::new(
        "w2_sufficient",
        holds,
        match (&finite_i, &monotone) {
            (Some(a), Some(b)) => format!("alpha = {}, 8 C_inf = {:.4} ({}), 12 C_inf = {:.4} with monotone W ({})", a.alpha, a.threshold, a.holds, b.threshold, b.holds),
            _ => "C_inf is not finite".to_string(),
        },
    ));
    let kind = match &v.kind {
        PotentialKind::Harmonic { .. } => "harmonic",
        PotentialKind::DirichletBoxZero => "box",
        PotentialKind::Coulomb3D { .. } => "coulomb3d",
        PotentialKind::UserTable(_) => "table",
    };
    let results = json!({
        "potential": kind,
        "alpha": number_or_label(v.alpha()),
        "c_infinity": cinf.ok(),
        "monotone": mono.monotone,
        "monotone_witness": mono.witness,
        "w2_finite_i": finite_i,
        "w2_monotone": monotone,
    });
    Ok(Report { results, checks, warnings })
}
