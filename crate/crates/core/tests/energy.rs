use gibbslab::energy::{check_w2_on_paths, energy, energy_record, EnergyRegion};
use gibbslab::model::{step_counterexample_integrals, PairPotentialW, PotentialV};
use gibbslab::reference::{Path, ReferenceChain, TimeGrid};
use gibbslab::spectral::SpaceGrid;

/// `∫_{-T}^0 ds ∫_0^T dt 1/(1 + (t-s)²)` in closed form.
fn lorentz_square(t: f64) -> f64 {
    0.5 * (1.0 + t * t).ln() + 2.0 * t * ((2.0 * t).atan() - t.atan()) - 0.5 * ((1.0 + 4.0 * t * t) / (1.0 + t * t)).ln()
}

/// Same integral restricted to lags `u ≥ 2` (the shifted step potential along `x_t = t`).
fn lorentz_square_from_two(t: f64) -> f64 {
    // lag density min(u, 2T - u) on [2, 2T]
    let prim_lo = |u: f64| 0.5 * (1.0 + u * u).ln();
    let prim_hi = |u: f64| 2.0 * t * u.atan() - 0.5 * (1.0 + u * u).ln();
    if t <= 1.0 {
        return 0.0;
    }
    if t >= 2.0 {
        (prim_lo(t) - prim_lo(2.0)) + (prim_hi(2.0 * t) - prim_hi(t))
    } else {
        prim_hi(2.0 * t) - prim_hi(2.0)
    }
}

#[test]
fn step_counterexample_against_closed_form() {
    let w = PairPotentialW::step_counterexample(1.0);
    for t in [2.0, 4.0, 8.0] {
        let (direct, shifted) = step_counterexample_integrals(&w, t, 0.01).unwrap();
        assert!((direct + lorentz_square(t)).abs() < 1e-3, "T={t}: {direct} vs {}", -lorentz_square(t));
        // the step kills lags below 2 up to one grid cell of the indicator edge
        assert!((shifted + lorentz_square_from_two(t)).abs() < 2e-2, "T={t}: {shifted} vs {}", -lorentz_square_from_two(t));
    }
    // the unshifted integral grows like ln T
    let d8 = step_counterexample_integrals(&w, 8.0, 0.05).unwrap().0;
    let d64 = step_counterexample_integrals(&w, 64.0, 0.05).unwrap().0;
    assert!(d64 < d8 - 1.5);
}

#[test]
fn zero_w_satisfies_shift_inequality_trivially() {
    let tg = TimeGrid::new(4.0, 0.1).unwrap();
    let paths = vec![Path::from_fn(tg, |t| t.sin()), Path::from_fn(tg, |t| t)];
    let rep = check_w2_on_paths(&PairPotentialW::zero(), &paths, 2.0, &[0.5, 1.0, 2.0], 0.0, 0.0).unwrap();
    assert!(rep.violations.is_empty());
    assert_eq!((rep.fitted_c, rep.fitted_d), (0.0, 0.0));
}

#[test]
fn step_along_the_line_reports_shift_gaps() {
    // along x_t = t the step potential is not monotone in t; the gap stays finite
    let w = PairPotentialW::step_counterexample(1.0);
    let mut fitted = Vec::new();
    for t in [2.0, 4.0, 8.0] {
        let tg = TimeGrid::new(t + 4.0, 0.05).unwrap();
        let rep = check_w2_on_paths(&w, &[Path::from_fn(tg, |s| s)], t, &[1.0, 2.0, 4.0], 0.0, 0.0).unwrap();
        assert!(rep.fitted_c.is_finite() && rep.fitted_d.is_finite());
        fitted.push((rep.fitted_c, rep.fitted_d));
    }
    assert_eq!(fitted.len(), 3);
}

#[test]
fn nelson_square_energy_bounded_on_reference_paths() {
    let (_, chain) = ReferenceChain::for_potential(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(6.0, 121).unwrap(), 0.1).unwrap();
    let w = PairPotentialW::nelson(1.0);
    for p in chain.sample_ensemble(TimeGrid::new(3.0, 0.1).unwrap(), 5, 50).unwrap() {
        let rec = energy_record(&w, &p, EnergyRegion::Square { t: 3.0 }).unwrap();
        assert!(rec.value >= 0.0 && rec.value <= rec.bound.unwrap());
        let frame = energy(&w, &p, &EnergyRegion::Frame { s: 1.0, t: 3.0 }).unwrap();
        assert!(frame <= rec.value + 1e-12);
    }
}

#[test]
fn energy_record_serializes() {
    let p = Path::from_fn(TimeGrid::new(2.0, 0.5).unwrap(), |_| 0.0);
    let rec = energy_record(&PairPotentialW::nelson(1.0), &p, EnergyRegion::InfiniteFrame { s: 0.5, t_max: 2.0 }).unwrap();
    let s = serde_json::to_string(&rec).unwrap();
    assert!(s.contains("\"region\":{\"kind\":\"infinite_frame\""));
    assert!(s.contains("tail_interval"));
}
