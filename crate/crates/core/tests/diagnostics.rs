use gibbslab::diagnostics::{hitting_time_moment, psi_tail, ratio_bound_check, hitting_radius, window_convergence_exact};
use gibbslab::model::{PairPotentialW, PotentialV};
use gibbslab::reference::{sde_simulate, sde_simulate_radial, ReferenceChain};
use gibbslab::spectral::{ground_state_radial, solve_ground_state, SpaceGrid};

fn harmonic_chain(dt: f64) -> ReferenceChain {
    ReferenceChain::for_potential(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(6.0, 121).unwrap(), dt).unwrap().1
}

#[test]
fn hitting_from_inside_the_ball_is_immediate() {
    let chain = harmonic_chain(0.1);
    let v = PotentialV::harmonic(1.0);
    let rep = hitting_time_moment(&chain, &v, (0.0, 0.5), 1.0, None, 20.0, 200, 1).unwrap();
    assert_eq!(rep.estimate, 1.0);
    assert_eq!(rep.truncated, 0);
    assert!(rep.estimate + rep.tail_bound <= rep.rhs);
}

#[test]
fn hitting_moment_with_zero_rate_is_one() {
    let chain = harmonic_chain(0.1);
    let rep = hitting_time_moment(&chain, &PotentialV::harmonic(1.0), (4.0, -4.0), 0.0, Some(1.0), 5.0, 100, 2).unwrap();
    assert_eq!(rep.estimate, 1.0);
    assert_eq!(rep.tail_bound, 0.0);
}

#[test]
fn hitting_moment_grows_with_distance() {
    let chain = harmonic_chain(0.1);
    let v = PotentialV::harmonic(1.0);
    let near = hitting_time_moment(&chain, &v, (2.5, 0.0), 1.0, None, 40.0, 4000, 3).unwrap();
    let far = hitting_time_moment(&chain, &v, (4.5, -4.5), 1.0, None, 40.0, 4000, 3).unwrap();
    assert!(far.estimate > near.estimate);
    assert!(far.estimate + far.tail_bound <= far.rhs);
}

#[test]
fn radius_excludes_every_low_potential_point() {
    let grid = SpaceGrid::symmetric(6.0, 121).unwrap();
    let v = PotentialV::harmonic(1.0);
    for (c, g) in [(0.5, 1.0), (2.0, 1.0), (4.0, 2.0)] {
        let r = hitting_radius(&v, &grid, c, g).unwrap();
        for x in grid.xs() {
            if x.abs() * std::f64::consts::SQRT_2 > r + 1e-9 {
                assert!(v.eval_1d(x).unwrap() > c + g);
            }
        }
    }
}

#[test]
fn zero_and_constant_w_ratio_is_one() {
    let space = SpaceGrid::symmetric(2.0, 5).unwrap();
    let v = PotentialV::harmonic(1.0);
    for w in [PairPotentialW::zero(), PairPotentialW::constant(0.7)] {
        let rep = ratio_bound_check(&v, space, 0.5, &w, &[1, 2], 1.0).unwrap();
        for m in &rep.m_hat {
            assert!((m - 1.0).abs() < 1e-12, "{m}");
        }
        assert!(rep.route_gap < 1e-10);
        assert!(rep.bounded);
    }
}

#[test]
fn zero_w_window_law_does_not_depend_on_volume() {
    let ladder = window_convergence_exact(&PotentialV::harmonic(1.0), SpaceGrid::symmetric(2.0, 5).unwrap(), 0.5, &PairPotentialW::zero(), &[1, 2, 3], 1).unwrap();
    for d in &ladder.distances {
        assert!(*d < 1e-13, "{d}");
    }
}

#[test]
fn psi_tail_is_monotone() {
    let gs = solve_ground_state(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(6.0, 241).unwrap()).unwrap();
    let tails: Vec<f64> = [0.0, 0.5, 1.0, 2.0, 4.0].iter().map(|&r| psi_tail(&gs, r)).collect();
    for p in tails.windows(2) {
        assert!(p[1] < p[0]);
    }
    assert_eq!(psi_tail(&gs, 10.0), 0.0);
}

#[test]
fn diffusion_reaches_ground_state_variance() {
    // harmonic ground-state diffusion is Ornstein-Uhlenbeck with variance 1/2
    let gs = solve_ground_state(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(6.0, 601).unwrap()).unwrap();
    let traj = sde_simulate(&gs, 4000.0, 0.005, 0.0, 1.0, 5, 0).unwrap();
    let xs = &traj.positions[2000..];
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 0.05, "{mean}");
    assert!((var - 0.5).abs() < 0.05, "{var}");
}

#[test]
fn radial_drift_pulls_toward_the_nucleus() {
    let rgs = ground_state_radial(&PotentialV::coulomb3d(1.0), 20.0, 2000).unwrap();
    let traj = sde_simulate_radial(&rgs, 5.0, 0.01, [3.0, 0.0, 0.0], 0.0, 0, 0).unwrap();
    let end = traj.positions.last().unwrap();
    // drift ψ'/ψ = -1 for ψ ∝ e^{-r}
    assert!((end[0] - (3.0 - 5.0f64).max(0.0)).abs() < 0.1, "{end:?}");
    assert_eq!(end[1], 0.0);
}
