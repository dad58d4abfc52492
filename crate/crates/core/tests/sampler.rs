use std::sync::Arc;

use gibbslab::model::{PairPotentialW, PotentialV};
use gibbslab::reference::{ReferenceChain, TimeGrid};
use gibbslab::rng::stream_rng;
use gibbslab::sampler::{dlr_chain, window_slots, Boundary, ChainConfig, GibbsChain, OracleBoundary, OracleInstance};
use gibbslab::spectral::SpaceGrid;
use gibbslab::stats::{histogram, ks_distance, total_variation};
use rand::Rng;

fn tiny(w: PairPotentialW, points: usize, n: usize) -> OracleInstance {
    let space = SpaceGrid::symmetric(1.0, points).unwrap();
    OracleInstance::new(&PotentialV::harmonic(1.0), space, TimeGrid::from_steps(n, 0.5).unwrap(), w, OracleBoundary::Smeared).unwrap()
}

#[test]
fn single_site_move_satisfies_detailed_balance() {
    // 3 states, 3 times: 27 configurations, random-scan single-site kernel
    let inst = tiny(PairPotentialW::nelson(1.0), 3, 1);
    let exact = inst.brute_force().unwrap();
    let mut chain = GibbsChain::from_indices(Arc::new(inst.chain.clone()), inst.w.clone(), inst.time, vec![1; 3], vec![false; 3], 0, 4, 0).unwrap();
    let code = |idx: &[usize]| idx.iter().fold(0, |a, &i| a * 3 + i);
    let mut flow = vec![vec![0.0f64; 27]; 27];
    let mut rng = stream_rng(4, 99);
    let draws = 400_000;
    for _ in 0..draws {
        let start = exact.sample(&mut rng);
        chain.set_indices(&start);
        let site = rng.random_range(0..3);
        chain.single_site(site).unwrap();
        flow[code(&start)][code(chain.indices())] += 1.0;
    }
    let mut worst: f64 = 0.0;
    for a in 0..27 {
        for b in (a + 1)..27 {
            let (fab, fba) = (flow[a][b], flow[b][a]);
            let sigma = (fab + fba).sqrt().max(1.0);
            worst = worst.max((fab - fba).abs() / sigma);
        }
    }
    assert!(worst < 5.0, "largest flow asymmetry {worst} sigma");
}

#[test]
fn zero_w_chain_reproduces_reference_marginals() {
    let (_, reference) = ReferenceChain::for_potential(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(5.0, 101).unwrap(), 0.25).unwrap();
    let time = TimeGrid::new(1.0, 0.25).unwrap();
    let cfg = ChainConfig { block_len: 3, seed: 12, ..Default::default() };
    let mut chain = GibbsChain::new(Arc::new(reference.clone()), PairPotentialW::zero(), time, Boundary::Smeared, &cfg).unwrap();
    let mut origin = Vec::new();
    chain.run(100, 100_000, |c| origin.push(c.indices()[time.n])).unwrap();
    let (single, block) = chain.stats();
    assert_eq!(single.accepted, single.proposed);
    assert_eq!(block.accepted, block.proposed);
    let ks = ks_distance(&histogram(origin, reference.points()), &reference.stationary_probs());
    assert!(ks < 0.01, "{ks}");
}

#[test]
fn pinned_equal_ends_are_time_symmetric() {
    let (_, reference) = ReferenceChain::for_potential(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(4.0, 81).unwrap(), 0.25).unwrap();
    let time = TimeGrid::new(1.0, 0.25).unwrap();
    let cfg = ChainConfig { block_len: 3, seed: 2, ..Default::default() };
    let mut chain = GibbsChain::new(Arc::new(reference.clone()), PairPotentialW::zero(), time, Boundary::Pinned { y: 1.0, z: 1.0 }, &cfg).unwrap();
    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    chain
        .run(100, 100_000, |c| {
            plus.push(c.indices()[time.n + 2]);
            minus.push(c.indices()[time.n - 2]);
        })
        .unwrap();
    let ks = ks_distance(&histogram(plus, reference.points()), &histogram(minus, reference.points()));
    assert!(ks < 0.01, "{ks}");
}

#[test]
fn distant_pins_follow_exact_bridge_means() {
    let (_, reference) = ReferenceChain::for_potential(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(4.0, 81).unwrap(), 0.25).unwrap();
    let time = TimeGrid::new(0.75, 0.25).unwrap();
    let (a, b) = (reference.grid.index_of(-2.0).unwrap(), reference.grid.index_of(2.0).unwrap());
    // exact marginals: (M^k e_a)(j) (M^{n-k} e_b)(j)
    let n = time.len() - 1;
    let m = reference.points();
    let unit = |i: usize| (0..m).map(|j| (j == i) as u8 as f64).collect::<Vec<f64>>();
    let exact_means: Vec<f64> = (1..n)
        .map(|k| {
            let l = reference.propagate(&unit(a), k);
            let r = reference.propagate(&unit(b), n - k);
            let wts: Vec<f64> = l.iter().zip(&r).map(|(x, y)| x * y).collect();
            let tot: f64 = wts.iter().sum();
            wts.iter().enumerate().map(|(j, w)| w * reference.x(j)).sum::<f64>() / tot
        })
        .collect();
    for pair in exact_means.windows(2) {
        assert!(pair[1] > pair[0]);
    }
    let cfg = ChainConfig { block_len: 2, seed: 3, ..Default::default() };
    let mut chain = GibbsChain::new(Arc::new(reference.clone()), PairPotentialW::zero(), time, Boundary::Pinned { y: -2.0, z: 2.0 }, &cfg).unwrap();
    let mut sums = vec![0.0; n - 1];
    let sweeps = 50_000;
    chain
        .run(100, sweeps, |c| {
            for k in 1..n {
                sums[k - 1] += c.positions()[k];
            }
        })
        .unwrap();
    for (s, e) in sums.iter().zip(&exact_means) {
        assert!((s / sweeps as f64 - e).abs() < 0.02, "{} vs {e}", s / sweeps as f64);
    }
}

#[test]
fn dlr_chain_matches_exact_kernel() {
    let time = TimeGrid::from_steps(3, 0.5).unwrap();
    let inst = OracleInstance::new(
        &PotentialV::harmonic(1.0),
        SpaceGrid::symmetric(2.0, 5).unwrap(),
        time,
        PairPotentialW::nelson(1.0),
        OracleBoundary::Smeared,
    )
    .unwrap();
    let s = 1.0;
    let outside = vec![0, 2, 1, 2, 3, 2, 4];
    let kernel = inst.dlr_kernel(s, &outside).unwrap();
    let (lo, hi) = window_slots(&time, s).unwrap();
    let mut chain = dlr_chain(Arc::new(inst.chain.clone()), inst.w.clone(), time, s, outside.clone(), 2, 8, 0).unwrap();
    let mut counts = vec![0.0; kernel.len()];
    let sweeps = 200_000;
    chain
        .run(100, sweeps, |c| {
            let code = (lo + 1..hi).fold(0, |a, k| a * 5 + c.indices()[k]);
            counts[code] += 1.0;
            assert_eq!(c.indices()[..=lo], outside[..=lo]);
            assert_eq!(c.indices()[hi..], outside[hi..]);
        })
        .unwrap();
    let emp: Vec<f64> = counts.iter().map(|c| c / sweeps as f64).collect();
    let tv = total_variation(&emp, &kernel);
    assert!(tv < 0.02, "{tv}");
}

#[test]
fn zero_w_partition_sum_factorizes() {
    for n in 1..=3 {
        let z = tiny(PairPotentialW::zero(), 3, n).brute_force().unwrap().z;
        assert!((z.ln()).abs() < 1e-13);
    }
}

#[test]
fn pinned_oracle_matches_pinned_chain() {
    let time = TimeGrid::from_steps(2, 0.5).unwrap();
    let space = SpaceGrid::symmetric(2.0, 5).unwrap();
    let w = PairPotentialW::nelson(0.5);
    let inst = OracleInstance::new(&PotentialV::harmonic(1.0), space, time, w.clone(), OracleBoundary::Pinned { y: 1, z: 3 }).unwrap();
    let exact = inst.brute_force().unwrap();
    let cfg = ChainConfig { block_len: 2, seed: 21, ..Default::default() };
    let mut chain = GibbsChain::new(Arc::new(inst.chain.clone()), w, time, Boundary::Pinned { y: -1.0, z: 1.0 }, &cfg).unwrap();
    let mut counts = vec![vec![0.0; 5]; 3];
    let sweeps = 200_000;
    chain
        .run(100, sweeps, |c| {
            for k in 0..3 {
                counts[k][c.indices()[k + 1]] += 1.0;
            }
        })
        .unwrap();
    for k in 0..3 {
        let emp: Vec<f64> = counts[k].iter().map(|c| c / sweeps as f64).collect();
        let tv = total_variation(&emp, &exact.marginal(k + 1));
        assert!(tv < 0.02, "slot {}: {tv}", k + 1);
    }
}

#[test]
fn low_acceptance_warns() {
    let (_, reference) = ReferenceChain::for_potential(&PotentialV::harmonic(1.0), &SpaceGrid::symmetric(4.0, 41).unwrap(), 0.5).unwrap();
    let time = TimeGrid::new(2.0, 0.5).unwrap();
    let cfg = ChainConfig { block_len: 8, seed: 1, ..Default::default() };
    let mut chain = GibbsChain::new(Arc::new(reference), PairPotentialW::nelson(-60.0), time, Boundary::Smeared, &cfg).unwrap();
    chain.burn_in(200).unwrap();
    assert!(chain.warnings.iter().any(|w| w.contains("reduce block length")), "{:?}", chain.warnings);
}
