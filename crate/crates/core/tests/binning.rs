mod common;

use common::*;
use dirtycap::binningsim::{default_epsilon, simulate, BinningDesign, SimConfig, SimResult};
use dirtycap::channels::StateChannel;
use dirtycap::optimizer::SearchBudget;
use dirtycap::prob::CondPmf;
use dirtycap::singleuser;

/// `U = X xor S` uniform, `X` chosen so that `U` is independent of `S`.
fn xor_design(ch: &StateChannel) -> BinningDesign {
    let k = CondPmf::from_rows(vec![vec![0.5, 0.0, 0.0, 0.5], vec![0.0, 0.5, 0.5, 0.0]]).unwrap();
    BinningDesign::new(ch, &k, 2).unwrap()
}

fn run(ch: &StateChannel, d: &BinningDesign, rate: f64, n: usize, trials: usize, seed: u64) -> SimResult {
    let cfg = SimConfig {
        rate,
        excess: None,
        n,
        trials,
        seed,
        epsilon: None,
    };
    simulate(ch, d, &cfg).unwrap()
}

#[test]
fn same_seed_same_counts() {
    let ch = dirty_bsc(0.1);
    let d = xor_design(&ch);
    let a = run(&ch, &d, 0.4, 300, 120, 9);
    let b = run(&ch, &d, 0.4, 300, 120, 9);
    assert_eq!(a, b);
    assert_eq!(a.batches.iter().map(|b| b.trials).sum::<usize>(), 120);
    assert_eq!(a.batches.iter().map(|b| b.errors).sum::<usize>(), a.errors);
}

#[test]
fn default_excess_and_slack() {
    let ch = xor_channel();
    let d = xor_design(&ch);
    let r = run(&ch, &d, 0.5, 100, 10, 1);
    assert_eq!(r.epsilon, default_epsilon(2, 2, 2));
    assert!((r.excess - (d.info_us() + 3.0 * r.epsilon)).abs() < 1e-15);
}

#[test]
fn xor_below_capacity_with_fixed_excess() {
    let ch = xor_channel();
    let d = xor_design(&ch);
    let cfg = SimConfig {
        rate: 0.8,
        excess: Some(0.15),
        n: 2000,
        trials: 100,
        seed: 4,
        // R + R' = 0.95 needs a slack below the default to keep false matches rare
        epsilon: Some(0.005),
    };
    let r = simulate(&ch, &d, &cfg).unwrap();
    assert!(r.block_error_rate <= 0.1, "{}", r.block_error_rate);
}

#[test]
fn error_rate_grows_with_rate() {
    let ch = dirty_bsc(0.1);
    let d = xor_design(&ch);
    let trials = 200;
    let errs: Vec<f64> = [0.2, 0.4, 0.5, 0.6, 0.8]
        .iter()
        .map(|&r| run(&ch, &d, r, 1000, trials, 21).block_error_rate)
        .collect();
    for w in errs.windows(2) {
        let sigma = (0.25 / trials as f64).sqrt();
        assert!(w[1] >= w[0] - 2.0 * sigma, "{errs:?}");
    }
}

#[test]
fn supported_rate_tracks_computed_capacity() {
    let budget = SearchBudget::default();
    for (ch, name) in [(xor_channel(), "xor"), (dirty_bsc(0.1), "dirty bsc")] {
        let gp = singleuser::gp_capacity(&ch, &budget, Some(2)).unwrap();
        let d = BinningDesign::from_candidate(&ch, &gp.argmax).unwrap();
        let mut supported = 0.0f64;
        for i in 0..=15 {
            let r = gp.bits - 0.25 + 0.02 * i as f64;
            if run(&ch, &d, r, 5000, 200, 33).block_error_rate < 0.1 {
                supported = supported.max(r);
            }
        }
        assert!(supported <= gp.bits + 1e-9 && supported >= gp.bits - 0.15, "{name}: supported {supported}, gp {}", gp.bits);
    }
}
