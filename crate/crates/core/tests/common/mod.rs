#![allow(dead_code)]

use std::collections::HashMap;

use dirtycap::channels::{BcStateChannel, MacOutput, MacStateChannel, StateChannel};
use dirtycap::optimizer::stream_rng;
use dirtycap::prob::{CondPmf, Coord, JointPmf, Pmf};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, 0xACCE)
}

pub fn random_pmf(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

pub fn random_kernel(rng: &mut impl Rng, rows: usize, len: usize) -> CondPmf {
    CondPmf::from_rows((0..rows).map(|_| random_pmf(rng, len)).collect()).unwrap()
}

pub fn state_pair(p: &[f64], s1: usize, s2: usize) -> JointPmf {
    JointPmf::new(vec![Coord::new("S1", s1), Coord::new("S2", s2)], p.to_vec()).unwrap()
}

/// Binary inputs, states and output with random laws.
pub fn random_mac(rng: &mut impl Rng) -> MacStateChannel {
    let st = state_pair(&random_pmf(rng, 4), 2, 2);
    MacStateChannel::new(st, 2, 2, MacOutput::Scalar(2), random_kernel(rng, 16, 2)).unwrap()
}

/// Binary input, outputs and state (or `|S| = states`), random laws.
pub fn random_bc(rng: &mut impl Rng, states: usize) -> BcStateChannel {
    let st = Pmf::new(random_pmf(rng, states)).unwrap();
    BcStateChannel::new(st, 2, 2, 2, random_kernel(rng, 2 * states, 4)).unwrap()
}

pub fn xor_channel() -> StateChannel {
    StateChannel::deterministic(Pmf::uniform(2), 2, 2, |x, s| x ^ s).unwrap()
}

/// `Y = X xor S xor Z`, `S` uniform, `Z ~ Bern(p)`.
pub fn dirty_bsc(p: f64) -> StateChannel {
    StateChannel::from_fn(Pmf::uniform(2), 2, |x, s| {
        let mut r = vec![p, p];
        r[x ^ s] = 1.0 - p;
        r
    })
    .unwrap()
}

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Entropy of a marginal computed from scratch, for use as an oracle.
pub fn oracle_h(j: &JointPmf, names: &[&str]) -> f64 {
    let coords = j.coords();
    let pos: Vec<usize> = names
        .iter()
        .map(|n| coords.iter().position(|c| c.name == *n).expect("coordinate"))
        .collect();
    let sizes: Vec<usize> = coords.iter().map(|c| c.size).collect();
    let mut acc: HashMap<Vec<usize>, f64> = HashMap::new();
    for (flat, &p) in j.probs().iter().enumerate() {
        let mut digits = vec![0; sizes.len()];
        let mut r = flat;
        for k in (0..sizes.len()).rev() {
            digits[k] = r % sizes[k];
            r /= sizes[k];
        }
        *acc.entry(pos.iter().map(|&i| digits[i]).collect()).or_default() += p;
    }
    acc.values().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>() / std::f64::consts::LN_2
}

/// `I(A;B|C)` from [`oracle_h`].
pub fn oracle_mi(j: &JointPmf, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
    let cat = |x: &[&str], y: &[&str]| -> Vec<String> { x.iter().chain(y).map(|s| s.to_string()).collect() };
    let h = |v: Vec<String>| {
        let r: Vec<&str> = v.iter().map(|s| s.as_str()).collect();
        oracle_h(j, &r)
    };
    let abc: Vec<String> = a.iter().chain(b).chain(c).map(|s| s.to_string()).collect();
    h(cat(a, c)) + h(cat(b, c)) - h(abc) - h(cat(c, &[]))
}
