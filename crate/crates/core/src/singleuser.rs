//! Single-user capacities with state known at the transmitter.
//!
//! * [`gp_capacity`]: non-causal state at the transmitter only,
//!   `max I(U;Y) - I(U;S)` over `P_{U,X|S}`.
//! * [`csirt_capacity`]: state also known at the receiver,
//!   `max I(X;Y|S) = Σ_s P(s) C_s`.
//! * [`det_capacity`]: deterministic channels, `Σ_s P(s) log2 |f(·, s)(X)|`,
//!   where the two previous capacities coincide.

use std::sync::Arc;

use itertools::Itertools;

use crate::channels::{names, DetMap, StateChannel};
use crate::error::{Error, Result};
use crate::optimizer::{maximize, BlockSpec, CandidatePdf, MaxResult, PdfShape, SearchBudget};
use crate::prob::{io_mutual_info, CondPmf, Coord, JointPmf};

pub const U: &str = "U";

/// Stopping tolerance of [`blahut_arimoto`] on the capacity gap.
pub const BA_TOL: f64 = 1e-9;
const BA_MAX_ITERS: usize = 200_000;

/// Default auxiliary cardinality `|X||S| + 1`.
pub fn default_card_u(ch: &StateChannel) -> usize {
    ch.x_size() * ch.s_size() + 1
}

/// Search space `P_{U,X|S}` as one block.
pub fn gp_shape(ch: &StateChannel, card_u: usize) -> Arc<PdfShape> {
    PdfShape::new(vec![BlockSpec::new(
        "U,X|S",
        vec![Coord::new(names::S, ch.s_size())],
        vec![Coord::new(U, card_u), Coord::new(names::X, ch.x_size())],
    )])
}

/// Joint over `S, U, X, Y` for a candidate of [`gp_shape`].
pub fn gp_joint(ch: &StateChannel, cand: &CandidatePdf) -> Result<JointPmf> {
    ch.attach_output(&cand.apply(&ch.base())?)
}

/// `I(U;Y) - I(U;S)` without clamping.
pub fn gp_objective(joint: &JointPmf) -> Result<f64> {
    let mut info = joint.info();
    Ok(info.mi_raw(&[U], &[names::Y], &[])? - info.mi_raw(&[U], &[names::S], &[])?)
}

#[derive(Clone, Debug)]
pub struct GpCapacity {
    /// Best value found, never below 0.
    pub bits: f64,
    pub argmax: CandidatePdf,
    pub search: MaxResult,
}

/// Maximizes `I(U;Y) - I(U;S)` over `P_{U,X|S}` with `|U| = card_u`
/// (default [`default_card_u`]).
pub fn gp_capacity(ch: &StateChannel, budget: &SearchBudget, card_u: Option<usize>) -> Result<GpCapacity> {
    budget.validate()?;
    let card_u = card_u.unwrap_or_else(|| default_card_u(ch));
    if card_u == 0 {
        return Err(Error::InvalidParameter("|U| must be at least 1".into()));
    }
    let shape = gp_shape(ch, card_u);
    let seeds = gp_seeds(ch, &shape, card_u)?;
    let search = maximize(
        |c| gp_joint(ch, c).and_then(|j| gp_objective(&j)).unwrap_or(f64::NAN),
        &shape,
        budget,
        &seeds,
    );
    let argmax = search.argmax.clone().unwrap_or_else(|| seeds[0].clone());
    Ok(GpCapacity {
        bits: search.value.max(0.0),
        argmax,
        search,
    })
}

/// Row `(u, x)` of the block for one state, `u` major.
fn block_row(card_u: usize, card_x: usize, entries: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; card_u * card_x];
    for &(u, x, p) in entries {
        row[u * card_x + x] += p;
    }
    row
}

/// Hand-built starting points: constant `U`; `U = X` with the capacity
/// achieving input of the state-averaged channel; `U = Y` on deterministic
/// channels; and `U` uniform with `X = φ(U, S)` for per-state permutations φ.
pub fn gp_seeds(ch: &StateChannel, shape: &Arc<PdfShape>, card_u: usize) -> Result<Vec<CandidatePdf>> {
    let (nx, ns) = (ch.x_size(), ch.s_size());
    let mut seeds = Vec::new();

    let uniform_x: Vec<(usize, usize, f64)> = (0..nx).map(|x| (0, x, 1.0 / nx as f64)).collect();
    seeds.push(CandidatePdf::from_fn(shape.clone(), |_, _| block_row(card_u, nx, &uniform_x))?);

    if card_u >= nx {
        let averaged = averaged_channel(ch);
        let (_, input) = blahut_arimoto(&averaged, BA_TOL);
        let entries: Vec<(usize, usize, f64)> = input.iter().enumerate().map(|(x, &p)| (x, x, p)).collect();
        seeds.push(CandidatePdf::from_fn(shape.clone(), |_, _| block_row(card_u, nx, &entries))?);

        let perms: Vec<Vec<usize>> = (0..nx).permutations(nx).collect();
        let count = (perms.len() as u128).saturating_pow(ns as u32);
        if count <= 64 {
            for choice in (0..ns).map(|_| 0..perms.len()).multi_cartesian_product() {
                seeds.push(CandidatePdf::from_fn(shape.clone(), |_, s| {
                    let phi = &perms[choice[s]];
                    let entries: Vec<_> = (0..nx).map(|u| (u, phi[u], 1.0 / nx as f64)).collect();
                    block_row(card_u, nx, &entries)
                })?);
            }
        }
    }

    if let Some(f) = ch.is_deterministic() {
        if card_u >= ch.y_size() {
            seeds.push(CandidatePdf::from_fn(shape.clone(), |_, s| {
                let reps = f.representatives(s);
                let w = 1.0 / reps.len() as f64;
                let entries: Vec<_> = reps.iter().map(|&x| (f.apply(x, s), x, w)).collect();
                block_row(card_u, nx, &entries)
            })?);
        }
    }
    Ok(seeds)
}

fn averaged_channel(ch: &StateChannel) -> CondPmf {
    let mut data = vec![0.0; ch.x_size() * ch.y_size()];
    for x in 0..ch.x_size() {
        for (s, &ps) in ch.state().probs().iter().enumerate() {
            for (y, &w) in ch.row(x, s).iter().enumerate() {
                data[x * ch.y_size() + y] += ps * w;
            }
        }
    }
    CondPmf::from_raw(ch.x_size(), ch.y_size(), data)
}

/// Capacity of a discrete memoryless channel and an optimal input, by
/// alternating maximization. Stops once the standard upper bound
/// `max_x D(W(·|x) || q)` is within `tol` of the current value.
pub fn blahut_arimoto(kernel: &CondPmf, tol: f64) -> (f64, Vec<f64>) {
    let n = kernel.inputs();
    let m = kernel.outputs();
    let mut p = vec![1.0 / n as f64; n];
    let mut d = vec![0.0; n];
    let mut best = 0.0;
    for _ in 0..BA_MAX_ITERS {
        let mut q = vec![0.0; m];
        for x in 0..n {
            for (qy, w) in q.iter_mut().zip(kernel.row(x)) {
                *qy += p[x] * w;
            }
        }
        for x in 0..n {
            d[x] = kernel
                .row(x)
                .iter()
                .zip(&q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| w * (w / qy).log2())
                .sum();
        }
        let lower: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best = lower;
        if upper - lower < tol {
            break;
        }
        let z: f64 = p.iter().zip(&d).map(|(a, b)| a * b.exp2()).sum();
        for x in 0..n {
            p[x] = p[x] * d[x].exp2() / z;
        }
    }
    (best.max(io_mutual_info(&p, kernel)).max(0.0), p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsirtCapacity {
    pub bits: f64,
    /// Capacity of each per-state channel.
    pub per_state: Vec<f64>,
    /// Optimal input law `P_{X|S}`.
    pub input: CondPmf,
}

/// `max I(X;Y|S)` over `P_{X|S}`; separable over states.
pub fn csirt_capacity(ch: &StateChannel) -> CsirtCapacity {
    let mut per_state = Vec::with_capacity(ch.s_size());
    let mut rows = Vec::with_capacity(ch.s_size() * ch.x_size());
    for s in 0..ch.s_size() {
        let (c, p) = blahut_arimoto(&ch.state_slice(s), BA_TOL);
        per_state.push(c);
        rows.extend(p);
    }
    let bits = per_state.iter().zip(ch.state().probs()).map(|(c, p)| c * p).sum();
    CsirtCapacity {
        bits,
        per_state,
        input: CondPmf::from_raw(ch.s_size(), ch.x_size(), rows),
    }
}

/// `Σ_s P(s) log2 |image f(·, s)|`.
pub fn det_capacity(ch: &StateChannel) -> Result<f64> {
    let f = ch
        .is_deterministic()
        .ok_or_else(|| Error::Precondition("channel is not deterministic".into()))?;
    Ok(det_capacity_of(&f, ch.state().probs()))
}

pub(crate) fn det_capacity_of(f: &DetMap, state: &[f64]) -> f64 {
    state
        .iter()
        .enumerate()
        .map(|(s, &p)| p * (f.image(s).len() as f64).log2())
        .sum()
}
