//! Two-receiver broadcast channel with state known non-causally at the
//! transmitter.
//!
//! Rate tuples are `(R0, R1, R2)` with `R0` the common rate; the 2-D
//! capacity regions without a common message use `(R1, R2)`.
//!
//! Besides the achievable region and outer bound, this module carries the
//! capacity regions for the deterministic, semi-deterministic,
//! more-capable and degraded cases, and the common-message comparisons
//! against the region built from the `(a)`–`(d)` constraints of
//! [`ss_rhs`].

use std::sync::Arc;

use crate::channels::{names, BcStateChannel, Condition12, MoreCapable};
use crate::error::{Error, Result};
use crate::optimizer::{maximize, region_sweep, BlockSpec, CandidatePdf, MaxResult, PdfShape, SearchBudget, Sweep};
use crate::prob::{CondPmf, Coord, JointPmf};
use crate::regions::{LinearRateConstraint, Polytope};

pub const W: &str = "W";
pub const V: &str = "V";
pub const U: &str = "U";

const S: &str = names::S;
const X: &str = names::X;
const Y1: &str = names::Y1;
const Y2: &str = names::Y2;

/// Auxiliary cardinalities for the achievable region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BcCards {
    pub w: usize,
    pub v: usize,
    pub u: usize,
}

impl BcCards {
    /// `|W| = |V| = |U| = |X||S| + 2`.
    pub fn default_for(ch: &BcStateChannel) -> Self {
        let n = ch.x_size() * ch.s_size() + 2;
        Self { w: n, v: n, u: n }
    }

    pub fn uniform(n: usize) -> Self {
        Self { w: n, v: n, u: n }
    }
}

/// Default `|U|` for the single-auxiliary regions: `|X||S| + 1`.
pub fn default_card_u(ch: &BcStateChannel) -> usize {
    ch.x_size() * ch.s_size() + 1
}

fn block(name: &str, ch: &BcStateChannel, aux: &[(&str, usize)]) -> Arc<PdfShape> {
    let mut outputs: Vec<Coord> = aux.iter().map(|&(n, k)| Coord::new(n, k)).collect();
    outputs.push(Coord::new(X, ch.x_size()));
    PdfShape::new(vec![BlockSpec::new(name, vec![Coord::new(S, ch.s_size())], outputs)])
}

/// `P_{W,V,U,X|S}` as one block.
pub fn inner_shape(ch: &BcStateChannel, cards: BcCards) -> Arc<PdfShape> {
    block("W,V,U,X|S", ch, &[(W, cards.w), (V, cards.v), (U, cards.u)])
}

/// `P_{V,U,X|S}` as one block.
pub fn outer_shape(ch: &BcStateChannel, card_v: usize, card_u: usize) -> Arc<PdfShape> {
    block("V,U,X|S", ch, &[(V, card_v), (U, card_u)])
}

/// `P_{U,X|S}` as one block.
pub fn ux_shape(ch: &BcStateChannel, card_u: usize) -> Arc<PdfShape> {
    block("U,X|S", ch, &[(U, card_u)])
}

/// `P_{W,X|S}` as one block.
pub fn wx_shape(ch: &BcStateChannel, card_w: usize) -> Arc<PdfShape> {
    block("W,X|S", ch, &[(W, card_w)])
}

/// `P_{X|S}`.
pub fn input_shape(ch: &BcStateChannel) -> Arc<PdfShape> {
    block("X|S", ch, &[])
}

/// Joint over `S`, the candidate's coordinates, `Y1` and `Y2`.
pub fn bc_joint(ch: &BcStateChannel, cand: &CandidatePdf) -> Result<JointPmf> {
    ch.attach_outputs(&cand.apply(&ch.base())?)
}

/// The five right-hand sides of the achievable region, in order
/// `R0+R1`, `R0+R2`, two sum-rate bounds, and `2R0+R1+R2`.
pub fn inner_rhs(j: &JointPmf) -> Result<[f64; 5]> {
    let mut i = j.info();
    let wv_y1 = i.mi_raw(&[W, V], &[Y1], &[])?;
    let wu_y2 = i.mi_raw(&[W, U], &[Y2], &[])?;
    let wv_s = i.mi_raw(&[W, V], &[S], &[])?;
    let wu_s = i.mi_raw(&[W, U], &[S], &[])?;
    let u_y2_w = i.mi_raw(&[U], &[Y2], &[W])?;
    let v_y1_w = i.mi_raw(&[V], &[Y1], &[W])?;
    let v_u_w = i.mi_raw(&[V], &[U], &[W])?;
    let vuw_s = i.mi_raw(&[V, U, W], &[S], &[])?;
    let w_s = i.mi_raw(&[W], &[S], &[])?;
    Ok([
        wv_y1 - wv_s,
        wu_y2 - wu_s,
        wv_y1 + u_y2_w - v_u_w - vuw_s,
        v_y1_w + wu_y2 - v_u_w - vuw_s,
        wv_y1 + wu_y2 - v_u_w - vuw_s - w_s,
    ])
}

pub fn inner_constraints(rhs: [f64; 5]) -> Vec<LinearRateConstraint> {
    vec![
        LinearRateConstraint::new(&[1, 1, 0], rhs[0]),
        LinearRateConstraint::new(&[1, 0, 1], rhs[1]),
        LinearRateConstraint::new(&[1, 1, 1], rhs[2]),
        LinearRateConstraint::new(&[1, 1, 1], rhs[3]),
        LinearRateConstraint::new(&[2, 1, 1], rhs[4]),
    ]
}

/// The four right-hand sides of the outer bound: `R0+R1`, `R0+R2` and two
/// sum-rate bounds.
pub fn outer_rhs(j: &JointPmf) -> Result<[f64; 4]> {
    let mut i = j.info();
    let v_y1 = i.mi_raw(&[V], &[Y1], &[S])?;
    let u_y2 = i.mi_raw(&[U], &[Y2], &[S])?;
    Ok([
        v_y1,
        u_y2,
        i.mi_raw(&[X], &[Y1], &[U, S])? + u_y2,
        i.mi_raw(&[X], &[Y2], &[V, S])? + v_y1,
    ])
}

pub fn outer_constraints(rhs: [f64; 4]) -> Vec<LinearRateConstraint> {
    vec![
        LinearRateConstraint::new(&[1, 1, 0], rhs[0]),
        LinearRateConstraint::new(&[1, 0, 1], rhs[1]),
        LinearRateConstraint::new(&[1, 1, 1], rhs[2]),
        LinearRateConstraint::new(&[1, 1, 1], rhs[3]),
    ]
}

fn finite<const N: usize>(r: [f64; N]) -> Option<[f64; N]> {
    r.iter().all(|v| v.is_finite()).then_some(r)
}

/// Candidate of [`inner_shape`] from an input law and maps giving the
/// auxiliaries as functions of `(x, s)`.
pub fn inner_candidate(
    ch: &BcStateChannel,
    cards: BcCards,
    input: &CondPmf,
    w: impl Fn(usize, usize) -> usize,
    v: impl Fn(usize, usize) -> usize,
    u: impl Fn(usize, usize) -> usize,
) -> Result<CandidatePdf> {
    let nx = ch.x_size();
    CandidatePdf::from_fn(inner_shape(ch, cards), |_, s| {
        let mut row = vec![0.0; cards.w * cards.v * cards.u * nx];
        for x in 0..nx {
            let idx = ((w(x, s) * cards.v + v(x, s)) * cards.u + u(x, s)) * nx + x;
            row[idx] += input.get(s, x);
        }
        row
    })
}

/// `W` constant, `V = f1(X, S)`, `U = f2(X, S)`; needs both outputs
/// deterministic and `|V| ≥ |Y1|`, `|U| ≥ |Y2|`.
pub fn det_inner_candidate(ch: &BcStateChannel, cards: BcCards, input: &CondPmf) -> Result<CandidatePdf> {
    let (Some(f1), Some(f2)) = (ch.det1(), ch.det2()) else {
        return Err(Error::Precondition("both outputs must be deterministic".into()));
    };
    if cards.v < ch.y1_size() || cards.u < ch.y2_size() {
        return Err(Error::InvalidParameter("auxiliary alphabets smaller than the outputs".into()));
    }
    inner_candidate(ch, cards, input, |_, _| 0, |x, s| f1.apply(x, s), |x, s| f2.apply(x, s))
}

fn uniform_input(ch: &BcStateChannel) -> CondPmf {
    let n = ch.x_size();
    CondPmf::from_raw(ch.s_size(), n, vec![1.0 / n as f64; n * ch.s_size()])
}

/// Hand-built starting points: constant auxiliaries, each auxiliary equal
/// to `X`, and `V = Y1, U = Y2` on deterministic channels, all with uniform
/// inputs.
pub fn inner_seeds(ch: &BcStateChannel, cards: BcCards) -> Result<Vec<CandidatePdf>> {
    let input = uniform_input(ch);
    let nx = ch.x_size();
    let zero = |_: usize, _: usize| 0;
    let id = |x: usize, _: usize| x;
    let mut seeds = vec![inner_candidate(ch, cards, &input, zero, zero, zero)?];
    if cards.v >= nx {
        seeds.push(inner_candidate(ch, cards, &input, zero, id, zero)?);
    }
    if cards.u >= nx {
        seeds.push(inner_candidate(ch, cards, &input, zero, zero, id)?);
    }
    if cards.w >= nx {
        seeds.push(inner_candidate(ch, cards, &input, id, zero, zero)?);
    }
    if let Ok(c) = det_inner_candidate(ch, cards, &input) {
        seeds.push(c);
    }
    Ok(seeds)
}

fn inner_builder(ch: &BcStateChannel) -> impl Fn(&CandidatePdf) -> Option<Vec<LinearRateConstraint>> + Sync + '_ {
    move |c| {
        let r = bc_joint(ch, c).and_then(|j| inner_rhs(&j)).ok()?;
        finite(r).map(inner_constraints)
    }
}

fn outer_builder(ch: &BcStateChannel) -> impl Fn(&CandidatePdf) -> Option<Vec<LinearRateConstraint>> + Sync + '_ {
    move |c| {
        let r = bc_joint(ch, c).and_then(|j| outer_rhs(&j)).ok()?;
        finite(r).map(outer_constraints)
    }
}

/// Achievable region over `P_{W,V,U,X|S}`; `extra_seeds` are added to the
/// built-in starting points.
pub fn bc_inner_region(
    ch: &BcStateChannel,
    budget: &SearchBudget,
    cards: Option<BcCards>,
    extra_seeds: &[CandidatePdf],
) -> Result<Sweep> {
    budget.validate()?;
    let cards = cards.unwrap_or_else(|| BcCards::default_for(ch));
    let mut seeds = inner_seeds(ch, cards)?;
    seeds.extend_from_slice(extra_seeds);
    Ok(region_sweep(inner_builder(ch), 3, &inner_shape(ch, cards), budget, &seeds))
}

/// Outer bound over `P_{V,U,X|S}`; cardinalities default to
/// `|X||S| + 2`. Built-in starting points take each of `V`, `U` either
/// constant or equal to `X`, with uniform inputs.
pub fn bc_outer_region(
    ch: &BcStateChannel,
    budget: &SearchBudget,
    cards: Option<(usize, usize)>,
    extra_seeds: &[CandidatePdf],
) -> Result<Sweep> {
    budget.validate()?;
    let n = ch.x_size() * ch.s_size() + 2;
    let (cv, cu) = cards.unwrap_or((n, n));
    let shape = outer_shape(ch, cv, cu);
    let input = uniform_input(ch);
    let nx = ch.x_size();
    let mut seeds = Vec::new();
    for (copy_v, copy_u) in [(false, false), (true, false), (false, true), (true, true)] {
        if (copy_v && cv < nx) || (copy_u && cu < nx) {
            continue;
        }
        seeds.push(CandidatePdf::from_fn(shape.clone(), |_, s| {
            let mut row = vec![0.0; cv * cu * nx];
            for x in 0..nx {
                let v = if copy_v { x } else { 0 };
                let u = if copy_u { x } else { 0 };
                row[(v * cu + u) * nx + x] = input.get(s, x);
            }
            row
        })?);
    }
    seeds.extend_from_slice(extra_seeds);
    Ok(region_sweep(outer_builder(ch), 3, &shape, budget, &seeds))
}

/// Maps an achievable-region candidate to the outer family with
/// `V' = (W, V)` and `U' = (W, U)`.
pub fn embed_inner(ch: &BcStateChannel, cards: BcCards, cand: &CandidatePdf) -> Result<CandidatePdf> {
    let nx = ch.x_size();
    let (cv, cu) = (cards.w * cards.v, cards.w * cards.u);
    let src = &cand.blocks()[0];
    CandidatePdf::from_fn(outer_shape(ch, cv, cu), |_, s| {
        let r = src.row(s);
        let mut row = vec![0.0; cv * cu * nx];
        for w in 0..cards.w {
            for v in 0..cards.v {
                for u in 0..cards.u {
                    for x in 0..nx {
                        let p = r[((w * cards.v + v) * cards.u + u) * nx + x];
                        let vp = w * cards.v + v;
                        let up = w * cards.u + u;
                        row[(vp * cu + up) * nx + x] += p;
                    }
                }
            }
        }
        row
    })
}

/// Achievable region and outer bound at a matched budget. The outer search
/// uses `|V'| = |W||V|`, `|U'| = |W||U|` and also starts from every inner
/// corner witness mapped by [`embed_inner`].
pub fn bc_sandwich(ch: &BcStateChannel, budget: &SearchBudget, cards: Option<BcCards>) -> Result<(Sweep, Sweep)> {
    let cards = cards.unwrap_or_else(|| BcCards::default_for(ch));
    let inner = bc_inner_region(ch, budget, Some(cards), &[])?;
    let embedded: Vec<CandidatePdf> = inner
        .witnesses
        .iter()
        .map(|c| embed_inner(ch, cards, c))
        .collect::<Result<_>>()?;
    let outer = bc_outer_region(ch, budget, Some((cards.w * cards.v, cards.w * cards.u)), &embedded)?;
    Ok((inner, outer))
}

fn require_det(ch: &BcStateChannel) -> Result<()> {
    if ch.det1().is_none() || ch.det2().is_none() {
        return Err(Error::Precondition("both outputs must be deterministic".into()));
    }
    Ok(())
}

fn input_seeds(ch: &BcStateChannel) -> Result<Vec<CandidatePdf>> {
    Ok(vec![CandidatePdf::new(input_shape(ch), vec![uniform_input(ch)])?])
}

/// Capacity region `(R1, R2)` of the deterministic BC.
pub fn det_bc_capacity(ch: &BcStateChannel, budget: &SearchBudget) -> Result<Sweep> {
    require_det(ch)?;
    budget.validate()?;
    let build = |c: &CandidatePdf| {
        let j = bc_joint(ch, c).ok()?;
        let mut i = j.info();
        let h1 = i.hc(&[Y1], &[S]).ok()?;
        let h2 = i.hc(&[Y2], &[S]).ok()?;
        let h12 = i.hc(&[Y1, Y2], &[S]).ok()?;
        Some(vec![
            LinearRateConstraint::new(&[1, 0], h1),
            LinearRateConstraint::new(&[0, 1], h2),
            LinearRateConstraint::new(&[1, 1], h12),
        ])
    };
    Ok(region_sweep(build, 2, &input_shape(ch), budget, &[]))
}

/// Capacity region `(R0, R1, R2)` of the deterministic BC with common
/// message, valid when `I(Y1;Y2|S) = 0` for every input law.
pub fn det_bc_common_capacity(ch: &BcStateChannel, budget: &SearchBudget) -> Result<Sweep> {
    require_det(ch)?;
    budget.validate()?;
    if let Condition12::Fails { value, .. } = ch.check_condition_12(budget.grid_k, 0, budget.seed) {
        return Err(Error::Precondition(format!(
            "outputs are dependent given the state (I(Y1;Y2|S) = {value:.3e} for some input)"
        )));
    }
    let build = |c: &CandidatePdf| {
        let j = bc_joint(ch, c).ok()?;
        let mut i = j.info();
        let h1 = i.hc(&[Y1], &[S]).ok()?;
        let h2 = i.hc(&[Y2], &[S]).ok()?;
        Some(vec![
            LinearRateConstraint::new(&[1, 1, 0], h1),
            LinearRateConstraint::new(&[1, 0, 1], h2),
        ])
    };
    Ok(region_sweep(build, 3, &input_shape(ch), budget, &[]))
}

fn ux_seeds(ch: &BcStateChannel, card_u: usize) -> Result<Vec<CandidatePdf>> {
    let shape = ux_shape(ch, card_u);
    let input = uniform_input(ch);
    let nx = ch.x_size();
    let mut seeds = vec![CandidatePdf::from_fn(shape.clone(), |_, s| {
        let mut row = vec![0.0; card_u * nx];
        row[..nx].copy_from_slice(input.row(s));
        row
    })?];
    if card_u >= nx {
        seeds.push(CandidatePdf::from_fn(shape, |_, s| {
            let mut row = vec![0.0; card_u * nx];
            for x in 0..nx {
                row[x * nx + x] = input.get(s, x);
            }
            row
        })?);
    }
    Ok(seeds)
}

/// Capacity region `(R1, R2)` when `Y1` is a deterministic function of
/// `(X, S)` and receiver 2 also knows the state.
pub fn semidet_bc_capacity(ch: &BcStateChannel, budget: &SearchBudget, card_u: Option<usize>) -> Result<Sweep> {
    if ch.det1().is_none() {
        return Err(Error::Precondition("output Y1 must be deterministic".into()));
    }
    budget.validate()?;
    let card_u = card_u.unwrap_or_else(|| default_card_u(ch));
    let build = |c: &CandidatePdf| {
        let j = bc_joint(ch, c).ok()?;
        let mut i = j.info();
        let h1 = i.hc(&[Y1], &[S]).ok()?;
        let u_y2 = i.mi_raw(&[U], &[Y2], &[S]).ok()?;
        let h1_us = i.hc(&[Y1], &[U, S]).ok()?;
        Some(vec![
            LinearRateConstraint::new(&[1, 0], h1),
            LinearRateConstraint::new(&[0, 1], u_y2),
            LinearRateConstraint::new(&[1, 1], h1_us + u_y2),
        ])
    };
    Ok(region_sweep(build, 2, &ux_shape(ch, card_u), budget, &ux_seeds(ch, card_u)?))
}

/// Capacity region `(R0, R1, R2)` of the more-capable BC with the state
/// known at both receivers. Fails if the more-capable test finds a
/// violating input law (grid `budget.grid_k`, `budget.restarts` samples).
pub fn more_capable_capacity(ch: &BcStateChannel, budget: &SearchBudget, card_u: Option<usize>) -> Result<Sweep> {
    budget.validate()?;
    if let MoreCapable::CertifiedFalse { gap, .. } = ch.is_more_capable(budget.grid_k, budget.restarts, budget.seed) {
        return Err(Error::Precondition(format!(
            "channel is not more capable (I(X;Y2|S) exceeds I(X;Y1|S) by {gap:.3e})"
        )));
    }
    let card_u = card_u.unwrap_or_else(|| default_card_u(ch));
    let build = |c: &CandidatePdf| {
        let j = bc_joint(ch, c).ok()?;
        let mut i = j.info();
        let u_y2 = i.mi_raw(&[U], &[Y2], &[S]).ok()?;
        let x_y1_us = i.mi_raw(&[X], &[Y1], &[U, S]).ok()?;
        let x_y1 = i.mi_raw(&[X], &[Y1], &[S]).ok()?;
        Some(vec![
            LinearRateConstraint::new(&[1, 0, 1], u_y2),
            LinearRateConstraint::new(&[1, 1, 1], x_y1_us + u_y2),
            LinearRateConstraint::new(&[1, 1, 1], x_y1),
        ])
    };
    Ok(region_sweep(build, 3, &ux_shape(ch, card_u), budget, &ux_seeds(ch, card_u)?))
}

/// Capacity region `(R0, R1, R2)` of the degraded BC with deterministic
/// `Y1`. The `R0+R2` bound is clipped at 0.
pub fn degraded_det_capacity(ch: &BcStateChannel, budget: &SearchBudget, card_u: Option<usize>) -> Result<Sweep> {
    if ch.det1().is_none() {
        return Err(Error::Precondition("output Y1 must be deterministic".into()));
    }
    if ch.is_degraded().is_none() {
        return Err(Error::Precondition("channel is not degraded".into()));
    }
    budget.validate()?;
    let card_u = card_u.unwrap_or_else(|| default_card_u(ch));
    let build = |c: &CandidatePdf| {
        let j = bc_joint(ch, c).ok()?;
        let mut i = j.info();
        let h1 = i.hc(&[Y1], &[U, S]).ok()?;
        let gp = i.mi_raw(&[U], &[Y2], &[]).ok()? - i.mi_raw(&[U], &[S], &[]).ok()?;
        Some(vec![
            LinearRateConstraint::new(&[0, 1, 0], h1),
            LinearRateConstraint::new(&[1, 0, 1], gp.max(0.0)),
        ])
    };
    Ok(region_sweep(build, 3, &ux_shape(ch, card_u), budget, &ux_seeds(ch, card_u)?))
}

fn pos(a: f64) -> f64 {
    a.max(0.0)
}

/// Right-hand sides `(a)`–`(d)`: `R0`, `R0+R1`, `R0+R2`, `R0+R1+R2`.
pub fn ss_rhs(j: &JointPmf) -> Result<[f64; 4]> {
    let mut i = j.info();
    let w_y1 = i.mi_raw(&[W], &[Y1], &[])?;
    let w_y2 = i.mi_raw(&[W], &[Y2], &[])?;
    let w_s = i.mi_raw(&[W], &[S], &[])?;
    let b = i.mi_raw(&[W, V], &[Y1], &[])? - i.mi_raw(&[W, V], &[S], &[])?;
    let c = i.mi_raw(&[W, U], &[Y2], &[])? - i.mi_raw(&[W, U], &[S], &[])?;
    let u_v_ws = i.mi_raw(&[U], &[V], &[W, S])?;
    Ok([
        pos(w_y1.min(w_y2) - w_s),
        b,
        c,
        -pos(w_y1.max(w_y2) - w_s) + b + c - u_v_ws,
    ])
}

pub fn ss_constraints(rhs: [f64; 4]) -> Vec<LinearRateConstraint> {
    vec![
        LinearRateConstraint::new(&[1, 0, 0], rhs[0]),
        LinearRateConstraint::new(&[1, 1, 0], rhs[1]),
        LinearRateConstraint::new(&[1, 0, 1], rhs[2]),
        LinearRateConstraint::new(&[1, 1, 1], rhs[3]),
    ]
}

/// The `(a)`–`(d)` polytope for one candidate of [`inner_shape`].
pub fn ss_region(ch: &BcStateChannel, cand: &CandidatePdf) -> Result<Polytope> {
    let rhs = ss_rhs(&bc_joint(ch, cand)?)?;
    Ok(Polytope::from_constraints(&ss_constraints(rhs), 3))
}

/// Both sides of `I(W,V;S) + I(W,U;S) + I(U;V|W,S) = I(V;U|W) + I(V,U,W;S) + I(W;S)`.
pub fn mi_identity_sides(j: &JointPmf) -> Result<(f64, f64)> {
    let mut i = j.info();
    let lhs = i.mi_raw(&[W, V], &[S], &[])? + i.mi_raw(&[W, U], &[S], &[])? + i.mi_raw(&[U], &[V], &[W, S])?;
    let rhs = i.mi_raw(&[V], &[U], &[W])? + i.mi_raw(&[V, U, W], &[S], &[])? + i.mi_raw(&[W], &[S], &[])?;
    Ok((lhs, rhs))
}

/// `[min{I(W;Y1), I(W;Y2)} - I(W;S)]₊` on a joint carrying `W`.
pub fn ss_common_objective(j: &JointPmf) -> Result<f64> {
    let mut i = j.info();
    let w_s = i.mi_raw(&[W], &[S], &[])?;
    Ok(pos(i.mi_raw(&[W], &[Y1], &[])?.min(i.mi_raw(&[W], &[Y2], &[])?) - w_s))
}

/// Largest `R0` of the achievable region with `R1 = R2 = 0` for one joint.
pub fn ours_common_objective(j: &JointPmf) -> Result<f64> {
    let c = inner_rhs(j)?;
    Ok(c[0].min(c[1]).min(c[2]).min(c[3]).min(0.5 * c[4]))
}

/// `min` of the two single-user terms and the halved sum term written
/// with `I(W,V;S) + I(W,U;S) + I(U;V|W,S)`.
pub fn negc_common_objective(j: &JointPmf) -> Result<f64> {
    let mut i = j.info();
    let wv_y1 = i.mi_raw(&[W, V], &[Y1], &[])?;
    let wu_y2 = i.mi_raw(&[W, U], &[Y2], &[])?;
    let wv_s = i.mi_raw(&[W, V], &[S], &[])?;
    let wu_s = i.mi_raw(&[W, U], &[S], &[])?;
    let u_v_ws = i.mi_raw(&[U], &[V], &[W, S])?;
    Ok((wv_y1 - wv_s)
        .min(wu_y2 - wu_s)
        .min(0.5 * (wv_y1 + wu_y2 - wv_s - wu_s - u_v_ws)))
}

fn objective<'a>(
    ch: &'a BcStateChannel,
    f: fn(&JointPmf) -> Result<f64>,
) -> impl Fn(&CandidatePdf) -> f64 + Sync + 'a {
    move |c| bc_joint(ch, c).and_then(|j| f(&j)).unwrap_or(f64::NAN)
}

/// `W`-only candidate of [`inner_shape`] from a `P_{W,X|S}` candidate.
pub fn lift_w(ch: &BcStateChannel, cards: BcCards, wx: &CandidatePdf) -> Result<CandidatePdf> {
    let nx = ch.x_size();
    let src = &wx.blocks()[0];
    if src.outputs() != cards.w * nx {
        return Err(Error::DimensionMismatch {
            expected: cards.w * nx,
            got: src.outputs(),
        });
    }
    CandidatePdf::from_fn(inner_shape(ch, cards), |_, s| {
        let r = src.row(s);
        let mut row = vec![0.0; cards.w * cards.v * cards.u * nx];
        for w in 0..cards.w {
            for x in 0..nx {
                row[(w * cards.v * cards.u) * nx + x] = r[w * nx + x];
            }
        }
        row
    })
}

/// Maximum of [`ss_common_objective`] over `P_{W,X|S}`.
pub fn common_rate_ss(ch: &BcStateChannel, budget: &SearchBudget, card_w: usize) -> Result<MaxResult> {
    budget.validate()?;
    let shape = wx_shape(ch, card_w);
    let input = uniform_input(ch);
    let nx = ch.x_size();
    let seed = CandidatePdf::from_fn(shape.clone(), |_, s| {
        let mut row = vec![0.0; card_w * nx];
        row[..nx].copy_from_slice(input.row(s));
        row
    })?;
    Ok(maximize(objective(ch, ss_common_objective), &shape, budget, &[seed]))
}

/// Maximum of [`ours_common_objective`] over `P_{W,V,U,X|S}`.
pub fn common_rate_ours(
    ch: &BcStateChannel,
    budget: &SearchBudget,
    cards: BcCards,
    extra_seeds: &[CandidatePdf],
) -> Result<MaxResult> {
    budget.validate()?;
    let mut seeds = inner_seeds(ch, cards)?;
    seeds.extend_from_slice(extra_seeds);
    Ok(maximize(objective(ch, ours_common_objective), &inner_shape(ch, cards), budget, &seeds))
}

/// Maximum of [`negc_common_objective`] over `P_{W,V,U,X|S}`.
pub fn common_rate_negc(
    ch: &BcStateChannel,
    budget: &SearchBudget,
    cards: BcCards,
    extra_seeds: &[CandidatePdf],
) -> Result<MaxResult> {
    budget.validate()?;
    let mut seeds = inner_seeds(ch, cards)?;
    seeds.extend_from_slice(extra_seeds);
    Ok(maximize(objective(ch, negc_common_objective), &inner_shape(ch, cards), budget, &seeds))
}

#[derive(Clone, Debug)]
pub struct CommonRates {
    pub ss: MaxResult,
    pub ours: MaxResult,
    pub negc: MaxResult,
}

/// The three common rates at a matched budget. Each search also starts
/// from the previous one's maximizer (the `W`-only lift for the first
/// step), so per-candidate dominance carries over to the maxima.
pub fn common_rates(ch: &BcStateChannel, budget: &SearchBudget, cards: BcCards) -> Result<CommonRates> {
    let ss = common_rate_ss(ch, budget, cards.w)?;
    let mut seeds = Vec::new();
    if let Some(a) = &ss.argmax {
        seeds.push(lift_w(ch, cards, a)?);
    }
    let ours = common_rate_ours(ch, budget, cards, &seeds)?;
    let seeds: Vec<CandidatePdf> = ours.argmax.iter().cloned().collect();
    let negc = common_rate_negc(ch, budget, cards, &seeds)?;
    Ok(CommonRates { ss, ours, negc })
}

/// `max over P_{X|S} of min{H(Y1|S), H(Y2|S), H(Y1,Y2|S)/2}` for a
/// deterministic BC.
pub fn common_rate_det(ch: &BcStateChannel, budget: &SearchBudget) -> Result<MaxResult> {
    require_det(ch)?;
    budget.validate()?;
    let f = |j: &JointPmf| -> Result<f64> {
        let mut i = j.info();
        Ok(i.hc(&[Y1], &[S])?
            .min(i.hc(&[Y2], &[S])?)
            .min(0.5 * i.hc(&[Y1, Y2], &[S])?))
    };
    Ok(maximize(objective(ch, f), &input_shape(ch), budget, &input_seeds(ch)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Pmf;

    fn small() -> SearchBudget {
        SearchBudget {
            restarts: 6,
            refine_passes: 1,
            ..SearchBudget::default()
        }
    }

    #[test]
    fn identical_outputs_give_triangle() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(2), 2, 2, 2, |x, s| x ^ s, |x, s| x ^ s).unwrap();
        let r = det_bc_capacity(&bc, &small()).unwrap().region;
        assert!(r.contains(&[1.0, 0.0], 1e-9));
        assert!(r.contains(&[0.5, 0.5], 1e-9));
        assert!(!r.contains(&[0.6, 0.5], 1e-6));
    }

    #[test]
    fn constant_outputs_give_origin() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(2), 2, 2, 2, |_, s| s, |_, _| 0).unwrap();
        let r = det_bc_capacity(&bc, &small()).unwrap().region;
        assert!(r.max_coordinate(0) < 1e-12 && r.max_coordinate(1) < 1e-12);
    }

    #[test]
    fn common_capacity_needs_condition_12() {
        let bad = BcStateChannel::deterministic(Pmf::uniform(1), 2, 2, 2, |x, _| x, |x, _| x).unwrap();
        assert!(det_bc_common_capacity(&bad, &small()).is_err());
        let good = BcStateChannel::deterministic(Pmf::new(vec![0.25, 0.75]).unwrap(), 2, 2, 2, |x, _| x, |_, s| s).unwrap();
        let r = det_bc_common_capacity(&good, &small()).unwrap().region;
        assert!(r.contains(&[0.0, 1.0, 0.0], 1e-9));
        assert!(!r.contains(&[1e-3, 0.0, 0.0], 1e-9));
        assert!(!r.contains(&[0.0, 0.0, 1e-3], 1e-9));
    }

    #[test]
    fn ss_equals_ours_on_w_only_candidates() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(2), 2, 2, 2, |x, s| x ^ s, |x, s| x & s).unwrap();
        let cards = BcCards::uniform(2);
        let mut rng = crate::optimizer::stream_rng(3, 0);
        for _ in 0..20 {
            let wx = CandidatePdf::random(wx_shape(&bc, 2), &mut rng);
            let lifted = lift_w(&bc, cards, &wx).unwrap();
            let a = ss_common_objective(&bc_joint(&bc, &wx).unwrap()).unwrap();
            let b = ours_common_objective(&bc_joint(&bc, &lifted).unwrap()).unwrap();
            assert!((a - b.max(0.0)).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn mi_identity_holds_on_random_joint() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(2), 2, 2, 2, |x, s| x ^ s, |x, _| x).unwrap();
        let mut rng = crate::optimizer::stream_rng(9, 0);
        let c = CandidatePdf::random(inner_shape(&bc, BcCards::uniform(3)), &mut rng);
        let (l, r) = mi_identity_sides(&bc_joint(&bc, &c).unwrap()).unwrap();
        assert!((l - r).abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let k = CondPmf::from_rows(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let noisy = BcStateChannel::from_marginals(Pmf::uniform(1), 2, &k, &k).unwrap();
        assert!(det_bc_capacity(&noisy, &small()).is_err());
        assert!(semidet_bc_capacity(&noisy, &small(), None).is_err());
        assert!(degraded_det_capacity(&noisy, &small(), None).is_err());
    }
}
