//! Two-user MAC with states known non-causally at the transmitters.
//!
//! The achievable region searches product laws `P_{X1V1|S1} P_{X2V2|S2}`;
//! the outer bounds search the unrestricted joint `P_{X1X2V1V2|S1S2}`. The
//! two families are distinct [`PdfShape`]s.

use std::sync::Arc;

use itertools::Itertools;

use crate::channels::{names, DetMap, MacStateChannel, StateChannel};
use crate::error::{Error, Result};
use crate::optimizer::{region_sweep, BlockSpec, CandidatePdf, PdfShape, SearchBudget, Sweep};
use crate::prob::{CondPmf, Coord, JointPmf};
use crate::regions::{LinearRateConstraint, RateRegion};
use crate::singleuser::{det_capacity_of, gp_capacity, GpCapacity};

pub const V1: &str = "V1";
pub const V2: &str = "V2";

/// Auxiliary cardinalities `|V1|, |V2|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacCards {
    pub v1: usize,
    pub v2: usize,
}

impl MacCards {
    /// `|V_i| = |X_i||S_i| + 1`.
    pub fn default_for(ch: &MacStateChannel) -> Self {
        Self {
            v1: ch.x1_size() * ch.s1_size() + 1,
            v2: ch.x2_size() * ch.s2_size() + 1,
        }
    }
}

/// Independent blocks `P_{V1,X1|S1}` and `P_{V2,X2|S2}`.
pub fn inner_shape(ch: &MacStateChannel, cards: MacCards) -> Arc<PdfShape> {
    PdfShape::new(vec![
        BlockSpec::new(
            "V1,X1|S1",
            vec![Coord::new(names::S1, ch.s1_size())],
            vec![Coord::new(V1, cards.v1), Coord::new(names::X1, ch.x1_size())],
        ),
        BlockSpec::new(
            "V2,X2|S2",
            vec![Coord::new(names::S2, ch.s2_size())],
            vec![Coord::new(V2, cards.v2), Coord::new(names::X2, ch.x2_size())],
        ),
    ])
}

/// One joint block `P_{V1,V2,X1,X2|S1,S2}`.
pub fn outer_shape(ch: &MacStateChannel, cards: MacCards) -> Arc<PdfShape> {
    PdfShape::new(vec![BlockSpec::new(
        "V1,V2,X1,X2|S1,S2",
        vec![Coord::new(names::S1, ch.s1_size()), Coord::new(names::S2, ch.s2_size())],
        vec![
            Coord::new(V1, cards.v1),
            Coord::new(V2, cards.v2),
            Coord::new(names::X1, ch.x1_size()),
            Coord::new(names::X2, ch.x2_size()),
        ],
    )])
}

/// Joint over `S1, S2, V·, X·, Y` for a candidate of either shape.
pub fn mac_joint(ch: &MacStateChannel, cand: &CandidatePdf) -> Result<JointPmf> {
    ch.attach_output(&cand.apply(&ch.base())?)
}

/// Right-hand sides `(R1, R2, R1+R2)` of the achievable region; the weak
/// outer bound uses the same expressions on the joint family.
pub fn inner_rhs(j: &JointPmf) -> Result<[f64; 3]> {
    let mut i = j.info();
    let y = [names::Y];
    let s12 = [names::S1, names::S2];
    Ok([
        i.mi_raw(&[V1], &y, &[V2])? - i.mi_raw(&[V1], &[names::S1], &[V2])?,
        i.mi_raw(&[V2], &y, &[V1])? - i.mi_raw(&[V2], &[names::S2], &[V1])?,
        i.mi_raw(&[V1, V2], &y, &[])? - i.mi_raw(&[V1, V2], &s12, &[])?,
    ])
}

/// Right-hand sides `(R1, R2, R1+R2)` of the outer bound.
pub fn outer_rhs(j: &JointPmf) -> Result<[f64; 3]> {
    let mut i = j.info();
    let y = [names::Y];
    let s12 = [names::S1, names::S2];
    let joint_leak = i.mi_raw(&[V1, V2], &s12, &[])?;
    Ok([
        i.mi_raw(&[V1], &y, &[V2])? + i.mi_raw(&[V2], &[names::S2], &[])? - joint_leak,
        i.mi_raw(&[V2], &y, &[V1])? + i.mi_raw(&[V1], &[names::S1], &[])? - joint_leak,
        i.mi_raw(&[V1, V2], &y, &[])? - joint_leak,
    ])
}

pub fn constraints(rhs: [f64; 3]) -> Vec<LinearRateConstraint> {
    vec![
        LinearRateConstraint::new(&[1, 0], rhs[0]),
        LinearRateConstraint::new(&[0, 1], rhs[1]),
        LinearRateConstraint::new(&[1, 1], rhs[2]),
    ]
}

fn builder<'a>(
    ch: &'a MacStateChannel,
    rhs: fn(&JointPmf) -> Result<[f64; 3]>,
) -> impl Fn(&CandidatePdf) -> Option<Vec<LinearRateConstraint>> + Sync + 'a {
    move |c| {
        let r = mac_joint(ch, c).and_then(|j| rhs(&j)).ok()?;
        r.iter().all(|v| v.is_finite()).then(|| constraints(r))
    }
}

/// Row `(v, x)` of one user's block, `v` major.
fn user_row(card_v: usize, card_x: usize, entries: &[(usize, usize, f64)]) -> Vec<f64> {
    let mut row = vec![0.0; card_v * card_x];
    for &(v, x, p) in entries {
        row[v * card_x + x] += p;
    }
    row
}

/// Candidate rows for one user, one `Vec` of per-state rows per seed:
/// constant `V` with uniform `X`, `V = X` uniform, `V` uniform with
/// `X = φ(V, S)` for per-state permutations φ, and `V = f(X, S)` when a
/// deterministic factor is given.
fn user_seeds(card_v: usize, nx: usize, ns: usize, det: Option<&DetMap>) -> Vec<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    let w = 1.0 / nx as f64;
    let constant: Vec<_> = (0..nx).map(|x| (0, x, w)).collect();
    out.push(vec![user_row(card_v, nx, &constant); ns]);
    if card_v >= nx {
        let diag: Vec<_> = (0..nx).map(|x| (x, x, w)).collect();
        out.push(vec![user_row(card_v, nx, &diag); ns]);
        let perms: Vec<Vec<usize>> = (0..nx).permutations(nx).collect();
        if (perms.len() as u128).saturating_pow(ns as u32) <= 16 {
            for choice in (0..ns).map(|_| 0..perms.len()).multi_cartesian_product() {
                out.push(
                    (0..ns)
                        .map(|s| {
                            let e: Vec<_> = (0..nx).map(|v| (v, perms[choice[s]][v], w)).collect();
                            user_row(card_v, nx, &e)
                        })
                        .collect(),
                );
            }
        }
    }
    if let Some(f) = det {
        if card_v >= f.outputs() {
            out.push(
                (0..ns)
                    .map(|s| {
                        let reps = f.representatives(s);
                        let p = 1.0 / reps.len() as f64;
                        let e: Vec<_> = reps.iter().map(|&x| (f.apply(x, s), x, p)).collect();
                        user_row(card_v, nx, &e)
                    })
                    .collect(),
            );
        }
    }
    out
}

/// Hand-built candidates for the achievable region.
pub fn inner_seeds(ch: &MacStateChannel, cards: MacCards) -> Result<Vec<CandidatePdf>> {
    let shape = inner_shape(ch, cards);
    let factors = match ch.is_orthogonal() {
        Ok(Some((a, b))) => (a.is_deterministic(), b.is_deterministic()),
        _ => (None, None),
    };
    let s1 = user_seeds(cards.v1, ch.x1_size(), ch.s1_size(), factors.0.as_ref());
    let s2 = user_seeds(cards.v2, ch.x2_size(), ch.s2_size(), factors.1.as_ref());
    let mut seeds = Vec::with_capacity(s1.len() * s2.len());
    for a in &s1 {
        for b in &s2 {
            seeds.push(CandidatePdf::from_fn(shape.clone(), |blk, r| {
                if blk == 0 {
                    a[r].clone()
                } else {
                    b[r].clone()
                }
            })?);
        }
    }
    Ok(seeds)
}

/// Rewrites a product-form candidate as a point of the joint family.
pub fn embed_inner(ch: &MacStateChannel, cards: MacCards, cand: &CandidatePdf) -> Result<CandidatePdf> {
    let shape = outer_shape(ch, cards);
    let (nx1, nx2) = (ch.x1_size(), ch.x2_size());
    let (b1, b2) = (&cand.blocks()[0], &cand.blocks()[1]);
    CandidatePdf::from_fn(shape, |_, r| {
        let (s1, s2) = (r / ch.s2_size(), r % ch.s2_size());
        let (r1, r2) = (b1.row(s1), b2.row(s2));
        let mut row = vec![0.0; cards.v1 * cards.v2 * nx1 * nx2];
        for v1 in 0..cards.v1 {
            for v2 in 0..cards.v2 {
                for x1 in 0..nx1 {
                    for x2 in 0..nx2 {
                        row[((v1 * cards.v2 + v2) * nx1 + x1) * nx2 + x2] = r1[v1 * nx1 + x1] * r2[v2 * nx2 + x2];
                    }
                }
            }
        }
        row
    })
}

/// Achievable region over product laws.
pub fn mac_inner_region(ch: &MacStateChannel, budget: &SearchBudget, cards: Option<MacCards>) -> Result<Sweep> {
    budget.validate()?;
    let cards = cards.unwrap_or_else(|| MacCards::default_for(ch));
    let seeds = inner_seeds(ch, cards)?;
    Ok(region_sweep(builder(ch, inner_rhs), 2, &inner_shape(ch, cards), budget, &seeds))
}

fn outer_sweep(
    ch: &MacStateChannel,
    budget: &SearchBudget,
    cards: MacCards,
    rhs: fn(&JointPmf) -> Result<[f64; 3]>,
    extra_seeds: &[CandidatePdf],
) -> Result<Sweep> {
    budget.validate()?;
    let mut seeds: Vec<CandidatePdf> = inner_seeds(ch, cards)?
        .iter()
        .map(|c| embed_inner(ch, cards, c))
        .collect::<Result<_>>()?;
    seeds.extend_from_slice(extra_seeds);
    Ok(region_sweep(builder(ch, rhs), 2, &outer_shape(ch, cards), budget, &seeds))
}

/// Outer bound over the joint family.
pub fn mac_outer_region(ch: &MacStateChannel, budget: &SearchBudget, cards: Option<MacCards>) -> Result<Sweep> {
    let cards = cards.unwrap_or_else(|| MacCards::default_for(ch));
    outer_sweep(ch, budget, cards, outer_rhs, &[])
}

/// Weaker outer bound: the achievable expressions over the joint family.
pub fn mac_outer_weak_region(ch: &MacStateChannel, budget: &SearchBudget, cards: Option<MacCards>) -> Result<Sweep> {
    let cards = cards.unwrap_or_else(|| MacCards::default_for(ch));
    outer_sweep(ch, budget, cards, inner_rhs, &[])
}

/// Achievable region and outer bound at a matched budget. The outer sweep
/// also starts from every inner corner witness, embedded in the joint
/// family, where both bounds take identical values.
pub fn mac_sandwich(ch: &MacStateChannel, budget: &SearchBudget, cards: Option<MacCards>) -> Result<(Sweep, Sweep)> {
    let cards = cards.unwrap_or_else(|| MacCards::default_for(ch));
    let inner = mac_inner_region(ch, budget, Some(cards))?;
    let embedded: Vec<CandidatePdf> = inner
        .witnesses
        .iter()
        .map(|c| embed_inner(ch, cards, c))
        .collect::<Result<_>>()?;
    let outer = outer_sweep(ch, budget, cards, outer_rhs, &embedded)?;
    Ok((inner, outer))
}

fn orthogonal_factors(ch: &MacStateChannel) -> Result<(StateChannel, StateChannel)> {
    ch.is_orthogonal()?
        .ok_or_else(|| Error::Precondition("MAC is not orthogonal".into()))
}

#[derive(Clone, Debug)]
pub struct OrthMacCapacity {
    pub region: RateRegion,
    pub link1: GpCapacity,
    pub link2: GpCapacity,
}

/// Capacity region of an orthogonal MAC with independent states: the
/// rectangle of the two links' single-user capacities.
pub fn orth_mac_capacity(ch: &MacStateChannel, budget: &SearchBudget, cards: Option<MacCards>) -> Result<OrthMacCapacity> {
    let (c1, c2) = orthogonal_factors(ch)?;
    if !ch.states_independent() {
        return Err(Error::Precondition("states S1 and S2 are dependent".into()));
    }
    let link1 = gp_capacity(&c1, budget, cards.map(|c| c.v1))?;
    let link2 = gp_capacity(&c2, budget, cards.map(|c| c.v2))?;
    let region = RateRegion::from_constraints(
        &[
            LinearRateConstraint::new(&[1, 0], link1.bits),
            LinearRateConstraint::new(&[0, 1], link2.bits),
        ],
        2,
    );
    Ok(OrthMacCapacity { region, link1, link2 })
}

/// Side lengths of the deterministic orthogonal capacity rectangle.
pub fn det_orth_sides(ch: &MacStateChannel) -> Result<(f64, f64)> {
    let (c1, c2) = orthogonal_factors(ch)?;
    let (Some(f1), Some(f2)) = (c1.is_deterministic(), c2.is_deterministic()) else {
        return Err(Error::Precondition("orthogonal factors are not both deterministic".into()));
    };
    Ok((
        det_capacity_of(&f1, c1.state().probs()),
        det_capacity_of(&f2, c2.state().probs()),
    ))
}

/// Capacity region of a deterministic orthogonal MAC; states may be
/// correlated.
pub fn det_orth_mac_capacity(ch: &MacStateChannel) -> Result<RateRegion> {
    let (a, b) = det_orth_sides(ch)?;
    Ok(RateRegion::from_constraints(
        &[LinearRateConstraint::new(&[1, 0], a), LinearRateConstraint::new(&[0, 1], b)],
        2,
    ))
}

/// `P_{X1|S1}` and `P_{X2|S2}` as a product-family candidate with constant
/// auxiliaries; handy for evaluating fixed input laws.
pub fn inputs_only(ch: &MacStateChannel, cards: MacCards, p1: &CondPmf, p2: &CondPmf) -> Result<CandidatePdf> {
    let shape = inner_shape(ch, cards);
    CandidatePdf::from_fn(shape, |b, r| {
        let (p, card) = if b == 0 { (p1, cards.v1) } else { (p2, cards.v2) };
        let mut row = vec![0.0; card * p.outputs()];
        row[..p.outputs()].copy_from_slice(p.row(r));
        row
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::MacOutput;

    fn states(p: [f64; 4]) -> JointPmf {
        JointPmf::new(vec![Coord::new(names::S1, 2), Coord::new(names::S2, 2)], p.to_vec()).unwrap()
    }

    fn xor_links(p: [f64; 4]) -> MacStateChannel {
        let xor = CondPmf::deterministic(4, 2, |r| (r / 2) ^ (r % 2));
        MacStateChannel::from_links(states(p), 2, &xor, 2, &xor).unwrap()
    }

    fn small() -> SearchBudget {
        SearchBudget {
            restarts: 8,
            refine_passes: 1,
            ..SearchBudget::default()
        }
    }

    #[test]
    fn det_orth_rectangles() {
        let r = det_orth_mac_capacity(&xor_links([0.45, 0.05, 0.05, 0.45])).unwrap();
        assert_eq!(r.corners().len(), 1);
        assert_eq!(r.corners()[0].coords(), &[1.0, 1.0]);

        let id = CondPmf::deterministic(4, 2, |r| r / 2);
        let flat = CondPmf::deterministic(4, 2, |_| 0);
        let ch = MacStateChannel::from_links(states([0.25; 4]), 2, &id, 2, &flat).unwrap();
        assert_eq!(det_orth_sides(&ch).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn det_orth_needs_product_output() {
        let ch = MacStateChannel::from_fn(states([0.25; 4]), 2, 2, MacOutput::Scalar(2), |a, b, _, _| {
            let y = a ^ b;
            vec![(1 - y) as f64, y as f64]
        })
        .unwrap();
        assert!(det_orth_mac_capacity(&ch).is_err());
    }

    #[test]
    fn inner_reaches_det_rectangle_via_seed() {
        let ch = xor_links([0.45, 0.05, 0.05, 0.45]);
        let sweep = mac_inner_region(&ch, &small(), None).unwrap();
        assert!(sweep.region.contains(&[1.0, 1.0], 1e-9));
        assert!(!sweep.region.contains(&[1.0 + 1e-6, 1.0], 1e-9));
    }

    #[test]
    fn outer_equals_inner_on_product_laws() {
        let ch = xor_links([0.3, 0.2, 0.1, 0.4]);
        let cards = MacCards { v1: 3, v2: 3 };
        let mut rng = crate::optimizer::stream_rng(5, 0);
        for _ in 0..20 {
            let c = CandidatePdf::random(inner_shape(&ch, cards), &mut rng);
            let e = embed_inner(&ch, cards, &c).unwrap();
            let a = inner_rhs(&mac_joint(&ch, &c).unwrap()).unwrap();
            let b = outer_rhs(&mac_joint(&ch, &e).unwrap()).unwrap();
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-12, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn channel_ignoring_inputs_gives_origin() {
        let ch = MacStateChannel::from_fn(states([0.25; 4]), 2, 2, MacOutput::Scalar(2), |_, _, s1, _| {
            vec![(1 - s1) as f64, s1 as f64]
        })
        .unwrap();
        let sweep = mac_inner_region(&ch, &small(), Some(MacCards { v1: 2, v2: 2 })).unwrap();
        assert!(sweep.region.max_coordinate(0) < 1e-9);
        assert!(sweep.region.max_coordinate(1) < 1e-9);
    }

    #[test]
    fn orth_capacity_of_xor_links() {
        let ch = xor_links([0.25; 4]);
        let r = orth_mac_capacity(&ch, &small(), None).unwrap();
        assert!((r.link1.bits - 1.0).abs() < 1e-9);
        assert!((r.link2.bits - 1.0).abs() < 1e-9);
        assert!(orth_mac_capacity(&xor_links([0.45, 0.05, 0.05, 0.45]), &small(), None).is_err());
    }
}
