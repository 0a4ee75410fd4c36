//! Relay channels with state: discrete achievable rates and the Gaussian
//! relay with additive interferences.
//!
//! The discrete searches run over two-block laws, relay first:
//! `P_{Ur,Xr|S1} · P_{...,X|Ur,S1,...}`.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::channels::{names, RelayStateChannel};
use crate::error::{Error, Result};
use crate::optimizer::{maximize, BlockSpec, CandidatePdf, MaxResult, PdfShape, SearchBudget};
use crate::prob::{Coord, JointPmf};

pub const U: &str = "U";
pub const V: &str = "V";
pub const UR: &str = "Ur";

/// Margin for the strict feasibility inequalities.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

const S1: &str = names::S1;
const S2: &str = names::S2;
const X: &str = names::X;
const XR: &str = names::XR;
const Y: &str = names::Y;
const YR: &str = names::YR;

/// Reading of the first summand of the second partial decode-forward term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Term2Variant {
    /// `I(U,Y;Y|Ur,S)`, which equals `H(Y|Ur,S)`.
    #[default]
    Verbatim,
    /// `I(V;Y|U,Ur,S)`.
    Conditional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelayCards {
    pub ur: usize,
    pub u: usize,
    pub v: usize,
}

impl RelayCards {
    /// `|Ur| = |Xr||S1|`, `|U| = |V| = |X||S1|`.
    pub fn default_for(ch: &RelayStateChannel) -> Self {
        Self {
            ur: ch.xr_size() * ch.s1_size(),
            u: ch.x_size() * ch.s1_size(),
            v: ch.x_size() * ch.s1_size(),
        }
    }
}

/// `P_{Ur,Xr|S1} · P_{V,U,X|Ur,S1}`.
pub fn pdf_shape(ch: &RelayStateChannel, cards: RelayCards) -> Arc<PdfShape> {
    PdfShape::new(vec![
        BlockSpec::new(
            "Ur,Xr|S",
            vec![Coord::new(S1, ch.s1_size())],
            vec![Coord::new(UR, cards.ur), Coord::new(XR, ch.xr_size())],
        ),
        BlockSpec::new(
            "V,U,X|Ur,S",
            vec![Coord::new(UR, cards.ur), Coord::new(S1, ch.s1_size())],
            vec![Coord::new(V, cards.v), Coord::new(U, cards.u), Coord::new(X, ch.x_size())],
        ),
    ])
}

/// `P_{Ur,Xr|S1} · P_{U,X|Ur,S1,S2}`.
pub fn df_shape(ch: &RelayStateChannel, card_ur: usize, card_u: usize) -> Arc<PdfShape> {
    PdfShape::new(vec![
        BlockSpec::new(
            "Ur,Xr|S1",
            vec![Coord::new(S1, ch.s1_size())],
            vec![Coord::new(UR, card_ur), Coord::new(XR, ch.xr_size())],
        ),
        BlockSpec::new(
            "U,X|Ur,S1,S2",
            vec![
                Coord::new(UR, card_ur),
                Coord::new(S1, ch.s1_size()),
                Coord::new(S2, ch.s2_size()),
            ],
            vec![Coord::new(U, card_u), Coord::new(X, ch.x_size())],
        ),
    ])
}

pub fn relay_joint(ch: &RelayStateChannel, cand: &CandidatePdf) -> Result<JointPmf> {
    ch.attach_outputs(&cand.apply(&ch.base())?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdfTerms {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    /// Both strict inequalities hold with [`FEASIBILITY_MARGIN`].
    pub feasible: bool,
}

impl PdfTerms {
    pub fn min(&self) -> f64 {
        self.t1.min(self.t2).min(self.t3)
    }
}

/// The three partial decode-forward terms on a joint over
/// `S1, Ur, Xr, V, U, X, Y, Yr` (`S1` plays the state).
pub fn pdf_terms(j: &JointPmf, variant: Term2Variant) -> Result<PdfTerms> {
    let mut i = j.info();
    let relay = i.mi_raw(&[U], &[YR], &[UR, S1])?;
    let t1 = i.mi_raw(&[V, U, UR], &[Y], &[])? - i.mi_raw(&[V, U, UR], &[S1], &[])?;
    let first = match variant {
        Term2Variant::Verbatim => i.hc(&[Y], &[UR, S1])?,
        Term2Variant::Conditional => i.mi_raw(&[V], &[Y], &[U, UR, S1])?,
    };
    let t2 = first + relay - i.mi_raw(&[V, U], &[S1], &[UR])?;
    let v_y = i.mi_raw(&[V], &[Y], &[U, UR])?;
    let v_s = i.mi_raw(&[V], &[S1], &[U, UR])?;
    let t3 = v_y + relay - v_s;
    let feasible = i.mi_raw(&[V, U], &[Y], &[UR])? > i.mi_raw(&[V, U], &[S1], &[UR])? + FEASIBILITY_MARGIN
        && v_y > v_s + FEASIBILITY_MARGIN;
    Ok(PdfTerms { t1, t2, t3, feasible })
}

/// The two decode-forward terms on a joint over
/// `S1, S2, Ur, Xr, U, X, Y, Yr`.
pub fn df_terms(j: &JointPmf) -> Result<(f64, f64)> {
    let mut i = j.info();
    let t1 = i.mi_raw(&[U, UR], &[Y], &[])? - i.mi_raw(&[U, UR], &[S1, S2], &[])?;
    let t2 = i.mi_raw(&[U], &[YR], &[UR, S1])? - i.mi_raw(&[U], &[S2], &[UR, S1])?;
    Ok((t1, t2))
}

#[derive(Clone, Debug)]
pub struct PdfRate {
    /// Best feasible rate, 0 when nothing feasible was found.
    pub bits: f64,
    pub argmax: Option<CandidatePdf>,
    pub feasible: bool,
    pub variant: Term2Variant,
    /// Set whenever the second term was active at the maximizer; its first
    /// summand is of uncertain form.
    pub provisional: bool,
    pub search: MaxResult,
}

#[derive(Clone, Debug)]
pub struct DfRate {
    pub bits: f64,
    pub argmax: Option<CandidatePdf>,
    pub search: MaxResult,
}

/// Relay uses `Ur = Xr` uniformly, transmitter sends `U = X` uniform, and
/// `V` is constant or copies `X`.
fn pdf_seeds(ch: &RelayStateChannel, cards: RelayCards) -> Result<Vec<CandidatePdf>> {
    let shape = pdf_shape(ch, cards);
    let (nx, nxr) = (ch.x_size(), ch.xr_size());
    let mut seeds = Vec::new();
    if cards.ur < nxr || cards.u < nx {
        return Ok(seeds);
    }
    for v_copies in [false, true] {
        if v_copies && cards.v < nx {
            continue;
        }
        seeds.push(CandidatePdf::from_fn(shape.clone(), |b, _| {
            if b == 0 {
                let mut row = vec![0.0; cards.ur * nxr];
                for xr in 0..nxr {
                    row[xr * nxr + xr] = 1.0 / nxr as f64;
                }
                row
            } else {
                let mut row = vec![0.0; cards.v * cards.u * nx];
                for x in 0..nx {
                    let v = if v_copies { x } else { 0 };
                    row[(v * cards.u + x) * nx + x] = 1.0 / nx as f64;
                }
                row
            }
        })?);
    }
    Ok(seeds)
}

/// Maps a decode-forward candidate on a single-state channel to the
/// partial decode-forward family with `V = X`.
pub fn embed_df(ch: &RelayStateChannel, cards: RelayCards, df: &CandidatePdf) -> Result<CandidatePdf> {
    let nx = ch.x_size();
    let (b0, b1) = (&df.blocks()[0], &df.blocks()[1]);
    let card_u = b1.outputs() / nx;
    if ch.s2_size() != 1 || b0.outputs() != cards.ur * ch.xr_size() || card_u != cards.u || cards.v < nx {
        return Err(Error::InvalidParameter("decode-forward candidate does not fit the cardinalities".into()));
    }
    CandidatePdf::from_fn(pdf_shape(ch, cards), |b, r| {
        if b == 0 {
            b0.row(r).to_vec()
        } else {
            let src = b1.row(r);
            let mut row = vec![0.0; cards.v * cards.u * nx];
            for u in 0..cards.u {
                for x in 0..nx {
                    row[(x * cards.u + u) * nx + x] = src[u * nx + x];
                }
            }
            row
        }
    })
}

/// Partial decode-forward rate for a single-state relay channel; state
/// known at transmitter and relay. Laws violating the strict feasibility
/// inequalities are skipped.
pub fn pdf_relay_rate(
    ch: &RelayStateChannel,
    budget: &SearchBudget,
    cards: Option<RelayCards>,
    variant: Term2Variant,
    extra_seeds: &[CandidatePdf],
) -> Result<PdfRate> {
    if ch.s2_size() != 1 {
        return Err(Error::Precondition("partial decode-forward expects a single state (|S2| = 1)".into()));
    }
    budget.validate()?;
    let cards = cards.unwrap_or_else(|| RelayCards::default_for(ch));
    let mut seeds = pdf_seeds(ch, cards)?;
    seeds.extend_from_slice(extra_seeds);
    let objective = |c: &CandidatePdf| match relay_joint(ch, c).and_then(|j| pdf_terms(&j, variant)) {
        Ok(t) if t.feasible => t.min(),
        _ => f64::NAN,
    };
    let search = maximize(objective, &pdf_shape(ch, cards), budget, &seeds);
    let feasible = search.argmax.is_some();
    let provisional = match &search.argmax {
        Some(a) => {
            let t = pdf_terms(&relay_joint(ch, a)?, variant)?;
            t.t2 <= t.t1.min(t.t3) + 1e-12
        }
        None => false,
    };
    Ok(PdfRate {
        bits: if feasible { search.value.max(0.0) } else { 0.0 },
        argmax: search.argmax.clone(),
        feasible,
        variant,
        provisional,
        search,
    })
}

/// Decode-forward rate with transmitter knowing `(S1, S2)` and relay `S1`.
pub fn df_relay_rate(
    ch: &RelayStateChannel,
    budget: &SearchBudget,
    cards: Option<(usize, usize)>,
) -> Result<DfRate> {
    budget.validate()?;
    let (cur, cu) = cards.unwrap_or((ch.xr_size() * ch.s1_size(), ch.x_size() * ch.s1_size() * ch.s2_size()));
    let shape = df_shape(ch, cur, cu);
    let (nx, nxr) = (ch.x_size(), ch.xr_size());
    let mut seeds = Vec::new();
    if cur >= nxr && cu >= nx {
        seeds.push(CandidatePdf::from_fn(shape.clone(), |b, _| {
            if b == 0 {
                let mut row = vec![0.0; cur * nxr];
                for xr in 0..nxr {
                    row[xr * nxr + xr] = 1.0 / nxr as f64;
                }
                row
            } else {
                let mut row = vec![0.0; cu * nx];
                for x in 0..nx {
                    row[x * nx + x] = 1.0 / nx as f64;
                }
                row
            }
        })?);
    }
    let objective = |c: &CandidatePdf| match relay_joint(ch, c).and_then(|j| df_terms(&j)) {
        Ok((a, b)) => a.min(b),
        Err(_) => f64::NAN,
    };
    let search = maximize(objective, &shape, budget, &seeds);
    Ok(DfRate {
        bits: search.value.max(0.0),
        argmax: search.argmax.clone(),
        search,
    })
}

/// Gaussian relay: `Yr = X + Sr + Zr`, `Y = X + Xr + Sd + Zr + Zd`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianRelayParams {
    pub p: f64,
    pub p_r: f64,
    pub n_r: f64,
    pub n_d: f64,
    pub p_sr: f64,
    pub p_sd: f64,
    pub rho: f64,
}

impl GaussianRelayParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.p, self.p_r, self.n_r, self.n_d, self.p_sr, self.p_sd, self.rho];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if self.p < 0.0 || self.p_r < 0.0 {
            return Err(Error::InvalidParameter("powers must be non-negative".into()));
        }
        if self.n_r <= 0.0 || self.n_d <= 0.0 {
            return Err(Error::InvalidParameter("noise variances must be positive".into()));
        }
        if self.p_sr < 0.0 || self.p_sd < 0.0 {
            return Err(Error::InvalidParameter("interference variances must be non-negative".into()));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::InvalidParameter("correlation must lie in [-1, 1]".into()));
        }
        Ok(())
    }
}

/// `½ log2(1 + x)`.
pub fn gaussian_c(x: f64) -> f64 {
    0.5 * (1.0 + x).log2()
}

/// `min{C((P + Pr + 2√((1-α)P Pr)) / (Nr + Nd)), C(αP / Nr)}`.
pub fn rc_integrand(p: &GaussianRelayParams, alpha: f64) -> f64 {
    let coherent = 2.0 * ((1.0 - alpha) * p.p * p.p_r).sqrt();
    gaussian_c((p.p + p.p_r + coherent) / (p.n_r + p.n_d)).min(gaussian_c(alpha * p.p / p.n_r))
}

const ALPHA_GRID_STEP: f64 = 1e-4;
const ALPHA_TOL: f64 = 1e-8;

/// Maximum of [`rc_integrand`] over `α ∈ [0, 1]`: grid of step `1e-4`, then
/// ternary search to `1e-8` around the best grid point. Ties go to the
/// largest `α`.
pub fn gaussian_rc_capacity(p: &GaussianRelayParams) -> Result<(f64, f64)> {
    p.validate()?;
    let n = (1.0 / ALPHA_GRID_STEP).round() as usize;
    let (mut best_a, mut best) = (0.0, rc_integrand(p, 0.0));
    for k in 1..=n {
        let a = k as f64 / n as f64;
        let v = rc_integrand(p, a);
        if v >= best {
            best = v;
            best_a = a;
        }
    }
    let (mut lo, mut hi) = ((best_a - ALPHA_GRID_STEP).max(0.0), (best_a + ALPHA_GRID_STEP).min(1.0));
    while hi - lo > ALPHA_TOL {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if rc_integrand(p, m1) < rc_integrand(p, m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mid = 0.5 * (lo + hi);
    let v = rc_integrand(p, mid);
    if v > best {
        best = v;
        best_a = mid;
    }
    Ok((best, best_a))
}

/// Capacity with the interference removed; same value as
/// [`gaussian_rc_capacity`].
pub fn prop5_note(p: &GaussianRelayParams) -> Result<f64> {
    Ok(gaussian_rc_capacity(p)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpcCoefficients {
    pub alpha: f64,
    pub beta_r: f64,
    pub beta_1: f64,
    pub beta_2: f64,
    pub beta_3: f64,
}

impl DpcCoefficients {
    /// Needs `P_r > 0`.
    pub fn from_params(p: &GaussianRelayParams, alpha: f64) -> Result<Self> {
        p.validate()?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
        }
        if p.p_r <= 0.0 {
            return Err(Error::InvalidParameter("relay power must be positive".into()));
        }
        let ap = alpha * p.p;
        let coherent = ((1.0 - alpha) * p.p * p.p_r).sqrt();
        let k = ((1.0 - alpha) * p.p / p.p_r).sqrt();
        let beta_2 = ap / (ap + p.n_r + p.n_d);
        Ok(Self {
            alpha,
            beta_r: (p.p_r + coherent) / (p.p + p.p_r + 2.0 * coherent + p.n_r + p.n_d),
            beta_1: ap / (ap + p.n_r),
            beta_2,
            beta_3: beta_2 * (k + 1.0) - k,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Theorem8Rate {
    pub bits: f64,
    pub term1: f64,
    pub term2: f64,
    /// Some covariance used was rank deficient.
    pub singular: bool,
}

const RANK_TOL: f64 = 1e-12;

struct GaussianVector {
    base: DMatrix<f64>,
    singular: bool,
}

impl GaussianVector {
    /// Differential entropy in bits of the linear combinations `rows` of the
    /// base vector, on the support of their covariance.
    fn h(&mut self, rows: &[&[f64; 6]]) -> f64 {
        let a = DMatrix::from_fn(rows.len(), 6, |i, j| rows[i][j]);
        let cov = &a * &self.base * a.transpose();
        let eig = SymmetricEigen::new(cov).eigenvalues;
        let scale = eig.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let mut rank = 0;
        let mut log_det = 0.0;
        for &e in eig.iter() {
            if e > RANK_TOL * scale {
                rank += 1;
                log_det += e.log2();
            }
        }
        if rank < rows.len() {
            self.singular = true;
        }
        0.5 * (rank as f64 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2() + log_det)
    }

    fn mi(&mut self, a: &[&[f64; 6]], b: &[&[f64; 6]], c: &[&[f64; 6]]) -> f64 {
        let ac: Vec<&[f64; 6]> = a.iter().chain(c).copied().collect();
        let bc: Vec<&[f64; 6]> = b.iter().chain(c).copied().collect();
        let abc: Vec<&[f64; 6]> = a.iter().chain(b).chain(c).copied().collect();
        let hc = if c.is_empty() { 0.0 } else { self.h(c) };
        self.h(&ac) + self.h(&bc) - self.h(&abc) - hc
    }
}

/// The two-term rate of the dirty-paper relay construction at `α`, from
/// exact Gaussian covariances over `(X0, Xr, Sr, Sd, Zr, Zd)`.
pub fn theorem8_rate(p: &GaussianRelayParams, alpha: f64) -> Result<Theorem8Rate> {
    let d = DpcCoefficients::from_params(p, alpha)?;
    let mut base = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        alpha * p.p,
        p.p_r,
        p.p_sr,
        p.p_sd,
        p.n_r,
        p.n_d,
    ]));
    let c = p.rho * (p.p_sr * p.p_sd).sqrt();
    base[(2, 3)] = c;
    base[(3, 2)] = c;
    let mut g = GaussianVector { base, singular: false };

    let k = ((1.0 - alpha) * p.p / p.p_r).sqrt();
    let x = [1.0, k, 0.0, 0.0, 0.0, 0.0];
    let sr = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
    let sd = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
    let ur = [0.0, 1.0, 0.0, d.beta_r, 0.0, 0.0];
    let u = [x[0], x[1] + d.beta_3, d.beta_1, d.beta_2, 0.0, 0.0];
    let yr = [x[0], x[1], 1.0, 0.0, 1.0, 0.0];
    let y = [x[0], x[1] + 1.0, 0.0, 1.0, 1.0, 1.0];

    let term1 = g.mi(&[&u, &ur], &[&y, &sr], &[]) - g.mi(&[&u, &ur], &[&sr, &sd], &[]);
    let term2 = g.mi(&[&u], &[&yr], &[&ur, &sd]) - g.mi(&[&u], &[&sr], &[&ur, &sd]);
    Ok(Theorem8Rate {
        bits: term1.min(term2),
        term1,
        term2,
        singular: g.singular,
    })
}

/// One row of an `α` sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaRow {
    pub alpha: f64,
    pub term1: f64,
    pub term2: f64,
    pub min: f64,
}

/// [`theorem8_rate`] at `steps + 1` equally spaced values of `α`.
pub fn alpha_sweep(p: &GaussianRelayParams, steps: usize) -> Result<Vec<AlphaRow>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("alpha sweep needs at least one step".into()));
    }
    (0..=steps)
        .into_par_iter()
        .map(|k| {
            let alpha = k as f64 / steps as f64;
            let r = theorem8_rate(p, alpha)?;
            Ok(AlphaRow {
                alpha,
                term1: r.term1,
                term2: r.term2,
                min: r.bits,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GaussianRelayParams {
        GaussianRelayParams {
            p: 2.0,
            p_r: 1.0,
            n_r: 0.5,
            n_d: 1.0,
            p_sr: 3.0,
            p_sd: 4.0,
            rho: 0.6,
        }
    }

    #[test]
    fn unit_params_capacity() {
        let p = GaussianRelayParams {
            p: 1.0,
            p_r: 1.0,
            n_r: 1.0,
            n_d: 1.0,
            p_sr: 0.0,
            p_sd: 0.0,
            rho: 0.0,
        };
        let (c, a) = gaussian_rc_capacity(&p).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        assert!((a - 1.0).abs() < 1e-6);
    }

    #[test]
    fn zero_power() {
        let p = GaussianRelayParams { p: 0.0, ..params() };
        assert_eq!(gaussian_rc_capacity(&p).unwrap().0, 0.0);
    }

    #[test]
    fn two_term_rate_matches_integrand() {
        let p = params();
        for k in 0..=20 {
            let a = k as f64 / 20.0;
            let r = theorem8_rate(&p, a).unwrap();
            assert!((r.bits - rc_integrand(&p, a)).abs() < 1e-9, "alpha {a}: {} vs {}", r.bits, rc_integrand(&p, a));
        }
    }

    #[test]
    fn two_term_rate_rejects_zero_relay_power() {
        let p = GaussianRelayParams { p_r: 0.0, ..params() };
        assert!(matches!(theorem8_rate(&p, 0.5), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn validation() {
        assert!(GaussianRelayParams { n_r: 0.0, ..params() }.validate().is_err());
        assert!(GaussianRelayParams { rho: 1.5, ..params() }.validate().is_err());
        assert!(GaussianRelayParams { p: -1.0, ..params() }.validate().is_err());
    }

    #[test]
    fn sweep_is_ordered() {
        let rows = alpha_sweep(&params(), 10).unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows.windows(2).all(|w| w[0].alpha < w[1].alpha));
    }

    fn small() -> SearchBudget {
        SearchBudget {
            grid_k: 2,
            restarts: 4,
            refine_passes: 2,
            ..SearchBudget::default()
        }
    }

    /// `Y = X xor Xr`, `Yr = X`, no state.
    fn xor_relay() -> RelayStateChannel {
        RelayStateChannel::from_fn(
            JointPmf::new(vec![Coord::new(S1, 1), Coord::new(S2, 1)], vec![1.0]).unwrap(),
            2,
            2,
            2,
            2,
            |x, xr, _, _| {
                let mut row = vec![0.0; 4];
                row[(x ^ xr) * 2 + x] = 1.0;
                row
            },
        )
        .unwrap()
    }

    #[test]
    fn pdf_terms_reduce_to_decode_forward() {
        let ch = xor_relay();
        let cards = RelayCards { ur: 2, u: 2, v: 2 };
        let mut rng = crate::optimizer::stream_rng(1, 0);
        for _ in 0..10 {
            let c = CandidatePdf::random(pdf_shape(&ch, cards), &mut rng);
            // force V = U = X and Ur = Xr
            let c = CandidatePdf::from_fn(pdf_shape(&ch, cards), |b, r| {
                let src = c.blocks()[b].row(r);
                let mut row = vec![0.0; src.len()];
                if b == 0 {
                    row[0] = src[0] + src[1];
                    row[3] = src[2] + src[3];
                } else {
                    row[0] = src[..4].iter().sum();
                    row[7] = src[4..].iter().sum();
                }
                row
            })
            .unwrap();
            let j = relay_joint(&ch, &c).unwrap();
            let t = pdf_terms(&j, Term2Variant::Verbatim).unwrap();
            let dfr = j.mutual_info(&[X, XR], &[Y], &[]).unwrap().min(j.mutual_info(&[X], &[YR], &[XR]).unwrap());
            assert!((t.min() - dfr).abs() < 1e-12);
        }
    }

    #[test]
    fn dead_channel_is_infeasible() {
        let ch = RelayStateChannel::from_fn(
            JointPmf::new(vec![Coord::new(S1, 1), Coord::new(S2, 1)], vec![1.0]).unwrap(),
            2,
            2,
            2,
            2,
            |_, _, _, _| vec![1.0, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let r = pdf_relay_rate(&ch, &small(), None, Term2Variant::Verbatim, &[]).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.bits, 0.0);
    }

    #[test]
    fn xor_relay_rates() {
        let ch = xor_relay();
        let df = df_relay_rate(&ch, &small(), None).unwrap();
        assert!((df.bits - 1.0).abs() < 1e-9, "{}", df.bits);
        let cards = RelayCards::default_for(&ch);
        let seed = embed_df(&ch, cards, df.argmax.as_ref().unwrap()).unwrap();
        let p = pdf_relay_rate(&ch, &small(), Some(cards), Term2Variant::Verbatim, &[seed]).unwrap();
        assert!(p.feasible);
        assert!(p.bits >= df.bits - 1e-9);
    }
}
