//! Monte Carlo random binning for a single-user channel with state known
//! non-causally at the encoder.
//!
//! A code has `⌈2^{nR}⌉` bins of `⌈2^{nR'}⌉` sequences each, drawn i.i.d.
//! from the design marginal `P_U`. The encoder looks in the message's bin
//! for a sequence typical with the state; the decoder looks in the whole
//! codebook for the unique sequence typical with the output.
//!
//! Typicality is conditional: for every symbol `c` of the reference
//! sequence, the empirical law of `u` over the positions holding `c` must be
//! within total variation `ε` of the design's `P_{U|C=c}`.
//!
//! Two backends share this definition. Small codes are stored explicitly and
//! redrawn every [`BATCH_TRIALS`] trials. Codes too large to store are
//! simulated through the ensemble: each trial draws a fresh code, the
//! encoder's pick is sampled from `P_U^n` conditioned on typicality with the
//! state, and the number of competing typical codewords is resolved from the
//! exact probability that one i.i.d. sequence is typical with the output.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::StateChannel;
use crate::error::{Error, Result};
use crate::optimizer::{stream_rng, CandidatePdf};
use crate::prob::CondPmf;

pub const MAX_SIM_ALPHABET: usize = 4;
pub const MAX_BLOCK_LENGTH: usize = 10_000;
pub const BATCH_TRIALS: usize = 50;
/// Largest `codewords · n` stored explicitly.
pub const EXPLICIT_CAP: f64 = (1u64 << 22) as f64;

const TV_TOL: f64 = 1e-12;

/// Default slack: `0.05 / (|U| · max(|S|, |Y|))`.
pub fn default_epsilon(card_u: usize, card_s: usize, card_y: usize) -> f64 {
    0.05 / (card_u * card_s.max(card_y)) as f64
}

/// The laws induced by a design `P_{U,X|S}` on a channel.
#[derive(Clone, Debug)]
pub struct BinningDesign {
    card_u: usize,
    card_x: usize,
    card_s: usize,
    card_y: usize,
    p_s: Vec<f64>,
    p_u: Vec<f64>,
    /// Rows `s`; `None` where `P(s) = 0`.
    u_given_s: Vec<Option<Vec<f64>>>,
    u_given_y: Vec<Option<Vec<f64>>>,
    /// Rows `u * |S| + s` over `x`.
    x_given_us: Vec<Vec<f64>>,
    channel: Vec<Vec<f64>>,
    mi_us: f64,
    mi_uy: f64,
}

fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let t: f64 = v.iter().sum();
    (t > 0.0).then(|| v.iter().map(|p| p / t).collect())
}

fn mi(joint: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..joint[0].len()).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut acc = 0.0;
    for (i, r) in joint.iter().enumerate() {
        for (j, &p) in r.iter().enumerate() {
            if p > 0.0 {
                acc += p * (p / (rows[i] * cols[j])).log2();
            }
        }
    }
    acc.max(0.0)
}

impl BinningDesign {
    /// `kernel` has one row per state over `(u, x)` with `x` minor.
    pub fn new(ch: &StateChannel, kernel: &CondPmf, card_u: usize) -> Result<Self> {
        let (nx, ns, ny) = (ch.x_size(), ch.s_size(), ch.y_size());
        for n in [card_u, nx, ns, ny] {
            if n > MAX_SIM_ALPHABET {
                return Err(Error::AlphabetTooLarge {
                    size: n,
                    cap: MAX_SIM_ALPHABET,
                });
            }
        }
        if kernel.inputs() != ns || kernel.outputs() != card_u * nx {
            return Err(Error::DimensionMismatch {
                expected: ns * card_u * nx,
                got: kernel.inputs() * kernel.outputs(),
            });
        }
        let p_s = ch.state().probs().to_vec();
        let mut us = vec![vec![0.0; ns]; card_u];
        let mut uy = vec![vec![0.0; ny]; card_u];
        let mut usx = vec![vec![0.0; nx]; card_u * ns];
        for s in 0..ns {
            for u in 0..card_u {
                for x in 0..nx {
                    let p = p_s[s] * kernel.get(s, u * nx + x);
                    us[u][s] += p;
                    usx[u * ns + s][x] += p;
                    for (y, &w) in ch.row(x, s).iter().enumerate() {
                        uy[u][y] += p * w;
                    }
                }
            }
        }
        let p_u: Vec<f64> = us.iter().map(|r| r.iter().sum()).collect();
        let cond = |m: &[Vec<f64>], c: usize| normalize(&m.iter().map(|r| r[c]).collect::<Vec<_>>());
        let x_given_us = usx
            .iter()
            .map(|r| normalize(r).unwrap_or_else(|| vec![1.0 / nx as f64; nx]))
            .collect();
        Ok(Self {
            card_u,
            card_x: nx,
            card_s: ns,
            card_y: ny,
            u_given_s: (0..ns).map(|s| cond(&us, s)).collect(),
            u_given_y: (0..ny).map(|y| cond(&uy, y)).collect(),
            x_given_us,
            channel: (0..nx * ns).map(|i| ch.row(i / ns, i % ns).to_vec()).collect(),
            mi_us: mi(&us),
            mi_uy: mi(&uy),
            p_s,
            p_u,
        })
    }

    /// From a candidate whose first block is `P_{U,X|S}`.
    pub fn from_candidate(ch: &StateChannel, cand: &CandidatePdf) -> Result<Self> {
        let k = &cand.blocks()[0];
        Self::new(ch, k, k.outputs() / ch.x_size())
    }

    pub fn card_u(&self) -> usize {
        self.card_u
    }

    pub fn p_u(&self) -> &[f64] {
        &self.p_u
    }

    /// `I(U;S)` of the design.
    pub fn info_us(&self) -> f64 {
        self.mi_us
    }

    /// `I(U;Y)` of the design.
    pub fn info_uy(&self) -> f64 {
        self.mi_uy
    }
}

/// Conditional total-variation typicality of `u` against `reference`.
pub fn cond_typical(u: &[usize], reference: &[usize], laws: &[Option<Vec<f64>>], card_u: usize, eps: f64) -> bool {
    let mut counts = vec![vec![0usize; card_u]; laws.len()];
    for (&a, &c) in u.iter().zip(reference) {
        counts[c][a] += 1;
    }
    counts.iter().zip(laws).all(|(k, law)| {
        let n: usize = k.iter().sum();
        if n == 0 {
            return true;
        }
        let Some(law) = law else { return false };
        let tv: f64 = 0.5 * k.iter().zip(law).map(|(&a, &p)| (a as f64 / n as f64 - p).abs()).sum::<f64>();
        tv <= eps + TV_TOL
    })
}

/// An explicitly stored binning code.
#[derive(Clone, Debug)]
pub struct BinningCode {
    pub n: usize,
    pub bins: usize,
    pub per_bin: usize,
    pub epsilon: f64,
    /// Bin `m` holds entries `m * per_bin .. (m + 1) * per_bin`.
    pub codebook: Vec<Vec<usize>>,
}

fn count(rate: f64, n: usize) -> f64 {
    (n as f64 * rate).exp2().ceil()
}

/// `log2 ⌈2^{nR}⌉` without overflow.
fn log2_count(rate: f64, n: usize) -> f64 {
    let x = n as f64 * rate;
    if x < 52.0 {
        count(rate, n).log2()
    } else {
        x
    }
}

impl BinningCode {
    /// Draws a code; fails if `codewords · n` exceeds [`EXPLICIT_CAP`].
    pub fn generate(
        design: &BinningDesign,
        n: usize,
        rate: f64,
        excess: f64,
        epsilon: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let (bins, per_bin) = (count(rate, n), count(excess, n));
        if bins * per_bin * n as f64 > EXPLICIT_CAP {
            return Err(Error::InvalidParameter(format!(
                "code with {bins} x {per_bin} words of length {n} is too large to store"
            )));
        }
        let pick = WeightedIndex::new(&design.p_u).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let (bins, per_bin) = (bins as usize, per_bin as usize);
        let codebook = (0..bins * per_bin)
            .map(|_| (0..n).map(|_| pick.sample(rng)).collect())
            .collect();
        Ok(Self {
            n,
            bins,
            per_bin,
            epsilon,
            codebook,
        })
    }

    pub fn from_codebook(n: usize, bins: usize, per_bin: usize, epsilon: f64, codebook: Vec<Vec<usize>>) -> Result<Self> {
        if bins == 0 || per_bin == 0 || codebook.len() != bins * per_bin || codebook.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("codebook does not match its bin layout".into()));
        }
        Ok(Self {
            n,
            bins,
            per_bin,
            epsilon,
            codebook,
        })
    }

    /// First sequence of the message's bin typical with `s`, mapped to an
    /// input sequence; `None` on encoding failure.
    pub fn encode(&self, design: &BinningDesign, s: &[usize], message: usize, rng: &mut impl Rng) -> Option<Vec<usize>> {
        assert_eq!(s.len(), self.n, "state sequence length");
        let bin = &self.codebook[message * self.per_bin..(message + 1) * self.per_bin];
        let u = bin
            .iter()
            .find(|u| cond_typical(u, s, &design.u_given_s, design.card_u, self.epsilon))?;
        Some(map_input(design, u, s, rng))
    }

    /// Bin of the unique codeword typical with `y`.
    pub fn decode(&self, design: &BinningDesign, y: &[usize]) -> Option<usize> {
        assert_eq!(y.len(), self.n, "output sequence length");
        let mut hits = self
            .codebook
            .iter()
            .enumerate()
            .filter(|(_, u)| cond_typical(u, y, &design.u_given_y, design.card_u, self.epsilon));
        let (first, _) = hits.next()?;
        match hits.next() {
            Some(_) => None,
            None => Some(first / self.per_bin),
        }
    }
}

fn sample_row(row: &[f64], rng: &mut impl Rng) -> usize {
    let mut t = rng.gen::<f64>();
    for (i, &p) in row.iter().enumerate() {
        if t < p {
            return i;
        }
        t -= p;
    }
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn map_input(design: &BinningDesign, u: &[usize], s: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    u.iter()
        .zip(s)
        .map(|(&a, &b)| sample_row(&design.x_given_us[a * design.card_s + b], rng))
        .collect()
}

fn channel_out(design: &BinningDesign, x: &[usize], s: &[usize], rng: &mut impl Rng) -> Vec<usize> {
    x.iter()
        .zip(s)
        .map(|(&a, &b)| sample_row(&design.channel[a * design.card_s + b], rng))
        .collect()
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Count vectors of length `len` summing to `n` within total variation `eps`
/// of `target`, with their log-probabilities under the multinomial `p`.
fn ball(n: usize, target: &[f64], p: &[f64], eps: f64, lf: &[f64]) -> Vec<(Vec<usize>, f64)> {
    let k = target.len();
    let nf = n as f64;
    let lo: Vec<usize> = target.iter().map(|t| (nf * (t - eps) - 1e-9).ceil().max(0.0) as usize).collect();
    let hi: Vec<usize> = target.iter().map(|t| ((nf * (t + eps) + 1e-9).floor()).min(nf) as usize).collect();
    let mut out = Vec::new();
    let mut cur = vec![0usize; k];
    fn rec(
        i: usize,
        used: usize,
        cur: &mut Vec<usize>,
        ctx: (&[usize], &[usize], usize),
        out: &mut Vec<Vec<usize>>,
    ) {
        let (lo, hi, n) = ctx;
        let k = cur.len();
        if i == k - 1 {
            let rest = n - used;
            if rest >= lo[i] && rest <= hi[i] {
                cur[i] = rest;
                out.push(cur.clone());
            }
            return;
        }
        for c in lo[i]..=hi[i].min(n - used) {
            cur[i] = c;
            rec(i + 1, used + c, cur, ctx, out);
        }
    }
    let mut raw = Vec::new();
    if lo.iter().sum::<usize>() <= n {
        rec(0, 0, &mut cur, (&lo, &hi, n), &mut raw);
    }
    for c in raw {
        let tv = 0.5 * c.iter().zip(target).map(|(&a, &t)| (a as f64 / nf - t).abs()).sum::<f64>();
        if tv > eps + TV_TOL {
            continue;
        }
        let mut lp = lf[n];
        for (&a, &q) in c.iter().zip(p) {
            lp -= lf[a];
            if a > 0 {
                lp += if q > 0.0 { a as f64 * q.ln() } else { f64::NEG_INFINITY };
            }
        }
        if lp > f64::NEG_INFINITY {
            out.push((c, lp));
        }
    }
    out
}

fn log_sum_exp(v: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = v.collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Natural log of the probability that none of `2^{log2_count}` independent
/// draws hits an event of log-probability `ln_p`.
fn ln_none(log2_count: f64, ln_p: f64) -> f64 {
    if ln_p == f64::NEG_INFINITY || log2_count == f64::NEG_INFINITY {
        return 0.0;
    }
    // ln(-ln(1 - p)), which is ln p for small p
    let ln_rate = if ln_p < -30.0 { ln_p } else { (-(-ln_p.exp()).ln_1p()).ln() };
    if ln_rate == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    -(log2_count * std::f64::consts::LN_2 + ln_rate).exp()
}

/// Class size and its ball of `(counts, ln probability)` pairs.
type ClassBalls = Vec<(usize, Vec<(Vec<usize>, f64)>)>;

/// Per-class balls of sequences typical with `reference`; `None` if some
/// class has no typical completion.
fn class_balls(
    reference: &[usize],
    laws: &[Option<Vec<f64>>],
    design: &BinningDesign,
    eps: f64,
    lf: &[f64],
) -> Option<ClassBalls> {
    let mut n_c = vec![0usize; laws.len()];
    for &c in reference {
        n_c[c] += 1;
    }
    let mut out = Vec::new();
    for (c, &n) in n_c.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let b = ball(n, laws[c].as_ref()?, &design.p_u, eps, lf);
        if b.is_empty() {
            return None;
        }
        out.push((c, b));
    }
    Some(out)
}

fn ln_typical(balls: &Option<ClassBalls>) -> f64 {
    match balls {
        None => f64::NEG_INFINITY,
        Some(bs) => bs.iter().map(|(_, b)| log_sum_exp(b.iter().map(|(_, l)| *l))).sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Explicit,
    Ensemble,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub rate: f64,
    /// Defaults to `I(U;S) + 3ε`.
    pub excess: Option<f64>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Defaults to [`default_epsilon`].
    pub epsilon: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchStats {
    pub batch: usize,
    pub trials: usize,
    pub errors: usize,
    pub encode_failures: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub block_error_rate: f64,
    pub encode_failure_rate: f64,
    pub errors: usize,
    pub encode_failures: usize,
    pub trials: usize,
    pub backend: Backend,
    pub epsilon: f64,
    pub excess: f64,
    pub batches: Vec<BatchStats>,
}

#[derive(Clone, Copy, Default)]
struct Outcome {
    error: bool,
    encode_failure: bool,
}

fn draw_states(design: &BinningDesign, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| sample_row(&design.p_s, rng)).collect()
}

fn explicit_trial(design: &BinningDesign, code: &BinningCode, rng: &mut ChaCha8Rng) -> Outcome {
    let s = draw_states(design, code.n, rng);
    let message = rng.gen_range(0..code.bins);
    let Some(x) = code.encode(design, &s, message, rng) else {
        return Outcome {
            error: true,
            encode_failure: true,
        };
    };
    let y = channel_out(design, &x, &s, rng);
    Outcome {
        error: code.decode(design, &y) != Some(message),
        encode_failure: false,
    }
}

fn ensemble_trial(design: &BinningDesign, cfg: &SimConfig, excess: f64, eps: f64, lf: &[f64], rng: &mut ChaCha8Rng) -> Outcome {
    let n = cfg.n;
    let s = draw_states(design, n, rng);
    let enc = class_balls(&s, &design.u_given_s, design, eps, lf);
    let ln_fail = ln_none(log2_count(excess, n), ln_typical(&enc));
    let Some(enc) = enc.filter(|_| rng.gen::<f64>().ln() >= ln_fail) else {
        return Outcome {
            error: true,
            encode_failure: true,
        };
    };
    let mut u = vec![0usize; n];
    for (c, b) in &enc {
        let w = WeightedIndex::new(b.iter().map(|(_, l)| (l - b[0].1).exp().max(f64::MIN_POSITIVE))).expect("weights");
        let counts = &b[w.sample(rng)].0;
        let mut symbols: Vec<usize> = counts.iter().enumerate().flat_map(|(a, &k)| std::iter::repeat_n(a, k)).collect();
        symbols.shuffle(rng);
        for (pos, sym) in s.iter().enumerate().filter(|(_, &v)| v == *c).map(|(i, _)| i).zip(symbols) {
            u[pos] = sym;
        }
    }
    let x = map_input(design, &u, &s, rng);
    let y = channel_out(design, &x, &s, rng);
    if !cond_typical(&u, &y, &design.u_given_y, design.card_u, eps) {
        return Outcome {
            error: true,
            encode_failure: false,
        };
    }
    let total = log2_count(cfg.rate, n) + log2_count(excess, n);
    let others = if total < 52.0 { (total.exp2().round() - 1.0).log2() } else { total };
    let ln_clear = ln_none(others, ln_typical(&class_balls(&y, &design.u_given_y, design, eps, lf)));
    Outcome {
        error: rng.gen::<f64>().ln() >= ln_clear,
        encode_failure: false,
    }
}

/// Runs `cfg.trials` independent transmissions of a uniformly drawn message.
/// Trials are split into batches of [`BATCH_TRIALS`]; each batch uses a
/// fresh explicit code, or each trial a fresh ensemble code when the code is
/// too large to store.
pub fn simulate(ch: &StateChannel, design: &BinningDesign, cfg: &SimConfig) -> Result<SimResult> {
    if design.card_x != ch.x_size() || design.card_s != ch.s_size() || design.card_y != ch.y_size() {
        return Err(Error::InvalidParameter("design does not match the channel".into()));
    }
    if cfg.n == 0 || cfg.n > MAX_BLOCK_LENGTH {
        return Err(Error::InvalidParameter(format!("block length must be in 1..={MAX_BLOCK_LENGTH}")));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is needed".into()));
    }
    let eps = cfg
        .epsilon
        .unwrap_or_else(|| default_epsilon(design.card_u, design.card_s, design.card_y));
    let excess = cfg.excess.unwrap_or(design.mi_us + 3.0 * eps);
    if !(cfg.rate >= 0.0 && excess >= 0.0 && eps > 0.0 && cfg.rate.is_finite() && excess.is_finite()) {
        return Err(Error::InvalidParameter("rates must be non-negative and slack positive".into()));
    }
    let size = count(cfg.rate, cfg.n) * count(excess, cfg.n) * cfg.n as f64;
    let backend = if size <= EXPLICIT_CAP { Backend::Explicit } else { Backend::Ensemble };
    let lf = ln_factorials(cfg.n);
    let n_batches = cfg.trials.div_ceil(BATCH_TRIALS);
    let mut batches = Vec::with_capacity(n_batches);
    for batch in 0..n_batches {
        let range = batch * BATCH_TRIALS..((batch + 1) * BATCH_TRIALS).min(cfg.trials);
        let code = match backend {
            Backend::Explicit => {
                let mut rng = stream_rng(cfg.seed, (1 << 40) | batch as u64);
                Some(BinningCode::generate(design, cfg.n, cfg.rate, excess, eps, &mut rng)?)
            }
            Backend::Ensemble => None,
        };
        let outcomes: Vec<Outcome> = range
            .clone()
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(cfg.seed, t as u64);
                match &code {
                    Some(code) => explicit_trial(design, code, &mut rng),
                    None => ensemble_trial(design, cfg, excess, eps, &lf, &mut rng),
                }
            })
            .collect();
        batches.push(BatchStats {
            batch,
            trials: range.len(),
            errors: outcomes.iter().filter(|o| o.error).count(),
            encode_failures: outcomes.iter().filter(|o| o.encode_failure).count(),
        });
    }
    let errors = batches.iter().map(|b| b.errors).sum();
    let encode_failures = batches.iter().map(|b| b.encode_failures).sum();
    Ok(SimResult {
        block_error_rate: errors as f64 / cfg.trials as f64,
        encode_failure_rate: encode_failures as f64 / cfg.trials as f64,
        errors,
        encode_failures,
        trials: cfg.trials,
        backend,
        epsilon: eps,
        excess,
        batches,
    })
}
