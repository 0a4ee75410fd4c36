//! Channels with state for the single-user, multiple-access, broadcast and
//! relay settings, plus structural classifiers.
//!
//! Transition tensors are dense [`CondPmf`]s whose rows are indexed by the
//! inputs and states in row-major order (first listed coordinate most
//! significant). Joint tables produced here use fixed coordinate names, see
//! the `names` module.

use crate::error::{Error, Result};
use crate::optimizer::{simplex_grid, stream_rng};
use crate::prob::{entropy_bits, io_mutual_info, CondPmf, Coord, JointPmf, Pmf};

/// Largest alphabet accepted for any input, state or output coordinate.
pub const MAX_ALPHABET: usize = 6;

/// Transition entries within this distance of 0 or 1 count as deterministic.
pub const DET_TOL: f64 = 1e-12;

/// Coordinate names used in joint tables.
pub mod names {
    pub const S: &str = "S";
    pub const S1: &str = "S1";
    pub const S2: &str = "S2";
    pub const X: &str = "X";
    pub const X1: &str = "X1";
    pub const X2: &str = "X2";
    pub const XR: &str = "Xr";
    pub const Y: &str = "Y";
    pub const Y1: &str = "Y1";
    pub const Y2: &str = "Y2";
    pub const YR: &str = "Yr";
}

fn check_alphabet(size: usize) -> Result<()> {
    if size == 0 {
        return Err(Error::EmptyAlphabet);
    }
    if size > MAX_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            size,
            cap: MAX_ALPHABET,
        });
    }
    Ok(())
}

fn check_kernel(kernel: &CondPmf, rows: usize, outputs: usize) -> Result<()> {
    if kernel.inputs() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: kernel.inputs(),
        });
    }
    if kernel.outputs() != outputs {
        return Err(Error::DimensionMismatch {
            expected: outputs,
            got: kernel.outputs(),
        });
    }
    Ok(())
}

/// A deterministic map `f(x, s)` read off a 0/1 transition tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetMap {
    inputs: usize,
    states: usize,
    outputs: usize,
    table: Vec<usize>,
}

impl DetMap {
    fn from_kernel(kernel: &CondPmf, inputs: usize, states: usize) -> Option<Self> {
        let mut table = Vec::with_capacity(inputs * states);
        for r in 0..kernel.inputs() {
            let row = kernel.row(r);
            if row.iter().any(|&p| p > DET_TOL && p < 1.0 - DET_TOL) {
                return None;
            }
            table.push(row.iter().position(|&p| p >= 1.0 - DET_TOL)?);
        }
        Some(Self {
            inputs,
            states,
            outputs: kernel.outputs(),
            table,
        })
    }

    pub fn apply(&self, x: usize, s: usize) -> usize {
        self.table[x * self.states + s]
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Sorted image of `x ↦ f(x, s)`.
    pub fn image(&self, s: usize) -> Vec<usize> {
        let mut img: Vec<usize> = (0..self.inputs).map(|x| self.apply(x, s)).collect();
        img.sort_unstable();
        img.dedup();
        img
    }

    /// One input per image point of `f(·, s)`.
    pub fn representatives(&self, s: usize) -> Vec<usize> {
        let mut seen = Vec::new();
        let mut reps = Vec::new();
        for x in 0..self.inputs {
            let y = self.apply(x, s);
            if !seen.contains(&y) {
                seen.push(y);
                reps.push(x);
            }
        }
        reps
    }
}

/// Single-user channel `P(y | x, s)` with state pmf `P_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateChannel {
    x: usize,
    s: usize,
    y: usize,
    state: Pmf,
    transition: CondPmf,
}

impl StateChannel {
    /// `transition` has one row per `(x, s)`, `x` major.
    pub fn new(state: Pmf, x: usize, transition: CondPmf) -> Result<Self> {
        let s = state.len();
        let y = transition.outputs();
        for n in [x, s, y] {
            check_alphabet(n)?;
        }
        check_kernel(&transition, x * s, y)?;
        Ok(Self {
            x,
            s,
            y,
            state,
            transition,
        })
    }

    pub fn deterministic(state: Pmf, x: usize, y: usize, f: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let s = state.len();
        check_alphabet(s)?;
        let kernel = CondPmf::deterministic(x * s, y, |r| f(r / s, r % s));
        Self::new(state, x, kernel)
    }

    /// Builds `P(y | x, s)` from `row(x, s)`.
    pub fn from_fn(state: Pmf, x: usize, row: impl Fn(usize, usize) -> Vec<f64>) -> Result<Self> {
        let s = state.len();
        let rows = (0..x * s).map(|r| row(r / s, r % s)).collect();
        Self::new(state, x, CondPmf::from_rows(rows)?)
    }

    pub fn x_size(&self) -> usize {
        self.x
    }

    pub fn s_size(&self) -> usize {
        self.s
    }

    pub fn y_size(&self) -> usize {
        self.y
    }

    pub fn state(&self) -> &Pmf {
        &self.state
    }

    pub fn transition(&self) -> &CondPmf {
        &self.transition
    }

    pub fn row(&self, x: usize, s: usize) -> &[f64] {
        self.transition.row(x * self.s + s)
    }

    /// The channel `x ↦ P(· | x, s)` for a fixed state.
    pub fn state_slice(&self, s: usize) -> CondPmf {
        let data = (0..self.x).flat_map(|x| self.row(x, s).iter().copied()).collect();
        CondPmf::from_raw(self.x, self.y, data)
    }

    /// Returns the map `f` when every transition entry is 0 or 1.
    pub fn is_deterministic(&self) -> Option<DetMap> {
        DetMap::from_kernel(&self.transition, self.x, self.s)
    }

    /// Joint table over `S` alone.
    pub fn base(&self) -> JointPmf {
        JointPmf::from_pmf(names::S, &self.state)
    }

    /// Appends `Y` to a joint that already carries `X` and `S`.
    pub fn attach_output(&self, joint: &JointPmf) -> Result<JointPmf> {
        joint.extend(&[names::X, names::S], &[Coord::new(names::Y, self.y)], &self.transition)
    }

    /// Joint over `S, X, Y` for the input law `P_{X|S}`.
    pub fn joint(&self, input: &CondPmf) -> Result<JointPmf> {
        let j = self.base().extend(&[names::S], &[Coord::new(names::X, self.x)], input)?;
        self.attach_output(&j)
    }
}

/// Output alphabet of a MAC: a plain alphabet or a declared product `Y1 × Y2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacOutput {
    Scalar(usize),
    Product(usize, usize),
}

impl MacOutput {
    pub fn size(&self) -> usize {
        match *self {
            MacOutput::Scalar(n) => n,
            MacOutput::Product(a, b) => a * b,
        }
    }
}

/// Two-user MAC `P(y | x1, x2, s1, s2)` with joint state pmf over `(S1, S2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MacStateChannel {
    x1: usize,
    x2: usize,
    s1: usize,
    s2: usize,
    output: MacOutput,
    state: JointPmf,
    transition: CondPmf,
}

impl MacStateChannel {
    /// `state` must have coordinates `S1, S2`; `transition` has one row per
    /// `(x1, x2, s1, s2)`.
    pub fn new(state: JointPmf, x1: usize, x2: usize, output: MacOutput, transition: CondPmf) -> Result<Self> {
        let s1 = state.size_of(names::S1)?;
        let s2 = state.size_of(names::S2)?;
        if state.coords().len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: state.coords().len(),
            });
        }
        let state = state.marginal(&[names::S1, names::S2])?;
        for n in [x1, x2, s1, s2] {
            check_alphabet(n)?;
        }
        match output {
            MacOutput::Scalar(n) => check_alphabet(n)?,
            MacOutput::Product(a, b) => {
                check_alphabet(a)?;
                check_alphabet(b)?;
            }
        }
        check_kernel(&transition, x1 * x2 * s1 * s2, output.size())?;
        Ok(Self {
            x1,
            x2,
            s1,
            s2,
            output,
            state,
            transition,
        })
    }

    /// Orthogonal MAC built from two single-user links `P(y_i | x_i, s_i)`
    /// (rows `x_i` major) sharing the joint state `state`.
    pub fn from_links(state: JointPmf, x1: usize, link1: &CondPmf, x2: usize, link2: &CondPmf) -> Result<Self> {
        let s1 = state.size_of(names::S1)?;
        let s2 = state.size_of(names::S2)?;
        check_kernel(link1, x1 * s1, link1.outputs())?;
        check_kernel(link2, x2 * s2, link2.outputs())?;
        let (y1, y2) = (link1.outputs(), link2.outputs());
        let mut data = Vec::with_capacity(x1 * x2 * s1 * s2 * y1 * y2);
        for a in 0..x1 {
            for b in 0..x2 {
                for c in 0..s1 {
                    for d in 0..s2 {
                        let r1 = link1.row(a * s1 + c);
                        let r2 = link2.row(b * s2 + d);
                        for p in r1 {
                            data.extend(r2.iter().map(|q| p * q));
                        }
                    }
                }
            }
        }
        let kernel = CondPmf::new(x1 * x2 * s1 * s2, y1 * y2, data)?;
        Self::new(state, x1, x2, MacOutput::Product(y1, y2), kernel)
    }

    /// Builds the transition from `row(x1, x2, s1, s2)`.
    pub fn from_fn(
        state: JointPmf,
        x1: usize,
        x2: usize,
        output: MacOutput,
        row: impl Fn(usize, usize, usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let s1 = state.size_of(names::S1)?;
        let s2 = state.size_of(names::S2)?;
        let mut rows = Vec::with_capacity(x1 * x2 * s1 * s2);
        for a in 0..x1 {
            for b in 0..x2 {
                for c in 0..s1 {
                    for d in 0..s2 {
                        rows.push(row(a, b, c, d));
                    }
                }
            }
        }
        Self::new(state, x1, x2, output, CondPmf::from_rows(rows)?)
    }

    pub fn x1_size(&self) -> usize {
        self.x1
    }

    pub fn x2_size(&self) -> usize {
        self.x2
    }

    pub fn s1_size(&self) -> usize {
        self.s1
    }

    pub fn s2_size(&self) -> usize {
        self.s2
    }

    pub fn output(&self) -> MacOutput {
        self.output
    }

    pub fn state(&self) -> &JointPmf {
        &self.state
    }

    pub fn transition(&self) -> &CondPmf {
        &self.transition
    }

    fn row(&self, x1: usize, x2: usize, s1: usize, s2: usize) -> &[f64] {
        self.transition
            .row(((x1 * self.x2 + x2) * self.s1 + s1) * self.s2 + s2)
    }

    pub fn is_deterministic(&self) -> bool {
        self.transition
            .as_slice()
            .iter()
            .all(|&p| p <= DET_TOL || p >= 1.0 - DET_TOL)
    }

    /// Whether `P(s1, s2) = P(s1) P(s2)` within 1e-9 per entry.
    pub fn states_independent(&self) -> bool {
        let p1 = self.state.marginal(&[names::S1]).expect("S1 present");
        let p2 = self.state.marginal(&[names::S2]).expect("S2 present");
        let t = self.state.probs();
        (0..self.s1).all(|a| {
            (0..self.s2).all(|b| (t[a * self.s2 + b] - p1.probs()[a] * p2.probs()[b]).abs() <= 1e-9)
        })
    }

    /// Factor channels `P(y1 | x1, s1)` and `P(y2 | x2, s2)` when the
    /// transition factors within 1e-9 per entry, `None` otherwise.
    pub fn is_orthogonal(&self) -> Result<Option<(StateChannel, StateChannel)>> {
        let MacOutput::Product(y1, y2) = self.output else {
            return Err(Error::Precondition(
                "orthogonality needs an output alphabet declared as a product Y1 x Y2".into(),
            ));
        };
        let marg = |row: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut m1 = vec![0.0; y1];
            let mut m2 = vec![0.0; y2];
            for a in 0..y1 {
                for b in 0..y2 {
                    m1[a] += row[a * y2 + b];
                    m2[b] += row[a * y2 + b];
                }
            }
            (m1, m2)
        };
        let mut k1 = vec![0.0; self.x1 * self.s1 * y1];
        let mut k2 = vec![0.0; self.x2 * self.s2 * y2];
        for a in 0..self.x1 {
            for c in 0..self.s1 {
                let (m1, _) = marg(self.row(a, 0, c, 0));
                k1[(a * self.s1 + c) * y1..][..y1].copy_from_slice(&m1);
            }
        }
        for b in 0..self.x2 {
            for d in 0..self.s2 {
                let (_, m2) = marg(self.row(0, b, 0, d));
                k2[(b * self.s2 + d) * y2..][..y2].copy_from_slice(&m2);
            }
        }
        for a in 0..self.x1 {
            for b in 0..self.x2 {
                for c in 0..self.s1 {
                    for d in 0..self.s2 {
                        let row = self.row(a, b, c, d);
                        let r1 = &k1[(a * self.s1 + c) * y1..][..y1];
                        let r2 = &k2[(b * self.s2 + d) * y2..][..y2];
                        for i in 0..y1 {
                            for j in 0..y2 {
                                if (row[i * y2 + j] - r1[i] * r2[j]).abs() > 1e-9 {
                                    return Ok(None);
                                }
                            }
                        }
                    }
                }
            }
        }
        let ps1 = Pmf::new(self.state.marginal(&[names::S1])?.probs().to_vec())?;
        let ps2 = Pmf::new(self.state.marginal(&[names::S2])?.probs().to_vec())?;
        let c1 = StateChannel::new(ps1, self.x1, CondPmf::from_raw(self.x1 * self.s1, y1, k1))?;
        let c2 = StateChannel::new(ps2, self.x2, CondPmf::from_raw(self.x2 * self.s2, y2, k2))?;
        Ok(Some((c1, c2)))
    }

    /// Joint over `S1, S2`.
    pub fn base(&self) -> JointPmf {
        self.state.clone()
    }

    /// Appends `Y` to a joint carrying `X1, X2, S1, S2`.
    pub fn attach_output(&self, joint: &JointPmf) -> Result<JointPmf> {
        joint.extend(
            &[names::X1, names::X2, names::S1, names::S2],
            &[Coord::new(names::Y, self.output.size())],
            &self.transition,
        )
    }
}

/// Two-receiver broadcast channel `P(y1, y2 | x, s)`; each row is the joint
/// output pmf with `y1` major.
#[derive(Clone, Debug, PartialEq)]
pub struct BcStateChannel {
    x: usize,
    s: usize,
    y1: usize,
    y2: usize,
    state: Pmf,
    transition: CondPmf,
}

/// Verdict of the more-capable test.
#[derive(Clone, Debug, PartialEq)]
pub enum MoreCapable {
    /// `witness` is an input law `P_{X|S}` with `I(X;Y2|S) - I(X;Y1|S) = gap > 1e-9`.
    CertifiedFalse { witness: CondPmf, gap: f64 },
    ProbablyTrue,
}

/// Verdict of the test `I(Y1;Y2|S) = 0` for every input law.
#[derive(Clone, Debug, PartialEq)]
pub enum Condition12 {
    Holds,
    /// `witness` is an input law `P_{X|S}` with `I(Y1;Y2|S) = value > 1e-9`.
    Fails { witness: CondPmf, value: f64 },
    /// No violation among the sampled input laws of a stochastic channel.
    SampledOnly,
}

impl BcStateChannel {
    pub fn new(state: Pmf, x: usize, y1: usize, y2: usize, transition: CondPmf) -> Result<Self> {
        let s = state.len();
        for n in [x, s, y1, y2] {
            check_alphabet(n)?;
        }
        check_kernel(&transition, x * s, y1 * y2)?;
        Ok(Self {
            x,
            s,
            y1,
            y2,
            state,
            transition,
        })
    }

    pub fn deterministic(
        state: Pmf,
        x: usize,
        y1: usize,
        y2: usize,
        f1: impl Fn(usize, usize) -> usize,
        f2: impl Fn(usize, usize) -> usize,
    ) -> Result<Self> {
        let s = state.len();
        check_alphabet(s)?;
        let kernel = CondPmf::deterministic(x * s, y1 * y2, |r| {
            let (a, b) = (r / s, r % s);
            f1(a, b) * y2 + f2(a, b)
        });
        Self::new(state, x, y1, y2, kernel)
    }

    /// Outputs conditionally independent given `(x, s)`: the joint row is
    /// `k1(x,s) ⊗ k2(x,s)`.
    pub fn from_marginals(state: Pmf, x: usize, k1: &CondPmf, k2: &CondPmf) -> Result<Self> {
        let rows = x * state.len();
        check_kernel(k1, rows, k1.outputs())?;
        check_kernel(k2, rows, k2.outputs())?;
        let data = (0..rows)
            .flat_map(|r| {
                let b = k2.row(r);
                k1.row(r).iter().flat_map(move |p| b.iter().map(move |q| p * q))
            })
            .collect();
        Self::new(state, x, k1.outputs(), k2.outputs(), CondPmf::new(rows, k1.outputs() * k2.outputs(), data)?)
    }

    /// Degraded construction `P(y1 | x, s) Q(y2 | y1)`.
    pub fn degraded(state: Pmf, x: usize, k1: &CondPmf, q: &CondPmf) -> Result<Self> {
        let rows = x * state.len();
        check_kernel(k1, rows, k1.outputs())?;
        check_kernel(q, k1.outputs(), q.outputs())?;
        let (y1, y2) = (k1.outputs(), q.outputs());
        let data = (0..rows)
            .flat_map(|r| {
                let row = k1.row(r);
                (0..y1).flat_map(move |a| q.row(a).iter().map(move |w| row[a] * w))
            })
            .collect();
        Self::new(state, x, y1, y2, CondPmf::new(rows, y1 * y2, data)?)
    }

    pub fn x_size(&self) -> usize {
        self.x
    }

    pub fn s_size(&self) -> usize {
        self.s
    }

    pub fn y1_size(&self) -> usize {
        self.y1
    }

    pub fn y2_size(&self) -> usize {
        self.y2
    }

    pub fn state(&self) -> &Pmf {
        &self.state
    }

    pub fn transition(&self) -> &CondPmf {
        &self.transition
    }

    /// Swaps the roles of the two receivers.
    pub fn swapped(&self) -> Self {
        let data = (0..self.x * self.s)
            .flat_map(|r| {
                let row = self.transition.row(r);
                (0..self.y2).flat_map(move |b| (0..self.y1).map(move |a| row[a * self.y2 + b]))
            })
            .collect();
        Self {
            x: self.x,
            s: self.s,
            y1: self.y2,
            y2: self.y1,
            state: self.state.clone(),
            transition: CondPmf::from_raw(self.x * self.s, self.y1 * self.y2, data),
        }
    }

    fn marginal_kernel(&self, first: bool) -> CondPmf {
        let (n, m) = (self.y1, self.y2);
        let out = if first { n } else { m };
        let mut data = vec![0.0; self.x * self.s * out];
        for r in 0..self.x * self.s {
            let row = self.transition.row(r);
            for a in 0..n {
                for b in 0..m {
                    let k = if first { a } else { b };
                    data[r * out + k] += row[a * m + b];
                }
            }
        }
        CondPmf::from_raw(self.x * self.s, out, data)
    }

    /// The single-user channel to receiver 1.
    pub fn output1(&self) -> StateChannel {
        StateChannel::new(self.state.clone(), self.x, self.marginal_kernel(true)).expect("valid marginal")
    }

    /// The single-user channel to receiver 2.
    pub fn output2(&self) -> StateChannel {
        StateChannel::new(self.state.clone(), self.x, self.marginal_kernel(false)).expect("valid marginal")
    }

    pub fn det1(&self) -> Option<DetMap> {
        self.output1().is_deterministic()
    }

    pub fn det2(&self) -> Option<DetMap> {
        self.output2().is_deterministic()
    }

    pub fn base(&self) -> JointPmf {
        JointPmf::from_pmf(names::S, &self.state)
    }

    /// Appends `Y1, Y2` to a joint carrying `X` and `S`.
    pub fn attach_outputs(&self, joint: &JointPmf) -> Result<JointPmf> {
        joint.extend(
            &[names::X, names::S],
            &[Coord::new(names::Y1, self.y1), Coord::new(names::Y2, self.y2)],
            &self.transition,
        )
    }

    /// Joint over `S, X, Y1, Y2`.
    pub fn joint(&self, input: &CondPmf) -> Result<JointPmf> {
        let j = self.base().extend(&[names::S], &[Coord::new(names::X, self.x)], input)?;
        self.attach_outputs(&j)
    }

    /// Returns `Q(y2 | y1)` when `P(y1, y2 | x, s) = P(y1 | x, s) Q(y2 | y1)`
    /// within 1e-7 per entry.
    ///
    /// The system decouples over `y1`; the weighted least-squares solution
    /// for each `y1` is exact whenever any solution exists.
    pub fn is_degraded(&self) -> Option<CondPmf> {
        let k1 = self.marginal_kernel(true);
        let rows = self.x * self.s;
        let mut q = vec![0.0; self.y1 * self.y2];
        for a in 0..self.y1 {
            let denom: f64 = (0..rows).map(|r| k1.get(r, a).powi(2)).sum();
            let qa = &mut q[a * self.y2..(a + 1) * self.y2];
            if denom <= 0.0 {
                qa.iter_mut().for_each(|v| *v = 1.0 / self.y2 as f64);
                continue;
            }
            for (b, v) in qa.iter_mut().enumerate() {
                *v = (0..rows)
                    .map(|r| k1.get(r, a) * self.transition.row(r)[a * self.y2 + b])
                    .sum::<f64>()
                    / denom;
            }
        }
        for r in 0..rows {
            let row = self.transition.row(r);
            for a in 0..self.y1 {
                for b in 0..self.y2 {
                    if (row[a * self.y2 + b] - k1.get(r, a) * q[a * self.y2 + b]).abs() > 1e-7 {
                        return None;
                    }
                }
            }
        }
        Some(CondPmf::from_raw(self.y1, self.y2, q))
    }

    /// Input pmfs tried per state: the type-`grid_k` grid followed by
    /// `n_random` uniform-Dirichlet draws.
    fn probe_inputs(&self, grid_k: usize, n_random: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = simplex_grid(self.x, grid_k.max(1)).map(Pmf::into_vec).collect();
        let mut rng = stream_rng(seed, 0x6d63);
        for _ in 0..n_random {
            let v: Vec<f64> = (0..self.x)
                .map(|_| -(1.0 - rand::Rng::gen::<f64>(&mut rng)).ln())
                .collect();
            let t: f64 = v.iter().sum();
            out.push(v.into_iter().map(|x| x / t).collect());
        }
        out
    }

    /// `P_{X|S}` equal to `p` in state `s` and to a point mass elsewhere.
    fn witness(&self, s: usize, p: &[f64]) -> CondPmf {
        let mut data = Vec::with_capacity(self.s * self.x);
        for t in 0..self.s {
            if t == s {
                data.extend_from_slice(p);
            } else {
                data.extend((0..self.x).map(|x| if x == 0 { 1.0 } else { 0.0 }));
            }
        }
        CondPmf::from_raw(self.s, self.x, data)
    }

    /// Searches for an input law with `I(X;Y2|S) > I(X;Y1|S)`.
    ///
    /// Both sides are averages over states of per-state mutual
    /// informations, so violations are searched state by state.
    pub fn is_more_capable(&self, grid_k: usize, n_random: usize, seed: u64) -> MoreCapable {
        let k1 = self.marginal_kernel(true);
        let k2 = self.marginal_kernel(false);
        let probes = self.probe_inputs(grid_k, n_random, seed);
        for s in 0..self.s {
            let ps = self.state.probs()[s];
            if ps <= 0.0 {
                continue;
            }
            let c1 = state_rows(&k1, self.x, self.s, s);
            let c2 = state_rows(&k2, self.x, self.s, s);
            for p in &probes {
                let gap = ps * (io_mutual_info(p, &c2) - io_mutual_info(p, &c1));
                if gap > 1e-9 {
                    return MoreCapable::CertifiedFalse {
                        witness: self.witness(s, p),
                        gap,
                    };
                }
            }
        }
        MoreCapable::ProbablyTrue
    }

    /// Tests whether `I(Y1;Y2|S) = 0` for every input law.
    ///
    /// For deterministic channels this is exact: the condition fails iff some
    /// state admits inputs `x, x'` that change both outputs, and the uniform
    /// law on `{x, x'}` is then a witness. Otherwise input laws are sampled.
    pub fn check_condition_12(&self, grid_k: usize, n_random: usize, seed: u64) -> Condition12 {
        if let (Some(f1), Some(f2)) = (self.det1(), self.det2()) {
            for s in 0..self.s {
                if self.state.probs()[s] <= 0.0 {
                    continue;
                }
                for x in 0..self.x {
                    for x2 in x + 1..self.x {
                        if f1.apply(x, s) != f1.apply(x2, s) && f2.apply(x, s) != f2.apply(x2, s) {
                            let mut p = vec![0.0; self.x];
                            p[x] = 0.5;
                            p[x2] = 0.5;
                            return Condition12::Fails {
                                witness: self.witness(s, &p),
                                value: self.state.probs()[s],
                            };
                        }
                    }
                }
            }
            return Condition12::Holds;
        }
        let probes = self.probe_inputs(grid_k, n_random, seed);
        for s in 0..self.s {
            let ps = self.state.probs()[s];
            if ps <= 0.0 {
                continue;
            }
            for p in &probes {
                let value = ps * self.output_mi_in_state(s, p);
                if value > 1e-9 {
                    return Condition12::Fails {
                        witness: self.witness(s, p),
                        value,
                    };
                }
            }
        }
        Condition12::SampledOnly
    }

    /// `I(Y1;Y2)` in state `s` under input pmf `p`.
    fn output_mi_in_state(&self, s: usize, p: &[f64]) -> f64 {
        let mut joint = vec![0.0; self.y1 * self.y2];
        for (x, &px) in p.iter().enumerate() {
            for (j, w) in joint.iter_mut().zip(self.transition.row(x * self.s + s)) {
                *j += px * w;
            }
        }
        let mut m1 = vec![0.0; self.y1];
        let mut m2 = vec![0.0; self.y2];
        for a in 0..self.y1 {
            for b in 0..self.y2 {
                m1[a] += joint[a * self.y2 + b];
                m2[b] += joint[a * self.y2 + b];
            }
        }
        (entropy_bits(&m1) + entropy_bits(&m2) - entropy_bits(&joint)).max(0.0)
    }
}

fn state_rows(kernel: &CondPmf, x: usize, states: usize, s: usize) -> CondPmf {
    let data = (0..x).flat_map(|a| kernel.row(a * states + s).iter().copied()).collect();
    CondPmf::from_raw(x, kernel.outputs(), data)
}

/// Relay channel `P(y, yr | x, xr, s1, s2)`; rows hold the joint output pmf
/// with `y` major. Single-state channels use `|S2| = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelayStateChannel {
    x: usize,
    xr: usize,
    s1: usize,
    s2: usize,
    y: usize,
    yr: usize,
    state: JointPmf,
    transition: CondPmf,
}

impl RelayStateChannel {
    /// `state` has coordinates `S1, S2`; `transition` has one row per
    /// `(x, xr, s1, s2)` over `(y, yr)`.
    pub fn new(state: JointPmf, x: usize, xr: usize, y: usize, yr: usize, transition: CondPmf) -> Result<Self> {
        let s1 = state.size_of(names::S1)?;
        let s2 = state.size_of(names::S2)?;
        if state.coords().len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: state.coords().len(),
            });
        }
        let state = state.marginal(&[names::S1, names::S2])?;
        for n in [x, xr, s1, s2, y, yr] {
            check_alphabet(n)?;
        }
        check_kernel(&transition, x * xr * s1 * s2, y * yr)?;
        Ok(Self {
            x,
            xr,
            s1,
            s2,
            y,
            yr,
            state,
            transition,
        })
    }

    /// Single-state relay channel: the state is `S1` and `|S2| = 1`.
    pub fn single_state(state: &Pmf, x: usize, xr: usize, y: usize, yr: usize, transition: CondPmf) -> Result<Self> {
        let joint = JointPmf::new(
            vec![Coord::new(names::S1, state.len()), Coord::new(names::S2, 1)],
            state.probs().to_vec(),
        )?;
        Self::new(joint, x, xr, y, yr, transition)
    }

    /// Builds the transition from `row(x, xr, s1, s2)` over `(y, yr)`.
    pub fn from_fn(
        state: JointPmf,
        x: usize,
        xr: usize,
        y: usize,
        yr: usize,
        row: impl Fn(usize, usize, usize, usize) -> Vec<f64>,
    ) -> Result<Self> {
        let s1 = state.size_of(names::S1)?;
        let s2 = state.size_of(names::S2)?;
        let mut rows = Vec::new();
        for a in 0..x {
            for b in 0..xr {
                for c in 0..s1 {
                    for d in 0..s2 {
                        rows.push(row(a, b, c, d));
                    }
                }
            }
        }
        Self::new(state, x, xr, y, yr, CondPmf::from_rows(rows)?)
    }

    pub fn x_size(&self) -> usize {
        self.x
    }

    pub fn xr_size(&self) -> usize {
        self.xr
    }

    pub fn s1_size(&self) -> usize {
        self.s1
    }

    pub fn s2_size(&self) -> usize {
        self.s2
    }

    pub fn y_size(&self) -> usize {
        self.y
    }

    pub fn yr_size(&self) -> usize {
        self.yr
    }

    pub fn state(&self) -> &JointPmf {
        &self.state
    }

    pub fn transition(&self) -> &CondPmf {
        &self.transition
    }

    pub fn base(&self) -> JointPmf {
        self.state.clone()
    }

    /// Appends `Y, Yr` to a joint carrying `X, Xr, S1, S2`.
    pub fn attach_outputs(&self, joint: &JointPmf) -> Result<JointPmf> {
        joint.extend(
            &[names::X, names::XR, names::S1, names::S2],
            &[Coord::new(names::Y, self.y), Coord::new(names::YR, self.yr)],
            &self.transition,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(p: f64) -> Vec<Vec<f64>> {
        vec![vec![1.0 - p, p], vec![p, 1.0 - p]]
    }

    #[test]
    fn xor_is_deterministic() {
        let ch = StateChannel::deterministic(Pmf::uniform(2), 2, 2, |x, s| x ^ s).unwrap();
        let f = ch.is_deterministic().unwrap();
        for x in 0..2 {
            for s in 0..2 {
                assert_eq!(f.apply(x, s), x ^ s);
            }
        }
        assert_eq!(f.image(0), vec![0, 1]);
    }

    #[test]
    fn bsc_is_not_deterministic() {
        let ch = StateChannel::from_fn(Pmf::uniform(1), 2, |x, _| bsc(0.1)[x].clone()).unwrap();
        assert!(ch.is_deterministic().is_none());
    }

    #[test]
    fn bc_outputs_deterministic() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(2), 2, 2, 2, |x, _| x, |x, s| x & s).unwrap();
        assert!(bc.det1().is_some());
        assert!(bc.det2().is_some());
    }

    #[test]
    fn alphabet_cap() {
        let err = StateChannel::deterministic(Pmf::uniform(1), 7, 7, |x, _| x).unwrap_err();
        assert!(matches!(err, Error::AlphabetTooLarge { size: 7, .. }));
    }

    fn uniform_states(a: usize, b: usize) -> JointPmf {
        JointPmf::new(
            vec![Coord::new(names::S1, a), Coord::new(names::S2, b)],
            vec![1.0 / (a * b) as f64; a * b],
        )
        .unwrap()
    }

    #[test]
    fn orthogonal_xor_links() {
        let xor = CondPmf::deterministic(4, 2, |r| (r / 2) ^ (r % 2));
        let mac = MacStateChannel::from_links(uniform_states(2, 2), 2, &xor, 2, &xor).unwrap();
        let (c1, c2) = mac.is_orthogonal().unwrap().unwrap();
        assert_eq!(c1.is_deterministic().unwrap().apply(1, 1), 0);
        assert_eq!(c2.x_size(), 2);
    }

    #[test]
    fn scalar_output_is_not_a_product() {
        let mac = MacStateChannel::from_fn(uniform_states(1, 1), 2, 2, MacOutput::Scalar(2), |a, b, _, _| {
            let y = a ^ b;
            vec![(1 - y) as f64, y as f64]
        })
        .unwrap();
        assert!(matches!(mac.is_orthogonal(), Err(Error::Precondition(_))));
    }

    #[test]
    fn y1_depending_on_x2_is_not_orthogonal() {
        let mac = MacStateChannel::from_fn(uniform_states(1, 1), 2, 2, MacOutput::Product(2, 2), |a, b, _, _| {
            let y1 = a ^ b;
            let y2 = b;
            let mut row = vec![0.0; 4];
            row[y1 * 2 + y2] = 1.0;
            row
        })
        .unwrap();
        assert!(mac.is_orthogonal().unwrap().is_none());
    }

    #[test]
    fn erasure_is_degraded() {
        let k1 = CondPmf::deterministic(2, 2, |x| x);
        let q = CondPmf::from_rows(vec![vec![0.7, 0.0, 0.3], vec![0.0, 0.7, 0.3]]).unwrap();
        let bc = BcStateChannel::degraded(Pmf::uniform(1), 2, &k1, &q).unwrap();
        let found = bc.is_degraded().unwrap();
        for a in 0..2 {
            for b in 0..3 {
                assert!((found.get(a, b) - q.get(a, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_outputs_degraded_with_identity() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(1), 2, 2, 2, |x, _| x, |x, _| x).unwrap();
        let q = bc.is_degraded().unwrap();
        assert_eq!(q.as_slice(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn independent_noisy_copies_not_degraded() {
        let k = CondPmf::from_rows(bsc(0.1)).unwrap();
        let bc = BcStateChannel::from_marginals(Pmf::uniform(1), 2, &k, &k).unwrap();
        assert!(bc.is_degraded().is_none());
    }

    #[test]
    fn more_capable_verdicts() {
        let k1 = CondPmf::deterministic(2, 2, |x| x);
        let k2 = CondPmf::from_rows(bsc(0.2)).unwrap();
        let bc = BcStateChannel::from_marginals(Pmf::uniform(1), 2, &k1, &k2).unwrap();
        assert_eq!(bc.is_more_capable(8, 16, 0), MoreCapable::ProbablyTrue);
        match bc.swapped().is_more_capable(8, 16, 0) {
            MoreCapable::CertifiedFalse { gap, .. } => assert!(gap > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn output_condition_cases() {
        let bc = BcStateChannel::deterministic(Pmf::uniform(2), 2, 2, 2, |_, s| s, |x, _| x).unwrap();
        assert_eq!(bc.check_condition_12(8, 0, 0), Condition12::Holds);
        let bc = BcStateChannel::deterministic(Pmf::uniform(1), 2, 2, 2, |x, _| x, |x, _| x).unwrap();
        match bc.check_condition_12(8, 0, 0) {
            Condition12::Fails { witness, .. } => assert_eq!(witness.row(0), &[0.5, 0.5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relay_joint_has_outputs() {
        let ch = RelayStateChannel::single_state(
            &Pmf::uniform(1),
            2,
            2,
            2,
            2,
            CondPmf::deterministic(4, 4, |r| {
                let (x, xr) = (r / 2, r % 2);
                (x ^ xr) * 2 + x
            }),
        )
        .unwrap();
        assert_eq!(ch.s2_size(), 1);
        let j = ch
            .base()
            .extend(&[], &[Coord::new(names::X, 2), Coord::new(names::XR, 2)], &CondPmf::constant(1, &Pmf::uniform(4)))
            .unwrap();
        let j = ch.attach_outputs(&j).unwrap();
        assert!((j.mutual_info(&[names::X], &[names::YR], &[]).unwrap() - 1.0).abs() < 1e-12);
    }
}
