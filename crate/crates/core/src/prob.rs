//! Finite-alphabet probability tables and Shannon information measures.
//!
//! All logarithms are base 2, so every quantity is in bits. Coordinates of a
//! [`JointPmf`] are addressed by name; information measures take slices of
//! coordinate names.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a probability vector.
pub const SUM_TOL: f64 = 1e-9;

/// Mutual information values in `[-MI_CLAMP, 0)` are reported as zero.
pub const MI_CLAMP: f64 = 1e-12;

/// `-sum p log2 p` with `0 log 0 = 0`. No validation.
pub fn entropy_bits(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

fn check_row(row: &[f64], row_index: usize, tol: f64) -> Result<()> {
    if row.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    for (index, &value) in row.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidProbability { index, value });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::NotNormalized { row: row_index, sum });
    }
    Ok(())
}

/// A probability mass function over `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_row(&probs, 0, SUM_TOL)?;
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform pmf over an empty alphabet");
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n, "point mass outside the alphabet");
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self) -> f64 {
        entropy_bits(&self.probs)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// Entropy of a pmf in bits.
pub fn entropy(p: &Pmf) -> f64 {
    p.entropy()
}

/// `I(X;Y)` in bits for input pmf `input` through `kernel`. No validation.
pub fn io_mutual_info(input: &[f64], kernel: &CondPmf) -> f64 {
    let mut out = vec![0.0; kernel.outputs()];
    for (x, &px) in input.iter().enumerate() {
        for (o, w) in out.iter_mut().zip(kernel.row(x)) {
            *o += px * w;
        }
    }
    let h_cond: f64 = input
        .iter()
        .enumerate()
        .map(|(x, &px)| px * entropy_bits(kernel.row(x)))
        .sum();
    (entropy_bits(&out) - h_cond).max(0.0)
}

/// A conditional pmf: one output distribution per input symbol, stored as a
/// dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CondPmf {
    inputs: usize,
    outputs: usize,
    data: Vec<f64>,
}

impl CondPmf {
    pub fn new(inputs: usize, outputs: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(inputs, outputs, data, SUM_TOL)
    }

    /// Like [`CondPmf::new`] with a caller-chosen row-sum tolerance.
    pub fn with_tolerance(inputs: usize, outputs: usize, data: Vec<f64>, tol: f64) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if data.len() != inputs * outputs {
            return Err(Error::DimensionMismatch {
                expected: inputs * outputs,
                got: data.len(),
            });
        }
        for (r, row) in data.chunks(outputs).enumerate() {
            check_row(row, r, tol)?;
        }
        Ok(Self { inputs, outputs, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let inputs = rows.len();
        let outputs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::DimensionMismatch {
                expected: outputs,
                got: rows.iter().map(Vec::len).find(|&l| l != outputs).unwrap_or(0),
            });
        }
        Self::new(inputs, outputs, rows.concat())
    }

    /// Deterministic kernel `input -> f(input)`.
    pub fn deterministic(inputs: usize, outputs: usize, mut f: impl FnMut(usize) -> usize) -> Self {
        let mut data = vec![0.0; inputs * outputs];
        for i in 0..inputs {
            let o = f(i);
            assert!(o < outputs, "deterministic map leaves the output alphabet");
            data[i * outputs + o] = 1.0;
        }
        Self { inputs, outputs, data }
    }

    /// Every row equal to `row`.
    pub fn constant(inputs: usize, row: &Pmf) -> Self {
        let data = (0..inputs).flat_map(|_| row.probs().iter().copied()).collect();
        Self {
            inputs,
            outputs: row.len(),
            data,
        }
    }

    pub(crate) fn from_raw(inputs: usize, outputs: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), inputs * outputs);
        Self { inputs, outputs, data }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.outputs..(i + 1) * self.outputs]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.outputs..(i + 1) * self.outputs]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, input: usize, output: usize) -> f64 {
        self.data[input * self.outputs + output]
    }
}

/// A named coordinate of a joint table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coord {
    pub name: String,
    pub size: usize,
}

impl Coord {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// A pmf over the Cartesian product of named coordinates, row-major with the
/// first coordinate most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct JointPmf {
    coords: Vec<Coord>,
    table: Vec<f64>,
}

impl JointPmf {
    pub fn new(coords: Vec<Coord>, table: Vec<f64>) -> Result<Self> {
        Self::check_coords(&coords)?;
        let expected: usize = coords.iter().map(|c| c.size).product();
        if expected != table.len() {
            return Err(Error::DimensionMismatch {
                expected,
                got: table.len(),
            });
        }
        check_row(&table, 0, SUM_TOL)?;
        Ok(Self { coords, table })
    }

    fn check_coords(coords: &[Coord]) -> Result<()> {
        for (i, c) in coords.iter().enumerate() {
            if c.size == 0 {
                return Err(Error::EmptyAlphabet);
            }
            if coords[..i].iter().any(|d| d.name == c.name) {
                return Err(Error::DuplicateCoordinate(c.name.clone()));
            }
        }
        Ok(())
    }

    pub fn from_pmf(name: impl Into<String>, pmf: &Pmf) -> Self {
        Self {
            coords: vec![Coord::new(name, pmf.len())],
            table: pmf.probs().to_vec(),
        }
    }

    /// The trivial joint over no coordinates (mass 1 on the empty tuple).
    pub fn unit() -> Self {
        Self {
            coords: Vec::new(),
            table: vec![1.0],
        }
    }

    pub fn coords(&self) -> &[Coord] {
        &self.coords
    }

    pub fn probs(&self) -> &[f64] {
        &self.table
    }

    pub fn total_mass(&self) -> f64 {
        self.table.iter().sum()
    }

    pub fn has(&self, name: &str) -> bool {
        self.coords.iter().any(|c| c.name == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.coords
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        Ok(self.coords[self.index_of(name)?].size)
    }

    fn indices(&self, names: &[&str]) -> Result<Vec<usize>> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        for (i, a) in idx.iter().enumerate() {
            if idx[..i].contains(a) {
                return Err(Error::DuplicateCoordinate(names[i].to_string()));
            }
        }
        Ok(idx)
    }

    /// Marginal table over the coordinates at `idx`, in that order.
    fn marginal_table(&self, idx: &[usize]) -> Vec<f64> {
        let sizes: Vec<usize> = self.coords.iter().map(|c| c.size).collect();
        let mut weight = vec![0usize; sizes.len()];
        let mut stride = 1usize;
        for &i in idx.iter().rev() {
            weight[i] = stride;
            stride *= sizes[i];
        }
        let mut out = vec![0.0; stride];
        if sizes.is_empty() {
            out[0] = self.table[0];
            return out;
        }
        let mut digits = vec![0usize; sizes.len()];
        let mut m = 0usize;
        for &p in &self.table {
            out[m] += p;
            // odometer increment
            let mut k = sizes.len();
            while k > 0 {
                k -= 1;
                digits[k] += 1;
                m += weight[k];
                if digits[k] < sizes[k] {
                    break;
                }
                m -= weight[k] * digits[k];
                digits[k] = 0;
            }
        }
        out
    }

    fn mask_of(&self, names: &[&str]) -> Result<u64> {
        let mut mask = 0u64;
        for i in self.indices(names)? {
            mask |= 1 << i;
        }
        Ok(mask)
    }

    fn entropy_mask(&self, mask: u64) -> f64 {
        if mask == 0 {
            return 0.0;
        }
        let idx: Vec<usize> = (0..self.coords.len()).filter(|i| mask >> i & 1 == 1).collect();
        entropy_bits(&self.marginal_table(&idx))
    }

    /// Marginal over `names`, in the given order.
    pub fn marginal(&self, names: &[&str]) -> Result<JointPmf> {
        let idx = self.indices(names)?;
        Ok(Self {
            coords: idx.iter().map(|&i| self.coords[i].clone()).collect(),
            table: self.marginal_table(&idx),
        })
    }

    /// Joint entropy `H(names)` in bits; zero for an empty set.
    pub fn entropy(&self, names: &[&str]) -> Result<f64> {
        Ok(self.entropy_mask(self.mask_of(names)?))
    }

    /// `H(target | given) = H(target, given) - H(given)`.
    pub fn conditional_entropy(&self, target: &[&str], given: &[&str]) -> Result<f64> {
        let t = self.mask_of(target)?;
        let g = self.mask_of(given)?;
        disjoint(self, t, g)?;
        Ok((self.entropy_mask(t | g) - self.entropy_mask(g)).max(0.0))
    }

    /// `I(a; b | given)` in bits.
    pub fn mutual_info(&self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        let mut cache = self.info();
        cache.mi(a, b, given)
    }

    /// An entropy cache for evaluating many information terms on one table.
    pub fn info(&self) -> Info<'_> {
        Info {
            joint: self,
            cache: HashMap::new(),
        }
    }

    /// Appends coordinates `new` drawn from `kernel` given the coordinates
    /// `given`. Kernel rows are indexed row-major over `given` (in order),
    /// kernel outputs row-major over `new`.
    pub fn extend(&self, given: &[&str], new: &[Coord], kernel: &CondPmf) -> Result<JointPmf> {
        let gidx = self.indices(given)?;
        let rows: usize = gidx.iter().map(|&i| self.coords[i].size).product();
        let outs: usize = new.iter().map(|c| c.size).product();
        if kernel.inputs() != rows {
            return Err(Error::DimensionMismatch {
                expected: rows,
                got: kernel.inputs(),
            });
        }
        if kernel.outputs() != outs {
            return Err(Error::DimensionMismatch {
                expected: outs,
                got: kernel.outputs(),
            });
        }
        let mut coords = self.coords.clone();
        coords.extend(new.iter().cloned());
        Self::check_coords(&coords)?;

        let sizes: Vec<usize> = self.coords.iter().map(|c| c.size).collect();
        let mut weight = vec![0usize; sizes.len()];
        let mut stride = 1usize;
        for &i in gidx.iter().rev() {
            weight[i] = stride;
            stride *= sizes[i];
        }
        let mut table = Vec::with_capacity(self.table.len() * outs);
        let mut digits = vec![0usize; sizes.len()];
        let mut r = 0usize;
        for &p in &self.table {
            let row = kernel.row(r);
            table.extend(row.iter().map(|&q| p * q));
            let mut k = sizes.len();
            while k > 0 {
                k -= 1;
                digits[k] += 1;
                r += weight[k];
                if digits[k] < sizes[k] {
                    break;
                }
                r -= weight[k] * digits[k];
                digits[k] = 0;
            }
        }
        Ok(Self { coords, table })
    }

    /// Appends a coordinate that is a deterministic function of `given`.
    pub fn extend_map(
        &self,
        given: &[&str],
        new: Coord,
        f: impl Fn(&[usize]) -> usize,
    ) -> Result<JointPmf> {
        let gidx = self.indices(given)?;
        let gsizes: Vec<usize> = gidx.iter().map(|&i| self.coords[i].size).collect();
        let rows: usize = gsizes.iter().product();
        let size = new.size;
        let mut digits = vec![0usize; gsizes.len()];
        let kernel = CondPmf::deterministic(rows, size, |r| {
            let mut rem = r;
            for k in (0..gsizes.len()).rev() {
                digits[k] = rem % gsizes[k];
                rem /= gsizes[k];
            }
            f(&digits)
        });
        self.extend(given, &[new], &kernel)
    }

    /// Independent product `self x other`.
    pub fn product(&self, other: &JointPmf) -> Result<JointPmf> {
        let outs: usize = other.table.len();
        let kernel = CondPmf::from_raw(1, outs, other.table.clone());
        self.extend(&[], &other.coords, &kernel)
    }
}

fn disjoint(j: &JointPmf, a: u64, b: u64) -> Result<()> {
    let both = a & b;
    if both != 0 {
        let i = both.trailing_zeros() as usize;
        return Err(Error::OverlappingCoordinates(j.coords[i].name.clone()));
    }
    Ok(())
}

/// Push `P_S` through `P_{X|S}` and the channel `P(y|x,s)`; coordinates are
/// named `S`, `X`, `Y`.
pub fn compose(state: &Pmf, input: &CondPmf, channel: &CondPmf) -> Result<JointPmf> {
    let j = JointPmf::from_pmf("S", state);
    let j = j.extend(&["S"], &[Coord::new("X", input.outputs())], input)?;
    let ys = channel.outputs();
    j.extend(&["X", "S"], &[Coord::new("Y", ys)], channel)
}

/// Entropy cache over one joint table, keyed by coordinate subsets.
pub struct Info<'a> {
    joint: &'a JointPmf,
    cache: HashMap<u64, f64>,
}

impl Info<'_> {
    fn h_mask(&mut self, mask: u64) -> f64 {
        if let Some(&h) = self.cache.get(&mask) {
            return h;
        }
        let h = self.joint.entropy_mask(mask);
        self.cache.insert(mask, h);
        h
    }

    pub fn joint(&self) -> &JointPmf {
        self.joint
    }

    pub fn h(&mut self, names: &[&str]) -> Result<f64> {
        let m = self.joint.mask_of(names)?;
        Ok(self.h_mask(m))
    }

    /// `H(target | given)`.
    pub fn hc(&mut self, target: &[&str], given: &[&str]) -> Result<f64> {
        let t = self.joint.mask_of(target)?;
        let g = self.joint.mask_of(given)?;
        disjoint(self.joint, t, g)?;
        Ok((self.h_mask(t | g) - self.h_mask(g)).max(0.0))
    }

    /// `I(a; b | given)`, with tiny negative rounding clamped to zero.
    pub fn mi(&mut self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        let v = self.mi_raw(a, b, given)?;
        Ok(if (-MI_CLAMP..0.0).contains(&v) { 0.0 } else { v })
    }

    /// `I(a; b | given)` without clamping.
    pub fn mi_raw(&mut self, a: &[&str], b: &[&str], given: &[&str]) -> Result<f64> {
        let ma = self.joint.mask_of(a)?;
        let mb = self.joint.mask_of(b)?;
        let mc = self.joint.mask_of(given)?;
        disjoint(self.joint, ma, mb)?;
        disjoint(self.joint, ma, mc)?;
        disjoint(self.joint, mb, mc)?;
        Ok(self.h_mask(ma | mc) + self.h_mask(mb | mc) - self.h_mask(ma | mb | mc) - self.h_mask(mc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h2(p: f64) -> f64 {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&Pmf::uniform(4)) - 2.0).abs() < 1e-15);
        assert_eq!(entropy(&Pmf::point_mass(3, 1)), 0.0);
        let p = Pmf::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((entropy(&p) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn pmf_validation() {
        assert!(matches!(Pmf::new(vec![0.5, 0.4]), Err(Error::NotNormalized { .. })));
        assert!(matches!(
            Pmf::new(vec![1.5, -0.5]),
            Err(Error::InvalidProbability { index: 1, .. })
        ));
        assert!(matches!(Pmf::new(vec![]), Err(Error::EmptyAlphabet)));
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-10]).is_ok());
    }

    fn xor_joint(noise: f64) -> JointPmf {
        // G uniform, Z ~ Bern(noise), T = G xor Z
        let g = JointPmf::from_pmf("G", &Pmf::uniform(2));
        let z = JointPmf::from_pmf("Z", &Pmf::new(vec![1.0 - noise, noise]).unwrap());
        g.product(&z)
            .unwrap()
            .extend_map(&["G", "Z"], Coord::new("T", 2), |d| d[0] ^ d[1])
            .unwrap()
    }

    #[test]
    fn conditional_entropy_examples() {
        let ind = JointPmf::from_pmf("T", &Pmf::uniform(2))
            .product(&JointPmf::from_pmf("G", &Pmf::new(vec![0.3, 0.7]).unwrap()))
            .unwrap();
        assert!((ind.conditional_entropy(&["T"], &["G"]).unwrap() - 1.0).abs() < 1e-12);

        let f = JointPmf::from_pmf("G", &Pmf::new(vec![0.2, 0.3, 0.5]).unwrap())
            .extend_map(&["G"], Coord::new("T", 2), |d| d[0] % 2)
            .unwrap();
        assert!(f.conditional_entropy(&["T"], &["G"]).unwrap().abs() < 1e-12);

        let j = xor_joint(0.25);
        let v = j.conditional_entropy(&["T"], &["G"]).unwrap();
        assert!((v - h2(0.25)).abs() < 1e-12);
        assert!((v - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_errors() {
        let j = xor_joint(0.1);
        assert!(matches!(
            j.conditional_entropy(&["Q"], &["G"]),
            Err(Error::UnknownCoordinate(_))
        ));
        assert!(matches!(
            j.conditional_entropy(&["T"], &["T"]),
            Err(Error::OverlappingCoordinates(_))
        ));
    }

    #[test]
    fn mutual_info_examples() {
        let ind = JointPmf::from_pmf("A", &Pmf::new(vec![0.1, 0.9]).unwrap())
            .product(&JointPmf::from_pmf("B", &Pmf::uniform(3)))
            .unwrap();
        assert_eq!(ind.mutual_info(&["A"], &["B"], &[]).unwrap(), 0.0);

        let same = JointPmf::from_pmf("A", &Pmf::uniform(2))
            .extend_map(&["A"], Coord::new("B", 2), |d| d[0])
            .unwrap();
        assert!((same.mutual_info(&["A"], &["B"], &[]).unwrap() - 1.0).abs() < 1e-12);

        // c = a xor b with a, b independent uniform bits: I(a;b|c) = 1
        let j = JointPmf::from_pmf("a", &Pmf::uniform(2))
            .product(&JointPmf::from_pmf("b", &Pmf::uniform(2)))
            .unwrap()
            .extend_map(&["a", "b"], Coord::new("c", 2), |d| d[0] ^ d[1])
            .unwrap();
        assert!((j.mutual_info(&["a"], &["b"], &["c"]).unwrap() - 1.0).abs() < 1e-12);
        assert!(j.mutual_info(&["a"], &["b"], &[]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn marginalize_independent_product_returns_factor() {
        let a = Pmf::new(vec![0.2, 0.8]).unwrap();
        let b = Pmf::new(vec![0.1, 0.6, 0.3]).unwrap();
        let j = JointPmf::from_pmf("A", &a)
            .product(&JointPmf::from_pmf("B", &b))
            .unwrap();
        let m = j.marginal(&["B"]).unwrap();
        for (x, y) in m.probs().iter().zip(b.probs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn extend_by_map_gives_push_forward() {
        let p = Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let j = JointPmf::from_pmf("X", &p)
            .extend_map(&["X"], Coord::new("F", 2), |d| usize::from(d[0] >= 2))
            .unwrap();
        let m = j.marginal(&["F"]).unwrap();
        assert!((m.probs()[0] - 0.3).abs() < 1e-15);
        assert!((m.probs()[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn compose_conserves_mass() {
        let ps = Pmf::new(vec![0.3, 0.7]).unwrap();
        let pxs = CondPmf::from_rows(vec![vec![0.25, 0.75], vec![0.6, 0.4]]).unwrap();
        let ch = CondPmf::from_rows(vec![
            vec![0.9, 0.1],
            vec![0.2, 0.8],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let j = compose(&ps, &pxs, &ch).unwrap();
        assert!((j.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(j.coords().len(), 3);
    }

    #[test]
    fn extend_dimension_mismatch() {
        let j = JointPmf::from_pmf("S", &Pmf::uniform(2));
        let k = CondPmf::from_rows(vec![vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            j.extend(&["S"], &[Coord::new("X", 1)], &k),
            Err(Error::DimensionMismatch { .. })
        ));
        let k2 = CondPmf::from_rows(vec![vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            j.extend(&["S"], &[Coord::new("S", 1)], &k2),
            Err(Error::DuplicateCoordinate(_))
        ));
    }

    #[test]
    fn marginal_respects_requested_order() {
        let t = vec![0.1, 0.2, 0.3, 0.4];
        let j = JointPmf::new(vec![Coord::new("A", 2), Coord::new("B", 2)], t).unwrap();
        let m = j.marginal(&["B", "A"]).unwrap();
        assert_eq!(m.probs(), &[0.1, 0.3, 0.2, 0.4]);
    }
}
