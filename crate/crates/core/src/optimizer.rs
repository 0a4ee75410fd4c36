//! Search over products of conditional-probability simplices.
//!
//! A [`PdfShape`] lists the conditional blocks of a candidate distribution in
//! the order they are applied to a base joint (usually the state pmf). The
//! search either walks the full type-`k` grid of the product space or, when
//! that grid is larger than [`SearchBudget::grid_cap`], draws uniform
//! (Dirichlet(1, ..., 1)) restarts. Every start is then improved by
//! coordinate-wise refinement: one conditional row at a time is moved over a
//! local grid of mass transfers.
//!
//! Candidates are evaluated in parallel and always reduced in enumeration
//! order, so results depend only on the budget and seed.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prob::{CondPmf, Coord, JointPmf, Pmf};
use crate::regions::{LinearRateConstraint, Polytope, RateRegion};

/// Stop refining once a full pass improves the objective by less than this.
pub const REFINE_TOL: f64 = 1e-7;

const REFINE_STEPS: [f64; 5] = [0.25, 1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0, 1.0 / 2048.0];

/// Rows longer than this are refined by vertex mixing instead of pairwise
/// mass transfer.
const PAIRWISE_ROW_LIMIT: usize = 12;

/// Accepted moves per row and step size before moving to a finer step.
const MAX_CLIMB: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    /// Grid resolution: rows are multiples of `1/grid_k`.
    pub grid_k: usize,
    /// Random restarts used when the full grid is over the cap.
    pub restarts: usize,
    /// Maximum coordinate-refinement passes per start.
    pub refine_passes: usize,
    pub seed: u64,
    /// Largest product-space grid that is enumerated exhaustively.
    pub grid_cap: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            grid_k: 8,
            restarts: 64,
            refine_passes: 6,
            seed: 0,
            grid_cap: 20_000,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.grid_k == 0 {
            return Err(Error::InvalidParameter("grid_k must be at least 1".into()));
        }
        Ok(())
    }
}

impl std::fmt::Display for SearchBudget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "grid_k={} restarts={} refine_passes={} grid_cap={} seed={}",
            self.grid_k, self.restarts, self.refine_passes, self.grid_cap, self.seed
        )
    }
}

/// Number of compositions of `k` into `dim` parts, `C(k + dim - 1, dim - 1)`,
/// saturating at `u128::MAX`.
pub fn simplex_grid_count(dim: usize, k: usize) -> u128 {
    if dim == 0 {
        return 0;
    }
    let n = (k + dim - 1) as u128;
    let r = (dim - 1).min(k) as u128;
    let mut c: u128 = 1;
    for i in 0..r {
        c = match c.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// All pmfs on `dim` symbols whose entries are multiples of `1/k`.
pub fn simplex_grid(dim: usize, k: usize) -> SimplexGrid {
    assert!(dim >= 1 && k >= 1, "simplex grid needs dim >= 1 and k >= 1");
    let mut counts = vec![0usize; dim];
    counts[dim - 1] = k;
    SimplexGrid {
        k,
        counts: Some(counts),
    }
}

/// Iterator over [`simplex_grid`] points, in lexicographic order of counts.
pub struct SimplexGrid {
    k: usize,
    counts: Option<Vec<usize>>,
}

impl Iterator for SimplexGrid {
    type Item = Pmf;

    fn next(&mut self) -> Option<Pmf> {
        let counts = self.counts.as_mut()?;
        let out = Pmf::new(counts.iter().map(|&c| c as f64 / self.k as f64).collect())
            .expect("grid point is a pmf");
        // lexicographic successor: bump the rightmost slot that has mass
        // after it, then put the remaining tail mass in the last slot
        let d = counts.len();
        if d == 1 {
            self.counts = None;
            return Some(out);
        }
        let mut i = d - 1;
        loop {
            if i == 0 {
                self.counts = None;
                break;
            }
            i -= 1;
            let tail: usize = counts[i + 1..].iter().sum();
            if tail > 0 {
                counts[i] += 1;
                let rest = tail - 1;
                for c in counts[i + 1..].iter_mut() {
                    *c = 0;
                }
                counts[d - 1] = rest;
                break;
            }
        }
        Some(out)
    }
}

fn compositions(dim: usize, k: usize) -> Vec<Vec<f64>> {
    simplex_grid(dim, k).map(Pmf::into_vec).collect()
}

/// One conditional block `P(outputs | context)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub name: String,
    pub context: Vec<Coord>,
    pub outputs: Vec<Coord>,
}

impl BlockSpec {
    pub fn new(name: impl Into<String>, context: Vec<Coord>, outputs: Vec<Coord>) -> Self {
        Self {
            name: name.into(),
            context,
            outputs,
        }
    }

    pub fn rows(&self) -> usize {
        self.context.iter().map(|c| c.size).product()
    }

    pub fn row_len(&self) -> usize {
        self.outputs.iter().map(|c| c.size).product()
    }
}

/// Block structure of a candidate distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdfShape {
    blocks: Vec<BlockSpec>,
}

impl PdfShape {
    pub fn new(blocks: Vec<BlockSpec>) -> Arc<Self> {
        Arc::new(Self { blocks })
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    /// Size of the product grid at resolution `k` (saturating).
    pub fn grid_size(&self, k: usize) -> u128 {
        let mut total: u128 = 1;
        for b in &self.blocks {
            let per_row = simplex_grid_count(b.row_len(), k);
            for _ in 0..b.rows() {
                total = total.saturating_mul(per_row);
            }
        }
        total
    }

    fn row_slots(&self) -> Vec<(usize, usize)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, spec)| (0..spec.rows()).map(move |r| (b, r)))
            .collect()
    }
}

/// A point of the search space: one [`CondPmf`] per block of its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidatePdf {
    shape: Arc<PdfShape>,
    blocks: Vec<CondPmf>,
}

impl CandidatePdf {
    pub fn new(shape: Arc<PdfShape>, blocks: Vec<CondPmf>) -> Result<Self> {
        if blocks.len() != shape.blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: shape.blocks.len(),
                got: blocks.len(),
            });
        }
        for (spec, b) in shape.blocks.iter().zip(&blocks) {
            if b.inputs() != spec.rows() {
                return Err(Error::DimensionMismatch {
                    expected: spec.rows(),
                    got: b.inputs(),
                });
            }
            if b.outputs() != spec.row_len() {
                return Err(Error::DimensionMismatch {
                    expected: spec.row_len(),
                    got: b.outputs(),
                });
            }
        }
        Ok(Self { shape, blocks })
    }

    /// Builds each block row from `f(block, row)`.
    pub fn from_fn(shape: Arc<PdfShape>, mut f: impl FnMut(usize, usize) -> Vec<f64>) -> Result<Self> {
        let blocks = shape
            .blocks
            .iter()
            .enumerate()
            .map(|(b, spec)| {
                let rows: Vec<Vec<f64>> = (0..spec.rows()).map(|r| f(b, r)).collect();
                CondPmf::new(spec.rows(), spec.row_len(), rows.concat())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(shape, blocks)
    }

    /// Independent uniform-Dirichlet rows.
    pub fn random(shape: Arc<PdfShape>, rng: &mut impl Rng) -> Self {
        let blocks = shape
            .blocks
            .iter()
            .map(|spec| {
                let mut data = Vec::with_capacity(spec.rows() * spec.row_len());
                for _ in 0..spec.rows() {
                    data.extend(dirichlet_row(spec.row_len(), rng));
                }
                CondPmf::from_raw(spec.rows(), spec.row_len(), data)
            })
            .collect();
        Self { shape, blocks }
    }

    pub fn shape(&self) -> &Arc<PdfShape> {
        &self.shape
    }

    pub fn blocks(&self) -> &[CondPmf] {
        &self.blocks
    }

    pub fn block(&self, name: &str) -> Option<&CondPmf> {
        self.shape
            .blocks
            .iter()
            .position(|b| b.name == name)
            .map(|i| &self.blocks[i])
    }

    pub fn row(&self, block: usize, row: usize) -> &[f64] {
        self.blocks[block].row(row)
    }

    fn row_mut(&mut self, block: usize, row: usize) -> &mut [f64] {
        self.blocks[block].row_mut(row)
    }

    /// Extends `base` by every block in order.
    pub fn apply(&self, base: &JointPmf) -> Result<JointPmf> {
        let mut j = base.clone();
        for (spec, kernel) in self.shape.blocks.iter().zip(&self.blocks) {
            let ctx: Vec<&str> = spec.context.iter().map(|c| c.name.as_str()).collect();
            j = j.extend(&ctx, &spec.outputs, kernel)?;
        }
        Ok(j)
    }
}

fn dirichlet_row(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            -(1.0 - u).ln()
        })
        .collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v = vec![1.0 / len as f64; len];
    }
    v
}

/// Deterministic per-stream RNG derived from `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Starting points for a search: either the full grid or random restarts,
/// always preceded by the caller's seeds.
pub(crate) struct Starts {
    pub candidates: Vec<CandidatePdf>,
    pub exhaustive: bool,
}

/// Enumerates the starting candidates for `shape` under `budget`. Random
/// restarts use stream `stream_base + i`.
pub(crate) fn starting_points(
    shape: &Arc<PdfShape>,
    budget: &SearchBudget,
    seeds: &[CandidatePdf],
    stream_base: u64,
) -> Starts {
    let mut candidates: Vec<CandidatePdf> = seeds.to_vec();
    let size = shape.grid_size(budget.grid_k);
    if size <= budget.grid_cap as u128 {
        candidates.extend(GridWalk::new(shape.clone(), budget.grid_k));
        Starts {
            candidates,
            exhaustive: true,
        }
    } else {
        candidates.extend((0..budget.restarts).map(|i| {
            let mut rng = stream_rng(budget.seed, stream_base + i as u64);
            CandidatePdf::random(shape.clone(), &mut rng)
        }));
        Starts {
            candidates,
            exhaustive: false,
        }
    }
}

/// Walks the product grid in mixed-radix order (last row fastest).
struct GridWalk {
    shape: Arc<PdfShape>,
    slots: Vec<(usize, usize)>,
    comps: Vec<Arc<Vec<Vec<f64>>>>,
    digits: Vec<usize>,
    done: bool,
}

impl GridWalk {
    fn new(shape: Arc<PdfShape>, k: usize) -> Self {
        let slots = shape.row_slots();
        let per_block: Vec<Arc<Vec<Vec<f64>>>> = shape
            .blocks
            .iter()
            .map(|b| Arc::new(compositions(b.row_len(), k)))
            .collect();
        let comps = slots.iter().map(|&(b, _)| per_block[b].clone()).collect();
        let digits = vec![0; slots.len()];
        Self {
            shape,
            slots,
            comps,
            digits,
            done: false,
        }
    }
}

impl Iterator for GridWalk {
    type Item = CandidatePdf;

    fn next(&mut self) -> Option<CandidatePdf> {
        if self.done {
            return None;
        }
        let mut data: Vec<Vec<f64>> = self
            .shape
            .blocks
            .iter()
            .map(|b| vec![0.0; b.rows() * b.row_len()])
            .collect();
        for (slot, &(b, r)) in self.slots.iter().enumerate() {
            let len = self.shape.blocks[b].row_len();
            data[b][r * len..(r + 1) * len].copy_from_slice(&self.comps[slot][self.digits[slot]]);
        }
        let blocks = self
            .shape
            .blocks
            .iter()
            .zip(data)
            .map(|(b, d)| CondPmf::from_raw(b.rows(), b.row_len(), d))
            .collect();
        let out = CandidatePdf {
            shape: self.shape.clone(),
            blocks,
        };
        let mut k = self.slots.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if self.digits[k] < self.comps[k].len() {
                break;
            }
            self.digits[k] = 0;
        }
        Some(out)
    }
}

fn finite_or(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Coordinate-wise local search. Returns the improved candidate, its value,
/// and the number of objective evaluations.
pub fn refine<F>(objective: &F, start: CandidatePdf, value: f64, passes: usize) -> (CandidatePdf, f64, usize)
where
    F: Fn(&CandidatePdf) -> f64,
{
    let mut cand = start;
    let mut value = value;
    let mut evals = 0usize;
    let slots = cand.shape.row_slots();
    for _ in 0..passes {
        let before = value;
        for &(b, r) in &slots {
            let mut row: Vec<f64> = cand.row(b, r).to_vec();
            let mut trial = row.clone();
            for step in REFINE_STEPS {
                for _ in 0..MAX_CLIMB {
                    let mut best: Option<Vec<f64>> = None;
                    let mut best_value = value;
                    for_each_move(&row, step, &mut trial, |t| {
                        cand.row_mut(b, r).copy_from_slice(t);
                        evals += 1;
                        if let Some(v) = finite_or(objective(&cand)) {
                            if v > best_value + 1e-15 {
                                best_value = v;
                                best = Some(t.to_vec());
                            }
                        }
                    });
                    match best {
                        Some(t) => {
                            row = t;
                            value = best_value;
                        }
                        None => break,
                    }
                }
            }
            cand.row_mut(b, r).copy_from_slice(&row);
        }
        if value - before < REFINE_TOL {
            break;
        }
    }
    (cand, value, evals)
}

/// Local moves on a row: pairwise transfers of `step` mass for short rows,
/// mixing toward or away from each vertex for long ones.
fn for_each_move(row: &[f64], step: f64, trial: &mut [f64], mut visit: impl FnMut(&[f64])) {
    let m = row.len();
    if m < 2 {
        return;
    }
    if m <= PAIRWISE_ROW_LIMIT {
        for i in 0..m {
            let amount = step.min(row[i]);
            if amount <= 0.0 {
                continue;
            }
            for j in 0..m {
                if i == j {
                    continue;
                }
                trial.copy_from_slice(row);
                trial[i] -= amount;
                trial[j] += amount;
                if trial[i] < 1e-15 {
                    trial[i] = 0.0;
                }
                visit(trial);
            }
        }
    } else {
        for j in 0..m {
            for (t, x) in trial.iter_mut().zip(row) {
                *t = (1.0 - step) * x;
            }
            trial[j] += step;
            visit(trial);
            let away = step.min(row[j]);
            if away > 0.0 && away < 1.0 {
                for (t, x) in trial.iter_mut().zip(row) {
                    *t = x / (1.0 - away);
                }
                trial[j] = (row[j] - away).max(0.0) / (1.0 - away);
                visit(trial);
            }
        }
    }
}

/// Outcome of [`maximize`].
#[derive(Clone, Debug)]
pub struct MaxResult {
    pub value: f64,
    pub argmax: Option<CandidatePdf>,
    pub evaluated: usize,
    /// Candidates whose objective was non-finite (infeasible).
    pub skipped: usize,
    pub exhaustive: bool,
}

impl MaxResult {
    pub fn found(&self) -> bool {
        self.argmax.is_some()
    }
}

/// Maximizes `objective` over candidates of `shape`.
///
/// Seeds are always evaluated first. Non-finite objective values mark a
/// candidate as infeasible; it is skipped and counted.
pub fn maximize<F>(objective: F, shape: &Arc<PdfShape>, budget: &SearchBudget, seeds: &[CandidatePdf]) -> MaxResult
where
    F: Fn(&CandidatePdf) -> f64 + Sync,
{
    let starts = starting_points(shape, budget, seeds, 0);
    let n_seeds = seeds.len();
    let values: Vec<f64> = starts.candidates.par_iter().map(&objective).collect();
    let mut evaluated = values.len();
    let mut skipped = values.iter().filter(|v| !v.is_finite()).count();

    // refinement pool: seeds plus either the best grid point or every restart
    let mut pool: Vec<usize> = (0..n_seeds).collect();
    if starts.exhaustive {
        if let Some(best) = best_index(&values[n_seeds..]) {
            pool.push(n_seeds + best);
        }
    } else {
        pool.extend(n_seeds..values.len());
    }
    pool.retain(|&i| values[i].is_finite());

    let refined: Vec<(CandidatePdf, f64, usize)> = pool
        .par_iter()
        .map(|&i| refine(&objective, starts.candidates[i].clone(), values[i], budget.refine_passes))
        .collect();

    let mut best: Option<(f64, CandidatePdf)> = None;
    // the unrefined grid optimum competes too (refinement never loses it, but
    // keep the order well-defined when nothing is refined)
    if starts.exhaustive {
        if let Some(i) = best_index(&values) {
            best = Some((values[i], starts.candidates[i].clone()));
        }
    }
    for (cand, v, e) in refined {
        evaluated += e;
        if !v.is_finite() {
            skipped += 1;
            continue;
        }
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, cand));
        }
    }
    match best {
        Some((value, argmax)) => MaxResult {
            value,
            argmax: Some(argmax),
            evaluated,
            skipped,
            exhaustive: starts.exhaustive,
        },
        None => MaxResult {
            value: f64::NEG_INFINITY,
            argmax: None,
            evaluated,
            skipped,
            exhaustive: starts.exhaustive,
        },
    }
}

fn best_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Outcome of [`region_sweep`]: the swept region plus, for each retained
/// corner, the candidate whose polytope produced it.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub region: RateRegion,
    pub witnesses: Vec<CandidatePdf>,
    pub visited: usize,
    pub skipped: usize,
}

/// Directions used to push a swept region outward during refinement.
fn refine_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..=6)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 * i as f64 / 6.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut dirs = Vec::new();
            let steps = 3usize;
            for a in 0..=steps {
                for b in 0..=(steps - a) {
                    let c = steps - a - b;
                    let v = [a as f64, b as f64, c as f64];
                    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    dirs.push(v.iter().map(|x| x / n).collect());
                }
            }
            dirs
        }
    }
}

/// Union over candidates of the polytopes returned by `builder`, convexified.
///
/// `builder` returns `None` for infeasible candidates. After the initial
/// sweep, the best candidate in each of a fixed set of nonnegative directions
/// is refined to push the region's support outward.
pub fn region_sweep<F>(builder: F, dim: usize, shape: &Arc<PdfShape>, budget: &SearchBudget, seeds: &[CandidatePdf]) -> Sweep
where
    F: Fn(&CandidatePdf) -> Option<Vec<LinearRateConstraint>> + Sync,
{
    let starts = starting_points(shape, budget, seeds, 1 << 32);
    let polys: Vec<Option<Polytope>> = starts
        .candidates
        .par_iter()
        .map(|c| builder(c).map(|cs| Polytope::from_constraints(&cs, dim)))
        .collect();
    let mut visited = polys.len();
    let mut skipped = polys.iter().filter(|p| p.is_none()).count();
    let mut members: Vec<(Polytope, CandidatePdf)> = polys
        .into_iter()
        .zip(starts.candidates)
        .filter_map(|(p, c)| p.map(|p| (p, c)))
        .collect();

    if budget.refine_passes > 0 && !members.is_empty() {
        let dirs = refine_directions(dim);
        let refined: Vec<(Option<Polytope>, CandidatePdf, usize)> = dirs
            .par_iter()
            .map(|u| {
                let (start, value) = members
                    .iter()
                    .map(|(p, c)| (c, p.support(u)))
                    .fold(None::<(&CandidatePdf, f64)>, |acc, (c, v)| match acc {
                        Some((_, bv)) if bv >= v => acc,
                        _ => Some((c, v)),
                    })
                    .expect("members is non-empty");
                let objective = |c: &CandidatePdf| match builder(c) {
                    Some(cs) => Polytope::from_constraints(&cs, dim).support(u),
                    None => f64::NEG_INFINITY,
                };
                let (cand, _, evals) = refine(&objective, start.clone(), value, budget.refine_passes);
                let poly = builder(&cand).map(|cs| Polytope::from_constraints(&cs, dim));
                (poly, cand, evals)
            })
            .collect();
        for (poly, cand, evals) in refined {
            visited += evals;
            match poly {
                Some(p) => members.push((p, cand)),
                None => skipped += 1,
            }
        }
    }

    let (polys, cands): (Vec<Polytope>, Vec<CandidatePdf>) = members.into_iter().unzip();
    let region = if polys.is_empty() {
        RateRegion::origin_only(dim)
    } else {
        RateRegion::from_polytopes(dim, polys)
    };
    let witnesses = region
        .corner_members()
        .iter()
        .map(|&m| cands[m].clone())
        .collect();
    Sweep {
        region,
        witnesses,
        visited,
        skipped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::entropy_bits;

    #[test]
    fn grid_counts() {
        let pts: Vec<Vec<f64>> = simplex_grid(2, 2).map(Pmf::into_vec).collect();
        assert_eq!(pts, vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(simplex_grid(3, 1).count(), 3);
        assert_eq!(simplex_grid(3, 4).count(), 15);
        assert_eq!(simplex_grid_count(3, 4), 15);
        assert_eq!(simplex_grid(1, 5).count(), 1);
        for (d, k) in [(2, 7), (4, 3), (5, 5), (3, 16)] {
            assert_eq!(simplex_grid(d, k).count() as u128, simplex_grid_count(d, k));
        }
    }

    #[test]
    fn grid_points_are_distinct() {
        let pts: Vec<Vec<f64>> = simplex_grid(4, 5).map(Pmf::into_vec).collect();
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    fn one_pmf_shape(n: usize) -> Arc<PdfShape> {
        PdfShape::new(vec![BlockSpec::new("P", vec![], vec![Coord::new("X", n)])])
    }

    #[test]
    fn maximize_entropy_is_two_bits() {
        let shape = one_pmf_shape(4);
        let res = maximize(|c| entropy_bits(c.row(0, 0)), &shape, &SearchBudget::default(), &[]);
        assert!((res.value - 2.0).abs() < 1e-12);
        assert!(res.exhaustive);
    }

    #[test]
    fn maximize_random_mode_reaches_uniform() {
        let shape = one_pmf_shape(4);
        let budget = SearchBudget {
            grid_cap: 0,
            restarts: 4,
            ..SearchBudget::default()
        };
        let res = maximize(|c| entropy_bits(c.row(0, 0)), &shape, &budget, &[]);
        assert!(!res.exhaustive);
        assert!(res.value > 2.0 - 1e-5, "{}", res.value);
    }

    #[test]
    fn non_finite_candidates_are_skipped() {
        let shape = one_pmf_shape(2);
        let res = maximize(
            |c| if c.row(0, 0)[0] > 0.5 { f64::NAN } else { c.row(0, 0)[0] },
            &shape,
            &SearchBudget::default(),
            &[],
        );
        assert!(res.skipped > 0);
        assert!((res.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reproducible_and_monotone_in_restarts() {
        let shape = PdfShape::new(vec![BlockSpec::new(
            "P",
            vec![Coord::new("S", 2)],
            vec![Coord::new("X", 3)],
        )]);
        let obj = |c: &CandidatePdf| {
            let a = c.row(0, 0);
            let b = c.row(0, 1);
            entropy_bits(a) * 0.3 + (a[0] - b[2]).powi(2) + b[1] * 0.2
        };
        let small = SearchBudget {
            grid_cap: 0,
            restarts: 3,
            refine_passes: 2,
            seed: 7,
            ..SearchBudget::default()
        };
        let big = SearchBudget { restarts: 9, ..small.clone() };
        let r1 = maximize(obj, &shape, &small, &[]);
        let r1b = maximize(obj, &shape, &small, &[]);
        let r2 = maximize(obj, &shape, &big, &[]);
        assert_eq!(r1.value.to_bits(), r1b.value.to_bits());
        assert_eq!(r1.argmax, r1b.argmax);
        assert!(r2.value >= r1.value);
    }

    #[test]
    fn grid_walk_visits_each_point_once() {
        let shape = PdfShape::new(vec![
            BlockSpec::new("A", vec![Coord::new("S", 2)], vec![Coord::new("X", 2)]),
            BlockSpec::new("B", vec![], vec![Coord::new("U", 3)]),
        ]);
        let k = 3;
        let all: Vec<CandidatePdf> = GridWalk::new(shape.clone(), k).collect();
        assert_eq!(all.len() as u128, shape.grid_size(k));
        for i in 0..all.len() {
            for j in 0..i {
                assert_ne!(all[i], all[j]);
            }
        }
    }

    #[test]
    fn candidate_apply_builds_joint() {
        let shape = PdfShape::new(vec![BlockSpec::new(
            "X|S",
            vec![Coord::new("S", 2)],
            vec![Coord::new("X", 2)],
        )]);
        let c = CandidatePdf::from_fn(shape, |_, r| if r == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
            .unwrap();
        let base = JointPmf::from_pmf("S", &Pmf::uniform(2));
        let j = c.apply(&base).unwrap();
        assert!((j.mutual_info(&["X"], &["S"], &[]).unwrap() - 1.0).abs() < 1e-12);
    }
}
