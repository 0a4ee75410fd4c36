//! Rate-region geometry in ℝ₊² and ℝ₊³.
//!
//! Every region here is downward closed inside the nonnegative orthant, so it
//! is determined by its Pareto-maximal points. A [`Polytope`] is one
//! constraint system; a [`RateRegion`] is a union of polytopes together with
//! the non-dominated generators of its convex hull.

use std::io::Write;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Slack used when deciding whether a vertex satisfies a constraint.
const VERTEX_TOL: f64 = 1e-9;
/// A point within this margin of the hull is treated as inside it.
const HULL_TOL: f64 = 1e-12;
/// Right-hand sides in `[-RHS_TOL, 0)` are rounding noise and read as 0.
pub const RHS_TOL: f64 = 1e-12;
const SUPPORT_ANGLES_2D: usize = 64;
const SUPPORT_POINTS_3D: usize = 128;

/// A rate tuple `(R1, R2)` or `(R0, R1, R2)` in bits per channel use.
#[derive(Clone, Debug, PartialEq)]
pub struct RatePoint(Vec<f64>);

impl RatePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if !(2..=3).contains(&coords.len()) {
            return Err(Error::InvalidParameter(format!(
                "rate points have 2 or 3 coordinates, got {}",
                coords.len()
            )));
        }
        for (index, &value) in coords.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "rate coordinate {index} is {value}, must be finite and nonnegative"
                )));
            }
        }
        Ok(Self(coords))
    }

    fn clamped(coords: Vec<f64>) -> Self {
        Self(coords.into_iter().map(|x| x.max(0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    fn dominated_by(&self, other: &RatePoint, tol: f64) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a <= *b + tol)
    }
}

impl std::ops::Index<usize> for RatePoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `Σ coeffs[k]·R_k ≤ rhs` with coefficients in {0, 1, 2}.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRateConstraint {
    pub coeffs: Vec<u8>,
    pub rhs: f64,
}

impl LinearRateConstraint {
    pub fn new(coeffs: &[u8], rhs: f64) -> Self {
        debug_assert!(coeffs.iter().all(|&c| c <= 2));
        Self {
            coeffs: coeffs.to_vec(),
            rhs,
        }
    }

    fn lhs(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(&c, x)| c as f64 * x).sum()
    }
}

/// `{r ≥ 0 : constraints hold}` with its vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    dim: usize,
    constraints: Vec<LinearRateConstraint>,
    vertices: Vec<RatePoint>,
    origin_only: bool,
}

impl Polytope {
    /// Enumerates all vertices by intersecting `dim` active hyperplanes,
    /// axes included. A negative right-hand side yields the origin-only
    /// region.
    ///
    /// # Panics
    /// If `dim` is not 2 or 3, a coefficient vector has the wrong length, or
    /// some coordinate is left unbounded.
    pub fn from_constraints(constraints: &[LinearRateConstraint], dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "regions live in 2 or 3 dimensions");
        for c in constraints {
            assert_eq!(c.coeffs.len(), dim, "constraint dimension");
        }
        for k in 0..dim {
            assert!(
                constraints.iter().any(|c| c.coeffs[k] > 0),
                "rate coordinate {k} is unbounded"
            );
        }
        if constraints.iter().any(|c| !(c.rhs >= -RHS_TOL)) {
            return Self {
                dim,
                constraints: constraints.to_vec(),
                vertices: vec![RatePoint(vec![0.0; dim])],
                origin_only: true,
            };
        }

        let constraints: Vec<LinearRateConstraint> = constraints
            .iter()
            .map(|c| LinearRateConstraint {
                coeffs: c.coeffs.clone(),
                rhs: c.rhs.max(0.0),
            })
            .collect();
        let mut planes: Vec<(Vec<f64>, f64)> = constraints
            .iter()
            .map(|c| (c.coeffs.iter().map(|&a| a as f64).collect(), c.rhs))
            .collect();
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            planes.push((e, 0.0));
        }

        let mut vertices: Vec<RatePoint> = Vec::new();
        for subset in subsets(planes.len(), dim) {
            let a = DMatrix::from_fn(dim, dim, |i, j| planes[subset[i]].0[j]);
            if a.determinant().abs() < 1e-12 {
                continue;
            }
            let b = DMatrix::from_fn(dim, 1, |i, _| planes[subset[i]].1);
            let Some(x) = a.lu().solve(&b) else { continue };
            let x: Vec<f64> = x.iter().copied().collect();
            if x.iter().any(|&v| v < -VERTEX_TOL) {
                continue;
            }
            if constraints
                .iter()
                .any(|c| c.lhs(&x) > c.rhs + VERTEX_TOL * c.rhs.abs().max(1.0))
            {
                continue;
            }
            let v = RatePoint::clamped(x);
            if !vertices.iter().any(|w| close(w, &v)) {
                vertices.push(v);
            }
        }
        vertices.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite vertices"));
        Self {
            dim,
            constraints,
            vertices,
            origin_only: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[LinearRateConstraint] {
        &self.constraints
    }

    /// All vertices, including those on the axes.
    pub fn vertices(&self) -> &[RatePoint] {
        &self.vertices
    }

    pub fn is_origin_only(&self) -> bool {
        self.origin_only
    }

    /// Pareto-maximal vertices.
    pub fn corners(&self) -> Vec<RatePoint> {
        pareto(&self.vertices)
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if p.len() != self.dim || p.iter().any(|&x| x < -tol) {
            return false;
        }
        if self.origin_only {
            return p.iter().all(|&x| x <= tol);
        }
        self.constraints.iter().all(|c| c.lhs(p) <= c.rhs + tol)
    }

    /// `max ⟨u, r⟩` over the polytope.
    pub fn support(&self, u: &[f64]) -> f64 {
        support_of(self.vertices.iter(), u)
    }
}

fn close(a: &RatePoint, b: &RatePoint) -> bool {
    a.0.iter()
        .zip(&b.0)
        .all(|(x, y)| (x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn pareto(points: &[RatePoint]) -> Vec<RatePoint> {
    let mut out: Vec<RatePoint> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let dominated = points.iter().enumerate().any(|(j, q)| {
            j != i && p.dominated_by(q, 0.0) && (!q.dominated_by(p, 0.0) || j < i)
        });
        if !dominated {
            out.push(p.clone());
        }
    }
    out
}

fn support_of<'a>(points: impl Iterator<Item = &'a RatePoint>, u: &[f64]) -> f64 {
    points
        .map(|p| p.0.iter().zip(u).map(|(x, d)| x * d.max(0.0)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Fixed direction set for support sampling: 64 angles in the plane or a
/// 128-point Fibonacci sphere.
pub fn support_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..SUPPORT_ANGLES_2D)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / SUPPORT_ANGLES_2D as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let n = SUPPORT_POINTS_3D as f64;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..SUPPORT_POINTS_3D)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / n;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => panic!("regions live in 2 or 3 dimensions"),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportSample {
    pub direction: Vec<f64>,
    pub value: f64,
}

/// A union of polytopes and the non-dominated generators of its hull.
#[derive(Clone, Debug)]
pub struct RateRegion {
    dim: usize,
    corners: Vec<RatePoint>,
    corner_members: Vec<usize>,
    support: Vec<SupportSample>,
    members: Vec<Polytope>,
}

impl RateRegion {
    pub fn origin_only(dim: usize) -> Self {
        let zero = vec![LinearRateConstraint::new(&vec![1; dim], 0.0)];
        Self::from_polytope(Polytope::from_constraints(&zero, dim))
    }

    pub fn from_polytope(p: Polytope) -> Self {
        Self::from_polytopes(p.dim, vec![p])
    }

    pub fn from_constraints(constraints: &[LinearRateConstraint], dim: usize) -> Self {
        Self::from_polytope(Polytope::from_constraints(constraints, dim))
    }

    /// Union of `members`, convexified.
    ///
    /// # Panics
    /// If `members` is empty or the dimensions differ.
    pub fn from_polytopes(dim: usize, members: Vec<Polytope>) -> Self {
        assert!(!members.is_empty(), "a region needs at least one polytope");
        assert!(members.iter().all(|m| m.dim == dim), "polytope dimensions differ");
        let mut points: Vec<(RatePoint, usize)> = members
            .iter()
            .enumerate()
            .flat_map(|(m, p)| p.corners().into_iter().map(move |c| (c, m)))
            .collect();
        // larger points first so the hull stabilises early; the sort is
        // stable, so ties keep member order
        points.sort_by(|a, b| {
            let sa: f64 = a.0 .0.iter().sum();
            let sb: f64 = b.0 .0.iter().sum();
            sb.partial_cmp(&sa).expect("finite rates")
        });
        let (corners, corner_members) = hull_generators(dim, points);
        let support = support_directions(dim)
            .into_iter()
            .map(|u| {
                let value = support_of(corners.iter(), &u);
                SupportSample { direction: u, value }
            })
            .collect();
        Self {
            dim,
            corners,
            corner_members,
            support,
            members,
        }
    }

    /// Convex hull of the union of `regions`, keeping every member polytope.
    pub fn union_hull(regions: &[&RateRegion]) -> Result<RateRegion> {
        let Some(first) = regions.first() else {
            return Err(Error::InvalidParameter("union of no regions".into()));
        };
        let dim = first.dim;
        for r in regions {
            if r.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.dim,
                });
            }
        }
        let members = regions.iter().flat_map(|r| r.members.iter().cloned()).collect();
        Ok(Self::from_polytopes(dim, members))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-dominated generators of the convex hull.
    pub fn corners(&self) -> &[RatePoint] {
        &self.corners
    }

    /// For each corner, the index of the member polytope it came from.
    pub fn corner_members(&self) -> &[usize] {
        &self.corner_members
    }

    pub fn support_samples(&self) -> &[SupportSample] {
        &self.support
    }

    pub fn members(&self) -> &[Polytope] {
        &self.members
    }

    /// Every vertex of every member, before convexification.
    pub fn raw_cloud(&self) -> Vec<RatePoint> {
        self.members.iter().flat_map(|m| m.vertices.iter().cloned()).collect()
    }

    /// Exact support function of the hull.
    pub fn support(&self, u: &[f64]) -> f64 {
        support_of(self.corners.iter(), u)
    }

    /// Largest value of `f` over the hull corners; for a linear `f` with
    /// nonnegative weights this is its maximum over the region.
    pub fn max_coordinate(&self, k: usize) -> f64 {
        self.corners.iter().map(|c| c[k]).fold(0.0, f64::max)
    }

    /// Membership in the convexified region.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if p.len() != self.dim || p.iter().any(|&x| x < -tol) {
            return false;
        }
        let q: Vec<f64> = p.iter().map(|x| x.max(0.0)).collect();
        for s in &self.support {
            let proj: f64 = s.direction.iter().zip(&q).map(|(d, x)| d * x).sum();
            if proj > s.value + tol {
                return false;
            }
        }
        hull_margin(&self.corners, &q) >= -tol
    }

    /// Membership in the union without convexification.
    pub fn contains_raw(&self, p: &[f64], tol: f64) -> bool {
        self.members.iter().any(|m| m.contains(p, tol))
    }

    /// Whether every corner of `other` lies in this region's hull.
    pub fn includes(&self, other: &RateRegion, tol: f64) -> bool {
        self.dim == other.dim && other.corners.iter().all(|c| self.contains(&c.0, tol))
    }

    /// Whether every vertex of every member of `other` lies in some member
    /// of this region.
    pub fn includes_raw(&self, other: &RateRegion, tol: f64) -> bool {
        self.dim == other.dim
            && other
                .members
                .iter()
                .flat_map(|m| m.vertices.iter())
                .all(|v| self.contains_raw(&v.0, tol))
    }

    fn header(&self) -> &'static str {
        if self.dim == 3 {
            "R0,R1,R2"
        } else {
            "R1,R2"
        }
    }

    pub fn write_corners_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.header())?;
        for c in &self.corners {
            let row: Vec<String> = c.0.iter().map(|x| format!("{x:.12}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_raw_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "member,{}", self.header())?;
        for (m, p) in self.members.iter().enumerate() {
            for v in &p.vertices {
                let row: Vec<String> = v.0.iter().map(|x| format!("{x:.12}")).collect();
                writeln!(w, "{m},{}", row.join(","))?;
            }
        }
        Ok(())
    }

    pub fn write_support_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        if self.dim == 3 {
            writeln!(w, "dx,dy,dz,value")?;
        } else {
            writeln!(w, "dx,dy,value")?;
        }
        for s in &self.support {
            let row: Vec<String> = s.direction.iter().map(|x| format!("{x:.12}")).collect();
            writeln!(w, "{},{:.12}", row.join(","), s.value)?;
        }
        Ok(())
    }
}

/// `max_λ min_k (Σ_i λ_i g_ik − p_k)` over the probability simplex; the
/// point `p` is in the downward-closed hull of `gens` iff this is ≥ 0.
fn hull_margin(gens: &[RatePoint], p: &[f64]) -> f64 {
    if gens.is_empty() {
        return f64::NEG_INFINITY;
    }
    if gens.len() == 1 {
        return gens[0].0.iter().zip(p).map(|(g, x)| g - x).fold(f64::INFINITY, f64::min);
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let lambdas: Vec<_> = gens.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for (k, &pk) in p.iter().enumerate() {
        let mut expr: Vec<(minilp::Variable, f64)> =
            lambdas.iter().zip(gens).map(|(&l, g)| (l, g.0[k])).collect();
        expr.push((t, -1.0));
        lp.add_constraint(&expr[..], ComparisonOp::Ge, pk);
    }
    let sum: Vec<(minilp::Variable, f64)> = lambdas.iter().map(|&l| (l, 1.0)).collect();
    lp.add_constraint(&sum[..], ComparisonOp::Eq, 1.0);
    match lp.solve() {
        Ok(sol) => sol.objective(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Incremental hull: keep a point only if it is neither dominated by nor
/// inside the hull of the points kept so far, then prune generators that
/// later points made redundant.
fn hull_generators(dim: usize, points: Vec<(RatePoint, usize)>) -> (Vec<RatePoint>, Vec<usize>) {
    let dirs: Vec<Vec<f64>> = support_directions(dim)
        .into_iter()
        .filter(|u| u.iter().all(|&x| x >= 0.0))
        .collect();
    let mut gens: Vec<(RatePoint, usize)> = Vec::new();
    let mut h = vec![0.0f64; dirs.len()];
    for (p, m) in points {
        if gens.iter().any(|(g, _)| p.dominated_by(g, HULL_TOL)) {
            continue;
        }
        let outside = dirs.iter().zip(&h).any(|(u, hv)| {
            let proj: f64 = u.iter().zip(&p.0).map(|(a, b)| a * b).sum();
            proj > hv + HULL_TOL
        });
        let kept: Vec<RatePoint> = gens.iter().map(|(g, _)| g.clone()).collect();
        if outside || hull_margin(&kept, &p.0) < -HULL_TOL {
            for (u, hv) in dirs.iter().zip(h.iter_mut()) {
                let proj: f64 = u.iter().zip(&p.0).map(|(a, b)| a * b).sum();
                *hv = hv.max(proj);
            }
            gens.push((p, m));
        }
    }
    let mut i = 0;
    while i < gens.len() && gens.len() > 1 {
        let others: Vec<RatePoint> = gens
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, (g, _))| g.clone())
            .collect();
        if hull_margin(&others, &gens[i].0 .0) >= -HULL_TOL {
            gens.remove(i);
        } else {
            i += 1;
        }
    }
    if gens.is_empty() {
        gens.push((RatePoint(vec![0.0; dim]), 0));
    }
    gens.into_iter().unzip()
}
