//! Limiting normal cone to `gph ∂θ` computed from the graph itself, without
//! any second-order formula: the graph is a finite union of polyhedra, so
//! near `(z̄, v̄)` it coincides with a union of tangent cones, and its normal
//! cone is the union of regular normal cones over the cells of the
//! hyperplane arrangement those tangent cones induce.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::cpwl_core::CpwlFunction;
use crate::error::{check_dim, Error, Result};
use crate::ratlin::{
    cone_generators, cone_halfspaces, union_eq, ConeGenerators, GeneratorSet, HalfspaceSystem,
    RatVector, Rational,
};
use crate::second_order::{subsets, DEFAULT_MAX_INDICES};

/// `cl H_{Q1,Q2} × (conv{a_i : Q1} + cone{d_t : Q2})` in `R^m × R^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphPiece {
    pub q1: Vec<usize>,
    pub q2: Vec<usize>,
    pub z_poly: HalfspaceSystem,
    pub v_set: GeneratorSet,
    pub joint: HalfspaceSystem,
}

/// Whether some `(z, s)` has `⟨a_i, z⟩ − α_i = s` on `Q1`, `< s` off `Q1`,
/// `⟨d_t, z⟩ = β_t` on `Q2` and `< β_t` off `Q2`.
fn stratum_nonempty(theta: &CpwlFunction, q1: &[usize], q2: &[usize]) -> bool {
    let m = theta.dim();
    let mut sys = HalfspaceSystem::new(m + 1);
    let lift = |a: &RatVector, s: i64| a.concat(&RatVector::from_ints(&[s]));
    for (i, p) in theta.pieces().iter().enumerate() {
        if q1.contains(&i) {
            sys.add_equality(lift(&p.slope, -1), p.offset.clone());
        } else {
            sys.add_inequality(lift(&p.slope, -1), p.offset.clone());
        }
    }
    for (t, (d, b)) in theta.domain().inequalities.iter().enumerate() {
        if q2.contains(&t) {
            sys.add_equality(lift(d, 0), b.clone());
        } else {
            sys.add_inequality(lift(d, 0), b.clone());
        }
    }
    let strict: Vec<usize> = (0..sys.inequalities.len()).collect();
    sys.feasible_point(&strict).is_some()
}

/// Closure of the stratum: pieces in `Q1` tie and dominate the rest.
fn stratum_closure(theta: &CpwlFunction, q1: &[usize], q2: &[usize]) -> HalfspaceSystem {
    let mut sys = HalfspaceSystem::new(theta.dim());
    for &i in q1 {
        let pi = &theta.pieces()[i];
        for (j, pj) in theta.pieces().iter().enumerate() {
            if j == i {
                continue;
            }
            let normal = pj.slope.sub(&pi.slope);
            let rhs = &pj.offset - &pi.offset;
            if q1.contains(&j) {
                sys.add_equality(normal, rhs);
            } else {
                sys.add_inequality(normal, rhs);
            }
        }
    }
    for (t, (d, b)) in theta.domain().inequalities.iter().enumerate() {
        if q2.contains(&t) {
            sys.add_equality(d.clone(), b.clone());
        } else {
            sys.add_inequality(d.clone(), b.clone());
        }
    }
    sys
}

fn lift_pair(z: &HalfspaceSystem, v: &HalfspaceSystem, m: usize) -> HalfspaceSystem {
    let zeros = RatVector::zeros(m);
    let mut out = HalfspaceSystem::new(2 * m);
    for (a, b) in &z.equalities {
        out.add_equality(a.concat(&zeros), b.clone());
    }
    for (a, b) in &v.equalities {
        out.add_equality(zeros.concat(a), b.clone());
    }
    for (a, b) in &z.inequalities {
        out.add_inequality(a.concat(&zeros), b.clone());
    }
    for (a, b) in &v.inequalities {
        out.add_inequality(zeros.concat(a), b.clone());
    }
    out
}

/// One piece per nonempty stratum, enumerating all `(Q1, Q2)`.
pub fn graph_pieces(theta: &CpwlFunction, max_indices: usize) -> Result<Vec<GraphPiece>> {
    let (l, p, m) = (theta.num_pieces(), theta.num_rows(), theta.dim());
    if l + p > max_indices {
        return Err(Error::SizeCap {
            found: l + p,
            cap: max_indices,
        });
    }
    let all_pieces: Vec<usize> = (0..l).collect();
    let all_rows: Vec<usize> = (0..p).collect();
    let mut out = Vec::new();
    for q1 in subsets(&all_pieces).into_iter().filter(|s| !s.is_empty()) {
        for q2 in subsets(&all_rows) {
            if !stratum_nonempty(theta, &q1, &q2) {
                continue;
            }
            let z_poly = stratum_closure(theta, &q1, &q2);
            let v_set = GeneratorSet::new(
                m,
                q1.iter().map(|&i| theta.slope(i).clone()).collect(),
                q2.iter().map(|&t| theta.row_normal(t).clone()).collect(),
                Vec::new(),
            );
            let joint = lift_pair(&z_poly, &v_set.to_halfspaces(), m);
            out.push(GraphPiece {
                q1: q1.clone(),
                q2,
                z_poly,
                v_set,
                joint,
            });
        }
    }
    Ok(out)
}

/// `N((z̄, v̄); gph ∂θ)` as a union of polyhedral cones in `R^m × R^m`,
/// given by homogeneous halfspace systems.
#[derive(Clone, Debug)]
pub struct NormalConeUnion {
    pub dim: usize,
    pub cones: Vec<HalfspaceSystem>,
    /// Number of graph pieces through `(z̄, v̄)`.
    pub pieces_at_point: usize,
    /// Number of nonempty cells of the tangent-cone arrangement.
    pub cells: usize,
}

impl NormalConeUnion {
    pub fn generators(&self) -> Vec<ConeGenerators> {
        self.cones.iter().map(cone_generators).collect()
    }

    /// `{w : (w, −u) ∈ N}` as a union of polyhedra in `R^m`; empty slices
    /// are dropped.
    pub fn slice(&self, u: &RatVector) -> Result<Vec<HalfspaceSystem>> {
        let m = self.dim;
        check_dim("direction", m, u.dim())?;
        let mut out = Vec::new();
        for cone in &self.cones {
            let mut s = HalfspaceSystem::new(m);
            for (a, b) in &cone.equalities {
                s.add_equality(a.slice(0, m), b + a.slice(m, 2 * m).dot(u));
            }
            for (a, b) in &cone.inequalities {
                s.add_inequality(a.slice(0, m), b + a.slice(m, 2 * m).dot(u));
            }
            if !s.is_empty() && !out.iter().any(|o: &HalfspaceSystem| s.is_subset_of(o)) {
                out.retain(|o: &HalfspaceSystem| !o.is_subset_of(&s));
                out.push(s);
            }
        }
        Ok(out)
    }
}

/// Tangent cone of one graph piece at the base point, as oriented references
/// into the shared hyperplane list.
struct Tangent {
    ineqs: Vec<(usize, bool)>,
    eqs: Vec<usize>,
}

/// Canonical hyperplane for `normal` (primitive, first nonzero entry
/// positive) and whether `normal` points the opposite way.
fn canonical(normal: &RatVector) -> (RatVector, bool) {
    let p = normal.primitive();
    let flip = p.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative());
    if flip {
        (p.neg(), true)
    } else {
        (p, false)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Sign {
    Neg,
    Zero,
    Pos,
}

struct Arrangement<'a> {
    planes: &'a [RatVector],
    tangents: &'a [Tangent],
    cells: Vec<Vec<Sign>>,
}

impl Arrangement<'_> {
    fn oriented(sign: Sign, flip: bool) -> Sign {
        match (sign, flip) {
            (Sign::Neg, true) => Sign::Pos,
            (Sign::Pos, true) => Sign::Neg,
            (s, _) => s,
        }
    }

    /// Whether some tangent cone can still contain a point with these signs.
    fn compatible(&self, signs: &[Sign]) -> bool {
        self.tangents.iter().any(|t| self.contains(t, signs))
    }

    fn contains(&self, t: &Tangent, signs: &[Sign]) -> bool {
        let known = signs.len();
        t.ineqs
            .iter()
            .filter(|(h, _)| *h < known)
            .all(|&(h, flip)| Self::oriented(signs[h], flip) != Sign::Pos)
            && t.eqs.iter().filter(|&&h| h < known).all(|&h| signs[h] == Sign::Zero)
    }

    fn search(&mut self, region: &HalfspaceSystem, strict: &[usize], signs: &mut Vec<Sign>) {
        if !self.compatible(signs) {
            return;
        }
        let k = signs.len();
        if k == self.planes.len() {
            self.cells.push(signs.clone());
            return;
        }
        let h = &self.planes[k];
        for sign in [Sign::Neg, Sign::Zero, Sign::Pos] {
            let mut next = region.clone();
            let mut next_strict = strict.to_vec();
            match sign {
                Sign::Zero => next.add_equality(h.clone(), Rational::zero()),
                Sign::Neg | Sign::Pos => {
                    let normal = if sign == Sign::Neg { h.clone() } else { h.neg() };
                    next.add_inequality(normal, Rational::zero());
                    next_strict.push(next.inequalities.len() - 1);
                }
            }
            signs.push(sign);
            if self.compatible(signs) && next.feasible_point(&next_strict).is_some() {
                self.search(&next, &next_strict, signs);
            }
            signs.pop();
        }
    }
}

pub fn limiting_normal_cone(
    theta: &CpwlFunction,
    zbar: &RatVector,
    vbar: &RatVector,
) -> Result<NormalConeUnion> {
    let pieces = graph_pieces(theta, DEFAULT_MAX_INDICES)?;
    limiting_normal_cone_from(theta.dim(), &pieces, zbar, vbar)
}

pub fn limiting_normal_cone_from(
    m: usize,
    pieces: &[GraphPiece],
    zbar: &RatVector,
    vbar: &RatVector,
) -> Result<NormalConeUnion> {
    check_dim("point", m, zbar.dim())?;
    check_dim("subgradient", m, vbar.dim())?;
    let dim = 2 * m;
    let point = zbar.concat(vbar);
    let through: Vec<&GraphPiece> = pieces.iter().filter(|p| p.joint.contains(&point)).collect();
    if through.is_empty() {
        return Err(Error::NotASubgradient);
    }

    let mut index: BTreeMap<RatVector, usize> = BTreeMap::new();
    let mut planes: Vec<RatVector> = Vec::new();
    let mut intern = |normal: &RatVector| -> Option<(usize, bool)> {
        if normal.is_zero() {
            return None;
        }
        let (c, flip) = canonical(normal);
        let id = *index.entry(c.clone()).or_insert_with(|| {
            planes.push(c);
            planes.len() - 1
        });
        Some((id, flip))
    };
    let mut tangents = Vec::new();
    for piece in &through {
        let mut t = Tangent {
            ineqs: Vec::new(),
            eqs: Vec::new(),
        };
        for (a, _) in &piece.joint.equalities {
            if let Some((id, _)) = intern(a) {
                t.eqs.push(id);
            }
        }
        for k in piece.joint.tight_inequalities(&point) {
            if let Some(ref_) = intern(&piece.joint.inequalities[k].0) {
                t.ineqs.push(ref_);
            }
        }
        tangents.push(t);
    }

    let mut arr = Arrangement {
        planes: &planes,
        tangents: &tangents,
        cells: Vec::new(),
    };
    arr.search(&HalfspaceSystem::new(dim), &[], &mut Vec::new());

    // Regular normal cone per cell, keyed by which tangent cones contain the
    // cell and which of their inequalities are tight there.
    let mut by_signature: BTreeMap<Vec<Option<Vec<usize>>>, HalfspaceSystem> = BTreeMap::new();
    for signs in &arr.cells {
        let signature: Vec<Option<Vec<usize>>> = tangents
            .iter()
            .map(|t| {
                arr.contains(t, signs).then(|| {
                    t.ineqs
                        .iter()
                        .enumerate()
                        .filter(|(_, (h, _))| signs[*h] == Sign::Zero)
                        .map(|(k, _)| k)
                        .collect()
                })
            })
            .collect();
        if by_signature.contains_key(&signature) {
            continue;
        }
        let mut cone = HalfspaceSystem::new(dim);
        for (t, tight) in tangents.iter().zip(&signature) {
            let Some(tight) = tight else { continue };
            let rays: Vec<RatVector> = tight
                .iter()
                .map(|&k| {
                    let (h, flip) = t.ineqs[k];
                    if flip {
                        planes[h].neg()
                    } else {
                        planes[h].clone()
                    }
                })
                .collect();
            let lines: Vec<RatVector> = t.eqs.iter().map(|&h| planes[h].clone()).collect();
            cone = cone.intersect(&cone_halfspaces(&rays, &lines, dim));
        }
        by_signature.insert(signature, cone);
    }

    Ok(NormalConeUnion {
        dim: m,
        cones: by_signature.into_values().collect(),
        pieces_at_point: through.len(),
        cells: arr.cells.len(),
    })
}

/// `∂²θ(z̄, v̄)(u) = {w : (w, −u) ∈ N((z̄, v̄); gph ∂θ)}`.
pub fn second_subdiff(
    theta: &CpwlFunction,
    zbar: &RatVector,
    vbar: &RatVector,
    u: &RatVector,
) -> Result<Vec<HalfspaceSystem>> {
    limiting_normal_cone(theta, zbar, vbar)?.slice(u)
}

/// Exact equality of a union of generator sets with a union of polyhedra.
pub fn same_union(formula: &[GeneratorSet], oracle: &[HalfspaceSystem]) -> bool {
    let lhs: Vec<HalfspaceSystem> = formula.iter().map(|g| g.to_halfspaces()).collect();
    union_eq(&lhs, oracle)
}

/// Whether the origin belongs to the union.
pub fn union_contains_origin(sets: &[HalfspaceSystem]) -> bool {
    sets.iter()
        .any(|s| s.contains(&RatVector::zeros(s.dim())))
}

/// Deterministic integer directions: coordinate axes, their negatives, the
/// origin, then pseudo-random vectors with entries in `[-3, 3]`.
pub fn probe_directions(m: usize, count: usize, seed: u64) -> Vec<RatVector> {
    use rand::{Rng, SeedableRng};
    let mut out = vec![RatVector::zeros(m)];
    for k in 0..m {
        out.push(RatVector::unit(m, k));
        out.push(RatVector::unit(m, k).neg());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let v: RatVector = (0..m)
            .map(|_| Rational::from_integer(rng.gen_range(-3i64..=3).into()))
            .collect();
        out.push(v);
    }
    out
}

/// Rational interior points of each stratum paired with subgradients there:
/// every `v` among the generators' vertices and their barycenter.
pub fn stratum_probes(theta: &CpwlFunction, pieces: &[GraphPiece]) -> Vec<(RatVector, RatVector)> {
    let mut out = Vec::new();
    for p in pieces {
        let Some(z) = theta.stratum_point(&p.q1, &p.q2) else { continue };
        let mut vs: Vec<RatVector> = p.v_set.conv_gens.clone();
        let k = Rational::from_integer((vs.len() as i64).into());
        let bary = vs
            .iter()
            .fold(RatVector::zeros(theta.dim()), |acc, x| acc.add(x))
            .scale(&(Rational::one() / k));
        let with_rays: Vec<RatVector> = p
            .v_set
            .cone_gens
            .iter()
            .map(|r| bary.add(r))
            .collect();
        vs.push(bary);
        vs.extend(with_rays);
        vs.sort();
        vs.dedup();
        for v in vs {
            out.push((z.clone(), v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::int;

    fn v(x: &[i64]) -> RatVector {
        RatVector::from_ints(x)
    }

    fn abs() -> CpwlFunction {
        CpwlFunction::new(1, vec![(v(&[1]), int(0)), (v(&[-1]), int(0))], vec![]).unwrap()
    }

    fn interval(lo: Option<i64>, hi: Option<i64>) -> HalfspaceSystem {
        let mut s = HalfspaceSystem::new(1);
        if let Some(h) = hi {
            s.add_inequality(v(&[1]), int(h));
        }
        if let Some(l) = lo {
            s.add_inequality(v(&[-1]), int(-l));
        }
        s
    }

    #[test]
    fn graph_of_abs() {
        let pieces = graph_pieces(&abs(), 12).unwrap();
        assert_eq!(pieces.len(), 3);
        let kink = pieces.iter().find(|p| p.q1 == vec![0, 1]).unwrap();
        assert!(kink.joint.contains(&v(&[0, 0])));
        assert!(!kink.joint.contains(&v(&[1, 0])));
        let right = pieces.iter().find(|p| p.q1 == vec![0]).unwrap();
        assert!(right.joint.contains(&v(&[5, 1])));
        assert!(!right.joint.contains(&v(&[-1, 1])));
    }

    #[test]
    fn graph_of_linear_and_indicator() {
        let lin = CpwlFunction::new(1, vec![(v(&[2]), int(0))], vec![]).unwrap();
        assert_eq!(graph_pieces(&lin, 12).unwrap().len(), 1);
        let ind = CpwlFunction::new(1, vec![(v(&[0]), int(0))], vec![(v(&[1]), int(0))]).unwrap();
        let pieces = graph_pieces(&ind, 12).unwrap();
        assert_eq!(pieces.len(), 2);
        let boundary = pieces.iter().find(|p| p.q2 == vec![0]).unwrap();
        assert!(boundary.joint.contains(&v(&[0, 7])));
    }

    #[test]
    fn abs_slices_at_kink() {
        let n = limiting_normal_cone(&abs(), &v(&[0]), &v(&[1])).unwrap();
        let pos = n.slice(&v(&[1])).unwrap();
        assert!(union_eq(&pos, &[interval(Some(0), Some(0))]));
        let neg = n.slice(&v(&[-1])).unwrap();
        assert!(union_eq(&neg, &[interval(None, Some(0))]));
        let zero = n.slice(&v(&[0])).unwrap();
        assert!(union_eq(&zero, &[HalfspaceSystem::new(1)]));
        let mid = limiting_normal_cone(&abs(), &v(&[0]), &v(&[0])).unwrap();
        assert!(union_eq(&mid.slice(&v(&[0])).unwrap(), &[HalfspaceSystem::new(1)]));
        assert!(mid.slice(&v(&[1])).unwrap().is_empty());
    }

    #[test]
    fn smooth_points() {
        let n = limiting_normal_cone(&abs(), &v(&[3]), &v(&[1])).unwrap();
        for u in [-2, 0, 5] {
            let s = n.slice(&v(&[u])).unwrap();
            assert!(union_eq(&s, &[interval(Some(0), Some(0))]));
        }
        let lin = CpwlFunction::new(2, vec![(v(&[1, -1]), int(0))], vec![]).unwrap();
        let n = limiting_normal_cone(&lin, &v(&[0, 0]), &v(&[1, -1])).unwrap();
        let origin = HalfspaceSystem::new(2)
            .with_equality(v(&[1, 0]), int(0))
            .with_equality(v(&[0, 1]), int(0));
        assert!(union_eq(&n.slice(&v(&[2, 3])).unwrap(), &[origin]));
    }

    #[test]
    fn off_graph_is_rejected() {
        assert!(matches!(
            limiting_normal_cone(&abs(), &v(&[1]), &v(&[0])),
            Err(Error::NotASubgradient)
        ));
    }
}
