//! Sets of the form `conv(points) + cone(rays) + span(lines)` and the set
//! algebra needed to compare unions of polyhedra exactly.

use num_traits::{One, Zero};

use super::cone::cone_halfspaces;
use super::halfspace::HalfspaceSystem;
use super::lp::{LinearProgram, LpOutcome, Relation};
use super::matrix::{span_basis, RatVector};
use super::rational::Rational;

/// `conv(conv_gens) + cone(cone_gens) + span(span_gens)`. An empty
/// `conv_gens` drops the convex part, so the set is a cone containing 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorSet {
    dim: usize,
    pub conv_gens: Vec<RatVector>,
    pub cone_gens: Vec<RatVector>,
    pub span_gens: Vec<RatVector>,
}

/// Coefficients certifying `v = Σλc + Σμr + Σνs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multipliers {
    pub conv: Vec<Rational>,
    pub cone: Vec<Rational>,
    pub span: Vec<Rational>,
}

impl GeneratorSet {
    pub fn new(
        dim: usize,
        conv_gens: Vec<RatVector>,
        cone_gens: Vec<RatVector>,
        span_gens: Vec<RatVector>,
    ) -> Self {
        for g in conv_gens.iter().chain(&cone_gens).chain(&span_gens) {
            assert_eq!(g.dim(), dim, "generator has wrong dimension");
        }
        GeneratorSet {
            dim,
            conv_gens,
            cone_gens,
            span_gens,
        }
    }

    /// `{0}`
    pub fn origin(dim: usize) -> Self {
        Self::new(dim, Vec::new(), Vec::new(), Vec::new())
    }

    pub fn subspace(dim: usize, span_gens: Vec<RatVector>) -> Self {
        Self::new(dim, Vec::new(), Vec::new(), span_gens)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_subspace(&self) -> bool {
        self.conv_gens.is_empty() && self.cone_gens.is_empty()
    }

    pub fn contains(&self, v: &RatVector) -> bool {
        generator_membership(v, &self.conv_gens, &self.cone_gens, &self.span_gens).is_some()
    }

    /// Halfspace description, via double description on the homogenization.
    pub fn to_halfspaces(&self) -> HalfspaceSystem {
        let n = self.dim;
        if self.conv_gens.is_empty() {
            return cone_halfspaces(&self.cone_gens, &self.span_gens, n);
        }
        let lift = |v: &RatVector, t: i64| v.concat(&RatVector::from_ints(&[t]));
        let mut rays: Vec<RatVector> = self.conv_gens.iter().map(|p| lift(p, 1)).collect();
        rays.extend(self.cone_gens.iter().map(|r| lift(r, 0)));
        let lines: Vec<RatVector> = self.span_gens.iter().map(|l| lift(l, 0)).collect();
        let cone = cone_halfspaces(&rays, &lines, n + 1);
        let mut out = HalfspaceSystem::new(n);
        let split = |g: &RatVector| (g.slice(0, n), -g[n].clone());
        for (g, _) in &cone.equalities {
            let (a, b) = split(g);
            if !a.is_zero() {
                out.add_equality(a, b);
            }
        }
        for (g, _) in &cone.inequalities {
            let (a, b) = split(g);
            if !a.is_zero() {
                out.add_inequality(a, b);
            }
        }
        out
    }

    /// Image under a linear map.
    pub fn map_linear(&self, apply: impl Fn(&RatVector) -> RatVector, out_dim: usize) -> Self {
        GeneratorSet::new(
            out_dim,
            self.conv_gens.iter().map(&apply).collect(),
            self.cone_gens.iter().map(&apply).collect(),
            self.span_gens.iter().map(&apply).collect(),
        )
    }

    /// Canonical basis of the linear span of the cone/span parts
    /// (for subspaces this identifies the set).
    pub fn span_basis(&self) -> Vec<RatVector> {
        let mut all = self.cone_gens.clone();
        all.extend(self.span_gens.iter().cloned());
        span_basis(&all, self.dim)
    }

    /// `self ⊆ other`, decided generator-by-generator against `other`'s
    /// halfspace description.
    pub fn is_subset_of(&self, other: &GeneratorSet) -> bool {
        polyhedron_subset(self, &other.to_halfspaces())
    }

    pub fn set_eq(&self, other: &GeneratorSet) -> bool {
        self.is_subset_of(other) && other.is_subset_of(self)
    }
}

/// `gens ⊆ sys` for a generator set and a halfspace system.
pub fn polyhedron_subset(gens: &GeneratorSet, sys: &HalfspaceSystem) -> bool {
    let origin = [RatVector::zeros(gens.dim())];
    let points = if gens.conv_gens.is_empty() {
        &origin[..]
    } else {
        &gens.conv_gens[..]
    };
    points.iter().all(|p| sys.contains(p))
        && gens.cone_gens.iter().all(|r| {
            sys.equalities.iter().all(|(a, _)| a.dot(r).is_zero())
                && sys.inequalities.iter().all(|(a, _)| a.dot(r) <= Rational::zero())
        })
        && gens.span_gens.iter().all(|l| {
            sys.equalities
                .iter()
                .chain(&sys.inequalities)
                .all(|(a, _)| a.dot(l).is_zero())
        })
}

/// Decides `v ∈ conv(conv_gens) + cone(cone_gens) + span(span_gens)` by LP
/// feasibility; the convex-combination constraint is dropped when
/// `conv_gens` is empty.
pub fn generator_membership(
    v: &RatVector,
    conv_gens: &[RatVector],
    cone_gens: &[RatVector],
    span_gens: &[RatVector],
) -> Option<Multipliers> {
    let n = v.dim();
    let (nc, nr, ns) = (conv_gens.len(), cone_gens.len(), span_gens.len());
    let mut lp = LinearProgram::new(nc + nr + ns);
    for j in nc + nr..nc + nr + ns {
        lp.set_free(j);
    }
    for k in 0..n {
        let coeffs: Vec<Rational> = conv_gens
            .iter()
            .chain(cone_gens)
            .chain(span_gens)
            .map(|g| {
                assert_eq!(g.dim(), n, "generator has wrong dimension");
                g[k].clone()
            })
            .collect();
        lp.add(coeffs, Relation::Eq, v[k].clone());
    }
    if nc > 0 {
        let mut ones = vec![Rational::zero(); nc + nr + ns];
        ones[..nc].iter_mut().for_each(|c| *c = Rational::one());
        lp.add(ones, Relation::Eq, Rational::one());
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Some(Multipliers {
            conv: x[..nc].to_vec(),
            cone: x[nc..nc + nr].to_vec(),
            span: x[nc + nr..].to_vec(),
        }),
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => unreachable!("feasibility LP has zero objective"),
    }
}

/// A polyhedron with some inequalities marked strict.
#[derive(Clone, Debug)]
struct Region {
    sys: HalfspaceSystem,
    strict: Vec<usize>,
}

impl Region {
    fn nonempty(&self) -> bool {
        self.sys.feasible_point(&self.strict).is_some()
    }

    fn with_strict(&self, normal: RatVector, rhs: Rational) -> Region {
        let mut r = self.clone();
        r.sys.add_inequality(normal, rhs);
        r.strict.push(r.sys.inequalities.len() - 1);
        r
    }
}

/// Exact test of `∪ a ⊆ ∪ b` for finite unions of closed polyhedra.
///
/// Each piece of `a` is refined by the complement of each piece of `b` (one
/// branch per violated constraint, strict); containment holds iff every
/// branch ends infeasible.
pub fn union_subset(a: &[HalfspaceSystem], b: &[HalfspaceSystem]) -> bool {
    a.iter().all(|piece| {
        let region = Region {
            sys: piece.clone(),
            strict: Vec::new(),
        };
        !escapes(&region, b)
    })
}

pub fn union_eq(a: &[HalfspaceSystem], b: &[HalfspaceSystem]) -> bool {
    union_subset(a, b) && union_subset(b, a)
}

/// Whether some point of `region` lies outside every set in `cover`.
fn escapes(region: &Region, cover: &[HalfspaceSystem]) -> bool {
    if !region.nonempty() {
        return false;
    }
    if cover.iter().any(|c| region.sys.is_subset_of(c)) {
        return false;
    }
    let Some((first, rest)) = cover.split_first() else {
        return true;
    };
    let probe = region.sys.intersect(first);
    let meets = Region {
        sys: probe,
        strict: region.strict.clone(),
    }
    .nonempty();
    if !meets {
        return escapes(region, rest);
    }
    for (a, b) in &first.inequalities {
        if escapes(&region.with_strict(a.neg(), -b.clone()), rest) {
            return true;
        }
    }
    for (a, b) in &first.equalities {
        if escapes(&region.with_strict(a.neg(), -b.clone()), rest)
            || escapes(&region.with_strict(a.clone(), b.clone()), rest)
        {
            return true;
        }
    }
    false
}
