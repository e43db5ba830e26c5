use num_traits::{One, Signed, Zero};

use super::lp::{LinearProgram, LpOutcome, Relation};
use super::matrix::RatVector;
use super::rational::Rational;

/// `{x : ⟨e, x⟩ = f for equalities, ⟨a, x⟩ ≤ b for inequalities}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfspaceSystem {
    dim: usize,
    pub equalities: Vec<(RatVector, Rational)>,
    pub inequalities: Vec<(RatVector, Rational)>,
}

impl HalfspaceSystem {
    /// The whole space `R^dim`.
    pub fn new(dim: usize) -> Self {
        HalfspaceSystem {
            dim,
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add_equality(&mut self, normal: RatVector, rhs: Rational) {
        assert_eq!(normal.dim(), self.dim, "equality normal has wrong dimension");
        self.equalities.push((normal, rhs));
    }

    pub fn add_inequality(&mut self, normal: RatVector, rhs: Rational) {
        assert_eq!(normal.dim(), self.dim, "inequality normal has wrong dimension");
        self.inequalities.push((normal, rhs));
    }

    pub fn with_equality(mut self, normal: RatVector, rhs: Rational) -> Self {
        self.add_equality(normal, rhs);
        self
    }

    pub fn with_inequality(mut self, normal: RatVector, rhs: Rational) -> Self {
        self.add_inequality(normal, rhs);
        self
    }

    /// Conjunction of both systems.
    pub fn intersect(&self, other: &HalfspaceSystem) -> HalfspaceSystem {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        out.equalities.extend(other.equalities.iter().cloned());
        out.inequalities.extend(other.inequalities.iter().cloned());
        out
    }

    /// All right-hand sides zero, i.e. the set is a cone.
    pub fn is_homogeneous(&self) -> bool {
        self.equalities
            .iter()
            .chain(&self.inequalities)
            .all(|(_, b)| b.is_zero())
    }

    pub fn contains(&self, x: &RatVector) -> bool {
        self.equalities.iter().all(|(a, b)| &a.dot(x) == b)
            && self.inequalities.iter().all(|(a, b)| &a.dot(x) <= b)
    }

    /// Indices of inequalities holding with equality at `x`.
    pub fn tight_inequalities(&self, x: &RatVector) -> Vec<usize> {
        self.inequalities
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| &a.dot(x) == b)
            .map(|(i, _)| i)
            .collect()
    }

    /// A point satisfying every equality and inequality, with the
    /// inequalities listed in `strict` holding strictly. A shared slack is
    /// maximized (capped at 1) and only a positive optimum is accepted.
    pub fn feasible_point(&self, strict: &[usize]) -> Option<RatVector> {
        let n = self.dim;
        let slack = n;
        let mut lp = LinearProgram::new(n + 1);
        for j in 0..n {
            lp.set_free(j);
        }
        let row = |a: &RatVector, s: Rational| {
            let mut r = a.as_slice().to_vec();
            r.push(s);
            r
        };
        for (a, b) in &self.equalities {
            lp.add(row(a, Rational::zero()), Relation::Eq, b.clone());
        }
        for (i, (a, b)) in self.inequalities.iter().enumerate() {
            let s = if strict.contains(&i) {
                Rational::one()
            } else {
                Rational::zero()
            };
            lp.add(row(a, s), Relation::Le, b.clone());
        }
        let mut cap = vec![Rational::zero(); n + 1];
        cap[slack] = Rational::one();
        lp.add(cap.clone(), Relation::Le, Rational::one());
        if !strict.is_empty() {
            lp.maximize(cap);
        }
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => {
                if !strict.is_empty() && !x[slack].is_positive() {
                    return None;
                }
                Some(RatVector::new(x[..n].to_vec()))
            }
            LpOutcome::Infeasible => None,
            LpOutcome::Unbounded => unreachable!("slack is capped"),
        }
    }

    /// `self ⊆ other` by maximizing each of `other`'s rows over `self`.
    /// An empty `self` is a subset of everything.
    pub fn is_subset_of(&self, other: &HalfspaceSystem) -> bool {
        if self.is_empty() {
            return true;
        }
        let bounded_by = |a: &RatVector, b: &Rational| match self.minimize(&a.neg()) {
            Some(Some((val, _))) => -val <= *b,
            _ => false,
        };
        other.inequalities.iter().all(|(a, b)| bounded_by(a, b))
            && other
                .equalities
                .iter()
                .all(|(a, b)| bounded_by(a, b) && bounded_by(&a.neg(), &-b.clone()))
    }

    pub fn is_empty(&self) -> bool {
        self.feasible_point(&[]).is_none()
    }

    /// Minimizes `⟨c, x⟩` over the system; `None` when infeasible,
    /// `Some(None)` when unbounded below.
    pub fn minimize(&self, c: &RatVector) -> Option<Option<(Rational, RatVector)>> {
        let n = self.dim;
        let mut lp = LinearProgram::new(n);
        for j in 0..n {
            lp.set_free(j);
        }
        for (a, b) in &self.equalities {
            lp.add(a.as_slice().to_vec(), Relation::Eq, b.clone());
        }
        for (a, b) in &self.inequalities {
            lp.add(a.as_slice().to_vec(), Relation::Le, b.clone());
        }
        lp.minimize(c.as_slice().to_vec());
        match lp.solve() {
            LpOutcome::Infeasible => None,
            LpOutcome::Unbounded => Some(None),
            LpOutcome::Optimal { x, .. } => {
                let x = RatVector::new(x);
                Some(Some((c.dot(&x), x)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::rational::int;

    fn v(x: &[i64]) -> RatVector {
        RatVector::from_ints(x)
    }

    #[test]
    fn strict_half_line() {
        let sys = HalfspaceSystem::new(1).with_inequality(v(&[1]), int(1));
        let p = sys.feasible_point(&[0]).unwrap();
        assert!(p[0] < int(1));
    }

    #[test]
    fn strictness_contradiction() {
        let sys = HalfspaceSystem::new(1)
            .with_inequality(v(&[1]), int(0))
            .with_inequality(v(&[-1]), int(0));
        assert!(sys.feasible_point(&[0]).is_none());
        assert!(sys.feasible_point(&[]).is_some());
    }

    #[test]
    fn open_triangle() {
        let sys = HalfspaceSystem::new(2)
            .with_inequality(v(&[1, 1]), int(1))
            .with_inequality(v(&[-1, 0]), int(0))
            .with_inequality(v(&[0, -1]), int(0));
        let p = sys.feasible_point(&[0, 1, 2]).unwrap();
        assert!(&p[0] + &p[1] < int(1));
        assert!(p[0] > int(0) && p[1] > int(0));
    }

    #[test]
    fn subset_by_lp() {
        let unit = HalfspaceSystem::new(1)
            .with_inequality(v(&[1]), int(1))
            .with_inequality(v(&[-1]), int(0));
        let half = HalfspaceSystem::new(1).with_inequality(v(&[1]), int(2));
        assert!(unit.is_subset_of(&half));
        assert!(!half.is_subset_of(&unit));
        let point = HalfspaceSystem::new(1).with_equality(v(&[1]), int(1));
        assert!(point.is_subset_of(&unit));
        assert!(!unit.is_subset_of(&point));
    }

    #[test]
    fn minimize_detects_unbounded() {
        let sys = HalfspaceSystem::new(1).with_inequality(v(&[1]), int(3));
        assert_eq!(sys.minimize(&v(&[1])), Some(None));
        let (val, _) = sys.minimize(&v(&[-1])).unwrap().unwrap();
        assert_eq!(val, int(-3));
    }
}
