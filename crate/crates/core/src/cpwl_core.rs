//! Convex piecewise linear functions `θ(z) = max_i (⟨a_i, z⟩ − α_i)` on a
//! polyhedral domain `{z : ⟨d_t, z⟩ ≤ β_t}`, with their active index sets and
//! first-order subdifferentials.

use num_traits::{One, Signed, Zero};

use crate::error::{check_dim, Error, Result};
use crate::ratlin::{
    generator_membership, GeneratorSet, HalfspaceSystem, RatVector, Rational,
};

/// One affine piece `z ↦ ⟨slope, z⟩ − offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AffinePiece {
    pub slope: RatVector,
    pub offset: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CpwlFunction {
    dim: usize,
    pieces: Vec<AffinePiece>,
    domain: HalfspaceSystem,
}

/// Extended-real value of a proper convex function.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Finite(Rational),
    PlusInfinity,
}

impl Value {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Value::Finite(v) => Some(v),
            Value::PlusInfinity => None,
        }
    }
}

/// `K(z)` (maximizing pieces) and `I(z)` (tight domain rows) at `point`.
/// Indices are zero-based positions in the function's piece and row lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSets {
    pub pieces: Vec<usize>,
    pub rows: Vec<usize>,
    pub point: RatVector,
}

/// `v = v1 + v2` with `v1 = Σ λ_i a_i` (convex weights over `K`) and
/// `v2 = Σ μ_t d_t` (nonnegative weights over `I`). `j1`, `j2` are the
/// supports of `λ`, `μ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgradientDecomposition {
    pub lambda: Vec<(usize, Rational)>,
    pub mu: Vec<(usize, Rational)>,
    pub v1: RatVector,
    pub v2: RatVector,
    pub j1: Vec<usize>,
    pub j2: Vec<usize>,
}

impl CpwlFunction {
    /// Builds `θ` from pieces `(a_i, α_i)` and domain rows `(d_t, β_t)`.
    /// Rejects an empty piece list, ragged dimensions and empty domains.
    pub fn new(
        dim: usize,
        pieces: Vec<(RatVector, Rational)>,
        domain_rows: Vec<(RatVector, Rational)>,
    ) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput("a CPWL function needs at least one piece".into()));
        }
        for (k, (a, _)) in pieces.iter().enumerate() {
            check_dim(&format!("piece {k} slope"), dim, a.dim())?;
        }
        let mut domain = HalfspaceSystem::new(dim);
        for (k, (d, b)) in domain_rows.into_iter().enumerate() {
            check_dim(&format!("domain row {k}"), dim, d.dim())?;
            domain.add_inequality(d, b);
        }
        if domain.is_empty() {
            return Err(Error::EmptyDomain);
        }
        Ok(CpwlFunction {
            dim,
            pieces: pieces
                .into_iter()
                .map(|(slope, offset)| AffinePiece { slope, offset })
                .collect(),
            domain,
        })
    }

    /// Support function of the polytope with the given vertices:
    /// `θ(z) = max_p ⟨p, z⟩` on the whole space.
    pub fn from_support_vertices(vertices: &[RatVector]) -> Result<Self> {
        let first = vertices
            .first()
            .ok_or_else(|| Error::InvalidInput("vertex list is empty".into()))?;
        let dim = first.dim();
        let pieces = vertices
            .iter()
            .map(|p| (p.clone(), Rational::zero()))
            .collect();
        Self::new(dim, pieces, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn slope(&self, i: usize) -> &RatVector {
        &self.pieces[i].slope
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn domain(&self) -> &HalfspaceSystem {
        &self.domain
    }

    pub fn num_rows(&self) -> usize {
        self.domain.inequalities.len()
    }

    /// Normal `d_t` of domain row `t`.
    pub fn row_normal(&self, t: usize) -> &RatVector {
        &self.domain.inequalities[t].0
    }

    pub fn row_bound(&self, t: usize) -> &Rational {
        &self.domain.inequalities[t].1
    }

    pub fn piece_value(&self, i: usize, z: &RatVector) -> Rational {
        let p = &self.pieces[i];
        p.slope.dot(z) - &p.offset
    }

    pub fn in_domain(&self, z: &RatVector) -> bool {
        self.domain.contains(z)
    }

    pub fn evaluate(&self, z: &RatVector) -> Result<Value> {
        check_dim("evaluation point", self.dim, z.dim())?;
        if !self.in_domain(z) {
            return Ok(Value::PlusInfinity);
        }
        let best = (0..self.pieces.len())
            .map(|i| self.piece_value(i, z))
            .max()
            .expect("at least one piece");
        Ok(Value::Finite(best))
    }

    fn require_domain(&self, z: &RatVector) -> Result<()> {
        check_dim("point", self.dim, z.dim())?;
        if self.in_domain(z) {
            Ok(())
        } else {
            Err(Error::OutsideDomain)
        }
    }

    pub fn active_sets(&self, z: &RatVector) -> Result<ActiveSets> {
        self.require_domain(z)?;
        let values: Vec<Rational> = (0..self.pieces.len())
            .map(|i| self.piece_value(i, z))
            .collect();
        let best = values.iter().max().expect("at least one piece");
        let pieces = (0..values.len()).filter(|&i| &values[i] == best).collect();
        Ok(ActiveSets {
            pieces,
            rows: self.domain.tight_inequalities(z),
            point: z.clone(),
        })
    }

    /// `∂θ(z) = conv{a_i : i ∈ K(z)} + cone{d_t : t ∈ I(z)}`.
    pub fn subdifferential(&self, z: &RatVector) -> Result<GeneratorSet> {
        let act = self.active_sets(z)?;
        Ok(GeneratorSet::new(
            self.dim,
            act.pieces.iter().map(|&i| self.slope(i).clone()).collect(),
            act.rows.iter().map(|&t| self.row_normal(t).clone()).collect(),
            Vec::new(),
        ))
    }

    /// `∂^∞θ(z) = N(z; dom θ) = cone{d_t : t ∈ I(z)}`.
    pub fn singular_subdifferential(&self, z: &RatVector) -> Result<GeneratorSet> {
        let act = self.active_sets(z)?;
        Ok(GeneratorSet::new(
            self.dim,
            Vec::new(),
            act.rows.iter().map(|&t| self.row_normal(t).clone()).collect(),
            Vec::new(),
        ))
    }

    pub fn is_subgradient(&self, z: &RatVector, v: &RatVector) -> Result<bool> {
        check_dim("subgradient", self.dim, v.dim())?;
        Ok(self.subdifferential(z)?.contains(v))
    }

    /// Decomposition of `v ∈ ∂θ(z)` whose multiplier supports are maximal:
    /// one strict-positivity LP per index, witnesses averaged.
    pub fn decompose_subgradient(
        &self,
        z: &RatVector,
        v: &RatVector,
    ) -> Result<SubgradientDecomposition> {
        check_dim("subgradient", self.dim, v.dim())?;
        let act = self.active_sets(z)?;
        let (nk, ni) = (act.pieces.len(), act.rows.len());
        let nvar = nk + ni;

        // Variables (λ over K, μ over I) with λ, μ ≥ 0, Σλ = 1, Σλa + Σμd = v.
        let mut sys = HalfspaceSystem::new(nvar);
        for c in 0..self.dim {
            let row: RatVector = act
                .pieces
                .iter()
                .map(|&i| self.slope(i)[c].clone())
                .chain(act.rows.iter().map(|&t| self.row_normal(t)[c].clone()))
                .collect();
            sys.add_equality(row, v[c].clone());
        }
        let ones: RatVector = (0..nvar)
            .map(|k| if k < nk { Rational::one() } else { Rational::zero() })
            .collect();
        sys.add_equality(ones, Rational::one());
        for k in 0..nvar {
            sys.add_inequality(RatVector::unit(nvar, k).neg(), Rational::zero());
        }

        let base = sys.feasible_point(&[]).ok_or(Error::NotASubgradient)?;
        let mut witnesses = vec![base];
        for k in 0..nvar {
            if witnesses.iter().any(|w| w[k].is_positive()) {
                continue;
            }
            if let Some(w) = sys.feasible_point(&[k]) {
                witnesses.push(w);
            }
        }
        let count = Rational::from_integer((witnesses.len() as i64).into());
        let avg = witnesses
            .iter()
            .skip(1)
            .fold(witnesses[0].clone(), |acc, w| acc.add(w))
            .scale(&count.recip());

        let lambda: Vec<(usize, Rational)> = act
            .pieces
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, avg[k].clone()))
            .collect();
        let mu: Vec<(usize, Rational)> = act
            .rows
            .iter()
            .enumerate()
            .map(|(k, &t)| (t, avg[nk + k].clone()))
            .collect();
        let v1 = lambda.iter().fold(RatVector::zeros(self.dim), |acc, (i, l)| {
            acc.axpy(l, self.slope(*i))
        });
        let v2 = mu.iter().fold(RatVector::zeros(self.dim), |acc, (t, m)| {
            acc.axpy(m, self.row_normal(*t))
        });
        let j1 = lambda
            .iter()
            .filter(|(_, l)| l.is_positive())
            .map(|(i, _)| *i)
            .collect();
        let j2 = mu
            .iter()
            .filter(|(_, m)| m.is_positive())
            .map(|(t, _)| *t)
            .collect();
        Ok(SubgradientDecomposition {
            lambda,
            mu,
            v1,
            v2,
            j1,
            j2,
        })
    }

    /// Description of the stratum `H_{Q1,Q2} = {z ∈ dom θ : K(z) = Q1, I(z) = Q2}`:
    /// a system whose inequalities must all hold strictly. `Q1` must be
    /// nonempty. Dropping strictness gives the closure of a nonempty stratum.
    pub fn stratum(&self, q1: &[usize], q2: &[usize]) -> HalfspaceSystem {
        let k0 = *q1.first().expect("stratum needs a nonempty piece set");
        let base = &self.pieces[k0];
        let mut sys = HalfspaceSystem::new(self.dim);
        for (i, p) in self.pieces.iter().enumerate() {
            if i == k0 {
                continue;
            }
            let normal = p.slope.sub(&base.slope);
            let rhs = &p.offset - &base.offset;
            if q1.contains(&i) {
                sys.add_equality(normal, rhs);
            } else {
                sys.add_inequality(normal, rhs);
            }
        }
        for (t, (d, b)) in self.domain.inequalities.iter().enumerate() {
            if q2.contains(&t) {
                sys.add_equality(d.clone(), b.clone());
            } else {
                sys.add_inequality(d.clone(), b.clone());
            }
        }
        sys
    }

    /// A point of `H_{Q1,Q2}`, if the stratum is nonempty.
    pub fn stratum_point(&self, q1: &[usize], q2: &[usize]) -> Option<RatVector> {
        if q1.is_empty() {
            return None;
        }
        let sys = self.stratum(q1, q2);
        let strict: Vec<usize> = (0..sys.inequalities.len()).collect();
        sys.feasible_point(&strict)
    }

    /// `θ(z) − ⟨b, z⟩` as a CPWL function.
    pub fn tilted(&self, b: &RatVector) -> CpwlFunction {
        CpwlFunction {
            dim: self.dim,
            pieces: self
                .pieces
                .iter()
                .map(|p| AffinePiece {
                    slope: p.slope.sub(b),
                    offset: p.offset.clone(),
                })
                .collect(),
            domain: self.domain.clone(),
        }
    }

    /// Convex-combination check of `v` against `∂θ(z)` returning the raw
    /// multipliers (over `K(z)` then `I(z)`).
    pub fn subgradient_multipliers(
        &self,
        z: &RatVector,
        v: &RatVector,
    ) -> Result<Option<(Vec<Rational>, Vec<Rational>)>> {
        let act = self.active_sets(z)?;
        let conv: Vec<RatVector> = act.pieces.iter().map(|&i| self.slope(i).clone()).collect();
        let cone: Vec<RatVector> = act.rows.iter().map(|&t| self.row_normal(t).clone()).collect();
        Ok(generator_membership(v, &conv, &cone, &[]).map(|m| (m.conv, m.cone)))
    }
}
