//! Second-order subdifferential `∂²θ(z̄, v̄)` of a CPWL function as a finite
//! union of pieces `(F, G)`: `∂²θ(z̄, v̄)(u)` is the union of the `F` over
//! pieces with `−u ∈ G`.

use std::collections::HashMap;

use crate::cpwl_core::{CpwlFunction, SubgradientDecomposition};
use crate::error::{check_dim, Error, Result};
use crate::ratlin::{
    cone_generators, generator_membership, orthogonal_complement, span_basis, GeneratorSet,
    HalfspaceSystem, Multipliers, RatVector,
};

pub const DEFAULT_MAX_INDICES: usize = 12;

/// `P1 ⊆ Q1 ⊆ K(z̄)`, `P2 ⊆ Q2 ⊆ I(z̄)` with `v̄ ∈ conv{a_i : P1} + cone{d_t : P2}`
/// (certified by `membership`) and a point `witness` of the stratum `H_{Q1,Q2}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexQuadruple {
    pub p1: Vec<usize>,
    pub q1: Vec<usize>,
    pub p2: Vec<usize>,
    pub q2: Vec<usize>,
    pub membership: Multipliers,
    pub witness: RatVector,
}

impl IndexQuadruple {
    fn key(&self) -> (&[usize], &[usize], &[usize], &[usize]) {
        (&self.p1, &self.q1, &self.p2, &self.q2)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecondOrderPiece {
    pub quadruple: IndexQuadruple,
    pub f: GeneratorSet,
    pub g: HalfspaceSystem,
}

impl SecondOrderPiece {
    /// Whether this piece contributes at direction `u`, i.e. `−u ∈ G`.
    pub fn active_at(&self, u: &RatVector) -> bool {
        self.g.contains(&u.neg())
    }
}

#[derive(Clone, Debug)]
pub struct SecondOrderMap {
    pub zbar: RatVector,
    pub vbar: RatVector,
    pub decomposition: SubgradientDecomposition,
    pub pieces: Vec<SecondOrderPiece>,
}

impl SecondOrderMap {
    /// F-sets of the pieces with `−u ∈ G`; empty when `u ∉ dom ∂²θ(z̄, v̄)`.
    pub fn eval(&self, u: &RatVector) -> Result<Vec<GeneratorSet>> {
        check_dim("direction", self.zbar.dim(), u.dim())?;
        Ok(self
            .pieces
            .iter()
            .filter(|p| p.active_at(u))
            .map(|p| p.f.clone())
            .collect())
    }

    pub fn active_pieces<'a>(&'a self, u: &'a RatVector) -> impl Iterator<Item = &'a SecondOrderPiece> {
        self.pieces.iter().filter(move |p| p.active_at(u))
    }

    pub fn in_domain(&self, u: &RatVector) -> bool {
        self.pieces.iter().any(|p| p.active_at(u))
    }
}

/// Subsets of `set` (kept in increasing order), in bitmask order.
pub(crate) fn subsets(set: &[usize]) -> Vec<Vec<usize>> {
    (0u64..1 << set.len())
        .map(|mask| {
            set.iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &i)| i)
                .collect()
        })
        .collect()
}

fn supersets_within(base: &[usize], universe: &[usize]) -> Vec<Vec<usize>> {
    let rest: Vec<usize> = universe.iter().copied().filter(|i| !base.contains(i)).collect();
    subsets(&rest)
        .into_iter()
        .map(|extra| {
            let mut s: Vec<usize> = base.iter().chain(&extra).copied().collect();
            s.sort_unstable();
            s
        })
        .collect()
}

pub fn quadruple_family(
    theta: &CpwlFunction,
    zbar: &RatVector,
    vbar: &RatVector,
    max_indices: usize,
) -> Result<Vec<IndexQuadruple>> {
    check_dim("subgradient", theta.dim(), vbar.dim())?;
    let act = theta.active_sets(zbar)?;
    if !theta.is_subgradient(zbar, vbar)? {
        return Err(Error::NotASubgradient);
    }
    let total = act.pieces.len() + act.rows.len();
    if total > max_indices {
        return Err(Error::SizeCap {
            found: total,
            cap: max_indices,
        });
    }

    let mut strata: HashMap<(Vec<usize>, Vec<usize>), Option<RatVector>> = HashMap::new();
    let mut out = Vec::new();
    for p1 in subsets(&act.pieces).into_iter().filter(|s| !s.is_empty()) {
        let conv: Vec<RatVector> = p1.iter().map(|&i| theta.slope(i).clone()).collect();
        for p2 in subsets(&act.rows) {
            let cone: Vec<RatVector> = p2.iter().map(|&t| theta.row_normal(t).clone()).collect();
            let Some(membership) = generator_membership(vbar, &conv, &cone, &[]) else {
                continue;
            };
            for q1 in supersets_within(&p1, &act.pieces) {
                for q2 in supersets_within(&p2, &act.rows) {
                    let witness = strata
                        .entry((q1.clone(), q2.clone()))
                        .or_insert_with_key(|(q1, q2)| theta.stratum_point(q1, q2))
                        .clone();
                    if let Some(witness) = witness {
                        out.push(IndexQuadruple {
                            p1: p1.clone(),
                            q1: q1.clone(),
                            p2: p2.clone(),
                            q2,
                            membership: membership.clone(),
                            witness,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(out)
}

/// Generator families of `F` (span part, cone part) for the index sets.
fn f_generators(
    theta: &CpwlFunction,
    p1: &[usize],
    q1: &[usize],
    p2: &[usize],
    q2: &[usize],
) -> (Vec<RatVector>, Vec<RatVector>) {
    let base = theta.slope(p1[0]);
    let mut span: Vec<RatVector> = p1[1..].iter().map(|&i| theta.slope(i).sub(base)).collect();
    span.extend(p2.iter().map(|&t| theta.row_normal(t).clone()));
    let mut cone: Vec<RatVector> = q1
        .iter()
        .filter(|i| !p1.contains(i))
        .map(|&i| theta.slope(i).sub(base))
        .collect();
    cone.extend(
        q2.iter()
            .filter(|t| !p2.contains(t))
            .map(|&t| theta.row_normal(t).clone()),
    );
    (span, cone)
}

/// The homogeneous cone `G` for index sets `P1 ⊆ Q1`, `P2 ⊆ Q2` (`P1 ≠ ∅`).
pub fn g_cone(
    theta: &CpwlFunction,
    p1: &[usize],
    q1: &[usize],
    p2: &[usize],
    q2: &[usize],
) -> HalfspaceSystem {
    let (span, cone) = f_generators(theta, p1, q1, p2, q2);
    let mut g = HalfspaceSystem::new(theta.dim());
    for s in span {
        g.add_equality(s, Default::default());
    }
    for c in cone {
        g.add_inequality(c, Default::default());
    }
    g
}

pub fn build_piece(theta: &CpwlFunction, q: &IndexQuadruple) -> SecondOrderPiece {
    let (span, cone) = f_generators(theta, &q.p1, &q.q1, &q.p2, &q.q2);
    SecondOrderPiece {
        quadruple: q.clone(),
        f: GeneratorSet::new(theta.dim(), Vec::new(), cone, span),
        g: g_cone(theta, &q.p1, &q.q1, &q.p2, &q.q2),
    }
}

pub fn second_order_map(
    theta: &CpwlFunction,
    zbar: &RatVector,
    vbar: &RatVector,
    max_indices: usize,
) -> Result<SecondOrderMap> {
    let family = quadruple_family(theta, zbar, vbar, max_indices)?;
    let decomposition = theta.decompose_subgradient(zbar, vbar)?;
    Ok(SecondOrderMap {
        zbar: zbar.clone(),
        vbar: vbar.clone(),
        decomposition,
        pieces: family.iter().map(|q| build_piece(theta, q)).collect(),
    })
}

/// Basis of `S(z̄) = span{a_i − a_j : i, j ∈ K(z̄)} + span{d_t : t ∈ I(z̄)}`.
pub fn active_subspace(theta: &CpwlFunction, zbar: &RatVector) -> Result<Vec<RatVector>> {
    let act = theta.active_sets(zbar)?;
    let base = theta.slope(act.pieces[0]);
    let gens: Vec<RatVector> = act.pieces[1..]
        .iter()
        .map(|&i| theta.slope(i).sub(base))
        .chain(act.rows.iter().map(|&t| theta.row_normal(t).clone()))
        .collect();
    Ok(span_basis(&gens, theta.dim()))
}

/// `∂²θ(z̄, v̄)(0)`, which is the subspace `S(z̄)` for every `v̄ ∈ ∂θ(z̄)`.
pub fn value_at_zero(theta: &CpwlFunction, zbar: &RatVector, vbar: &RatVector) -> Result<GeneratorSet> {
    if !theta.is_subgradient(zbar, vbar)? {
        return Err(Error::NotASubgradient);
    }
    Ok(GeneratorSet::subspace(theta.dim(), active_subspace(theta, zbar)?))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainSubspace {
    /// `dom ∂²θ(z̄, v̄)` as a subspace.
    pub subspace: GeneratorSet,
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
    /// Normals whose orthogonal complement is the domain.
    pub normals: Vec<RatVector>,
}

/// `Γ(J1)`, `Γ(J2)` and `dom ∂²θ(z̄, v̄)`, deciding "for all `u ∈ G`" on the
/// lineality space and extreme rays of `G_{{J1,K},{J2,I}}`.
pub fn domain_subspace(
    theta: &CpwlFunction,
    zbar: &RatVector,
    dec: &SubgradientDecomposition,
) -> Result<DomainSubspace> {
    let act = theta.active_sets(zbar)?;
    if dec.j1.is_empty() {
        return Err(Error::InvalidInput("decomposition has empty J1".into()));
    }
    let g = g_cone(theta, &dec.j1, &act.pieces, &dec.j2, &act.rows);
    let gens = cone_generators(&g);
    let gens: Vec<&RatVector> = gens.all().collect();
    let vanishes = |n: &RatVector| gens.iter().all(|g| n.dot(g) == Default::default());

    let gamma1: Vec<usize> = act
        .pieces
        .iter()
        .copied()
        .filter(|&i| {
            dec.j1
                .iter()
                .all(|&j| vanishes(&theta.slope(i).sub(theta.slope(j))))
        })
        .collect();
    let gamma2: Vec<usize> = act
        .rows
        .iter()
        .copied()
        .filter(|&t| vanishes(theta.row_normal(t)))
        .collect();

    let base = theta.slope(gamma1[0]);
    let normals: Vec<RatVector> = gamma1[1..]
        .iter()
        .map(|&i| theta.slope(i).sub(base))
        .chain(gamma2.iter().map(|&t| theta.row_normal(t).clone()))
        .collect();
    let subspace = GeneratorSet::subspace(theta.dim(), orthogonal_complement(&normals, theta.dim()));
    Ok(DomainSubspace {
        subspace,
        gamma1,
        gamma2,
        normals,
    })
}
