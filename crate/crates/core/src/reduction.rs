//! Linear reduction of a CPWL function at a point: an `s × m` matrix `B` and
//! a CPWL function `ϑ` on `R^s` with `θ(z) − ⟨b, z⟩ = ϑ(Bz)` near `z̄`.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpwl_core::{CpwlFunction, Value};
use crate::error::{Error, Result};
use crate::ratlin::{
    orthogonal_basis, orthogonal_complement, GeneratorSet, RatMatrix, RatVector, Rational,
};
use crate::second_order::active_subspace;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionResult {
    pub zbar: RatVector,
    /// Shift `b`, an element of `aff ∂θ(z̄)`.
    pub shift: RatVector,
    /// Columns: an orthogonal basis of `S(z̄)` followed by one of its complement.
    pub a: RatMatrix,
    pub b: RatMatrix,
    pub s: usize,
    /// Trailing coordinates of `A⁻¹ z̄`, frozen in `ϑ`.
    pub ybar_tail: RatVector,
    pub reduced: CpwlFunction,
    /// Sup-norm radius around `z̄` on which the identity is guaranteed.
    pub radius: Rational,
}

/// `S(z̄)` and the canonical shift `b = a_{min K(z̄)}`.
pub fn affine_hull(theta: &CpwlFunction, zbar: &RatVector) -> Result<(GeneratorSet, RatVector)> {
    let act = theta.active_sets(zbar)?;
    let s = GeneratorSet::subspace(theta.dim(), active_subspace(theta, zbar)?);
    Ok((s, theta.slope(act.pieces[0]).clone()))
}

pub fn build_reduction(theta: &CpwlFunction, zbar: &RatVector) -> Result<ReductionResult> {
    let m = theta.dim();
    let (subspace, shift) = affine_hull(theta, zbar)?;
    let u = orthogonal_basis(&subspace.span_gens, m);
    let w = orthogonal_basis(&orthogonal_complement(&u, m), m);
    let s = u.len();
    if s + w.len() != m {
        return Err(Error::Internal("complementary bases do not fill the space".into()));
    }
    let cols: Vec<RatVector> = u.iter().chain(&w).cloned().collect();
    let a = RatMatrix::from_cols(&cols, m);
    let a_inv = a
        .inverse()
        .ok_or_else(|| Error::Internal("alignment matrix is singular".into()))?;
    let b = a_inv.top_rows(s);
    let ybar = a_inv.mul_vec(zbar);
    let ybar_tail = ybar.slice(s, m);
    let anchor = w
        .iter()
        .zip(ybar_tail.iter())
        .fold(RatVector::zeros(m), |acc, (col, c)| acc.axpy(c, col));

    let restrict = |g: &RatVector| -> RatVector { u.iter().map(|col| col.dot(g)).collect() };
    let pieces = theta
        .pieces()
        .iter()
        .map(|p| {
            let g = p.slope.sub(&shift);
            (restrict(&g), &p.offset - g.dot(&anchor))
        })
        .collect();
    let rows = (0..theta.num_rows())
        .map(|t| {
            let d = theta.row_normal(t);
            (restrict(d), theta.row_bound(t) - d.dot(&anchor))
        })
        .collect();
    let reduced = CpwlFunction::new(s, pieces, rows)?;

    Ok(ReductionResult {
        zbar: zbar.clone(),
        shift,
        a,
        b,
        s,
        ybar_tail,
        reduced,
        radius: validity_radius(theta, zbar)?,
    })
}

/// `min gap / (2 m ‖g‖₁)` over constraints inactive at `z̄`, where `g` is the
/// constraint normal (piece differences against an active piece, domain rows).
fn validity_radius(theta: &CpwlFunction, zbar: &RatVector) -> Result<Rational> {
    let act = theta.active_sets(zbar)?;
    let m = Rational::from_integer((theta.dim().max(1) as i64).into());
    let top = theta.piece_value(act.pieces[0], zbar);
    let base = theta.slope(act.pieces[0]);
    let mut best: Option<Rational> = None;
    let mut consider = |gap: Rational, g: RatVector| {
        let norm = g.norm_l1();
        if norm.is_zero() {
            return;
        }
        let r = gap / (Rational::from_integer(2.into()) * &m * norm);
        if best.as_ref().is_none_or(|b| &r < b) {
            best = Some(r);
        }
    };
    for i in 0..theta.num_pieces() {
        if !act.pieces.contains(&i) {
            consider(&top - theta.piece_value(i, zbar), theta.slope(i).sub(base));
        }
    }
    for t in 0..theta.num_rows() {
        if !act.rows.contains(&t) {
            let d = theta.row_normal(t);
            consider(theta.row_bound(t) - d.dot(zbar), d.clone());
        }
    }
    Ok(best.unwrap_or_else(Rational::one))
}

/// Sample points within the validity radius: `z̄`, axis steps of size `ρ`
/// and `ρ/2` in both directions, then seeded random rational offsets.
pub fn sample_points(zbar: &RatVector, radius: &Rational, samples: usize, seed: u64) -> Vec<RatVector> {
    let m = zbar.dim();
    let mut pts = vec![zbar.clone()];
    let half = radius / Rational::from_integer(2.into());
    for k in 0..m {
        for step in [radius.clone(), half.clone()] {
            for sign in [1, -1] {
                let e = RatVector::unit(m, k).scale(&(&step * Rational::from_integer(sign.into())));
                pts.push(zbar.add(&e));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const DEN: i64 = 16;
    while pts.len() < samples {
        let off: RatVector = (0..m)
            .map(|_| Rational::new(rng.gen_range(-DEN..=DEN).into(), DEN.into()) * radius)
            .collect();
        pts.push(zbar.add(&off));
    }
    pts.truncate(samples.max(1));
    pts
}

/// Checks `θ(z) − ⟨b, z⟩ = ϑ(Bz)` exactly on `samples` points around `z̄`.
pub fn verify_reduction(theta: &CpwlFunction, red: &ReductionResult, samples: usize) -> Result<bool> {
    for z in sample_points(&red.zbar, &red.radius, samples, 0) {
        let lhs = match theta.evaluate(&z)? {
            Value::Finite(v) => Value::Finite(v - red.shift.dot(&z)),
            inf => inf,
        };
        if lhs != red.reduced.evaluate(&red.b.mul_vec(&z))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Convexity spot check of `ϑ` via the subgradient inequality between pairs
/// of sample points.
pub fn reduced_is_convex_on(red: &ReductionResult, points: &[RatVector]) -> Result<bool> {
    let f = &red.reduced;
    for x in points {
        let Value::Finite(fx) = f.evaluate(x)? else { continue };
        let sub = f.subdifferential(x)?;
        for y in points {
            let Value::Finite(fy) = f.evaluate(y)? else { continue };
            for g in &sub.conv_gens {
                if fy < &fx + g.dot(&y.sub(x)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

impl ReductionResult {
    /// Whether `z` lies within the validity radius of `z̄`.
    pub fn within_radius(&self, z: &RatVector) -> bool {
        z.sub(&self.zbar).norm_inf() <= self.radius && self.radius.is_positive()
    }
}
