//! Double-description conversion between the halfspace form
//! `{x : Ax ≤ 0, Ex = 0}` of a polyhedral cone and its generators
//! (a lineality basis plus one vector per extreme ray).

use num_traits::{Signed, Zero};

use super::halfspace::HalfspaceSystem;
use super::matrix::{rank_of, RatVector};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConeGenerators {
    pub lineality: Vec<RatVector>,
    pub rays: Vec<RatVector>,
}

impl ConeGenerators {
    pub fn is_trivial(&self) -> bool {
        self.lineality.is_empty() && self.rays.is_empty()
    }

    /// Every generator, lineality first.
    pub fn all(&self) -> impl Iterator<Item = &RatVector> {
        self.lineality.iter().chain(&self.rays)
    }
}

/// Generators of the cone cut out by a homogeneous system.
///
/// Panics when the system has a nonzero right-hand side.
pub fn cone_generators(sys: &HalfspaceSystem) -> ConeGenerators {
    assert!(sys.is_homogeneous(), "cone_generators: system is not homogeneous");
    let n = sys.dim();
    let mut lines: Vec<RatVector> = (0..n).map(|k| RatVector::unit(n, k)).collect();
    let mut rays: Vec<RatVector> = Vec::new();
    let mut processed: Vec<RatVector> = Vec::new();

    let rows = sys
        .equalities
        .iter()
        .map(|(a, _)| (a, true))
        .chain(sys.inequalities.iter().map(|(a, _)| (a, false)));

    for (a, is_eq) in rows {
        if a.is_zero() {
            continue;
        }
        if let Some(k) = lines.iter().position(|l| !a.dot(l).is_zero()) {
            let l = lines.remove(k);
            let al = a.dot(&l);
            for other in lines.iter_mut() {
                let c = a.dot(other) / &al;
                *other = other.axpy(&-c, &l);
            }
            for r in rays.iter_mut() {
                let c = a.dot(r) / &al;
                *r = r.axpy(&-c, &l).primitive();
            }
            if !is_eq {
                let dir = if al.is_negative() { l } else { l.neg() };
                rays.push(dir.primitive());
            }
            processed.push(a.clone());
            rays = dedup(rays);
            continue;
        }

        let vals: Vec<_> = rays.iter().map(|r| a.dot(r)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();
        let zer: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_zero()).collect();

        let d = n - lines.len();
        let mut next: Vec<RatVector> = zer.iter().map(|&i| rays[i].clone()).collect();
        if !is_eq {
            next.extend(neg.iter().map(|&i| rays[i].clone()));
        }
        for &p in &pos {
            for &q in &neg {
                if adjacent(&rays[p], &rays[q], &processed, d, n) {
                    let r = rays[q]
                        .scale(&vals[p])
                        .axpy(&-vals[q].clone(), &rays[p]);
                    next.push(r.primitive());
                }
            }
        }
        processed.push(a.clone());
        rays = dedup(next);
    }

    ConeGenerators {
        lineality: lines,
        rays,
    }
}

fn adjacent(p: &RatVector, q: &RatVector, processed: &[RatVector], d: usize, n: usize) -> bool {
    if d < 2 {
        return false;
    }
    let common: Vec<RatVector> = processed
        .iter()
        .filter(|a| a.dot(p).is_zero() && a.dot(q).is_zero())
        .cloned()
        .collect();
    if common.len() < d - 2 {
        return false;
    }
    rank_of(&common, n) == d - 2
}

fn dedup(mut rays: Vec<RatVector>) -> Vec<RatVector> {
    rays.retain(|r| !r.is_zero());
    rays.sort();
    rays.dedup();
    rays
}

/// Homogeneous halfspace description of `cone(rays) + span(lines)` in `R^dim`.
pub fn cone_halfspaces(rays: &[RatVector], lines: &[RatVector], dim: usize) -> HalfspaceSystem {
    // The polar cone's generators are the facet normals of the original.
    let mut polar = HalfspaceSystem::new(dim);
    for r in rays {
        polar.add_inequality(r.clone(), Zero::zero());
    }
    for l in lines {
        polar.add_equality(l.clone(), Zero::zero());
    }
    let gens = cone_generators(&polar);
    let mut out = HalfspaceSystem::new(dim);
    for h in gens.lineality {
        out.add_equality(h.primitive(), Zero::zero());
    }
    for g in gens.rays {
        out.add_inequality(g, Zero::zero());
    }
    out
}
