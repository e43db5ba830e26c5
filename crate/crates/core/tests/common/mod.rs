//! Instance builders shared by the integration suites.
#![allow(dead_code)]

use cpwl::cpwl_core::CpwlFunction;
use cpwl::oracle::graph_pieces;
use cpwl::ratlin::{int, rank_of, RatMatrix, RatVector, Rational};
use cpwl::stability::CompositeProblemData;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn v(x: &[i64]) -> RatVector {
    RatVector::from_ints(x)
}

pub fn theta(m: usize, pieces: &[(&[i64], i64)], rows: &[(&[i64], i64)]) -> CpwlFunction {
    CpwlFunction::new(
        m,
        pieces.iter().map(|(a, al)| (v(a), int(*al))).collect(),
        rows.iter().map(|(d, b)| (v(d), int(*b))).collect(),
    )
    .expect("valid test function")
}

pub fn abs() -> CpwlFunction {
    theta(1, &[(&[1], 0), (&[-1], 0)], &[])
}

pub fn plus() -> CpwlFunction {
    theta(1, &[(&[0], 0), (&[1], 0)], &[])
}

/// `δ_{(−∞, 0]}`.
pub fn lower() -> CpwlFunction {
    theta(1, &[(&[0], 0)], &[(&[1], 0)])
}

/// All subsets of `pool` with size in `lo..=hi`, in a fixed order.
pub fn subsets_between<T: Clone>(pool: &[T], lo: usize, hi: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << pool.len()) {
        let k = mask.count_ones() as usize;
        if (lo..=hi).contains(&k) {
            out.push((0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i].clone()).collect());
        }
    }
    out
}

type Affine = (Vec<i64>, i64);

fn family_over(m: usize, pieces: &[Affine], rows: &[Affine]) -> Vec<CpwlFunction> {
    let mut out = Vec::new();
    for ps in subsets_between(pieces, 1, 3) {
        for rs in subsets_between(rows, 0, 2) {
            let f = CpwlFunction::new(
                m,
                ps.iter().map(|(a, b)| (v(a), int(*b))).collect(),
                rs.iter().map(|(a, b)| (v(a), int(*b))).collect(),
            );
            if let Ok(f) = f {
                out.push(f);
            }
        }
    }
    out
}

/// Every combination of 1 to 3 pieces and 0 to 2 domain rows drawn from
/// fixed pools of integer data of height at most 2, in dimensions 1 and 2.
pub fn oracle_family() -> Vec<CpwlFunction> {
    let p1: Vec<Affine> = vec![(vec![1], 0), (vec![-1], 0), (vec![0], 0), (vec![2], -1)];
    let r1: Vec<Affine> = vec![(vec![1], 1), (vec![-1], 1), (vec![1], 0)];
    let p2: Vec<Affine> = vec![
        (vec![1, 0], 0),
        (vec![-1, 1], 0),
        (vec![0, -1], 1),
        (vec![0, 0], 0),
        (vec![1, 1], -1),
    ];
    let r2: Vec<Affine> = vec![(vec![1, 1], 1), (vec![-1, 2], 2), (vec![0, -1], 0), (vec![-1, 0], 1)];
    let mut out = family_over(1, &p1, &r1);
    out.extend(family_over(2, &p2, &r2));
    out
}

/// One relative-interior point per nonempty stratum.
pub fn stratum_points(theta: &CpwlFunction) -> Vec<RatVector> {
    let mut pts: Vec<RatVector> = graph_pieces(theta, 12)
        .expect("family is within caps")
        .iter()
        .filter_map(|p| theta.stratum_point(&p.q1, &p.q2))
        .collect();
    pts.sort();
    pts.dedup();
    pts
}

/// A random element of `∂θ(z)`: a convex combination of active slopes plus
/// a nonnegative combination of active normals, with small integer weights.
pub fn random_subgradient(theta: &CpwlFunction, z: &RatVector, rng: &mut ChaCha8Rng) -> RatVector {
    let act = theta.active_sets(z).expect("point in domain");
    let mut w: Vec<i64> = act.pieces.iter().map(|_| rng.gen_range(0..=3)).collect();
    if w.iter().all(|&x| x == 0) {
        let k = rng.gen_range(0..w.len());
        w[k] = 1;
    }
    let total: i64 = w.iter().sum();
    let mut out = RatVector::zeros(theta.dim());
    for (&i, &wi) in act.pieces.iter().zip(&w) {
        out = out.axpy(&Rational::new(wi.into(), total.into()), theta.slope(i));
    }
    for &t in &act.rows {
        let mu = rng.gen_range(0..=2i64);
        out = out.axpy(&int(mu), theta.row_normal(t));
    }
    out
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, h: i64) -> RatMatrix {
    let rows: Vec<RatVector> = (0..r)
        .map(|_| (0..c).map(|_| int(rng.gen_range(-h..=h))).collect())
        .collect();
    RatMatrix::from_rows(&rows, c)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, h: i64) -> RatMatrix {
    random_matrix(rng, n, n, h).symmetrized()
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, h: i64) -> RatVector {
    (0..n).map(|_| int(rng.gen_range(-h..=h))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianKind {
    Zero,
    FullRank,
    Random,
}

/// A composite instance at a stratum point of `theta` whose tilt is
/// stationary by construction: `v̄ = ∇ₓφ₀ + Jxᵀλ` with `λ ∈ ∂θ(z̄)`.
pub fn random_composite(
    theta: &CpwlFunction,
    zbar: &RatVector,
    n: usize,
    kind: JacobianKind,
    rng: &mut ChaCha8Rng,
) -> CompositeProblemData {
    let m = theta.dim();
    let d = 1;
    let jx = match kind {
        JacobianKind::Zero => RatMatrix::zeros(m, n),
        JacobianKind::FullRank => loop {
            let j = random_matrix(rng, m, n, 2);
            let cols = j.col_vectors();
            if rank_of(&cols, m) == m.min(n) {
                break j;
            }
        },
        JacobianKind::Random => random_matrix(rng, m, n, 2),
    };
    let lambda = random_subgradient(theta, zbar, rng);
    let gx0 = random_vector(rng, n, 2);
    let vbar = gx0.add(&jx.transpose().mul_vec(&lambda));
    CompositeProblemData {
        theta: theta.clone(),
        n,
        d,
        grad_x_phi0: gx0,
        grad_w_phi0: random_vector(rng, d, 2),
        jx,
        jw: random_matrix(rng, m, d, 2),
        hxx_phi: (0..m).map(|_| random_symmetric(rng, n, 1)).collect(),
        hxw_phi: (0..m).map(|_| random_matrix(rng, n, d, 1)).collect(),
        hxx_phi0: random_symmetric(rng, n, 2),
        hxw_phi0: random_matrix(rng, n, d, 1),
        zbar: zbar.clone(),
        vbar,
    }
}
