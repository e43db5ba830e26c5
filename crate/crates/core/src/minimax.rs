//! Constrained minimax problems `min max_i φ_i(x, w) − ⟨v, x⟩` subject to
//! `Υ(x, w) ∈ Z` for a polyhedron `Z = {y : ⟨c_t, y⟩ ≤ τ_t}`, encoded as
//! composite problems and certified through the minimax SSOSC.

use num_traits::{One, Zero};

use crate::cpwl_core::CpwlFunction;
use crate::error::{check_dim, Error, Result};
use crate::ratlin::{
    kernel_basis, same_span, span_basis, span_intersection, HalfspaceSystem, RatMatrix, RatVector,
    Rational,
};
use crate::second_order::domain_subspace;
use crate::stability::{
    coordinate_ranges, full_stability_verdict, kkt_multipliers, restricted_positive_definite,
    soqc_check, CompositeProblemData, SsoscResult, StabilityReport,
};

/// Point data of the minimax problem at `(x̄, w̄)`: gradients and Hessian
/// blocks of the `l` objectives `φ_i` and `r` constraint maps `ζ_s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimaxProblemData {
    pub n: usize,
    pub d: usize,
    pub grad_x_phi: Vec<RatVector>,
    pub grad_w_phi: Vec<RatVector>,
    pub hxx_phi: Vec<RatMatrix>,
    pub hxw_phi: Vec<RatMatrix>,
    pub grad_x_zeta: Vec<RatVector>,
    pub grad_w_zeta: Vec<RatVector>,
    pub hxx_zeta: Vec<RatMatrix>,
    pub hxw_zeta: Vec<RatMatrix>,
    /// Rows `(c_t, τ_t)` of `Z ⊆ R^r`.
    pub z_rows: Vec<(RatVector, Rational)>,
    /// `Ξ(x̄, w̄) ∈ R^l`.
    pub zbar1: RatVector,
    /// `Υ(x̄, w̄) ∈ R^r`.
    pub zbar2: RatVector,
    pub vbar: RatVector,
}

impl MinimaxProblemData {
    pub fn l(&self) -> usize {
        self.grad_x_phi.len()
    }

    pub fn r(&self) -> usize {
        self.grad_x_zeta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d, l, r) = (self.n, self.d, self.l(), self.r());
        if l == 0 {
            return Err(Error::InvalidInput("minimax problem needs at least one objective".into()));
        }
        let shapes = |name: &str, gx: &[RatVector], gw: &[RatVector], hx: &[RatMatrix], hw: &[RatMatrix], count: usize| -> Result<()> {
            check_dim(&format!("{name} w-gradient count"), count, gw.len())?;
            check_dim(&format!("{name} xx-Hessian count"), count, hx.len())?;
            check_dim(&format!("{name} xw-Hessian count"), count, hw.len())?;
            for k in 0..count {
                check_dim(&format!("{name}[{k}] x-gradient"), n, gx[k].dim())?;
                check_dim(&format!("{name}[{k}] w-gradient"), d, gw[k].dim())?;
                check_dim(&format!("{name}[{k}] xx-Hessian rows"), n, hx[k].rows())?;
                check_dim(&format!("{name}[{k}] xx-Hessian columns"), n, hx[k].cols())?;
                check_dim(&format!("{name}[{k}] xw-Hessian rows"), n, hw[k].rows())?;
                check_dim(&format!("{name}[{k}] xw-Hessian columns"), d, hw[k].cols())?;
            }
            Ok(())
        };
        shapes("phi", &self.grad_x_phi, &self.grad_w_phi, &self.hxx_phi, &self.hxw_phi, l)?;
        shapes("zeta", &self.grad_x_zeta, &self.grad_w_zeta, &self.hxx_zeta, &self.hxw_zeta, r)?;
        for (t, (c, _)) in self.z_rows.iter().enumerate() {
            check_dim(&format!("Z row {t}"), r, c.dim())?;
        }
        check_dim("zbar1", l, self.zbar1.dim())?;
        check_dim("zbar2", r, self.zbar2.dim())?;
        check_dim("vbar", n, self.vbar.dim())?;
        if !self.z_polyhedron().contains(&self.zbar2) {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    pub fn z_polyhedron(&self) -> HalfspaceSystem {
        let mut z = HalfspaceSystem::new(self.r());
        for (c, tau) in &self.z_rows {
            z.add_inequality(c.clone(), tau.clone());
        }
        z
    }

    /// `𝒦(z̄₁)`: maximizing objective indices.
    pub fn active_objectives(&self) -> Vec<usize> {
        let top = self.zbar1.iter().max().expect("at least one objective");
        (0..self.l()).filter(|&i| &self.zbar1[i] == top).collect()
    }

    /// `ℐ(z̄₂)`: tight rows of `Z`.
    pub fn active_rows(&self) -> Vec<usize> {
        self.z_polyhedron().tight_inequalities(&self.zbar2)
    }
}

/// `θ(z₁, z₂) = max_i z₁ᵢ + δ_Z(z₂)` with stacked `Φ = (Ξ; Υ)` and `φ₀ = 0`.
pub fn build_composite(mp: &MinimaxProblemData) -> Result<CompositeProblemData> {
    mp.validate()?;
    let (n, d, l, r) = (mp.n, mp.d, mp.l(), mp.r());
    let m = l + r;
    let pieces = (0..l)
        .map(|i| (RatVector::unit(m, i), Rational::zero()))
        .collect();
    let rows = mp
        .z_rows
        .iter()
        .map(|(c, tau)| (RatVector::zeros(l).concat(c), tau.clone()))
        .collect();
    let theta = CpwlFunction::new(m, pieces, rows)?;
    let gx: Vec<RatVector> = mp.grad_x_phi.iter().chain(&mp.grad_x_zeta).cloned().collect();
    let gw: Vec<RatVector> = mp.grad_w_phi.iter().chain(&mp.grad_w_zeta).cloned().collect();
    let p = CompositeProblemData {
        theta,
        n,
        d,
        grad_x_phi0: RatVector::zeros(n),
        grad_w_phi0: RatVector::zeros(d),
        jx: RatMatrix::from_rows(&gx, n),
        jw: RatMatrix::from_rows(&gw, d),
        hxx_phi: mp.hxx_phi.iter().chain(&mp.hxx_zeta).cloned().collect(),
        hxw_phi: mp.hxw_phi.iter().chain(&mp.hxw_zeta).cloned().collect(),
        hxx_phi0: RatMatrix::zeros(n, n),
        hxw_phi0: RatMatrix::zeros(n, d),
        zbar: mp.zbar1.concat(&mp.zbar2),
        vbar: mp.vbar.clone(),
    };
    p.validate()?;
    let act = p.theta.active_sets(&p.zbar)?;
    if act.pieces != mp.active_objectives() || act.rows != mp.active_rows() {
        return Err(Error::Internal("assembled active sets differ from the minimax ones".into()));
    }
    Ok(p)
}

/// `𝒟 = span{e_i − e_j : i, j ∈ 𝒦} × span{c_t : t ∈ ℐ}`.
fn d_span(mp: &MinimaxProblemData) -> Vec<RatVector> {
    let (l, r) = (mp.l(), mp.r());
    let k = mp.active_objectives();
    let mut gens: Vec<RatVector> = k[1..]
        .iter()
        .map(|&i| RatVector::unit(l, i).sub(&RatVector::unit(l, k[0])).concat(&RatVector::zeros(r)))
        .collect();
    gens.extend(
        mp.active_rows()
            .into_iter()
            .map(|t| RatVector::zeros(l).concat(&mp.z_rows[t].0)),
    );
    span_basis(&gens, l + r)
}

/// `𝒟 ∩ ker(∇ₓΞ*, ∇ₓΥ*) = {0}`, asserted equal to the composite SOQC.
pub fn minimax_nd_check(mp: &MinimaxProblemData) -> Result<bool> {
    mp.validate()?;
    let gx: Vec<RatVector> = mp.grad_x_phi.iter().chain(&mp.grad_x_zeta).cloned().collect();
    let jx = RatMatrix::from_rows(&gx, mp.n);
    let ker = kernel_basis(&jx.transpose());
    let nd = span_intersection(&d_span(mp), &ker, mp.l() + mp.r()).is_empty();
    if nd != soqc_check(&build_composite(mp)?)? {
        return Err(Error::Internal("minimax ND disagrees with the composite SOQC".into()));
    }
    Ok(nd)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimaxKkt {
    pub lambda: RatVector,
    /// `Σ η_t c_t ∈ N(z̄₂; Z)`, one entry per `ζ_s`.
    pub mu: RatVector,
    /// Row multipliers `η_t ≥ 0` over the rows of `Z` (zero off `ℐ`).
    pub eta: RatVector,
    /// Whether `ϖ = (λ, μ)` is unique.
    pub unique: bool,
}

impl MinimaxKkt {
    pub fn varpi(&self) -> RatVector {
        self.lambda.concat(&self.mu)
    }
}

/// Solves `v̄ = Σ λ_i ∇ₓφ_i + Σ μ_s ∇ₓζ_s` with `λ ∈ conv{e_i : i ∈ 𝒦}` and
/// `μ = Σ η_t c_t`, `η ≥ 0` over `ℐ`.
pub fn minimax_kkt(mp: &MinimaxProblemData) -> Result<MinimaxKkt> {
    mp.validate()?;
    let (n, l, r) = (mp.n, mp.l(), mp.r());
    let k = mp.active_objectives();
    let rows = mp.active_rows();
    let nv = l + r + rows.len();
    let mut sys = HalfspaceSystem::new(nv);
    for i in 0..l {
        let e = RatVector::unit(nv, i);
        if k.contains(&i) {
            sys.add_inequality(e.neg(), Rational::zero());
        } else {
            sys.add_equality(e, Rational::zero());
        }
    }
    let mut sum = vec![Rational::zero(); nv];
    sum[..l].iter_mut().for_each(|x| *x = Rational::one());
    sys.add_equality(RatVector::new(sum), Rational::one());
    for s in 0..r {
        let mut row = RatVector::unit(nv, l + s).into_inner();
        for (j, &t) in rows.iter().enumerate() {
            row[l + r + j] = -mp.z_rows[t].0[s].clone();
        }
        sys.add_equality(RatVector::new(row), Rational::zero());
    }
    for j in 0..rows.len() {
        sys.add_inequality(RatVector::unit(nv, l + r + j).neg(), Rational::zero());
    }
    for c in 0..n {
        let mut row = vec![Rational::zero(); nv];
        for i in 0..l {
            row[i] = mp.grad_x_phi[i][c].clone();
        }
        for s in 0..r {
            row[l + s] = mp.grad_x_zeta[s][c].clone();
        }
        sys.add_equality(RatVector::new(row), mp.vbar[c].clone());
    }
    let x = sys.feasible_point(&[]).ok_or(Error::NotStationary)?;
    let (_, unique) = coordinate_ranges(&sys, l + r);
    let mut eta = vec![Rational::zero(); mp.z_rows.len()];
    for (j, &t) in rows.iter().enumerate() {
        eta[t] = x[l + r + j].clone();
    }
    let kkt = MinimaxKkt {
        lambda: x.slice(0, l),
        mu: x.slice(l, l + r),
        eta: RatVector::new(eta),
        unique,
    };
    let composite = kkt_multipliers(&build_composite(mp)?)?;
    if composite.unique != kkt.unique || (kkt.unique && composite.lambda != kkt.varpi()) {
        return Err(Error::Internal("minimax multipliers disagree with the composite ones".into()));
    }
    Ok(kkt)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimaxReport {
    pub nd: bool,
    pub kkt: MinimaxKkt,
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
    pub subspace: Vec<RatVector>,
    /// `Σ λ_i ∇²ₓₓφ_i + Σ μ_s ∇²ₓₓζ_s`.
    pub hessian: RatMatrix,
    pub ssosc: SsoscResult,
    pub fully_stable: Option<bool>,
    pub composite: StabilityReport,
}

pub fn minimax_verdict(mp: &MinimaxProblemData) -> Result<MinimaxReport> {
    let p = build_composite(mp)?;
    let composite = full_stability_verdict(&p)?;
    let nd = minimax_nd_check(mp)?;
    let kkt = minimax_kkt(mp)?;
    let varpi = kkt.varpi();
    let dec = p.theta.decompose_subgradient(&p.zbar, &varpi)?;
    let dom = domain_subspace(&p.theta, &p.zbar, &dec)?;
    let (gamma1, gamma2) = (dom.gamma1, dom.gamma2);

    let n = mp.n;
    let mut rows: Vec<RatVector> = gamma1[1..]
        .iter()
        .map(|&i| mp.grad_x_phi[i].sub(&mp.grad_x_phi[gamma1[0]]))
        .collect();
    let upsilon = RatMatrix::from_rows(&mp.grad_x_zeta, n);
    rows.extend(
        gamma2
            .iter()
            .map(|&t| upsilon.transpose().mul_vec(&mp.z_rows[t].0)),
    );
    let subspace = if rows.is_empty() {
        (0..n).map(|k| RatVector::unit(n, k)).collect()
    } else {
        kernel_basis(&RatMatrix::from_rows(&rows, n))
    };

    let hessian = mp
        .hxx_phi
        .iter()
        .zip(kkt.lambda.iter())
        .chain(mp.hxx_zeta.iter().zip(kkt.mu.iter()))
        .fold(RatMatrix::zeros(n, n), |acc, (h, c)| acc.add(&h.scale(c)));
    if hessian != p.lagrangian_hxx(&varpi) {
        return Err(Error::Internal("minimax Lagrangian Hessian differs from the composite one".into()));
    }
    let ssosc = restricted_positive_definite(&hessian, &subspace);
    let fully_stable = (nd && kkt.unique).then_some(ssosc.holds);

    if nd != composite.nd
        || fully_stable != composite.fully_stable
        || !same_span(&subspace, &composite.subspace.basis, n)
    {
        return Err(Error::Internal("minimax verdict differs from the composite verdict".into()));
    }
    Ok(MinimaxReport {
        nd,
        kkt,
        gamma1,
        gamma2,
        subspace,
        hessian,
        ssosc,
        fully_stable,
        composite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratlin::{int, rat};

    fn v(x: &[i64]) -> RatVector {
        RatVector::from_ints(x)
    }

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_ints(rows)
    }

    /// One-dimensional `x`, no `w`; objectives with slopes `g`, Hessians `h`;
    /// at most one constraint map `ζ = x` with `Z = {y ≤ tau}`.
    fn one_d(g: &[i64], h: &[i64], zeta: Option<(i64, i64)>, vbar: i64) -> MinimaxProblemData {
        let l = g.len();
        let (gz, hz, rows, z2) = match zeta {
            Some((tau, hzeta)) => (vec![v(&[1])], vec![m(&[&[hzeta]])], vec![(v(&[1]), int(tau))], v(&[0])),
            None => (vec![], vec![], vec![], v(&[])),
        };
        let r = gz.len();
        MinimaxProblemData {
            n: 1,
            d: 0,
            grad_x_phi: g.iter().map(|&x| v(&[x])).collect(),
            grad_w_phi: vec![v(&[]); l],
            hxx_phi: h.iter().map(|&x| m(&[&[x]])).collect(),
            hxw_phi: vec![RatMatrix::zeros(1, 0); l],
            grad_x_zeta: gz,
            grad_w_zeta: vec![v(&[]); r],
            hxx_zeta: hz,
            hxw_zeta: vec![RatMatrix::zeros(1, 0); r],
            z_rows: rows,
            zbar1: RatVector::zeros(l),
            zbar2: z2,
            vbar: v(&[vbar]),
        }
    }

    #[test]
    fn composite_assembly() {
        let mp = one_d(&[1, -1], &[0, 0], Some((1, 0)), 0);
        let mut mp2 = mp.clone();
        mp2.grad_x_phi.push(v(&[0]));
        mp2.grad_w_phi.push(v(&[]));
        mp2.hxx_phi.push(m(&[&[0]]));
        mp2.hxw_phi.push(RatMatrix::zeros(1, 0));
        mp2.zbar1 = v(&[0, 0, -1]);
        let p = build_composite(&mp2).unwrap();
        assert_eq!(p.theta.dim(), 4);
        assert_eq!(p.theta.slope(0), &v(&[1, 0, 0, 0]));
        assert_eq!(p.theta.row_normal(0), &v(&[0, 0, 0, 1]));
        let p = build_composite(&mp).unwrap();
        assert_eq!(p.theta.slope(1), &v(&[0, 1, 0]));
        assert_eq!(p.theta.row_bound(0), &int(1));
        let act = p.theta.active_sets(&p.zbar).unwrap();
        assert_eq!((act.pieces, act.rows), (vec![0, 1], vec![]));
        let smooth = build_composite(&one_d(&[2], &[0], None, 2)).unwrap();
        assert_eq!(smooth.theta.num_pieces(), 1);
        assert_eq!(smooth.theta.dim(), 1);
    }

    #[test]
    fn nd_examples() {
        assert!(minimax_nd_check(&one_d(&[1, -1], &[0, 0], Some((1, 0)), 0)).unwrap());
        assert!(!minimax_nd_check(&one_d(&[1, 1], &[0, 0], None, 1)).unwrap());
        assert!(minimax_nd_check(&one_d(&[3], &[0], None, 3)).unwrap());
    }

    #[test]
    fn kkt_examples() {
        let k = minimax_kkt(&one_d(&[1, -1], &[0, 0], Some((1, 0)), 0)).unwrap();
        let half = RatVector::new(vec![rat(1, 2), rat(1, 2)]);
        assert_eq!((k.lambda, k.mu.clone(), k.unique), (half, v(&[0]), true));
        let k = minimax_kkt(&one_d(&[1], &[0], Some((1, 0)), 1)).unwrap();
        assert_eq!((k.lambda, k.mu), (v(&[1]), v(&[0])));
        let k = minimax_kkt(&one_d(&[1], &[0], Some((0, 0)), 2)).unwrap();
        assert_eq!((k.lambda, k.mu, k.eta), (v(&[1]), v(&[1]), v(&[1])));
        assert!(matches!(
            minimax_kkt(&one_d(&[1], &[0], Some((1, 0)), 2)),
            Err(Error::NotStationary)
        ));
    }

    #[test]
    fn verdict_examples() {
        let r = minimax_verdict(&one_d(&[1, -1], &[0, 0], Some((1, 0)), 0)).unwrap();
        assert!(r.subspace.is_empty());
        assert_eq!(r.fully_stable, Some(true));
        let r = minimax_verdict(&one_d(&[1, -1], &[-2, -2], Some((1, 0)), 0)).unwrap();
        assert!(r.subspace.is_empty());
        assert_eq!(r.fully_stable, Some(true));
        let r = minimax_verdict(&one_d(&[0], &[-1], None, 0)).unwrap();
        assert_eq!(r.subspace.len(), 1);
        assert_eq!(r.fully_stable, Some(false));
        assert_eq!(r.ssosc.witness, Some(v(&[1])));
    }
}
