//! Qualification conditions, KKT multipliers, the composite second-order
//! sufficient condition and full-stability verdicts for parametric composite
//! problems `min φ₀(x, w) + θ(Φ(x, w)) − ⟨v, x⟩` given by point data.

use num_traits::{One, Signed, Zero};

use crate::cpwl_core::{CpwlFunction, SubgradientDecomposition};
use crate::error::{check_dim, Error, Result};
use crate::ratlin::{
    in_span, kernel_basis, rank_of, same_span, span_basis, span_intersection, GeneratorSet,
    HalfspaceSystem, RatMatrix, RatVector, Rational,
};
use crate::reduction::{build_reduction, ReductionResult};
use crate::second_order::{active_subspace, domain_subspace, second_order_map, DEFAULT_MAX_INDICES};

/// Point data at `(x̄, w̄)`: `Φ(x̄, w̄) = zbar`, Jacobians `jx` (`m × n`) and
/// `jw` (`m × d`), and the Hessian blocks of `φ₀` and of each `φ_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositeProblemData {
    pub theta: CpwlFunction,
    pub n: usize,
    pub d: usize,
    pub grad_x_phi0: RatVector,
    pub grad_w_phi0: RatVector,
    pub jx: RatMatrix,
    pub jw: RatMatrix,
    pub hxx_phi: Vec<RatMatrix>,
    pub hxw_phi: Vec<RatMatrix>,
    pub hxx_phi0: RatMatrix,
    pub hxw_phi0: RatMatrix,
    pub zbar: RatVector,
    /// Tilt parameter in `R^n`.
    pub vbar: RatVector,
}

fn check_shape(context: &str, mat: &RatMatrix, rows: usize, cols: usize) -> Result<()> {
    check_dim(&format!("{context} rows"), rows, mat.rows())?;
    check_dim(&format!("{context} columns"), cols, mat.cols())
}

impl CompositeProblemData {
    /// Problem data with zero Hessians, zero `∇φ₀` and no `w` coordinates.
    pub fn first_order(theta: CpwlFunction, jx: RatMatrix, zbar: RatVector, vbar: RatVector) -> Self {
        let (m, n) = (jx.rows(), jx.cols());
        CompositeProblemData {
            theta,
            n,
            d: 0,
            grad_x_phi0: RatVector::zeros(n),
            grad_w_phi0: RatVector::zeros(0),
            jx,
            jw: RatMatrix::zeros(m, 0),
            hxx_phi: vec![RatMatrix::zeros(n, n); m],
            hxw_phi: vec![RatMatrix::zeros(n, 0); m],
            hxx_phi0: RatMatrix::zeros(n, n),
            hxw_phi0: RatMatrix::zeros(n, 0),
            zbar,
            vbar,
        }
    }

    pub fn m(&self) -> usize {
        self.theta.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, d) = (self.m(), self.n, self.d);
        check_dim("grad_x_phi0", n, self.grad_x_phi0.dim())?;
        check_dim("grad_w_phi0", d, self.grad_w_phi0.dim())?;
        check_shape("jx", &self.jx, m, n)?;
        check_shape("jw", &self.jw, m, d)?;
        check_dim("hxx_phi count", m, self.hxx_phi.len())?;
        check_dim("hxw_phi count", m, self.hxw_phi.len())?;
        for (i, h) in self.hxx_phi.iter().enumerate() {
            check_shape(&format!("hxx_phi[{i}]"), h, n, n)?;
        }
        for (i, h) in self.hxw_phi.iter().enumerate() {
            check_shape(&format!("hxw_phi[{i}]"), h, n, d)?;
        }
        check_shape("hxx_phi0", &self.hxx_phi0, n, n)?;
        check_shape("hxw_phi0", &self.hxw_phi0, n, d)?;
        check_dim("zbar", m, self.zbar.dim())?;
        check_dim("vbar", n, self.vbar.dim())?;
        if !self.theta.in_domain(&self.zbar) {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    /// `Σ λ_i ∇²ₓₓφ_i`.
    pub fn weighted_hxx(&self, lambda: &RatVector) -> RatMatrix {
        self.hxx_phi
            .iter()
            .zip(lambda.iter())
            .fold(RatMatrix::zeros(self.n, self.n), |acc, (h, l)| acc.add(&h.scale(l)))
    }

    /// `Σ λ_i ∇²ₓ_wφ_i`.
    pub fn weighted_hxw(&self, lambda: &RatVector) -> RatMatrix {
        self.hxw_phi
            .iter()
            .zip(lambda.iter())
            .fold(RatMatrix::zeros(self.n, self.d), |acc, (h, l)| acc.add(&h.scale(l)))
    }

    /// `∇²ₓₓL = ∇²ₓₓφ₀ + Σ λ_i ∇²ₓₓφ_i`.
    pub fn lagrangian_hxx(&self, lambda: &RatVector) -> RatMatrix {
        self.hxx_phi0.add(&self.weighted_hxx(lambda))
    }

    /// `q̄ = v̄ − ∇ₓφ₀`, the partial subgradient of `θ ∘ Φ` at `x̄`.
    pub fn qbar(&self) -> RatVector {
        self.vbar.sub(&self.grad_x_phi0)
    }
}

/// `S(z̄) ∩ ker Jxᵀ = {0}`.
pub fn soqc_check(p: &CompositeProblemData) -> Result<bool> {
    p.validate()?;
    let s = active_subspace(&p.theta, &p.zbar)?;
    let ker = kernel_basis(&p.jx.transpose());
    Ok(span_intersection(&s, &ker, p.m()).is_empty())
}

/// `range Jx + ker B = R^m`, cross-checked against [`soqc_check`].
pub fn nd_check(p: &CompositeProblemData, red: &ReductionResult) -> Result<bool> {
    p.validate()?;
    let mut gens = p.jx.col_vectors();
    gens.extend(kernel_basis(&red.b));
    let nd = rank_of(&gens, p.m()) == p.m();
    if nd != soqc_check(p)? {
        return Err(Error::Internal(format!(
            "nondegeneracy ({nd}) disagrees with the second-order qualification condition"
        )));
    }
    Ok(nd)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KktPoint {
    /// A multiplier in `M`; the only one when `unique`.
    pub lambda: RatVector,
    pub unique: bool,
    pub qbar: RatVector,
    /// `Jxᵀλ − q̄`, exactly zero.
    pub residual: RatVector,
    /// Per-coordinate range of `λ` over `M` (`None` = unbounded).
    pub ranges: Vec<(Option<Rational>, Option<Rational>)>,
}

/// `{λ ∈ ∂θ(z̄) : Jxᵀλ = rhs}` lifted to variables `(λ, c, μ)` with
/// `λ = Σ c_i a_i + Σ μ_t d_t`, `c ≥ 0`, `Σ c = 1`, `μ ≥ 0`.
fn multiplier_polyhedron(theta: &CpwlFunction, zbar: &RatVector, jx: &RatMatrix, rhs: &RatVector) -> Result<HalfspaceSystem> {
    let act = theta.active_sets(zbar)?;
    let m = theta.dim();
    let (nk, ni) = (act.pieces.len(), act.rows.len());
    let nv = m + nk + ni;
    let mut sys = HalfspaceSystem::new(nv);
    for c in 0..m {
        let mut row = RatVector::unit(nv, c).into_inner();
        for (k, &i) in act.pieces.iter().enumerate() {
            row[m + k] = -theta.slope(i)[c].clone();
        }
        for (k, &t) in act.rows.iter().enumerate() {
            row[m + nk + k] = -theta.row_normal(t)[c].clone();
        }
        sys.add_equality(RatVector::new(row), Rational::zero());
    }
    let mut sum = vec![Rational::zero(); nv];
    sum[m..m + nk].iter_mut().for_each(|x| *x = Rational::one());
    sys.add_equality(RatVector::new(sum), Rational::one());
    for k in m..nv {
        sys.add_inequality(RatVector::unit(nv, k).neg(), Rational::zero());
    }
    for j in 0..jx.cols() {
        let mut row = vec![Rational::zero(); nv];
        for c in 0..m {
            row[c] = jx.get(c, j).clone();
        }
        sys.add_equality(RatVector::new(row), rhs[j].clone());
    }
    Ok(sys)
}

/// Coordinate-wise range of the first `dims` variables over `sys`, and
/// whether the projection onto them is a single point.
pub(crate) fn coordinate_ranges(
    sys: &HalfspaceSystem,
    dims: usize,
) -> (Vec<(Option<Rational>, Option<Rational>)>, bool) {
    let nv = sys.dim();
    let mut ranges = Vec::with_capacity(dims);
    let mut unique = true;
    for k in 0..dims {
        let e = RatVector::unit(nv, k);
        let lo = sys.minimize(&e).flatten().map(|(v, _)| v);
        let hi = sys.minimize(&e.neg()).flatten().map(|(v, _)| -v);
        unique &= matches!((&lo, &hi), (Some(a), Some(b)) if a == b);
        ranges.push((lo, hi));
    }
    (ranges, unique)
}

/// The multiplier set `M = {λ ∈ ∂θ(z̄) : Jxᵀλ = v̄ − ∇ₓφ₀}`: a member and
/// whether it is a singleton (min = max of every coordinate).
pub fn kkt_multipliers(p: &CompositeProblemData) -> Result<KktPoint> {
    p.validate()?;
    let qbar = p.qbar();
    let sys = multiplier_polyhedron(&p.theta, &p.zbar, &p.jx, &qbar)?;
    let point = sys.feasible_point(&[]).ok_or(Error::NotStationary)?;
    let m = p.m();
    let (ranges, unique) = coordinate_ranges(&sys, m);
    let lambda = point.slice(0, m);
    let residual = p.jx.transpose().mul_vec(&lambda).sub(&qbar);
    if !residual.is_zero() {
        return Err(Error::Internal("multiplier violates stationarity".into()));
    }
    Ok(KktPoint {
        lambda,
        unique,
        qbar,
        residual,
        ranges,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsoscSubspace {
    pub basis: Vec<RatVector>,
    pub gamma1: Vec<usize>,
    pub gamma2: Vec<usize>,
}

/// `{u ∈ R^n : Jx u ∈ span A}` for a spanning list `A` of a subspace of `R^m`.
pub fn pullback(jx: &RatMatrix, span: &[RatVector]) -> Vec<RatVector> {
    let (m, n) = (jx.rows(), jx.cols());
    // Kernel of [Jx | −A] projected to its first n coordinates.
    let neg: Vec<RatVector> = span.iter().map(|g| g.neg()).collect();
    let stacked = jx.hstack(&RatMatrix::from_cols(&neg, m));
    let proj: Vec<RatVector> = kernel_basis(&stacked)
        .iter()
        .map(|k| k.slice(0, n))
        .collect();
    span_basis(&proj, n)
}

/// `𝒮 = {u : ⟨a_i − a_j, Jx u⟩ = 0 on Γ(J1), ⟨d_t, Jx u⟩ = 0 on Γ(J2)}`,
/// checked against the pullback of `dom ∂²θ(z̄, λ̄)` under `Jx`.
pub fn ssosc_subspace(p: &CompositeProblemData, dec: &SubgradientDecomposition) -> Result<SsoscSubspace> {
    p.validate()?;
    let dom = domain_subspace(&p.theta, &p.zbar, dec)?;
    let rows: Vec<RatVector> = dom
        .normals
        .iter()
        .map(|nrm| p.jx.transpose().mul_vec(nrm))
        .collect();
    let basis = if rows.is_empty() {
        (0..p.n).map(|k| RatVector::unit(p.n, k)).collect()
    } else {
        kernel_basis(&RatMatrix::from_rows(&rows, p.n))
    };
    let pulled = pullback(&p.jx, &dom.subspace.span_gens);
    if !same_span(&basis, &pulled, p.n) {
        return Err(Error::Internal("subspace disagrees with the pulled-back domain".into()));
    }
    Ok(SsoscSubspace {
        basis,
        gamma1: dom.gamma1,
        gamma2: dom.gamma2,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SsoscResult {
    pub holds: bool,
    /// `Uᵀ H_sym U`.
    pub restricted: RatMatrix,
    pub leading_minors: Vec<Rational>,
    /// `u ∈ 𝒮 \ {0}` with `⟨u, H u⟩ ≤ 0` when the condition fails.
    pub witness: Option<RatVector>,
}

/// Positive definiteness of the symmetric matrix `h` restricted to `span U`
/// by Sylvester's criterion; on failure a direction `u = U y` with
/// `⟨u, h u⟩ ≤ 0` built from the first nonpositive Schur pivot.
pub fn restricted_positive_definite(h: &RatMatrix, basis: &[RatVector]) -> SsoscResult {
    let n = h.rows();
    let k = basis.len();
    let hs = h.symmetrized();
    let u = RatMatrix::from_cols(basis, n);
    let restricted = if k == 0 {
        RatMatrix::zeros(0, 0)
    } else {
        u.transpose().mul(&hs).mul(&u)
    };
    let mut minors = Vec::with_capacity(k);
    for j in 1..=k {
        let lead = RatMatrix::from_rows(
            &(0..j)
                .map(|r| restricted.row(r).slice(0, j))
                .collect::<Vec<_>>(),
            j,
        );
        let det = lead.determinant();
        let bad = !det.is_positive();
        minors.push(det);
        if bad {
            let y = schur_direction(&restricted, j - 1);
            let w = basis
                .iter()
                .zip(y.iter())
                .fold(RatVector::zeros(n), |acc, (b, c)| acc.axpy(c, b));
            return SsoscResult {
                holds: false,
                restricted,
                leading_minors: minors,
                witness: Some(w),
            };
        }
    }
    SsoscResult {
        holds: true,
        restricted,
        leading_minors: minors,
        witness: None,
    }
}

/// `y = (−M_j⁻¹ m, 1, 0, …)` where `M_j` is the leading `j × j` block (positive
/// definite) and `m` the first `j` entries of column `j`; `yᵀ M y` is the
/// `j`-th pivot.
fn schur_direction(mat: &RatMatrix, j: usize) -> RatVector {
    let k = mat.rows();
    let mut y = vec![Rational::zero(); k];
    y[j] = Rational::one();
    if j > 0 {
        let lead = RatMatrix::from_rows(
            &(0..j).map(|r| mat.row(r).slice(0, j)).collect::<Vec<_>>(),
            j,
        );
        let col: RatVector = (0..j).map(|r| mat.get(r, j).clone()).collect();
        let sol = lead.solve(&col).expect("leading block is positive definite");
        for r in 0..j {
            y[r] = -sol[r].clone();
        }
    }
    RatVector::new(y)
}

/// `⟨u, ∇²ₓₓL(λ̄) u⟩ > 0` for all nonzero `u` in the span of `basis`.
pub fn ssosc_check(p: &CompositeProblemData, lambda: &RatVector, basis: &[RatVector]) -> Result<SsoscResult> {
    p.validate()?;
    check_dim("multiplier", p.m(), lambda.dim())?;
    for b in basis {
        check_dim("subspace vector", p.n, b.dim())?;
    }
    Ok(restricted_positive_definite(&p.lagrangian_hxx(lambda), basis))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub soqc: bool,
    pub nd: bool,
    pub kkt: KktPoint,
    pub decomposition: SubgradientDecomposition,
    pub subspace: SsoscSubspace,
    pub ssosc: SsoscResult,
    /// Present only when nondegeneracy holds.
    pub fully_stable: Option<bool>,
}

pub fn full_stability_verdict(p: &CompositeProblemData) -> Result<StabilityReport> {
    p.validate()?;
    let soqc = soqc_check(p)?;
    let red = build_reduction(&p.theta, &p.zbar)?;
    let nd = nd_check(p, &red)?;
    let kkt = kkt_multipliers(p)?;
    if nd && !kkt.unique {
        return Err(Error::Internal("multiplier set is not a singleton under nondegeneracy".into()));
    }
    let decomposition = p.theta.decompose_subgradient(&p.zbar, &kkt.lambda)?;
    let subspace = ssosc_subspace(p, &decomposition)?;
    let ssosc = ssosc_check(p, &kkt.lambda, &subspace.basis)?;
    let fully_stable = (nd && kkt.unique).then_some(ssosc.holds);
    Ok(StabilityReport {
        soqc,
        nd,
        kkt,
        decomposition,
        subspace,
        ssosc,
        fully_stable,
    })
}

/// One piece of the chain-rule value: `shift + {(Jxᵀq, Jwᵀq) : q ∈ F}` in `R^{n+d}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainRulePiece {
    pub shift: RatVector,
    pub set: GeneratorSet,
}

/// Second-order chain rule for `ψ = θ ∘ Φ` at `(x̄, w̄, q̄)` in direction `u`,
/// using the unique multiplier `λ̄` as the subgradient of `θ`.
pub fn chain_rule_eval(p: &CompositeProblemData, u: &RatVector) -> Result<Vec<ChainRulePiece>> {
    p.validate()?;
    check_dim("direction", p.n, u.dim())?;
    if !soqc_check(p)? {
        return Err(Error::Precondition(
            "second-order qualification condition fails; chain rule not applicable".into(),
        ));
    }
    let kkt = kkt_multipliers(p)?;
    if !kkt.unique {
        return Err(Error::Internal("multiplier set is not a singleton under the qualification condition".into()));
    }
    let lambda = &kkt.lambda;
    let map = second_order_map(&p.theta, &p.zbar, lambda, DEFAULT_MAX_INDICES)?;
    let shift = p
        .weighted_hxx(lambda)
        .mul_vec(u)
        .concat(&p.weighted_hxw(lambda).transpose().mul_vec(u));
    let (jxt, jwt) = (p.jx.transpose(), p.jw.transpose());
    let image = |q: &RatVector| jxt.mul_vec(q).concat(&jwt.mul_vec(q));
    Ok(map
        .eval(&p.jx.mul_vec(u))?
        .iter()
        .map(|f| {
            let mapped = f.map_linear(image, p.n + p.d);
            ChainRulePiece {
                shift: shift.clone(),
                set: GeneratorSet::new(
                    p.n + p.d,
                    vec![shift.clone()],
                    mapped.cone_gens,
                    mapped.span_gens,
                ),
            }
        })
        .collect())
}

/// Whether `⟨u, ∇²ₓₓL u⟩ + ⟨q, Jx u⟩ > 0` for every `q` in every piece of
/// `∂²θ(z̄, λ̄)(Jx u)`; the infimum of the linear term over a piece is
/// `−∞` or `0` since each piece is a cone.
pub fn second_order_growth(p: &CompositeProblemData, lambda: &RatVector, u: &RatVector) -> Result<bool> {
    let map = second_order_map(&p.theta, &p.zbar, lambda, DEFAULT_MAX_INDICES)?;
    let zu = p.jx.mul_vec(u);
    let h = p.lagrangian_hxx(lambda);
    let quad = u.dot(&h.mul_vec(u));
    let pieces = map.eval(&zu)?;
    for f in &pieces {
        let bounded = f.span_gens.iter().all(|s| s.dot(&zu).is_zero())
            && f.cone_gens.iter().all(|c| !c.dot(&zu).is_negative());
        if !bounded || !quad.is_positive() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether `v` lies in the span of the SSOSC subspace.
pub fn in_subspace(sub: &SsoscSubspace, v: &RatVector) -> bool {
    in_span(v, &sub.basis)
}
