//! Full-stability probe for quadratic instances: exact global minimization
//! of `φ₀(x, w) + θ(Φ(x, w)) − ⟨v, x⟩` over the box `‖x − x̄‖∞ ≤ γ` on a grid
//! of parameters `(w, v)`, followed by single-valuedness and Lipschitz
//! checks of the argmin.

use num_traits::{One, Signed, Zero};

use crate::cpwl_core::CpwlFunction;
use crate::error::{check_dim, Error, Result};
use crate::ratlin::{kernel_basis, rank_of, RatMatrix, RatVector, Rational};
use crate::stability::{restricted_positive_definite, CompositeProblemData};

/// `c + ⟨g, y⟩ + ½⟨y, Q y⟩` on `y = (x, w)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quadratic {
    pub constant: Rational,
    pub linear: RatVector,
    pub hessian: RatMatrix,
}

impl Quadratic {
    pub fn eval(&self, y: &RatVector) -> Rational {
        let half = Rational::new(1.into(), 2.into());
        &self.constant + self.linear.dot(y) + half * y.dot(&self.hessian.mul_vec(y))
    }

    pub fn gradient(&self, y: &RatVector) -> RatVector {
        self.linear.add(&self.hessian.symmetrized().mul_vec(y))
    }

    /// Hessian blocks `(xx, xw)` for the split `y = (x, w)` with `x ∈ R^n`.
    fn blocks(&self, n: usize) -> (RatMatrix, RatMatrix) {
        let h = self.hessian.symmetrized();
        let total = h.rows();
        let mut xx = RatMatrix::zeros(n, n);
        let mut xw = RatMatrix::zeros(n, total - n);
        for i in 0..n {
            for j in 0..total {
                if j < n {
                    xx.set(i, j, h.get(i, j).clone());
                } else {
                    xw.set(i, j - n, h.get(i, j).clone());
                }
            }
        }
        (xx, xw)
    }
}

/// Quadratic `φ₀` and `Φ = (φ₁, …, φ_m)` in `(x, w)` with a CPWL `θ`, base
/// point and tilt. `gamma` is the box radius; derived from the data when absent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticProblemInstance {
    pub n: usize,
    pub d: usize,
    pub theta: CpwlFunction,
    pub phi0: Quadratic,
    pub phi: Vec<Quadratic>,
    pub xbar: RatVector,
    pub wbar: RatVector,
    pub vbar: RatVector,
    pub gamma: Option<Rational>,
}

impl QuadraticProblemInstance {
    pub fn m(&self) -> usize {
        self.theta.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, d) = (self.n, self.d);
        if n > 3 || self.m() > 4 {
            return Err(Error::SizeCap {
                found: n.max(self.m()),
                cap: if n > 3 { 3 } else { 4 },
            });
        }
        check_dim("phi count", self.m(), self.phi.len())?;
        for (k, q) in std::iter::once(&self.phi0).chain(&self.phi).enumerate() {
            check_dim(&format!("quadratic {k} linear term"), n + d, q.linear.dim())?;
            check_dim(&format!("quadratic {k} Hessian rows"), n + d, q.hessian.rows())?;
            check_dim(&format!("quadratic {k} Hessian columns"), n + d, q.hessian.cols())?;
        }
        for (k, q) in self.phi.iter().enumerate() {
            if !q.blocks(n).0.is_zero() {
                return Err(Error::InvalidInput(format!(
                    "the probe needs the inner map affine in x; component {} has x-curvature",
                    k + 1
                )));
            }
        }
        check_dim("xbar", n, self.xbar.dim())?;
        check_dim("wbar", d, self.wbar.dim())?;
        check_dim("vbar", n, self.vbar.dim())?;
        if !self.theta.in_domain(&self.zbar()) {
            return Err(Error::OutsideDomain);
        }
        Ok(())
    }

    fn base(&self) -> RatVector {
        self.xbar.concat(&self.wbar)
    }

    pub fn zbar(&self) -> RatVector {
        let y = self.base();
        self.phi.iter().map(|q| q.eval(&y)).collect()
    }

    /// Point data at `(x̄, w̄)`.
    pub fn to_composite(&self) -> Result<CompositeProblemData> {
        self.validate()?;
        let (n, d) = (self.n, self.d);
        let y = self.base();
        let split = |g: RatVector| (g.slice(0, n), g.slice(n, n + d));
        let (g0x, g0w) = split(self.phi0.gradient(&y));
        let (h0xx, h0xw) = self.phi0.blocks(n);
        let grads: Vec<(RatVector, RatVector)> = self.phi.iter().map(|q| split(q.gradient(&y))).collect();
        let jx = RatMatrix::from_rows(&grads.iter().map(|g| g.0.clone()).collect::<Vec<_>>(), n);
        let jw = RatMatrix::from_rows(&grads.iter().map(|g| g.1.clone()).collect::<Vec<_>>(), d);
        let (hxx, hxw): (Vec<_>, Vec<_>) = self.phi.iter().map(|q| q.blocks(n)).unzip();
        let p = CompositeProblemData {
            theta: self.theta.clone(),
            n,
            d,
            grad_x_phi0: g0x,
            grad_w_phi0: g0w,
            jx,
            jw,
            hxx_phi: hxx,
            hxw_phi: hxw,
            hxx_phi0: h0xx,
            hxw_phi0: h0xw,
            zbar: self.zbar(),
            vbar: self.vbar.clone(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Half the smallest sup-norm distance in `x` from `x̄` to a breakpoint of
    /// `x ↦ θ(Φ(x, w̄))`, capped at `1/4`.
    pub fn default_gamma(&self) -> Result<Rational> {
        let p = self.to_composite()?;
        let theta = &self.theta;
        let z = &p.zbar;
        let act = theta.active_sets(z)?;
        let top = theta.piece_value(act.pieces[0], z);
        let jt = p.jx.transpose();
        let mut best = Rational::new(1.into(), 4.into());
        let mut consider = |gap: Rational, normal: RatVector| {
            let rate = jt.mul_vec(&normal).norm_l1();
            if rate.is_positive() {
                let r = gap / (rate * Rational::from_integer(2.into()));
                if r < best {
                    best = r;
                }
            }
        };
        let base = theta.slope(act.pieces[0]);
        for i in 0..theta.num_pieces() {
            if !act.pieces.contains(&i) {
                consider(&top - theta.piece_value(i, z), theta.slope(i).sub(base));
            }
        }
        for t in 0..theta.num_rows() {
            if !act.rows.contains(&t) {
                let d = theta.row_normal(t);
                consider(theta.row_bound(t) - d.dot(z), d.clone());
            }
        }
        Ok(best)
    }
}

/// The box-constrained problem at fixed `(w, v)` as a quadratic program in
/// `y = (x, t)`: minimize `½xᵀHx + ⟨c, x⟩ + t` subject to `rows`.
struct FixedProblem {
    n: usize,
    h: RatMatrix,
    c: RatVector,
    rows: Vec<(RatVector, Rational)>,
}

impl FixedProblem {
    fn new(inst: &QuadraticProblemInstance, gamma: &Rational, w: &RatVector, v: &RatVector) -> Self {
        let n = inst.n;
        let at_w = RatVector::zeros(n).concat(w);
        let (h, h0xw) = inst.phi0.blocks(n);
        let g0 = inst.phi0.linear.slice(0, n);
        let c = g0.add(&h0xw.mul_vec(w)).sub(v);
        // Φ(x, w) = φ_w + J_w x for fixed w.
        let mut phi_w = Vec::new();
        let mut jac = Vec::new();
        for q in &inst.phi {
            let (_, qxw) = q.blocks(n);
            phi_w.push(q.eval(&at_w));
            jac.push(q.linear.slice(0, n).add(&qxw.mul_vec(w)));
        }
        let phi_w = RatVector::new(phi_w);
        let lift = |a: RatVector, t: i64| a.concat(&RatVector::from_ints(&[t]));
        let push_through = |normal: &RatVector| -> RatVector {
            jac.iter()
                .zip(normal.iter())
                .fold(RatVector::zeros(n), |acc, (row, c)| acc.axpy(c, row))
        };
        let mut rows = Vec::new();
        for p in inst.theta.pieces() {
            rows.push((lift(push_through(&p.slope), -1), &p.offset - p.slope.dot(&phi_w)));
        }
        for t in 0..inst.theta.num_rows() {
            let d = inst.theta.row_normal(t);
            rows.push((lift(push_through(d), 0), inst.theta.row_bound(t) - d.dot(&phi_w)));
        }
        for k in 0..n {
            let e = RatVector::unit(n, k);
            rows.push((lift(e.clone(), 0), &inst.xbar[k] + gamma));
            rows.push((lift(e.neg(), 0), gamma - &inst.xbar[k]));
        }
        FixedProblem { n, h, c, rows }
    }

    fn objective(&self, y: &RatVector) -> Rational {
        let x = y.slice(0, self.n);
        let half = Rational::new(1.into(), 2.into());
        half * x.dot(&self.h.mul_vec(&x)) + self.c.dot(&x) + &y[self.n]
    }

    fn feasible(&self, y: &RatVector) -> bool {
        self.rows.iter().all(|(a, b)| &a.dot(y) <= b)
    }

    /// Full Hessian in `(x, t)`.
    fn hessian(&self) -> RatMatrix {
        let k = self.n + 1;
        let mut out = RatMatrix::zeros(k, k);
        let hs = self.h.symmetrized();
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, hs.get(i, j).clone());
            }
        }
        out
    }

    /// Global minimizers, exactly, or `None` when the box misses the
    /// domain: every extreme point of the argmin is the
    /// unique stationary point of the objective on the affine hull of some
    /// face with positive definite reduced Hessian.
    fn minimize(&self) -> Option<(Rational, Vec<RatVector>)> {
        let k = self.n + 1;
        let hf = self.hessian();
        let mut cf = self.c.clone().into_inner();
        cf.push(Rational::one());
        let cf = RatVector::new(cf);
        let mut best: Option<Rational> = None;
        let mut argmin: Vec<RatVector> = Vec::new();
        let mut chosen = Vec::new();
        self.faces(0, &mut chosen, k, &mut |set: &[usize]| {
            let normals: Vec<RatVector> = set.iter().map(|&i| self.rows[i].0.clone()).collect();
            let null = if normals.is_empty() {
                (0..k).map(|j| RatVector::unit(k, j)).collect()
            } else {
                kernel_basis(&RatMatrix::from_rows(&normals, k))
            };
            if !restricted_positive_definite(&hf, &null).holds {
                return;
            }
            // KKT system [H Nᵀ; N 0][y; μ] = [−c; b].
            let size = k + set.len();
            let mut sys = RatMatrix::zeros(size, size);
            let mut rhs = vec![Rational::zero(); size];
            for i in 0..k {
                for j in 0..k {
                    sys.set(i, j, hf.get(i, j).clone());
                }
                rhs[i] = -cf[i].clone();
            }
            for (r, &row) in set.iter().enumerate() {
                for j in 0..k {
                    sys.set(k + r, j, self.rows[row].0[j].clone());
                    sys.set(j, k + r, self.rows[row].0[j].clone());
                }
                rhs[k + r] = self.rows[row].1.clone();
            }
            let Some(sol) = sys.solve(&RatVector::new(rhs)) else { return };
            let y = sol.slice(0, k);
            if !self.feasible(&y) {
                return;
            }
            let val = self.objective(&y);
            let x = y.slice(0, self.n);
            match &best {
                Some(b) if &val > b => {}
                Some(b) if &val == b => {
                    if !argmin.contains(&x) {
                        argmin.push(x);
                    }
                }
                _ => {
                    best = Some(val);
                    argmin = vec![x];
                }
            }
        });
        argmin.sort();
        best.map(|b| (b, argmin))
    }

    /// Calls `visit` on every linearly independent set of at most `cap` rows.
    fn faces(&self, start: usize, chosen: &mut Vec<usize>, cap: usize, visit: &mut dyn FnMut(&[usize])) {
        visit(chosen);
        if chosen.len() == cap {
            return;
        }
        for i in start..self.rows.len() {
            chosen.push(i);
            let normals: Vec<RatVector> = chosen.iter().map(|&j| self.rows[j].0.clone()).collect();
            if rank_of(&normals, cap) == chosen.len() {
                self.faces(i + 1, chosen, cap, visit);
            }
            chosen.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeEvidence {
    FullyStable,
    NotFullyStable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeReport {
    pub gamma: Rational,
    pub grid_radius: Rational,
    pub grid_count: usize,
    pub grid_points: usize,
    /// Argmin at `(w̄, v̄)` is exactly `{x̄}`.
    pub base_is_unique_minimizer: bool,
    pub single_valued: bool,
    /// Parameters `(w, v)` with more than one minimizer.
    pub multi_valued_at: Vec<RatVector>,
    /// Grid parameters where the box does not meet the domain; skipped.
    pub infeasible_at: Vec<RatVector>,
    /// Largest `‖Δx‖∞ / ‖Δ(w, v)‖∞` over all pairs within each grid.
    pub max_ratio: Rational,
    /// Largest ratio after bisecting neighboring grid segments.
    pub refined_max_ratio: Rational,
    pub lipschitz_bounded: bool,
    pub min_value: Rational,
    pub max_value: Rational,
    pub evidence: ProbeEvidence,
}

const BISECTIONS: u32 = 10;

struct Solver<'a> {
    inst: &'a QuadraticProblemInstance,
    gamma: Rational,
}

impl Solver<'_> {
    /// `(value, argmin)` at parameters `p = (w, v)`.
    fn solve(&self, p: &RatVector) -> Option<(Rational, Vec<RatVector>)> {
        let d = self.inst.d;
        let w = p.slice(0, d);
        let v = p.slice(d, p.dim());
        FixedProblem::new(self.inst, &self.gamma, &w, &v).minimize()
    }
}

/// Runs the probe on a `grid_count × grid_count` grid of radius
/// `grid_radius` around `(w̄, v̄)` for every pair of parameter coordinates
/// (a single line when there is only one parameter).
pub fn full_stability_probe(
    inst: &QuadraticProblemInstance,
    grid_radius: &Rational,
    grid_count: usize,
) -> Result<ProbeReport> {
    inst.validate()?;
    if grid_count < 2 {
        return Err(Error::InvalidInput("grid needs at least two points per axis".into()));
    }
    let gamma = match &inst.gamma {
        Some(g) if g.is_positive() => g.clone(),
        Some(_) => return Err(Error::InvalidInput("box radius must be positive".into())),
        None => inst.default_gamma()?,
    };
    let solver = Solver { inst, gamma: gamma.clone() };
    let center = inst.wbar.concat(&inst.vbar);
    let np = center.dim();

    let base_is_unique_minimizer = solver
        .solve(&center)
        .is_some_and(|(_, argmin)| argmin == vec![inst.xbar.clone()]);

    let step = grid_radius * Rational::new(2.into(), ((grid_count - 1) as i64).into());
    let offsets: Vec<Rational> = (0..grid_count)
        .map(|k| -grid_radius.clone() + &step * Rational::from_integer((k as i64).into()))
        .collect();
    let planes: Vec<(usize, Option<usize>)> = if np == 1 {
        vec![(0, None)]
    } else {
        (0..np)
            .flat_map(|i| (i + 1..np).map(move |j| (i, Some(j))))
            .collect()
    };

    let mut grid_points = 0;
    let mut single_valued = true;
    let mut multi_valued_at = Vec::new();
    let mut infeasible_at = Vec::new();
    let mut max_ratio = Rational::zero();
    let mut refined_max_ratio = Rational::zero();
    let mut lipschitz_bounded = true;
    let mut min_value: Option<Rational> = None;
    let mut max_value: Option<Rational> = None;

    for (i, j) in planes {
        let cols = if j.is_some() { grid_count } else { 1 };
        let mut grid: Vec<Vec<Option<(RatVector, RatVector)>>> = Vec::new();
        for a in 0..grid_count {
            let mut row = Vec::new();
            for b in 0..cols {
                let mut p = center.clone();
                p.set(i, &center[i] + &offsets[a]);
                if let Some(j) = j {
                    p.set(j, &center[j] + &offsets[b]);
                }
                grid_points += 1;
                let Some((val, argmin)) = solver.solve(&p) else {
                    infeasible_at.push(p);
                    row.push(None);
                    continue;
                };
                if argmin.len() != 1 {
                    single_valued = false;
                    multi_valued_at.push(p.clone());
                }
                if min_value.as_ref().is_none_or(|m| &val < m) {
                    min_value = Some(val.clone());
                }
                if max_value.as_ref().is_none_or(|m| &val > m) {
                    max_value = Some(val.clone());
                }
                row.push(Some((p, argmin[0].clone())));
            }
            grid.push(row);
        }

        let flat: Vec<&(RatVector, RatVector)> = grid.iter().flatten().flatten().collect();
        for (k, (p, x)) in flat.iter().enumerate() {
            for (q, y) in flat.iter().skip(k + 1) {
                let r = x.sub(y).norm_inf() / p.sub(q).norm_inf();
                if r > max_ratio {
                    max_ratio = r;
                }
            }
        }

        // Bisect every neighboring segment along which the argmin moves: a
        // jump keeps the displacement while the step halves.
        let mut segments = Vec::new();
        for a in 0..grid_count {
            for b in 0..cols {
                let Some(here) = &grid[a][b] else { continue };
                if let Some(Some(next)) = grid.get(a + 1).map(|r| &r[b]) {
                    segments.push((here, next));
                }
                if let Some(Some(next)) = grid[a].get(b + 1) {
                    segments.push((here, next));
                }
            }
        }
        let coarse_bound = Rational::from_integer((1i64 << (BISECTIONS / 2)).into())
            * std::cmp::max(Rational::one(), max_ratio.clone());
        for (start, end) in segments {
            if start.1 == end.1 {
                continue;
            }
            let (mut p, mut x) = start.clone();
            let (mut q, mut y) = end.clone();
            for _ in 0..BISECTIONS {
                let mid = p.add(&q).scale(&Rational::new(1.into(), 2.into()));
                let Some((_, argmin)) = solver.solve(&mid) else { break };
                if argmin.len() != 1 {
                    single_valued = false;
                    multi_valued_at.push(mid.clone());
                }
                let z = argmin[0].clone();
                if x.sub(&z).norm_inf() >= z.sub(&y).norm_inf() {
                    q = mid;
                    y = z;
                } else {
                    p = mid;
                    x = z;
                }
            }
            let r = x.sub(&y).norm_inf() / p.sub(&q).norm_inf();
            if r > refined_max_ratio {
                refined_max_ratio = r.clone();
            }
            if r > coarse_bound {
                lipschitz_bounded = false;
            }
        }
    }

    multi_valued_at.sort();
    multi_valued_at.dedup();
    infeasible_at.sort();
    infeasible_at.dedup();
    let evidence = if base_is_unique_minimizer && single_valued && lipschitz_bounded {
        ProbeEvidence::FullyStable
    } else {
        ProbeEvidence::NotFullyStable
    };
    Ok(ProbeReport {
        gamma,
        grid_radius: grid_radius.clone(),
        grid_count,
        grid_points,
        base_is_unique_minimizer,
        single_valued,
        multi_valued_at,
        infeasible_at,
        max_ratio,
        refined_max_ratio,
        lipschitz_bounded,
        min_value: min_value.unwrap_or_default(),
        max_value: max_value.unwrap_or_default(),
        evidence,
    })
}
