//! Worked values computed by hand or by the independent oracles, frozen
//! against the public API.

mod common;

use common::{abs, lower, plus, theta, v};
use cpwl::cpwl_core::{CpwlFunction, Value};
use cpwl::minimax::{build_composite, minimax_kkt, minimax_nd_check, minimax_verdict, MinimaxProblemData};
use cpwl::oracle::{
    full_stability_probe, graph_pieces, limiting_normal_cone, second_subdiff, same_union,
    ProbeEvidence, Quadratic, QuadraticProblemInstance,
};
use cpwl::ratlin::{
    generator_membership, int, kernel_basis, orthogonal_complement, rat, same_span, GeneratorSet,
    HalfspaceSystem, RatMatrix, RatVector,
};
use cpwl::reduction::{affine_hull, build_reduction, verify_reduction};
use cpwl::second_order::{
    domain_subspace, quadruple_family, second_order_map, value_at_zero, DEFAULT_MAX_INDICES,
};
use cpwl::stability::{
    chain_rule_eval, full_stability_verdict, kkt_multipliers, nd_check, soqc_check,
    ssosc_subspace, CompositeProblemData,
};

fn interval(lo: Option<i64>, hi: Option<i64>) -> HalfspaceSystem {
    let mut s = HalfspaceSystem::new(1);
    if let Some(h) = hi {
        s.add_inequality(v(&[1]), int(h));
    }
    if let Some(l) = lo {
        s.add_inequality(v(&[-1]), int(-l));
    }
    s
}

fn abs_first() -> CpwlFunction {
    theta(2, &[(&[1, 0], 0), (&[-1, 0], 0)], &[])
}

fn max2() -> CpwlFunction {
    theta(2, &[(&[1, 0], 0), (&[0, 1], 0)], &[])
}

fn one_d(theta: CpwlFunction, jx: i64, vbar: i64) -> CompositeProblemData {
    CompositeProblemData::first_order(theta, RatMatrix::from_ints(&[&[jx]]), v(&[0]), v(&[vbar]))
}

/// `φ₀ = ½ h x²`, `Φ = x + w` at the origin.
fn with_w(theta: CpwlFunction, h: i64) -> CompositeProblemData {
    let mut p = one_d(theta, 1, 0);
    p.d = 1;
    p.grad_w_phi0 = v(&[0]);
    p.jw = RatMatrix::from_ints(&[&[1]]);
    p.hxw_phi = vec![RatMatrix::zeros(1, 1)];
    p.hxw_phi0 = RatMatrix::zeros(1, 1);
    p.hxx_phi0 = RatMatrix::from_ints(&[&[h]]);
    p
}

#[test]
fn linear_algebra() {
    let k = kernel_basis(&RatMatrix::from_ints(&[&[1, -1, 1]]));
    assert_eq!(k.len(), 2);
    assert!(k.iter().all(|x| &x[0] - &x[1] + &x[2] == int(0)));

    let tri = HalfspaceSystem::new(2)
        .with_inequality(v(&[1, 1]), int(1))
        .with_inequality(v(&[-1, 0]), int(0))
        .with_inequality(v(&[0, -1]), int(0));
    let p = tri.feasible_point(&[0, 1, 2]).unwrap();
    assert!(p[0] > int(0) && p[1] > int(0) && &p[0] + &p[1] < int(1));

    let mult = generator_membership(&v(&[1, 1]), &[v(&[1, 0])], &[v(&[0, 1])], &[]).unwrap();
    assert_eq!((mult.conv, mult.cone), (vec![int(1)], vec![int(1)]));

    let perp = orthogonal_complement(&[v(&[1, -1, 0]), v(&[0, 0, 1])], 3);
    assert!(same_span(&perp, &[v(&[1, 1, 0])], 3));
}

#[test]
fn first_order() {
    let d = abs().decompose_subgradient(&v(&[0]), &v(&[0])).unwrap();
    assert_eq!(d.lambda, vec![(0, rat(1, 2)), (1, rat(1, 2))]);
    assert!(d.mu.is_empty());
    assert_eq!(d.j1, vec![0, 1]);

    let d = lower().decompose_subgradient(&v(&[0]), &v(&[2])).unwrap();
    assert_eq!((d.lambda, d.mu), (vec![(0, int(1))], vec![(0, int(2))]));
    assert_eq!((d.j1, d.j2), (vec![0], vec![0]));

    let square = [v(&[0, 0]), v(&[1, 0]), v(&[0, 1]), v(&[1, 1])];
    let f = CpwlFunction::from_support_vertices(&square).unwrap();
    let g = theta(2, &[(&[0, 0], 0), (&[1, 0], 0), (&[0, 1], 0), (&[1, 1], 0)], &[]);
    for z in [v(&[-2, 3]), v(&[1, -1]), v(&[2, 2]), v(&[-1, -1])] {
        assert_eq!(f.evaluate(&z).unwrap(), g.evaluate(&z).unwrap());
    }
}

#[test]
fn second_order_quadruples_and_values() {
    let th = abs();
    let q0 = quadruple_family(&th, &v(&[0]), &v(&[0]), DEFAULT_MAX_INDICES).unwrap();
    assert_eq!(q0.len(), 1);
    assert_eq!((q0[0].p1.clone(), q0[0].q1.clone()), (vec![0, 1], vec![0, 1]));
    assert_eq!(quadruple_family(&th, &v(&[0]), &v(&[1]), DEFAULT_MAX_INDICES).unwrap().len(), 3);

    let map = second_order_map(&th, &v(&[0]), &v(&[1]), DEFAULT_MAX_INDICES).unwrap();
    let piece = map
        .pieces
        .iter()
        .find(|p| p.quadruple.p1 == vec![0] && p.quadruple.q1 == vec![0, 1])
        .unwrap();
    assert!(piece.f.set_eq(&GeneratorSet::new(1, vec![], vec![v(&[-2])], vec![])));
    assert!(piece.g.is_subset_of(&interval(Some(0), None)) && interval(Some(0), None).is_subset_of(&piece.g));
    let full = map.pieces.iter().find(|p| p.quadruple.p1 == vec![0, 1]).unwrap();
    assert!(full.f.set_eq(&GeneratorSet::subspace(1, vec![v(&[1])])));
    assert!(full.g.is_subset_of(&interval(Some(0), Some(0))));

    let at = |u: i64| map.eval(&v(&[u])).unwrap();
    assert!(same_union(&at(1), &[interval(Some(0), Some(0))]));
    assert!(same_union(&at(-1), &[interval(None, Some(0))]));
    let at_zero_sub = second_order_map(&th, &v(&[0]), &v(&[0]), DEFAULT_MAX_INDICES).unwrap();
    assert!(at_zero_sub.eval(&v(&[1])).unwrap().is_empty());

    let vz = value_at_zero(&abs_first(), &v(&[0, 0]), &v(&[0, 0])).unwrap();
    assert!(vz.is_subspace() && same_span(&vz.span_gens, &[v(&[1, 0])], 2));

    let dec = th.decompose_subgradient(&v(&[0]), &v(&[1])).unwrap();
    let dom = domain_subspace(&th, &v(&[0]), &dec).unwrap();
    assert_eq!(dom.gamma1, vec![0]);
    assert_eq!(dom.subspace.span_gens.len(), 1);
    let dec = th.decompose_subgradient(&v(&[0]), &v(&[0])).unwrap();
    let dom = domain_subspace(&th, &v(&[0]), &dec).unwrap();
    assert_eq!(dom.gamma1, vec![0, 1]);
    assert!(dom.subspace.span_gens.is_empty());
}

#[test]
fn reduction() {
    let th = abs_first();
    let (s, b) = affine_hull(&th, &v(&[0, 0])).unwrap();
    assert!(same_span(&s.span_gens, &[v(&[1, 0])], 2));
    assert_eq!(b, v(&[1, 0]));
    let red = build_reduction(&th, &v(&[0, 0])).unwrap();
    assert_eq!((red.s, red.b.clone()), (1, RatMatrix::from_ints(&[&[1, 0]])));
    // With the shift b = (1, 0) the reduced function is |x| − x.
    for (x, fx) in [(-3, 6), (0, 0), (2, 0)] {
        assert_eq!(red.reduced.evaluate(&v(&[x])).unwrap(), Value::Finite(int(fx)));
    }
    assert!(verify_reduction(&th, &red, 100).unwrap());
}

#[test]
fn qualification_and_multipliers() {
    let p = CompositeProblemData::first_order(max2(), RatMatrix::from_ints(&[&[1], &[-1]]), v(&[0, 0]), v(&[0]));
    assert!(soqc_check(&p).unwrap());
    let p = CompositeProblemData::first_order(abs_first(), RatMatrix::from_ints(&[&[1], &[0]]), v(&[0, 0]), v(&[0]));
    assert!(nd_check(&p, &build_reduction(&p.theta, &p.zbar).unwrap()).unwrap());

    let k = kkt_multipliers(&one_d(abs(), 1, 0)).unwrap();
    assert!(k.unique && k.lambda == v(&[0]));
    let k = kkt_multipliers(&one_d(plus(), 1, 0)).unwrap();
    assert!(k.unique && k.lambda == v(&[0]));
    let p = one_d(abs(), 0, 0);
    let k = kkt_multipliers(&p).unwrap();
    assert!(!k.unique);
    assert_eq!(k.ranges, vec![(Some(int(-1)), Some(int(1)))]);
    assert!(!soqc_check(&p).unwrap());

    let p = one_d(abs(), 1, 0);
    let dec = p.theta.decompose_subgradient(&p.zbar, &v(&[0])).unwrap();
    assert!(ssosc_subspace(&p, &dec).unwrap().basis.is_empty());
    let p = one_d(plus(), 1, 0);
    let dec = p.theta.decompose_subgradient(&p.zbar, &v(&[0])).unwrap();
    assert_eq!(ssosc_subspace(&p, &dec).unwrap().basis.len(), 1);
}

#[test]
fn stability_verdicts() {
    let r = full_stability_verdict(&one_d(abs(), 1, 0)).unwrap();
    assert!(r.nd && r.kkt.unique && r.subspace.basis.is_empty() && r.ssosc.holds);
    assert_eq!(r.fully_stable, Some(true));

    let r = full_stability_verdict(&with_w(plus(), -1)).unwrap();
    assert!(r.nd && r.kkt.lambda == v(&[0]) && r.subspace.basis.len() == 1);
    assert_eq!(r.ssosc.restricted, RatMatrix::from_ints(&[&[-1]]));
    assert_eq!(r.fully_stable, Some(false));

    assert_eq!(full_stability_verdict(&with_w(plus(), 2)).unwrap().fully_stable, Some(true));
}

#[test]
fn chain_rule() {
    let mut p = with_w(abs(), 0);
    p.hxx_phi0 = RatMatrix::zeros(1, 1);
    let at_zero = chain_rule_eval(&p, &v(&[0])).unwrap();
    assert_eq!(at_zero.len(), 1);
    let expected = GeneratorSet::new(2, vec![v(&[0, 0])], vec![], vec![v(&[1, 1])]);
    assert!(at_zero[0].set.set_eq(&expected));
    assert!(chain_rule_eval(&p, &v(&[1])).unwrap().is_empty());
}

fn smooth(n: usize, grads: &[i64], hess: &[i64]) -> (Vec<RatVector>, Vec<RatVector>, Vec<RatMatrix>, Vec<RatMatrix>) {
    (
        grads.iter().map(|&g| v(&[g])).collect(),
        grads.iter().map(|_| RatVector::zeros(0)).collect(),
        hess.iter().map(|&h| RatMatrix::from_ints(&[&[h]])).collect(),
        grads.iter().map(|_| RatMatrix::zeros(n, 0)).collect(),
    )
}

fn minimax_1d(objs: &[i64], obj_h: &[i64], cons: &[i64], rows: &[(i64, i64)], zbar2: &[i64], vbar: i64) -> MinimaxProblemData {
    let (gx, gw, hx, hw) = smooth(1, objs, obj_h);
    let zero_h: Vec<i64> = cons.iter().map(|_| 0).collect();
    let (cx, cw, chx, chw) = smooth(1, cons, &zero_h);
    MinimaxProblemData {
        n: 1,
        d: 0,
        grad_x_phi: gx,
        grad_w_phi: gw,
        hxx_phi: hx,
        hxw_phi: hw,
        grad_x_zeta: cx,
        grad_w_zeta: cw,
        hxx_zeta: chx,
        hxw_zeta: chw,
        z_rows: rows.iter().map(|&(c, t)| (v(&[c]), int(t))).collect(),
        zbar1: RatVector::zeros(objs.len()),
        zbar2: v(zbar2),
        vbar: v(&[vbar]),
    }
}

#[test]
fn minimax() {
    let mp = minimax_1d(&[1, -1], &[0, 0], &[1], &[(1, 1)], &[0], 0);
    let p = build_composite(&mp).unwrap();
    let act = p.theta.active_sets(&p.zbar).unwrap();
    assert_eq!((act.pieces, act.rows), (vec![0, 1], vec![]));
    assert!(minimax_nd_check(&mp).unwrap());
    let k = minimax_kkt(&mp).unwrap();
    assert!(k.unique && k.lambda == RatVector::new(vec![rat(1, 2), rat(1, 2)]) && k.mu == v(&[0]));
    let r = minimax_verdict(&mp).unwrap();
    assert!(r.subspace.is_empty());
    assert_eq!(r.fully_stable, Some(true));

    let dup = minimax_1d(&[1, 1], &[0, 0], &[1], &[(1, 1)], &[0], 1);
    assert!(!minimax_nd_check(&dup).unwrap());

    let active = minimax_1d(&[1], &[0], &[1], &[(1, 0)], &[0], 2);
    let k = minimax_kkt(&active).unwrap();
    assert_eq!((k.lambda, k.mu), (v(&[1]), v(&[1])));

    let curved = minimax_1d(&[1, -1], &[-2, -2], &[], &[], &[], 0);
    assert_eq!(minimax_verdict(&curved).unwrap().fully_stable, Some(true));
    let concave = minimax_1d(&[0], &[-1], &[], &[], &[], 0);
    let r = minimax_verdict(&concave).unwrap();
    assert_eq!(r.subspace.len(), 1);
    assert_eq!(r.fully_stable, Some(false));
}

#[test]
fn graph_oracle() {
    let pieces = graph_pieces(&abs(), 12).unwrap();
    assert_eq!(pieces.len(), 3);
    let find = |q1: Vec<usize>| pieces.iter().find(|p| p.q1 == q1).unwrap();
    assert!(find(vec![0]).joint.contains(&v(&[2, 1])) && !find(vec![0]).joint.contains(&v(&[-1, 1])));
    assert!(find(vec![1]).joint.contains(&v(&[-2, -1])));
    let kink = find(vec![0, 1]);
    assert!(kink.joint.contains(&v(&[0, 0])) && !kink.joint.contains(&v(&[0, 2])));

    let lin = theta(1, &[(&[3], 1)], &[]);
    assert_eq!(graph_pieces(&lin, 12).unwrap().len(), 1);
    let low = graph_pieces(&lower(), 12).unwrap();
    assert_eq!(low.len(), 2);
    assert!(low.iter().any(|p| p.q2 == vec![0] && p.joint.contains(&v(&[0, 5]))));

    let n = limiting_normal_cone(&abs(), &v(&[0]), &v(&[1])).unwrap();
    assert!(same_union(&[GeneratorSet::origin(1)], &n.slice(&v(&[1])).unwrap()));
    assert!(same_union(&[GeneratorSet::new(1, vec![], vec![v(&[-1])], vec![])], &n.slice(&v(&[-1])).unwrap()));
    assert!(same_union(&[GeneratorSet::subspace(1, vec![v(&[1])])], &n.slice(&v(&[0])).unwrap()));

    let smooth = limiting_normal_cone(&abs(), &v(&[3]), &v(&[1])).unwrap();
    let expected = GeneratorSet::subspace(2, vec![v(&[0, 1])]).to_halfspaces();
    assert!(cpwl::ratlin::union_eq(&smooth.cones, &[expected]));

    let r_all = second_subdiff(&abs(), &v(&[0]), &v(&[0]), &v(&[0])).unwrap();
    assert!(same_union(&[GeneratorSet::subspace(1, vec![v(&[1])])], &r_all));
    let lin_slice = second_subdiff(&lin, &v(&[0]), &v(&[3]), &v(&[2])).unwrap();
    assert!(same_union(&[GeneratorSet::origin(1)], &lin_slice));
}

fn quad(lin: &[i64], h: &[&[i64]]) -> Quadratic {
    Quadratic {
        constant: int(0),
        linear: v(lin),
        hessian: RatMatrix::from_ints(h),
    }
}

#[test]
fn stability_probe() {
    let abs_inst = QuadraticProblemInstance {
        n: 1,
        d: 0,
        theta: abs(),
        phi0: quad(&[0], &[&[0]]),
        phi: vec![quad(&[1], &[&[0]])],
        xbar: v(&[0]),
        wbar: v(&[]),
        vbar: v(&[0]),
        gamma: Some(rat(1, 2)),
    };
    let r = full_stability_probe(&abs_inst, &rat(1, 2), 9).unwrap();
    assert!(r.single_valued && r.max_ratio == int(0));
    assert_eq!(r.evidence, ProbeEvidence::FullyStable);

    let concave = QuadraticProblemInstance {
        n: 1,
        d: 1,
        theta: plus(),
        phi0: quad(&[0, 0], &[&[-1, 0], &[0, 0]]),
        phi: vec![quad(&[1, 1], &[&[0, 0], &[0, 0]])],
        xbar: v(&[0]),
        wbar: v(&[0]),
        vbar: v(&[0]),
        gamma: None,
    };
    let r = full_stability_probe(&concave, &rat(1, 4), 9).unwrap();
    assert!(!r.base_is_unique_minimizer);
    assert_eq!(r.evidence, ProbeEvidence::NotFullyStable);

    // x ↦ x² − v x has argmin v / 2.
    let strong = QuadraticProblemInstance {
        n: 1,
        d: 0,
        theta: theta(1, &[(&[0], 0)], &[]),
        phi0: quad(&[0], &[&[2]]),
        phi: vec![quad(&[1], &[&[0]])],
        xbar: v(&[0]),
        wbar: v(&[]),
        vbar: v(&[0]),
        gamma: Some(int(1)),
    };
    let r = full_stability_probe(&strong, &rat(1, 4), 9).unwrap();
    assert_eq!(r.max_ratio, rat(1, 2));
    assert_eq!(r.evidence, ProbeEvidence::FullyStable);
}
