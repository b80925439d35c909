mod common;

use common::*;
use cosdyn::adjoint::{precompose_translation, weight_multiply_functional, Multiplier};
use cosdyn::criteria::{Certificate, Witness};
use cosdyn::dynamics::weight_product_iterated;
use cosdyn::witnesses::transition_distance_bound;
use cosdyn::{
    adjoint_cosine, adjoint_s_pow, adjoint_t_pow, apply_cosine, apply_s_pow, apply_t_pow, build_periodic_point,
    build_transitivity_witness, check_necessary_decay_s, check_necessary_decay_t, check_sufficient_chaotic,
    check_sufficient_transitive, norm, pair, scale_restrict, verify_transition, Budget, CompactSet, DualFunctional,
    DynMap, GridFunction, NumericMode, OperatorHandle, ProductSide, Scalar, Site, SpaceNorm, WeightFn,
};
use rand::Rng;

fn half_line(low: Scalar, high: Scalar) -> OperatorHandle {
    OperatorHandle::new(DynMap::shift1(1), WeightFn::half_line(0, low, high).unwrap())
}

#[test]
fn witness_image_decomposes_exactly() {
    let mut rng = rng(21);
    for _ in 0..30 {
        let op = random_op(&mut rng, 1);
        let f = random_function(&mut rng, 1, 3, 4);
        let g = random_function(&mut rng, 1, 3, 4);
        let d = window(1, 3);
        let e = CompactSet::from_sites(1, d.iter().copied().filter(|_| rng.gen_bool(0.5))).unwrap();
        let f_set = d.difference(&e);
        let n = rng.gen_range(1..=8u64);
        let bundle = build_transitivity_witness(&op, &f, &g, n, &e, &f_set, &d).unwrap();
        let half = Scalar::ratio(1, 2);
        let fd = scale_restrict(&f, &d);
        let ge = scale_restrict(&g, &e);
        let gf = scale_restrict(&g, &f_set);
        let expected = apply_t_pow(&op, n, &fd)
            .scale(&half)
            .add(&apply_s_pow(&op, n, &fd).scale(&half))
            .add(&ge)
            .add(&gf)
            .add(&apply_t_pow(&op, 2 * n, &ge))
            .add(&apply_s_pow(&op, 2 * n, &gf));
        assert!(apply_cosine(&op, n as i64, &bundle.v).same_as(&expected));
    }
}

#[test]
fn witness_distance_never_exceeds_bound() {
    let mut rng = rng(22);
    for _ in 0..30 {
        let op = half_line(Scalar::ratio(1, rng.gen_range(2..=4)), Scalar::from_int(rng.gen_range(2..=4)));
        let k = CompactSet::interval(-3, 3);
        let d = CompactSet::from_sites(1, k.iter().copied().filter(|_| rng.gen_bool(0.8))).unwrap();
        let e = CompactSet::from_sites(1, d.iter().copied().filter(|x| x.coords()[0] <= 0)).unwrap();
        let f_set = d.difference(&e);
        let f = random_function(&mut rng, 1, 3, 5);
        let g = random_function(&mut rng, 1, 3, 5);
        let n = rng.gen_range(1..=20u64);
        let bundle = build_transitivity_witness(&op, &f, &g, n, &e, &f_set, &d).unwrap();
        for space in [SpaceNorm::l1(), SpaceNorm::l2(), SpaceNorm::linf()] {
            let (near, _) = verify_transition(&space, &op, &bundle, &scale_restrict(&f, &k), &g).unwrap();
            let bound = transition_distance_bound(&space, &op, &bundle, &scale_restrict(&f, &k), &g, &k).unwrap();
            assert!(near.to_f64() <= bound * (1.0 + 1e-12) + 1e-300, "{near} > {bound}");
        }
    }
}

#[test]
fn periodic_point_truncations_agree_within_tail() {
    for (n, big_l) in [(3u64, 6u64), (5, 8), (10, 12)] {
        let op = half_line(Scalar::ratio(1, 2), Scalar::from_int(2));
        let space = SpaceNorm::l2();
        let d = CompactSet::interval(-1, 1);
        let f = d.indicator(NumericMode::Exact);
        let a = build_periodic_point(&space, &op, &f, &d, n, big_l).unwrap();
        let b = build_periodic_point(&space, &op, &f, &d, n, big_l + 5).unwrap();
        let diff = norm(&space, &a.v.sub(&b.v)).unwrap().to_f64();
        assert!(diff <= a.tail_bound().unwrap(), "n = {n}: {diff} > {}", a.tail_bound().unwrap());
    }
}

#[test]
fn periodic_residual_within_edge_bound() {
    let op = half_line(Scalar::ratio(1, 3), Scalar::from_int(3));
    let space = SpaceNorm::l2();
    let d = CompactSet::interval(-2, 2);
    let f = GridFunction::from_entries(1, NumericMode::Exact, [(Site::d1(-1), Scalar::from_int(2)), (Site::d1(2), Scalar::ratio(-1, 3))]).unwrap();
    let bundle = build_periodic_point(&space, &op, &f, &d, 6, 9).unwrap();
    for l in 0..=12 {
        let r = cosdyn::periodicity_residual(&space, &op, &bundle, l).unwrap().to_f64();
        assert!(r <= bundle.edge_bound(l).unwrap() * (1.0 + 1e-9), "l = {l}");
    }
}

#[test]
fn adjoint_duality_random() {
    let mut rng = rng(23);
    for _ in 0..60 {
        let dim = rng.gen_range(1..=2);
        let op = random_op(&mut rng, dim);
        let phi = DualFunctional::new(random_function(&mut rng, dim, 4, 5));
        let f = random_function(&mut rng, dim, 4, 6);
        let n = rng.gen_range(0..=20u64);
        assert_eq!(pair(&adjoint_t_pow(&op, n, &phi), &f), pair(&phi, &apply_t_pow(&op, n, &f)));
        assert_eq!(pair(&adjoint_s_pow(&op, n, &phi), &f), pair(&phi, &apply_s_pow(&op, n, &f)));
        let m = rng.gen_range(-20..=20i64);
        assert_eq!(pair(&adjoint_cosine(&op, m, &phi), &f), pair(&phi, &apply_cosine(&op, m, &f)));
    }
}

#[test]
fn adjoint_dalembert() {
    let mut rng = rng(24);
    for _ in 0..5 {
        let op = random_op(&mut rng, 1);
        let phi = DualFunctional::new(random_function(&mut rng, 1, 3, 4));
        for m in 0..=6i64 {
            for n in 0..=6i64 {
                let lhs = adjoint_cosine(&op, m, &adjoint_cosine(&op, n, &phi)).scale(&Scalar::from_int(2));
                let rhs = adjoint_cosine(&op, m + n, &phi).add(&adjoint_cosine(&op, m - n, &phi));
                assert!(lhs.same_as(&rhs));
            }
        }
    }
}

#[test]
fn multiplier_composition_law() {
    // (φ ∘ U^n)_g = φ_{g∘α^n} ∘ U^n
    let mut rng = rng(25);
    for _ in 0..40 {
        let map = random_shift(&mut rng, 1);
        let g = random_weight(&mut rng, 1);
        let phi = DualFunctional::new(random_function(&mut rng, 1, 4, 5));
        let n = rng.gen_range(-6..=6i64);
        let pulled = (0..n.unsigned_abs()).fold(g.clone(), |w, _| w.pullback(&if n >= 0 { map.clone() } else { map.inverse() }));
        let lhs = weight_multiply_functional(&precompose_translation(&phi, &map, n), Multiplier::Weight(&g));
        let rhs = precompose_translation(&weight_multiply_functional(&phi, Multiplier::Weight(&pulled)), &map, n);
        assert!(lhs.same_as(&rhs));
        // and both agree with the definition φ_g(f) = φ(g f) on a test function
        let f = random_function(&mut rng, 1, 8, 6);
        let gf = f.map_values(|x, v| v * &g.eval(x));
        let shifted = |h: &GridFunction| h.transport(|x| map.pow(-n, x), |_| Scalar::one());
        assert_eq!(pair(&lhs, &f), pair(&phi, &shifted(&gf)));
    }
}

#[test]
fn adjoint_holder_bound() {
    let mut rng = rng(26);
    for _ in 0..60 {
        let op = random_op(&mut rng, 1);
        let phi = DualFunctional::new(random_function(&mut rng, 1, 4, 5));
        let f = random_function(&mut rng, 1, 4, 6);
        let n = rng.gen_range(0..=12u64);
        let sup = op.weight.sup_bound().to_f64().powi(n as i32);
        for (p, q) in [(1.0, f64::INFINITY), (2.0, 2.0), (f64::INFINITY, 1.0), (3.0, 1.5)] {
            let lhs = pair(&adjoint_t_pow(&op, n, &phi), &f).to_f64().abs();
            let phi_norm = norm(&SpaceNorm::lp(q).unwrap(), &phi.repr).unwrap().to_f64();
            let f_norm = norm(&SpaceNorm::lp(p).unwrap(), &f).unwrap().to_f64();
            assert!(lhs <= sup * phi_norm * f_norm * (1.0 + 1e-12));
        }
    }
}

#[test]
fn constant_weight_certificates_match_direct_evaluation() {
    let mut rng = rng(27);
    for _ in 0..30 {
        let c = Scalar::ratio(rng.gen_range(7..=20), rng.gen_range(1..=6));
        let c = if c > Scalar::one() { c } else { Scalar::from_int(2) };
        let op = OperatorHandle::new(DynMap::shift1(1), WeightFn::constant(c.clone()).unwrap());
        let k = CompactSet::interval(rng.gen_range(-3..=0), rng.gen_range(0..=3));
        for space in [SpaceNorm::l1(), SpaceNorm::linf()] {
            let r = check_necessary_decay_s(&space, &op, &k, &Budget::default()).unwrap();
            let Some(Certificate::Growth { terms, .. }) = r.certificate else { panic!("growth certificate expected") };
            for t in terms {
                let direct = k.indicator(NumericMode::Exact).map_values(|x, v| v * &weight_product_iterated(&op, t.n, ProductSide::Backward, x));
                assert_eq!(t.value, norm(&space, &direct).unwrap());
            }
        }
    }
}

#[test]
fn decay_witness_products_match_iteration() {
    let op = half_line(Scalar::ratio(1, 3), Scalar::ratio(5, 2));
    let k = CompactSet::interval(-1, 2);
    for (report, side) in [
        (check_necessary_decay_s(&SpaceNorm::l2(), &op, &k, &Budget::default()).unwrap(), ProductSide::Backward),
        (check_necessary_decay_t(&SpaceNorm::l2(), &op, &k, &Budget::default()).unwrap(), ProductSide::Forward),
    ] {
        assert!(report.is_satisfied());
        let Some(Witness::Decay(data)) = report.witness else { panic!() };
        for term in &data.terms {
            for (x, v) in &term.per_site {
                let p = weight_product_iterated(&op, term.n, side, x);
                let expected = if side == ProductSide::Backward { p } else { p.recip() };
                assert_eq!(*v, expected);
            }
        }
    }
}

#[test]
fn chaotic_implies_transitive() {
    let mut rng = rng(28);
    for _ in 0..8 {
        let op = half_line(Scalar::ratio(1, rng.gen_range(2..=5)), Scalar::from_int(rng.gen_range(2..=5)));
        let k = CompactSet::interval(rng.gen_range(-3..=0), rng.gen_range(0..=3));
        let budget = Budget { max_n: 80, ..Budget::default() };
        let chaotic = check_sufficient_chaotic(&SpaceNorm::l2(), &op, &k, &budget).unwrap();
        if chaotic.is_satisfied() {
            assert!(check_sufficient_transitive(&SpaceNorm::l2(), &op, &k, &budget).unwrap().is_satisfied());
        }
    }
}
