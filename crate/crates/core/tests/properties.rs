use proptest::prelude::*;

use g2nilflow::exterior::{dim_lambda, hodge_star, pullback, wedge, FrameVector, KForm};
use g2nilflow::flow::{reduced_flow_with, FlowOptions, ReducedState};
use g2nilflow::g2::metric_from_g2;
use g2nilflow::liealg::catalog::{lookup, phi_std, primary_entries};
use g2nilflow::liealg::ce_differential;
use g2nilflow::linalg::Matrix7;
use g2nilflow::obstruction::{constraint_residual, obs1_check, su3_residual, ClosedFamily};
use g2nilflow::Metric;

fn kform(degree: usize) -> impl Strategy<Value = KForm> {
    prop::collection::vec(-2.0..2.0f64, dim_lambda(degree))
        .prop_map(move |v| KForm::from_dense(degree, &v).unwrap())
}

/// Matrices within 0.3 of the identity entrywise, hence invertible.
fn near_identity() -> impl Strategy<Value = Matrix7> {
    prop::collection::vec(-0.3 / 7.0..0.3 / 7.0f64, 49)
        .prop_map(|v| Matrix7::identity() + Matrix7::from_row_slice(&v))
}

fn frame_vector() -> impl Strategy<Value = FrameVector> {
    prop::array::uniform7(-1.0..1.0f64)
        .prop_filter("nonzero", |x| x.iter().any(|c| c.abs() > 0.1))
        .prop_map(FrameVector)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wedge_is_graded_commutative(a in kform(2), b in kform(3)) {
        let ab = wedge(&a, &b);
        let ba = wedge(&b, &a);
        prop_assert!(ab.approx_eq(&ba, 1e-12));
        let aa = wedge(&b, &b);
        prop_assert!(aa.is_zero(1e-12));
    }

    #[test]
    fn wedge_is_associative(a in kform(1), b in kform(2), c in kform(2)) {
        let l = wedge(&wedge(&a, &b), &c);
        let r = wedge(&a, &wedge(&b, &c));
        prop_assert!(l.approx_eq(&r, 1e-11));
    }

    #[test]
    fn hodge_star_is_an_involution(a in kform(3)) {
        let id = Metric::identity();
        prop_assert!(hodge_star(&hodge_star(&a, &id), &id).approx_eq(&a, 1e-12));
    }

    #[test]
    fn pullback_respects_wedge(a in kform(2), b in kform(3), p in near_identity()) {
        let l = pullback(&wedge(&a, &b), &p);
        let r = wedge(&pullback(&a, &p), &pullback(&b, &p));
        prop_assert!(l.approx_eq(&r, 1e-10));
    }

    #[test]
    fn d_squared_vanishes(a in kform(2), k in 0usize..12) {
        let e = primary_entries().nth(k).unwrap();
        let dda = ce_differential(&ce_differential(&a, &e.algebra), &e.algebra);
        prop_assert!(dda.is_zero(1e-10));
    }

    #[test]
    fn induced_metric_scales_with_weight_two_thirds(p in near_identity(), s in 0.2..5.0f64) {
        let phi = pullback(&phi_std(), &p);
        let g = metric_from_g2(&phi).unwrap();
        let gs = metric_from_g2(&phi.scaled(s)).unwrap();
        let want = g.matrix() * s.powf(2.0 / 3.0);
        prop_assert!((gs.matrix() - want).amax() < 1e-10 * want.amax());
    }

    #[test]
    fn su3_residual_vanishes_for_every_g2_form(p in near_identity(), x in frame_vector()) {
        let phi = pullback(&phi_std(), &p);
        let g = metric_from_g2(&phi).unwrap();
        let unit = x.scaled(1.0 / g.inner(&x.0, &x.0).sqrt());
        let r = su3_residual(&phi, &unit, &g).unwrap();
        prop_assert!(r.max_abs() < 1e-10, "{}", r.max_abs());
    }

    #[test]
    fn obs1_ignores_the_length_of_x(x in frame_vector(), s in 0.01..100.0f64, k in 0usize..4) {
        let key = ["n2", "n3", "n5-nilsoliton", "n11-orthonormal"][k];
        let alg = &lookup(key).unwrap().algebra;
        prop_assert_eq!(obs1_check(alg, &x).unwrap(), obs1_check(alg, &x.scaled(s)).unwrap());
    }

    #[test]
    fn constraint_residual_is_nonnegative(c in prop::collection::vec(-2.0..2.0f64, 27)) {
        let fam = ClosedFamily::new(&lookup("n3").unwrap().algebra);
        prop_assert_eq!(fam.dim(), c.len());
        prop_assert!(constraint_residual(&fam, &c, &Metric::identity()) >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduced_flow_conserves_its_first_integral(u in 0.3..1.2f64, v in 0.3..2.0f64, t in 0.5..20.0f64) {
        let s0 = ReducedState { u, v };
        prop_assume!(s0.in_domain());
        let tr = reduced_flow_with(s0, &FlowOptions::at_times(&[t])).unwrap();
        prop_assume!(tr.blowup.is_none());
        let s = tr.at(t).unwrap();
        let i0 = s0.first_integral();
        prop_assert!((s.first_integral() - i0).abs() < 1e-8 * i0.abs(), "{} vs {i0}", s.first_integral());
    }
}
