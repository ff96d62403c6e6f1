use g2nilflow::curvature::ricci;
use g2nilflow::flow::{
    bracket_flow, bracket_flow_along, closedness_drift, curvature_decay, full_flow_matches_reduction,
    integrate, integrate_with, reduced_field, reduced_flow_n4, reduced_flow_n6, reduced_from_form,
    ricci_along_flow, soliton_along_flow, t_min_quadrature, EventKind, FlowOptions, FrameAnsatz,
    ReducedModel, ReducedState, DEFAULT_TOL,
};
use g2nilflow::liealg::catalog::{lookup, phi12, phi2, phi4, phi6, phi_std};
use g2nilflow::liealg::LieAlgebra;
use g2nilflow::Metric;

const CHECK_TIMES: [f64; 5] = [0.1, 1.0, 3.0, 10.0, 100.0];

fn alg(key: &str) -> &'static LieAlgebra {
    &lookup(key).unwrap().algebra
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn n2_matches_closed_form() {
    let traj = integrate_with(alg("n2"), &phi2(), &FlowOptions::at_times(&CHECK_TIMES)).unwrap();
    assert!(traj.completed());
    for &t in &CHECK_TIMES {
        let s = traj.at(t).unwrap();
        let want = (10.0 * t / 3.0 + 1.0).powf(0.6);
        assert!(rel(s.coeff(123), want) < 1e-8, "t = {t}: {}", rel(s.coeff(123), want));
        let rest = &s.form() - &phi2();
        assert!(rest.pruned(1e-10).num_terms() <= 1);
    }
    let s = traj.at(3.0).unwrap();
    assert!(rel(s.coeff(123), 11f64.powf(0.6)) < 1e-8);
}

#[test]
fn n12_matches_closed_form() {
    let n12 = alg("n12-orthonormal");
    let traj = integrate_with(n12, &phi12(), &FlowOptions::at_times(&CHECK_TIMES)).unwrap();
    for &t in &CHECK_TIMES {
        let s = traj.at(t).unwrap();
        let want = (t / 3.0 + 1.0).powf(0.75);
        assert!(rel(s.coeff(135), want) < 1e-8, "t = {t}");
        assert!(rel(-s.coeff(236), want) < 1e-8, "t = {t}");
    }
    assert!(rel(traj.at(3.0).unwrap().coeff(135), 2f64.powf(0.75)) < 1e-8);
}

#[test]
fn tighter_tolerance_converges_faster_than_fourth_order() {
    let t: f64 = 10.0;
    let want = (10.0 * t / 3.0 + 1.0).powf(0.6);
    let err = |tol: f64| {
        let opts = FlowOptions::at_times(&[t]).with_tol(tol);
        let traj = integrate_with(alg("n2"), &phi2(), &opts).unwrap();
        let steps = traj.step_meta.len() as f64;
        ((traj.at(t).unwrap().coeff(123) - want).abs(), steps)
    };
    let (e1, n1) = err(1e-6);
    let (e2, n2) = err(1e-8);
    assert!(e2 < e1);
    // Global error ~ N^{-p}: the observed order from the two runs.
    let order = (e1 / e2).ln() / (n2 / n1).ln();
    assert!(order >= 4.0, "order {order}, errors {e1:e} {e2:e}, steps {n1} {n2}");
}

#[test]
fn n2_backward_blowup_at_minus_three_tenths() {
    let traj = integrate(alg("n2"), &phi2(), -1.0, DEFAULT_TOL).unwrap();
    let ev = traj.blowup().expect("blow-up");
    assert_eq!(ev.kind, EventKind::Blowup);
    assert!((ev.t + 0.3).abs() < 1e-6, "t = {}", ev.t);
    assert!(traj.samples.iter().all(|s| s.metric().is_ok()));
    let last = traj.last().unwrap();
    assert!(last.t > -0.3);
    assert!(ev.last.coeff(123) < 1e-3);
}

#[test]
fn abelian_flow_is_stationary() {
    let n1 = LieAlgebra::abelian("n1");
    let traj = integrate_with(&n1, &phi_std(), &FlowOptions::at_times(&[1.0, 10.0])).unwrap();
    assert!(traj.samples.iter().all(|s| s.form() == phi_std()));
    assert_eq!(closedness_drift(&traj, &n1), 0.0);
}

#[test]
fn drift_stays_small() {
    let traj = integrate(alg("n2"), &phi2(), 100.0, DEFAULT_TOL).unwrap();
    assert!(closedness_drift(&traj, alg("n2")) < 1e-8);
    let traj = integrate(alg("n4"), &phi4(), 50.0, DEFAULT_TOL).unwrap();
    assert!(traj.completed());
    assert!(closedness_drift(&traj, alg("n4")) < 1e-8);
}

#[test]
fn reduced_systems_share_one_field() {
    for (u, v) in [(1.0, 1.0), (0.5, 2.0), (1.2, 0.3)] {
        let s = ReducedState { u, v };
        let (du, dv) = reduced_field(s);
        if (u, v) == (1.0, 1.0) {
            assert_eq!((du, dv), (2.0 / 3.0, 2.0 / 3.0));
        }
    }
    let a = reduced_flow_n4(ReducedState::INITIAL, 5.0).unwrap();
    let b = reduced_flow_n6(ReducedState::INITIAL, 5.0).unwrap();
    assert_eq!(a.points, b.points);
}

#[test]
fn reduced_trajectory_stays_on_its_curve() {
    let tr = reduced_flow_n4(ReducedState::INITIAL, 50.0).unwrap();
    assert!(tr.blowup.is_none());
    for (_, s) in &tr.points {
        assert!(s.curve_residual() < 1e-8);
        assert!((s.first_integral() - 1.0).abs() < 1e-8);
        assert!(s.in_domain());
    }
}

#[test]
fn full_flows_follow_the_reduced_family() {
    for (key, phi, model) in [("n4", phi4(), ReducedModel::N4), ("n6", phi6(), ReducedModel::N6)] {
        let traj = integrate(alg(key), &phi, 10.0, DEFAULT_TOL).unwrap();
        let r = full_flow_matches_reduction(&traj, model).unwrap();
        assert!(r < 1e-7, "{key}: {r:e}");
        let at0 = integrate_with(alg(key), &phi, &FlowOptions::at_times(&[])).unwrap();
        assert_eq!(full_flow_matches_reduction(&at0, model).unwrap(), 0.0);
    }
}

#[test]
fn t_min_matches_backward_blowup() {
    let t_min = t_min_quadrature();
    assert!((t_min - (-0.241_496_048_120)).abs() < 1e-12, "{t_min}");
    let tr = reduced_flow_n4(ReducedState::INITIAL, -1.0).unwrap();
    let (t, _) = tr.blowup.clone().unwrap();
    assert!((t - t_min).abs() < 1e-5, "{t} vs {t_min}");
    let (_, last) = tr.last;
    assert!(last.u < 1e-2 && last.v > 5.0, "{last:?}");
    let full = integrate(alg("n4"), &phi4(), -1.0, DEFAULT_TOL).unwrap();
    let ev = full.blowup().unwrap();
    assert!((ev.t - t_min).abs() < 1e-5, "{} vs {t_min}", ev.t);
}

#[test]
fn u_approaches_its_limit_slowly() {
    // u(t) → 2^{1/3} with 2^{1/3} − u ~ t^{−2/3}; at t = 100 the gap is
    // still about 4.4e-3.
    let tr = reduced_flow_n4(ReducedState::INITIAL, 100.0).unwrap();
    let u100 = tr.at(100.0).unwrap().u;
    let gap = 2f64.cbrt() - u100;
    assert!(gap > 0.0 && gap < 5e-3, "{gap}");
    let tr = reduced_flow_n4(ReducedState::INITIAL, 1e6).unwrap();
    let gap_far = 2f64.cbrt() - tr.at(1e6).unwrap().u;
    assert!(gap_far < 1e-5 && gap_far > 0.0, "{gap_far}");
}

#[test]
fn curvature_decay_laws() {
    let traj = integrate(alg("n2"), &phi2(), 100.0, DEFAULT_TOL).unwrap();
    let dec = curvature_decay(&traj, alg("n2")).unwrap();
    assert!((dec[0].1 - 0.75).abs() < 1e-14);
    for (t, r) in &dec {
        assert!((r * (1.0 + 10.0 * t / 3.0) - 0.75).abs() < 1e-6, "t = {t}");
    }
    let n12 = alg("n12-orthonormal");
    let traj = integrate(n12, &phi12(), 100.0, DEFAULT_TOL).unwrap();
    let dec = curvature_decay(&traj, n12).unwrap();
    let c0 = dec[0].1 * 3.0;
    for (t, r) in &dec {
        assert!((r * (t + 3.0) - c0).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn n4_n6_curvature_decays() {
    for (key, phi) in [("n4", phi4()), ("n6", phi6())] {
        let traj = integrate(alg(key), &phi, 100.0, DEFAULT_TOL).unwrap();
        let dec = curvature_decay(&traj, alg(key)).unwrap();
        let (r0, r100) = (dec[0].1, dec.last().unwrap().1);
        println!("{key}: |R(0)| = {r0}, |R(100)| = {r100}, ratio {}", r100 / r0);
        assert!(r100 < r0);
    }
}

#[test]
fn ricci_scales_along_flow() {
    let times = [1.0, 10.0];
    let traj = integrate_with(alg("n2"), &phi2(), &FlowOptions::at_times(&times)).unwrap();
    let rics = ricci_along_flow(&traj, alg("n2")).unwrap();
    for (s, ric) in traj.samples.iter().zip(&rics) {
        let k = 3.0 / (3.0 + 10.0 * s.t);
        assert!((ric.matrix() - rics[0].matrix() * k).amax() < 1e-7, "t = {}", s.t);
    }
    let certs = soliton_along_flow(&traj, alg("n2")).unwrap();
    assert!((certs[0].lambda + 2.0).abs() < 1e-12);
    assert!((certs[1].lambda + 6.0 / 13.0).abs() < 1e-9);
    assert!(certs.iter().all(|c| c.is_valid()));

    let n12 = alg("n12-orthonormal");
    let traj = integrate_with(n12, &phi12(), &FlowOptions::at_times(&times)).unwrap();
    let rics = ricci_along_flow(&traj, n12).unwrap();
    let ric0 = ricci(n12, &Metric::identity()).unwrap();
    for (s, ric) in traj.samples.iter().zip(&rics) {
        let k = 3.0 / (3.0 + s.t);
        assert!((ric.matrix() - ric0.matrix() * k).amax() < 1e-7, "t = {}", s.t);
    }
    let certs = soliton_along_flow(&traj, n12).unwrap();
    assert!((certs[1].lambda - 0.75 * certs[0].lambda).abs() < 1e-9);
}

#[test]
fn bracket_flow_on_n2_tends_to_zero() {
    let states = bracket_flow(alg("n2"), &phi2(), 1e4).unwrap();
    assert_eq!(states[0].mu.structure_equations(), alg("n2").structure_equations());
    for st in &states {
        let want = (10.0 * st.t / 3.0 + 1.0).powf(-0.5);
        assert!(rel(st.norm(), want) < 1e-6, "t = {}: {} vs {want}", st.t, st.norm());
        assert!(st.jacobi_residual() < 1e-12);
    }
    let at100 = states.iter().find(|s| s.t == 100.0).map(|s| s.norm());
    assert!(at100.is_none() || at100.unwrap() < 1.0);
    assert!(states.last().unwrap().norm() < 0.05);
}

#[test]
fn bracket_flow_on_n12_decreases() {
    let n12 = alg("n12-orthonormal");
    let states = bracket_flow(n12, &phi12(), 1e3).unwrap();
    let norms: Vec<f64> = states.iter().map(|s| s.norm()).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(norms.last().unwrap() < &(0.5 * norms[0]));
}

#[test]
fn n4_frame_satisfies_closedness_constraints() {
    let traj = integrate(alg("n4"), &phi4(), 20.0, DEFAULT_TOL).unwrap();
    let states = bracket_flow_along(&traj, alg("n4"), &phi4(), &FrameAnsatz::for_key("n4")).unwrap();
    for (st, s) in states.iter().zip(&traj.samples) {
        let f = |i: usize| st.frame[(i - 1, i - 1)];
        assert!((f(1) * f(6) - f(3) * f(4)).abs() < 1e-8, "t = {}", st.t);
        assert!((f(3) * f(7) - f(5) * f(6)).abs() < 1e-8, "t = {}", st.t);
        let ReducedState { u, v } = reduced_from_form(ReducedModel::N4, &s.form()).unwrap();
        assert!((f(1) - u * v).abs() < 1e-8);
        assert!((f(2) - v.sqrt()).abs() < 1e-8);
        assert!((f(3) - u.sqrt()).abs() < 1e-8);
        assert!((f(6) - (u * v).powf(-0.5)).abs() < 1e-8);
        // The shears solving pullback(φ₄, P) = φ(t) are the negatives of
        // ½u^{5/2}v − ½u^{1/2} and ½u^{3/2}v^{1/2} − ½(uv)^{−1/2}.
        let h1 = 0.5 * u.sqrt() - 0.5 * u.powf(2.5) * v;
        let h3 = 0.5 * (u * v).powf(-0.5) - 0.5 * u.powf(1.5) * v.sqrt();
        assert!((st.frame[(4, 0)] - h1).abs() < 1e-8, "t = {}", st.t);
        assert!(st.frame[(5, 1)].abs() < 1e-8);
        assert!((st.frame[(6, 3)] - h3).abs() < 1e-8, "t = {}", st.t);
    }
}

#[test]
fn n6_frame_matches_ansatz() {
    let traj = integrate(alg("n6"), &phi6(), 20.0, DEFAULT_TOL).unwrap();
    let states = bracket_flow_along(&traj, alg("n6"), &phi6(), &FrameAnsatz::for_key("n6")).unwrap();
    for (st, s) in states.iter().zip(&traj.samples) {
        let ReducedState { u, v } = reduced_from_form(ReducedModel::N6, &s.form()).unwrap();
        let f = |i: usize| st.frame[(i - 1, i - 1)];
        assert!((f(1) - u * v).abs() < 1e-8);
        assert!((f(4) - u.sqrt()).abs() < 1e-8);
        assert!((f(7) - (u * v).powf(-0.5)).abs() < 1e-8);
        let h = -0.5 * (u * v).powf(-0.5) + 0.5 * u.powf(1.5) * v.sqrt();
        assert!((st.frame[(5, 1)] - h).abs() < 1e-8, "t = {}", st.t);
        assert!((st.frame[(6, 2)] - h).abs() < 1e-8, "t = {}", st.t);
    }
}
