use std::collections::BTreeMap;

use vcnls::pipeline::{assemble, Run};
use vcnls::scenario::load_scenario;
use vcnls::simulate::{compare_to_exact, compare_trajectories, integrate, masses, Boundary, Initial, Scheme, SimOptions, StopReason};

fn run(name: &str) -> Run {
    assemble(&load_scenario(name).unwrap(), &BTreeMap::new()).unwrap()
}

#[test]
fn plane_wave_blowup_stops_before_t_star() {
    let r = run("example1");
    let t_star = r.blowup.as_ref().unwrap().t_star;
    assert!((t_star - 2.0).abs() < 1e-12);
    let opts = SimOptions {
        boundary: Boundary::Exact(r.exact.clone()),
        absorb: false,
        ..SimOptions::new(512, 5.0)
    };
    let tr = integrate(&r.coefficients, Initial::Exact(&r.exact), 0.0, &[t_star], &opts).unwrap();
    assert!(matches!(tr.stop, StopReason::BlowUp | StopReason::ResolutionLost), "{:?}", tr.stop);
    assert!(tr.t_stop >= 0.9 * t_star && tr.t_stop <= t_star, "t_stop = {}", tr.t_stop);
    assert!(tr.t_stop >= 1.8);
}

#[test]
fn schemes_agree_on_the_bright_soliton() {
    let r = run("example4_bright");
    let times = [0.25, 0.5, 1.0];
    let mol = integrate(
        &r.coefficients,
        Initial::Exact(&r.exact),
        0.0,
        &times,
        &SimOptions::periodic(1024, 20.0, Scheme::MethodOfLines),
    )
    .unwrap();
    let split = integrate(
        &r.coefficients,
        Initial::Exact(&r.exact),
        0.0,
        &times,
        &SimOptions::periodic(1024, 20.0, Scheme::SplitStep),
    )
    .unwrap();
    for row in compare_trajectories(&mol, &split).unwrap() {
        assert!(row.linf <= 1e-6, "{row:?}");
    }
    let err = compare_to_exact(&split, &r.exact).unwrap();
    assert!(err.iter().all(|e| e.l2 < 1e-6), "{err:?}");
}

#[test]
fn method_of_lines_is_fourth_order() {
    let r = run("example4_bright");
    let l2 = |n: usize| {
        let mut o = SimOptions::periodic(n, 20.0, Scheme::MethodOfLines);
        o.tol = 1e-12;
        let tr = integrate(&r.coefficients, Initial::Exact(&r.exact), 0.0, &[1.0], &o).unwrap();
        compare_to_exact(&tr, &r.exact).unwrap()[1].l2
    };
    let (e1, e2, e3) = (l2(128), l2(256), l2(512));
    assert!(e3 <= 1e-4, "N = 512: {e3:e}");
    let (p1, p2) = ((e1 / e2).log2(), (e2 / e3).log2());
    assert!(p1 >= 3.8 && p2 >= 3.8, "orders {p1:.2}, {p2:.2} ({e1:e}, {e2:e}, {e3:e})");
}

#[test]
fn gain_term_mass_law() {
    // c - 2d = -3 sin t, so ‖ψ(t)‖² = ‖ψ(0)‖² e^{-3(1 - cos t)}.
    let r = run("sch1");
    let times: Vec<f64> = (1..=6).map(|i| 0.5 * i as f64).collect();
    let tr = integrate(&r.coefficients, Initial::Exact(&r.exact), 0.0, &times, &SimOptions::new(1024, 20.0)).unwrap();
    assert_eq!(tr.stop, StopReason::Completed);
    let m = masses(&tr);
    let m0 = m[0].1;
    for &(t, mass) in &m[1..] {
        let want = m0 * (-3.0 * (1.0 - t.cos())).exp();
        assert!((mass - want).abs() <= 1e-4 * want, "t = {t}: {mass} vs {want}");
    }
}
