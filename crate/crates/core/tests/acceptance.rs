//! Acceptance checks. Prints one line per criterion and exits nonzero if any
//! fails. Tolerances are fixed here and must not be relaxed.

use std::collections::BTreeMap;
use std::time::Instant;

use proptest::prelude::Rng;
use proptest::test_runner::{RngAlgorithm, TestRng};

use vcnls::blowup::predict_blowup;
use vcnls::characteristic::{solve_basis_with, BasisOptions};
use vcnls::coeffs::CoefficientSet;
use vcnls::ermakov::ermakov_multiparameter;
use vcnls::pipeline::{assemble, PhaseHandle, Run};
use vcnls::riccati::{opt1_residual, riccati_kernel, riccati_multiparameter, RiccatiParameters};
use vcnls::scenario::load_scenario;
use vcnls::seeds::ground_state_radial;
use vcnls::simulate::{compare_to_exact, integrate, masses, Boundary, Initial, Scheme, SimOptions, StopReason};
use vcnls::special::{dawson, jacobi_elliptic};
use vcnls::transforms::{axis_coefficients, family_phases, family_solution, FamilyParams};
use vcnls::validate::{pde_residual, system_residual, GridSpec, PhaseSystem};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run(name: &str, overrides: &[(&str, f64)]) -> Run {
    let o: BTreeMap<String, f64> = overrides.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    assemble(&load_scenario(name).unwrap(), &o).unwrap()
}

fn uniform(rng: &mut TestRng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

// 1. Example 1 blow-up times.
fn blowup_times() -> Outcome {
    const TOL: f64 = 1e-9;
    const MAX_SECONDS: f64 = 1.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha0, want) in [(-0.25, 2.0), (-0.5, 1.0), (-1.0, 0.5)] {
        let clock = Instant::now();
        let r = run("example1", &[("alpha0", alpha0)]);
        let PhaseHandle::Riccati(sol) = &r.phases else { unreachable!() };
        let got = predict_blowup(sol).unwrap().map(|b| b.t_star).unwrap_or(f64::NAN);
        let secs = clock.elapsed().as_secs_f64();
        let err = (got - want).abs();
        ok &= err <= TOL && secs < MAX_SECONDS;
        parts.push(format!("alpha0={alpha0}: T*={got} |err|={err:.1e} {secs:.3}s"));
    }
    outcome(ok, format!("{} (tol {TOL:e}, < {MAX_SECONDS} s each)", parts.join("; ")))
}

// 2. Example 3 numeric characteristic basis and mu.
fn example3_characteristic() -> Outcome {
    const TOL: f64 = 1e-8;
    let coeffs = load_scenario("example3_toy").unwrap().coefficients;
    let mut opts = BasisOptions::new(6.0);
    opts.tol = 1e-12;
    // Normalisation of the closed form t e^{3(1 - cos t)}: mu0'(0) = 1.
    opts.mu0_slope = Some(1.0);
    let basis = solve_basis_with(&coeffs, &opts).unwrap();
    let e = |t: f64| (3.0 * (1.0 - t.cos())).exp();
    let ts = linspace(0.1, 6.0, 500);
    let mut basis_dev = 0.0f64;
    for &t in &ts {
        basis_dev = basis_dev.max((basis.mu0(t) - t * e(t)).abs() / (t * e(t)));
        basis_dev = basis_dev.max((basis.mu1(t) - e(t)).abs() / e(t));
    }
    let kernel = riccati_kernel(&basis, &coeffs, 1e-12).unwrap();
    let mut mu_dev = 0.0f64;
    for (mu0, alpha0) in [(1.0, 0.0), (0.7, 0.3), (2.0, -0.1)] {
        let p = RiccatiParameters {
            mu0_init: mu0,
            alpha0_init: alpha0,
            l0: 1.0,
            ..Default::default()
        };
        let sol = riccati_multiparameter(&kernel, p).unwrap();
        for &t in &ts {
            let want = mu0 * e(t) * (2.0 * alpha0 * t + 1.0);
            mu_dev = mu_dev.max((sol.mu(t) - want).abs() / want.abs().max(1.0));
        }
    }
    outcome(
        basis_dev <= TOL && mu_dev <= TOL,
        format!("basis rel dev {basis_dev:.2e}, mu dev {mu_dev:.2e} on [0.1, 6] (tol {TOL:e})"),
    )
}

// 3. PDE residual of the closed-form scenarios on 201 x 401 grids.
fn residual_gate() -> Outcome {
    const TOL: f64 = 1e-6;
    const MAX_SECONDS: f64 = 60.0;
    let clock = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["bending_bright", "bending_dark", "sch1", "sch1_fast_decay", "sch2"] {
        let r = run(name, &[]);
        let grid: GridSpec = r.scenario.grid.clone().unwrap();
        let dims = (grid.t.2, grid.x.2);
        let rep = pde_residual(&r.exact, &r.coefficients, &grid, TOL).unwrap();
        ok &= rep.max_abs <= TOL && dims == (201, 401);
        parts.push(format!("{name} {:.1e}", rep.max_abs));
    }
    let secs = clock.elapsed().as_secs_f64();
    ok &= secs < MAX_SECONDS;
    outcome(ok, format!("{} (tol {TOL:e}; {secs:.1}s < {MAX_SECONDS}s)", parts.join(", ")))
}

// 4. Classical bright and dark solitons from the family.
fn classical_limits() -> Outcome {
    const TOL: f64 = 1e-10;
    const POINTS: usize = 1000;
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut worst = [0.0f64; 2];
    for (k, h0) in [-2.0, 2.0].into_iter().enumerate() {
        for _ in 0..POINTS {
            let (t, x, y) = (uniform(&mut rng, 0.0, 10.0), uniform(&mut rng, -10.0, 10.0), uniform(&mut rng, -2.0, 2.0));
            let (_, sol) = family_solution(FamilyParams { y, ..FamilyParams::new(h0, 1.0) }).unwrap();
            let z = x - t * y;
            let want = if h0 < 0.0 { 1.0 / z.cosh().powi(2) } else { z.tanh().powi(2) };
            worst[k] = worst[k].max((sol.psi(t, x).norm_sqr() - want).abs());
        }
    }
    outcome(
        worst[0] <= TOL && worst[1] <= TOL,
        format!("sech^2 |d| {:.1e}, tanh^2 |d| {:.1e} over {POINTS} points each (tol {TOL:e})", worst[0], worst[1]),
    )
}

// 5. Family closed forms against the Ermakov multiparameter solution.
fn ermakov_cross_check() -> Outcome {
    const TOL: f64 = 1e-8;
    const DRAWS: usize = 20;
    let coeffs = CoefficientSet::from_exprs(&[("a", "1/2"), ("b", "1/2")], 1.0, 1.0, 1).unwrap();
    let mut opts = BasisOptions::new(10.0);
    opts.tol = 1e-12;
    let basis = solve_basis_with(&coeffs, &opts).unwrap();
    let kernel = riccati_kernel(&basis, &coeffs, 1e-12).unwrap();
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut worst = 0.0f64;
    let mut worst_name = "";
    for _ in 0..DRAWS {
        let fp = FamilyParams {
            mu0: uniform(&mut rng, 0.5, 2.0),
            alpha0: uniform(&mut rng, -0.5, 0.5),
            gamma0: uniform(&mut rng, -0.5, 0.5),
            delta0: uniform(&mut rng, -1.0, 1.0),
            eps0: uniform(&mut rng, -1.0, 1.0),
            kappa0: uniform(&mut rng, -1.0, 1.0),
            ..FamilyParams::new(-2.0, uniform(&mut rng, 0.5, 1.5))
        };
        let (xi0, _) = fp.profile_constants();
        let params = RiccatiParameters {
            mu0_init: fp.mu0,
            alpha0_init: fp.alpha0,
            beta0_init: fp.beta0,
            gamma0_init: fp.gamma0,
            delta0_init: fp.delta0,
            eps0_init: fp.eps0,
            kappa0_init: fp.kappa0,
            l0: 1.0,
        };
        let es = ermakov_multiparameter(&kernel, params, 1.0, xi0, fp.h0).unwrap();
        for t in linspace(0.0, 10.0, 101) {
            let f = family_phases(&fp, t);
            let rows = [
                ("alpha", f.alpha, es.alpha(t)),
                ("beta", f.beta, es.beta(t)),
                ("gamma", f.gamma, es.gamma(t)),
                ("delta", f.delta, es.delta(t)),
                ("eps", f.eps, es.eps(t)),
                ("kappa", f.kappa, es.kappa(t)),
                ("mu", f.mu, es.mu(t)),
            ];
            for (name, a, b) in rows {
                let d = (a - b).abs();
                if d > worst {
                    worst = d;
                    worst_name = name;
                }
            }
        }
    }
    outcome(worst <= TOL, format!("max |d| {worst:.1e} ({worst_name}) over {DRAWS} draws on [0, 10] (tol {TOL:e})"))
}

// 6. Jacobi elliptic degeneration and the Dawson function.
fn special_functions() -> Outcome {
    const TOL: f64 = 1e-12;
    const DAWSON_TOL: f64 = 1e-9;
    let mut worst = 0.0f64;
    for u in linspace(-5.0, 5.0, 1001) {
        let (sn, cn, _) = jacobi_elliptic(u, 1.0).unwrap();
        worst = worst.max((cn - 1.0 / u.cosh()).abs()).max((sn - u.tanh()).abs());
    }
    let d = (dawson(1.0) - 0.5380795069).abs();
    outcome(
        worst <= TOL && d <= DAWSON_TOL,
        format!("cn/sn at k=1 |d| {worst:.1e} (tol {TOL:e}); |D(1) - 0.5380795069| {d:.1e} (tol {DAWSON_TOL:e})"),
    )
}

// 7. Alternative (gauge) system for sch1 and sch2; sch2 kappa via Dawson.
fn alternative_system() -> Outcome {
    const TOL: f64 = 1e-10;
    const KAPPA_TOL: f64 = 1e-9;
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["sch1", "sch2"] {
        let sc = load_scenario(name).unwrap();
        let (lo, hi) = sc.time_domain;
        let r = opt1_residual(&sc.coefficients, sc.coefficients.l0, &linspace(lo, hi, 2001));
        ok &= r <= TOL;
        parts.push(format!("{name} opt1 {r:.1e}"));
    }
    let r = run("sch2", &[]);
    let kappa0 = r.parameters["kappa0"];
    let mut worst = 0.0f64;
    for t in linspace(0.0, 2.0, 401) {
        let s2 = std::f64::consts::SQRT_2;
        let want = kappa0 + (2.0 * t * t).exp() * (2.0 * t - s2 * dawson(s2 * t)) / 8.0;
        worst = worst.max((r.phases.phases(t).kappa - want).abs());
    }
    ok &= worst <= KAPPA_TOL;
    outcome(
        ok,
        format!("{} (tol {TOL:e}); sch2 kappa vs Dawson |d| {worst:.1e} on [0, 2] (tol {KAPPA_TOL:e})", parts.join(", ")),
    )
}

// 8. Method of lines on the bright soliton; Example 1 blow-up stop.
fn simulator_oracle() -> Outcome {
    const L2_TOL: f64 = 1e-4;
    const ORDER: f64 = 4.0;
    const ORDER_TOL: f64 = 0.05;
    let r = run("example4_bright", &[]);
    let l2 = |n: usize| {
        let mut o = SimOptions::periodic(n, 20.0, Scheme::MethodOfLines);
        o.tol = 1e-12;
        let tr = integrate(&r.coefficients, Initial::Exact(&r.exact), 0.0, &[1.0], &o).unwrap();
        compare_to_exact(&tr, &r.exact).unwrap()[1].l2
    };
    // The stencil is 4th order; the finite-N estimate approaches 4 from below.
    let (e1, e2, e3) = (l2(256), l2(512), l2(1024));
    let order = ((e1 / e2).log2()).min((e2 / e3).log2());
    let e512 = e2;

    let b = run("example1", &[]);
    let t_star = b.blowup.as_ref().unwrap().t_star;
    let opts = SimOptions {
        boundary: Boundary::Exact(b.exact.clone()),
        absorb: false,
        ..SimOptions::new(512, 5.0)
    };
    let tr = integrate(&b.coefficients, Initial::Exact(&b.exact), 0.0, &[t_star], &opts).unwrap();
    let stopped = matches!(tr.stop, StopReason::BlowUp | StopReason::ResolutionLost);
    let in_window = stopped && tr.t_stop >= 0.9 * t_star && tr.t_stop <= t_star;
    outcome(
        e512 <= L2_TOL && order >= ORDER - ORDER_TOL && in_window,
        format!(
            "L2(N=512) {e512:.2e} (tol {L2_TOL:e}); observed order {order:.3} over N=256..1024 \
             (expect {ORDER}, tol {ORDER_TOL}); \
             blow-up stop t={:.4} ({:?}) in [{:.2}, {:.2}]",
            tr.t_stop,
            tr.stop,
            0.9 * t_star,
            t_star
        ),
    )
}

// 9. Mass law for sch1.
fn mass_law() -> Outcome {
    const TOL: f64 = 1e-4;
    let r = run("sch1", &[]);
    let times: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let tr = integrate(&r.coefficients, Initial::Exact(&r.exact), 0.0, &times, &SimOptions::new(1024, 20.0)).unwrap();
    let m = masses(&tr);
    let m0 = m[0].1;
    let worst = m[1..]
        .iter()
        .map(|&(t, mass)| {
            let want = m0 * (-3.0 * (1.0 - t.cos())).exp();
            (mass - want).abs() / want
        })
        .fold(0.0, f64::max);
    let completed = tr.stop == StopReason::Completed;
    outcome(
        completed && worst <= TOL,
        format!("max rel dev {worst:.1e} up to t = 3 (tol {TOL:e}), stop {:?}", tr.stop),
    )
}

// 10. 2D lens transform with the ground state; pseudoconformal modulus.
fn two_dimensional() -> Outcome {
    const SYSTEM_TOL: f64 = 1e-7;
    const MODULUS_TOL: f64 = 1e-8;
    const TOWNES_Q0: f64 = 2.20620086;
    const Q0_TOL: f64 = 1e-6;
    let q = ground_state_radial(2, 3.0, 1e-12).unwrap();
    let q0 = q.peak();

    let gp = run("example2_gp", &[]);
    let PhaseHandle::Pair(s1, s2) = &gp.phases else { unreachable!() };
    let sys = [
        system_residual(PhaseSystem::Riccati(s1), &axis_coefficients(&gp.coefficients, 1), SYSTEM_TOL),
        system_residual(PhaseSystem::Riccati(s2), &axis_coefficients(&gp.coefficients, 2), SYSTEM_TOL),
    ];
    let sys_max = sys.iter().map(|r| r.max_abs).fold(0.0, f64::max);

    let pc = run("example2_gp_blowup", &[]);
    let (mu_init, beta_init) = (pc.parameters["mu0"], pc.parameters["beta0"]);
    let mu0 = pc.scenario.closed_forms["mu0"].clone();
    let mut worst = 0.0f64;
    for t in linspace(0.1, 1.4, 27) {
        for x in linspace(-4.0, 4.0, 33) {
            for y in linspace(-4.0, 4.0, 33) {
                let m = mu0.eval(t);
                let r = (x * x + y * y).sqrt();
                let want = (q.eval(-beta_init * r / m) / (mu_init * m)).abs();
                worst = worst.max((pc.exact.psi2(t, x, y).norm() - want).abs());
            }
        }
    }
    outcome(
        sys_max <= SYSTEM_TOL && worst <= MODULUS_TOL && (q0 - TOWNES_Q0).abs() <= Q0_TOL,
        format!(
            "Q(0) = {q0:.8} (vs {TOWNES_Q0}, tol {Q0_TOL:e}); axis system residual {sys_max:.1e} (tol {SYSTEM_TOL:e}); \
             modulus identity |d| {worst:.1e} (tol {MODULUS_TOL:e})"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("blow-up prediction", blowup_times),
        ("example 3 characteristic", example3_characteristic),
        ("residual gate", residual_gate),
        ("classical limits", classical_limits),
        ("ermakov cross-check", ermakov_cross_check),
        ("special functions", special_functions),
        ("alternative system", alternative_system),
        ("simulator oracle", simulator_oracle),
        ("mass law", mass_law),
        ("2d transform", two_dimensional),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!("[{}] {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
