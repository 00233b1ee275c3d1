//! Finite-time blow-up: zeros of `μ` and norm traces.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::riccati::{sample_points, RiccatiSolution};
use crate::transforms::ExactSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupMethod {
    RootOfMu,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupReport {
    pub t_star: f64,
    pub bracket: (f64, f64),
    pub method: BlowupMethod,
    /// `(t, ‖ψ(t)‖_p)` samples, filled by [`amplitude_envelope`].
    pub norm_trace: Vec<(f64, f64)>,
    /// Norm index; `None` is the sup norm.
    pub p: Option<f64>,
}

const SCAN: usize = 4000;
const HORIZON: f64 = 1e3;

/// First positive zero of `μ`, i.e. the time where `γ₀(t) = -α(0)`.
/// Returns `Ok(None)` when `μ` keeps its sign on the solution domain and an
/// error when the only candidate sits on the domain boundary.
pub fn predict_blowup(sol: &RiccatiSolution) -> Result<Option<BlowupReport>> {
    let hi = sol.kernel().map_or(HORIZON, |k| k.domain.1.min(HORIZON));
    if hi <= 0.0 {
        return Ok(None);
    }
    let r = |t: f64| sol.r(t);
    let ts = sample_points((0.0, hi), SCAN);
    let mut scale = r(0.0).abs();
    let mut prev = (ts[0], r(ts[0]));
    for &t in &ts[1..] {
        let v = r(t);
        if !v.is_finite() {
            return Err(Error::Singular(format!("mu is not finite at t = {t}")));
        }
        if v.signum() != prev.1.signum() || v == 0.0 {
            let t_star = brent(r, prev.0, t, 1e-14 * t.max(1.0))?;
            scale = scale.max(prev.1.abs());
            if (hi - t_star).abs() <= 1e-9 * hi.max(1.0) {
                return Err(Error::Domain(format!(
                    "blow-up inconclusive: root of mu at the domain boundary t = {hi}"
                )));
            }
            let residual = sol.mu(t_star).abs();
            if residual > 1e-10 * scale * sol.params.mu0_init.abs() {
                return Err(Error::Tolerance(format!("|mu(t*)| = {residual:.3e}")));
            }
            return Ok(Some(BlowupReport {
                t_star,
                bracket: (prev.0, t),
                method: BlowupMethod::RootOfMu,
                norm_trace: Vec::new(),
                p: None,
            }));
        }
        scale = scale.max(v.abs());
        prev = (t, v);
    }
    if prev.1.abs() <= 1e-10 * scale {
        return Err(Error::Domain(format!(
            "blow-up inconclusive: mu vanishes at the domain boundary t = {hi}"
        )));
    }
    Ok(None)
}

/// A report for a blow-up time known in closed form.
pub fn closed_form_report(t_star: f64) -> BlowupReport {
    BlowupReport {
        t_star,
        bracket: (t_star, t_star),
        method: BlowupMethod::ClosedForm,
        norm_trace: Vec::new(),
        p: None,
    }
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `‖ψ(t)‖_p` on the grid `xs` (tensor grid `xs × xs` in 2D); `p = None` is
/// the sup norm, finite `p` uses the trapezoidal rule.
pub fn amplitude_envelope(exact: &ExactSolution, p: Option<f64>, times: &[f64], xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if xs.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    if let Some(p) = p {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("norm index p = {p}")));
        }
    }
    Ok(times
        .par_iter()
        .map(|&t| {
            let slice = exact.at(t);
            let row = |y: f64| -> Vec<f64> { xs.iter().map(|&x| slice(x, y).norm()).collect() };
            let v = match (exact.dimension, p) {
                (1, None) => row(0.0).into_iter().fold(0.0, f64::max),
                (1, Some(p)) => {
                    let v: Vec<f64> = row(0.0).iter().map(|m| m.powf(p)).collect();
                    trapezoid(xs, &v).powf(1.0 / p)
                }
                (_, None) => xs.iter().map(|&y| row(y).into_iter().fold(0.0, f64::max)).fold(0.0, f64::max),
                (_, Some(p)) => {
                    let inner: Vec<f64> = xs
                        .iter()
                        .map(|&y| {
                            let v: Vec<f64> = row(y).iter().map(|m| m.powf(p)).collect();
                            trapezoid(xs, &v)
                        })
                        .collect();
                    trapezoid(xs, &inner).powf(1.0 / p)
                }
            };
            (t, v)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::solve_basis;
    use crate::coeffs::{CoefficientSet, TimeFunction};
    use crate::riccati::{riccati_kernel, riccati_multiparameter, PhaseSource, RiccatiParameters};
    use crate::seeds::{build_seed, SeedKind};
    use crate::transforms::{lens_apply, plane_wave};
    use std::collections::BTreeMap;

    fn solution(b: f64, alpha0: f64, mu0: f64) -> (CoefficientSet, RiccatiSolution) {
        let mut c = CoefficientSet::free(0.5);
        c.b = TimeFunction::constant(b);
        c.h = TimeFunction::constant(1.0);
        let basis = solve_basis(&c, 6.0, 1e-12).unwrap();
        let k = riccati_kernel(&basis, &c, 1e-12).unwrap();
        let p = RiccatiParameters {
            mu0_init: mu0,
            alpha0_init: alpha0,
            ..Default::default()
        };
        (c, riccati_multiparameter(&k, p).unwrap())
    }

    #[test]
    fn free_particle_blowup_time() {
        let (_, sol) = solution(0.0, -0.25, 0.5);
        let rep = predict_blowup(&sol).unwrap().unwrap();
        assert!((rep.t_star - 2.0).abs() < 1e-12);
        assert!(rep.bracket.0 <= rep.t_star && rep.t_star <= rep.bracket.1);
        let (_, sol) = solution(0.0, 0.25, 0.5);
        assert!(predict_blowup(&sol).unwrap().is_none());
    }

    #[test]
    fn oscillator_root_matches_gamma0_inverse() {
        // μ₀ = sin t, μ₁ = cos t: γ₀ = cot(t)/2, so T* = atan(-1/(2α(0))).
        for alpha0 in [-0.25, 0.4, 1.5] {
            let (_, sol) = solution(0.5, alpha0, 1.0);
            let t_star = predict_blowup(&sol).unwrap().unwrap().t_star;
            let mut expect = (-1.0 / (2.0 * alpha0)).atan();
            if expect < 0.0 {
                expect += std::f64::consts::PI;
            }
            assert!((t_star - expect).abs() < 1e-9, "alpha0 = {alpha0}");
            let k = sol.kernel().unwrap();
            let inv = brent(|t| k.gamma0(t) + alpha0, 1e-3, std::f64::consts::PI - 1e-3, 1e-14).unwrap();
            assert!((inv - t_star).abs() < 1e-9);
        }
    }

    #[test]
    fn blowup_time_ignores_mu0_scale() {
        let (_, a) = solution(0.5, -0.3, 0.2);
        let (_, b) = solution(0.5, -0.3, 7.0);
        let ta = predict_blowup(&a).unwrap().unwrap().t_star;
        let tb = predict_blowup(&b).unwrap().unwrap().t_star;
        assert!((ta - tb).abs() < 1e-13);
    }

    #[test]
    fn plane_wave_envelope_grows() {
        let (c, sol) = solution(0.0, -0.25, 0.5);
        let psi = plane_wave(&sol, &c).unwrap();
        let xs: Vec<f64> = (0..21).map(|i| -1.0 + 0.1 * i as f64).collect();
        let times: Vec<f64> = (0..20).map(|i| 1.0 + 0.98 * i as f64 / 20.0).collect();
        let trace = amplitude_envelope(&psi, None, &times, &xs).unwrap();
        assert!((trace[0].1 - 2.0).abs() < 1e-12);
        assert!(trace.windows(2).all(|w| w[1].1 > w[0].1));
    }

    #[test]
    fn lens_norm_scaling() {
        let p = RiccatiParameters {
            alpha0_init: 0.2,
            beta0_init: 1.3,
            ..Default::default()
        };
        let mut c = CoefficientSet::free(0.5);
        let basis = solve_basis(&c, 3.0, 1e-12).unwrap();
        let k = riccati_kernel(&basis, &c, 1e-12).unwrap();
        let sol = riccati_multiparameter(&k, p).unwrap();
        let s2 = sol.clone();
        c.h = TimeFunction::from_fn("h", move |t| {
            let q = s2.phases(t);
            -2.0 * 0.5 * q.beta * q.beta * q.mu
        });
        let m: BTreeMap<String, f64> = [("v".to_string(), 1.0), ("l0".to_string(), 1.0)].into();
        let seed = build_seed(SeedKind::Bright, &m).unwrap();
        let psi = lens_apply(&sol, &seed, &c).unwrap();
        let xs: Vec<f64> = (0..4001).map(|i| -40.0 + 0.02 * i as f64).collect();
        // ‖sech‖₂ = √2, ‖sech‖_∞ = 1.
        for (t, v) in amplitude_envelope(&psi, Some(2.0), &[0.5, 2.0], &xs).unwrap() {
            let q = sol.phases(t);
            let expect = 2f64.sqrt() / q.mu.sqrt() / q.beta.sqrt();
            assert!((v - expect).abs() < 1e-6 * expect);
        }
        for (t, v) in amplitude_envelope(&psi, None, &[1.0], &xs).unwrap() {
            let q = sol.phases(t);
            assert!((v - 1.0 / q.mu.sqrt()).abs() < 1e-3);
        }
        assert!(matches!(amplitude_envelope(&psi, None, &[1.0], &[]), Err(Error::EmptyGrid)));
    }
}
