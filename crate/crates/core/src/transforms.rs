//! Exact solutions of the variable-coefficient equation assembled from a
//! phase system and a seed:
//!
//! ```text
//! ψ(t, x) = μ^{-1/2} e^{i(αx² + δx + κ)} u(γ, βx + ε)            (1D lens)
//! ψ(t, x, y) = μ^{-1} e^{i(α(x²+y²) + δ₁x + δ₂y + κ₁ + κ₂)} χ(γ, βx + ε₁, βy + ε₂)
//! ```
//!
//! A nonzero potential offset `G` contributes the extra phase `-∫G`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::coeffs::{CoefficientSet, TimeFunction};
use crate::ermakov::{balanced_coefficients, ErmakovSolution};
use crate::error::{Error, Result};
use crate::riccati::{cumulative, kappa_nonlinear, sample_points, PhaseSource, RiccatiSolution};
use crate::seeds::{build_seed, elliptic_profile, ProfileSolution, SeedKind, SeedSolution};

/// The field at one instant, as a function of `(x, y)`.
pub type Slice = Box<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
type Frame = Arc<dyn Fn(f64) -> Slice + Send + Sync>;

#[derive(Debug, Clone, Default, Serialize)]
pub struct Provenance {
    pub scenario: Option<String>,
    pub phase_system: String,
    pub seed: String,
    pub y: Option<f64>,
}

/// An exact solution together with the coefficients of the equation it solves.
#[derive(Clone)]
pub struct ExactSolution {
    frame: Frame,
    pub dimension: u8,
    pub chain: Provenance,
    pub domain: (f64, f64),
    pub predicted_blowup: Option<f64>,
    pub coefficients: CoefficientSet,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution")
            .field("dimension", &self.dimension)
            .field("chain", &self.chain)
            .field("domain", &self.domain)
            .field("predicted_blowup", &self.predicted_blowup)
            .finish()
    }
}

impl ExactSolution {
    pub fn new(
        frame: impl Fn(f64) -> Slice + Send + Sync + 'static,
        dimension: u8,
        chain: Provenance,
        domain: (f64, f64),
        coefficients: CoefficientSet,
    ) -> Self {
        ExactSolution {
            frame: Arc::new(frame),
            dimension,
            chain,
            domain,
            predicted_blowup: None,
            coefficients,
        }
    }

    /// Time-dependent parts evaluated once; the returned slice is cheap per point.
    pub fn at(&self, t: f64) -> Slice {
        (self.frame)(t)
    }

    pub fn psi(&self, t: f64, x: f64) -> Complex64 {
        self.at(t)(x, 0.0)
    }

    pub fn psi2(&self, t: f64, x: f64, y: f64) -> Complex64 {
        self.at(t)(x, y)
    }

    pub fn with_scenario(mut self, name: &str) -> Self {
        self.chain.scenario = Some(name.to_string());
        self
    }

    /// `t,x[,y],re,im,abs2` rows over the tensor grid.
    pub fn to_csv(&self, ts: &[f64], xs: &[f64], ys: Option<&[f64]>) -> String {
        let mut out = String::new();
        match ys {
            None => {
                out.push_str("t,x,re,im,abs2\n");
                for &t in ts {
                    let s = self.at(t);
                    for &x in xs {
                        let v = s(x, 0.0);
                        out.push_str(&format!("{t:.10e},{x:.10e},{:.15e},{:.15e},{:.15e}\n", v.re, v.im, v.norm_sqr()));
                    }
                }
            }
            Some(ys) => {
                out.push_str("t,x,y,re,im,abs2\n");
                for &t in ts {
                    let s = self.at(t);
                    for &x in xs {
                        for &y in ys {
                            let v = s(x, y);
                            out.push_str(&format!(
                                "{t:.10e},{x:.10e},{y:.10e},{:.15e},{:.15e},{:.15e}\n",
                                v.re,
                                v.im,
                                v.norm_sqr()
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

/// `-∫₀ᵗ G`, the phase absorbing a time-dependent potential offset.
pub(crate) fn offset_phase(coeffs: &CoefficientSet) -> Arc<dyn Fn(f64) -> f64 + Send + Sync> {
    if coeffs.big_g.is_zero() {
        return Arc::new(|_| 0.0);
    }
    let g = coeffs.big_g.clone();
    Arc::new(move |t| -cumulative(|s| g.eval(s), t))
}

/// Coefficients seen by the second axis: `f₂`, `g₂` moved into `f`, `g`.
pub fn axis_coefficients(coeffs: &CoefficientSet, axis: usize) -> CoefficientSet {
    let mut c = coeffs.clone();
    if axis == 2 {
        c.f = coeffs.f2.clone();
        c.g = coeffs.g2.clone();
    }
    c
}

fn check_target(l0: f64, seed: &SeedSolution, coeffs: &CoefficientSet) -> Result<()> {
    if seed.target.l0 != l0 {
        return Err(Error::TargetMismatch(format!(
            "seed '{}' solves the l0 = {} equation, phase system uses l0 = {l0}",
            seed.kind, seed.target.l0
        )));
    }
    if (seed.target.s - coeffs.s).abs() > 1e-12 {
        return Err(Error::TargetMismatch(format!(
            "seed '{}' has power s = {}, equation has s = {}",
            seed.kind, seed.target.s, coeffs.s
        )));
    }
    if seed.dimension != coeffs.dimension {
        return Err(Error::TargetMismatch(format!(
            "seed '{}' is {}D, equation is {}D",
            seed.kind, seed.dimension, coeffs.dimension
        )));
    }
    Ok(())
}

/// Worst relative deviation of `h` from `λ a β² |μ|^p` and where it occurs.
pub fn nonlinearity_deviation(
    src: &dyn PhaseSource,
    coeffs: &CoefficientSet,
    lambda: f64,
    power: f64,
    domain: (f64, f64),
) -> (f64, f64) {
    let mut worst = (0.0f64, domain.0);
    for t in sample_points(domain, 400) {
        let p = src.phases(t);
        if !(p.mu.is_finite() && p.beta.is_finite()) || p.mu == 0.0 {
            continue;
        }
        let h = coeffs.h.eval(t);
        let want = lambda * coeffs.a.eval(t) * p.beta * p.beta * p.mu.abs().powf(power);
        let scale = h.abs().max(want.abs());
        if scale == 0.0 {
            continue;
        }
        let dev = (h - want).abs() / scale;
        if dev > worst.0 || !dev.is_finite() {
            worst = (dev, t);
        }
    }
    worst
}

fn check_balance(src: &dyn PhaseSource, coeffs: &CoefficientSet, lambda: f64, power: f64, domain: (f64, f64)) -> Result<()> {
    let (dev, t) = nonlinearity_deviation(src, coeffs, lambda, power, domain);
    if !(dev <= 1e-8) {
        return Err(Error::NonlinearityMismatch { deviation: dev, t });
    }
    Ok(())
}

/// Interval used for the nonlinearity check: the solution domain, cut just
/// before the first blow-up point if there is one.
fn check_domain(sol: &RiccatiSolution) -> (f64, f64) {
    let (lo, hi) = sol.domain();
    let (lo, hi) = (lo.max(-50.0), hi.min(50.0));
    let mut out = (lo, hi);
    let mu0 = sol.mu(0.0);
    for t in sample_points((0.0, hi), 2000).into_iter().skip(1) {
        if sol.mu(t).signum() != mu0.signum() {
            out.1 = t * 0.999;
            break;
        }
    }
    for t in sample_points((0.0, lo), 2000).into_iter().skip(1) {
        if sol.mu(t).signum() != mu0.signum() {
            out.0 = t * 0.999;
            break;
        }
    }
    out
}

/// One-dimensional lens transform of `seed` by a Riccati solution.
/// The nonlinearity balance `h = λ a β² μˢ` is verified, not assumed.
pub fn lens_apply(sol: &RiccatiSolution, seed: &SeedSolution, coeffs: &CoefficientSet) -> Result<ExactSolution> {
    if coeffs.dimension != 1 {
        return Err(Error::TargetMismatch("lens_apply needs a 1D equation".into()));
    }
    check_target(sol.params.l0, seed, coeffs)?;
    let dom = check_domain(sol);
    check_balance(sol, coeffs, seed.target.lambda, coeffs.s, dom)?;
    let s = sol.clone();
    let u = seed.clone();
    let kg = offset_phase(coeffs);
    let frame = move |t: f64| -> Slice {
        let p = s.phases(t);
        let amp = p.mu.abs().sqrt().recip();
        let k = p.kappa + kg(t);
        let u = u.clone();
        Box::new(move |x: f64, _y: f64| {
            let phase = p.alpha * x * x + p.delta * x + k;
            Complex64::from_polar(amp, phase) * u.eval(p.gamma, p.beta * x + p.eps)
        })
    };
    let kind = if sol.gauge_lambda().is_some() { "riccati_gauge" } else { "riccati" };
    Ok(ExactSolution::new(
        frame,
        1,
        Provenance {
            scenario: None,
            phase_system: kind.into(),
            seed: seed.kind.to_string(),
            y: None,
        },
        sol.domain(),
        coeffs.clone(),
    ))
}

/// Seed value recovered from `ψ` by inverting the lens at `(t, ξ)`.
pub fn lens_invert(sol: &RiccatiSolution, coeffs: &CoefficientSet, psi: &ExactSolution, t: f64, xi: f64) -> Complex64 {
    let p = sol.phases(t);
    let x = (xi - p.eps) / p.beta;
    let k = p.kappa + offset_phase(coeffs)(t);
    psi.psi(t, x) * Complex64::from_polar(p.mu.abs().sqrt(), -(p.alpha * x * x + p.delta * x + k))
}

/// Spatially homogeneous-modulus solution `μ^{-1/2} e^{i(αx² + δx + κ)}`
/// with `κ` absorbing the nonlinearity (`κ' = gδ - aδ² - h/μˢ`).
pub fn plane_wave(sol: &RiccatiSolution, coeffs: &CoefficientSet) -> Result<ExactSolution> {
    if coeffs.dimension != 1 {
        return Err(Error::TargetMismatch("plane_wave needs a 1D equation".into()));
    }
    let nk = kappa_nonlinear(sol, coeffs)?;
    let s = sol.clone();
    let kg = offset_phase(coeffs);
    let kappa = nk.kappa.clone();
    let frame = move |t: f64| -> Slice {
        let p = s.phases(t);
        let amp = p.mu.abs().sqrt().recip();
        let k = kappa.eval(t) + kg(t);
        Box::new(move |x: f64, _y: f64| Complex64::from_polar(amp, p.alpha * x * x + p.delta * x + k))
    };
    Ok(ExactSolution::new(
        frame,
        1,
        Provenance {
            scenario: None,
            phase_system: "riccati_nonlinear_kappa".into(),
            seed: "unit".into(),
            y: None,
        },
        nk.domain,
        coeffs.clone(),
    ))
}

/// Soliton `ψ_y = F(βx + 2γy + ε)/√μ · e^{i(αx² + βxy + γy² + δx + εy + κ + ξ)}`
/// of the balanced equation.
pub fn soliton_assemble(sol: &ErmakovSolution, profile: &ProfileSolution, y: f64) -> Result<ExactSolution> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if !close(profile.xi0, sol.xi0) || !close(profile.h0, sol.h0) {
        return Err(Error::TargetMismatch(format!(
            "profile constants (xi0 = {}, h0 = {}) differ from the solution's ({}, {})",
            profile.xi0, profile.h0, sol.xi0, sol.h0
        )));
    }
    if sol.params.l0 != 1.0 {
        return Err(Error::TargetMismatch("soliton assembly requires l0 = +1".into()));
    }
    let base = sol.kernel().coefficients().clone();
    if base.dimension != 1 {
        return Err(Error::TargetMismatch("soliton assembly needs a 1D equation".into()));
    }
    let coeffs = balanced_coefficients(&base, sol);
    let s = sol.clone();
    let f = profile.clone();
    let kg = offset_phase(&base);
    let g0 = sol.params.gamma0_init;
    let xi0 = sol.xi0;
    let frame = move |t: f64| -> Slice {
        let p = s.phases(t);
        let amp = p.mu.abs().sqrt().recip();
        let k = p.kappa + xi0 * (p.gamma - g0) + kg(t);
        let f = f.clone();
        Box::new(move |x: f64, _| {
            let z = p.beta * x + 2.0 * p.gamma * y + p.eps;
            let phase = p.alpha * x * x + p.beta * x * y + p.gamma * y * y + p.delta * x + p.eps * y + k;
            Complex64::from_polar(amp * f.eval(z), phase)
        })
    };
    Ok(ExactSolution::new(
        frame,
        1,
        Provenance {
            scenario: None,
            phase_system: "ermakov".into(),
            seed: "profile".into(),
            y: Some(y),
        },
        sol.kernel().domain,
        coeffs,
    ))
}

/// Two-dimensional lens transform. `sol1`, `sol2` are the Riccati solutions
/// of the two axes (built from [`axis_coefficients`]); they must share
/// `α, β, γ, μ`.
pub fn transform_2d(
    sol1: &RiccatiSolution,
    sol2: &RiccatiSolution,
    seed: &SeedSolution,
    coeffs: &CoefficientSet,
) -> Result<ExactSolution> {
    if coeffs.dimension != 2 {
        return Err(Error::TargetMismatch("transform_2d needs a 2D equation".into()));
    }
    if sol1.params.l0 != sol2.params.l0 {
        return Err(Error::InvalidParameter("axis solutions use different l0".into()));
    }
    check_target(sol1.params.l0, seed, coeffs)?;
    let (lo, hi) = sol1.domain();
    for t in sample_points((lo.max(-50.0), hi.min(50.0)), 50) {
        let (a, b) = (sol1.phases(t), sol2.phases(t));
        let same = |u: f64, v: f64| (u - v).abs() <= 1e-10 * u.abs().max(v.abs()).max(1.0) || (u.is_nan() && v.is_nan());
        if !(same(a.alpha, b.alpha) && same(a.beta, b.beta) && same(a.gamma, b.gamma) && same(a.mu, b.mu)) {
            return Err(Error::InvalidParameter(format!(
                "axis solutions disagree in alpha/beta/gamma/mu at t = {t}"
            )));
        }
    }
    let dom = check_domain(sol1);
    check_balance(sol1, coeffs, seed.target.lambda, 2.0 * coeffs.s, dom)?;
    let (s1, s2) = (sol1.clone(), sol2.clone());
    let u = seed.clone();
    let kg = offset_phase(coeffs);
    let frame = move |t: f64| -> Slice {
        let p = s1.phases(t);
        let q = s2.phases(t);
        let amp = p.mu.abs().recip();
        let k = p.kappa + q.kappa + kg(t);
        let u = u.clone();
        Box::new(move |x: f64, y: f64| {
            let phase = p.alpha * (x * x + y * y) + p.delta * x + q.delta * y + k;
            Complex64::from_polar(amp, phase) * u.eval2(p.gamma, p.beta * x + p.eps, p.beta * y + q.eps)
        })
    };
    Ok(ExactSolution::new(
        frame,
        2,
        Provenance {
            scenario: None,
            phase_system: "riccati_2d".into(),
            seed: seed.kind.to_string(),
            y: None,
        },
        sol1.domain(),
        coeffs.clone(),
    ))
}

/// Blow-up solution from the pseudoconformal transform of the 2D cubic
/// ground state; `λ` is read off the nonlinearity balance.
pub fn pseudoconformal_blowup(
    sol1: &RiccatiSolution,
    sol2: &RiccatiSolution,
    coeffs: &CoefficientSet,
) -> Result<ExactSolution> {
    let (lo, hi) = check_domain(sol1);
    let t = 0.5 * (lo + hi);
    let p = sol1.phases(t);
    let lambda = coeffs.h.eval(t) / (coeffs.a.eval(t) * p.beta * p.beta * p.mu * p.mu);
    let mut params = std::collections::BTreeMap::new();
    params.insert("l0".to_string(), sol1.params.l0);
    params.insert("lambda".to_string(), lambda);
    let seed = build_seed(SeedKind::Pseudoconformal, &params)?;
    transform_2d(sol1, sol2, &seed, coeffs)
}

/// Parameters of the closed-form soliton family with `a = b = 1/2`, `c₀ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyParams {
    pub h0: f64,
    pub mu0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub gamma0: f64,
    pub delta0: f64,
    pub eps0: f64,
    pub kappa0: f64,
    /// Profile constant; defaults to `h₀/2` (h₀ < 0) or `h₀` (h₀ > 0), which
    /// gives unit-amplitude, unit-width sech / tanh profiles.
    pub xi0: Option<f64>,
    pub c0_profile: Option<f64>,
    pub y: f64,
}

impl FamilyParams {
    pub fn new(h0: f64, beta0: f64) -> Self {
        FamilyParams {
            h0,
            mu0: 1.0,
            alpha0: 0.0,
            beta0,
            gamma0: 0.0,
            delta0: 0.0,
            eps0: 0.0,
            kappa0: 0.0,
            xi0: None,
            c0_profile: None,
            y: 0.0,
        }
    }

    pub fn profile_constants(&self) -> (f64, f64) {
        let xi0 = self.xi0.unwrap_or(if self.h0 < 0.0 { self.h0 / 2.0 } else { self.h0 });
        let c0 = self
            .c0_profile
            .unwrap_or(if self.h0 < 0.0 { 0.0 } else { xi0 * xi0 / (2.0 * self.h0) });
        (xi0, c0)
    }
}

/// Closed-form phases of the family.
#[derive(Debug, Clone, Copy)]
pub struct FamilyPhases {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub kappa: f64,
    pub mu: f64,
    pub xi: f64,
}

pub fn family_phases(p: &FamilyParams, t: f64) -> FamilyPhases {
    let (sn, cs) = t.sin_cos();
    let (b0, a0, d0, e0) = (p.beta0, p.alpha0, p.delta0, p.eps0);
    let r = 2.0 * a0 * sn + cs;
    let q = b0.powi(4) * sn * sn + r * r;
    // Continuous angle: the image of (sin, cos) turns by π every π in t.
    let m = (t / PI).round();
    let tr = t - m * PI;
    let theta = (b0 * b0 * tr.sin()).atan2(2.0 * a0 * tr.sin() + tr.cos()) + m * PI;
    let gamma = p.gamma0 - 0.5 * theta;
    let (xi0, _) = p.profile_constants();
    FamilyPhases {
        alpha: (a0 * (2.0 * t).cos() + (2.0 * t).sin() * (b0.powi(4) + 4.0 * a0 * a0 - 1.0) / 4.0) / q,
        beta: b0 / q.sqrt(),
        gamma,
        delta: (d0 * r + e0 * b0.powi(3) * sn) / q,
        eps: (e0 * r - b0 * d0 * sn) / q.sqrt(),
        kappa: p.kappa0
            + sn * sn * (e0 * b0 * b0 * (a0 * e0 - b0 * d0) - a0 * d0 * d0) / q
            + 0.25 * (2.0 * t).sin() * (e0 * e0 * b0 * b0 - d0 * d0) / q,
        mu: p.mu0 * q.sqrt(),
        xi: xi0 * (gamma - p.gamma0),
    }
}

/// The family equation's coefficients and its soliton `ψ_y`, from closed forms.
pub fn family_solution(p: FamilyParams) -> Result<(CoefficientSet, ExactSolution)> {
    if p.beta0 == 0.0 || p.mu0 <= 0.0 {
        return Err(Error::InvalidParameter("family needs beta(0) != 0 and mu(0) > 0".into()));
    }
    let (xi0, c0) = p.profile_constants();
    let profile = elliptic_profile(xi0, p.h0, c0)?;
    let mut coeffs = CoefficientSet::free(0.5);
    let pp = p;
    coeffs.b = TimeFunction::from_fn("(1 - beta^4)/2", move |t| 0.5 * (1.0 - family_phases(&pp, t).beta.powi(4)));
    coeffs.f = TimeFunction::from_fn("beta^3 eps", move |t| {
        let f = family_phases(&pp, t);
        f.beta.powi(3) * f.eps
    });
    coeffs.big_g = TimeFunction::from_fn("-(beta eps)^2/2", move |t| {
        let f = family_phases(&pp, t);
        -0.5 * (f.beta * f.eps).powi(2)
    });
    coeffs.h = TimeFunction::from_fn("h0 beta^2 mu / 2", move |t| {
        let f = family_phases(&pp, t);
        0.5 * pp.h0 * f.beta * f.beta * f.mu
    });
    let y = p.y;
    let frame = move |t: f64| -> Slice {
        let f = family_phases(&p, t);
        let amp = f.mu.sqrt().recip();
        let profile = profile.clone();
        Box::new(move |x: f64, _| {
            let z = f.beta * x + 2.0 * f.gamma * y + f.eps;
            let phase = f.alpha * x * x + f.beta * x * y + f.gamma * y * y + f.delta * x + f.eps * y + f.kappa + f.xi;
            Complex64::from_polar(amp * profile.eval(z), phase)
        })
    };
    let sol = ExactSolution::new(
        frame,
        1,
        Provenance {
            scenario: None,
            phase_system: "family_closed_form".into(),
            seed: "profile".into(),
            y: Some(y),
        },
        (f64::NEG_INFINITY, f64::INFINITY),
        coeffs.clone(),
    );
    Ok((coeffs, sol))
}
