//! Riccati system
//!
//! ```text
//! α' + b + 2cα + 4aα² = 0          β' + (c + 4aα)β = 0
//! γ' + l₀ a β² = 0                  δ' + (c + 4aα)δ = f + 2αg
//! ε' = (g - 2aδ)β                   κ' = gδ - aδ²
//! ```
//!
//! with `α = μ'/(4aμ) - d/(2a)`. Solutions are built from the fundamental
//! basis of the characteristic equation (kernel + multiparameter form) or, in
//! the gauge `a = -l₀, β = 1, γ = t, ε = 0`, directly from the coefficients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::characteristic::{solve_basis_with, BasisOptions, CharacteristicBasis, ClosedBasis, QD};
use crate::coeffs::{CoefficientSet, TimeFunction};
use crate::error::{Error, Result};
use crate::numerics::{first_root, integrate};

/// Initial data of the multiparameter family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiParameters {
    pub mu0_init: f64,
    pub alpha0_init: f64,
    pub beta0_init: f64,
    pub gamma0_init: f64,
    pub delta0_init: f64,
    pub eps0_init: f64,
    pub kappa0_init: f64,
    pub l0: f64,
}

impl Default for RiccatiParameters {
    fn default() -> Self {
        RiccatiParameters {
            mu0_init: 1.0,
            alpha0_init: 0.0,
            beta0_init: 1.0,
            gamma0_init: 0.0,
            delta0_init: 0.0,
            eps0_init: 0.0,
            kappa0_init: 0.0,
            l0: 1.0,
        }
    }
}

impl RiccatiParameters {
    pub fn validate(&self) -> Result<()> {
        if self.mu0_init == 0.0 || !self.mu0_init.is_finite() {
            return Err(Error::InvalidParameter("mu(0) must be nonzero".into()));
        }
        if self.beta0_init == 0.0 || !self.beta0_init.is_finite() {
            return Err(Error::InvalidParameter("beta(0) must be nonzero".into()));
        }
        if self.l0 != 1.0 && self.l0 != -1.0 {
            return Err(Error::InvalidParameter(format!("l0 = {} must be +1 or -1", self.l0)));
        }
        let all = [
            self.alpha0_init,
            self.gamma0_init,
            self.delta0_init,
            self.eps0_init,
            self.kappa0_init,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite initial data".into()));
        }
        Ok(())
    }
}

/// Values of the phase functions at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Phases {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eps: f64,
    pub kappa: f64,
    pub mu: f64,
}

/// Anything that provides the quadratic-phase functions of a lens transform.
pub trait PhaseSource: Send + Sync {
    fn phases(&self, t: f64) -> Phases;
    /// `dμ/dt`, used to check the substitution identity.
    fn mu_prime(&self, t: f64) -> f64;
    fn domain(&self) -> (f64, f64);
}

/// Kernel functions `α₀ … κ₀` and `w`.
#[derive(Debug, Clone)]
pub struct RiccatiKernel {
    pub basis: CharacteristicBasis,
    coeffs: CoefficientSet,
    forced: bool,
    /// Interval on which the kernel is defined.
    pub domain: (f64, f64),
    /// Reason the domain was cut short of the basis domain, if it was.
    pub flagged: Option<String>,
}

/// Builds the kernel. With nonzero forcing (`f` or `g`) the quadratures are
/// integrated together with the basis in a single ODE pass and the domain
/// stops at the first zero of `μ₀` or `μ₀'`.
pub fn riccati_kernel(basis: &CharacteristicBasis, coeffs: &CoefficientSet, tol: f64) -> Result<RiccatiKernel> {
    let forced = !(coeffs.f.is_zero() && coeffs.g.is_zero());
    let mut basis = basis.clone();
    let mut flagged = basis.truncated.clone();
    if forced && basis.traj.fwd.dim() <= QD {
        let mut o = BasisOptions::new(basis.domain.1);
        o.t_min = basis.domain.0;
        o.tol = tol;
        o.mu1_init = basis.mu1_init;
        o.mu0_slope = Some(basis.mu0_slope);
        o.quadratures = true;
        let closed = basis.closed.clone();
        let mut fresh = solve_basis_with(coeffs, &o)?;
        if let Some(c) = closed {
            fresh.closed = Some(ClosedBasis { mu0: c.mu0, mu1: c.mu1 });
            fresh.source = basis.source;
            fresh.closed_form_deviation = basis.closed_form_deviation;
        }
        flagged = fresh.truncated.clone().or(flagged);
        basis = fresh;
    }
    let mut domain = basis.domain;
    if forced {
        let b = basis.clone();
        let span = domain.1;
        if span > 0.0 {
            let probe = |t: f64| b.mu0(t);
            let start = (span * 1e-6).min(1e-6);
            if let Some((root, _, _)) = first_root(probe, start, span, 2000, 1e-14)? {
                domain.1 = root;
                flagged = Some(format!("caustic: mu0 vanishes at t = {root:.9}"));
            }
        }
        if domain.0 < 0.0 {
            let probe = |t: f64| b.mu0(t);
            let start = (domain.0 * 1e-6).max(-1e-6);
            if let Some((root, _, _)) = first_root(probe, start, domain.0, 2000, 1e-14)? {
                domain.0 = root;
                flagged = Some(format!("caustic: mu0 vanishes at t = {root:.9}"));
            }
        }
    }
    Ok(RiccatiKernel {
        basis,
        coeffs: coeffs.clone(),
        forced,
        domain,
        flagged,
    })
}

struct StdKernel {
    m0: f64,
    m0p: f64,
    m1: f64,
    m1p: f64,
    w: f64,
    delta0: f64,
    eps0: f64,
    kappa0: f64,
}

impl RiccatiKernel {
    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn is_forced(&self) -> bool {
        self.forced
    }

    pub fn w(&self, t: f64) -> f64 {
        self.basis.w(t)
    }

    pub fn alpha0(&self, t: f64) -> f64 {
        let a = self.coeffs.a.eval(t);
        self.basis.mu0p(t) / (4.0 * a * self.basis.mu0(t)) - self.coeffs.d.eval(t) / (2.0 * a)
    }

    pub fn beta0(&self, t: f64) -> f64 {
        -self.basis.w(t) / self.basis.mu0(t)
    }

    pub fn gamma0(&self, t: f64) -> f64 {
        let b = &self.basis;
        b.d0 / (2.0 * b.a0) + b.mu1(t) / (2.0 * b.mu1_init * b.mu0(t))
    }

    /// `γ₀'(t) = W[μ₀, μ₁] / (2 μ₁(0) μ₀²)`.
    pub fn gamma0_prime(&self, t: f64) -> f64 {
        let b = &self.basis;
        let m0 = b.mu0(t);
        b.wronskian(t) / (2.0 * b.mu1_init * m0 * m0)
    }

    pub fn delta0(&self, t: f64) -> f64 {
        self.std(t).delta0
    }

    pub fn eps0(&self, t: f64) -> f64 {
        self.std(t).eps0 / self.basis.scale()
    }

    pub fn kappa0(&self, t: f64) -> f64 {
        self.std(t).kappa0
    }

    fn std(&self, t: f64) -> StdKernel {
        let b = &self.basis;
        let k = b.scale();
        let m0 = b.mu0(t) / k;
        let m0p = b.mu0p(t) / k;
        let w = b.w(t);
        let mut out = StdKernel {
            m0,
            m0p,
            m1: b.mu1(t),
            m1p: b.mu1p(t),
            w,
            delta0: 0.0,
            eps0: 0.0,
            kappa0: 0.0,
        };
        if !self.forced {
            return out;
        }
        let a = self.coeffs.a.eval(t);
        let tr = &b.traj;
        let i_delta = tr.component(t, QD) / k;
        let q1 = k * tr.component(t, QD + 1);
        let q2 = k * tr.component(t, QD + 2);
        let q3 = tr.component(t, QD + 3);
        let q4 = tr.component(t, QD + 4);
        let delta0 = if t.abs() < 1e-12 {
            // Removable limit: g/(2a) + (f - dg/a) μ₀/μ₀'.
            let g = self.coeffs.g.eval(t);
            let f = self.coeffs.f.eval(t);
            let d = self.coeffs.d.eval(t);
            g / (2.0 * a) + (f - d * g / a) * m0 / m0p
        } else {
            w * i_delta / m0
        };
        out.delta0 = delta0;
        out.eps0 = -2.0 * a * w * delta0 / m0p + 8.0 * q1 + 2.0 * q2;
        out.kappa0 = a * m0 * delta0 * delta0 / m0p - 4.0 * q3 - 2.0 * q4;
        out
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Multi { kernel: Arc<RiccatiKernel>, alpha_eff: f64 },
    Alternative(Arc<Alternative>),
}

/// A solution `(α, β, γ, δ, ε, κ, μ)` of the Riccati system.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub params: RiccatiParameters,
    kind: Kind,
}

/// Multiparameter solution. `μ` is evaluated in the regularised product
/// `μ(0)[2α(0)μ₀ + d(0)μ₀/a(0) + μ₁/μ₁(0)]`.
pub fn riccati_multiparameter(kernel: &RiccatiKernel, params: RiccatiParameters) -> Result<RiccatiSolution> {
    params.validate()?;
    let b = &kernel.basis;
    let k = b.scale();
    let alpha_eff = k * params.alpha0_init + (k - 1.0) * b.d0 / (2.0 * b.a0);
    Ok(RiccatiSolution {
        params,
        kind: Kind::Multi {
            kernel: Arc::new(kernel.clone()),
            alpha_eff,
        },
    })
}

impl RiccatiSolution {
    pub fn kernel(&self) -> Option<&RiccatiKernel> {
        match &self.kind {
            Kind::Multi { kernel, .. } => Some(kernel),
            Kind::Alternative(_) => None,
        }
    }

    /// `λ` of the gauge solution (`h = -l₀ λ μ`).
    pub fn gauge_lambda(&self) -> Option<f64> {
        match &self.kind {
            Kind::Alternative(alt) => Some(alt.lambda),
            Kind::Multi { .. } => None,
        }
    }

    /// The bracket `r = μ/μ(0)`, whose zeros are blow-up points.
    pub fn r(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Multi { kernel, alpha_eff } => {
                let s = kernel.std(t);
                let b = &kernel.basis;
                2.0 * alpha_eff * s.m0 + b.d0 * s.m0 / b.a0 + s.m1 / b.mu1_init
            }
            Kind::Alternative(alt) => alt.mu_ratio(t),
        }
    }

    pub fn alpha(&self, t: f64) -> f64 {
        self.phases(t).alpha
    }

    pub fn beta(&self, t: f64) -> f64 {
        self.phases(t).beta
    }

    pub fn gamma(&self, t: f64) -> f64 {
        self.phases(t).gamma
    }

    pub fn delta(&self, t: f64) -> f64 {
        self.phases(t).delta
    }

    pub fn eps(&self, t: f64) -> f64 {
        self.phases(t).eps
    }

    pub fn kappa(&self, t: f64) -> f64 {
        self.phases(t).kappa
    }

    pub fn mu(&self, t: f64) -> f64 {
        self.params.mu0_init * self.r(t)
    }

    pub fn to_csv(&self, ts: &[f64]) -> String {
        phases_csv(self, ts)
    }
}

pub(crate) fn phases_csv(src: &dyn PhaseSource, ts: &[f64]) -> String {
    let mut out = String::from("t,alpha,beta,gamma,delta,eps,kappa,mu\n");
    for &t in ts {
        let p = src.phases(t);
        out.push_str(&format!(
            "{t:.12e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
            p.alpha, p.beta, p.gamma, p.delta, p.eps, p.kappa, p.mu
        ));
    }
    out
}

impl PhaseSource for RiccatiSolution {
    fn phases(&self, t: f64) -> Phases {
        let p = &self.params;
        match &self.kind {
            Kind::Multi { kernel, alpha_eff } => {
                let s = kernel.std(t);
                let b = &kernel.basis;
                let c = &kernel.coeffs;
                let a = c.a.eval(t);
                let d = c.d.eval(t);
                let r = 2.0 * alpha_eff * s.m0 + b.d0 * s.m0 / b.a0 + s.m1 / b.mu1_init;
                let rp = 2.0 * alpha_eff * s.m0p + b.d0 * s.m0p / b.a0 + s.m1p / b.mu1_init;
                let dd = p.delta0_init + s.eps0;
                Phases {
                    // Equal to α₀ - β₀²/(4(α(0) + γ₀)) but free of the 0/0 at t = 0.
                    alpha: rp / (4.0 * a * r) - d / (2.0 * a),
                    beta: p.beta0_init * s.w / r,
                    gamma: p.l0 * p.gamma0_init - p.l0 * p.beta0_init.powi(2) * s.m0 / (2.0 * r),
                    delta: s.delta0 + s.w * dd / r,
                    eps: p.eps0_init - p.beta0_init * dd * s.m0 / r,
                    kappa: p.kappa0_init + s.kappa0 - dd * dd * s.m0 / (2.0 * r),
                    mu: p.mu0_init * r,
                }
            }
            Kind::Alternative(alt) => alt.phases(t, p),
        }
    }

    fn mu_prime(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Multi { kernel, alpha_eff } => {
                let s = kernel.std(t);
                let b = &kernel.basis;
                self.params.mu0_init * (2.0 * alpha_eff * s.m0p + b.d0 * s.m0p / b.a0 + s.m1p / b.mu1_init)
            }
            Kind::Alternative(alt) => {
                let c = &alt.coeffs;
                self.mu(t) * (2.0 * c.d.eval(t) - c.c.eval(t))
            }
        }
    }

    fn domain(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Multi { kernel, .. } => kernel.domain,
            Kind::Alternative(alt) => alt.domain,
        }
    }
}

/// `κ` including the nonlinear term: `κ' = gδ - aδ² - h/μˢ`.
#[derive(Clone)]
pub struct NonlinearKappa {
    pub kappa: TimeFunction,
    /// Interval where `μ > 0`, on which the integrand is finite.
    pub domain: (f64, f64),
}

pub fn kappa_nonlinear(solution: &RiccatiSolution, coeffs: &CoefficientSet) -> Result<NonlinearKappa> {
    let (lo, hi) = solution.domain();
    if solution.mu(0.0) <= 0.0 {
        return Err(Error::InvalidParameter("mu(0) must be positive for mu^s".into()));
    }
    let mut domain = (lo, hi);
    let sol = solution.clone();
    if let Some((root, _, _)) = first_root(|t| sol.mu(t), 0.0, hi, 4000, 1e-14)? {
        domain.1 = root;
    }
    if lo < 0.0 {
        if let Some((root, _, _)) = first_root(|t| sol.mu(t), 0.0, lo, 4000, 1e-14)? {
            domain.0 = root;
        }
    }
    let c = coeffs.clone();
    let s = coeffs.s;
    let k0 = solution.params.kappa0_init;
    let integrand = move |t: f64| {
        let p = sol.phases(t);
        c.g.eval(t) * p.delta - c.a.eval(t) * p.delta * p.delta - c.h.eval(t) / p.mu.powf(s)
    };
    let kappa = TimeFunction::from_fn("kappa_nonlinear", move |t| {
        if t < domain.0 || t > domain.1 {
            return f64::NAN;
        }
        k0 + integrate(&integrand, 0.0, t, 1e-12).unwrap_or(f64::NAN)
    });
    Ok(NonlinearKappa { kappa, domain })
}

/// `∫₀ᵗ f`, NaN when the quadrature fails.
pub(crate) fn cumulative(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    integrate(f, 0.0, t, 1e-13).unwrap_or(f64::NAN)
}

#[derive(Debug)]
struct Alternative {
    coeffs: CoefficientSet,
    g0: f64,
    lambda: f64,
    domain: (f64, f64),
}

impl Alternative {
    fn mu_ratio(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        cumulative(|s| 2.0 * c.d.eval(s) - c.c.eval(s), t).exp()
    }

    fn g(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        if c.f.is_zero() {
            return if c.g.is_zero() && self.g0 == 0.0 {
                0.0
            } else {
                self.g0 * (-cumulative(|s| c.c.eval(s), t)).exp()
            };
        }
        c.g.eval(t)
    }

    fn phases(&self, t: f64, p: &RiccatiParameters) -> Phases {
        let c = &self.coeffs;
        let l0 = p.l0;
        let g = self.g(t);
        let kappa = if c.g.is_zero() && self.g0 == 0.0 {
            p.kappa0_init
        } else {
            p.kappa0_init - l0 / 4.0 * cumulative(|s| self.g(s).powi(2), t)
        };
        Phases {
            alpha: l0 * c.c.eval(t) / 4.0,
            beta: 1.0,
            gamma: t,
            delta: -l0 * g / 2.0,
            eps: 0.0,
            kappa,
            mu: p.mu0_init * self.mu_ratio(t),
        }
    }
}

/// Gauge solution with `a = -l₀`, `β ≡ 1`, `γ = t`, `ε ≡ 0`.
///
/// Checks `c' + c² + 4l₀b = 0`, that `g` obeys `g' + 2l₀f + cg = 0` with the
/// given `g(0)`, and that `h/μ` is constant (yielding `λ = -l₀ h/μ`).
pub fn alternative_solve(
    coeffs: &CoefficientSet,
    g0: f64,
    kappa0: f64,
    mu0: f64,
    l0: f64,
    domain: (f64, f64),
) -> Result<RiccatiSolution> {
    let params = RiccatiParameters {
        mu0_init: mu0,
        kappa0_init: kappa0,
        l0,
        ..Default::default()
    };
    params.validate()?;
    let samples = sample_points(domain, 400);
    // Dispersion must be the constant -l0.
    for &t in &samples {
        let a = coeffs.a.eval(t);
        if (a + l0).abs() > 1e-12 {
            return Err(Error::Consistency {
                what: format!("gauge condition a = -l0 (a({t}) = {a})"),
                residual: (a + l0).abs(),
            });
        }
    }
    let opt1 = opt1_residual(coeffs, l0, &samples);
    if opt1 > 1e-8 {
        return Err(Error::Consistency {
            what: "c' + c^2 + 4 l0 b = 0".into(),
            residual: opt1,
        });
    }
    if !(coeffs.f.is_zero() && coeffs.g.is_zero()) {
        let gc = coeffs.g.eval(0.0);
        let mut worst = (gc - g0).abs();
        for &t in &samples {
            let r = coeffs.g.d1(t) + 2.0 * l0 * coeffs.f.eval(t) + coeffs.c.eval(t) * coeffs.g.eval(t);
            worst = worst.max(r.abs() / coeffs.g.eval(t).abs().max(1.0));
        }
        if worst > 1e-8 {
            return Err(Error::Consistency {
                what: "g' + 2 l0 f + c g = 0 with the given g(0)".into(),
                residual: worst,
            });
        }
    }
    let mut alt = Alternative {
        coeffs: coeffs.clone(),
        g0,
        lambda: 0.0,
        domain,
    };
    // λ from h = -l0 λ μ.
    let mut lambda: Option<f64> = None;
    let mut worst = 0.0f64;
    for &t in &samples {
        let mu = mu0 * alt.mu_ratio(t);
        let lam = -l0 * coeffs.h.eval(t) / mu;
        match lambda {
            None => lambda = Some(lam),
            Some(l) => worst = worst.max((lam - l).abs() / l.abs().max(1e-300)),
        }
    }
    let lambda = lambda.unwrap_or(0.0);
    if worst > 1e-8 && lambda != 0.0 {
        return Err(Error::Consistency {
            what: "h / mu constant (lambda derivation)".into(),
            residual: worst,
        });
    }
    alt.lambda = lambda;
    Ok(RiccatiSolution {
        params,
        kind: Kind::Alternative(Arc::new(alt)),
    })
}

pub fn opt1_residual(coeffs: &CoefficientSet, l0: f64, samples: &[f64]) -> f64 {
    samples
        .iter()
        .map(|&t| {
            let c = coeffs.c.eval(t);
            let r = coeffs.c.d1(t) + c * c + 4.0 * l0 * coeffs.b.eval(t);
            r.abs() / (c * c).max(1.0)
        })
        .fold(0.0, f64::max)
}

pub(crate) fn sample_points(domain: (f64, f64), n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| domain.0 + (domain.1 - domain.0) * i as f64 / n as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::solve_basis;

    fn free_kernel() -> RiccatiKernel {
        let c = CoefficientSet::free(0.5);
        let b = solve_basis(&c, 4.0, 1e-11).unwrap();
        riccati_kernel(&b, &c, 1e-11).unwrap()
    }

    #[test]
    fn free_particle_kernel() {
        let k = free_kernel();
        for t in [0.3, 1.0, 3.7] {
            assert!((k.alpha0(t) - 0.5 / t).abs() < 1e-10);
            assert!((k.gamma0(t) - 0.5 / t).abs() < 1e-10);
            assert!((k.beta0(t) + 1.0 / t).abs() < 1e-10);
            assert_eq!((k.delta0(t), k.eps0(t), k.kappa0(t)), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn example1_closed_forms() {
        let k = free_kernel();
        let p = RiccatiParameters {
            alpha0_init: 1.0,
            beta0_init: 0.7,
            gamma0_init: 0.2,
            delta0_init: 0.3,
            eps0_init: -0.4,
            kappa0_init: 0.1,
            ..Default::default()
        };
        let s = riccati_multiparameter(&k, p).unwrap();
        let t = 1.0;
        let q = 1.0 + 2.0 * t;
        assert!((s.alpha(t) - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.beta(t) - 0.7 / 3.0).abs() < 1e-12);
        assert!((s.delta(t) - 0.3 / q).abs() < 1e-12);
        assert!((s.gamma(t) - (0.2 - 0.49 * t / (2.0 * q))).abs() < 1e-12);
        assert!((s.eps(t) - (-0.4 - 0.7 * 0.3 * t / q)).abs() < 1e-12);
        assert!((s.kappa(t) - (0.1 - 0.09 * t / (2.0 * q))).abs() < 1e-12);
        assert!((s.mu(t) - q).abs() < 1e-12);
    }

    #[test]
    fn l0_flip_negates_gamma() {
        let k = free_kernel();
        let mut p = RiccatiParameters {
            alpha0_init: 0.3,
            beta0_init: 1.4,
            ..Default::default()
        };
        let plus = riccati_multiparameter(&k, p).unwrap();
        p.l0 = -1.0;
        let minus = riccati_multiparameter(&k, p).unwrap();
        for t in [0.2, 1.1, 3.0] {
            assert!((plus.gamma(t) + minus.gamma(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn example1_nonlinear_kappa() {
        let mut c = CoefficientSet::free(0.5);
        c.h = TimeFunction::constant(1.3);
        let b = solve_basis(&c, 4.0, 1e-11).unwrap();
        let k = riccati_kernel(&b, &c, 1e-11).unwrap();
        let a0 = 0.2;
        let p = RiccatiParameters {
            mu0_init: 0.5,
            alpha0_init: a0,
            ..Default::default()
        };
        let s = riccati_multiparameter(&k, p).unwrap();
        let nk = kappa_nonlinear(&s, &c).unwrap();
        for t in [0.5, 2.0, 3.5] {
            let expected = -(1.3 / a0) * (1.0 + 2.0 * t * a0).ln();
            assert!((nk.kappa.eval(t) - expected).abs() < 1e-10);
        }
        c.s = 1.5;
        let nk = kappa_nonlinear(&s, &c).unwrap();
        let t: f64 = 2.0;
        let xs = ((0.5 + t * a0).powf(-0.5) - 0.5f64.powf(-0.5)) / -0.5;
        assert!((nk.kappa.eval(t) + 1.3 / a0 * xs).abs() < 1e-10);
    }

    #[test]
    fn sch1_alternative() {
        let c = CoefficientSet::from_exprs(
            &[
                ("a", "1"),
                ("b", "(sin(t)^2 - cos(t))/4"),
                ("c", "-sin(t)"),
                ("d", "sin(t)"),
                ("h", "-3*exp(3 - 3*cos(t))"),
            ],
            1.0,
            -1.0,
            1,
        )
        .unwrap();
        let s = alternative_solve(&c, 0.0, 0.0, 1.0, -1.0, (0.0, 6.0)).unwrap();
        assert!((s.gauge_lambda().unwrap() + 3.0).abs() < 1e-10);
        for t in [0.4, 2.0, 5.5] {
            let p = s.phases(t);
            assert!((p.alpha - t.sin() / 4.0).abs() < 1e-14);
            assert_eq!(p.delta, 0.0);
            assert!((p.mu - (3.0 * (1.0 - t.cos())).exp()).abs() < 1e-11 * p.mu);
        }
    }

    #[test]
    fn alternative_rejects_inconsistent_trap() {
        let c = CoefficientSet::from_exprs(&[("a", "1"), ("b", "1"), ("c", "0")], 1.0, -1.0, 1).unwrap();
        assert!(matches!(
            alternative_solve(&c, 0.0, 0.0, 1.0, -1.0, (0.0, 1.0)),
            Err(Error::Consistency { .. })
        ));
    }

    #[test]
    fn alternative_free_translation() {
        // f = 0, c = 0: g stays g(0), κ = κ(0) - l0 g(0)² t / 4.
        let c = CoefficientSet::from_exprs(&[("a", "-1"), ("g", "0.6")], 1.0, 1.0, 1).unwrap();
        let s = alternative_solve(&c, 0.6, 0.2, 1.0, 1.0, (0.0, 2.0)).unwrap();
        let t = 1.7;
        assert!((s.kappa(t) - (0.2 - 0.36 * t / 4.0)).abs() < 1e-12);
        assert!((s.delta(t) + 0.3).abs() < 1e-14);
    }

    fn rica_residuals(s: &RiccatiSolution, c: &CoefficientSet, t: f64) -> [f64; 6] {
        let h = 1e-4;
        let d = |f: &dyn Fn(f64) -> f64| (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
        let p = s.phases(t);
        let (a, b, cc, f, g) = (c.a.eval(t), c.b.eval(t), c.c.eval(t), c.f.eval(t), c.g.eval(t));
        [
            d(&|t| s.alpha(t)) + b + 2.0 * cc * p.alpha + 4.0 * a * p.alpha * p.alpha,
            d(&|t| s.beta(t)) + (cc + 4.0 * a * p.alpha) * p.beta,
            d(&|t| s.gamma(t)) + s.params.l0 * a * p.beta * p.beta,
            d(&|t| s.delta(t)) + (cc + 4.0 * a * p.alpha) * p.delta - f - 2.0 * p.alpha * g,
            d(&|t| s.eps(t)) - (g - 2.0 * a * p.delta) * p.beta,
            d(&|t| s.kappa(t)) - g * p.delta + a * p.delta * p.delta,
        ]
    }

    #[test]
    fn forced_kernel_solves_riccati_system() {
        let c = CoefficientSet::from_exprs(
            &[
                ("a", "1 + 0.2*sin(t)"),
                ("b", "0.3"),
                ("c", "0.2*cos(t)"),
                ("d", "0.1"),
                ("f", "cos(t)"),
                ("g", "0.5*sin(t) + 0.2"),
            ],
            1.0,
            1.0,
            1,
        )
        .unwrap();
        let b = solve_basis(&c, 1.0, 1e-12).unwrap();
        let k = riccati_kernel(&b, &c, 1e-12).unwrap();
        assert!(k.domain.1 > 0.5);
        let p = RiccatiParameters {
            alpha0_init: 0.1,
            beta0_init: 0.8,
            gamma0_init: 0.3,
            delta0_init: -0.2,
            eps0_init: 0.4,
            kappa0_init: 0.1,
            ..Default::default()
        };
        let s = riccati_multiparameter(&k, p).unwrap();
        let p0 = s.phases(0.0);
        assert!((p0.alpha - 0.1).abs() < 1e-9);
        assert!((p0.beta - 0.8).abs() < 1e-9);
        assert!((p0.delta + 0.2).abs() < 1e-9);
        assert!((p0.eps - 0.4).abs() < 1e-9);
        assert!((p0.kappa - 0.1).abs() < 1e-9);
        for t in [0.1, 0.3, 0.45] {
            let r = rica_residuals(&s, &c, t);
            for (i, v) in r.iter().enumerate() {
                assert!(v.abs() < 1e-6, "rica{} residual {v} at t={t}", i + 1);
            }
        }
    }
}
