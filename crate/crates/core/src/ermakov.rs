//! Ermakov system: the Riccati system with right-hand sides
//! `c₀aβ⁴`, `2c₀aβ³ε`, `c₀aβ²ε²` added to the `α`, `δ`, `κ` equations.
//! For `c₀ > 0`, `μ` never vanishes, which gives periodic non-caustic
//! solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::coeffs::{CoefficientSet, TimeFunction};
use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::riccati::{phases_csv, PhaseSource, Phases, RiccatiKernel, RiccatiParameters};

/// Multiparameter solution of the Ermakov system.
#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    pub params: RiccatiParameters,
    pub c0: f64,
    pub xi0: f64,
    pub h0: f64,
    kernel: Arc<RiccatiKernel>,
    alpha_eff: f64,
    /// `(t, offset)`: the angle gains `offset` beyond `t` (away from 0).
    jumps: Vec<(f64, f64)>,
}

struct Parts {
    r: f64,
    rp: f64,
    q: f64,
    qp: f64,
    m0: f64,
    w: f64,
    dd: f64,
    delta0: f64,
    kappa0: f64,
}

pub fn ermakov_multiparameter(
    kernel: &RiccatiKernel,
    params: RiccatiParameters,
    c0: f64,
    xi0: f64,
    h0: f64,
) -> Result<ErmakovSolution> {
    params.validate()?;
    if !(c0 >= 0.0) || !c0.is_finite() {
        return Err(Error::InvalidParameter(format!("Ermakov constant c0 = {c0} must be >= 0")));
    }
    if !xi0.is_finite() || !h0.is_finite() {
        return Err(Error::InvalidParameter("xi0 and h0 must be finite".into()));
    }
    let b = &kernel.basis;
    let k = b.scale();
    let mut sol = ErmakovSolution {
        params,
        c0,
        xi0,
        h0,
        kernel: Arc::new(kernel.clone()),
        alpha_eff: k * params.alpha0_init + (k - 1.0) * b.d0 / (2.0 * b.a0),
        jumps: Vec::new(),
    };
    if c0 > 0.0 {
        sol.jumps = sol.angle_jumps()?;
    }
    Ok(sol)
}

impl ErmakovSolution {
    pub fn kernel(&self) -> &RiccatiKernel {
        &self.kernel
    }

    fn parts(&self, t: f64) -> Parts {
        let kn = &self.kernel;
        let b = &kn.basis;
        let k = b.scale();
        let p = &self.params;
        let m0 = b.mu0(t) / k;
        let m0p = b.mu0p(t) / k;
        let r = 2.0 * self.alpha_eff * m0 + b.d0 * m0 / b.a0 + b.mu1(t) / b.mu1_init;
        let rp = 2.0 * self.alpha_eff * m0p + b.d0 * m0p / b.a0 + b.mu1p(t) / b.mu1_init;
        let sc = self.c0.sqrt() * p.beta0_init * p.beta0_init;
        let (delta0, eps0, kappa0) = if kn.is_forced() {
            (kn.delta0(t), kn.eps0(t) * k, kn.kappa0(t))
        } else {
            (0.0, 0.0, 0.0)
        };
        Parts {
            r,
            rp,
            q: sc * m0,
            qp: sc * m0p,
            m0,
            w: b.w(t),
            dd: p.delta0_init + eps0,
            delta0,
            kappa0,
        }
    }

    /// Zeros of `μ₀` where `r < 0`: `atan2(q, r)` crosses its branch cut there.
    fn angle_jumps(&self) -> Result<Vec<(f64, f64)>> {
        let (lo, hi) = self.kernel.domain;
        let b = &self.kernel.basis;
        let mut out = Vec::new();
        for (from, to) in [(0.0, hi), (0.0, lo)] {
            if to == from {
                continue;
            }
            let n = 4000;
            let step = (to - from) / n as f64;
            let mut prev_t = from + step * 1e-3;
            let mut prev = b.mu0(prev_t);
            for i in 1..=n {
                let t = from + step * i as f64;
                let v = b.mu0(t);
                if prev != 0.0 && v.signum() != prev.signum() && v != 0.0 {
                    let (x0, x1) = if prev_t < t { (prev_t, t) } else { (t, prev_t) };
                    let tz = brent(|s| b.mu0(s), x0, x1, 1e-15)?;
                    if self.parts(tz).r < 0.0 {
                        // Walking away from 0: q goes prev.signum() -> v.signum().
                        let offset = if prev > 0.0 { 2.0 * PI } else { -2.0 * PI };
                        out.push((tz, offset));
                    }
                }
                prev_t = t;
                prev = v;
            }
        }
        Ok(out)
    }

    fn theta(&self, t: f64, q: f64, r: f64) -> f64 {
        let mut th = q.atan2(r);
        for &(tz, off) in &self.jumps {
            let beyond = if tz > 0.0 { t > tz } else { t < tz };
            if beyond {
                // Forward in time the offset is +off; backward it is mirrored.
                th += if tz > 0.0 { off } else { -off };
            }
        }
        th
    }

    pub fn r(&self, t: f64) -> f64 {
        self.parts(t).r
    }

    pub fn xi(&self, t: f64) -> f64 {
        self.xi0 * (self.phases(t).gamma - self.params.gamma0_init)
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
        self.phases(t).mu
    }

    pub fn to_csv(&self, ts: &[f64]) -> String {
        phases_csv(self, ts)
    }
}

impl PhaseSource for ErmakovSolution {
    fn phases(&self, t: f64) -> Phases {
        let p = &self.params;
        let c = self.kernel.coefficients();
        let a = c.a.eval(t);
        let d = c.d.eval(t);
        let s = self.parts(t);
        let c0 = self.c0;
        let b0 = p.beta0_init;
        let e0 = p.eps0_init;
        let r2 = s.r * s.r + s.q * s.q;
        // Without the Ermakov term R keeps the sign of r (Riccati limit).
        let rr = if c0 > 0.0 { r2.sqrt() } else { s.r };
        let rrp = (s.r * s.rp + s.q * s.qp) / rr;
        let gamma = if c0 > 0.0 {
            p.gamma0_init - p.l0 * self.theta(t, s.q, s.r) / (2.0 * c0.sqrt())
        } else {
            p.gamma0_init - p.l0 * b0 * b0 * s.m0 / (2.0 * s.r)
        };
        Phases {
            alpha: rrp / (4.0 * a * rr) - d / (2.0 * a),
            beta: b0 * s.w / rr,
            gamma,
            delta: s.delta0 + s.w * (c0 * e0 * b0.powi(3) * s.m0 + s.r * s.dd) / r2,
            eps: (-b0 * s.dd * s.m0 + e0 * s.r) / rr,
            kappa: p.kappa0_init + s.kappa0 - c0 * b0.powi(3) * e0 * s.dd * s.m0 * s.m0 / r2
                + s.r * s.m0 / 2.0 * (c0 * b0 * b0 * e0 * e0 - s.dd * s.dd) / r2,
            mu: p.mu0_init * rr,
        }
    }

    fn mu_prime(&self, t: f64) -> f64 {
        let s = self.parts(t);
        if self.c0 == 0.0 {
            return self.params.mu0_init * s.rp;
        }
        self.params.mu0_init * (s.r * s.rp + s.q * s.qp) / (s.r * s.r + s.q * s.q).sqrt()
    }

    fn domain(&self) -> (f64, f64) {
        self.kernel.domain
    }
}

/// Coefficients of the equation the assembled soliton solves:
/// `B = b - c₀aβ⁴`, `M = f + 2c₀aβ³ε`, `G = -c₀aβ²ε²`, `h = h₀aβ²μ`.
pub fn balanced_coefficients(base: &CoefficientSet, sol: &ErmakovSolution) -> CoefficientSet {
    let mut out = base.clone();
    let c0 = sol.c0;
    let (a1, a2, a3, a4) = (base.a.clone(), base.a.clone(), base.a.clone(), base.a.clone());
    let (s1, s2, s3, s4) = (sol.clone(), sol.clone(), sol.clone(), sol.clone());
    let b = base.b.clone();
    let f = base.f.clone();
    let h0 = sol.h0;
    out.b = TimeFunction::from_fn("B", move |t| b.eval(t) - c0 * a1.eval(t) * s1.beta(t).powi(4));
    out.f = TimeFunction::from_fn("M", move |t| {
        let p = s2.phases(t);
        f.eval(t) + 2.0 * c0 * a2.eval(t) * p.beta.powi(3) * p.eps
    });
    out.big_g = TimeFunction::from_fn("G", move |t| {
        let p = s3.phases(t);
        -c0 * a3.eval(t) * p.beta * p.beta * p.eps * p.eps
    });
    out.h = TimeFunction::from_fn("h", move |t| {
        let p = s4.phases(t);
        h0 * a4.eval(t) * p.beta * p.beta * p.mu
    });
    out.s = 1.0;
    if c0 == 0.0 {
        out.b = base.b.clone();
        out.f = base.f.clone();
        out.big_g = base.big_g.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::solve_basis;
    use crate::riccati::{riccati_kernel, riccati_multiparameter};

    fn family_kernel() -> RiccatiKernel {
        let c = CoefficientSet::from_exprs(&[("a", "1/2"), ("b", "1/2")], 1.0, 1.0, 1).unwrap();
        let b = solve_basis(&c, 12.0, 1e-12).unwrap();
        riccati_kernel(&b, &c, 1e-12).unwrap()
    }

    fn residuals(s: &ErmakovSolution, c: &CoefficientSet, t: f64) -> [f64; 6] {
        let h = 1e-4;
        let d = |f: &dyn Fn(f64) -> f64| (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h);
        let p = s.phases(t);
        let (a, b, cc, f, g) = (c.a.eval(t), c.b.eval(t), c.c.eval(t), c.f.eval(t), c.g.eval(t));
        let c0 = s.c0;
        [
            d(&|t| s.alpha(t)) + b + 2.0 * cc * p.alpha + 4.0 * a * p.alpha.powi(2) - c0 * a * p.beta.powi(4),
            d(&|t| s.beta(t)) + (cc + 4.0 * a * p.alpha) * p.beta,
            d(&|t| s.gamma(t)) + a * p.beta * p.beta,
            d(&|t| s.delta(t)) + (cc + 4.0 * a * p.alpha) * p.delta
                - f
                - 2.0 * p.alpha * g
                - 2.0 * c0 * a * p.beta.powi(3) * p.eps,
            d(&|t| s.eps(t)) - (g - 2.0 * a * p.delta) * p.beta,
            d(&|t| s.kappa(t)) - g * p.delta + a * p.delta * p.delta - c0 * a * (p.beta * p.eps).powi(2),
        ]
    }

    fn params(alpha: f64, beta: f64, delta: f64, eps: f64) -> RiccatiParameters {
        RiccatiParameters {
            alpha0_init: alpha,
            beta0_init: beta,
            gamma0_init: 0.3,
            delta0_init: delta,
            eps0_init: eps,
            kappa0_init: -0.2,
            ..Default::default()
        }
    }

    #[test]
    fn family_closed_forms() {
        let k = family_kernel();
        let (al, be, de, ep) = (0.3, 2.0 / 3.0, 1.0, 0.4);
        let s = ermakov_multiparameter(&k, params(al, be, de, ep), 1.0, 2.0, -2.0).unwrap();
        for t in [0.4f64, 1.5, 2.9, 4.0, 7.5] {
            let (sn, cs) = t.sin_cos();
            let q = be.powi(4) * sn * sn + (2.0 * al * sn + cs).powi(2);
            let p = s.phases(t);
            assert!((p.mu - q.sqrt()).abs() < 1e-9);
            assert!((p.beta - be / q.sqrt()).abs() < 1e-9);
            assert!((p.eps - (ep * (2.0 * al * sn + cs) - be * de * sn) / q.sqrt()).abs() < 1e-9);
            let alpha = (al * (2.0 * t).cos() + (2.0 * t).sin() * (be.powi(4) + 4.0 * al * al - 1.0) / 4.0) / q;
            assert!((p.alpha - alpha).abs() < 1e-9);
            assert!((p.delta - (de * (2.0 * al * sn + cs) + ep * be.powi(3) * sn) / q).abs() < 1e-9);
            let kappa = -0.2
                + sn * sn * (ep * be * be * (al * ep - be * de) - al * de * de) / q
                + 0.25 * (2.0 * t).sin() * (ep * ep * be * be - de * de) / q;
            assert!((p.kappa - kappa).abs() < 1e-9);
        }
    }

    #[test]
    fn gamma_is_continuous_across_branch_cut() {
        let k = family_kernel();
        let s = ermakov_multiparameter(&k, params(0.0, 2.0 / 3.0, 0.0, 0.0), 1.0, 0.0, 0.0).unwrap();
        let n = 3000;
        let mut prev = s.gamma(0.0);
        for i in 1..=n {
            let g = s.gamma(12.0 * i as f64 / n as f64);
            assert!((g - prev).abs() < 0.05, "jump at sample {i}");
            prev = g;
        }
        // γ decreases by π/2 per half period of sin.
        assert!((s.gamma(PI) - (0.3 - PI / 2.0)).abs() < 1e-8);
    }

    #[test]
    fn family_mu_at_quarter_period() {
        let k = family_kernel();
        let s = ermakov_multiparameter(&k, params(0.0, 2.0 / 3.0, 0.0, 0.0), 1.0, 0.0, 0.0).unwrap();
        assert!((s.mu(PI / 2.0) - 4.0 / 9.0).abs() < 1e-10);
        let s = ermakov_multiparameter(&k, params(0.0, 1.0, 0.0, 0.0), 1.0, 0.0, 0.0).unwrap();
        assert!((s.mu(2.3) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn c0_zero_matches_riccati() {
        let k = family_kernel();
        let p = params(0.2, 1.3, 0.5, -0.4);
        let e = ermakov_multiparameter(&k, p, 0.0, 0.0, 0.0).unwrap();
        let r = riccati_multiparameter(&k, p).unwrap();
        for t in [0.3, 1.0, 2.0] {
            let (a, b) = (e.phases(t), r.phases(t));
            for (x, y) in [
                (a.alpha, b.alpha),
                (a.beta, b.beta),
                (a.gamma, b.gamma),
                (a.delta, b.delta),
                (a.eps, b.eps),
                (a.kappa, b.kappa),
                (a.mu, b.mu),
            ] {
                assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "t={t} {x} vs {y}");
            }
        }
    }

    #[test]
    fn forced_ermakov_residuals() {
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
        for c0 in [0.5, 1.0, 2.0] {
            let s = ermakov_multiparameter(&k, params(0.1, 0.8, -0.2, 0.4), c0, 1.0, 1.0).unwrap();
            for t in [0.1, 0.3, 0.45] {
                let r = residuals(&s, &c, t);
                for (i, v) in r.iter().enumerate() {
                    assert!(v.abs() < 1e-6, "c0={c0} eq{} residual {v} at t={t}", i + 1);
                }
                // Substitution identity holds with the Riccati sign.
                let a = c.a.eval(t);
                let sus = s.alpha(t) - (s.mu_prime(t) / (4.0 * a * s.mu(t)) - c.d.eval(t) / (2.0 * a));
                assert!(sus.abs() < 1e-10);
                let flipped = s.alpha(t) + s.mu_prime(t) / (4.0 * a * s.mu(t)) + c.d.eval(t) / (2.0 * a);
                assert!(flipped.abs() > 1e-3);
                // The δ equation with 2cg in place of 2αg is not satisfied.
                let p = s.phases(t);
                let alt = r[3] + 2.0 * (p.alpha - c.c.eval(t)) * c.g.eval(t);
                assert!(alt.abs() > 1e-3);
            }
        }
    }

    #[test]
    fn rejects_negative_c0() {
        let k = family_kernel();
        assert!(ermakov_multiparameter(&k, params(0.0, 1.0, 0.0, 0.0), -1.0, 0.0, 0.0).is_err());
    }
}
