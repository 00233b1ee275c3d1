//! The characteristic equation `μ'' - τ μ' + 4σ μ = 0` and its fundamental
//! basis `μ₀(0) = 0, μ₀'(0) = 2a(0)`, `μ₁(0) ≠ 0, μ₁'(0) = 0`.

use std::sync::Arc;

use crate::coeffs::{CoefficientSet, TimeFunction};
use crate::error::{Error, Result};
use crate::ode::{dopri5_until, DenseSolution, OdeOptions, Stop};

/// Returns `(τ, σ)`; the gain term of σ is always evaluated in the limit
/// form `d a'/(2a) - d'/2`, which is finite when `d` vanishes.
pub fn characteristic_coefficients(coeffs: &CoefficientSet) -> Result<(TimeFunction, TimeFunction)> {
    let a0 = coeffs.a.eval(0.0);
    if a0 == 0.0 || !a0.is_finite() {
        return Err(Error::DivisionByZero(format!("a(0) = {a0}")));
    }
    let c1 = coeffs.clone();
    let tau = TimeFunction::from_fn("tau", move |t| tau_at(&c1, t));
    let c2 = coeffs.clone();
    let sigma = TimeFunction::from_fn("sigma", move |t| sigma_at(&c2, t));
    Ok((tau, sigma))
}

pub(crate) fn tau_at(c: &CoefficientSet, t: f64) -> f64 {
    c.a.d1(t) / c.a.eval(t) - 2.0 * c.c.eval(t) + 4.0 * c.d.eval(t)
}

pub(crate) fn sigma_at(c: &CoefficientSet, t: f64) -> f64 {
    let a = c.a.eval(t);
    let d = c.d.eval(t);
    a * c.b.eval(t) - c.c.eval(t) * d + d * d + d * c.a.d1(t) / (2.0 * a) - c.d.d1(t) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisSource {
    Numeric,
    ClosedForm,
}

/// Indices into the basis ODE state.
pub(crate) const MU0: usize = 0;
pub(crate) const MU0P: usize = 1;
pub(crate) const MU1: usize = 2;
pub(crate) const MU1P: usize = 3;
pub(crate) const LNW: usize = 4;
/// Quadrature states carried along when the forcing terms are present.
pub(crate) const QD: usize = 5;

#[derive(Debug)]
pub(crate) struct Trajectory {
    pub fwd: DenseSolution,
    pub bwd: Option<DenseSolution>,
}

impl Trajectory {
    pub fn component(&self, t: f64, i: usize) -> f64 {
        match &self.bwd {
            Some(b) if t < 0.0 => b.component(t, i),
            _ => self.fwd.component(t, i),
        }
    }

    pub fn t_range(&self) -> (f64, f64) {
        let lo = self.bwd.as_ref().map_or(0.0, |b| b.t_end());
        (lo, self.fwd.t_end())
    }
}

#[derive(Debug, Clone)]
pub struct ClosedBasis {
    pub mu0: TimeFunction,
    pub mu1: TimeFunction,
}

/// Fundamental solutions of the characteristic equation.
#[derive(Debug, Clone)]
pub struct CharacteristicBasis {
    pub a0: f64,
    pub d0: f64,
    pub mu1_init: f64,
    /// `μ₀'(0)`; equals `2a(0)` unless a closed form fixes another scale.
    pub mu0_slope: f64,
    pub source: BasisSource,
    pub(crate) coeffs: CoefficientSet,
    pub(crate) traj: Arc<Trajectory>,
    pub(crate) closed: Option<ClosedBasis>,
    /// Range on which the basis is valid.
    pub domain: (f64, f64),
    /// Set when the integration stopped before the requested end.
    pub truncated: Option<String>,
    /// Max deviation between closed forms and the numeric solve.
    pub closed_form_deviation: Option<f64>,
}

impl CharacteristicBasis {
    pub fn mu0(&self, t: f64) -> f64 {
        match &self.closed {
            Some(c) => c.mu0.eval(t),
            None => self.traj.component(t, MU0),
        }
    }

    pub fn mu0p(&self, t: f64) -> f64 {
        match &self.closed {
            Some(c) => c.mu0.d1(t),
            None => self.traj.component(t, MU0P),
        }
    }

    pub fn mu1(&self, t: f64) -> f64 {
        match &self.closed {
            Some(c) => c.mu1.eval(t),
            None => self.traj.component(t, MU1),
        }
    }

    pub fn mu1p(&self, t: f64) -> f64 {
        match &self.closed {
            Some(c) => c.mu1.d1(t),
            None => self.traj.component(t, MU1P),
        }
    }

    /// Second derivatives from the ODE itself.
    pub fn mu0pp(&self, t: f64) -> f64 {
        tau_at(&self.coeffs, t) * self.mu0p(t) - 4.0 * sigma_at(&self.coeffs, t) * self.mu0(t)
    }

    pub fn mu1pp(&self, t: f64) -> f64 {
        tau_at(&self.coeffs, t) * self.mu1p(t) - 4.0 * sigma_at(&self.coeffs, t) * self.mu1(t)
    }

    pub fn wronskian(&self, t: f64) -> f64 {
        self.mu0(t) * self.mu1p(t) - self.mu0p(t) * self.mu1(t)
    }

    /// `w(t) = exp(-∫₀ᵗ (c - 2d))`. For closed-form bases it follows from the
    /// Abel identity `W = -2 a μ₁(0) w²`.
    pub fn w(&self, t: f64) -> f64 {
        match &self.closed {
            Some(_) => {
                let a = self.coeffs.a.eval(t);
                (-self.wronskian(t) * self.a0 / (self.mu0_slope * a * self.mu1_init)).sqrt()
            }
            None => self.traj.component(t, LNW).exp(),
        }
    }

    /// Numeric (ODE) values regardless of closed forms.
    pub fn numeric(&self, t: f64) -> [f64; 4] {
        [
            self.traj.component(t, MU0),
            self.traj.component(t, MU0P),
            self.traj.component(t, MU1),
            self.traj.component(t, MU1P),
        ]
    }

    /// Ratio of `μ₀` to the standard solution with `μ₀'(0) = 2a(0)`.
    pub fn scale(&self) -> f64 {
        self.mu0_slope / (2.0 * self.a0)
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    /// Dense samples `(t, μ₀, μ₀', μ₁, μ₁')` as CSV text.
    pub fn to_csv(&self, ts: &[f64]) -> String {
        let mut out = String::from("t,mu0,mu0p,mu1,mu1p\n");
        for &t in ts {
            out.push_str(&format!(
                "{t:.12e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                self.mu0(t),
                self.mu0p(t),
                self.mu1(t),
                self.mu1p(t)
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BasisOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub tol: f64,
    pub mu1_init: f64,
    /// `μ₀'(0)`; defaults to `2a(0)`.
    pub mu0_slope: Option<f64>,
    /// Also integrate the forcing quadratures used by the Riccati kernel.
    pub quadratures: bool,
    pub closed: Option<ClosedBasis>,
}

impl BasisOptions {
    pub fn new(t_max: f64) -> Self {
        BasisOptions {
            t_min: 0.0,
            t_max,
            tol: 1e-10,
            mu1_init: 1.0,
            mu0_slope: None,
            quadratures: false,
            closed: None,
        }
    }
}

/// Solves for the fundamental basis on `[0, t_max]` with local error `tol`.
pub fn solve_basis(coeffs: &CoefficientSet, t_max: f64, tol: f64) -> Result<CharacteristicBasis> {
    let mut opts = BasisOptions::new(t_max);
    opts.tol = tol;
    solve_basis_with(coeffs, &opts)
}

pub fn solve_basis_with(coeffs: &CoefficientSet, opts: &BasisOptions) -> Result<CharacteristicBasis> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {} must be positive", opts.tol)));
    }
    if opts.mu1_init == 0.0 {
        return Err(Error::InvalidParameter("mu1(0) must be nonzero".into()));
    }
    if !(opts.t_max > 0.0) || opts.t_min > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "basis range [{}, {}] must contain a neighbourhood of 0",
            opts.t_min, opts.t_max
        )));
    }
    coeffs.validate()?;
    let a0 = coeffs.a.eval(0.0);
    let d0 = coeffs.d.eval(0.0);
    let forced = opts.quadratures;
    let slope = opts.mu0_slope.unwrap_or(2.0 * a0);
    if slope == 0.0 || !slope.is_finite() {
        return Err(Error::InvalidParameter(format!("mu0'(0) = {slope}")));
    }
    let mut y0 = vec![0.0, slope, opts.mu1_init, 0.0, 0.0];
    if forced {
        y0.extend_from_slice(&[0.0; 5]);
    }
    let c = coeffs.clone();
    let rhs = move |t: f64, y: &[f64], dy: &mut [f64]| basis_rhs(&c, t, y, dy);

    let ode = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol * 1e-2,
        ..Default::default()
    };
    // The forcing integrands divide by μ₀'; their domain ends at its first zero.
    let stop_fwd = |_: f64, y: &[f64]| forced && y[MU0P] * slope <= 0.0;
    let fwd = dopri5_until(&rhs, 0.0, &y0, opts.t_max, &ode, stop_fwd);
    let bwd = if opts.t_min < 0.0 {
        let stop_bwd = |_: f64, y: &[f64]| forced && y[MU0P] * slope <= 0.0;
        Some(dopri5_until(&rhs, 0.0, &y0, opts.t_min, &ode, stop_bwd))
    } else {
        None
    };
    let mut truncated = None;
    for (sol, end) in [(Some(&fwd), opts.t_max), (bwd.as_ref(), opts.t_min)] {
        let Some(sol) = sol else { continue };
        match &sol.stop {
            None => {}
            Some(Stop::Event { t }) => {
                truncated = Some(format!("forcing quadratures stop where mu0' vanishes, t = {t:.6}"));
            }
            Some(Stop::Underflow { t }) | Some(Stop::NonFinite { t }) => {
                if (t - 0.0).abs() < 1e-12 {
                    return Err(Error::StepUnderflow { t: *t });
                }
                truncated = Some(format!("step underflow at t = {t:.6} (coefficient pole?)"));
            }
            Some(Stop::MaxSteps { t }) => {
                return Err(Error::Tolerance(format!(
                    "characteristic solve exhausted its step budget at t = {t} (target {end})"
                )));
            }
        }
    }
    let traj = Arc::new(Trajectory { fwd, bwd });
    let domain = traj.t_range();

    let mut basis = CharacteristicBasis {
        a0,
        d0,
        mu1_init: opts.mu1_init,
        mu0_slope: slope,
        source: BasisSource::Numeric,
        coeffs: coeffs.clone(),
        traj,
        closed: None,
        domain,
        truncated,
        closed_form_deviation: None,
    };
    if let Some(closed) = &opts.closed {
        let m0 = closed.mu0.eval(0.0);
        let m0p = closed.mu0.d1(0.0);
        let m1 = closed.mu1.eval(0.0);
        let m1p = closed.mu1.d1(0.0);
        if m0.abs() > 1e-12 || m1p.abs() > 1e-10 || m0p == 0.0 || m1 == 0.0 {
            return Err(Error::Consistency {
                what: "closed-form basis initial conditions".into(),
                residual: m0.abs().max(m1p.abs()),
            });
        }
        if (m1 - opts.mu1_init).abs() > 1e-12 * m1.abs() || (m0p - slope).abs() > 1e-12 * slope.abs() {
            // Re-solve with the closed form's normalisation so the numeric
            // cross-check compares like with like.
            let mut o = opts.clone();
            o.mu1_init = m1;
            o.mu0_slope = Some(m0p);
            o.closed = None;
            let re = solve_basis_with(coeffs, &o)?;
            basis.traj = re.traj;
            basis.truncated = re.truncated;
            basis.domain = re.domain;
        }
        basis.mu1_init = m1;
        basis.mu0_slope = m0p;
        let dev = closed_form_deviation(&basis, closed);
        basis.closed_form_deviation = Some(dev);
        basis.closed = Some(closed.clone());
        basis.source = BasisSource::ClosedForm;
    }
    Ok(basis)
}

fn closed_form_deviation(basis: &CharacteristicBasis, closed: &ClosedBasis) -> f64 {
    let (lo, hi) = basis.domain;
    let n = 400;
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let num = basis.numeric(t);
        let cf = [closed.mu0.eval(t), closed.mu0.d1(t), closed.mu1.eval(t), closed.mu1.d1(t)];
        for k in 0..4 {
            if cf[k].is_finite() {
                worst = worst.max((num[k] - cf[k]).abs() / cf[k].abs().max(1.0));
            }
        }
    }
    worst
}

fn basis_rhs(c: &CoefficientSet, t: f64, y: &[f64], dy: &mut [f64]) {
    let tau = tau_at(c, t);
    let sig4 = 4.0 * sigma_at(c, t);
    dy[MU0] = y[MU0P];
    dy[MU0P] = tau * y[MU0P] - sig4 * y[MU0];
    dy[MU1] = y[MU1P];
    dy[MU1P] = tau * y[MU1P] - sig4 * y[MU1];
    let cc = c.c.eval(t);
    let d = c.d.eval(t);
    dy[LNW] = -(cc - 2.0 * d);
    if y.len() > QD {
        let a = c.a.eval(t);
        let f = c.f.eval(t);
        let g = c.g.eval(t);
        let w = y[LNW].exp();
        let sigma = sig4 / 4.0;
        let forcing = f - d * g / a;
        let (m0, m0p) = (y[MU0], y[MU0P]);
        let i_delta = y[QD];
        let wi = w * i_delta;
        dy[QD] = (forcing * m0 + g * m0p / (2.0 * a)) / w;
        dy[QD + 1] = a * sigma * w * wi / (m0p * m0p);
        dy[QD + 2] = a * w * forcing / m0p;
        dy[QD + 3] = a * sigma * wi * wi / (m0p * m0p);
        dy[QD + 4] = a * wi * forcing / m0p;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::parse_time_expression;

    fn toy() -> CoefficientSet {
        CoefficientSet::from_exprs(
            &[
                ("a", "1"),
                ("b", "(sin(t)^2 - cos(t))/4"),
                ("c", "-sin(t)"),
                ("d", "sin(t)"),
                ("h", "-3*exp(3 - 3*cos(t))"),
            ],
            1.0,
            1.0,
            1,
        )
        .unwrap()
    }

    #[test]
    fn toy_characteristic_coefficients() {
        let (tau, sigma) = characteristic_coefficients(&toy()).unwrap();
        for t in [0.0, 0.4, 1.3, 2.9] {
            let s: f64 = f64::sin(t);
            assert!((tau.eval(t) - 6.0 * s).abs() < 1e-14);
            assert!((4.0 * sigma.eval(t) - (9.0 * s * s - 3.0 * t.cos())).abs() < 1e-13);
        }
    }

    #[test]
    fn free_particle_basis() {
        let b = solve_basis(&CoefficientSet::free(0.5), 5.0, 1e-10).unwrap();
        for t in [0.0, 1.0, 4.5] {
            assert!((b.mu0(t) - t).abs() < 1e-12);
            assert!((b.mu1(t) - 1.0).abs() < 1e-12);
        }
        let (tau, sigma) = characteristic_coefficients(&CoefficientSet::free(0.5)).unwrap();
        assert_eq!((tau.eval(1.0), sigma.eval(1.0)), (0.0, 0.0));
    }

    #[test]
    fn toy_basis_matches_closed_form_and_abel() {
        let b = solve_basis(&toy(), 6.0, 1e-12).unwrap();
        let e = |t: f64| (3.0 * (1.0 - t.cos())).exp();
        // Standard normalisation μ₀'(0) = 2a(0) = 2.
        assert!((b.mu0(1.0) - 2.0 * e(1.0)).abs() < 1e-9 * e(1.0));
        for i in 1..=200 {
            let t = 6.0 * i as f64 / 200.0;
            assert!((b.mu0(t) - 2.0 * t * e(t)).abs() <= 1e-8 * (t * e(t)).abs());
            assert!((b.mu1(t) - e(t)).abs() <= 1e-8 * e(t));
            // W(t) = W(0) exp(∫τ) = -2 exp(6(1 - cos t)).
            let abel = -2.0 * (6.0 * (1.0 - t.cos())).exp();
            let w = (-(b.wronskian(t)) / (2.0 * b.mu1_init)).sqrt();
            assert!((b.w(t) - w).abs() <= 1e-8 * w);
            assert!((b.wronskian(t) - abel).abs() <= 1e-8 * abel.abs());
        }
    }

    #[test]
    fn closed_form_override_is_cross_checked() {
        let mut o = BasisOptions::new(3.0);
        o.closed = Some(ClosedBasis {
            mu0: parse_time_expression("sinh(t)").unwrap(),
            mu1: parse_time_expression("1").unwrap(),
        });
        let c = CoefficientSet::from_exprs(
            &[("a", "cosh(t)/2"), ("b", "cosh(t)/2"), ("c", "cosh(t)"), ("d", "cosh(t)/2")],
            1.0,
            -1.0,
            1,
        )
        .unwrap();
        let b = solve_basis_with(&c, &o).unwrap();
        assert_eq!(b.source, BasisSource::ClosedForm);
        assert!(b.closed_form_deviation.unwrap() < 1e-8);
        // c - 2d = 0 here, so w = 1.
        assert!((b.w(1.3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_scale_is_honoured() {
        // μ₀ = t e^{3(1 - cos t)} has μ₀'(0) = 1, half the standard slope.
        let mut o = BasisOptions::new(6.0);
        o.tol = 1e-12;
        o.closed = Some(ClosedBasis {
            mu0: parse_time_expression("t*exp(3 - 3*cos(t))").unwrap(),
            mu1: parse_time_expression("exp(3 - 3*cos(t))").unwrap(),
        });
        let b = solve_basis_with(&toy(), &o).unwrap();
        assert_eq!(b.scale(), 0.5);
        assert!(b.closed_form_deviation.unwrap() < 1e-8);
        let e = |t: f64| (3.0 * (1.0 - t.cos())).exp();
        for t in [0.1, 1.0, 3.3, 6.0] {
            let num = b.numeric(t);
            assert!((num[0] - t * e(t)).abs() <= 1e-8 * t * e(t));
            // w = exp(-∫(c - 2d)) = exp(3(1 - cos t)).
            assert!((b.w(t) - e(t)).abs() < 1e-10 * e(t));
        }
    }

    #[test]
    fn pole_in_coefficients_truncates() {
        let c = CoefficientSet::from_exprs(&[("a", "1"), ("b", "1/(1 - t)^3")], 1.0, 1.0, 1).unwrap();
        let b = solve_basis(&c, 2.0, 1e-10).unwrap();
        assert!(b.truncated.is_some());
        assert!(b.domain.1 < 1.0 + 1e-3);
    }
}
