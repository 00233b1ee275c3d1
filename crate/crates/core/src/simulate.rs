//! Direct integration of the 1D equation on a uniform grid, used to check
//! exact solutions independently of the phase machinery.
//!
//! * method of lines: 4th-order centered differences in `x`, Dormand–Prince
//!   in `t`; handles every term of the equation.
//! * split step: Strang splitting with FFTs, for `c ≡ g ≡ 0` on a periodic
//!   grid; step size from step-doubling.

use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::coeffs::CoefficientSet;
use crate::error::{Error, Result};
use crate::ode::{dopri5_until, OdeOptions, Stop};
use crate::transforms::ExactSolution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    MethodOfLines,
    SplitStep,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "method_of_lines" | "mol" => Ok(Scheme::MethodOfLines),
            "split_step" | "split" => Ok(Scheme::SplitStep),
            _ => Err(Error::Scheme(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Values outside the grid seen by the difference stencils.
#[derive(Clone)]
pub enum Boundary {
    Periodic,
    /// Zero outside the grid.
    Dirichlet,
    /// Taken from an exact solution at the stage time.
    Exact(ExactSolution),
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Periodic => "Periodic",
            Boundary::Dirichlet => "Dirichlet",
            Boundary::Exact(_) => "Exact",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub n: usize,
    pub half_width: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    /// Damping layer over the outer 10% of the grid on each side.
    pub absorb: bool,
    pub tol: f64,
    /// Stop once `‖ψ‖_∞` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    /// Stop once the relative change between neighbouring samples exceeds
    /// this (see `cell_increment`); the default `2 sin(π/8)` is eight points
    /// per wavelength. `None` disables the check.
    pub resolution_limit: Option<f64>,
    pub max_steps: usize,
}

impl SimOptions {
    /// Dirichlet grid with an absorbing layer, method of lines.
    pub fn new(n: usize, half_width: f64) -> Self {
        SimOptions {
            n,
            half_width,
            scheme: Scheme::MethodOfLines,
            boundary: Boundary::Dirichlet,
            absorb: true,
            tol: 1e-9,
            blowup_factor: 1e6,
            resolution_limit: Some(2.0 * (PI / 8.0).sin()),
            max_steps: 2_000_000,
        }
    }

    /// Periodic grid without absorption, as used for standard NLS tests.
    pub fn periodic(n: usize, half_width: f64, scheme: Scheme) -> Self {
        SimOptions {
            scheme,
            boundary: Boundary::Periodic,
            absorb: false,
            ..Self::new(n, half_width)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    BlowUp,
    ResolutionLost,
    StepUnderflow,
    StepBudget,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub field: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x: Vec<f64>,
    /// Initial state followed by one state per requested time reached.
    pub snapshots: Vec<SimState>,
    pub stop: StopReason,
    pub t_stop: f64,
    pub scheme: Scheme,
    pub steps: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,re,im,abs2\n");
        for s in &self.snapshots {
            for (x, v) in self.x.iter().zip(&s.field) {
                out.push_str(&format!("{:.10e},{x:.10e},{:.15e},{:.15e},{:.15e}\n", s.t, v.re, v.im, v.norm_sqr()));
            }
        }
        out
    }
}

pub enum Initial<'a> {
    Exact(&'a ExactSolution),
    Samples(Vec<Complex64>),
}

/// `x_j = -L + j·2L/n`, `j = 0..n`.
pub fn grid(n: usize, half_width: f64) -> Vec<f64> {
    let dx = 2.0 * half_width / n as f64;
    (0..n).map(|j| -half_width + j as f64 * dx).collect()
}

/// Smallest half-width (from a doubling search up to 400) outside of which
/// `|ψ| < 1e-10 · ‖ψ‖_∞` at all `times`; `None` for non-decaying fields.
pub fn default_half_width(exact: &ExactSolution, times: &[f64]) -> Option<f64> {
    let mut l = 5.0;
    while l <= 400.0 {
        let ok = times.iter().all(|&t| {
            let s = exact.at(t);
            let peak = grid(512, l).iter().map(|&x| s(x, 0.0).norm()).fold(0.0, f64::max);
            let edge = (0..=20)
                .map(|i| l * (1.0 + i as f64 / 20.0))
                .map(|x| s(x, 0.0).norm().max(s(-x, 0.0).norm()))
                .fold(0.0, f64::max);
            peak > 0.0 && edge < 1e-10 * peak
        });
        if ok {
            return Some(l);
        }
        l *= 1.5;
    }
    None
}

fn damping(x: &[f64], half_width: f64, on: bool) -> Vec<f64> {
    let inner = 0.8 * half_width;
    x.iter()
        .map(|&x| {
            if !on || x.abs() <= inner {
                0.0
            } else {
                let r = ((x.abs() - inner) / (half_width - inner)).min(1.0);
                30.0 * r * r
            }
        })
        .collect()
}

/// Largest relative change between neighbouring samples on the inner 80%
/// of the grid, `|ψ_{j+1} - ψ_j| / max(|ψ_j|, |ψ_{j+1}|, 0.1 peak)`. For a
/// wave `e^{ikx}` this is `2 sin(k dx / 2)`.
fn cell_increment(field: &[Complex64]) -> f64 {
    let n = field.len();
    let (lo, hi) = (n / 10, n - n / 10);
    let inner = &field[lo..hi];
    let floor = 0.1 * sup(inner);
    if floor == 0.0 {
        return 0.0;
    }
    inner
        .windows(2)
        .map(|w| (w[1] - w[0]).norm() / w[0].norm().max(w[1].norm()).max(floor))
        .fold(0.0, f64::max)
}

fn sup(field: &[Complex64]) -> f64 {
    field.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Integrates from `t0` through the increasing `times`, recording a
/// snapshot at each. Early stops keep the snapshots taken so far.
pub fn integrate(coeffs: &CoefficientSet, initial: Initial<'_>, t0: f64, times: &[f64], opts: &SimOptions) -> Result<Trajectory> {
    if coeffs.dimension != 1 {
        return Err(Error::Scheme("only the 1D equation is simulated".into()));
    }
    if opts.n < 16 {
        return Err(Error::Grid(format!("n = {} < 16", opts.n)));
    }
    if !(opts.half_width > 0.0) || !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter("half_width and tol must be positive".into()));
    }
    let dir = times.first().map_or(1.0, |&t| (t - t0).signum());
    if times.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0) {
        return Err(Error::InvalidParameter("snapshot times must be strictly monotone away from t0".into()));
    }
    let x = grid(opts.n, opts.half_width);
    let field = match initial {
        Initial::Exact(e) => {
            let s = e.at(t0);
            x.iter().map(|&x| s(x, 0.0)).collect()
        }
        Initial::Samples(v) => {
            if v.len() != opts.n {
                return Err(Error::Grid(format!("{} samples for n = {}", v.len(), opts.n)));
            }
            v
        }
    };
    if field.iter().any(|v: &Complex64| !v.is_finite()) {
        return Err(Error::InvalidParameter("initial field is not finite".into()));
    }
    match opts.scheme {
        Scheme::MethodOfLines => mol(coeffs, x, field, t0, times, opts),
        Scheme::SplitStep => {
            if !(coeffs.c.is_zero() && coeffs.g.is_zero()) {
                return Err(Error::Scheme("split step needs c = g = 0".into()));
            }
            if !matches!(opts.boundary, Boundary::Periodic) || !opts.n.is_power_of_two() {
                return Err(Error::Scheme("split step needs a periodic power-of-two grid".into()));
            }
            split_step(coeffs, x, field, t0, times, opts)
        }
    }
}

struct Operator {
    coeffs: CoefficientSet,
    x: Vec<f64>,
    dx: f64,
    sigma: Vec<f64>,
    boundary: Boundary,
}

impl Operator {
    /// `ψ_t` for the interleaved `(re, im)` state.
    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) {
        let n = self.x.len();
        let c = &self.coeffs;
        let (a, b, cc, d) = (c.a.eval(t), c.b.eval(t), c.c.eval(t), c.d.eval(t));
        let (f, g, big_g, h, s) = (c.f.eval(t), c.g.eval(t), c.big_g.eval(t), c.h.eval(t), c.s);
        let mut ext = vec![Complex64::new(0.0, 0.0); n + 4];
        for j in 0..n {
            ext[j + 2] = Complex64::new(y[2 * j], y[2 * j + 1]);
        }
        match &self.boundary {
            Boundary::Periodic => {
                ext[0] = ext[n];
                ext[1] = ext[n + 1];
                ext[n + 2] = ext[2];
                ext[n + 3] = ext[3];
            }
            Boundary::Dirichlet => {}
            Boundary::Exact(e) => {
                let sl = e.at(t);
                for (k, j) in [(0usize, -2i64), (1, -1), (n + 2, n as i64), (n + 3, n as i64 + 1)] {
                    ext[k] = sl(self.x[0] + j as f64 * self.dx, 0.0);
                }
            }
        }
        let i = Complex64::i();
        let (r1, r2) = (1.0 / (12.0 * self.dx), 1.0 / (12.0 * self.dx * self.dx));
        for j in 0..n {
            let (m2, m1, p, p1, p2) = (ext[j], ext[j + 1], ext[j + 2], ext[j + 3], ext[j + 4]);
            let px = (m2 - 8.0 * m1 + 8.0 * p1 - p2) * r1;
            let pxx = (-m2 + 16.0 * m1 - 30.0 * p + 16.0 * p1 - p2) * r2;
            let xj = self.x[j];
            let v = b * xj * xj - f * xj + big_g + h * p.norm_sqr().powf(s);
            let dt = i * a * pxx - i * v * p - cc * xj * px - (d + self.sigma[j]) * p + g * px;
            out[2 * j] = dt.re;
            out[2 * j + 1] = dt.im;
        }
    }
}

fn mol(coeffs: &CoefficientSet, x: Vec<f64>, field: Vec<Complex64>, t0: f64, times: &[f64], opts: &SimOptions) -> Result<Trajectory> {
    let op = Operator {
        coeffs: coeffs.clone(),
        dx: x[1] - x[0],
        sigma: damping(&x, opts.half_width, opts.absorb),
        boundary: opts.boundary.clone(),
        x: x.clone(),
    };
    let peak0 = sup(&field);
    let mut y: Vec<f64> = field.iter().flat_map(|v| [v.re, v.im]).collect();
    let mut traj = Trajectory {
        x,
        snapshots: vec![SimState { t: t0, field }],
        stop: StopReason::Completed,
        t_stop: t0,
        scheme: Scheme::MethodOfLines,
        steps: 0,
        rejected: 0,
    };
    let ode = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol * peak0.max(1e-300) * 1e-2,
        keep_dense: false,
        max_steps: opts.max_steps,
        ..Default::default()
    };
    let to_field = |y: &[f64]| -> Vec<Complex64> { y.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect() };
    let mut t = t0;
    for &target in times {
        let reason = Cell::new(None);
        let sol = dopri5_until(
            |t, y, out| op.rhs(t, y, out),
            t,
            &y,
            target,
            &ode,
            |_, y| {
                let f = to_field(y);
                if sup(&f) > opts.blowup_factor * peak0 {
                    reason.set(Some(StopReason::BlowUp));
                    return true;
                }
                if let Some(limit) = opts.resolution_limit {
                    if cell_increment(&f) > limit {
                        reason.set(Some(StopReason::ResolutionLost));
                        return true;
                    }
                }
                false
            },
        );
        traj.steps += sol.steps_taken;
        traj.rejected += sol.steps_rejected;
        y = sol.y_end();
        t = sol.t_end();
        traj.t_stop = t;
        if let Some(stop) = &sol.stop {
            traj.stop = match stop {
                Stop::Event { .. } => reason.get().unwrap_or(StopReason::BlowUp),
                Stop::Underflow { .. } | Stop::NonFinite { .. } => StopReason::StepUnderflow,
                Stop::MaxSteps { .. } => StopReason::StepBudget,
            };
            return Ok(traj);
        }
        traj.snapshots.push(SimState { t, field: to_field(&y) });
    }
    Ok(traj)
}

struct Splitter {
    coeffs: CoefficientSet,
    x: Vec<f64>,
    k2: Vec<f64>,
    sigma: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Splitter {
    /// Exact flow of `iψ_t = (V + h|ψ|^{2s})ψ - i(d + σ)ψ` with coefficients
    /// frozen at the midpoint.
    fn local(&self, psi: &mut [Complex64], t: f64, tau: f64) {
        let c = &self.coeffs;
        let tm = t + 0.5 * tau;
        let (b, d, f, big_g, h, s) = (c.b.eval(tm), c.d.eval(tm), c.f.eval(tm), c.big_g.eval(tm), c.h.eval(tm), c.s);
        for ((p, &x), &sig) in psi.iter_mut().zip(&self.x).zip(&self.sigma) {
            let damp = d + sig;
            let rate = 2.0 * s * damp;
            let weight = if (rate * tau).abs() < 1e-12 {
                tau
            } else {
                (1.0 - (-rate * tau).exp()) / rate
            };
            let phase = (b * x * x - f * x + big_g) * tau + h * p.norm_sqr().powf(s) * weight;
            *p *= Complex64::from_polar((-damp * tau).exp(), -phase);
        }
    }

    fn kinetic(&self, psi: &mut [Complex64], t: f64, tau: f64) {
        let a = self.coeffs.a.eval(t + 0.5 * tau);
        self.fwd.process(psi);
        let scale = 1.0 / psi.len() as f64;
        for (p, &k2) in psi.iter_mut().zip(&self.k2) {
            *p *= Complex64::from_polar(scale, -a * k2 * tau);
        }
        self.inv.process(psi);
    }

    fn strang(&self, psi: &mut [Complex64], t: f64, dt: f64) {
        self.local(psi, t, 0.5 * dt);
        self.kinetic(psi, t, dt);
        self.local(psi, t + 0.5 * dt, 0.5 * dt);
    }
}

fn split_step(coeffs: &CoefficientSet, x: Vec<f64>, field: Vec<Complex64>, t0: f64, times: &[f64], opts: &SimOptions) -> Result<Trajectory> {
    let n = x.len();
    let mut planner = FftPlanner::new();
    let l = 2.0 * opts.half_width;
    let k2 = (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            (2.0 * PI * m / l).powi(2)
        })
        .collect();
    let sp = Splitter {
        coeffs: coeffs.clone(),
        sigma: damping(&x, opts.half_width, opts.absorb),
        x: x.clone(),
        k2,
        fwd: planner.plan_fft_forward(n),
        inv: planner.plan_fft_inverse(n),
    };
    let peak0 = sup(&field);
    let mut psi = field.clone();
    let mut traj = Trajectory {
        x,
        snapshots: vec![SimState { t: t0, field }],
        stop: StopReason::Completed,
        t_stop: t0,
        scheme: Scheme::SplitStep,
        steps: 0,
        rejected: 0,
    };
    let mut t = t0;
    let span = times.last().map_or(0.0, |&t1| (t1 - t0).abs());
    let dir = times.first().map_or(1.0, |&t1| (t1 - t0).signum());
    let mut dt = (opts.tol.cbrt() * 0.1).min(span.max(1e-300)) * dir;
    let (mut full, mut half) = (vec![Complex64::new(0.0, 0.0); n], vec![Complex64::new(0.0, 0.0); n]);
    for &target in times {
        while (target - t) * dir > 0.0 {
            if traj.steps + traj.rejected >= opts.max_steps {
                traj.stop = StopReason::StepBudget;
                traj.t_stop = t;
                return Ok(traj);
            }
            let step = if (t + dt - target) * dir > 0.0 { target - t } else { dt };
            if step.abs() <= 1e-14 * t.abs().max(span) {
                traj.stop = StopReason::StepUnderflow;
                traj.t_stop = t;
                return Ok(traj);
            }
            full.copy_from_slice(&psi);
            sp.strang(&mut full, t, step);
            half.copy_from_slice(&psi);
            sp.strang(&mut half, t, 0.5 * step);
            sp.strang(&mut half, t + 0.5 * step, 0.5 * step);
            let scale = sup(&half).max(1e-300);
            let err = full.iter().zip(&half).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max) / (3.0 * scale);
            let fac = if err > 0.0 { (0.9 * (opts.tol / err).cbrt()).clamp(0.3, 2.0) } else { 2.0 };
            if err <= opts.tol && err.is_finite() {
                std::mem::swap(&mut psi, &mut half);
                t = if step == target - t { target } else { t + step };
                traj.steps += 1;
                traj.t_stop = t;
                if sup(&psi) > opts.blowup_factor * peak0 {
                    traj.stop = StopReason::BlowUp;
                    return Ok(traj);
                }
                if opts.resolution_limit.is_some_and(|lim| cell_increment(&psi) > lim) {
                    traj.stop = StopReason::ResolutionLost;
                    return Ok(traj);
                }
                if step == dt {
                    dt *= fac;
                }
            } else {
                traj.rejected += 1;
                dt = step * if err.is_finite() { fac } else { 0.3 };
            }
        }
        traj.snapshots.push(SimState { t, field: psi.clone() });
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorRow {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Per-snapshot `L²` (grid quadrature) and `L∞` errors against `exact`.
pub fn compare_to_exact(traj: &Trajectory, exact: &ExactSolution) -> Result<Vec<ErrorRow>> {
    if exact.dimension != 1 {
        return Err(Error::Grid("exact solution is not 1D".into()));
    }
    let dx = traj.dx();
    Ok(traj
        .snapshots
        .iter()
        .map(|s| {
            let sl = exact.at(s.t);
            let (mut l2, mut linf) = (0.0f64, 0.0f64);
            for (&x, v) in traj.x.iter().zip(&s.field) {
                let e = (v - sl(x, 0.0)).norm();
                l2 += e * e * dx;
                linf = linf.max(e);
            }
            ErrorRow { t: s.t, l2: l2.sqrt(), linf }
        })
        .collect())
}

/// Per-snapshot differences between two trajectories on the same grid.
pub fn compare_trajectories(a: &Trajectory, b: &Trajectory) -> Result<Vec<ErrorRow>> {
    if a.x.len() != b.x.len() || (a.dx() - b.dx()).abs() > 1e-15 {
        return Err(Error::Grid("trajectories use different grids".into()));
    }
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(u, v)| {
            if (u.t - v.t).abs() > 1e-12 {
                return Err(Error::Grid(format!("snapshot times {} and {} differ", u.t, v.t)));
            }
            let (mut l2, mut linf) = (0.0f64, 0.0f64);
            for (p, q) in u.field.iter().zip(&v.field) {
                let e = (p - q).norm();
                l2 += e * e * a.dx();
                linf = linf.max(e);
            }
            Ok(ErrorRow { t: u.t, l2: l2.sqrt(), linf })
        })
        .collect()
}

/// `∫|ψ|²` of each snapshot.
pub fn masses(traj: &Trajectory) -> Vec<(f64, f64)> {
    let dx = traj.dx();
    traj.snapshots
        .iter()
        .map(|s| (s.t, s.field.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx))
        .collect()
}
