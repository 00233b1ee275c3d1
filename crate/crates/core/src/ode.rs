//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The dense output is Hairer's fourth-order continuous extension, which
//! matches both the state and its derivative at step ends, so sampled
//! trajectories are C¹ in `t`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    /// Largest allowed |step|.
    pub h_max: f64,
    pub max_steps: usize,
    /// Keep every step's interpolant. When false only the last step is kept,
    /// so `t_end`/`y_end` work but earlier times are not available.
    pub keep_dense: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            keep_dense: true,
        }
    }
}

impl OdeOptions {
    pub fn tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-2,
            ..Default::default()
        }
    }
}

/// Why an integration ended before its target time.
#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    Underflow { t: f64 },
    NonFinite { t: f64 },
    Event { t: f64 },
    MaxSteps { t: f64 },
}

impl Stop {
    pub fn t(&self) -> f64 {
        match self {
            Stop::Underflow { t } | Stop::NonFinite { t } | Stop::Event { t } | Stop::MaxSteps { t } => *t,
        }
    }
}

#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    h: f64,
    // r1..r5 interleaved: rcont[k * n + i]
    rcont: Vec<f64>,
}

/// Piecewise-polynomial trajectory produced by [`dopri5`].
#[derive(Debug, Clone)]
pub struct DenseSolution {
    dim: usize,
    t_start: f64,
    y_start: Vec<f64>,
    segments: Vec<Segment>,
    /// Set when the run ended early; the trajectory is valid up to `t_end`.
    pub stop: Option<Stop>,
    pub steps_taken: usize,
    pub steps_rejected: usize,
}

impl DenseSolution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.segments
            .last()
            .map_or(self.t_start, |s| s.t0 + s.h)
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = ordered(self.t_start, self.t_end());
        t >= lo && t <= hi
    }

    fn segment(&self, t: f64) -> Option<&Segment> {
        if self.segments.is_empty() {
            return None;
        }
        let forward = self.segments[0].h > 0.0;
        // Number of segments whose start lies at or before t (in direction).
        let idx = self.segments.partition_point(|s| {
            if forward {
                s.t0 <= t
            } else {
                s.t0 >= t
            }
        });
        Some(&self.segments[idx.saturating_sub(1).min(self.segments.len() - 1)])
    }

    /// Evaluates all components at `t`. Values outside the integrated range
    /// are polynomial extrapolations of the nearest step.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        let Some(seg) = self.segment(t) else {
            out.copy_from_slice(&self.y_start);
            return;
        };
        let n = self.dim;
        let th = (t - seg.t0) / seg.h;
        let th1 = 1.0 - th;
        let r = &seg.rcont;
        for i in 0..n {
            out[i] = r[i]
                + th * (r[n + i] + th1 * (r[2 * n + i] + th * (r[3 * n + i] + th1 * r[4 * n + i])));
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        out
    }

    pub fn component(&self, t: f64, i: usize) -> f64 {
        let Some(seg) = self.segment(t) else {
            return self.y_start[i];
        };
        let n = self.dim;
        let th = (t - seg.t0) / seg.h;
        let th1 = 1.0 - th;
        let r = &seg.rcont;
        r[i] + th * (r[n + i] + th1 * (r[2 * n + i] + th * (r[3 * n + i] + th1 * r[4 * n + i])))
    }

    pub fn y_end(&self) -> Vec<f64> {
        self.eval(self.t_end())
    }

    /// Step boundaries, useful for locating sign changes of a component.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.segments.len() + 1);
        m.push(self.t_start);
        m.extend(self.segments.iter().map(|s| s.t0 + s.h));
        m
    }
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// Early termination (step underflow, non-finite state, `stop` returning
/// true after an accepted step) is reported through [`DenseSolution::stop`]
/// rather than as an error so callers can keep the partial trajectory.
pub fn dopri5_until<F, S>(
    f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    opts: &OdeOptions,
    mut stop: S,
) -> DenseSolution
where
    F: Fn(f64, &[f64], &mut [f64]),
    S: FnMut(f64, &[f64]) -> bool,
{
    let n = y0.len();
    let mut sol = DenseSolution {
        dim: n,
        t_start: t0,
        y_start: y0.to_vec(),
        segments: Vec::new(),
        stop: None,
        steps_taken: 0,
        steps_rejected: 0,
    };
    if t1 == t0 || n == 0 {
        return sol;
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        sol.stop = Some(Stop::NonFinite { t });
        return sol;
    }

    let scale = |yv: &[f64], i: usize, other: f64| opts.atol + opts.rtol * yv[i].abs().max(other.abs());
    let mut h = match opts.h0 {
        Some(h) => h.abs(),
        None => {
            // Hairer's starting-step heuristic.
            let d0 = rms(n, |i| y[i] / scale(&y, i, 0.0));
            let d1 = rms(n, |i| k1[i] / scale(&y, i, 0.0));
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let h0 = h0.min(span);
            for i in 0..n {
                ytmp[i] = y[i] + dir * h0 * k1[i];
            }
            f(t + dir * h0, &ytmp, &mut k2);
            let d2 = rms(n, |i| (k2[i] - k1[i]) / scale(&y, i, 0.0)) / h0;
            let h1 = if d1.max(d2) <= 1e-15 {
                (h0 * 1e-3).max(1e-6)
            } else {
                (0.01 / d1.max(d2)).powf(0.2)
            };
            (100.0 * h0).min(h1)
        }
    }
    .min(opts.h_max)
    .min(span);

    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;
    loop {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        if sol.steps_taken + sol.steps_rejected >= opts.max_steps {
            sol.stop = Some(Stop::MaxSteps { t });
            break;
        }
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(span) {
            sol.stop = Some(Stop::Underflow { t });
            break;
        }
        let hs = dir * h;
        for i in 0..n {
            ytmp[i] = y[i] + hs * A21 * k1[i];
        }
        f(t + C2 * hs, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * hs, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * hs, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * hs, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let tnew = if last { t1 } else { t + hs };
        f(tnew, &ytmp, &mut k6);
        for i in 0..n {
            ynew[i] = y[i]
                + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(tnew, &ynew, &mut k7);

        let err = rms(n, |i| {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            e / scale(&y, i, ynew[i])
        });
        if !err.is_finite() || ynew.iter().chain(k7.iter()).any(|v| !v.is_finite()) {
            // Treat like a rejection with a strong cut.
            sol.steps_rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        if err <= 1.0 {
            let mut rcont = vec![0.0; 5 * n];
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                rcont[i] = y[i];
                rcont[n + i] = ydiff;
                rcont[2 * n + i] = bspl;
                rcont[3 * n + i] = ydiff - hs * k7[i] - bspl;
                rcont[4 * n + i] = hs
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            if !opts.keep_dense {
                sol.segments.clear();
            }
            sol.segments.push(Segment { t0: t, h: tnew - t, rcont });
            sol.steps_taken += 1;
            t = tnew;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if stop(t, &y) {
                sol.stop = Some(Stop::Event { t });
                break;
            }
            // PI step control (Hairer's beta = 0.04).
            let fac = (err.max(1e-10).powf(0.17) / err_old.powf(0.04) / 0.9).clamp(0.1, 5.0);
            let mut hnew = h / fac;
            if last_rejected {
                hnew = hnew.min(h);
            }
            err_old = err.max(1e-4);
            h = hnew.min(opts.h_max);
            last_rejected = false;
        } else {
            sol.steps_rejected += 1;
            h /= (err.powf(0.2) / 0.9).min(5.0);
            last_rejected = true;
        }
    }
    sol
}

/// Like [`dopri5_until`] without an event callback; early stops become errors.
pub fn dopri5<F>(f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions) -> Result<DenseSolution>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let sol = dopri5_until(f, t0, y0, t1, opts, |_, _| false);
    match sol.stop {
        None => Ok(sol),
        Some(Stop::Underflow { t }) | Some(Stop::NonFinite { t }) => Err(Error::StepUnderflow { t }),
        Some(Stop::MaxSteps { t }) => Err(Error::Tolerance(format!(
            "step budget exhausted at t = {t}"
        ))),
        Some(Stop::Event { .. }) => unreachable!("no events requested"),
    }
}

fn rms(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = (0..n).map(|i| f(i).powi(2)).sum();
    (s / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let sol = dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[0.0, 1.0],
            10.0,
            &OdeOptions::tol(1e-11),
        )
        .unwrap();
        for i in 0..=1000 {
            let t = i as f64 * 0.01;
            let y = sol.eval(t);
            assert!((y[0] - t.sin()).abs() < 5e-10, "t={t} {}", y[0] - t.sin());
            assert!((y[1] - t.cos()).abs() < 5e-10);
        }
    }

    #[test]
    fn backward_integration() {
        let sol = dopri5(|t, _, dy| dy[0] = t.cos(), 2.0, &[2f64.sin()], -1.0, &OdeOptions::tol(1e-11))
            .unwrap();
        for t in [-1.0, -0.3, 0.0, 0.77, 1.9] {
            assert!((sol.component(t, 0) - f64::sin(t)).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_output_is_continuously_differentiable() {
        let sol = dopri5(
            |_, y, dy| dy[0] = -y[0] * y[0],
            0.0,
            &[1.0],
            5.0,
            &OdeOptions::tol(1e-6),
        )
        .unwrap();
        let mesh = sol.mesh();
        for &tm in &mesh[1..mesh.len() - 1] {
            let e = 1e-7;
            let left = (sol.component(tm, 0) - sol.component(tm - e, 0)) / e;
            let right = (sol.component(tm + e, 0) - sol.component(tm, 0)) / e;
            assert!((left - right).abs() < 1e-5, "kink at {tm}");
        }
    }

    #[test]
    fn blowup_reports_underflow() {
        // y' = y², y(0) = 1 blows up at t = 1.
        let sol = dopri5_until(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &OdeOptions::default(), |_, _| false);
        let stop = sol.stop.clone().expect("must stop");
        assert!((stop.t() - 1.0).abs() < 1e-3, "{stop:?}");
    }

    #[test]
    fn event_stops_integration() {
        let sol = dopri5_until(
            |_, _, dy| dy[0] = 1.0,
            0.0,
            &[0.0],
            10.0,
            &OdeOptions {
                h_max: 0.5,
                ..Default::default()
            },
            |_, y| y[0] > 3.0,
        );
        assert!(matches!(sol.stop, Some(Stop::Event { .. })));
        assert!(sol.t_end() > 3.0 && sol.t_end() < 10.0);
    }
}

type Rhs = std::sync::Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Trajectory stored on uniform nodes and evaluated by integrating from the
/// nearest node with a few classical RK4 substeps. Within one cell the result
/// is a smooth function of `x`, which keeps finite-difference stencils clean.
#[derive(Clone)]
pub struct NodeTable {
    x0: f64,
    dx: f64,
    dim: usize,
    nodes: Vec<f64>,
    rhs: Rhs,
    substeps: usize,
}

impl std::fmt::Debug for NodeTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NodeTable")
            .field("x0", &self.x0)
            .field("x1", &self.x_end())
            .field("dx", &self.dx)
            .finish()
    }
}

impl NodeTable {
    /// Integrates from `x0` to `x1` and samples every `dx`.
    pub fn build(
        rhs: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        x0: f64,
        y0: &[f64],
        x1: f64,
        dx: f64,
        opts: &OdeOptions,
    ) -> Result<Self> {
        let rhs: Rhs = std::sync::Arc::new(rhs);
        let n = ((x1 - x0) / dx).abs().mul_add(1.0, 1e-9).floor() as usize;
        let dx = dx.copysign(x1 - x0);
        let dim = y0.len();
        let mut nodes = Vec::with_capacity((n + 1) * dim);
        nodes.extend_from_slice(y0);
        let mut y = y0.to_vec();
        // Restart at every node so node values carry no interpolation error.
        for i in 0..n {
            let r = rhs.clone();
            let a = x0 + dx * i as f64;
            let cell = dopri5(move |t, y, out| r(t, y, out), a, &y, a + dx, opts)?;
            y = cell.y_end();
            nodes.extend_from_slice(&y);
        }
        Ok(NodeTable {
            x0,
            dx,
            dim,
            nodes,
            rhs,
            substeps: 4,
        })
    }

    /// Samples an existing trajectory (possibly cut short by an event).
    pub fn from_solution(sol: &DenseSolution, rhs: Rhs, x0: f64, x1: f64, dx: f64) -> Self {
        let end = sol.t_end();
        let x1 = if (x1 - x0).signum() * (end - x1) < 0.0 { end } else { x1 };
        let n = ((x1 - x0) / dx).abs().mul_add(1.0, 1e-9).floor() as usize;
        let dx = dx.copysign(x1 - x0);
        let dim = sol.dim();
        let mut nodes = vec![0.0; (n + 1) * dim];
        for i in 0..=n {
            sol.eval_into(x0 + dx * i as f64, &mut nodes[i * dim..(i + 1) * dim]);
        }
        NodeTable {
            x0,
            dx,
            dim,
            nodes,
            rhs,
            substeps: 4,
        }
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + self.dx * (self.nodes.len() / self.dim - 1) as f64
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.dx > 0.0 { (self.x0, self.x_end()) } else { (self.x_end(), self.x0) };
        x >= lo && x <= hi
    }

    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        if !self.contains(x) {
            out.fill(f64::NAN);
            return;
        }
        let last = self.nodes.len() / self.dim - 1;
        let i = (((x - self.x0) / self.dx).round() as usize).min(last);
        let xi = self.x0 + self.dx * i as f64;
        out.copy_from_slice(&self.nodes[i * self.dim..(i + 1) * self.dim]);
        let h = (x - xi) / self.substeps as f64;
        if h == 0.0 {
            return;
        }
        let n = self.dim;
        let mut k = vec![0.0; 4 * n];
        let mut tmp = vec![0.0; n];
        let mut t = xi;
        for _ in 0..self.substeps {
            let (k1, rest) = k.split_at_mut(n);
            let (k2, rest) = rest.split_at_mut(n);
            let (k3, k4) = rest.split_at_mut(n);
            (self.rhs)(t, out, k1);
            for j in 0..n {
                tmp[j] = out[j] + 0.5 * h * k1[j];
            }
            (self.rhs)(t + 0.5 * h, &tmp, k2);
            for j in 0..n {
                tmp[j] = out[j] + 0.5 * h * k2[j];
            }
            (self.rhs)(t + 0.5 * h, &tmp, k3);
            for j in 0..n {
                tmp[j] = out[j] + h * k3[j];
            }
            (self.rhs)(t + h, &tmp, k4);
            for j in 0..n {
                out[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            t += h;
        }
    }

    pub fn component(&self, x: f64, i: usize) -> f64 {
        let mut y = vec![0.0; self.dim];
        self.eval_into(x, &mut y);
        y[i]
    }
}
