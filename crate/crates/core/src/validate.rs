//! Numerical certification: PDE residuals of exact solutions, residuals of
//! the phase systems and the mass law.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::coeffs::CoefficientSet;
use crate::ermakov::ErmakovSolution;
use crate::error::{Error, Result};
use crate::numerics::{integrate, D1_8, D2_8};
use crate::riccati::{sample_points, PhaseSource, RiccatiSolution};
use crate::transforms::ExactSolution;

/// Uniform `(t, x[, y])` grid, written `t0:t1:nt,x0:x1:nx[,y0:y1:ny]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub t: (f64, f64, usize),
    pub x: (f64, f64, usize),
    pub y: Option<(f64, f64, usize)>,
}

fn axis((a, b, n): (f64, f64, usize)) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl GridSpec {
    pub fn new(t: (f64, f64, usize), x: (f64, f64, usize)) -> Self {
        GridSpec { t, x, y: None }
    }

    pub fn with_y(mut self, y: (f64, f64, usize)) -> Self {
        self.y = Some(y);
        self
    }

    pub fn ts(&self) -> Vec<f64> {
        axis(self.t)
    }

    pub fn xs(&self) -> Vec<f64> {
        axis(self.x)
    }

    pub fn ys(&self) -> Vec<f64> {
        self.y.map_or_else(|| vec![0.0], axis)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = |(a, b, n): (f64, f64, usize)| format!("{a}:{b}:{n}");
        write!(f, "{},{}", r(self.t), r(self.x))?;
        if let Some(y) = self.y {
            write!(f, ",{}", r(y))?;
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid `{s}`: expected t0:t1:nt,x0:x1:nx[,y0:y1:ny]"));
        let parts: Vec<(f64, f64, usize)> = s
            .split(',')
            .map(|p| {
                let f: Vec<&str> = p.trim().split(':').collect();
                if f.len() != 3 {
                    return Err(bad());
                }
                let a: f64 = f[0].trim().parse().map_err(|_| bad())?;
                let b: f64 = f[1].trim().parse().map_err(|_| bad())?;
                let n: usize = f[2].trim().parse().map_err(|_| bad())?;
                if n == 0 || !a.is_finite() || !b.is_finite() || (n > 1 && a == b) {
                    return Err(bad());
                }
                Ok((a, b, n))
            })
            .collect::<Result<_>>()?;
        match parts.as_slice() {
            [t, x] => Ok(GridSpec::new(*t, *x)),
            [t, x, y] => Ok(GridSpec::new(*t, *x).with_y(*y)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub rms: f64,
    pub grid: String,
    pub worst_point: Vec<f64>,
    /// 1-based index of the worst equation (phase systems only).
    pub worst_equation: Option<usize>,
    pub threshold: f64,
    pub passed: bool,
}

impl ResidualReport {
    fn from_samples(samples: &[(f64, Vec<f64>, Option<usize>)], grid: String, threshold: f64) -> Self {
        let mut worst = (0.0f64, Vec::new(), None);
        let mut sq = 0.0;
        let mut any_nan = false;
        for (v, p, e) in samples {
            if v.is_nan() {
                any_nan = true;
                worst = (f64::NAN, p.clone(), *e);
                continue;
            }
            sq += v * v;
            if !any_nan && (*v > worst.0 || worst.1.is_empty()) {
                worst = (*v, p.clone(), *e);
            }
        }
        let n = samples.len().max(1) as f64;
        let max_abs = if any_nan { f64::NAN } else { worst.0 };
        ResidualReport {
            max_abs,
            rms: if any_nan { f64::NAN } else { (sq / n).sqrt() },
            grid,
            worst_point: worst.1,
            worst_equation: worst.2,
            threshold,
            passed: max_abs <= threshold,
        }
    }
}

/// Step that keeps `(k h)` near 0.03 for a local log-derivative `k`.
fn step(k: f64, lo: f64, hi: f64) -> f64 {
    if k > 0.0 && k.is_finite() {
        (0.03 / k).clamp(lo, hi)
    } else {
        hi
    }
}

/// Local frequency scale: `max(|ψ'/ψ|, |ψ''/ψ|^½)`.
fn log_derivative(vals: &[(Complex64, Complex64, Complex64)], delta: f64) -> f64 {
    let peak = vals.iter().map(|v| v.1.norm()).fold(0.0, f64::max);
    let floor = 1e-3 * peak;
    vals.iter()
        .map(|(m, c, p)| {
            let den = c.norm().max(floor);
            let d1 = ((*p - *m) / (2.0 * delta)).norm() / den;
            let d2 = ((*p - 2.0 * *c + *m) / (delta * delta)).norm() / den;
            d1.max(d2.sqrt())
        })
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

/// Residual of the equation on the grid, with 8th-order centered
/// differences. Each time row is normalized by `max(1, ‖ψ(t)‖_∞)`.
pub fn pde_residual(exact: &ExactSolution, coeffs: &CoefficientSet, grid: &GridSpec, threshold: f64) -> Result<ResidualReport> {
    pde_residual_with(exact, coeffs, grid, threshold, None)
}

/// [`pde_residual`] with fixed `(h_t, h_x)` steps (`h_y = h_x`) instead of
/// the per-row choice; used for convergence studies.
pub fn pde_residual_with(
    exact: &ExactSolution,
    coeffs: &CoefficientSet,
    grid: &GridSpec,
    threshold: f64,
    steps: Option<(f64, f64)>,
) -> Result<ResidualReport> {
    let two_d = coeffs.dimension == 2;
    if two_d != grid.y.is_some() || exact.dimension != coeffs.dimension {
        return Err(Error::Grid(format!(
            "{}D solution, {}D equation, grid {grid}",
            exact.dimension, coeffs.dimension
        )));
    }
    let (ts, xs, ys) = (grid.ts(), grid.xs(), grid.ys());
    if ts.is_empty() || xs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let rows: Vec<Vec<(f64, Vec<f64>, Option<usize>)>> = ts
        .par_iter()
        .map(|&t| residual_row(exact, coeffs, t, &xs, &ys, two_d, steps))
        .collect::<Result<_>>()?;
    let samples: Vec<_> = rows.into_iter().flatten().collect();
    Ok(ResidualReport::from_samples(&samples, format!("{grid}, 8th-order centered differences"), threshold))
}

fn residual_row(
    exact: &ExactSolution,
    coeffs: &CoefficientSet,
    t: f64,
    xs: &[f64],
    ys: &[f64],
    two_d: bool,
    steps: Option<(f64, f64)>,
) -> Result<Vec<(f64, Vec<f64>, Option<usize>)>> {
    let s0 = exact.at(t);
    let probe = 1e-5;
    let (sm, sp) = (exact.at(t - probe), exact.at(t + probe));
    let mut tvals = Vec::new();
    let mut xvals = Vec::new();
    let mut yvals = Vec::new();
    for &y in ys {
        for &x in xs {
            let c = s0(x, y);
            tvals.push((sm(x, y), c, sp(x, y)));
            xvals.push((s0(x - probe, y), c, s0(x + probe, y)));
            if two_d {
                yvals.push((s0(x, y - probe), c, s0(x, y + probe)));
            }
        }
    }
    let peak = tvals.iter().map(|v| v.1.norm()).fold(0.0, f64::max);
    if !peak.is_finite() {
        return Err(Error::Singular(format!("solution is not finite at t = {t}")));
    }
    let (ht, hx, hy) = match steps {
        Some((ht, hx)) => (ht, hx, hx),
        None => {
            let hx = step(log_derivative(&xvals, probe), 2e-3, 0.05);
            (
                step(log_derivative(&tvals, probe), 1e-4, 0.02),
                hx,
                if two_d { step(log_derivative(&yvals, probe), 2e-3, 0.05) } else { hx },
            )
        }
    };
    let (lo, hi) = exact.domain;
    if t - 4.0 * ht <= lo || t + 4.0 * ht >= hi {
        return Err(Error::Singular(format!(
            "time stencil at t = {t} leaves the solution domain [{lo}, {hi}]"
        )));
    }
    if let Some(ts) = exact.predicted_blowup {
        if (t - ts).abs() <= 4.0 * ht {
            return Err(Error::Singular(format!("grid touches the blow-up time {ts}")));
        }
    }
    let slices: Vec<_> = (1..=4)
        .map(|j| (exact.at(t - j as f64 * ht), exact.at(t + j as f64 * ht)))
        .collect();
    let a = coeffs.a.eval(t);
    let b = coeffs.b.eval(t);
    let c = coeffs.c.eval(t);
    let d = coeffs.d.eval(t);
    let f = coeffs.f.eval(t);
    let g = coeffs.g.eval(t);
    let f2 = coeffs.f2.eval(t);
    let g2 = coeffs.g2.eval(t);
    let big_g = coeffs.big_g.eval(t);
    let h = coeffs.h.eval(t);
    let s = coeffs.s;
    let i = Complex64::i();
    let scale = peak.max(1.0);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y in ys {
        for &x in xs {
            let psi = s0(x, y);
            let mut pt = Complex64::new(0.0, 0.0);
            for (j, (m, p)) in slices.iter().enumerate() {
                pt += (p(x, y) - m(x, y)) * D1_8[j];
            }
            pt /= ht;
            let mut px = Complex64::new(0.0, 0.0);
            let mut pxx = psi * D2_8[0];
            for j in 1..=4 {
                let (m, p) = (s0(x - j as f64 * hx, y), s0(x + j as f64 * hx, y));
                px += (p - m) * D1_8[j - 1];
                pxx += (p + m) * D2_8[j];
            }
            px /= hx;
            pxx /= hx * hx;
            let nl = h * psi.norm_sqr().powf(s) * psi;
            let r = if two_d {
                let mut py = Complex64::new(0.0, 0.0);
                let mut pyy = psi * D2_8[0];
                for j in 1..=4 {
                    let (m, p) = (s0(x, y - j as f64 * hy), s0(x, y + j as f64 * hy));
                    py += (p - m) * D1_8[j - 1];
                    pyy += (p + m) * D2_8[j];
                }
                py /= hy;
                pyy /= hy * hy;
                i * pt + a * (pxx + pyy) - (b * (x * x + y * y) - f * x - f2 * y + big_g) * psi
                    + i * c * (x * px + y * py)
                    + 2.0 * i * d * psi
                    - i * (g * px + g2 * py)
                    - nl
            } else {
                i * pt + a * pxx - (b * x * x - f * x + big_g) * psi + i * c * x * px + i * d * psi - i * g * px - nl
            };
            let mut point = vec![t, x];
            if two_d {
                point.push(y);
            }
            out.push((r.norm() / scale, point, None));
        }
    }
    Ok(out)
}

/// A solved phase system, Riccati or Ermakov.
#[derive(Clone, Copy)]
pub enum PhaseSystem<'a> {
    Riccati(&'a RiccatiSolution),
    Ermakov(&'a ErmakovSolution),
}

impl PhaseSystem<'_> {
    fn source(&self) -> &dyn PhaseSource {
        match self {
            PhaseSystem::Riccati(s) => *s,
            PhaseSystem::Ermakov(s) => *s,
        }
    }

    fn c0_l0(&self) -> (f64, f64) {
        match self {
            PhaseSystem::Riccati(s) => (0.0, s.params.l0),
            PhaseSystem::Ermakov(s) => (s.c0, s.params.l0),
        }
    }
}

const D1_6: [f64; 3] = [3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];

/// Residuals of the six phase equations at 400 points of the solution
/// domain (clipped to `|t| ≤ 50`), derivatives by 6th-order differences,
/// each normalized by `max(1, |derivative|)`. Near a zero of `μ` the step
/// shrinks with the distance to the pole and points closer than `1e-3` are
/// skipped. For forced kernels only points with `|μ₀'| ≥ 0.05 |μ₀'(0)|` are
/// used: the kernel quadratures cancel catastrophically at a zero of `μ₀'`,
/// which is where such a kernel's domain ends.
pub fn system_residual(sys: PhaseSystem<'_>, coeffs: &CoefficientSet, threshold: f64) -> ResidualReport {
    let src = sys.source();
    let (c0, l0) = sys.c0_l0();
    let kernel = match sys {
        PhaseSystem::Riccati(s) => s.kernel(),
        PhaseSystem::Ermakov(s) => Some(s.kernel()),
    }
    .filter(|k| k.is_forced());
    let slope0 = kernel.map_or(0.0, |k| k.basis.mu0p(0.0).abs());
    let h0 = 2e-3;
    let (lo, hi) = src.domain();
    let dom = (lo.max(-50.0) + 4.0 * h0, hi.min(50.0) - 4.0 * h0);
    let samples: Vec<_> = sample_points(dom, 400)
        .into_par_iter()
        .filter_map(|t| {
            let p = src.phases(t);
            let dist = (p.mu / src.mu_prime(t)).abs();
            if dist < 1e-3 || !p.mu.is_finite() {
                return None;
            }
            let h = h0.min(dist / 40.0);
            if let Some(k) = kernel {
                if (-3..=3).any(|j| k.basis.mu0p(t + j as f64 * h).abs() < 0.05 * slope0) {
                    return None;
                }
            }
            let around: Vec<_> = (1..=3)
                .map(|j| (src.phases(t - j as f64 * h), src.phases(t + j as f64 * h)))
                .collect();
            let der = |get: fn(&crate::riccati::Phases) -> f64| {
                around
                    .iter()
                    .zip(D1_6)
                    .map(|((m, q), w)| w * (get(q) - get(m)))
                    .sum::<f64>()
                    / h
            };
            let (a, b, c) = (coeffs.a.eval(t), coeffs.b.eval(t), coeffs.c.eval(t));
            let (f, g) = (coeffs.f.eval(t), coeffs.g.eval(t));
            let ders = [
                der(|p| p.alpha),
                der(|p| p.beta),
                der(|p| p.gamma),
                der(|p| p.delta),
                der(|p| p.eps),
                der(|p| p.kappa),
            ];
            let lin = c + 4.0 * a * p.alpha;
            let res = [
                ders[0] + b + 2.0 * c * p.alpha + 4.0 * a * p.alpha * p.alpha - c0 * a * p.beta.powi(4),
                ders[1] + lin * p.beta,
                ders[2] + l0 * a * p.beta * p.beta,
                ders[3] + lin * p.delta - f - 2.0 * p.alpha * g - 2.0 * c0 * a * p.beta.powi(3) * p.eps,
                ders[4] - (g - 2.0 * a * p.delta) * p.beta,
                ders[5] - g * p.delta + a * p.delta * p.delta - c0 * a * (p.beta * p.eps).powi(2),
            ];
            let (k, v) = res
                .iter()
                .zip(ders)
                .map(|(r, d)| r.abs() / d.abs().max(1.0))
                .enumerate()
                .fold((0, 0.0f64), |acc, (k, v)| if v > acc.1 || v.is_nan() { (k, v) } else { acc });
            Some((v, vec![t], Some(k + 1)))
        })
        .collect();
    ResidualReport::from_samples(
        &samples,
        format!("t in [{}, {}], 400 points, 6th-order differences, h <= {h0}", dom.0, dom.1),
        threshold,
    )
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `‖ψ(t)‖₂²` on the grid (tensor grid in 2D), with the edge-to-peak ratio.
pub fn mass(exact: &ExactSolution, t: f64, xs: &[f64]) -> (f64, f64) {
    let s = exact.at(t);
    let rows: Vec<Vec<f64>> = if exact.dimension == 2 {
        xs.iter().map(|&y| xs.iter().map(|&x| s(x, y).norm_sqr()).collect()).collect()
    } else {
        vec![xs.iter().map(|&x| s(x, 0.0).norm_sqr()).collect()]
    };
    let peak = rows.iter().flatten().cloned().fold(0.0, f64::max);
    let edge = if exact.dimension == 2 {
        let n = xs.len() - 1;
        let mut e = 0.0f64;
        for k in 0..=n {
            e = e.max(rows[0][k]).max(rows[n][k]).max(rows[k][0]).max(rows[k][n]);
        }
        e
    } else {
        rows[0][0].max(*rows[0].last().unwrap())
    };
    let total = if exact.dimension == 2 {
        let inner: Vec<f64> = rows.iter().map(|r| trapezoid(xs, r)).collect();
        trapezoid(xs, &inner)
    } else {
        trapezoid(xs, &rows[0])
    };
    (total, if peak > 0.0 { (edge / peak).sqrt() } else { 0.0 })
}

/// Compares `‖ψ(t)‖₂²` with `‖ψ(t₀)‖₂² exp(n ∫(c - 2d))`, `n` the
/// dimension; `times[0]` is the reference time.
pub fn mass_law_check(exact: &ExactSolution, coeffs: &CoefficientSet, times: &[f64], xs: &[f64], threshold: f64) -> Result<ResidualReport> {
    if times.is_empty() || xs.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    let n = f64::from(exact.dimension);
    let masses: Vec<(f64, f64)> = times.par_iter().map(|&t| mass(exact, t, xs)).collect();
    if let Some(&(_, ratio)) = masses.iter().find(|m| m.1 >= 1e-8) {
        return Err(Error::BoundaryMass { ratio });
    }
    let m0 = masses[0].0;
    let t0 = times[0];
    let mut samples = Vec::new();
    for (&t, &(m, _)) in times.iter().zip(&masses) {
        let growth = integrate(|s| coeffs.c.eval(s) - 2.0 * coeffs.d.eval(s), t0, t, 1e-13)?;
        let want = m0 * (n * growth).exp();
        samples.push(((m - want).abs() / want.abs().max(1e-300), vec![t], None));
    }
    Ok(ResidualReport::from_samples(
        &samples,
        format!("{} times, {} x-points, trapezoidal rule", times.len(), xs.len()),
        threshold,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::solve_basis;
    use crate::coeffs::TimeFunction;
    use crate::ermakov::ermakov_multiparameter;
    use crate::riccati::{alternative_solve, riccati_kernel, riccati_multiparameter, RiccatiParameters};
    use crate::seeds::{build_seed, elliptic_profile, SeedKind};
    use crate::transforms::{family_solution, lens_apply, soliton_assemble, FamilyParams, Provenance};
    use std::collections::BTreeMap;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn grid_spec_round_trip() {
        let g: GridSpec = "0.5:3:201,-10:10:401".parse().unwrap();
        assert_eq!(g.t, (0.5, 3.0, 201));
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
        assert!("0:1:2".parse::<GridSpec>().is_err());
        assert!("0:1:0,0:1:3".parse::<GridSpec>().is_err());
        assert_eq!("0:1:3,0:1:3,-1:1:5".parse::<GridSpec>().unwrap().ys().len(), 5);
    }

    #[test]
    fn zero_field_has_zero_residual() {
        let c = CoefficientSet::free(1.0);
        let psi = ExactSolution::new(
            |_| Box::new(|_, _| Complex64::new(0.0, 0.0)),
            1,
            Provenance::default(),
            (-10.0, 10.0),
            c.clone(),
        );
        let r = pde_residual(&psi, &c, &GridSpec::new((0.0, 1.0, 5), (-1.0, 1.0, 5)), 0.0).unwrap();
        assert_eq!(r.max_abs, 0.0);
        assert!(r.passed);
    }

    fn peregrine() -> (CoefficientSet, ExactSolution) {
        // Standard NLS i u_t + u_xx + 2|u|²u = 0 in gauge form.
        let mut c = CoefficientSet::free(1.0);
        c.l0 = -1.0;
        c.h = TimeFunction::constant(-2.0);
        let sol = alternative_solve(&c, 0.0, 0.0, 1.0, -1.0, (-5.0, 5.0)).unwrap();
        let seed = build_seed(SeedKind::Peregrine, &params(&[("A", 1.0), ("l0", -1.0), ("lambda", -2.0)])).unwrap();
        let psi = lens_apply(&sol, &seed, &c).unwrap();
        (c, psi)
    }

    #[test]
    fn peregrine_residual() {
        let (c, psi) = peregrine();
        let r = pde_residual(&psi, &c, &GridSpec::new((-2.0, 2.0, 41), (-8.0, 8.0, 81)), 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_abs >= r.rms);
    }

    #[test]
    fn stencil_order_convergence() {
        let (c, psi) = peregrine();
        let g = GridSpec::new((-0.5, 0.5, 5), (-2.0, 2.0, 9));
        let coarse = pde_residual_with(&psi, &c, &g, 1.0, Some((0.02, 0.04))).unwrap().max_abs;
        let fine = pde_residual_with(&psi, &c, &g, 1.0, Some((0.01, 0.02))).unwrap().max_abs;
        assert!(coarse / fine >= 64.0 || fine < 1e-10, "{coarse:e} -> {fine:e}");
    }

    #[test]
    fn unreachable_threshold_reports_worst_point() {
        let (c, psi) = peregrine();
        let r = pde_residual(&psi, &c, &GridSpec::new((-1.0, 1.0, 5), (-2.0, 2.0, 9)), 1e-30).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_point.len(), 2);
    }

    #[test]
    fn wrong_equation_fails() {
        let (mut c, psi) = peregrine();
        c.h = TimeFunction::constant(-2.1);
        let r = pde_residual(&psi, &c, &GridSpec::new((-1.0, 1.0, 5), (-2.0, 2.0, 9)), 1e-6).unwrap();
        assert!(!r.passed && r.max_abs > 1e-3);
    }

    #[test]
    fn family_soliton_solves_its_equation() {
        // Confirms the potential offset sign G = -c0 a β² ε².
        let mut fp = FamilyParams::new(-2.0, 2.0 / 3.0);
        fp.delta0 = 1.0;
        fp.eps0 = 0.4;
        fp.alpha0 = 0.1;
        fp.y = 0.3;
        let (c, psi) = family_solution(fp).unwrap();
        let r = pde_residual(&psi, &c, &GridSpec::new((0.2, 6.0, 30), (-8.0, 8.0, 81)), 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
        let mut flipped = c.clone();
        let g = c.big_g.clone();
        flipped.big_g = TimeFunction::from_fn("-G", move |t| -g.eval(t));
        let r = pde_residual(&psi, &flipped, &GridSpec::new((0.2, 6.0, 30), (-8.0, 8.0, 81)), 1e-6).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn forced_ermakov_soliton_residual() {
        let c = CoefficientSet::from_exprs(&[("a", "1/2"), ("b", "1/2"), ("f", "sin(t)"), ("c", "0.2"), ("d", "0.1")], 1.0, 1.0, 1)
            .unwrap();
        let basis = solve_basis(&c, 3.0, 1e-12).unwrap();
        let k = riccati_kernel(&basis, &c, 1e-12).unwrap();
        let p = RiccatiParameters {
            alpha0_init: 0.1,
            beta0_init: 0.8,
            delta0_init: 0.3,
            eps0_init: -0.2,
            ..Default::default()
        };
        let es = ermakov_multiparameter(&k, p, 0.7, -1.0, -2.0).unwrap();
        let prof = elliptic_profile(-1.0, -2.0, 0.0).unwrap();
        let psi = soliton_assemble(&es, &prof, 0.4).unwrap();
        let sys = system_residual(PhaseSystem::Ermakov(&es), &c, 1e-7);
        assert!(sys.passed, "{sys:?}");
        let r = pde_residual(&psi, &psi.coefficients, &GridSpec::new((0.2, 1.5, 12), (-6.0, 6.0, 61)), 1e-6).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn system_residual_of_unforced_kernel() {
        let mut c = CoefficientSet::free(0.5);
        c.b = TimeFunction::constant(0.5);
        let basis = solve_basis(&c, 3.0, 1e-12).unwrap();
        let k = riccati_kernel(&basis, &c, 1e-12).unwrap();
        let sol = riccati_multiparameter(&k, RiccatiParameters::default()).unwrap();
        let r = system_residual(PhaseSystem::Riccati(&sol), &c, 1e-7);
        assert!(r.passed, "{r:?}");
        let p = sol.phases(1.0);
        assert_eq!((p.delta, p.eps, p.kappa), (0.0, 0.0, 0.0));
    }

    #[test]
    fn bright_mass_is_conserved_and_damped() {
        let (c, psi) = {
            let mut c = CoefficientSet::free(1.0);
            c.l0 = -1.0;
            c.h = TimeFunction::constant(-2.0);
            let sol = alternative_solve(&c, 0.0, 0.0, 1.0, -1.0, (0.0, 3.0)).unwrap();
            let seed = build_seed(SeedKind::Bright, &params(&[("l0", -1.0), ("lambda", -2.0), ("v", -1.0)])).unwrap();
            (c.clone(), lens_apply(&sol, &seed, &c).unwrap())
        };
        let xs: Vec<f64> = (0..2001).map(|i| -30.0 + 0.03 * i as f64).collect();
        let r = mass_law_check(&psi, &c, &[0.0, 0.7, 2.0], &xs, 1e-8).unwrap();
        assert!(r.passed, "{r:?}");
        let narrow: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        assert!(matches!(mass_law_check(&psi, &c, &[0.0], &narrow, 1e-8), Err(Error::BoundaryMass { .. })));
    }
}
