//! Data behind the published figures: `|ψ|²` over a `(t, x)` grid.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::output::Table;
use crate::pipeline::{assemble, PhaseHandle, Run};
use crate::scenario::{load_scenario, Assembly};
use crate::transforms::family_phases;
use crate::validate::GridSpec;

/// Spot-check tolerance, relative to `max(1, |value|)`.
pub const SPOT_TOL: f64 = 1e-8;
const SPOT_POINTS: usize = 10;

#[derive(Debug, Clone, Copy)]
pub struct FigureSpec {
    pub id: &'static str,
    pub scenario: &'static str,
    pub overrides: &'static [(&'static str, f64)],
    /// `None` uses the scenario grid.
    pub grid: Option<&'static str>,
    pub caption: &'static str,
}

pub const FIGURES: &[FigureSpec] = &[
    FigureSpec {
        id: "fig1a",
        scenario: "family_bright",
        overrides: &[("delta0", 0.0)],
        grid: None,
        caption: "bright family soliton, delta(0) = 0",
    },
    FigureSpec {
        id: "fig1b",
        scenario: "family_bright",
        overrides: &[("delta0", 1.0)],
        grid: None,
        caption: "bright family soliton, delta(0) = 1",
    },
    FigureSpec {
        id: "fig2a",
        scenario: "family_dark",
        overrides: &[("delta0", 0.0)],
        grid: None,
        caption: "dark family soliton, delta(0) = 0",
    },
    FigureSpec {
        id: "fig2b",
        scenario: "family_dark",
        overrides: &[("delta0", 1.0)],
        grid: None,
        caption: "dark family soliton, delta(0) = 1",
    },
    FigureSpec {
        id: "fig3a",
        scenario: "bending_bright",
        overrides: &[("v", 1.0), ("delta0", -30.0), ("eps0", 0.0)],
        grid: Some("0:1:201,-45:5:501"),
        caption: "bright soliton bent to the left: v = 1, delta(0) = -30, eps(0) = 0",
    },
    FigureSpec {
        id: "fig3b",
        scenario: "bending_bright",
        overrides: &[("v", 1.0), ("delta0", 1.0 / 6.0), ("eps0", -1.0 / 6.0)],
        grid: None,
        caption: "centered bright soliton: v = 1, delta(0) = 1/6, eps(0) = -1/6",
    },
    FigureSpec {
        id: "fig3c",
        scenario: "bending_bright",
        overrides: &[("v", 1.0), ("delta0", 0.0), ("eps0", -10.0)],
        grid: Some("0:1:201,-5:45:501"),
        caption: "bright soliton bent to the right: v = 1, delta(0) = 0, eps(0) = -10",
    },
    FigureSpec {
        id: "fig4a",
        scenario: "bending_dark",
        overrides: &[("A", 2.0), ("delta0", -1.0), ("eps0", 0.0)],
        grid: None,
        caption: "dark soliton bent to the left: A = 2, delta(0) = -1, eps(0) = 0",
    },
    FigureSpec {
        id: "fig4b",
        scenario: "bending_dark",
        overrides: &[("A", 2.0), ("delta0", 0.0), ("eps0", 0.0)],
        grid: None,
        caption: "centered dark soliton: A = 2, delta(0) = 0, eps(0) = 0",
    },
    FigureSpec {
        id: "fig4c",
        scenario: "bending_dark",
        overrides: &[("A", 2.0), ("delta0", 0.0), ("eps0", -2.0)],
        grid: None,
        caption: "dark soliton bent to the right: A = 2, delta(0) = 0, eps(0) = -2",
    },
    FigureSpec {
        id: "fig5",
        scenario: "sch1",
        overrides: &[("v", -2.0)],
        grid: None,
        caption: "periodic bright soliton, d = sin t, h = -3 exp(3 - 3 cos t)",
    },
    FigureSpec {
        id: "fig6",
        scenario: "sch1_fast_decay",
        overrides: &[],
        grid: None,
        caption: "fast-decaying bright soliton",
    },
    FigureSpec {
        id: "fig7",
        scenario: "sch2",
        overrides: &[("A", 0.5), ("kappa0", 0.0)],
        grid: None,
        caption: "Peregrine soliton: A = 0.5, kappa(0) = 0",
    },
    FigureSpec {
        id: "fig8",
        scenario: "sch2_perturbed",
        overrides: &[],
        grid: None,
        caption: "perturbed Peregrine soliton",
    },
];

pub fn figure_ids() -> Vec<&'static str> {
    FIGURES.iter().map(|f| f.id).collect()
}

pub fn figure_spec(id: &str) -> Result<&'static FigureSpec> {
    FIGURES
        .iter()
        .find(|f| f.id == id)
        .ok_or_else(|| Error::UnknownFigure(id.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpotCheck {
    pub t: f64,
    pub x: f64,
    pub value: f64,
    pub expected: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct FigureData {
    pub spec: &'static FigureSpec,
    pub run: Run,
    pub grid: GridSpec,
    /// `|ψ|²`, one row per time.
    pub values: Vec<Vec<f64>>,
    pub spot_checks: Vec<SpotCheck>,
}

impl FigureData {
    pub fn passed(&self) -> bool {
        self.spot_checks.iter().all(|s| s.passed)
    }

    /// `t,x,abs2` rows, time-major.
    pub fn table(&self) -> Table {
        let (ts, xs) = (self.grid.ts(), self.grid.xs());
        let mut out = Table::new(&["t", "x", "abs2"]);
        for (t, row) in ts.iter().zip(&self.values) {
            for (x, v) in xs.iter().zip(row) {
                out.push(vec![*t, *x, *v]);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        self.table().to_csv()
    }
}

fn seed_param(run: &Run, key: &str) -> f64 {
    run.parameters
        .get(key)
        .or_else(|| run.scenario.seed.as_ref().and_then(|s| s.params.get(key)))
        .copied()
        .unwrap_or(f64::NAN)
}

fn closed(run: &Run, key: &str, t: f64) -> f64 {
    run.scenario.closed_forms.get(key).map_or(f64::NAN, |f| f.eval(t))
}

/// `|ψ(t, x)|²` written out from the closed forms, without the assembly code.
pub fn closed_form_modulus(run: &Run, t: f64, x: f64) -> f64 {
    let p = &run.parameters;
    let l0 = p["l0"];
    match (&run.phases, run.scenario.assembly) {
        (PhaseHandle::Family(fp), _) => {
            let f = family_phases(fp, t);
            let z = f.beta * x + 2.0 * f.gamma * fp.y + f.eps;
            let prof = if fp.h0 < 0.0 { 1.0 / z.cosh().powi(2) } else { z.tanh().powi(2) };
            prof / f.mu
        }
        (_, Assembly::Lens) => {
            let (mu, beta, gamma) = (closed(run, "mu", t), closed(run, "beta", t), closed(run, "gamma", t));
            // f = g = 0: δ = δ(0)β/β(0), so ε is linear in γ.
            let eps = p["eps0"] + 2.0 * p["delta0"] * (gamma - p["gamma0"]) / (l0 * p["beta0"]);
            let z = beta * x + eps;
            let lambda = seed_param(run, "lambda");
            let u2 = if run.scenario.name.contains("dark") {
                let a = seed_param(run, "A");
                let k = a.abs() * (lambda / 2.0).sqrt();
                a * a * (k * z).tanh().powi(2)
            } else {
                let k2 = l0 * seed_param(run, "v");
                -2.0 * k2 / lambda / (k2.sqrt() * z).cosh().powi(2)
            };
            u2 / mu.abs()
        }
        (_, Assembly::Gauge) => {
            let mu = closed(run, "mu", t);
            let lambda = seed_param(run, "lambda");
            let u2 = if run.scenario.name.starts_with("sch2") {
                let a = seed_param(run, "A");
                let (a2, tau) = (a * a, t);
                let den = 1.0 + 16.0 * a2 * a2 * tau * tau + 4.0 * a2 * x * x;
                let re = 3.0 - 16.0 * a2 * a2 * tau * tau - 4.0 * a2 * x * x;
                let im = 16.0 * a2 * tau;
                (-2.0 / lambda) * a2 * (re * re + im * im) / (den * den)
            } else {
                let k2 = l0 * seed_param(run, "v");
                -2.0 * k2 / lambda / (k2.sqrt() * x).cosh().powi(2)
            };
            u2 / mu.abs()
        }
        _ => f64::NAN,
    }
}

/// Assembles and samples figure `id`.
pub fn figure_data(id: &str) -> Result<FigureData> {
    let spec = figure_spec(id)?;
    let sc = load_scenario(spec.scenario)?;
    let overrides: BTreeMap<String, f64> = spec.overrides.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let run = assemble(&sc, &overrides)?;
    let grid = match spec.grid {
        Some(g) => g.parse::<GridSpec>()?,
        None => sc
            .grid
            .clone()
            .ok_or_else(|| Error::Grid(format!("scenario '{}' has no default grid", sc.name)))?,
    };
    let (ts, xs) = (grid.ts(), grid.xs());
    let values: Vec<Vec<f64>> = ts
        .par_iter()
        .map(|&t| {
            let s = run.exact.at(t);
            xs.iter().map(|&x| s(x, 0.0).norm_sqr()).collect()
        })
        .collect();
    let spot_checks = (0..SPOT_POINTS)
        .map(|k| {
            // Deterministic, spread over the grid, off the symmetry axes.
            let i = (k * 37 + 11) % ts.len();
            let j = (k * 131 + 7 * k * k + 23) % xs.len();
            let (t, x, value) = (ts[i], xs[j], values[i][j]);
            let expected = closed_form_modulus(&run, t, x);
            SpotCheck {
                t,
                x,
                value,
                expected,
                passed: (value - expected).abs() <= SPOT_TOL * expected.abs().max(1.0),
            }
        })
        .collect();
    Ok(FigureData {
        spec,
        run,
        grid,
        values,
        spot_checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_figure_spot_checks() {
        for id in figure_ids() {
            let f = figure_data(id).unwrap();
            for s in &f.spot_checks {
                assert!(s.passed, "{id}: {s:?}");
            }
            // The structure stays inside the window.
            let last = f.values.last().unwrap();
            let peak = last.iter().cloned().fold(0.0, f64::max);
            assert!(peak.is_finite() && peak > 0.0, "{id}");
        }
    }

    #[test]
    fn bending_changes_the_data() {
        let a = figure_data("fig1a").unwrap();
        let b = figure_data("fig1b").unwrap();
        let d = a
            .values
            .iter()
            .flatten()
            .zip(b.values.iter().flatten())
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(d > 1e-3);
        // Same amplitude envelope: only the center moves.
        let peak = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
        assert!((peak(&a.values[50]) - peak(&b.values[50])).abs() < 1e-3 * peak(&a.values[50]));
    }

    #[test]
    fn peregrine_peak() {
        let f = figure_data("fig7").unwrap();
        // |ψ(0, 0)| = (3A/2)/sqrt(μ(0)), μ(0) = 1.
        let v = f.run.exact.psi(0.0, 0.0).norm();
        assert!((v - 0.75).abs() < 1e-12);
        assert!(matches!(figure_data("fig9"), Err(Error::UnknownFigure(_))));
    }

    #[test]
    fn csv_is_deterministic() {
        let a = figure_data("fig5").unwrap().to_csv();
        let b = figure_data("fig5").unwrap().to_csv();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 201 * 401);
    }
}
