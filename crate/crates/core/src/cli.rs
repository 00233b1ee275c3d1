//! The `vcnls` command line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::figures::{figure_data, figure_ids, SPOT_TOL};
use crate::numerics::integrate;
use crate::output::{CheckRow, Format, RunManifest, Table};
use crate::pipeline::{assemble, verify, Run, Verification, MASS_TOL};
use crate::scenario::{list_scenarios, load_scenario};
use crate::simulate::{self, Boundary, Initial, Scheme, SimOptions, StopReason};
use crate::validate::GridSpec;

/// Exit status for a run whose checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status for a failed check or a numerical failure.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for bad arguments, unknown scenarios or malformed files.
pub const EXIT_USAGE: i32 = 2;

/// Final-time `L²` error bound for `simulate`.
pub const SIM_L2_TOL: f64 = 1e-4;
/// Mass-law bound for simulated trajectories.
pub const SIM_MASS_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "vcnls", version, about = "Exact solutions of variable-coefficient NLS equations, with numerical checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List catalog scenarios and figure ids.
    List,
    /// Assemble a scenario, verify it and write its phases and field.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Run the residual checks for one scenario or `all`.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Integrate a 1D scenario numerically and compare with the exact solution.
    #[command(allow_negative_numbers = true)]
    Simulate(SimulateArgs),
    /// Write the data behind a figure (`all` for every figure).
    Figure(FigureArgs),
}

#[derive(Debug, Args, Default)]
pub struct ParamArgs {
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub delta0: Option<f64>,
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub kappa0: Option<f64>,
    #[arg(long)]
    pub l0: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub xi0: Option<f64>,
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub y: Option<f64>,
    /// Any other parameter, e.g. a seed's `v` or `A`.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub extra: Vec<String>,
}

impl ParamArgs {
    pub fn overrides(&self) -> Result<BTreeMap<String, f64>> {
        let mut m = BTreeMap::new();
        for (k, v) in [
            ("mu0", self.mu0),
            ("alpha0", self.alpha0),
            ("beta0", self.beta0),
            ("gamma0", self.gamma0),
            ("delta0", self.delta0),
            ("eps0", self.eps0),
            ("kappa0", self.kappa0),
            ("l0", self.l0),
            ("c0", self.c0),
            ("xi0", self.xi0),
            ("h0", self.h0),
            ("y", self.y),
        ] {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        }
        for kv in &self.extra {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("--param expects KEY=VALUE, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("--param {k}: `{v}` is not a number")))?;
            m.insert(k.trim().to_string(), v);
        }
        Ok(m)
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory (default `out/<name>`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: Format,
}

impl OutArgs {
    fn dir(&self, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| Path::new("out").join(name))
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub scenario: String,
    #[command(flatten)]
    pub params: ParamArgs,
    /// `t0:t1:nt,x0:x1:nx[,y0:y1:ny]`; defaults to the scenario grid.
    #[arg(long)]
    pub grid: Option<GridSpec>,
    /// PDE residual threshold.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// A scenario name or file, or `all`.
    pub target: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub grid: Option<GridSpec>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: String,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Final time.
    #[arg(long)]
    pub t1: f64,
    /// Grid points.
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// `mol` (method of lines) or `split` (split-step Fourier).
    #[arg(long, default_value = "mol")]
    pub scheme: Scheme,
    /// Half-width of the periodic/Dirichlet window; by default where the
    /// exact solution has decayed to 1e-10 of its peak.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Number of snapshots after the initial one.
    #[arg(long, default_value_t = 10)]
    pub snapshots: usize,
    /// Time-integration tolerance.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Figure id (`fig1a` … `fig8`) or `all`.
    pub id: String,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Maps a library error to an exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::UnknownScenario(_)
        | Error::MalformedScenario(_)
        | Error::MissingCoefficient(_)
        | Error::InvalidParameter(_)
        | Error::Grid(_)
        | Error::EmptyGrid
        | Error::UnknownFigure(_)
        | Error::Scheme(_)
        | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Parses `args` and runs the command, printing to `out`; returns the exit
/// status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a check failed.
pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::List => cmd_list(out).map(|_| true),
        Command::Solve(a) => cmd_solve(a, out).map(|m| m.passed),
        Command::Verify(a) => cmd_verify(a, out).map(|m| m.passed),
        Command::Simulate(a) => cmd_simulate(a, out).map(|m| m.passed),
        Command::Figure(a) => cmd_figure(a, out).map(|m| m.passed),
    }
}

fn cmd_list(out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{:<22} {:>3} {:<16} domain", "scenario", "dim", "assembly")?;
    for name in list_scenarios()? {
        let sc = load_scenario(&name)?;
        writeln!(
            out,
            "{:<22} {:>3} {:<16} [{}, {}]",
            name, sc.coefficients.dimension, sc.assembly.to_string(), sc.time_domain.0, sc.time_domain.1
        )?;
    }
    writeln!(out, "figures: {}", figure_ids().join(" "))?;
    Ok(())
}

fn verification_checks(m: &mut RunManifest, v: &Verification, prefix: &str) {
    m.check(CheckRow::at_most(format!("{prefix}pde_residual"), v.pde.max_abs, v.pde.threshold));
    for (i, s) in v.system.iter().enumerate() {
        let name = if v.system.len() > 1 {
            format!("{prefix}system_residual_axis{}", i + 1)
        } else {
            format!("{prefix}system_residual")
        };
        m.check(CheckRow::at_most(name, s.max_abs, s.threshold));
    }
    for r in &v.regression {
        m.check(CheckRow::at_most(format!("{prefix}closed_form {}", r.name), r.max_dev, r.threshold));
    }
    if let Some(mass) = &v.mass {
        m.check(CheckRow::at_most(format!("{prefix}mass_law"), mass.max_abs, mass.threshold));
    }
}

fn print_checks(out: &mut dyn Write, m: &RunManifest) -> Result<()> {
    for c in &m.checks {
        writeln!(
            out,
            "  {:<4} {:<40} {:>10.3e} <= {:.1e}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        )?;
    }
    Ok(())
}

fn finish(mut m: RunManifest, dir: &Path, start: Instant, out: &mut dyn Write) -> Result<RunManifest> {
    m.wall_time_s = start.elapsed().as_secs_f64();
    let path = m.save(dir)?;
    writeln!(
        out,
        "{}: {} ({} checks, manifest {})",
        m.command,
        if m.passed { "pass" } else { "FAIL" },
        m.checks.len(),
        path.display()
    )?;
    Ok(m)
}

fn phases_table(run: &Run, ts: &[f64]) -> Table {
    let mut t = Table::new(&["t", "alpha", "beta", "gamma", "delta", "eps", "kappa", "mu"]);
    for &s in ts {
        let p = run.phases.phases(s);
        t.push(vec![s, p.alpha, p.beta, p.gamma, p.delta, p.eps, p.kappa, p.mu]);
    }
    t
}

fn field_table(run: &Run, grid: &GridSpec) -> Table {
    let (ts, xs) = (grid.ts(), grid.xs());
    let two_d = grid.y.is_some();
    let ys = if two_d { grid.ys() } else { vec![0.0] };
    let cols: &[&str] = if two_d {
        &["t", "x", "y", "re", "im", "abs2"]
    } else {
        &["t", "x", "re", "im", "abs2"]
    };
    let rows: Vec<Vec<Vec<f64>>> = ts
        .par_iter()
        .map(|&t| {
            let s = run.exact.at(t);
            let mut rows = Vec::with_capacity(xs.len() * ys.len());
            for &x in &xs {
                for &y in &ys {
                    let v = s(x, y);
                    let mut r = vec![t, x];
                    if two_d {
                        r.push(y);
                    }
                    r.extend([v.re, v.im, v.norm_sqr()]);
                    rows.push(r);
                }
            }
            rows
        })
        .collect();
    let mut table = Table::new(cols);
    table.rows = rows.into_iter().flatten().collect();
    table
}

fn run_info(m: &mut RunManifest, run: &Run) {
    m.parameters = run.parameters.clone();
    m.info.insert("phase_system".into(), run.phases.name().into());
    m.info.insert("assembly".into(), run.scenario.assembly.to_string().into());
    if let Some(s) = &run.seed {
        m.info.insert("seed".into(), s.kind.to_string().into());
        m.info.insert("seed_lambda".into(), s.target.lambda.into());
    }
    m.info.insert(
        "predicted_t_star".into(),
        run.blowup.as_ref().map_or(serde_json::Value::Null, |b| b.t_star.into()),
    );
    m.notes.extend(run.notes.iter().cloned());
}

/// `solve`: phases and field over the grid, plus the verification checks.
pub fn cmd_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<RunManifest> {
    let start = Instant::now();
    let sc = load_scenario(&a.scenario)?;
    let run = assemble(&sc, &a.params.overrides()?)?;
    let grid = match &a.grid {
        Some(g) => g.clone(),
        None => run
            .default_grid()
            .ok_or_else(|| Error::Grid(format!("scenario '{}' has no default grid; pass --grid", sc.name)))?,
    };
    let mut m = RunManifest::new("solve", Some(&sc.name));
    run_info(&mut m, &run);
    m.info.insert("grid".into(), grid.to_string().into());
    if let Some(b) = &run.blowup {
        writeln!(out, "predicted blow-up at t* = {:.12}", b.t_star)?;
    }
    let v = verify(&run, Some(&grid), a.tol)?;
    verification_checks(&mut m, &v, "");
    m.notes.extend(v.notes.iter().filter(|n| !run.notes.contains(n)).cloned());
    if !v.pde.passed {
        m.info.insert("pde_worst_point".into(), serde_json::json!(v.pde.worst_point));
    }
    let dir = a.out.dir(&sc.name);
    let ext = a.out.format.extension();
    m.write_output(&dir, &format!("phases.{ext}"), phases_table(&run, &grid.ts()).render(a.out.format).as_bytes())?;
    m.write_output(&dir, &format!("field.{ext}"), field_table(&run, &grid).render(a.out.format).as_bytes())?;
    print_checks(out, &m)?;
    finish(m, &dir, start, out)
}

fn verify_one(name: &str, overrides: &BTreeMap<String, f64>, grid: Option<&GridSpec>, tol: f64) -> Result<Verification> {
    let run = assemble(&load_scenario(name)?, overrides)?;
    verify(&run, grid, tol)
}

/// `verify`: residual suites for one scenario or the whole catalog.
pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<RunManifest> {
    let start = Instant::now();
    let overrides = a.params.overrides()?;
    let all = a.target == "all";
    let names = if all { list_scenarios()? } else { vec![a.target.clone()] };
    if all && !overrides.is_empty() {
        return Err(Error::InvalidParameter("parameter overrides need a single scenario".into()));
    }
    // Sorted by name whatever the completion order.
    let results: Vec<(String, Result<Verification>)> = names
        .par_iter()
        .map(|n| (n.clone(), verify_one(n, &overrides, a.grid.as_ref(), a.tol)))
        .collect();
    let mut m = RunManifest::new("verify", (!all).then_some(a.target.as_str()));
    writeln!(
        out,
        "{:<22} {:>10} {:>10} {:>10} {:>10}  result",
        "scenario", "pde", "system", "closed", "mass"
    )?;
    let mut reports = BTreeMap::new();
    for (name, r) in results {
        let v = match r {
            Ok(v) => v,
            Err(e) if !all => return Err(e),
            Err(e) => {
                writeln!(out, "{name:<22} error: {e}")?;
                m.check(CheckRow {
                    name: format!("{name}: assembly"),
                    value: f64::NAN,
                    threshold: 0.0,
                    passed: false,
                });
                continue;
            }
        };
        let worst = |xs: &mut dyn Iterator<Item = f64>| xs.fold(f64::NAN, f64::max);
        let sys = worst(&mut v.system.iter().map(|s| s.max_abs));
        let reg = worst(&mut v.regression.iter().map(|r| r.max_dev));
        let fmt = |x: f64| if x.is_nan() { "-".to_string() } else { format!("{x:.2e}") };
        writeln!(
            out,
            "{name:<22} {:>10} {:>10} {:>10} {:>10}  {}",
            fmt(v.pde.max_abs),
            fmt(sys),
            fmt(reg),
            fmt(v.mass.as_ref().map_or(f64::NAN, |x| x.max_abs)),
            if v.passed { "pass" } else { "FAIL" }
        )?;
        if !v.pde.passed {
            writeln!(
                out,
                "  pde residual {:.3e} > {:.1e} at {:?}",
                v.pde.max_abs, v.pde.threshold, v.pde.worst_point
            )?;
        }
        verification_checks(&mut m, &v, &format!("{name}: "));
        for n in &v.notes {
            m.notes.push(format!("{name}: {n}"));
        }
        reports.insert(name, v);
    }
    m.info.insert("threshold".into(), a.tol.into());
    m.info.insert("reports".into(), serde_json::to_value(&reports)?);
    let dir = a.out.dir(&format!("verify-{}", a.target));
    finish(m, &dir, start, out)
}

fn stop_name(s: StopReason) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

/// `simulate`: integrate from the exact initial data and compare.
pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> Result<RunManifest> {
    let start = Instant::now();
    let sc = load_scenario(&a.scenario)?;
    let run = assemble(&sc, &a.params.overrides()?)?;
    if run.exact.dimension != 1 {
        return Err(Error::Scheme("only 1D scenarios are simulated".into()));
    }
    let (lo, hi) = run.time_window();
    let t0 = if lo <= 0.0 && 0.0 < hi { 0.0 } else { lo };
    let t_end = run.blowup.as_ref().map_or(hi, |b| b.t_star);
    if !(a.t1 > t0 && a.t1 <= hi.max(t_end)) {
        return Err(Error::InvalidParameter(format!("--t1 {} outside ({t0}, {hi}]", a.t1)));
    }
    if a.snapshots == 0 {
        return Err(Error::InvalidParameter("--snapshots must be positive".into()));
    }
    let times: Vec<f64> = (1..=a.snapshots)
        .map(|i| t0 + (a.t1 - t0) * i as f64 / a.snapshots as f64)
        .collect();
    let probe: Vec<f64> = std::iter::once(t0)
        .chain(times.iter().copied().filter(|&t| t < t_end))
        .collect();
    let decaying = simulate::default_half_width(&run.exact, &probe);
    let mut opts = match (a.half_width.or(decaying), decaying.is_some()) {
        (Some(l), true) if a.scheme == Scheme::SplitStep => SimOptions::periodic(a.n, l, a.scheme),
        (Some(l), true) => SimOptions::new(a.n, l),
        // Non-decaying fields take their boundary values from the exact solution.
        (l, _) => SimOptions {
            scheme: a.scheme,
            boundary: Boundary::Exact(run.exact.clone()),
            absorb: false,
            ..SimOptions::new(a.n, l.unwrap_or(5.0))
        },
    };
    opts.tol = a.tol;
    let traj = simulate::integrate(&run.coefficients, Initial::Exact(&run.exact), t0, &times, &opts)?;
    let mut m = RunManifest::new("simulate", Some(&sc.name));
    run_info(&mut m, &run);
    m.info.insert("scheme".into(), serde_json::to_value(opts.scheme)?);
    m.info.insert("n".into(), a.n.into());
    m.info.insert("half_width".into(), opts.half_width.into());
    m.info.insert("boundary".into(), format!("{:?}", opts.boundary).into());
    m.info.insert("tolerance".into(), opts.tol.into());
    m.info.insert("stop_reason".into(), stop_name(traj.stop).into());
    m.info.insert("t_stop".into(), traj.t_stop.into());
    m.info.insert("steps".into(), traj.steps.into());
    writeln!(out, "stop: {} at t = {:.6} after {} steps", stop_name(traj.stop), traj.t_stop, traj.steps)?;
    let errors = simulate::compare_to_exact(&traj, &run.exact)?;
    match traj.stop {
        StopReason::Completed => {
            let last = errors.last().copied().ok_or(Error::EmptyGrid)?;
            m.check(CheckRow::at_most(format!("l2_error(t = {})", last.t), last.l2, SIM_L2_TOL));
        }
        StopReason::BlowUp | StopReason::ResolutionLost if run.blowup.is_some() => {
            let ts = run.blowup.as_ref().map(|b| b.t_star).unwrap_or(f64::NAN);
            // Distance below the window [0.9 T*, T*], zero inside it.
            let miss = (0.9 * ts - traj.t_stop).max(traj.t_stop - ts).max(0.0);
            m.check(CheckRow::at_most("t_stop in [0.9 t*, t*]", miss, 0.0));
        }
        other => m.check(CheckRow {
            name: format!("stopped early: {}", stop_name(other)),
            value: traj.t_stop,
            threshold: a.t1,
            passed: false,
        }),
    }
    if decaying.is_some() && traj.snapshots.len() > 1 {
        let masses = simulate::masses(&traj);
        let (tm0, m0) = masses[0];
        let c = &run.coefficients;
        let mut worst = 0.0f64;
        for &(t, mass) in &masses[1..] {
            let growth = integrate(|s| c.c.eval(s) - 2.0 * c.d.eval(s), tm0, t, 1e-13)?;
            let want = m0 * growth.exp();
            worst = worst.max((mass - want).abs() / want);
        }
        m.check(CheckRow::at_most("mass_law", worst, SIM_MASS_TOL.max(MASS_TOL)));
    }
    let mut err_table = Table::new(&["t", "l2", "linf"]);
    for e in &errors {
        err_table.push(vec![e.t, e.l2, e.linf]);
    }
    let mut snaps = Table::new(&["t", "x", "re", "im", "abs2"]);
    for s in &traj.snapshots {
        for (x, v) in traj.x.iter().zip(&s.field) {
            snaps.push(vec![s.t, *x, v.re, v.im, v.norm_sqr()]);
        }
    }
    let dir = a.out.dir(&format!("simulate-{}", sc.name));
    let ext = a.out.format.extension();
    m.write_output(&dir, &format!("errors.{ext}"), err_table.render(a.out.format).as_bytes())?;
    m.write_output(&dir, &format!("snapshots.{ext}"), snaps.render(a.out.format).as_bytes())?;
    print_checks(out, &m)?;
    finish(m, &dir, start, out)
}

/// `figure`: `|ψ|²` grids with closed-form spot checks.
pub fn cmd_figure(a: &FigureArgs, out: &mut dyn Write) -> Result<RunManifest> {
    let start = Instant::now();
    let ids: Vec<String> = if a.id == "all" {
        figure_ids().into_iter().map(str::to_string).collect()
    } else {
        vec![a.id.clone()]
    };
    // Fail on unknown ids before any work.
    for id in &ids {
        crate::figures::figure_spec(id)?;
    }
    let dir = a.out.dir(&format!("figure-{}", a.id));
    let mut m = RunManifest::new("figure", None);
    let data: Vec<_> = ids.par_iter().map(|id| figure_data(id)).collect::<Result<_>>()?;
    for f in &data {
        let worst = f
            .spot_checks
            .iter()
            .map(|s| (s.value - s.expected).abs() / s.expected.abs().max(1.0))
            .fold(0.0, |a: f64, b| if b.is_nan() { b } else { a.max(b) });
        m.check(CheckRow::at_most(format!("{}: spot checks", f.spec.id), worst, SPOT_TOL));
        m.info.insert(
            f.spec.id.to_string(),
            serde_json::json!({
                "scenario": f.spec.scenario,
                "caption": f.spec.caption,
                "grid": f.grid.to_string(),
                "parameters": f.run.parameters,
            }),
        );
        if ids.len() == 1 {
            m.scenario = Some(f.spec.scenario.to_string());
            m.parameters = f.run.parameters.clone();
        }
        let name = format!("{}.{}", f.spec.id, a.out.format.extension());
        m.write_output(&dir, &name, f.table().render(a.out.format).as_bytes())?;
    }
    print_checks(out, &m)?;
    finish(m, &dir, start, out)
}
