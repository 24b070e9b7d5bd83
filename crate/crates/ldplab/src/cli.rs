//! `ldplab <command> --config <file> [--out <dir>] [--workers K] [--seed S]`

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use ldp_core::{
    minimize_endpoint, residual, solve_sde, solve_skeleton, CadlagPath, EndpointResult, LdpError, LevyTriplet,
    SdeProblem, TraceRecord, VectorField,
};
use serde::Serialize;

use crate::config::{parse, Command, EventType, ExperimentConfig, FieldSpec, ProbeProcess, ProbeSpec};
use crate::diagnostics::{
    default_martingale_jumps, exact_tail_curve, pure_disc_bound_check, rate_curve, slominski_probe, tightness_probe,
    uet_probe, ExactFamily, RateCurve, Target,
};
use crate::error::{LabError, LabResult};
use crate::formats::{cell, path_table, OutputDir, PathDoc, Table};
use crate::stats::binomial_sigma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandArg {
    Simulate,
    Characteristics,
    Skeleton,
    Rate,
    VerifyLdp,
    Probe,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Simulate => Command::Simulate,
            CommandArg::Characteristics => Command::Characteristics,
            CommandArg::Skeleton => Command::Skeleton,
            CommandArg::Rate => Command::Rate,
            CommandArg::VerifyLdp => Command::VerifyLdp,
            CommandArg::Probe => Command::Probe,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ldplab", version, about = "Small-noise large deviation experiments")]
pub struct Cli {
    pub command: CommandArg,
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; default `output_dir` from the config, else `ldplab-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Sampling threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses arguments, runs, reports errors on stderr and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(dir) => {
            eprintln!("ldplab: wrote {}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("ldplab: {e}");
            e.exit_code()
        }
    }
}

/// Loads, resolves and runs one experiment. Returns the output directory.
pub fn run(cli: &Cli) -> LabResult<PathBuf> {
    let origin = cli.config.display().to_string();
    let text = fs::read_to_string(&cli.config).map_err(|e| LabError::Config(format!("{origin}: {e}")))?;
    let mut config = parse(&text, &origin)?;
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let command = Command::from(cli.command);
    config.resolve(command)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ldplab-out"));
    let out = OutputDir::create(&dir, config.to_value())?;
    let mut failure = Failure::default();
    match execute(command, &config, &out, &mut failure) {
        Ok(()) => Ok(dir),
        Err(e) => {
            if e.exit_code() == 3 {
                failure.error = e.to_string();
                if let LabError::Numerical(LdpError::Infeasible { trace, .. }) = &e {
                    failure.trace = trace.iter().map(TraceRow::from).collect();
                }
                out.json("failure.json", &failure)?;
            }
            Err(e)
        }
    }
}

#[derive(Debug, Default, Serialize)]
struct Failure {
    error: String,
    trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    start: usize,
    stage: usize,
    weight: f64,
    objective: f64,
    rate: f64,
    violation: f64,
    evaluations: usize,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        Self {
            start: r.start,
            stage: r.stage,
            weight: r.weight,
            objective: r.objective,
            rate: r.rate,
            violation: r.violation,
            evaluations: r.evaluations,
        }
    }
}

/// Objects shared by every command.
struct Setup {
    triplet: LevyTriplet,
    field: VectorField,
    control: CadlagPath,
}

/// Objects rejected by the core constructors are configuration errors.
fn invalid_config(e: LabError) -> LabError {
    match e {
        LabError::Numerical(e) => LabError::Config(e.to_string()),
        other => other,
    }
}

fn setup(config: &ExperimentConfig) -> LabResult<Setup> {
    let triplet = config.triplet.build().map_err(invalid_config)?;
    let field = config.field.build(triplet.dim()).map_err(invalid_config)?;
    let control = config
        .control
        .build(field.state_dim(), config.horizon, "control")
        .map_err(invalid_config)?;
    if let Some(ev) = &config.event {
        ev.build().map_err(invalid_config)?;
    }
    Ok(Setup {
        triplet,
        field,
        control,
    })
}

fn execute(command: Command, config: &ExperimentConfig, out: &OutputDir, failure: &mut Failure) -> LabResult<()> {
    let s = setup(config)?;
    match command {
        Command::Simulate => simulate(config, &s, out),
        Command::Characteristics => characteristics(config, &s, out),
        Command::Skeleton => skeleton(config, &s, out),
        Command::Rate => {
            let result = optimize(config, &s)?;
            out.json("rate.json", &RateReport::from(&result))?;
            out.csv("x_star.csv", &path_table(&result.x_star, 201))?;
            if !result.feasible {
                failure.trace = result.trace.iter().map(TraceRow::from).collect();
                return Err(LabError::Degenerate("optimizer returned an infeasible path".into()));
            }
            Ok(())
        }
        Command::VerifyLdp => verify(config, &s, out),
        Command::Probe => probe(config, &s, out),
    }
}

fn simulate(config: &ExperimentConfig, s: &Setup, out: &OutputDir) -> LabResult<()> {
    let spec = config.simulate.clone().unwrap_or_default();
    let eps = spec.eps.unwrap_or(1.0);
    let points = spec.csv_points.unwrap_or(201);
    let mc = config.mc_options();
    let x = s.triplet.simulate(eps, config.horizon, mc.noise_step, config.seed)?;
    out.json("noise.json", &PathDoc::from_path(&x))?;
    out.csv("noise.csv", &path_table(&x, points))?;
    if spec.solve == Some(true) {
        let y = solve_sde(&SdeProblem::new(s.field.clone(), s.control.clone(), x, mc.solver_step)?)?;
        out.json("solution.json", &PathDoc::from_path(&y))?;
        out.csv("solution.csv", &path_table(&y, points))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct CharRow {
    eps: f64,
    t: f64,
    first: Vec<f64>,
    second_over_eps: Vec<f64>,
    second_over_eps_norm: f64,
    jump_mass: f64,
    drift_variation: f64,
    exp_jump_integral: f64,
    xi: f64,
}

fn characteristics(config: &ExperimentConfig, s: &Setup, out: &OutputDir) -> LabResult<()> {
    let spec = config.characteristics.clone().unwrap_or_default();
    let trunc = spec.trunc.unwrap_or(1.0);
    let r = spec.r.unwrap_or(1.0);
    let times = spec.times.clone().unwrap_or_else(|| vec![config.horizon]);
    let lip_c = spec.lip_c.unwrap_or_else(|| s.field.constant_c());
    let mut rows = Vec::new();
    for &eps in &config.eps {
        let ch = s.triplet.characteristics(eps, trunc)?;
        for &t in &times {
            let fam = s.triplet.three_families(eps, t, trunc, r)?;
            rows.push(CharRow {
                eps,
                t,
                first: ch.first_at(t),
                second_over_eps: ch.second_over_eps_at(t),
                second_over_eps_norm: fam.diffusion_over_eps,
                jump_mass: ch.jump_mass_at(t),
                drift_variation: fam.drift_variation,
                exp_jump_integral: fam.exp_jump_integral,
                xi: s.triplet.xi_process(eps, t, lip_c)?,
            });
        }
    }
    let d = s.triplet.dim();
    let names: Vec<String> = (0..d).map(|i| format!("b{i}")).collect();
    let mut cols: Vec<(&str, &str)> = vec![("eps", "noise level"), ("t", "time")];
    cols.extend(names.iter().map(|n| (n.as_str(), "first characteristic B at t")));
    cols.extend([
        ("c_over_eps", "operator norm of C_t / eps"),
        ("jump_mass", "total mass of the jump compensator on [0, t]"),
        ("v1", "variation of B on [0, t]"),
        ("v3", "eps times the exponential jump integral on [0, t]"),
        ("xi", "the Xi process at t"),
    ]);
    let mut table = Table::new(&cols);
    for row in &rows {
        let mut cells = vec![cell(Some(row.eps)), cell(Some(row.t))];
        cells.extend(row.first.iter().map(|v| cell(Some(*v))));
        cells.extend(
            [row.second_over_eps_norm, row.jump_mass, row.drift_variation, row.exp_jump_integral, row.xi]
                .map(|v| cell(Some(v))),
        );
        table.push(cells);
    }
    out.json("characteristics.json", &rows)?;
    out.csv("characteristics.csv", &table)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SkeletonReport {
    x: PathDoc,
    y: PathDoc,
    residual: f64,
    tol: f64,
    within_tol: bool,
}

fn skeleton(config: &ExperimentConfig, s: &Setup, out: &OutputDir) -> LabResult<()> {
    let spec = config.skeleton.clone().unwrap_or_default();
    let t = config.horizon;
    let d = s.triplet.dim();
    let x = match &spec.x {
        Some(p) => p.build(d, t, "skeleton.x").map_err(invalid_config)?,
        None => {
            let end: Vec<f64> = s.triplet.mean_velocity().iter().map(|v| v * t).collect();
            CadlagPath::linear(t, &vec![0.0; d], &end)?
        }
    };
    let step = config.steps.skeleton.unwrap_or(1e-3 * t);
    let y = solve_skeleton(&s.field, &s.control, &x, step)?;
    let res = residual(&s.field, &s.control, &x, &y, step)?;
    let tol = spec.tol.unwrap_or(1e-4);
    let report = SkeletonReport {
        x: PathDoc::from_path(&x),
        y: PathDoc::from_path(&y),
        residual: res,
        tol,
        within_tol: res <= tol,
    };
    out.json("skeleton.json", &report)?;
    out.csv("skeleton.csv", &path_table(&y, spec.csv_points.unwrap_or(201)))?;
    if !report.within_tol {
        return Err(LabError::Degenerate(format!("skeleton residual {res} exceeds {tol}")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RateReport {
    rate: f64,
    feasible: bool,
    violation: f64,
    x_star: PathDoc,
    y_star: PathDoc,
    trace: Vec<TraceRow>,
}

impl From<&EndpointResult> for RateReport {
    fn from(r: &EndpointResult) -> Self {
        Self {
            rate: r.rate,
            feasible: r.feasible,
            violation: r.violation,
            x_star: PathDoc::from_path(&r.x_star),
            y_star: PathDoc::from_path(&r.y_star),
            trace: r.trace.iter().map(TraceRow::from).collect(),
        }
    }
}

/// Events on `X` are solved with `F = I` and `u = 0`.
fn optimize(config: &ExperimentConfig, s: &Setup) -> LabResult<EndpointResult> {
    let event = config.event.as_ref().expect("resolved").build()?;
    let model = config.rate_model(&s.triplet)?;
    let opts = config.minimize_options();
    let result = match event.target {
        Target::Y => minimize_endpoint(&model, &s.field, &s.control, &event.event, &opts)?,
        Target::X => {
            let d = s.triplet.dim();
            let field = VectorField::scalar_identity(d, 1.0)?;
            let zero = CadlagPath::zero(d, config.horizon)?;
            minimize_endpoint(&model, &field, &zero, &event.event, &opts)?
        }
        _ => {
            return Err(LabError::Config(
                "the rate optimizer supports events on x or y only".into(),
            ))
        }
    };
    Ok(result)
}

/// Recognizes the two closed-form baselines: a one-dimensional terminal
/// tail of `c X` with `X` Brownian, or `X` Poisson with a positive jump.
pub fn detect_exact(config: &ExperimentConfig) -> Option<(ExactFamily, f64)> {
    let ev = config.event.as_ref()?;
    let tr = &config.triplet;
    if ev.kind != EventType::TerminalGe || ev.coordinate != 0 || tr.dim != 1 {
        return None;
    }
    let driftless = tr.drift.iter().flatten().chain(tr.drift_eps_slope.iter().flatten()).all(|b| *b == 0.0);
    let c = match ev.target {
        Target::X => 1.0,
        Target::Y => {
            let zero_control = config
                .control
                .build(1, config.horizon, "control")
                .ok()
                .map(|u| u.sup_norm(config.horizon).ok() == Some(0.0))?;
            if !zero_control {
                return None;
            }
            match &config.field {
                FieldSpec::Identity { scale } => *scale,
                FieldSpec::Constant { matrix } if matrix.len() == 1 && matrix[0].len() == 1 => matrix[0][0],
                _ => return None,
            }
        }
        _ => return None,
    };
    let sigma2 = tr.diffusion_flat()[0];
    let horizon = config.horizon;
    if !driftless || c == 0.0 {
        return None;
    }
    if tr.atoms.is_empty() && sigma2 > 0.0 {
        let family = ExactFamily::Gaussian {
            sigma: c.abs() * sigma2.sqrt(),
            horizon,
        };
        return Some((family, ev.level));
    }
    if sigma2 == 0.0 && tr.atoms.len() == 1 && !tr.compensated && ev.level > 0.0 {
        let atom = &tr.atoms[0];
        let jump = c * atom.x[0];
        if jump > 0.0 {
            let family = ExactFamily::Poisson {
                lambda: atom.lambda,
                jump,
                horizon,
            };
            return Some((family, ev.level));
        }
    }
    None
}

#[derive(Debug, Serialize)]
struct ExactReport {
    family: ExactFamily,
    level: f64,
    curve: RateCurve,
}

#[derive(Debug, Serialize)]
struct OracleCheck {
    eps: f64,
    p_hat: f64,
    exact_p: f64,
    sigma: f64,
    within_3sigma: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    analytic_rate: Option<f64>,
    optimized_rate: Option<f64>,
    optimized_feasible: Option<bool>,
    /// Extrapolated Monte Carlo limit of `ε ln p`.
    fitted_limit: Option<f64>,
    /// Extrapolated limit of the closed-form curve.
    exact_fitted_limit: Option<f64>,
    monte_carlo: Option<RateCurve>,
    exact: Option<ExactReport>,
    oracle_checks: Vec<OracleCheck>,
}

fn verify(config: &ExperimentConfig, s: &Setup, out: &OutputDir) -> LabResult<()> {
    let spec = config.verify.clone().unwrap_or_default();
    let event = config.event.as_ref().expect("resolved").build()?;
    let exact = match detect_exact(config) {
        Some((family, level)) => {
            let eps = spec.exact_eps.clone().unwrap_or_default();
            Some(ExactReport {
                family,
                level,
                curve: exact_tail_curve(&family, level, &eps)?,
            })
        }
        None => None,
    };
    let mc = if spec.monte_carlo == Some(true) {
        let n = config.samples.unwrap_or(crate::config::DEFAULT_SAMPLES);
        Some(rate_curve(
            &s.triplet,
            &s.field,
            &s.control,
            &event,
            &config.eps,
            n,
            config.seed,
            &config.mc_options(),
        )?)
    } else {
        None
    };
    let optimized = if spec.optimize == Some(true) {
        Some(optimize(config, s)?)
    } else {
        None
    };
    let mut checks = Vec::new();
    if let (Some(ex), Some(curve)) = (&exact, &mc) {
        for e in &curve.entries {
            let p = ex.family.probability(ex.level, e.eps);
            let sigma = binomial_sigma(p, e.samples.unwrap_or(1));
            checks.push(OracleCheck {
                eps: e.eps,
                p_hat: e.p_hat,
                exact_p: p,
                sigma,
                within_3sigma: (e.p_hat - p).abs() <= 3.0 * sigma,
            });
        }
    }
    let report = VerifyReport {
        analytic_rate: exact.as_ref().map(|e| e.family.limit_rate(e.level)),
        optimized_rate: optimized.as_ref().map(|r| r.rate),
        optimized_feasible: optimized.as_ref().map(|r| r.feasible),
        fitted_limit: mc.as_ref().and_then(|c| c.fitted_limit),
        exact_fitted_limit: exact.as_ref().and_then(|e| e.curve.fitted_limit),
        monte_carlo: mc,
        exact,
        oracle_checks: checks,
    };
    let mut table = Table::new(&[
        ("source", "monte_carlo or the closed-form family"),
        ("eps", "noise level"),
        ("samples", "Monte Carlo sample count (empty for closed form)"),
        ("hits", "paths in the event (empty for closed form)"),
        ("p_hat", "event probability"),
        ("ci_low", "lower 95% Clopper-Pearson bound"),
        ("ci_high", "upper 95% Clopper-Pearson bound"),
        ("eps_log_p", "eps * ln(p_hat), empty when p_hat = 0"),
    ]);
    let curves = report.monte_carlo.iter().chain(report.exact.as_ref().map(|e| &e.curve));
    for curve in curves {
        for e in &curve.entries {
            table.push(vec![
                curve.method.clone(),
                cell(Some(e.eps)),
                e.samples.map(|v| v.to_string()).unwrap_or_default(),
                e.hits.map(|v| v.to_string()).unwrap_or_default(),
                cell(Some(e.p_hat)),
                cell(Some(e.ci_low)),
                cell(Some(e.ci_high)),
                cell(e.eps_log_p),
            ]);
        }
    }
    out.json("verify.json", &report)?;
    out.csv("verify.csv", &table)?;
    Ok(())
}

fn probe(config: &ExperimentConfig, s: &Setup, out: &OutputDir) -> LabResult<()> {
    let mc = config.mc_options();
    let n = config.samples.unwrap_or(crate::config::DEFAULT_SAMPLES);
    let seed = config.seed;
    let probe = config.probe.as_ref().expect("resolved");
    let exceed_cols = [
        ("eps", "noise level"),
        ("a", "threshold"),
        ("samples", "sample count"),
        ("hits", "samples with statistic >= a"),
        ("p_hat", "hits / samples"),
        ("eps_log_p", "eps * ln(p_hat), empty when p_hat = 0"),
    ];
    match probe {
        ProbeSpec::Tightness { statistic, process, a } => {
            let rows = tightness_probe(
                statistic,
                *process == ProbeProcess::Y,
                &s.triplet,
                &s.field,
                &s.control,
                &config.eps,
                a,
                n,
                seed,
                &mc,
            )?;
            let mut table = Table::new(&exceed_cols);
            for r in &rows {
                table.push(vec![
                    cell(Some(r.eps)),
                    cell(Some(r.a)),
                    r.samples.to_string(),
                    r.hits.to_string(),
                    cell(Some(r.p_hat)),
                    cell(r.eps_log_p),
                ]);
            }
            out.json("probe.json", &rows)?;
            out.csv("probe.csv", &table)?;
        }
        ProbeSpec::PureDiscBound { eps, t, a, b } => {
            let jumps = if s.triplet.jumps().is_empty() {
                default_martingale_jumps()
            } else {
                s.triplet.jumps().clone()
            };
            let rows = pure_disc_bound_check(
                &jumps,
                eps.unwrap_or(0.1),
                t.unwrap_or(config.horizon),
                a.as_deref().unwrap_or_default(),
                b.as_deref().unwrap_or_default(),
                n,
                seed,
                &mc,
            )?;
            let mut table = Table::new(&[
                ("a", "level of sup |M|"),
                ("b", "bound on the sum of squared jumps"),
                ("samples", "sample count"),
                ("hits", "samples with sup |M| >= a and sum |dM|^2 < b"),
                ("empirical", "hits / samples"),
                ("bound", "2 exp(-theta a + C theta^2 b)"),
                ("sigma", "binomial standard deviation at the bound"),
                ("pass", "empirical <= bound + 3 sigma"),
            ]);
            for r in &rows {
                table.push(vec![
                    cell(Some(r.a)),
                    cell(Some(r.b)),
                    r.samples.to_string(),
                    r.hits.to_string(),
                    cell(Some(r.empirical)),
                    cell(Some(r.bound)),
                    cell(Some(r.sigma)),
                    r.pass.to_string(),
                ]);
            }
            out.json("probe.json", &rows)?;
            out.csv("probe.csv", &table)?;
            if rows.iter().any(|r| !r.pass) {
                return Err(LabError::Degenerate("empirical frequency exceeds the bound".into()));
            }
        }
        ProbeSpec::Slominski { p } => {
            let rows = slominski_probe(&s.triplet, &config.eps, p, n, config.horizon, seed, &mc)?;
            let mut table = Table::new(&[
                ("eps", "noise level"),
                ("p", "threshold index; crossing level 1/p"),
                ("samples", "sample count"),
                ("min_gap_min", "smallest minimal gap between crossings"),
                ("min_gap_q01", "1% quantile of the minimal gap"),
                ("min_gap_q05", "5% quantile of the minimal gap"),
                ("min_gap_median", "median minimal gap"),
                ("max_oscillation_mean", "mean over samples of the largest oscillation between crossings"),
                ("max_oscillation_max", "largest oscillation between crossings"),
            ]);
            for r in &rows {
                table.push(vec![
                    cell(Some(r.eps)),
                    cell(Some(r.p)),
                    r.samples.to_string(),
                    cell(Some(r.min_gap_min)),
                    cell(Some(r.min_gap_q01)),
                    cell(Some(r.min_gap_q05)),
                    cell(Some(r.min_gap_median)),
                    cell(Some(r.max_oscillation_mean)),
                    cell(Some(r.max_oscillation_max)),
                ]);
            }
            out.json("probe.json", &rows)?;
            out.csv("probe.csv", &table)?;
        }
        ProbeSpec::Uet { integrands, a } => {
            let rows = uet_probe(
                &s.triplet,
                &s.field,
                &s.control,
                integrands,
                &config.eps,
                a,
                n,
                seed,
                &mc,
            )?;
            let mut cols = vec![("integrand", "integrand label")];
            cols.extend(exceed_cols);
            let mut table = Table::new(&cols);
            for r in &rows {
                table.push(vec![
                    r.integrand.clone(),
                    cell(Some(r.eps)),
                    cell(Some(r.a)),
                    r.samples.to_string(),
                    r.hits.to_string(),
                    cell(Some(r.p_hat)),
                    cell(r.eps_log_p),
                ]);
            }
            out.json("probe.json", &rows)?;
            out.csv("probe.csv", &table)?;
        }
    }
    Ok(())
}

/// Reads the `result` member of an output JSON file.
pub fn read_result(path: &Path) -> LabResult<serde_json::Value> {
    let text = fs::read_to_string(path)?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| LabError::Config(e.to_string()))?;
    Ok(doc["result"].clone())
}
