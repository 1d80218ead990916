//! `pathfinder` command-line front end.
//!
//! Exit codes: 0 on success, 2 when a solver fails to converge or a run is
//! aborted (partial output is still written), 1 on usage or configuration
//! errors. Files are written atomically.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::apalm::{serial_init, solve, ApalmConfig};
use crate::continuation::{run, ContinuationConfig, Stepper};
use crate::eigen::{buckling, modal, EigenPair};
use crate::io::{csv_row, write_atomic};
use crate::mappedbasis::two_patch_example;
use crate::materials::{uniaxial_solve, MaterialParams};
use crate::models::{make_operator_set, Model, ModelConfig};
use crate::operators::Poisoned;
use crate::statics::{composite_solve, Stage, StaticConfig, StaticResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pathfinder", version, about = "Nonlinear statics, eigenanalysis and arc-length continuation")]
pub struct Cli {
    /// Print a run summary on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Static equilibrium at λ = 1.
    Static(StaticArgs),
    /// Lowest natural frequencies.
    Modal(EigenArgs),
    /// Linear buckling loads.
    Buckle(EigenArgs),
    /// Trace an equilibrium path.
    Continue(ContinueArgs),
    /// Adaptive parallel arc-length run.
    Apalm(ApalmArgs),
    /// Uniaxial tension curve of a material.
    Uniaxial(UniaxialArgs),
    /// Sample a two-patch C¹ mapped spline basis.
    SplineDemo(SplineArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Newton,
    Dr,
    /// Dynamic relaxation followed by Newton.
    Composite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StepperArg {
    Load,
    Riks,
    Crisfield,
}

impl From<StepperArg> for Stepper {
    fn from(s: StepperArg) -> Self {
        match s {
            StepperArg::Load => Stepper::LoadControl,
            StepperArg::Riks => Stepper::Riks,
            StepperArg::Crisfield => Stepper::Crisfield,
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a positive number (valid range: > 0)")),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("'{s}' is not a non-negative number (valid range: >= 0)")),
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// spring | chain | vmtruss | vmtruss1 | column | membrane
    #[arg(long)]
    pub model: Option<String>,
    /// Flat key=value file with model parameters (may name the model).
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Flat key=value material file (membrane only).
    #[arg(long)]
    pub material: Option<PathBuf>,
    /// Extra model parameter, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Make every assembly fail once max|u_i| exceeds this value (robustness testing).
    #[arg(long, value_parser = positive)]
    pub poison: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct StaticArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = Solver::Newton)]
    pub solver: Solver,
    #[arg(long, value_parser = positive)]
    pub tol_f: Option<f64>,
    #[arg(long, value_parser = positive)]
    pub tol_u: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Dynamic relaxation time step.
    #[arg(long, value_parser = positive)]
    pub dt: Option<f64>,
    /// Dynamic relaxation viscous damping (0 = kinetic damping).
    #[arg(long, value_parser = non_negative)]
    pub damping: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of chain masses (shorthand for `--set n=N`).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ContinueArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = StepperArg::Crisfield)]
    pub stepper: StepperArg,
    /// Arc length (load increment for load control).
    #[arg(short = 'L', long, value_parser = positive)]
    pub dl: f64,
    /// Number of steps.
    #[arg(short = 'N', long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, value_parser = positive, default_value_t = 1.0)]
    pub psi: f64,
    #[arg(long, value_parser = positive)]
    pub tol_f: Option<f64>,
    /// Locate singular points where the stability index changes.
    #[arg(long)]
    pub detect_singular: bool,
    /// Switch to the secondary branch at the first bifurcation.
    #[arg(long)]
    pub switch_branch: bool,
    #[arg(long, value_parser = non_negative, default_value_t = 0.01)]
    pub tau_rel: f64,
    /// Start with a negative load increment.
    #[arg(long)]
    pub backward: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ApalmArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = StepperArg::Crisfield)]
    pub stepper: StepperArg,
    /// Coarse increment ΔL.
    #[arg(short = 'L', long, value_parser = positive, default_value_t = 0.05)]
    pub dl: f64,
    /// Coarse serial steps.
    #[arg(short = 'N', long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
    pub n_sub: u64,
    #[arg(long, value_parser = positive, default_value_t = 1e-3)]
    pub eps_l: f64,
    #[arg(long, value_parser = positive, default_value_t = 1e-3)]
    pub eps_u: f64,
    #[arg(long, default_value_t = 5)]
    pub max_level: u32,
    #[arg(long, env = "PATHFINDER_WORKERS", default_value_t = 1)]
    pub workers: usize,
    /// Run report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct UniaxialArgs {
    /// Flat key=value material file.
    #[arg(long)]
    pub material: PathBuf,
    #[arg(long, value_parser = positive, default_value_t = 12.5)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SplineArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=5))]
    pub degree: u64,
    /// Knot spans per patch.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=256))]
    pub spans: u64,
    #[arg(long, default_value_t = 201, value_parser = clap::value_parser!(u64).range(2..))]
    pub samples: u64,
    /// Derivative order of the sampled functions (0, 1 or 2).
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=2))]
    pub derivative: u8,
    /// Also write the map as `row,col,value` triplets.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// What a command produced.
enum Outcome {
    Done(String),
    /// Output written but the solver did not fully succeed.
    Partial(String),
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let verbose = cli.verbose;
    match execute(cli.command) {
        Ok(Outcome::Done(msg)) => {
            if verbose {
                eprintln!("{msg}");
            }
            EXIT_OK
        }
        Ok(Outcome::Partial(msg)) => {
            eprintln!("pathfinder: {msg}");
            EXIT_SOLVER
        }
        Err(e) => {
            eprintln!("pathfinder: error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn model_config(args: &ModelArgs, extra: &[String]) -> Result<ModelConfig> {
    let file = args.model_file.as_deref().map(read).transpose()?;
    let named_in_file = file.as_deref().and_then(|t| {
        t.lines()
            .filter_map(|l| l.split('#').next()?.split_once('='))
            .find(|(k, _)| k.trim() == "model")
            .map(|(_, v)| v.trim().to_string())
    });
    let name = match (&args.model, named_in_file) {
        (Some(n), _) => n.clone(),
        (None, Some(n)) => n,
        (None, None) => bail!("--model is required (spring|chain|vmtruss|vmtruss1|column|membrane)"),
    };
    let mut cfg = ModelConfig::named(&name)?;
    if let Some(text) = &file {
        cfg = cfg.with_overrides(text)?;
    }
    let sets: Vec<String> = args.overrides.iter().chain(extra).cloned().collect();
    if !sets.is_empty() {
        cfg = cfg.with_overrides(&sets.join("\n"))?;
    }
    if let Some(path) = &args.material {
        cfg = cfg.with_material(MaterialParams::parse_kv(&read(path)?)?)?;
    }
    Ok(cfg)
}

fn build(args: &ModelArgs, extra: &[String]) -> Result<Poisoned<Model>> {
    let model = make_operator_set(&model_config(args, extra)?)?;
    Ok(Poisoned::new(model, args.poison.unwrap_or(f64::INFINITY)))
}

fn emit(out: &OutputArgs, text: &str) -> Result<()> {
    match &out.output {
        Some(p) => write_atomic(p, text).map_err(Into::into),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn execute(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::Static(a) => cmd_static(a),
        Command::Modal(a) => cmd_eigen(a, false),
        Command::Buckle(a) => cmd_eigen(a, true),
        Command::Continue(a) => cmd_continue(a),
        Command::Apalm(a) => cmd_apalm(a),
        Command::Uniaxial(a) => cmd_uniaxial(a),
        Command::SplineDemo(a) => cmd_spline(a),
    }
}

fn static_csv(r: &StaticResult) -> Result<String> {
    let mut s = String::from("dof,u\n");
    for (i, u) in r.u.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", csv_row(&[*u])?));
    }
    Ok(s)
}

fn cmd_static(a: StaticArgs) -> Result<Outcome> {
    let ops = build(&a.model, &[])?;
    let tune = |mut c: StaticConfig| {
        if let Some(t) = a.tol_f {
            c = c.with_tol_f(t);
        }
        if let Some(t) = a.tol_u {
            c = c.with_tol_u(t);
        }
        if let Some(n) = a.max_iterations {
            c = c.with_max_iterations(n);
        }
        if let Some(dt) = a.dt {
            c = c.with_dt(dt);
        }
        if let Some(d) = a.damping {
            c = c.with_damping(d);
        }
        c
    };
    let stages = match a.solver {
        Solver::Newton => vec![Stage::Newton(tune(StaticConfig::newton()))],
        Solver::Dr => vec![Stage::DynamicRelaxation(tune(StaticConfig::dynamic_relaxation()))],
        Solver::Composite => vec![
            Stage::DynamicRelaxation(StaticConfig::dynamic_relaxation()),
            Stage::Newton(tune(StaticConfig::newton())),
        ],
    };
    for s in &stages {
        match s {
            Stage::Newton(c) | Stage::DynamicRelaxation(c) => c.validate()?,
        }
    }
    let r = composite_solve(&stages, &ops, None)?;
    let text = match a.out.format {
        Format::Csv => static_csv(&r)?,
        Format::Json => json(&r)?,
    };
    emit(&a.out, &text)?;
    let msg = format!("{:?} after {} iterations, |R| = {:e}", r.status, r.iterations, r.residual_norm);
    Ok(if r.is_converged() { Outcome::Done(msg) } else { Outcome::Partial(msg) })
}

fn eigen_csv(pairs: &[EigenPair], modal_table: bool) -> Result<String> {
    let n = pairs.first().map_or(0, |p| p.vector.len());
    let mut s = if modal_table {
        String::from("mode,omega_squared,omega")
    } else {
        String::from("mode,lambda,critical")
    };
    for i in 0..n {
        s.push_str(&format!(",phi_{i}"));
    }
    s.push('\n');
    for (k, p) in pairs.iter().enumerate() {
        let second = if modal_table { p.frequency() } else { p.value.abs() };
        let mut vals = vec![p.value, second];
        vals.extend_from_slice(&p.vector);
        s.push_str(&format!("{},{}\n", k + 1, csv_row(&vals)?));
    }
    Ok(s)
}

fn cmd_eigen(a: EigenArgs, buckle: bool) -> Result<Outcome> {
    let extra: Vec<String> = a.n.map(|n| format!("n={n}")).into_iter().collect();
    let ops = build(&a.model, &extra)?;
    let count = a.count as usize;
    let pairs = if buckle { buckling(&ops, count)? } else { modal(&ops, count)? };
    let text = match a.out.format {
        Format::Csv => eigen_csv(&pairs, !buckle)?,
        Format::Json => json(&pairs)?,
    };
    emit(&a.out, &text)?;
    Ok(Outcome::Done(format!("{} eigenpairs", pairs.len())))
}

fn cmd_continue(a: ContinueArgs) -> Result<Outcome> {
    let ops = build(&a.model, &[])?;
    let mut cfg = ContinuationConfig::new(a.stepper.into(), a.dl, a.steps as usize).with_psi(a.psi);
    if let Some(t) = a.tol_f {
        cfg = cfg.with_tol_f(t);
    }
    cfg.detect_singular = a.detect_singular || a.switch_branch;
    cfg.switch_branch = a.switch_branch;
    cfg.tau_rel = a.tau_rel;
    cfg.forward = !a.backward;
    cfg.validate().map_err(anyhow::Error::msg)?;
    let path = run(&ops, &cfg);
    let text = match a.out.format {
        Format::Csv => path.to_csv()?,
        Format::Json => path.to_json()?,
    };
    emit(&a.out, &text)?;
    let msg = format!(
        "{} points, {} singular points, {} branch switches",
        path.points.len(),
        path.singular_points.len(),
        path.switched.len()
    );
    Ok(match path.abort {
        Some(reason) => Outcome::Partial(format!("aborted: {reason} ({msg})")),
        None => Outcome::Done(msg),
    })
}

fn cmd_apalm(a: ApalmArgs) -> Result<Outcome> {
    let model_cfg = model_config(&a.model, &[])?;
    let threshold = a.model.poison.unwrap_or(f64::INFINITY);
    let factory = || make_operator_set(&model_cfg).map(|m| Poisoned::new(m, threshold));
    let ops = factory()?;
    let cfg = ApalmConfig {
        eps_l: a.eps_l,
        eps_u: a.eps_u,
        n_sub: a.n_sub as usize,
        max_level: a.max_level,
        dl: a.dl,
        workers: a.workers,
        stepper: a.stepper.into(),
        ..ApalmConfig::default()
    };
    let (path0, intervals) = serial_init(&ops, &cfg, a.steps as usize)?;
    let out = solve(&path0, intervals, &cfg, factory)?;
    let text = match a.out.format {
        Format::Csv => out.to_csv()?,
        Format::Json => json(&out)?,
    };
    emit(&a.out, &text)?;
    if let Some(p) = &a.report {
        write_atomic(p, &out.report_json()?)?;
    }
    let failed = out
        .report
        .intervals
        .iter()
        .filter(|iv| iv.status == crate::apalm::IntervalStatus::Failed)
        .count();
    let msg = format!(
        "{} points, {} intervals, deepest level {}",
        out.points.len(),
        out.report.intervals.len(),
        out.report.max_level
    );
    Ok(match (&path0.abort, failed) {
        (Some(reason), _) => Outcome::Partial(format!("serial path aborted: {reason} ({msg})")),
        (None, 0) => Outcome::Done(msg),
        (None, n) => Outcome::Partial(format!("{n} failed intervals ({msg})")),
    })
}

fn cmd_uniaxial(a: UniaxialArgs) -> Result<Outcome> {
    let mat = MaterialParams::parse_kv(&read(&a.material)?)?;
    if a.lambda_max < 1.0 {
        bail!("--lambda-max must be at least 1 (got {})", a.lambda_max);
    }
    let n = a.samples as usize;
    let mut rows = Vec::with_capacity(n);
    let mut failure = None;
    for i in 0..n {
        let lam = 1.0 + (a.lambda_max - 1.0) * i as f64 / (n - 1) as f64;
        match uniaxial_solve(&mat, lam) {
            Ok(s) => rows.push([lam, s.lambda3(), s.axial_stress(), s.j]),
            Err(e) => {
                failure = Some(format!("stretch {lam}: {e}"));
                break;
            }
        }
    }
    let text = match a.out.format {
        Format::Csv => {
            let mut s = String::from("lambda,lambda3,sigma,J\n");
            for r in &rows {
                s.push_str(&csv_row(r)?);
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let objs: Vec<_> = rows
                .iter()
                .map(|r| serde_json::json!({"lambda": r[0], "lambda3": r[1], "sigma": r[2], "J": r[3]}))
                .collect();
            json(&objs)?
        }
    };
    emit(&a.out, &text)?;
    Ok(match failure {
        Some(f) => Outcome::Partial(f),
        None => Outcome::Done(format!("{} samples", rows.len())),
    })
}

fn cmd_spline(a: SplineArgs) -> Result<Outcome> {
    let mb = two_patch_example(a.degree as usize, a.spans as usize)?;
    let text = match a.out.format {
        Format::Csv => mb.sample_csv(a.samples as usize, a.derivative as usize)?,
        Format::Json => json(&mb)?,
    };
    emit(&a.out, &text)?;
    if let Some(p) = &a.map {
        write_atomic(p, &mb.triplets_csv()?)?;
    }
    Ok(Outcome::Done(format!("{} global from {} local functions", mb.n_global(), mb.n_local())))
}
