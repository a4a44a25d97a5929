//! Command-line front end. Each command writes its artifacts and a
//! `manifest.json` into `--out`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::absorbing::{self, AbsorbingClass, MAX_KN_ITERS};
use crate::chain::{simulate_replica, ChainConfig, Trajectory};
use crate::dirichlet::{self, DirichletParams};
use crate::error::{Error, Result};
use crate::ifs;
use crate::operators::{d1_closed_form, power_iterate, GridDensity, IterationStatus, KernelOptions, SimplexGrid, TransferOperator};
use crate::simplex::SimplexPoint;
use crate::svg::{self, Scale};
use crate::validate::{self, SuiteConfig};
use crate::weights::{WeightKind, WeightSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "dfchain", version, about = "Simulate and analyse the Diaconis-Freedman chain on the simplex")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample trajectories of the chain.
    Simulate(Common),
    /// Invariant density by power iteration of the discretized P*.
    Invariant(Common),
    /// Minimal absorbing compact sets (d = 1, 2).
    Classify(Common),
    /// Uniqueness hypotheses and contraction data.
    CheckUniqueness(Common),
    /// Run the acceptance suite.
    Validate(Common),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Invariant(_) => "invariant",
            Command::Classify(_) => "classify",
            Command::CheckUniqueness(_) => "check-uniqueness",
            Command::Validate(_) => "validate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(c) | Command::Invariant(c) | Command::Classify(c) | Command::CheckUniqueness(c) | Command::Validate(c) => c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SvgScale {
    Linear,
    Log,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct Common {
    /// Weight spec JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Expected dimension; must agree with the spec.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Hölder exponent for check-uniqueness.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Starting point x_1,...,x_d for simulate (default: barycenter).
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = SvgScale::Log)]
    pub scale: SvgScale,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Parses `args` (without the program name) and runs; returns the exit code.
pub fn run_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv = std::iter::once(std::ffi::OsString::from("dfchain")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn main() -> i32 {
    run_args(std::env::args_os().skip(1))
}

pub fn run(cli: &Cli) -> Result<i32> {
    let c = cli.command.common();
    let threads = c.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Error::Invalid(e.to_string()))?;
    pool.install(|| dispatch(&cli.command))
}

fn dispatch(cmd: &Command) -> Result<i32> {
    let c = cmd.common();
    let t0 = Instant::now();
    let spec = match (cmd, &c.spec) {
        (Command::Validate(_), _) => None,
        (_, Some(p)) => Some(load_spec(p, c.dim)?),
        (_, None) => return Err(Error::Invalid(format!("{} needs --spec", cmd.name()))),
    };
    fs::create_dir_all(&c.out)?;
    let (code, results, mut timings) = match cmd {
        Command::Simulate(_) => simulate_cmd(spec.as_ref().unwrap(), c)?,
        Command::Invariant(_) => invariant_cmd(spec.as_ref().unwrap(), c)?,
        Command::Classify(_) => classify_cmd(spec.as_ref().unwrap(), c)?,
        Command::CheckUniqueness(_) => uniqueness_cmd(spec.as_ref().unwrap(), c)?,
        Command::Validate(_) => validate_cmd(c)?,
    };
    timings.push(("total".into(), secs(t0)));
    let manifest = json!({
        "command": cmd.name(),
        "toolkit_version": env!("CARGO_PKG_VERSION"),
        "seed": c.seed,
        "config": c,
        "spec": spec.as_ref().map(|s| s.to_json()),
        "results": results,
        "exit_code": code,
        "timings_seconds": timings.into_iter().collect::<serde_json::Map<String, Value>>(),
    });
    write_json(&c.out.join("manifest.json"), &manifest)?;
    Ok(code)
}

fn load_spec(path: &Path, dim: Option<usize>) -> Result<WeightSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let spec = WeightSpec::from_json(&text).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
    if let Some(d) = dim {
        if d != spec.dim() {
            return Err(Error::Dimension { expected: d, got: spec.dim() });
        }
    }
    Ok(spec)
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

type Outcome = (i32, Value, Vec<(String, Value)>);

fn secs(t: Instant) -> Value {
    json!(t.elapsed().as_secs_f64())
}

fn simulate_cmd(spec: &WeightSpec, c: &Common) -> Result<Outcome> {
    let t = Instant::now();
    let d = spec.dim();
    let start = match &c.start {
        Some(v) => SimplexPoint::new(v.clone())?,
        None => SimplexPoint::new(vec![1.0 / (d + 1) as f64; d])?,
    };
    if c.replicas == 0 {
        return Err(Error::Invalid("--replicas must be at least 1".into()));
    }
    let config = ChainConfig::new(spec.clone(), start, c.steps, c.seed, 0)?;
    let trajs: Vec<Trajectory> = (0..c.replicas as u64).into_par_iter().map(|r| simulate_replica(&config, r)).collect::<Result<_>>()?;
    let mut w = BufWriter::new(fs::File::create(c.out.join("trajectory.csv"))?);
    w.write_all(Trajectory::csv_header(d, true).as_bytes())?;
    for (r, tr) in trajs.iter().enumerate() {
        tr.write_rows(&mut w, Some(r as u64))?;
    }
    w.flush()?;
    let finals: Vec<&[f64]> = trajs.iter().map(|t| t.points.last().expect("trajectory has a start").coords()).collect();
    let means: Vec<Vec<f64>> = trajs
        .iter()
        .map(|t| {
            let n = (t.points.len() - 1).max(1) as f64;
            (0..d).map(|k| t.points.iter().skip(1).map(|p| p.coords()[k]).sum::<f64>() / n).collect()
        })
        .collect();
    let results = json!({
        "chain": config.to_json(),
        "replicas": c.replicas,
        "rng": "ChaCha8, stream (seed, replica)",
        "final_points": finals,
        "time_averages": means,
        "artifacts": ["trajectory.csv"],
    });
    Ok((EXIT_OK, results, vec![("simulate".into(), secs(t))]))
}

/// Dirichlet law known to be invariant, if any.
fn dirichlet_reference(spec: &WeightSpec) -> Option<Vec<f64>> {
    match spec.kind() {
        WeightKind::Constant(p) if p.iter().all(|v| *v > 0.0) => Some(p.clone()),
        WeightKind::Affine(t) if t.iter().all(|v| *v > 0.0) => Some(t.clone()),
        _ => None,
    }
}

fn invariant_cmd(spec: &WeightSpec, c: &Common) -> Result<Outcome> {
    let t = Instant::now();
    let grid = SimplexGrid::new(spec.dim(), c.resolution)?;
    let op = TransferOperator::new(spec, &grid, KernelOptions::default())?;
    let build = secs(t);
    let t = Instant::now();
    let res = power_iterate(&GridDensity::uniform(grid.clone()), &op, c.tol, c.max_iter)?;
    let iterate = secs(t);
    let mut w = BufWriter::new(fs::File::create(c.out.join("density.csv"))?);
    res.density.write_csv(&mut w)?;
    w.flush()?;
    let scale = match c.scale {
        SvgScale::Linear => Scale::Linear,
        SvgScale::Log => Scale::Log,
    };
    let title = format!("invariant density, m = {}", c.resolution);
    fs::write(c.out.join("density.svg"), svg::density_svg(&res.density, scale, &title))?;
    let mut comparisons = serde_json::Map::new();
    if let Some(theta) = dirichlet_reference(spec) {
        let reference = dirichlet::cell_masses(&DirichletParams::new(theta.clone())?, &grid)?;
        comparisons.insert("dirichlet".into(), json!({"theta": theta, "l1": res.density.l1_distance(&reference)}));
    }
    if spec.dim() == 1 {
        if let Ok(cf) = d1_closed_form(spec, &grid) {
            comparisons.insert("d1_closed_form".into(), json!({"l1": res.density.l1_distance(&cf)}));
        }
    }
    let status = match res.status {
        IterationStatus::Converged => "converged",
        IterationStatus::NotConverged => "not_converged",
        IterationStatus::Degenerate => "degenerate",
    };
    let results = json!({
        "status": status,
        "degenerate_reason": res.degenerate_reason,
        "iterations": res.iterations,
        "final_step": res.final_step,
        "resolution": c.resolution,
        "cells": grid.len(),
        "kernel_nonzeros": op.kernel.nnz(),
        "comparisons": comparisons,
        "artifacts": ["density.csv", "density.svg"],
    });
    Ok((EXIT_OK, results, vec![("kernel".into(), build), ("power_iteration".into(), iterate)]))
}

fn classify_cmd(spec: &WeightSpec, c: &Common) -> Result<Outcome> {
    let t = Instant::now();
    let class = absorbing::classify(spec, c.resolution, MAX_KN_ITERS)?;
    let checks = absorbing::verify_classification(spec, &class, 2000, c.seed)?;
    let mut report = class.to_json();
    report["verification"] = serde_json::to_value(&checks)?;
    write_json(&c.out.join("classification.json"), &report)?;
    let mut artifacts = vec!["classification.json"];
    if matches!(class.class, AbsorbingClass::InteriorCompact { .. }) {
        fs::write(c.out.join("regions.svg"), svg::regions_svg(&class.stage_regions, "K_n stages"))?;
        artifacts.push("regions.svg");
    }
    let results = json!({
        "class": report["class"],
        "members": class.members.iter().map(|m| m.label()).collect::<Vec<_>>(),
        "max_escape": checks.iter().map(|r| r.max_escape).fold(0.0, f64::max),
        "warnings": class.warnings,
        "artifacts": artifacts,
    });
    Ok((EXIT_OK, results, vec![("classify".into(), secs(t))]))
}

fn uniqueness_cmd(spec: &WeightSpec, c: &Common) -> Result<Outcome> {
    let t = Instant::now();
    let report = ifs::check_uniqueness(spec, c.alpha, 20_000)?;
    write_json(&c.out.join("uniqueness.json"), &report)?;
    let results = json!({"verdict": report.verdict, "r": report.r, "artifacts": ["uniqueness.json"]});
    Ok((EXIT_OK, results, vec![("check_uniqueness".into(), secs(t))]))
}

fn validate_cmd(c: &Common) -> Result<Outcome> {
    let mut cfg = SuiteConfig::new(c.seed);
    cfg.work_dir = c.out.join("reproducibility");
    let report = validate::run_suite(&cfg, |o| println!("{}", o.summary_line()))?;
    write_json(&c.out.join("validation.json"), &report)?;
    let mut csv = String::from("criterion,check,pass\n");
    for o in &report.criteria {
        for ch in &o.checks {
            csv.push_str(&format!("{},\"{}\",{}\n", o.id, ch.name.replace('"', "\"\""), ch.pass));
        }
    }
    fs::write(c.out.join("validation.csv"), csv)?;
    let timings = report
        .criteria
        .iter()
        .flat_map(|o| {
            std::iter::once((format!("criterion_{}", o.id), json!(o.seconds)))
                .chain(o.timings.iter().map(move |(n, s)| (format!("criterion_{}: {n}", o.id), json!(s))))
        })
        .collect();
    let results = json!({
        "pass": report.pass,
        "criteria": report.criteria.iter().map(|o| json!({"id": o.id, "pass": o.pass})).collect::<Vec<_>>(),
        "artifacts": ["validation.json", "validation.csv"],
    });
    Ok((if report.pass { EXIT_OK } else { EXIT_FAILED }, results, timings))
}

/// Runs simulate, invariant, classify and check-uniqueness into `dir` with a
/// fixed worker count; used to compare artifacts across runs.
pub fn reproducibility_run(dir: &Path, seed: u64, threads: usize) -> Result<()> {
    let specs = dir.join("specs");
    fs::create_dir_all(&specs)?;
    let constant = specs.join("constant.json");
    fs::write(&constant, WeightSpec::constant(vec![0.3, 0.5, 0.2])?.to_json().to_string())?;
    let k0 = specs.join("k0.json");
    fs::write(&k0, WeightSpec::named("k0-stationary", 2, true)?.to_json().to_string())?;
    let affine = specs.join("affine.json");
    fs::write(&affine, WeightSpec::affine(vec![0.1, 0.2, 0.3])?.to_json().to_string())?;
    let seed = seed.to_string();
    let threads = threads.to_string();
    let runs: [(&str, &Path, &[&str]); 4] = [
        ("simulate", &constant, &["--steps", "20000", "--replicas", "3"]),
        ("invariant", &constant, &["--resolution", "32"]),
        ("classify", &k0, &["--resolution", "32"]),
        ("check-uniqueness", &affine, &[]),
    ];
    for (cmd, spec, extra) in runs {
        let out = dir.join(cmd);
        let mut args: Vec<String> = vec![cmd.into(), "--spec".into(), spec.display().to_string()];
        args.extend(["--seed", seed.as_str(), "--threads", threads.as_str(), "--out"].map(String::from));
        args.push(out.display().to_string());
        args.extend(extra.iter().map(|s| s.to_string()));
        let code = run_args(args);
        if code != EXIT_OK {
            return Err(Error::Invalid(format!("{cmd} exited with {code}")));
        }
    }
    fs::remove_dir_all(&specs)?;
    Ok(())
}
