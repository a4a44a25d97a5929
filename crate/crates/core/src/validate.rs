//! The validation suite: one function per acceptance criterion, shared by the
//! `validate` command and the acceptance test target.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::absorbing::{self, AbsorbingClass, MemberSet, EPS_ESCAPE, MAX_KN_ITERS};
use crate::chain::{absorption_experiment, batch_means, sample_path, ChainConfig, Target};
use crate::dirichlet::{self, DirichletParams};
use crate::error::{Error, Result};
use crate::ifs::{self, Verdict};
use crate::operators::{
    apply_p, d1_closed_form, estimate_rate, power_iterate, GridDensity, GridFunction, IterationStatus, KernelOptions, SimplexGrid,
    TransferOperator,
};
use crate::rng;
use crate::simplex::SimplexPoint;
use crate::weights::WeightSpec;

pub const CRITERIA: usize = 10;

// criterion 1
pub const C1_SPEC: [f64; 3] = [0.3, 0.5, 0.2];
pub const C1_L1_MAX: f64 = 0.05;
pub const C1_HALVING: (f64, f64) = (0.35, 0.65);
pub const C1_SECONDS: f64 = 60.0;
pub const C1_RATE_RESIDUAL: f64 = 0.05;
pub const C1_RATE_WINDOW: f64 = 1e-2;
pub const POWER_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;
// criterion 2
pub const C2_THETA: [f64; 3] = [0.1, 0.2, 0.3];
pub const C2_STEPS: usize = 1_000_000;
pub const C2_BURN_IN: usize = 10_000;
pub const C2_SIGMAS: f64 = 4.0;
pub const C2_SIGNIFICANCE: f64 = 0.01;
pub const C2_SECONDS: f64 = 30.0;
// criterion 3
pub const C3_RESOLUTION: usize = 256;
pub const C3_BETA_TOL: f64 = 1e-4;
// criterion 4
pub const C4_PAIRS: usize = 100;
pub const C4_MARGIN: f64 = 1e-6;
pub const C4_MASS_TOL: f64 = 1e-12;
// criterion 5
pub const C5_FUNCTIONS: usize = 1000;
pub const GL_NODES: usize = 32;
// criterion 6
pub const C6_START: [f64; 2] = [0.3, 0.4];
pub const C6_REPLICAS: usize = 10_000;
pub const C6_STEPS: usize = 1_000;
pub const C6_RADIUS: f64 = 1e-3;
pub const C6_UNRESOLVED_MAX: f64 = 0.01;
pub const C6_SECONDS: f64 = 60.0;
// criterion 7
pub const C7_STEPS: usize = 100_000;
pub const C7_REPLICAS: usize = 100;
pub const C7_RADIUS: f64 = 1e-3;
pub const C7_FRACTION: f64 = 0.99;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: serde_json::Value,
    pub bound: String,
    pub pass: bool,
}

/// Runtime bound; the measured time goes to `timings`, only the verdict to the report.
fn timing(name: &str, secs: f64, limit: f64, timings: &mut Vec<(String, f64)>) -> Check {
    timings.push((name.into(), secs));
    check(name, secs <= limit, format!("<= {limit} s"), secs <= limit)
}

fn check(name: &str, value: impl Serialize, bound: impl Into<String>, pass: bool) -> Check {
    Check { name: name.into(), value: serde_json::to_value(value).unwrap_or(serde_json::Value::Null), bound: bound.into(), pass }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub title: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Wall times, kept out of the JSON so reports compare byte for byte.
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip)]
    pub timings: Vec<(String, f64)>,
}

impl CriterionOutcome {
    fn new(id: usize, title: &str, checks: Vec<Check>, timings: Vec<(String, f64)>, seconds: f64) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { id, title: title.into(), pass, checks, seconds, timings }
    }

    pub fn summary_line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        let status = if self.pass { "PASS" } else { "FAIL" };
        if failed.is_empty() {
            format!("criterion {:>2} {status}  {} ({:.1} s)", self.id, self.title, self.seconds)
        } else {
            format!("criterion {:>2} {status}  {} ({:.1} s); failed: {}", self.id, self.title, self.seconds, failed.join(", "))
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Scratch space for the reproducibility check.
    pub work_dir: PathBuf,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        let dir = std::env::temp_dir().join(format!("dfchain-validate-{}-{seed}", std::process::id()));
        Self { seed, work_dir: dir }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<CriterionOutcome>,
    pub pass: bool,
}

pub fn run_criterion(id: usize, cfg: &SuiteConfig) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut timings = Vec::new();
    let (title, checks) = match id {
        1 => ("Dirichlet fixed point of P*", c1(&mut timings)?),
        2 => ("affine weights: Dirichlet ergodic limit", c2(cfg.seed, &mut timings)?),
        3 => ("d = 1 closed form", c3()?),
        4 => ("strict contraction of P*", c4(cfg.seed)?),
        5 => ("Markov operator axioms of P", c5(cfg.seed)?),
        6 => ("absorption probabilities for p_i(x) = x_i", c6(cfg.seed, &mut timings)?),
        7 => ("d = 1 classification", c7(cfg.seed)?),
        8 => ("classification on the triangle", c8(cfg.seed)?),
        9 => ("IFS uniqueness report", c9()?),
        10 => ("bit-identical artifacts", c10(cfg)?),
        _ => return Err(Error::Invalid(format!("no criterion {id}"))),
    };
    Ok(CriterionOutcome::new(id, title, checks, timings, start.elapsed().as_secs_f64()))
}

/// Runs every criterion; `each` sees outcomes as they finish.
pub fn run_suite<F: FnMut(&CriterionOutcome)>(cfg: &SuiteConfig, mut each: F) -> Result<SuiteReport> {
    let mut criteria = Vec::with_capacity(CRITERIA);
    for id in 1..=CRITERIA {
        let c = run_criterion(id, cfg)?;
        each(&c);
        criteria.push(c);
    }
    let pass = criteria.iter().all(|c| c.pass);
    Ok(SuiteReport { seed: cfg.seed, criteria, pass })
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(pool.install(f))
}

fn c1(timings: &mut Vec<(String, f64)>) -> Result<Vec<Check>> {
    let spec = WeightSpec::constant(C1_SPEC.to_vec())?;
    let params = DirichletParams::new(C1_SPEC.to_vec())?;
    let mut checks = Vec::new();
    let mut errs = Vec::new();
    for m in [64, 128] {
        let grid = SimplexGrid::new(2, m)?;
        let (res, secs, op) = single_threaded(|| -> Result<_> {
            let t = Instant::now();
            let op = TransferOperator::new(&spec, &grid, KernelOptions::default())?;
            let r = power_iterate(&GridDensity::uniform(grid.clone()), &op, POWER_TOL, POWER_MAX_ITER)?;
            Ok((r, t.elapsed().as_secs_f64(), op))
        })??;
        let reference = dirichlet::cell_masses(&params, &grid)?;
        let e = res.density.l1_distance(&reference);
        checks.push(check(
            &format!("m={m} converged"),
            json!({"status": res.status, "iterations": res.iterations}),
            "converged",
            res.status == IterationStatus::Converged,
        ));
        if m == 64 {
            checks.push(check("m=64 L1 to Dir[p]", e, format!("<= {C1_L1_MAX}"), e <= C1_L1_MAX));
            // reference limit far below the fit window
            let limit = power_iterate(&res.density, &op, 1e-13, POWER_MAX_ITER)?;
            let rate = estimate_rate(&GridDensity::uniform(grid.clone()), &op, &limit.density, 60, C1_RATE_WINDOW)?;
            checks.push(check(
                "geometric decay fit residual",
                json!({"rho": rate.rho, "residual": rate.residual, "points": rate.used}),
                format!("<= {C1_RATE_RESIDUAL}"),
                rate.residual <= C1_RATE_RESIDUAL,
            ));
        }
        checks.push(timing(&format!("m={m} single-threaded runtime"), secs, C1_SECONDS, timings));
        errs.push(e);
    }
    let ratio = errs[1] / errs[0];
    checks.push(check(
        "L1 ratio m=128 / m=64",
        json!({"l1_64": errs[0], "l1_128": errs[1], "ratio": ratio}),
        format!("in [{}, {}]", C1_HALVING.0, C1_HALVING.1),
        (C1_HALVING.0..=C1_HALVING.1).contains(&ratio),
    ));
    Ok(checks)
}

fn c2(seed: u64, timings: &mut Vec<(String, f64)>) -> Result<Vec<Check>> {
    let t = Instant::now();
    let spec = WeightSpec::affine(C2_THETA.to_vec())?;
    let start = SimplexPoint::new(vec![1.0 / 3.0, 1.0 / 3.0])?;
    let config = ChainConfig::new(spec, start, C2_STEPS + C2_BURN_IN, seed, C2_BURN_IN)?;
    let path = sample_path(&config, 1)?;
    let total: f64 = C2_THETA.iter().sum();
    let mut checks = Vec::new();
    for k in 0..3 {
        let series: Vec<f64> = path.iter().map(|p| p.barycentric()[k]).collect();
        let est = batch_means(&series);
        let want = C2_THETA[k] / total;
        let z = (est.estimate - want) / est.stderr;
        checks.push(check(
            &format!("mean x_{k}"),
            json!({"estimate": est.estimate, "stderr": est.stderr, "target": want, "z": z}),
            format!("|z| <= {C2_SIGMAS}"),
            z.abs() <= C2_SIGMAS,
        ));
    }
    let thinned: Vec<SimplexPoint> = path.iter().step_by(50).cloned().collect();
    let fit = dirichlet::goodness_of_fit(&thinned, &DirichletParams::new(C2_THETA.to_vec())?, 16, C2_SIGNIFICANCE)?;
    checks.push(check("goodness of fit", &fit, format!("pass at {C2_SIGNIFICANCE}"), fit.pass));
    checks.push(timing("runtime", t.elapsed().as_secs_f64(), C2_SECONDS, timings));
    Ok(checks)
}

fn c3() -> Result<Vec<Check>> {
    let spec = WeightSpec::constant(vec![0.4, 0.6])?;
    let grid = SimplexGrid::new(1, C3_RESOLUTION)?;
    let closed = d1_closed_form(&spec, &grid)?;
    let op = TransferOperator::new(&spec, &grid, KernelOptions::default())?;
    let it = power_iterate(&GridDensity::uniform(grid.clone()), &op, POWER_TOL, POWER_MAX_ITER)?;
    let beta = dirichlet::cell_masses(&DirichletParams::new(vec![0.4, 0.6])?, &grid)?;
    let e_it = closed.l1_distance(&it.density);
    let e_beta = closed.l1_distance(&beta);
    let bound = 2.0 / C3_RESOLUTION as f64;
    Ok(vec![
        check("power iterate converged", it.status, "converged", it.status == IterationStatus::Converged),
        check("L1 closed form vs power iterate", e_it, format!("<= 2/m = {bound}"), e_it <= bound),
        check("L1 closed form vs Beta(0.6, 0.4)", e_beta, format!("<= {C3_BETA_TOL}"), e_beta <= C3_BETA_TOL),
    ])
}

fn random_density<R: Rng>(r: &mut R, grid: &SimplexGrid, kind: usize) -> Result<GridDensity> {
    let n = grid.len();
    let masses: Vec<f64> = match kind % 3 {
        0 => (0..n).map(|_| r.random::<f64>()).collect(),
        // sparse bumps
        1 => (0..n).map(|_| if r.random::<f64>() < 0.05 { r.random::<f64>() } else { 0.0 }).collect(),
        _ => {
            let e: f64 = r.random_range(0.5..4.0);
            (0..n).map(|_| r.random::<f64>().powf(e)).collect()
        }
    };
    GridDensity::normalized(grid.clone(), masses)
}

fn c4(seed: u64) -> Result<Vec<Check>> {
    let spec = WeightSpec::constant(C1_SPEC.to_vec())?;
    let grid = SimplexGrid::new(2, 64)?;
    let op = TransferOperator::new(&spec, &grid, KernelOptions::default())?;
    let mut r = rng::stream(seed, 4);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    for k in 0..C4_PAIRS {
        let g1 = random_density(&mut r, &grid, k)?;
        let g2 = random_density(&mut r, &grid, k + 1)?;
        let a = op.apply_pstar(&g1)?;
        let b = op.apply_pstar(&g2)?;
        worst_ratio = worst_ratio.max(a.l1_distance(&b) / g1.l1_distance(&g2));
        worst_mass = worst_mass.max((a.total() - 1.0).abs()).max((b.total() - 1.0).abs());
    }
    Ok(vec![
        check("max ‖P*g1 − P*g2‖ / ‖g1 − g2‖", worst_ratio, format!("<= 1 - {C4_MARGIN}"), worst_ratio <= 1.0 - C4_MARGIN),
        check("max |‖P*g‖ − 1|", worst_mass, format!("<= {C4_MASS_TOL}"), worst_mass <= C4_MASS_TOL),
    ])
}

fn c5(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let specs =
        [WeightSpec::constant(C1_SPEC.to_vec())?, WeightSpec::affine(C2_THETA.to_vec())?, WeightSpec::named("k0-stationary", 2, true)?];
    let mut r = rng::stream(seed, 5);
    let grid = SimplexGrid::new(2, 16)?;
    let mut all_one = true;
    let mut min_value = f64::INFINITY;
    for (s, spec) in specs.iter().enumerate() {
        let one = apply_p(&GridFunction::constant(grid.clone(), 1.0), spec, GL_NODES)?;
        all_one &= one.values.iter().all(|v| *v == 1.0);
        for _ in 0..C5_FUNCTIONS / specs.len() + usize::from(s == 0) {
            let vals: Vec<f64> = (0..grid.len()).map(|_| if r.random::<f64>() < 0.3 { 0.0 } else { r.random::<f64>() * 10.0 }).collect();
            let pf = apply_p(&GridFunction::new(grid.clone(), vals)?, spec, GL_NODES)?;
            min_value = min_value.min(pf.values.iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
    checks.push(check("apply_P(1) == 1", all_one, "exact", all_one));
    checks.push(check("min apply_P(f) over f >= 0", min_value, ">= 0", min_value >= 0.0));
    Ok(checks)
}

fn c6(seed: u64, timings: &mut Vec<(String, f64)>) -> Result<Vec<Check>> {
    let t = Instant::now();
    let spec = WeightSpec::affine(vec![0.0; 3])?;
    let m = 64;
    let grid = SimplexGrid::new(2, m)?;
    let mut harm: f64 = 0.0;
    for k in 0..2 {
        let f = GridFunction::from_fn(grid.clone(), |x| x[k]);
        harm = harm.max(apply_p(&f, &spec, GL_NODES)?.sup_distance(&f));
    }
    let x0 = GridFunction::from_fn(grid.clone(), |x| 1.0 - x[0] - x[1]);
    harm = harm.max(apply_p(&x0, &spec, GL_NODES)?.sup_distance(&x0));
    let mut checks = vec![check("sup |P x_k − x_k|", harm, format!("<= 2/m = {}", 2.0 / m as f64), harm <= 2.0 / m as f64)];
    let config = ChainConfig::new(spec, SimplexPoint::new(C6_START.to_vec())?, C6_STEPS, seed, 0)?;
    let targets = [Target::Vertex { i: 0 }, Target::Vertex { i: 1 }, Target::Vertex { i: 2 }];
    let rep = absorption_experiment(&config, &targets, C6_RADIUS, C6_REPLICAS)?;
    let want = [1.0 - C6_START[0] - C6_START[1], C6_START[0], C6_START[1]];
    for (tf, w) in rep.targets.iter().zip(want) {
        let z = (tf.frequency - w) / tf.stderr;
        checks.push(check(
            &format!("frequency {}", tf.label),
            json!({"frequency": tf.frequency, "stderr": tf.stderr, "target": w, "z": z}),
            "|z| <= 4",
            z.abs() <= 4.0,
        ));
    }
    checks.push(check("unresolved fraction", rep.unresolved, format!("<= {C6_UNRESOLVED_MAX}"), rep.unresolved <= C6_UNRESOLVED_MAX));
    checks.push(timing("runtime", t.elapsed().as_secs_f64(), C6_SECONDS, timings));
    Ok(checks)
}

/// Reference d = 1 list of 𝒦_m taken verbatim, keyed by (p_1(1) = 1, p_0(0) = 1).
fn literal_d1_list(p11_one: bool, p00_one: bool) -> Vec<String> {
    match (p11_one, p00_one) {
        (false, false) => vec!["[e0,e1]".into()],
        (false, true) => vec!["{e1}".into()],
        (true, false) => vec!["{e0}".into()],
        (true, true) => vec!["{e0}".into(), "{e1}".into()],
    }
}

fn member_target(m: &MemberSet) -> Option<Target> {
    match *m {
        MemberSet::Vertex { index } => Some(Target::Vertex { i: index }),
        MemberSet::Edge { from, to } => Some(Target::Edge { i: from, j: to }),
        MemberSet::Region { .. } => None,
    }
}

pub fn d1_fixtures() -> Result<Vec<(&'static str, WeightSpec)>> {
    Ok(vec![
        ("p_1(1) < 1, p_0(0) < 1", WeightSpec::constant(vec![0.5, 0.5])?),
        ("p_1(1) < 1, p_0(0) = 1", WeightSpec::affine(vec![0.1, 0.0])?),
        ("p_1(1) = 1, p_0(0) < 1", WeightSpec::affine(vec![0.0, 0.1])?),
        ("p_1(1) = 1, p_0(0) = 1", WeightSpec::affine(vec![0.0, 0.0])?),
    ])
}

fn c7(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (k, (name, spec)) in d1_fixtures()?.into_iter().enumerate() {
        let c = absorbing::classify_d1(&spec)?;
        let got: Vec<String> = c.members.iter().map(|m| m.label()).collect();
        let p11 = c.profile.vertex_values[1][1] >= 1.0 - absorbing::EPS_ONE;
        let p00 = c.profile.vertex_values[0][0] >= 1.0 - absorbing::EPS_ONE;
        let listed = literal_d1_list(p11, p00);
        checks.push(check(
            &format!("{name}: matches the reference list"),
            json!({"returned": got, "listed": listed}),
            "equal",
            got == listed,
        ));

        let targets: Vec<Target> = c.members.iter().filter_map(member_target).collect();
        let config = ChainConfig::new(spec, SimplexPoint::new(vec![0.5])?, C7_STEPS, seed.wrapping_add(k as u64), 0)?;
        let rep = absorption_experiment(&config, &targets, C7_RADIUS, C7_REPLICAS)?;
        let frac = 1.0 - rep.unresolved;
        checks.push(check(
            &format!("{name}: trajectories end in a returned set"),
            json!({"fraction": frac, "returned": got}),
            format!(">= {C7_FRACTION}"),
            frac >= C7_FRACTION,
        ));
    }
    Ok(checks)
}

pub fn d2_fixtures() -> Result<Vec<(&'static str, WeightSpec, AbsorbingClass)>> {
    let interior = AbsorbingClass::InteriorCompact { reached_full_simplex: false, converged: true, iterations: 0 };
    Ok(vec![
        ("p_i(x) = x_i", WeightSpec::named("identity", 2, true)?, AbsorbingClass::ThreeVertices),
        ("two-vertices", WeightSpec::named("two-vertices", 2, true)?, AbsorbingClass::TwoVertices { vertices: [1, 2] }),
        ("affine (1/3, 0, 0)", WeightSpec::affine(vec![1.0 / 3.0, 0.0, 0.0])?, AbsorbingClass::OneVertex { vertex: 0 }),
        ("vertex-edge", WeightSpec::named("vertex-edge", 2, true)?, AbsorbingClass::VertexPlusOppositeEdge { vertex: 0, edge: [1, 2] }),
        ("one-edge", WeightSpec::named("one-edge", 2, true)?, AbsorbingClass::OneEdge { edge: [1, 2] }),
        ("k0-stationary", WeightSpec::named("k0-stationary", 2, true)?, interior),
        (
            "constant (1/3, 1/3, 1/3)",
            WeightSpec::constant(vec![1.0 / 3.0; 3])?,
            AbsorbingClass::InteriorCompact { reached_full_simplex: true, converged: true, iterations: 0 },
        ),
    ])
}

fn same_class(got: &AbsorbingClass, want: &AbsorbingClass) -> bool {
    match (got, want) {
        // the iteration count depends on the raster; compare the outcome
        (
            AbsorbingClass::InteriorCompact { reached_full_simplex: a, converged: b, .. },
            AbsorbingClass::InteriorCompact { reached_full_simplex: c, converged: d, .. },
        ) => a == c && b == d,
        _ => got == want,
    }
}

fn c8(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, spec, want) in d2_fixtures()? {
        let c = absorbing::classify_d2(&spec, 64, MAX_KN_ITERS)?;
        checks.push(check(&format!("{name}: class"), json!({"got": c.class, "expected": want}), "equal", same_class(&c.class, &want)));
        let reports = absorbing::verify_classification(&spec, &c, 2000, seed)?;
        let worst = reports.iter().map(|r| r.max_escape).fold(0.0, f64::max);
        checks.push(check(&format!("{name}: max escape"), worst, format!("<= {EPS_ESCAPE}"), worst <= EPS_ESCAPE));
    }
    Ok(checks)
}

fn c9() -> Result<Vec<Check>> {
    let r1 = ifs::contraction_coefficient(1.0)?;
    let affine = ifs::check_uniqueness(&WeightSpec::affine(C2_THETA.to_vec())?, 1.0, 20_000)?;
    let delta = affine.h3_index.as_ref().map(|h| h.delta);
    let id_spec = WeightSpec::affine(vec![0.0; 3])?;
    let id = ifs::check_uniqueness(&id_spec, 1.0, 20_000)?;
    let class = absorbing::classify_d2(&id_spec, 64, MAX_KN_ITERS)?;
    let contradicts = id.verdict != Verdict::Inconclusive && class.members.len() > 1;
    Ok(vec![
        check("contraction_coefficient(1)", r1, "== 0.5", r1 == 0.5),
        check("affine verdict", affine.verdict, "UniqueByH1H2H3", affine.verdict == Verdict::UniqueByH1H2H3),
        check("affine delta", delta, "== 0.1 (exact)", delta == Some(0.1) && affine.minima_exact),
        check("p_i(x) = x_i verdict", id.verdict, "Inconclusive", id.verdict == Verdict::Inconclusive),
        check(
            "agrees with classifier",
            json!({"class": class.class, "members": class.members.len()}),
            "no uniqueness claim with several minimal sets",
            !contradicts,
        ),
    ])
}

fn c10(cfg: &SuiteConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let runs = [cfg.work_dir.join("a"), cfg.work_dir.join("b")];
    let threads = [1usize, 4];
    for (dir, th) in runs.iter().zip(threads) {
        if dir.exists() {
            std::fs::remove_dir_all(dir)?;
        }
        crate::cli::reproducibility_run(dir, cfg.seed, th)?;
    }
    let mut names: Vec<PathBuf> = walk(&runs[0])?;
    names.sort();
    let mut mismatched = Vec::new();
    for rel in &names {
        if rel.file_name().is_some_and(|n| n == "manifest.json") {
            continue;
        }
        let a = std::fs::read(runs[0].join(rel))?;
        let b = std::fs::read(runs[1].join(rel)).unwrap_or_default();
        if a != b {
            mismatched.push(rel.display().to_string());
        }
    }
    let compared = names.iter().filter(|n| n.extension().is_some_and(|e| e == "csv" || e == "json")).count();
    checks.push(check("artifacts compared", compared, ">= 1", compared >= 1));
    checks.push(check("differing artifacts", &mismatched, "none", mismatched.is_empty()));

    // the stochastic criteria give byte-identical reports on a second run
    let mut again = Vec::new();
    for id in [4, 5, 7] {
        let a = serde_json::to_string(&run_criterion(id, cfg)?)?;
        let b = serde_json::to_string(&run_criterion(id, cfg)?)?;
        if a != b {
            again.push(id);
        }
    }
    checks.push(check("criteria differing on rerun", &again, "none", again.is_empty()));
    let _ = std::fs::remove_dir_all(&cfg.work_dir);
    Ok(checks)
}

fn walk(root: &std::path::Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else if let Ok(rel) = p.strip_prefix(root) {
                out.push(rel.to_path_buf());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_list_differs_from_rules_in_the_middle_cases() {
        assert_eq!(literal_d1_list(false, true), vec!["{e1}"]);
        let c = absorbing::classify_d1(&WeightSpec::affine(vec![0.1, 0.0]).unwrap()).unwrap();
        assert_eq!(c.members[0].label(), "{e0}");
    }

    #[test]
    fn cheap_criteria_pass() {
        let cfg = SuiteConfig::new(11);
        for id in [5, 9] {
            let c = run_criterion(id, &cfg).unwrap();
            assert!(c.pass, "{:?}", c.checks);
        }
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        assert!(run_criterion(11, &SuiteConfig::new(0)).is_err());
    }
}
