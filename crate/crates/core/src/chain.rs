//! Exact sampling of the chain, trajectories, ergodic averages and absorption runs.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::SimplexGrid;
use crate::rng::{self, Stream};
use crate::simplex::{segment_coords, vertex, SimplexPoint};
use crate::weights::WeightSpec;

#[derive(Clone, Debug)]
pub struct ChainConfig {
    pub spec: WeightSpec,
    pub start: SimplexPoint,
    pub steps: usize,
    pub seed: u64,
    pub burn_in: usize,
}

impl ChainConfig {
    pub fn new(spec: WeightSpec, start: SimplexPoint, steps: usize, seed: u64, burn_in: usize) -> Result<Self> {
        let c = Self { spec, start, steps, seed, burn_in };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start.dim() != self.spec.dim() {
            return Err(Error::Dimension { expected: self.spec.dim(), got: self.start.dim() });
        }
        if self.steps > 0 && self.burn_in >= self.steps {
            return Err(Error::Invalid(format!("burn_in {} must be below steps {}", self.burn_in, self.steps)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec.to_json(),
            "start": self.start.coords(),
            "steps": self.steps,
            "seed": self.seed,
            "burn_in": self.burn_in,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Choice {
    pub i: usize,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub points: Vec<SimplexPoint>,
    pub config: ChainConfig,
    pub choices: Vec<Choice>,
}

/// One transition with a caller-supplied draw (i, t).
pub fn step_forced(x: &SimplexPoint, i: usize, t: f64) -> Result<SimplexPoint> {
    crate::simplex::segment_map(i, t, x)
}

pub fn step(x: &SimplexPoint, spec: &WeightSpec, rng: &mut Stream) -> Result<(SimplexPoint, usize, f64)> {
    let p = spec.eval(x)?;
    let i = rng::categorical(&p, rng::half_open01(rng));
    let t = rng::closed01(rng);
    Ok((SimplexPoint::clamped(segment_coords(i, t, x.coords())), i, t))
}

/// In-place transition on raw coordinates; returns the draw.
#[inline]
pub(crate) fn step_raw(x: &mut [f64], p: &mut [f64], spec: &WeightSpec, rng: &mut Stream) -> Result<Choice> {
    spec.eval_into(x, p)?;
    let i = rng::categorical(p, rng::half_open01(rng));
    let t = rng::closed01(rng);
    for v in x.iter_mut() {
        *v *= t;
    }
    if i > 0 {
        x[i - 1] += 1.0 - t;
    }
    let s: f64 = x.iter().sum();
    if s > 1.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
    Ok(Choice { i, t })
}

pub fn simulate(config: &ChainConfig) -> Result<Trajectory> {
    simulate_replica(config, 0)
}

/// Trajectory driven by stream (seed, replica).
pub fn simulate_replica(config: &ChainConfig, replica: u64) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = rng::stream(config.seed, replica);
    let d = config.spec.dim();
    let mut x = config.start.coords().to_vec();
    let mut p = vec![0.0; d + 1];
    let mut points = Vec::with_capacity(config.steps + 1);
    let mut choices = Vec::with_capacity(config.steps);
    points.push(config.start.clone());
    for _ in 0..config.steps {
        let c = step_raw(&mut x, &mut p, &config.spec, &mut rng)?;
        choices.push(c);
        points.push(SimplexPoint::clamped(x.clone()));
    }
    Ok(Trajectory { points, config: config.clone(), choices })
}

impl Trajectory {
    /// CSV with header `step,x1,...,xd,i,t`; the initial row leaves i and t empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::csv_header(self.config.spec.dim(), false).as_bytes())?;
        self.write_rows(&mut w, None)
    }

    pub fn csv_header(d: usize, with_replica: bool) -> String {
        let mut header = String::from(if with_replica { "replica,step" } else { "step" });
        for k in 1..=d {
            header.push_str(&format!(",x{k}"));
        }
        header.push_str(",i,t\n");
        header
    }

    /// Data rows only, optionally prefixed by a replica column.
    pub fn write_rows<W: Write>(&self, mut w: W, replica: Option<u64>) -> Result<()> {
        for (n, pt) in self.points.iter().enumerate() {
            let mut line = match replica {
                Some(r) => format!("{r},{n}"),
                None => n.to_string(),
            };
            for c in pt.coords() {
                line.push_str(&format!(",{c:?}"));
            }
            match n.checked_sub(1).and_then(|k| self.choices.get(k)) {
                Some(c) => line.push_str(&format!(",{},{:?}\n", c.i, c.t)),
                None => line.push_str(",,\n"),
            }
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

#[derive(Clone)]
pub enum Observable {
    One,
    /// Barycentric coordinate x_k, k = 0..=d.
    Coordinate(usize),
    Product(usize, usize),
    /// Indicator of a cell of the grid at the given resolution.
    Cell {
        resolution: usize,
        cell: usize,
    },
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Observable {
    fn eval(&self, x: &[f64], grid: Option<&SimplexGrid>) -> f64 {
        let bary = |k: usize| if k == 0 { (1.0 - x.iter().sum::<f64>()).max(0.0) } else { x[k - 1] };
        match self {
            Observable::One => 1.0,
            Observable::Coordinate(k) => bary(*k),
            Observable::Product(a, b) => bary(*a) * bary(*b),
            Observable::Cell { cell, .. } => {
                let g = grid.expect("grid built for cell observable");
                if g.locate(x) == *cell {
                    1.0
                } else {
                    0.0
                }
            }
            Observable::Custom(f) => f(x),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub batches: usize,
}

/// Batch-means mean and standard error of a series.
pub fn batch_means(values: &[f64]) -> ErgodicEstimate {
    let n = values.len();
    let batches = ((n as f64).sqrt().floor() as usize).max(1);
    let size = n / batches;
    let estimate = values.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..batches).map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let mbar = means.iter().sum::<f64>() / batches as f64;
    let var = if batches > 1 { means.iter().map(|m| (m - mbar).powi(2)).sum::<f64>() / (batches - 1) as f64 } else { 0.0 };
    ErgodicEstimate { estimate, stderr: (var / batches as f64).sqrt(), samples: n, batches }
}

/// Time averages of several observables over one post-burn-in run.
pub fn ergodic_averages(config: &ChainConfig, fs: &[Observable]) -> Result<Vec<ErgodicEstimate>> {
    config.validate()?;
    if config.steps == 0 {
        return Err(Error::Invalid("ergodic average needs steps >= 1".into()));
    }
    let grids: Vec<Option<SimplexGrid>> = fs
        .iter()
        .map(|f| match f {
            Observable::Cell { resolution, .. } => SimplexGrid::new(config.spec.dim(), *resolution).ok(),
            _ => None,
        })
        .collect();
    let mut rng = rng::stream(config.seed, 0);
    let d = config.spec.dim();
    let mut x = config.start.coords().to_vec();
    let mut p = vec![0.0; d + 1];
    let n = config.steps - config.burn_in;
    let mut series = vec![Vec::with_capacity(n); fs.len()];
    for k in 0..config.steps {
        step_raw(&mut x, &mut p, &config.spec, &mut rng)?;
        if k >= config.burn_in {
            for (j, f) in fs.iter().enumerate() {
                series[j].push(f.eval(&x, grids[j].as_ref()));
            }
        }
    }
    Ok(series.iter().map(|s| batch_means(s)).collect())
}

pub fn ergodic_average(config: &ChainConfig, f: Observable) -> Result<ErgodicEstimate> {
    Ok(ergodic_averages(config, &[f])?.remove(0))
}

/// Post-burn-in states, keeping every `thin`-th one.
pub fn sample_path(config: &ChainConfig, thin: usize) -> Result<Vec<SimplexPoint>> {
    config.validate()?;
    let thin = thin.max(1);
    let mut rng = rng::stream(config.seed, 0);
    let mut x = config.start.coords().to_vec();
    let mut p = vec![0.0; config.spec.dim() + 1];
    let mut out = Vec::with_capacity((config.steps - config.burn_in) / thin + 1);
    for k in 0..config.steps {
        step_raw(&mut x, &mut p, &config.spec, &mut rng)?;
        if k >= config.burn_in && (k - config.burn_in) % thin == thin - 1 {
            out.push(SimplexPoint::clamped(x.clone()));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Target {
    Vertex { i: usize },
    Edge { i: usize, j: usize },
}

impl Target {
    pub fn distance(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let v = |i: usize| vertex(i, d).expect("target vertex in range").coords().to_vec();
        match *self {
            Target::Vertex { i } => dist(x, &v(i)),
            Target::Edge { i, j } => {
                let (a, b) = (v(i), v(j));
                let ab: Vec<f64> = b.iter().zip(&a).map(|(p, q)| p - q).collect();
                let ax: Vec<f64> = x.iter().zip(&a).map(|(p, q)| p - q).collect();
                let l2: f64 = ab.iter().map(|u| u * u).sum();
                let s = (ab.iter().zip(&ax).map(|(u, w)| u * w).sum::<f64>() / l2).clamp(0.0, 1.0);
                let proj: Vec<f64> = a.iter().zip(&ab).map(|(p, u)| p + s * u).collect();
                dist(x, &proj)
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Target::Vertex { i } => format!("e{i}"),
            Target::Edge { i, j } => format!("[e{i},e{j}]"),
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetFrequency {
    pub target: Target,
    pub label: String,
    pub count: usize,
    pub frequency: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorptionReport {
    pub replicas: usize,
    pub steps: usize,
    pub radius: f64,
    pub seed: u64,
    pub targets: Vec<TargetFrequency>,
    pub unresolved_count: usize,
    pub unresolved: f64,
}

/// Runs `replicas` independent chains of `config.steps` steps; replica r uses
/// stream (seed, r). A final point is assigned to the nearest target within
/// `radius`, otherwise counted as unresolved.
pub fn absorption_experiment(config: &ChainConfig, targets: &[Target], radius: f64, replicas: usize) -> Result<AbsorptionReport> {
    config.validate()?;
    if !(radius > 0.0) || replicas == 0 || targets.is_empty() {
        return Err(Error::Invalid("need radius > 0, replicas > 0 and at least one target".into()));
    }
    let finals: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(config.seed, r as u64);
            let mut x = config.start.coords().to_vec();
            let mut p = vec![0.0; config.spec.dim() + 1];
            for _ in 0..config.steps {
                step_raw(&mut x, &mut p, &config.spec, &mut rng)?;
            }
            Ok(x)
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; targets.len()];
    let mut unresolved_count = 0;
    for x in &finals {
        let best = targets
            .iter()
            .enumerate()
            .map(|(k, t)| (k, t.distance(x)))
            .filter(|(_, dd)| *dd <= radius)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match best {
            Some((k, _)) => counts[k] += 1,
            None => unresolved_count += 1,
        }
    }
    let n = replicas as f64;
    let freq = |c: usize| {
        let f = c as f64 / n;
        (f, (f * (1.0 - f) / n).sqrt())
    };
    Ok(AbsorptionReport {
        replicas,
        steps: config.steps,
        radius,
        seed: config.seed,
        targets: targets
            .iter()
            .zip(&counts)
            .map(|(t, &c)| {
                let (f, se) = freq(c);
                TargetFrequency { target: *t, label: t.label(), count: c, frequency: f, stderr: se }
            })
            .collect(),
        unresolved_count,
        unresolved: unresolved_count as f64 / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn forced_step() {
        let y = step_forced(&pt(&[0.3, 0.4]), 1, 0.25).unwrap();
        assert!((y.coords()[0] - 0.825).abs() < 1e-15 && (y.coords()[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn absorbed_vertex_stays() {
        let spec = WeightSpec::affine(vec![0.0; 3]).unwrap();
        let mut rng = rng::stream(3, 0);
        let e0 = vertex(0, 2).unwrap();
        for _ in 0..100 {
            let (y, i, _) = step(&e0, &spec, &mut rng).unwrap();
            assert_eq!(i, 0);
            assert_eq!(y, e0);
        }
    }

    #[test]
    fn vertex_frequencies_match_weights() {
        let spec = WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap();
        let x = pt(&[0.5, 0.25]);
        let p = spec.eval(&x).unwrap();
        let mut rng = rng::stream(11, 0);
        let n = 1_000_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[step(&x, &spec, &mut rng).unwrap().1] += 1;
        }
        for i in 0..3 {
            let f = counts[i] as f64 / n as f64;
            let se = (p[i] * (1.0 - p[i]) / n as f64).sqrt();
            assert!((f - p[i]).abs() < 4.0 * se, "{i}: {f} vs {}", p[i]);
        }
    }

    #[test]
    fn simulate_contract() {
        let spec = WeightSpec::constant(vec![0.3, 0.5, 0.2]).unwrap();
        let c0 = ChainConfig::new(spec.clone(), pt(&[0.2, 0.2]), 0, 1, 0).unwrap();
        assert_eq!(simulate(&c0).unwrap().points, vec![pt(&[0.2, 0.2])]);
        let c = ChainConfig::new(spec, pt(&[0.2, 0.2]), 500, 42, 0).unwrap();
        let a = simulate(&c).unwrap();
        let b = simulate(&c).unwrap();
        assert_eq!(a.points, b.points);
        for (k, ch) in a.choices.iter().enumerate() {
            let next = SimplexPoint::clamped(segment_coords(ch.i, ch.t, a.points[k].coords()));
            assert_eq!(next, a.points[k + 1]);
        }
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("step,x1,x2,i,t\n0,0.2,0.2,,\n1,"));
        assert_eq!(text.lines().count(), 502);
    }

    #[test]
    fn closure_over_many_steps() {
        let spec = WeightSpec::named("k0-stationary", 2, false).unwrap();
        let c = ChainConfig::new(spec, pt(&[0.1, 0.1]), 1_000_000, 5, 0).unwrap();
        let mut rng = rng::stream(c.seed, 0);
        let mut x = c.start.coords().to_vec();
        let mut p = vec![0.0; 3];
        for _ in 0..c.steps {
            step_raw(&mut x, &mut p, &c.spec, &mut rng).unwrap();
            assert!(x.iter().all(|v| *v >= 0.0) && x.iter().sum::<f64>() <= 1.0);
        }
    }

    #[test]
    fn ergodic_constant_observable() {
        let spec = WeightSpec::constant(vec![1.0 / 3.0; 3]).unwrap();
        let c = ChainConfig::new(spec, pt(&[0.3, 0.3]), 10_000, 9, 100).unwrap();
        let e = ergodic_average(&c, Observable::One).unwrap();
        assert_eq!(e.estimate, 1.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn ergodic_means() {
        let spec = WeightSpec::constant(vec![1.0 / 3.0; 3]).unwrap();
        let c = ChainConfig::new(spec, pt(&[0.3, 0.3]), 200_000, 9, 1000).unwrap();
        let e = ergodic_average(&c, Observable::Coordinate(1)).unwrap();
        assert!((e.estimate - 1.0 / 3.0).abs() < 4.0 * e.stderr, "{e:?}");
        let spec = WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap();
        let c = ChainConfig::new(spec, pt(&[0.3, 0.3]), 200_000, 10, 1000).unwrap();
        let e = ergodic_average(&c, Observable::Coordinate(1)).unwrap();
        assert!((e.estimate - 1.0 / 3.0).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn absorption_d1_identity() {
        let spec = WeightSpec::affine(vec![0.0, 0.0]).unwrap();
        let c = ChainConfig::new(spec, pt(&[0.8]), 1000, 21, 0).unwrap();
        let r = absorption_experiment(&c, &[Target::Vertex { i: 0 }, Target::Vertex { i: 1 }], 1e-3, 4000).unwrap();
        let f1 = &r.targets[1];
        assert!((f1.frequency - 0.8).abs() < 4.0 * f1.stderr, "{r:?}");
        assert_eq!(r.targets.iter().map(|t| t.count).sum::<usize>() + r.unresolved_count, 4000);
    }

    #[test]
    fn absorption_vertex_edge_split() {
        let spec = WeightSpec::named("vertex-edge", 2, false).unwrap();
        let c = ChainConfig::new(spec, pt(&[0.3, 0.3]), 1000, 4, 0).unwrap();
        let r = absorption_experiment(&c, &[Target::Vertex { i: 0 }, Target::Edge { i: 1, j: 2 }], 1e-3, 2000).unwrap();
        let total: f64 = r.targets.iter().map(|t| t.frequency).sum::<f64>() + r.unresolved;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(r.targets[0].count > 0 && r.targets[1].count > 0);
    }

    #[test]
    fn edge_distance() {
        let t = Target::Edge { i: 1, j: 2 };
        assert!((t.distance(&[0.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(t.distance(&[0.5, 0.5]).abs() < 1e-15);
        assert!((Target::Vertex { i: 1 }.distance(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }
}
