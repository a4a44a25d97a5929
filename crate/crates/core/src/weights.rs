//! Weight functions p_0..p_d and the boundary data derived from them.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{vertex, SimplexPoint};

/// Values below this are treated as zero when computing supports.
pub const EPS_POS: f64 = 1e-9;
/// Tolerance on Σ p_i = 1.
pub const SUM_TOL: f64 = 1e-10;

/// Callback receives the barycentric vector (x_0, ..., x_d).
pub type Callback = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Linear,
    Nearest,
}

/// Node values on the regular lattice {k/m} of Δ_d, d ∈ {1, 2}.
///
/// Node order: d = 1 runs k = 0..=m; d = 2 runs i = 0..=m (x_1 index) outer,
/// j = 0..=m−i (x_2 index) inner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub resolution: usize,
    pub values: Vec<Vec<f64>>,
    #[serde(default = "default_interp")]
    pub interpolation: Interpolation,
}

fn default_interp() -> Interpolation {
    Interpolation::Linear
}

#[derive(Clone)]
pub struct Programmatic {
    pub name: String,
    pub strict: bool,
    f: Callback,
}

impl fmt::Debug for Programmatic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Programmatic").field("name", &self.name).field("strict", &self.strict).finish()
    }
}

#[derive(Clone, Debug)]
pub enum WeightKind {
    Constant(Vec<f64>),
    Affine(Vec<f64>),
    Tabulated(Table),
    Programmatic(Programmatic),
}

#[derive(Clone, Debug)]
pub struct WeightSpec {
    kind: WeightKind,
    dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SpecDoc {
    Constant {
        p: Vec<f64>,
    },
    Affine {
        theta: Vec<f64>,
    },
    Tabulated {
        grid: Table,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Programmatic {
        name: String,
        dim: usize,
        #[serde(default)]
        strict: bool,
    },
}

fn check_prob(v: &[f64], what: &str) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::Spec(format!("{what} needs at least 2 entries")));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Spec(format!("{what} has negative or non-finite entries: {v:?}")));
    }
    Ok(())
}

impl WeightSpec {
    pub fn constant(p: Vec<f64>) -> Result<Self> {
        check_prob(&p, "p")?;
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::Spec(format!("p sums to {s}, expected 1")));
        }
        let dim = p.len() - 1;
        Ok(Self { kind: WeightKind::Constant(p), dim })
    }

    /// p_i(y) = θ_i + (1−|θ|)·y_i. Zero entries are allowed, so θ = 0 gives p_i(y) = y_i.
    pub fn affine(theta: Vec<f64>) -> Result<Self> {
        check_prob(&theta, "theta")?;
        let s: f64 = theta.iter().sum();
        if s > 1.0 + SUM_TOL {
            return Err(Error::Spec(format!("|theta| = {s} exceeds 1")));
        }
        let dim = theta.len() - 1;
        Ok(Self { kind: WeightKind::Affine(theta), dim })
    }

    pub fn tabulated(dim: usize, table: Table) -> Result<Self> {
        let m = table.resolution;
        if m == 0 {
            return Err(Error::Spec("tabulated resolution must be positive".into()));
        }
        let expected = match dim {
            1 => m + 1,
            2 => (m + 1) * (m + 2) / 2,
            _ => return Err(Error::Unsupported(format!("tabulated weights for d = {dim}"))),
        };
        if table.values.len() != expected {
            return Err(Error::Spec(format!("tabulated grid at resolution {m} needs {expected} node values, got {}", table.values.len())));
        }
        for (k, v) in table.values.iter().enumerate() {
            if v.len() != dim + 1 {
                return Err(Error::Spec(format!("node {k}: expected {} weights", dim + 1)));
            }
            check_prob(v, &format!("node {k}"))?;
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-6 {
                return Err(Error::Spec(format!("node {k}: weights sum to {s}")));
            }
        }
        Ok(Self { kind: WeightKind::Tabulated(table), dim })
    }

    /// Builds a spec from a callback on barycentric coordinates. With `strict`,
    /// the callback is checked on a lattice before returning.
    pub fn programmatic(name: &str, dim: usize, strict: bool, f: Callback) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Spec("dimension must be positive".into()));
        }
        let spec = Self { kind: WeightKind::Programmatic(Programmatic { name: name.to_string(), strict, f }), dim };
        if strict {
            for x in lattice_points(dim, if dim <= 2 { 32 } else { 8 }) {
                spec.eval(&x)?;
            }
        }
        Ok(spec)
    }

    /// Looks up a built-in callback by name.
    pub fn named(name: &str, dim: usize, strict: bool) -> Result<Self> {
        let f = builtin(name, dim)?;
        Self::programmatic(name, dim, strict, f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, WeightKind::Constant(_))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        match doc {
            SpecDoc::Constant { p } => Self::constant(p),
            SpecDoc::Affine { theta } => Self::affine(theta),
            SpecDoc::Tabulated { grid, dim } => {
                let d = match dim {
                    Some(d) => d,
                    None => grid
                        .values
                        .first()
                        .map(|v| v.len().saturating_sub(1))
                        .ok_or_else(|| Error::Spec("tabulated grid has no values".into()))?,
                };
                Self::tabulated(d, grid)
            }
            SpecDoc::Programmatic { name, dim, strict } => Self::named(&name, dim, strict),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let doc = match &self.kind {
            WeightKind::Constant(p) => SpecDoc::Constant { p: p.clone() },
            WeightKind::Affine(t) => SpecDoc::Affine { theta: t.clone() },
            WeightKind::Tabulated(t) => SpecDoc::Tabulated { grid: t.clone(), dim: Some(self.dim) },
            WeightKind::Programmatic(p) => SpecDoc::Programmatic { name: p.name.clone(), dim: self.dim, strict: p.strict },
        };
        serde_json::to_value(doc).expect("spec serializes")
    }

    pub fn eval(&self, x: &SimplexPoint) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.dim() });
        }
        let mut out = vec![0.0; self.dim + 1];
        self.eval_into(x.coords(), &mut out)?;
        Ok(out)
    }

    /// Allocation-free evaluation on raw coordinates x_1..x_d (assumed inside Δ_d).
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let x0 = (1.0 - x.iter().sum::<f64>()).max(0.0);
        match &self.kind {
            WeightKind::Constant(p) => out.copy_from_slice(p),
            WeightKind::Affine(theta) => {
                let slope = 1.0 - theta.iter().sum::<f64>();
                out[0] = theta[0] + slope * x0;
                for i in 1..=self.dim {
                    out[i] = theta[i] + slope * x[i - 1];
                }
            }
            WeightKind::Tabulated(t) => {
                interpolate(t, self.dim, x, out);
                let s: f64 = out.iter().map(|v| v.max(0.0)).sum();
                out.iter_mut().for_each(|v| *v = v.max(0.0) / s);
            }
            WeightKind::Programmatic(p) => {
                let mut b = Vec::with_capacity(self.dim + 1);
                b.push(x0);
                b.extend_from_slice(x);
                let v = (p.f)(&b);
                let s: f64 = v.iter().sum();
                if v.len() != self.dim + 1 || v.iter().any(|y| !y.is_finite() || *y < -SUM_TOL) || (s - 1.0).abs() > SUM_TOL {
                    return Err(Error::InvalidWeights { x: x.to_vec(), p: v });
                }
                for (o, y) in out.iter_mut().zip(&v) {
                    *o = y.max(0.0);
                }
            }
        }
        Ok(())
    }

    /// Exact minimum of each p_i over Δ_d when it is available in closed form.
    pub fn analytic_minimum(&self) -> Option<Vec<f64>> {
        match &self.kind {
            WeightKind::Constant(p) => Some(p.clone()),
            WeightKind::Affine(theta) => Some(theta.clone()),
            _ => None,
        }
    }
}

fn interpolate(t: &Table, dim: usize, x: &[f64], out: &mut [f64]) {
    let m = t.resolution;
    let mf = m as f64;
    match dim {
        1 => {
            let s = (x[0] * mf).clamp(0.0, mf);
            let k = (s.floor() as usize).min(m - 1);
            let f = s - k as f64;
            match t.interpolation {
                Interpolation::Nearest => {
                    let n = if f < 0.5 { k } else { k + 1 };
                    out.copy_from_slice(&t.values[n]);
                }
                Interpolation::Linear => {
                    for (o, (a, b)) in out.iter_mut().zip(t.values[k].iter().zip(&t.values[k + 1])) {
                        *o = (1.0 - f) * a + f * b;
                    }
                }
            }
        }
        _ => {
            let node = |i: usize, j: usize| i * (m + 1) - i * (i.saturating_sub(1)) / 2 + j;
            let u = (x[0] * mf).clamp(0.0, mf);
            let v = (x[1] * mf).clamp(0.0, mf);
            let i = (u.floor() as usize).min(m - 1);
            let j = (v.floor() as usize).min(m - 1 - i.min(m - 1));
            let (fu, fv) = (u - i as f64, v - j as f64);
            // lower triangle (i,j),(i+1,j),(i,j+1) or upper (i+1,j),(i+1,j+1),(i,j+1)
            let (nodes, w): ([(usize, usize); 3], [f64; 3]) = if fu + fv <= 1.0 || i + j + 1 >= m {
                ([(i, j), (i + 1, j), (i, j + 1)], [1.0 - fu - fv, fu, fv])
            } else {
                ([(i + 1, j), (i + 1, j + 1), (i, j + 1)], [1.0 - fv, fu + fv - 1.0, 1.0 - fu])
            };
            match t.interpolation {
                Interpolation::Nearest => {
                    let (k, _) = w.iter().enumerate().fold((0, f64::MIN), |acc, (k, &wk)| if wk > acc.1 { (k, wk) } else { acc });
                    let (a, b) = nodes[k];
                    out.copy_from_slice(&t.values[node(a, b)]);
                }
                Interpolation::Linear => {
                    out.iter_mut().for_each(|o| *o = 0.0);
                    for (&(a, b), &wk) in nodes.iter().zip(&w) {
                        let wk = wk.clamp(0.0, 1.0);
                        for (o, val) in out.iter_mut().zip(&t.values[node(a, b)]) {
                            *o += wk * val;
                        }
                    }
                }
            }
        }
    }
}

/// Node index in the tabulated d = 2 ordering.
pub fn table_node_index(m: usize, i: usize, j: usize) -> usize {
    i * (m + 1) - i * (i.saturating_sub(1)) / 2 + j
}

/// All lattice points of Δ_d with spacing 1/m.
pub fn lattice_points(dim: usize, m: usize) -> Vec<SimplexPoint> {
    fn rec(dim: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<SimplexPoint>) {
        if cur.len() == dim {
            let c = cur.iter().map(|&k| k as f64 / m as f64).collect();
            out.push(SimplexPoint::clamped(c));
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, m, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, m, m, &mut Vec::new(), &mut out);
    out
}

fn builtin(name: &str, dim: usize) -> Result<Callback> {
    let need2 = |n: &str| -> Result<()> {
        if dim != 2 {
            return Err(Error::Spec(format!("programmatic spec '{n}' is defined only for d = 2")));
        }
        Ok(())
    };
    let f: Callback = match name {
        "identity" => Arc::new(|b: &[f64]| b.to_vec()),
        "vertex-edge" => {
            need2(name)?;
            Arc::new(|b: &[f64]| vec![b[0], (1.0 - b[0]) / 2.0, (1.0 - b[0]) / 2.0])
        }
        "two-vertices" => {
            need2(name)?;
            Arc::new(|b: &[f64]| vec![b[0] / 2.0, b[1] + b[0] / 4.0, b[2] + b[0] / 4.0])
        }
        "one-edge" => {
            need2(name)?;
            Arc::new(|b: &[f64]| {
                let q = (1.0 - b[0] / 2.0) / 2.0;
                vec![b[0] / 2.0, q, q]
            })
        }
        "k0-stationary" => {
            need2(name)?;
            Arc::new(k0_stationary)
        }
        _ => return Err(Error::Spec(format!("unknown programmatic spec '{name}'"))),
    };
    Ok(f)
}

/// Each p_i vanishes on the far part of the middle-third wedge seen from e_i,
/// so the union of the cones co{e_i, L_i} is already absorbing.
fn k0_stationary(b: &[f64]) -> Vec<f64> {
    const OPP: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];
    let mut w = [0.0; 3];
    for i in 0..3 {
        let (j, k) = OPP[i];
        let den = b[j] + b[k];
        let a = if den > 1e-14 {
            let s = b[k] / den;
            (1.0 / 3.0 - s).max(s - 2.0 / 3.0).max(0.0)
        } else {
            0.0
        };
        let r = 1.0 - b[i];
        w[i] = a.max(0.7 - r).max(0.0).powi(2);
    }
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Closed parameter interval on an edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Endpoints of the edge opposite e_i, in parameter order (s = 0 at the first).
pub const OPPOSITE_EDGE: [(usize, usize); 3] = [(1, 2), (0, 2), (0, 1)];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryProfile {
    pub dim: usize,
    pub resolution: usize,
    /// vertex_values[i][j] = p_j(e_i).
    pub vertex_values: Vec<Vec<f64>>,
    /// For d = 2: L_i on the edge opposite e_i, parametrized as in `OPPOSITE_EDGE`.
    pub edge_support: Vec<Vec<Interval>>,
    pub empty: Vec<bool>,
}

impl BoundaryProfile {
    /// Point on the edge opposite e_i at parameter s.
    pub fn edge_point(i: usize, s: f64) -> [f64; 2] {
        let (a, b) = OPPOSITE_EDGE[i];
        let pa = vertex2(a);
        let pb = vertex2(b);
        [(1.0 - s) * pa[0] + s * pb[0], (1.0 - s) * pa[1] + s * pb[1]]
    }
}

pub(crate) fn vertex2(i: usize) -> [f64; 2] {
    match i {
        0 => [0.0, 0.0],
        1 => [1.0, 0.0],
        _ => [0.0, 1.0],
    }
}

pub fn boundary_profile(spec: &WeightSpec, resolution: usize) -> Result<BoundaryProfile> {
    let d = spec.dim();
    if d > 2 {
        return Err(Error::Unsupported(format!("boundary profile for d = {d}")));
    }
    if resolution < 16 {
        return Err(Error::Invalid(format!("resolution {resolution} < 16")));
    }
    let mut vertex_values = Vec::with_capacity(d + 1);
    for i in 0..=d {
        vertex_values.push(spec.eval(&vertex(i, d)?)?);
    }
    let mut edge_support = Vec::new();
    let mut empty = Vec::new();
    if d == 2 {
        let mut p = [0.0; 3];
        for i in 0..3 {
            let mut runs: Vec<Interval> = Vec::new();
            let mut open: Option<f64> = None;
            let mut last = 0.0;
            for k in 0..resolution {
                let s = k as f64 / (resolution - 1) as f64;
                spec.eval_into(&BoundaryProfile::edge_point(i, s), &mut p)?;
                if p[i] > EPS_POS {
                    if open.is_none() {
                        open = Some(s);
                    }
                    last = s;
                } else if let Some(lo) = open.take() {
                    runs.push(Interval { lo, hi: last });
                }
            }
            if let Some(lo) = open {
                runs.push(Interval { lo, hi: last });
            }
            empty.push(runs.is_empty());
            edge_support.push(runs);
        }
    }
    Ok(BoundaryProfile { dim: d, resolution, vertex_values, edge_support, empty })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HolderEstimate {
    pub alpha: f64,
    pub estimate: f64,
    pub samples: usize,
    /// (pair distance, largest ratio seen at that distance), coarse to fine.
    pub per_scale: Vec<(f64, f64)>,
    pub possibly_not_holder: bool,
}

/// Empirical lower bound on max_j sup |p_j(x) − p_j(y)| / |x − y|^α, distances in ℓ¹.
///
/// Pairs are drawn at geometrically shrinking distances; the number of scales
/// grows with `samples`. A fine-scale maximum far above the coarse one means
/// the ratio is not stabilizing.
pub fn holder_constant(spec: &WeightSpec, alpha: f64, samples: usize) -> Result<HolderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Invalid(format!("alpha = {alpha} outside (0, 1]")));
    }
    let samples = samples.max(100);
    let d = spec.dim();
    let scales = ((samples as f64).log10() * 2.0).floor().clamp(4.0, 16.0) as usize;
    let per = samples / scales;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_401d);
    let mut pa = vec![0.0; d + 1];
    let mut pb = vec![0.0; d + 1];
    let mut per_scale = Vec::with_capacity(scales);
    for k in 1..=scales {
        let h = 10f64.powf(-(k as f64) / 2.0);
        let mut best: f64 = 0.0;
        let mut drawn = 0;
        let mut tries = 0;
        while drawn < per && tries < per * 20 {
            tries += 1;
            let x = uniform_point(&mut rng, d);
            let dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let n1: f64 = dir.iter().map(|v| v.abs()).sum();
            if n1 == 0.0 {
                continue;
            }
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, u)| a + h * u / n1).collect();
            if y.iter().any(|v| *v < 0.0) || y.iter().sum::<f64>() > 1.0 {
                continue;
            }
            drawn += 1;
            let dist: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
            spec.eval_into(&x, &mut pa)?;
            spec.eval_into(&y, &mut pb)?;
            let denom = dist.powf(alpha);
            for j in 0..=d {
                best = best.max((pa[j] - pb[j]).abs() / denom);
            }
        }
        per_scale.push((h, best));
    }
    let half = scales / 2;
    let coarse = per_scale[..half].iter().map(|s| s.1).fold(0.0, f64::max);
    let fine = per_scale[half..].iter().map(|s| s.1).fold(0.0, f64::max);
    let estimate = coarse.max(fine);
    Ok(HolderEstimate { alpha, estimate, samples: per * scales, per_scale, possibly_not_holder: fine > 2.0 * coarse + 1e-12 })
}

/// Uniform point of Δ_d from sorted uniforms.
pub(crate) fn uniform_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut u: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(d);
    let mut prev = 0.0;
    for v in u {
        out.push(v - prev);
        prev = v;
    }
    out
}

/// Minimum of each p_i over the lattice of Δ_d at spacing 1/m.
pub fn grid_minimum(spec: &WeightSpec, m: usize) -> Result<Vec<f64>> {
    let d = spec.dim();
    let mut mins = vec![f64::INFINITY; d + 1];
    let mut p = vec![0.0; d + 1];
    for x in lattice_points(d, m) {
        spec.eval_into(x.coords(), &mut p)?;
        for (a, b) in mins.iter_mut().zip(&p) {
            *a = a.min(*b);
        }
    }
    Ok(mins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn eval_examples() {
        let c = WeightSpec::constant(vec![0.3, 0.5, 0.2]).unwrap();
        assert_eq!(c.eval(&pt(&[0.1, 0.7])).unwrap(), vec![0.3, 0.5, 0.2]);
        let a = WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap();
        assert!(close(&a.eval(&pt(&[0.5, 0.25])).unwrap(), &[0.2, 0.4, 0.4], 1e-15));
        let full = WeightSpec::affine(vec![0.2, 0.45, 0.35]).unwrap();
        assert!(close(&full.eval(&pt(&[0.9, 0.05])).unwrap(), &[0.2, 0.45, 0.35], 1e-15));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(WeightSpec::constant(vec![0.5, 0.6]).is_err());
        assert!(WeightSpec::constant(vec![-0.1, 1.1]).is_err());
        assert!(WeightSpec::affine(vec![0.6, 0.6]).is_err());
        assert!(WeightSpec::named("nope", 2, false).is_err());
        let bad: Callback = Arc::new(|b: &[f64]| vec![b[0], b[1] * 2.0, b[2]]);
        let s = WeightSpec::programmatic("bad", 2, false, bad.clone()).unwrap();
        assert!(matches!(s.eval(&pt(&[0.4, 0.1])), Err(Error::InvalidWeights { .. })));
        assert!(WeightSpec::programmatic("bad", 2, true, bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = WeightSpec::from_json(r#"{"kind": "affine", "theta": [0.1, 0.2, 0.3]}"#).unwrap();
        assert_eq!(s.dim(), 2);
        let back = WeightSpec::from_json(&s.to_json().to_string()).unwrap();
        assert_eq!(back.to_json(), s.to_json());
        let p = WeightSpec::from_json(r#"{"kind": "programmatic", "name": "identity", "dim": 2}"#).unwrap();
        assert!(close(&p.eval(&pt(&[0.3, 0.4])).unwrap(), &[0.3, 0.3, 0.4], 1e-15));
        let e = WeightSpec::from_json(r#"{"kind": "constant", "q": [1.0]}"#).unwrap_err();
        assert!(e.to_string().contains("unknown field `q`"), "{e}");
        let e = WeightSpec::from_json("{\"kind\": \"constant\",\n \"p\": [0.5 0.5]}").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn tabulated_linear_reproduces_affine() {
        let m = 4;
        let aff = WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap();
        let values = lattice_points(2, m).iter().map(|x| aff.eval(x).unwrap()).collect();
        let tab = WeightSpec::tabulated(2, Table { resolution: m, values, interpolation: Interpolation::Linear }).unwrap();
        for c in [[0.13, 0.41], [0.0, 0.0], [0.5, 0.5], [0.99, 0.0], [0.31, 0.22]] {
            let x = pt(&c);
            assert!(close(&tab.eval(&x).unwrap(), &aff.eval(&x).unwrap(), 1e-12));
        }
    }

    #[test]
    fn lattice_order_matches_node_index() {
        let m = 5;
        let pts = lattice_points(2, m);
        for i in 0..=m {
            for j in 0..=(m - i) {
                let x = &pts[table_node_index(m, i, j)];
                assert!(close(x.coords(), &[i as f64 / m as f64, j as f64 / m as f64], 1e-15));
            }
        }
    }

    #[test]
    fn boundary_profile_examples() {
        let c = WeightSpec::constant(vec![1.0 / 3.0; 3]).unwrap();
        for res in [16, 17, 64, 101] {
            let b = boundary_profile(&c, res).unwrap();
            for i in 0..3 {
                assert_eq!(b.edge_support[i], vec![Interval { lo: 0.0, hi: 1.0 }]);
                assert!(close(&b.vertex_values[i], &[1.0 / 3.0; 3], 1e-15));
            }
        }
        let ve = WeightSpec::named("vertex-edge", 2, true).unwrap();
        let b = boundary_profile(&ve, 64).unwrap();
        assert!(b.empty[0] && !b.empty[1] && !b.empty[2]);
        assert_eq!(b.vertex_values[0][0], 1.0);
        let id = WeightSpec::affine(vec![0.0; 3]).unwrap();
        let b = boundary_profile(&id, 16).unwrap();
        for i in 0..3 {
            assert_eq!(b.vertex_values[i][i], 1.0);
        }
        assert!(boundary_profile(&c, 8).is_err());
    }

    #[test]
    fn vertex_edge_support_by_dense_sampling() {
        let ve = WeightSpec::named("vertex-edge", 2, false).unwrap();
        for k in 0..=1000 {
            let s = k as f64 / 1000.0;
            let p = ve.eval(&pt(&[1.0 - s, s])).unwrap();
            assert!(p[0] <= EPS_POS);
        }
    }

    #[test]
    fn k0_fixture_support() {
        let s = WeightSpec::named("k0-stationary", 2, true).unwrap();
        let b = boundary_profile(&s, 301).unwrap();
        for i in 0..3 {
            let l = &b.edge_support[i];
            assert_eq!(l.len(), 2, "{l:?}");
            assert!((l[0].hi - 1.0 / 3.0).abs() < 0.01 && (l[1].lo - 2.0 / 3.0).abs() < 0.01);
        }
    }

    #[test]
    fn holder_examples() {
        let c = WeightSpec::constant(vec![0.3, 0.5, 0.2]).unwrap();
        assert_eq!(holder_constant(&c, 1.0, 1000).unwrap().estimate, 0.0);
        let a = WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap();
        let h = holder_constant(&a, 1.0, 2000).unwrap();
        assert!((h.estimate - 0.4).abs() <= 0.02 && h.estimate <= 0.4 + 1e-12, "{h:?}");
        assert!(!h.possibly_not_holder);
    }

    #[test]
    fn holder_flags_jump() {
        let m = 8;
        let values =
            lattice_points(2, m).iter().map(|x| if x.coords()[0] < 0.5 { vec![0.8, 0.1, 0.1] } else { vec![0.1, 0.8, 0.1] }).collect();
        let tab = WeightSpec::tabulated(2, Table { resolution: m, values, interpolation: Interpolation::Nearest }).unwrap();
        let small = holder_constant(&tab, 1.0, 1_000).unwrap();
        let big = holder_constant(&tab, 1.0, 100_000).unwrap();
        assert!(big.possibly_not_holder);
        assert!(big.estimate > 5.0 * small.estimate.max(1.0), "{} vs {}", big.estimate, small.estimate);
    }

    #[test]
    fn affine_min_on_faces() {
        let theta = vec![0.1, 0.2, 0.3];
        let a = WeightSpec::affine(theta.clone()).unwrap();
        let g = grid_minimum(&a, 200).unwrap();
        assert!(close(&g, &theta, 1e-6));
        assert_eq!(a.analytic_minimum().unwrap(), theta);
    }

    fn any_spec() -> impl Strategy<Value = WeightSpec> {
        prop_oneof![
            proptest::collection::vec(0.01f64..1.0, 3).prop_map(|v| {
                let s: f64 = v.iter().sum();
                WeightSpec::constant(v.iter().map(|x| x / s).collect()).unwrap()
            }),
            (proptest::collection::vec(0.0f64..1.0, 3), 0.0f64..1.0).prop_map(|(v, sc)| {
                let s: f64 = v.iter().sum::<f64>().max(1e-9);
                WeightSpec::affine(v.iter().map(|x| x / s * sc).collect()).unwrap()
            }),
            prop_oneof![Just("identity"), Just("vertex-edge"), Just("two-vertices"), Just("one-edge"), Just("k0-stationary")]
                .prop_map(|n| WeightSpec::named(n, 2, false).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn eval_is_probability_vector(spec in any_spec(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let (a, b) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            let p = spec.eval(&pt(&[a, b])).unwrap();
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < SUM_TOL);
        }
    }
}
