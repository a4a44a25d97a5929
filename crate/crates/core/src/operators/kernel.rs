use rayon::prelude::*;
use serde::Serialize;

use super::grid::{l1, GridDensity, GridFunction, SimplexGrid};
use super::sources::face_adapted_points;
use crate::error::{Error, Result};
use crate::quad;
use crate::weights::WeightSpec;

/// Pieces of the segment t ↦ t·x + (1−t)·e, t ∈ [0, 1], per grid cell:
/// (cell, length in t). Lengths sum to 1.
pub fn segment_cells(grid: &SimplexGrid, x: &[f64], e: &[f64]) -> Vec<(usize, f64)> {
    let m = grid.resolution() as f64;
    let mut ts: Vec<f64> = Vec::with_capacity(4 * grid.resolution() + 2);
    ts.push(0.0);
    ts.push(1.0);
    let mut crossings = |xa: f64, ea: f64| {
        let diff = xa - ea;
        if diff.abs() < 1e-15 {
            return;
        }
        let (lo, hi) = if xa < ea { (xa, ea) } else { (ea, xa) };
        let k0 = (lo * m).ceil() as i64;
        let k1 = (hi * m).floor() as i64;
        for k in k0..=k1 {
            let t = (k as f64 / m - ea) / diff;
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    };
    crossings(x[0], e[0]);
    if grid.dim() == 2 {
        crossings(x[1], e[1]);
        crossings(x[0] + x[1], e[0] + e[1]);
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(ts.len());
    let mut mid = [0.0; 2];
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let t = 0.5 * (w[0] + w[1]);
        for k in 0..grid.dim() {
            mid[k] = t * x[k] + (1.0 - t) * e[k];
        }
        let c = grid.locate(&mid[..grid.dim()]);
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += len,
            _ => out.push((c, len)),
        }
    }
    out
}

/// Source points and weights inside a cell: Gauss–Legendre points for d = 1,
/// centroids of the s² congruent sub-triangles for d = 2.
pub fn cell_points(grid: &SimplexGrid, cell: usize, s: usize) -> Vec<(Vec<f64>, f64)> {
    let c = grid.corners(cell);
    if grid.dim() == 1 {
        let (x, w) = quad::gauss_legendre(s);
        return x.iter().zip(&w).map(|(u, wt)| (vec![c[0][0] + u * (c[1][0] - c[0][0])], *wt)).collect();
    }
    let (a, b, cc) = (c[0], c[1], c[2]);
    let sf = s as f64;
    let w = 1.0 / (sf * sf);
    let at = |u: f64, v: f64| vec![a[0] + (b[0] - a[0]) * u + (cc[0] - a[0]) * v, a[1] + (b[1] - a[1]) * u + (cc[1] - a[1]) * v];
    let mut pts = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..(s - i) {
            pts.push((at((i as f64 + 1.0 / 3.0) / sf, (j as f64 + 1.0 / 3.0) / sf), w));
            if i + j + 2 <= s {
                pts.push((at((i as f64 + 2.0 / 3.0) / sf, (j as f64 + 2.0 / 3.0) / sf), w));
            }
        }
    }
    pts
}

/// Row-stochastic sparse matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl KernelMatrix {
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(c, v)| (*c as usize, *v))
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// gᵀ·K, accumulated sequentially so results do not depend on thread count.
    pub fn left_mul(&self, g: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n {
            let gr = g[r];
            if gr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.cols[k] as usize] += gr * self.vals[k];
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelOptions {
    /// Source points per cell: s for d = 1, s² for d = 2.
    pub cell_points: usize,
    /// Spread the start of boundary cells like dist(·, face k)^(p_k − 1).
    pub face_profile: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { cell_points: 3, face_profile: true }
    }
}

/// Discretized kernel: row c is the one-step law of the chain started inside
/// cell c, with the segment measure split exactly among the cells it crosses
/// and the start averaged over `cell_points` source points. Interior cells use
/// a uniform start; with `face_profile`, cells on the boundary use the local
/// power law of the invariant density near that face.
pub fn build_kernel_matrix(spec: &WeightSpec, grid: &SimplexGrid, opts: KernelOptions) -> Result<KernelMatrix> {
    let d = grid.dim();
    if spec.dim() != d {
        return Err(Error::Dimension { expected: d, got: spec.dim() });
    }
    let s = opts.cell_points.max(1);
    let rows: Vec<Vec<(u32, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let mut p = vec![0.0; d + 1];
            let mut entries: Vec<(u32, f64)> = Vec::new();
            let adapted = if opts.face_profile { face_adapted_points(spec, grid, cell, s)? } else { None };
            let pts = match adapted {
                Some(p) => p,
                None => cell_points(grid, cell, s),
            };
            for (x, w) in pts {
                spec.eval_into(&x, &mut p)?;
                for (i, &pi) in p.iter().enumerate() {
                    if pi <= 0.0 {
                        continue;
                    }
                    let mut e = [0.0; 2];
                    if i > 0 {
                        e[i - 1] = 1.0;
                    }
                    for (c, len) in segment_cells(grid, &x, &e[..d]) {
                        entries.push((c as u32, w * pi * len));
                    }
                }
            }
            entries.sort_by_key(|e| e.0);
            let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len() / 2);
            for (c, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            let total: f64 = merged.iter().map(|e| e.1).sum();
            merged.iter_mut().for_each(|e| e.1 /= total);
            Ok(merged)
        })
        .collect::<Result<_>>()?;
    let mut row_ptr = Vec::with_capacity(grid.len() + 1);
    row_ptr.push(0);
    let nnz: usize = rows.iter().map(|r| r.len()).sum();
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    for r in rows {
        for (c, v) in r {
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(KernelMatrix { n: grid.len(), row_ptr, cols, vals })
}

/// A weight spec together with its discretized kernel on a grid.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    pub spec: WeightSpec,
    pub grid: SimplexGrid,
    pub kernel: KernelMatrix,
}

impl TransferOperator {
    pub fn new(spec: &WeightSpec, grid: &SimplexGrid, opts: KernelOptions) -> Result<Self> {
        Ok(Self { spec: spec.clone(), grid: grid.clone(), kernel: build_kernel_matrix(spec, grid, opts)? })
    }

    pub fn apply_pstar(&self, g: &GridDensity) -> Result<GridDensity> {
        if g.grid != self.grid {
            return Err(Error::Invalid("density grid differs from operator grid".into()));
        }
        let mut out = vec![0.0; g.masses.len()];
        self.kernel.left_mul(&g.masses, &mut out);
        Ok(GridDensity { grid: g.grid.clone(), masses: out })
    }
}

/// Mass transport g ↦ gᵀK.
pub fn apply_pstar(g: &GridDensity, op: &TransferOperator) -> Result<GridDensity> {
    op.apply_pstar(g)
}

/// Pf at every cell center by Gauss–Legendre quadrature in t, with f read
/// off by cell lookup. Quadrature weights are renormalized so constants are
/// reproduced exactly.
pub fn apply_p(f: &GridFunction, spec: &WeightSpec, nodes: usize) -> Result<GridFunction> {
    if nodes < 8 {
        return Err(Error::Invalid(format!("nodes = {nodes} < 8")));
    }
    let grid = &f.grid;
    let d = grid.dim();
    if spec.dim() != d {
        return Err(Error::Dimension { expected: d, got: spec.dim() });
    }
    let (ts, ws) = quad::gauss_legendre(nodes);
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|cell| {
            let x = grid.center(cell);
            let mut p = vec![0.0; d + 1];
            spec.eval_into(&x, &mut p)?;
            let mut num = 0.0;
            let mut den = 0.0;
            let mut y = vec![0.0; d];
            for (i, &pi) in p.iter().enumerate() {
                for (&t, &w) in ts.iter().zip(&ws) {
                    for k in 0..d {
                        y[k] = t * x[k] + if k + 1 == i { 1.0 - t } else { 0.0 };
                    }
                    let wt = pi * w;
                    num += wt * f.values[grid.locate(&y)];
                    den += wt;
                }
            }
            Ok(num / den)
        })
        .collect::<Result<_>>()?;
    GridFunction::new(grid.clone(), values)
}

/// P*g(y) from the integral form Σ_i ∫_{1−y_i}^1 t^(−d) G_i(y/t + (1 − 1/t) e_i) dt
/// with G_i = g·p_i and g a pointwise density. Meant for interior y.
pub fn pstar_integral<G: Fn(&[f64]) -> f64>(g: G, spec: &WeightSpec, y: &[f64]) -> Result<f64> {
    let d = y.len();
    let y0 = 1.0 - y.iter().sum::<f64>();
    let failed = std::cell::Cell::new(false);
    let mut total = 0.0;
    for i in 0..=d {
        let yi = if i == 0 { y0 } else { y[i - 1] };
        let integrand = |t: f64| {
            let mut z = vec![0.0; d];
            for k in 0..d {
                let ek = if k + 1 == i { 1.0 } else { 0.0 };
                z[k] = y[k] / t + (1.0 - 1.0 / t) * ek;
            }
            let mut p = vec![0.0; d + 1];
            if spec.eval_into(&z, &mut p).is_err() {
                failed.set(true);
                return 0.0;
            }
            t.powi(-(d as i32)) * g(&z) * p[i]
        };
        total += quad::adaptive(integrand, 1.0 - yi, 1.0, 1e-10, 0.0);
    }
    if failed.get() {
        return Err(Error::Invalid("weight evaluation failed inside the P* integral".into()));
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    Converged,
    /// Iteration cap reached before the step fell below tolerance.
    NotConverged,
    /// Iterates settled but the chain has an absorbing vertex or edge, so the
    /// limit concentrates on a lower-dimensional set and is not a density.
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct PowerResult {
    pub density: GridDensity,
    pub iterations: usize,
    pub final_step: f64,
    pub status: IterationStatus,
    pub degenerate_reason: Option<String>,
}

/// Iterates P* from g0 until ‖g_{k+1} − g_k‖₁ < tol or `max_iter`.
pub fn power_iterate(g0: &GridDensity, op: &TransferOperator, tol: f64, max_iter: usize) -> Result<PowerResult> {
    if !(tol > 0.0) {
        return Err(Error::Invalid("tol must be positive".into()));
    }
    let mut cur = g0.masses.clone();
    let mut next = vec![0.0; cur.len()];
    let mut step = f64::INFINITY;
    let mut it = 0;
    while it < max_iter {
        op.kernel.left_mul(&cur, &mut next);
        step = l1(&cur, &next);
        std::mem::swap(&mut cur, &mut next);
        it += 1;
        if step < tol {
            break;
        }
    }
    let reason = degenerate_reason(&op.spec)?;
    let status = match (&reason, step < tol) {
        (Some(_), _) => IterationStatus::Degenerate,
        (None, true) => IterationStatus::Converged,
        (None, false) => IterationStatus::NotConverged,
    };
    Ok(PowerResult {
        density: GridDensity { grid: g0.grid.clone(), masses: cur },
        iterations: it,
        final_step: step,
        status,
        degenerate_reason: reason,
    })
}

/// Absorbing vertices (p_i(e_i) = 1) or, for d = 2, empty edge supports carry
/// invariant measures without density.
pub fn degenerate_reason(spec: &WeightSpec) -> Result<Option<String>> {
    use crate::absorbing::EPS_ONE;
    let d = spec.dim();
    if d > 2 {
        return Ok(None);
    }
    let prof = crate::weights::boundary_profile(spec, 64)?;
    let mut why = Vec::new();
    for i in 0..=d {
        if prof.vertex_values[i][i] >= 1.0 - EPS_ONE {
            why.push(format!("vertex e{i} is absorbing"));
        }
    }
    for (i, e) in prof.empty.iter().enumerate() {
        if *e {
            why.push(format!("p_{i} vanishes on the opposite edge"));
        }
    }
    Ok(if why.is_empty() { None } else { Some(format!("degenerate limit, no density: {}", why.join("; "))) })
}

#[derive(Clone, Debug, Serialize)]
pub struct RateEstimate {
    pub rho: f64,
    /// RMS residual of the log-linear fit (natural log units, ≈ relative error).
    pub residual: f64,
    pub errors: Vec<f64>,
    pub used: usize,
}

/// Errors at or below this count as rounding noise in rate fits.
pub const RATE_FLOOR: f64 = 1e-10;

/// Least-squares slope of log‖g_k − g∞‖₁ over k = 0..iters, using only the
/// iterates with RATE_FLOOR < error ≤ upper_rel·error_0.
pub fn estimate_rate(g0: &GridDensity, op: &TransferOperator, g_inf: &GridDensity, iters: usize, upper_rel: f64) -> Result<RateEstimate> {
    let mut cur = g0.masses.clone();
    let mut next = vec![0.0; cur.len()];
    let mut errors = Vec::with_capacity(iters + 1);
    errors.push(l1(&cur, &g_inf.masses));
    for _ in 0..iters {
        op.kernel.left_mul(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        errors.push(l1(&cur, &g_inf.masses));
    }
    let pts: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .filter(|(_, e)| **e > RATE_FLOOR && **e <= upper_rel * errors[0])
        .map(|(k, e)| (k as f64, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Invalid(format!("only {} usable iterates for the rate fit", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RateEstimate { rho: slope.exp(), residual, errors, used: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_lengths_sum_to_one() {
        let g = SimplexGrid::new(2, 16).unwrap();
        for (x, e) in [([0.3, 0.4], [0.0, 0.0]), ([0.3, 0.4], [1.0, 0.0]), ([0.01, 0.98], [0.0, 1.0]), ([0.5, 0.0], [1.0, 0.0])] {
            let pieces = segment_cells(&g, &x, &e);
            let s: f64 = pieces.iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let g1 = SimplexGrid::new(1, 10).unwrap();
        let pieces = segment_cells(&g1, &[0.35], &[1.0]);
        assert_eq!(pieces.len(), 7);
        assert!((pieces[0].1 - 1.0 / 6.5).abs() < 1e-14);
        assert!((pieces[6].1 - 0.5 / 6.5).abs() < 1e-14);
    }

    #[test]
    fn segment_pieces_match_brute_force() {
        let g = SimplexGrid::new(2, 8).unwrap();
        let x = [0.27, 0.41];
        let e = [0.0, 1.0];
        let pieces = segment_cells(&g, &x, &e);
        let n = 200_000;
        let mut counts = vec![0.0; g.len()];
        for k in 0..n {
            let t = (k as f64 + 0.5) / n as f64;
            let y = [t * x[0] + (1.0 - t) * e[0], t * x[1] + (1.0 - t) * e[1]];
            counts[g.locate(&y)] += 1.0 / n as f64;
        }
        for (c, len) in pieces {
            assert!((counts[c] - len).abs() < 1e-4, "cell {c}");
        }
    }

    #[test]
    fn sub_triangle_points_lie_in_cell() {
        let g = SimplexGrid::new(2, 5).unwrap();
        for cell in 0..g.len() {
            let pts = cell_points(&g, cell, 3);
            assert_eq!(pts.len(), 9);
            let c: Vec<f64> = pts.iter().fold(vec![0.0, 0.0], |acc, (p, w)| vec![acc[0] + w * p[0], acc[1] + w * p[1]]);
            let ctr = g.center(cell);
            assert!((c[0] - ctr[0]).abs() < 1e-14 && (c[1] - ctr[1]).abs() < 1e-14);
            for (p, _) in pts {
                assert_eq!(g.locate(&p), cell);
            }
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let spec = WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap();
        let g = SimplexGrid::new(2, 12).unwrap();
        let k = build_kernel_matrix(&spec, &g, KernelOptions::default()).unwrap();
        for r in 0..k.n {
            let s: f64 = k.row(r).map(|e| e.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(k.row(r).all(|e| e.1 >= 0.0));
        }
    }

    #[test]
    fn absorbing_vertex_row_points_at_vertex() {
        let spec = WeightSpec::named("vertex-edge", 2, false).unwrap();
        let g = SimplexGrid::new(2, 16).unwrap();
        let k = build_kernel_matrix(&spec, &g, KernelOptions { cell_points: 1, face_profile: false }).unwrap();
        let c0 = g.locate(&[0.0, 0.0]);
        let x = g.center(c0);
        let toward: Vec<(usize, f64)> = segment_cells(&g, &x, &[0.0, 0.0]);
        let mut p = [0.0; 3];
        spec.eval_into(&x, &mut p).unwrap();
        assert!(p[0] > 0.9);
        for (c, len) in toward {
            let v = k.row(c0).find(|e| e.0 == c).unwrap().1;
            assert!(v >= p[0] * len - 1e-12);
        }
    }

    #[test]
    fn apply_p_constants_and_positivity() {
        let spec = WeightSpec::named("k0-stationary", 2, false).unwrap();
        let g = SimplexGrid::new(2, 16).unwrap();
        let one = GridFunction::constant(g.clone(), 1.0);
        let p1 = apply_p(&one, &spec, 32).unwrap();
        assert!(p1.values.iter().all(|v| *v == 1.0));
        let f = GridFunction::from_fn(g.clone(), |x| (x[0] * 13.0).sin().abs());
        assert!(apply_p(&f, &spec, 16).unwrap().values.iter().all(|v| *v >= 0.0));
        assert!(apply_p(&f, &spec, 4).is_err());
    }

    #[test]
    fn coordinates_are_harmonic_for_identity_weights() {
        let spec = WeightSpec::affine(vec![0.0; 3]).unwrap();
        for m in [16, 32] {
            let g = SimplexGrid::new(2, m).unwrap();
            for k in 0..2 {
                let f = GridFunction::from_fn(g.clone(), |x| x[k]);
                let pf = apply_p(&f, &spec, 32).unwrap();
                assert!(pf.sup_distance(&f) <= 2.0 / m as f64);
            }
        }
    }

    #[test]
    fn pstar_preserves_mass_and_contracts() {
        let spec = WeightSpec::constant(vec![0.3, 0.5, 0.2]).unwrap();
        let g = SimplexGrid::new(2, 16).unwrap();
        let op = TransferOperator::new(&spec, &g, KernelOptions::default()).unwrap();
        let a = GridDensity::uniform(g.clone());
        let b = GridDensity::normalized(g.clone(), (0..g.len()).map(|c| (c % 7) as f64 + 0.1).collect()).unwrap();
        let pa = op.apply_pstar(&a).unwrap();
        let pb = op.apply_pstar(&b).unwrap();
        assert!((pa.total() - 1.0).abs() < 1e-12);
        assert!(pa.l1_distance(&pb) < a.l1_distance(&b));
    }

    #[test]
    fn degenerate_identity_weights() {
        let spec = WeightSpec::affine(vec![0.0; 3]).unwrap();
        let g = SimplexGrid::new(2, 8).unwrap();
        let op = TransferOperator::new(&spec, &g, KernelOptions::default()).unwrap();
        let r = power_iterate(&GridDensity::uniform(g), &op, 1e-8, 2000).unwrap();
        assert_eq!(r.status, IterationStatus::Degenerate);
        assert!(r.degenerate_reason.unwrap().contains("no density"));
    }
}
