//! Minimal P-absorbing compact sets for d = 1 and d = 2.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{segment_cells, SimplexGrid};
use crate::rng;
use crate::simplex::vertex;
use crate::weights::{boundary_profile, vertex2, BoundaryProfile, WeightSpec, EPS_POS, OPPOSITE_EDGE};

/// p_i(e_i) ≥ 1 − EPS_ONE counts as p_i(e_i) = 1.
pub const EPS_ONE: f64 = 1e-9;
/// Values within this distance of 1 on either side of the cut draw a warning.
pub const BORDERLINE: f64 = 1e-6;
pub const EPS_ESCAPE: f64 = 1e-6;
/// K_n iteration stops when successive regions differ by less than this
/// fraction of vol(Δ₂).
pub const AREA_TOL_FRACTION: f64 = 1e-4;
pub const MAX_KN_ITERS: usize = 64;

const SIMPLEX_AREA: f64 = 0.5;

/// Rasterized compact subset of Δ₂: a union of grid cells, with its boundary
/// as closed rings (outer rings counterclockwise, holes clockwise).
#[derive(Clone, Debug, Serialize)]
pub struct Region2D {
    pub resolution: usize,
    pub area: f64,
    pub cell_count: usize,
    pub full: bool,
    pub rings: Vec<Vec<[f64; 2]>>,
    #[serde(skip)]
    cells: Vec<bool>,
}

impl Region2D {
    pub fn from_cells(resolution: usize, cells: Vec<bool>) -> Result<Self> {
        let grid = SimplexGrid::new(2, resolution)?;
        if cells.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: cells.len() });
        }
        let cell_count = cells.iter().filter(|c| **c).count();
        let rings = extract_rings(&grid, &cells);
        Ok(Self { resolution, area: cell_count as f64 * grid.cell_volume(), cell_count, full: cell_count == grid.len(), rings, cells })
    }

    pub fn full_simplex(resolution: usize) -> Result<Self> {
        let n = resolution * resolution;
        Self::from_cells(resolution, vec![true; n])
    }

    pub fn grid(&self) -> SimplexGrid {
        SimplexGrid::new(2, self.resolution).expect("region resolution was validated")
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.cells[self.grid().locate(x)]
    }

    /// Every cell of `other` is a cell of `self`.
    pub fn contains_region(&self, other: &Region2D) -> bool {
        self.cells.len() == other.cells.len() && self.cells.iter().zip(&other.cells).all(|(a, b)| *a || !*b)
    }

    pub fn symmetric_difference_area(&self, other: &Region2D) -> f64 {
        let n = self.cells.iter().zip(&other.cells).filter(|(a, b)| a != b).count();
        n as f64 * self.grid().cell_volume()
    }

    pub fn uncovered_area(&self) -> f64 {
        SIMPLEX_AREA - self.area
    }

    /// Cells in the region or sharing a corner with one of its cells.
    fn dilated(&self) -> Vec<bool> {
        let grid = self.grid();
        let m = self.resolution;
        let mut near_corner = vec![false; (m + 1) * (m + 1)];
        for (id, inside) in self.cells.iter().enumerate() {
            if *inside {
                for k in cell_lattice(&grid, id) {
                    near_corner[k.0 * (m + 1) + k.1] = true;
                }
            }
        }
        (0..grid.len()).map(|id| self.cells[id] || cell_lattice(&grid, id).iter().any(|k| near_corner[k.0 * (m + 1) + k.1])).collect()
    }
}

fn cell_lattice(grid: &SimplexGrid, id: usize) -> [(usize, usize); 3] {
    let (i, j, up) = grid.cell_index(id);
    if up {
        [(i + 1, j), (i + 1, j + 1), (i, j + 1)]
    } else {
        [(i, j), (i + 1, j), (i, j + 1)]
    }
}

fn extract_rings(grid: &SimplexGrid, cells: &[bool]) -> Vec<Vec<[f64; 2]>> {
    let m = grid.resolution();
    let key = |p: (usize, usize)| p.0 * (m + 1) + p.1;
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    let mut directed = Vec::new();
    for (id, inside) in cells.iter().enumerate() {
        if !*inside {
            continue;
        }
        let c = cell_lattice(grid, id);
        for k in 0..3 {
            let (a, b) = (key(c[k]), key(c[(k + 1) % 3]));
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
            directed.push((a, b));
        }
    }
    let mut out: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = directed.into_iter().filter(|(a, b)| count[&(*a.min(b), *a.max(b))] == 1).collect();
    edges.sort_unstable();
    for (a, b) in &edges {
        out.entry(*a).or_default().push(*b);
    }
    let h = 1.0 / m as f64;
    let coord = |k: usize| [(k / (m + 1)) as f64 * h, (k % (m + 1)) as f64 * h];
    let mut rings = Vec::new();
    for (start, _) in &edges {
        if out.get(start).is_none_or(|v| v.is_empty()) {
            continue;
        }
        let mut ring = vec![*start];
        let mut cur = *start;
        while let Some(next) = out.get_mut(&cur).and_then(|v| v.pop()) {
            if next == *start {
                break;
            }
            ring.push(next);
            cur = next;
        }
        let pts: Vec<[f64; 2]> = ring.into_iter().map(coord).collect();
        rings.push(drop_collinear(pts));
    }
    rings
}

fn drop_collinear(pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let n = pts.len();
    if n < 4 {
        return pts;
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (a, b, c) = (pts[(k + n - 1) % n], pts[k], pts[(k + 1) % n]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross.abs() > 1e-14 {
            out.push(b);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MemberSet {
    Vertex { index: usize },
    Edge { from: usize, to: usize },
    Region { region: Region2D },
}

impl MemberSet {
    pub fn label(&self) -> String {
        match self {
            MemberSet::Vertex { index } => format!("{{e{index}}}"),
            MemberSet::Edge { from, to } => format!("[e{from},e{to}]"),
            MemberSet::Region { region } if region.full => "simplex".into(),
            MemberSet::Region { .. } => "region".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum AbsorbingClass {
    /// d = 1: 𝒦_m = {[0, 1]}.
    FullInterval,
    ThreeVertices,
    TwoVertices {
        vertices: [usize; 2],
    },
    OneVertex {
        vertex: usize,
    },
    OneEdge {
        edge: [usize; 2],
    },
    VertexPlusOppositeEdge {
        vertex: usize,
        edge: [usize; 2],
    },
    InteriorCompact {
        reached_full_simplex: bool,
        converged: bool,
        iterations: usize,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct RuleApplication {
    pub clause: String,
    pub detail: String,
}

fn rule(clause: &str, detail: String) -> RuleApplication {
    RuleApplication { clause: clause.into(), detail }
}

#[derive(Clone, Debug, Serialize)]
pub struct Thresholds {
    pub eps_one: f64,
    pub eps_pos: f64,
    pub borderline: f64,
    pub area_tol: f64,
    pub max_kn_iters: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_one: EPS_ONE,
            eps_pos: EPS_POS,
            borderline: BORDERLINE,
            area_tol: AREA_TOL_FRACTION * SIMPLEX_AREA,
            max_kn_iters: MAX_KN_ITERS,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageSummary {
    pub n: usize,
    pub area: f64,
    pub added_area: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorbingClassification {
    pub dim: usize,
    #[serde(flatten)]
    pub class: AbsorbingClass,
    pub members: Vec<MemberSet>,
    pub rules: Vec<RuleApplication>,
    pub thresholds: Thresholds,
    pub warnings: Vec<String>,
    pub profile: BoundaryProfile,
    pub stages: Vec<StageSummary>,
    /// K_0, K_1, ... for rendering.
    #[serde(skip)]
    pub stage_regions: Vec<Region2D>,
}

impl AbsorbingClassification {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("classification serializes")
    }
}

fn is_one(v: f64) -> bool {
    v >= 1.0 - EPS_ONE
}

fn borderline_warnings(profile: &BoundaryProfile) -> Vec<String> {
    let mut w = Vec::new();
    for (i, row) in profile.vertex_values.iter().enumerate() {
        let v = row[i];
        let gap = (1.0 - v).abs();
        if gap > 0.0 && gap <= BORDERLINE {
            let treated = if is_one(v) { "= 1" } else { "< 1" };
            w.push(format!("p_{i}(e_{i}) = {v:e} lies within {BORDERLINE:e} of 1; treated as {treated}"));
        }
    }
    w
}

/// Four-way classification on Δ₁ = [0, 1] (e_0 = 0, e_1 = 1) from p_0(0) and p_1(1).
pub fn classify_d1(spec: &WeightSpec) -> Result<AbsorbingClassification> {
    if spec.dim() != 1 {
        return Err(Error::Dimension { expected: 1, got: spec.dim() });
    }
    let profile = boundary_profile(spec, 16)?;
    let p00 = profile.vertex_values[0][0];
    let p11 = profile.vertex_values[1][1];
    let (a, b) = (is_one(p00), is_one(p11));
    let mut rules = Vec::new();
    let (class, members) = match (a, b) {
        (false, false) => {
            rules.push(rule(
                "(i)",
                format!("every minimal set holds 0 or 1; p_0(0) = {p00} < 1 and p_1(1) = {p11} < 1, so by (iii) it holds [0, 1]"),
            ));
            (AbsorbingClass::FullInterval, vec![MemberSet::Edge { from: 0, to: 1 }])
        }
        (true, false) => {
            rules.push(rule("(ii)", format!("p_0(0) = {p00} = 1, so {{0}} is absorbing")));
            rules.push(rule("(iii)", format!("p_1(1) = {p11} < 1, so a set holding 1 holds [0, 1] and is not minimal")));
            (AbsorbingClass::OneVertex { vertex: 0 }, vec![MemberSet::Vertex { index: 0 }])
        }
        (false, true) => {
            rules.push(rule("(ii)", format!("p_1(1) = {p11} = 1, so {{1}} is absorbing")));
            rules.push(rule("(iii)", format!("p_0(0) = {p00} < 1, so a set holding 0 holds [0, 1] and is not minimal")));
            (AbsorbingClass::OneVertex { vertex: 1 }, vec![MemberSet::Vertex { index: 1 }])
        }
        (true, true) => {
            rules.push(rule("(ii)", "p_0(0) = p_1(1) = 1, so {0} and {1} are both absorbing".into()));
            (AbsorbingClass::TwoVertices { vertices: [0, 1] }, vec![MemberSet::Vertex { index: 0 }, MemberSet::Vertex { index: 1 }])
        }
    };
    Ok(AbsorbingClassification {
        dim: 1,
        class,
        members,
        rules,
        thresholds: Thresholds::default(),
        warnings: borderline_warnings(&profile),
        profile,
        stages: Vec::new(),
        stage_regions: Vec::new(),
    })
}

/// Radial coordinates about e_i: s is the exit parameter on the opposite edge
/// (ordered as in `OPPOSITE_EDGE`), r = 1 − x_i.
fn radial(i: usize, p: &[f64]) -> Option<(f64, f64)> {
    let b = [1.0 - p[0] - p[1], p[0], p[1]];
    let (j, k) = OPPOSITE_EDGE[i];
    let r = b[j] + b[k];
    if r <= 1e-14 {
        return None;
    }
    Some(((b[k] / r).clamp(0.0, 1.0), r))
}

/// Max-r lookup over rays sorted by exit parameter.
struct RayIndex {
    s: Vec<f64>,
    table: Vec<Vec<f64>>,
}

impl RayIndex {
    fn new(mut rays: Vec<(f64, f64)>) -> Self {
        rays.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let s: Vec<f64> = rays.iter().map(|r| r.0).collect();
        let mut table = vec![rays.iter().map(|r| r.1).collect::<Vec<_>>()];
        let mut w = 1;
        while 2 * w <= s.len() {
            let prev = table.last().unwrap();
            let next = (0..=(s.len() - 2 * w)).map(|k| prev[k].max(prev[k + w])).collect();
            table.push(next);
            w *= 2;
        }
        Self { s, table }
    }

    /// Largest r among rays with s in [lo, hi].
    fn max_r(&self, lo: f64, hi: f64) -> Option<f64> {
        let a = self.s.partition_point(|v| *v < lo);
        let b = self.s.partition_point(|v| *v <= hi);
        if a >= b {
            return None;
        }
        let len = b - a;
        let level = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let w = 1 << level;
        Some(self.table[level][a].max(self.table[level][b - w]))
    }
}

/// Cells met by some segment [e_i, x] with x a ray end beyond the cell center:
/// the union of co{e_i, L} rasterized at the cell level.
fn cone_cells(grid: &SimplexGrid, i: usize, rays: Vec<(f64, f64)>) -> Vec<bool> {
    if rays.is_empty() {
        return vec![false; grid.len()];
    }
    let index = RayIndex::new(rays);
    (0..grid.len())
        .into_par_iter()
        .map(|id| {
            let center = grid.center(id);
            let (_, rc) = match radial(i, &center) {
                Some(v) => v,
                None => return false,
            };
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut apex = false;
            for c in grid.corners(id) {
                match radial(i, &c) {
                    Some((s, _)) => {
                        lo = lo.min(s);
                        hi = hi.max(s);
                    }
                    None => apex = true,
                }
            }
            if apex {
                // the cell at e_i meets every ray
                return true;
            }
            index.max_r(lo, hi).is_some_and(|r| r >= rc - 1e-12)
        })
        .collect()
}

/// K_0 = closure of ∪_i co{e_i, L_i}, with L_i sampled from the edge profile.
pub fn initial_region(spec: &WeightSpec, resolution: usize) -> Result<Region2D> {
    let grid = SimplexGrid::new(2, resolution)?;
    let samples = 8 * resolution + 1;
    let mut cells = vec![false; grid.len()];
    let mut p = [0.0; 3];
    for i in 0..3 {
        let mut rays = Vec::new();
        for k in 0..samples {
            let s = k as f64 / (samples - 1) as f64;
            spec.eval_into(&BoundaryProfile::edge_point(i, s), &mut p)?;
            if p[i] > EPS_POS {
                rays.push((s, 1.0));
            }
        }
        for (c, v) in cells.iter_mut().zip(cone_cells(&grid, i, rays)) {
            *c |= v;
        }
    }
    Region2D::from_cells(resolution, cells)
}

/// K_n = K_{n−1} ∪ ⋃_i co{e_i, L_i(n)} with L_i(n) the cells of K_{n−1}
/// whose center has p_i > ε_pos.
pub fn iterate_kn(spec: &WeightSpec, k_prev: &Region2D) -> Result<Region2D> {
    if spec.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: spec.dim() });
    }
    let grid = k_prev.grid();
    let centers = grid.centers();
    let weights: Vec<[f64; 3]> = centers
        .par_iter()
        .map(|c| {
            let mut p = [0.0; 3];
            spec.eval_into(c, &mut p).map(|_| p)
        })
        .collect::<Result<_>>()?;
    let mut cells = k_prev.cells.clone();
    for i in 0..3 {
        let rays: Vec<(f64, f64)> =
            (0..grid.len()).filter(|&id| k_prev.cells[id] && weights[id][i] > EPS_POS).filter_map(|id| radial(i, &centers[id])).collect();
        for (c, v) in cells.iter_mut().zip(cone_cells(&grid, i, rays)) {
            *c |= v;
        }
    }
    Region2D::from_cells(k_prev.resolution, cells)
}

/// Decision tree on Δ₂: all, two, one or no vertices with p_i(e_i) = 1,
/// then empty edge supports, then the K_n iteration.
pub fn classify_d2(spec: &WeightSpec, resolution: usize, max_kn_iters: usize) -> Result<AbsorbingClassification> {
    if spec.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: spec.dim() });
    }
    if resolution < 16 {
        return Err(Error::Invalid(format!("resolution {resolution} < 16 cannot resolve edge supports")));
    }
    let profile = boundary_profile(spec, 8 * resolution + 1)?;
    let mut warnings = borderline_warnings(&profile);
    let ones: Vec<usize> = (0..3).filter(|&i| is_one(profile.vertex_values[i][i])).collect();
    let mut rules = Vec::new();
    let pv = |i: usize| profile.vertex_values[i][i];
    let mut stages = Vec::new();
    let mut stage_regions = Vec::new();
    let (class, members) = match ones.len() {
        3 => {
            for i in 0..3 {
                rules.push(rule("(ii)", format!("p_{i}(e_{i}) = {} = 1, so {{e_{i}}} is minimal absorbing", pv(i))));
            }
            rules.push(rule("(i)", "every minimal set contains a vertex, hence is one of the {e_i}".into()));
            (AbsorbingClass::ThreeVertices, (0..3).map(|i| MemberSet::Vertex { index: i }).collect())
        }
        2 => {
            let (a, b) = (ones[0], ones[1]);
            let c = 3 - a - b;
            rules.push(rule("(ii)", format!("p_{a}(e_{a}) = p_{b}(e_{b}) = 1, so {{e_{a}}} and {{e_{b}}} are minimal")));
            rules.push(rule(
                "(iii)",
                format!("p_{c}(e_{c}) = {} < 1, so a set holding e_{c} holds an edge to e_{a} or e_{b} and is not minimal", pv(c)),
            ));
            let mut v = [a, b];
            v.sort_unstable();
            (AbsorbingClass::TwoVertices { vertices: v }, vec![MemberSet::Vertex { index: v[0] }, MemberSet::Vertex { index: v[1] }])
        }
        1 => {
            let i = ones[0];
            let (j, k) = OPPOSITE_EDGE[i];
            rules.push(rule("(ii)", format!("p_{i}(e_{i}) = {} = 1, so {{e_{i}}} is minimal", pv(i))));
            if profile.empty[i] {
                rules.push(rule(
                    "case 3",
                    format!("L_{i} = ∅ on [e_{j},e_{k}], so p_{i} = 0 there and [e_{j},e_{k}] is absorbing; by (iii) it is minimal"),
                ));
                (
                    AbsorbingClass::VertexPlusOppositeEdge { vertex: i, edge: [j, k] },
                    vec![MemberSet::Vertex { index: i }, MemberSet::Edge { from: j, to: k }],
                )
            } else {
                rules.push(rule(
                    "case 3",
                    format!("L_{i} ≠ ∅, so any set avoiding e_{i} loses mass toward e_{i} from its edge [e_{j},e_{k}]"),
                ));
                (AbsorbingClass::OneVertex { vertex: i }, vec![MemberSet::Vertex { index: i }])
            }
        }
        _ => {
            let empties: Vec<usize> = (0..3).filter(|&i| profile.empty[i]).collect();
            if let Some(&i) = empties.first() {
                if empties.len() > 1 {
                    warnings.push(format!("several empty edge supports {empties:?}; reporting the first"));
                }
                let (j, k) = OPPOSITE_EDGE[i];
                rules.push(rule("case 4", format!("all p_i(e_i) < 1 and L_{i} = ∅: p_{i} = 0 on [e_{j},e_{k}], which is absorbing")));
                rules.push(rule("(iii)", format!("a set holding e_{i} holds an edge to e_{j} or e_{k}, hence [e_{j},e_{k}]")));
                (AbsorbingClass::OneEdge { edge: [j, k] }, vec![MemberSet::Edge { from: j, to: k }])
            } else {
                rules.push(rule("case 5", "all p_i(e_i) < 1 and all L_i ≠ ∅: every vertex lies in K, K ⊇ K_0".into()));
                let area_tol = AREA_TOL_FRACTION * SIMPLEX_AREA;
                let mut cur = initial_region(spec, resolution)?;
                stages.push(StageSummary { n: 0, area: cur.area, added_area: cur.area });
                stage_regions.push(cur.clone());
                let mut converged = false;
                let mut reached = cur.uncovered_area() < area_tol;
                let mut n = 0;
                while !reached && n < max_kn_iters {
                    let next = iterate_kn(spec, &cur)?;
                    n += 1;
                    let diff = next.symmetric_difference_area(&cur);
                    stages.push(StageSummary { n, area: next.area, added_area: diff });
                    stage_regions.push(next.clone());
                    reached = next.uncovered_area() < area_tol;
                    cur = next;
                    if diff < area_tol {
                        converged = true;
                        break;
                    }
                }
                if reached {
                    converged = true;
                    rules.push(rule("(iv)", format!("K_{n} covers Δ₂ within area_tol, so 𝒦_m = {{Δ₂}}")));
                    cur = Region2D::full_simplex(resolution)?;
                } else if converged {
                    rules.push(rule("(iv)", format!("K_{n} = K_{} within area_tol; K_∞ = K_{n}", n.saturating_sub(1))));
                } else {
                    warnings.push(format!("K_n not stationary after {max_kn_iters} iterations"));
                }
                (
                    AbsorbingClass::InteriorCompact { reached_full_simplex: reached, converged, iterations: n },
                    vec![MemberSet::Region { region: cur }],
                )
            }
        }
    };
    Ok(AbsorbingClassification {
        dim: 2,
        class,
        members,
        rules,
        thresholds: Thresholds { max_kn_iters, ..Thresholds::default() },
        warnings,
        profile,
        stages,
        stage_regions,
    })
}

pub fn classify(spec: &WeightSpec, resolution: usize, max_kn_iters: usize) -> Result<AbsorbingClassification> {
    match spec.dim() {
        1 => classify_d1(spec),
        2 => classify_d2(spec, resolution, max_kn_iters),
        d => Err(Error::Unsupported(format!("absorbing-set classification for d = {d}"))),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub escape: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeReport {
    pub member: String,
    pub samples: usize,
    pub max_escape: f64,
    pub witnesses: Vec<Witness>,
    /// Segment points farther than this many cells from a region count as outside.
    pub raster_tolerance_cells: usize,
    pub pass: bool,
}

/// Estimates max_x P(x, K^c) over sampled x ∈ K. Vertices and edges are exact;
/// rasterized regions treat points within one cell of the region as inside.
pub fn verify_absorbing(spec: &WeightSpec, member: &MemberSet, samples: usize, seed: u64) -> Result<EscapeReport> {
    let d = spec.dim();
    let mut p = vec![0.0; d + 1];
    let mut witnesses = Vec::new();
    let mut max_escape: f64 = 0.0;
    let mut record = |x: Vec<f64>, e: f64, w: &mut Vec<Witness>| {
        max_escape = max_escape.max(e);
        if e > 0.0 && w.len() < 16 {
            w.push(Witness { x, escape: e });
        }
    };
    let (count, tol) = match member {
        MemberSet::Vertex { index } => {
            let x = vertex(*index, d)?.coords().to_vec();
            spec.eval_into(&x, &mut p)?;
            let e: f64 = (0..=d).filter(|j| j != index).map(|j| p[j]).sum();
            record(x, e, &mut witnesses);
            (1, 0)
        }
        MemberSet::Edge { from, to } => {
            let a = vertex(*from, d)?.coords().to_vec();
            let b = vertex(*to, d)?.coords().to_vec();
            let n = samples.max(2);
            for k in 0..n {
                let s = k as f64 / (n - 1) as f64;
                let x: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (1.0 - s) * u + s * v).collect();
                spec.eval_into(&x, &mut p)?;
                let e: f64 = (0..=d).filter(|j| j != from && j != to).map(|j| p[j]).sum();
                record(x, e, &mut witnesses);
            }
            (n, 0)
        }
        MemberSet::Region { region } => {
            if d != 2 {
                return Err(Error::Dimension { expected: 2, got: d });
            }
            let grid = region.grid();
            let members: Vec<usize> = (0..grid.len()).filter(|&c| region.cells[c]).collect();
            if members.is_empty() {
                return Err(Error::Invalid("empty region".into()));
            }
            let near = region.dilated();
            let mut r = rng::stream(seed, 0);
            let points: Vec<Vec<f64>> = (0..samples)
                .map(|_| {
                    let c = grid.corners(members[r.random_range(0..members.len())]);
                    let (mut u, mut v) = (r.random::<f64>(), r.random::<f64>());
                    if u + v > 1.0 {
                        u = 1.0 - u;
                        v = 1.0 - v;
                    }
                    (0..2).map(|k| c[0][k] + u * (c[1][k] - c[0][k]) + v * (c[2][k] - c[0][k])).collect()
                })
                .collect();
            let escapes: Vec<f64> = points
                .par_iter()
                .map(|x| {
                    let mut q = [0.0; 3];
                    spec.eval_into(x, &mut q)?;
                    let mut e = 0.0;
                    for (i, qi) in q.iter().enumerate() {
                        if *qi <= 0.0 {
                            continue;
                        }
                        let outside: f64 = segment_cells(&grid, x, &vertex2(i)).iter().filter(|(c, _)| !near[*c]).map(|(_, l)| l).sum();
                        e += qi * outside;
                    }
                    Ok(e)
                })
                .collect::<Result<_>>()?;
            for (x, e) in points.into_iter().zip(escapes) {
                record(x, e, &mut witnesses);
            }
            (samples, 1)
        }
    };
    Ok(EscapeReport {
        member: member.label(),
        samples: count,
        max_escape,
        witnesses,
        raster_tolerance_cells: tol,
        pass: max_escape <= EPS_ESCAPE,
    })
}

/// verify_absorbing on every member set of a classification.
pub fn verify_classification(spec: &WeightSpec, c: &AbsorbingClassification, samples: usize, seed: u64) -> Result<Vec<EscapeReport>> {
    c.members.iter().map(|m| verify_absorbing(spec, m, samples, seed)).collect()
}
