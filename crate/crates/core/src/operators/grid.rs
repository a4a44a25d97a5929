use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Regular subdivision of Δ_1 into m intervals or of Δ_2 into m² triangles.
///
/// For d = 2, row i (x_1 ∈ [i/m, (i+1)/m]) holds cells in the order
/// lower(i,0), upper(i,0), lower(i,1), ..., lower(i, m−1−i), where
/// lower(i,j) has corners (i,j),(i+1,j),(i,j+1) and upper(i,j) has
/// corners (i+1,j),(i+1,j+1),(i,j+1), in units of 1/m.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexGrid {
    dim: usize,
    m: usize,
    #[serde(skip)]
    row_start: Vec<usize>,
}

impl SimplexGrid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Unsupported(format!("grids for d = {dim}")));
        }
        if m == 0 {
            return Err(Error::Invalid("grid resolution must be positive".into()));
        }
        let mut row_start = vec![0; m + 1];
        if dim == 2 {
            for i in 0..m {
                row_start[i + 1] = row_start[i] + 2 * (m - i) - 1;
            }
        }
        Ok(Self { dim, m, row_start })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        if self.dim == 1 {
            self.m
        } else {
            self.m * self.m
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            1.0 / self.m as f64
        } else {
            0.5 / (self.m * self.m) as f64
        }
    }

    /// Cell id of lower (upper = false) or upper triangle (i, j).
    #[inline]
    pub fn cell_id(&self, i: usize, j: usize, upper: bool) -> usize {
        self.row_start[i] + 2 * j + upper as usize
    }

    /// (i, j, upper) of a d = 2 cell.
    pub fn cell_index(&self, id: usize) -> (usize, usize, bool) {
        let i = match self.row_start.binary_search(&id) {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        let r = id - self.row_start[i];
        (i, r / 2, r % 2 == 1)
    }

    /// Cell containing x; points on shared boundaries go to a deterministic neighbour.
    #[inline]
    pub fn locate(&self, x: &[f64]) -> usize {
        let mf = self.m as f64;
        if self.dim == 1 {
            return ((x[0] * mf).floor().max(0.0) as usize).min(self.m - 1);
        }
        let u = (x[0] * mf).max(0.0);
        let v = (x[1] * mf).max(0.0);
        let i = (u.floor() as usize).min(self.m - 1);
        let j = (v.floor() as usize).min(self.m - 1 - i);
        let upper = (u - i as f64) + (v - j as f64) > 1.0 && i + j + 2 <= self.m;
        self.cell_id(i, j, upper)
    }

    /// Corner coordinates of a cell (2 points for d = 1, 3 for d = 2).
    pub fn corners(&self, id: usize) -> Vec<[f64; 2]> {
        let h = 1.0 / self.m as f64;
        if self.dim == 1 {
            return vec![[id as f64 * h, 0.0], [(id + 1) as f64 * h, 0.0]];
        }
        let (i, j, up) = self.cell_index(id);
        let (a, b) = (i as f64 * h, j as f64 * h);
        if up {
            vec![[a + h, b], [a + h, b + h], [a, b + h]]
        } else {
            vec![[a, b], [a + h, b], [a, b + h]]
        }
    }

    pub fn center(&self, id: usize) -> Vec<f64> {
        let c = self.corners(id);
        if self.dim == 1 {
            return vec![0.5 * (c[0][0] + c[1][0])];
        }
        vec![(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0]
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|c| self.center(c)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridDensity {
    pub grid: SimplexGrid,
    pub masses: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: SimplexGrid, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: masses.len() });
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::Invalid("masses must be nonnegative".into()));
        }
        let s: f64 = masses.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("masses sum to {s}, expected 1")));
        }
        Ok(Self { grid, masses })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(grid: SimplexGrid, mut masses: Vec<f64>) -> Result<Self> {
        let s: f64 = masses.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Invalid("cannot normalize zero mass".into()));
        }
        masses.iter_mut().for_each(|m| *m /= s);
        Self::new(grid, masses)
    }

    pub fn uniform(grid: SimplexGrid) -> Self {
        let n = grid.len();
        Self { grid, masses: vec![1.0 / n as f64; n] }
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn l1_distance(&self, other: &GridDensity) -> f64 {
        l1(&self.masses, &other.masses)
    }

    /// Density value (mass / volume) per cell.
    pub fn values(&self) -> Vec<f64> {
        let v = self.grid.cell_volume();
        self.masses.iter().map(|m| m / v).collect()
    }

    /// CSV with header `cell_id,x1[,x2],mass`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("cell_id");
        for k in 1..=self.grid.dim() {
            header.push_str(&format!(",x{k}"));
        }
        header.push_str(",mass\n");
        w.write_all(header.as_bytes())?;
        for (id, m) in self.masses.iter().enumerate() {
            let mut line = id.to_string();
            for c in self.grid.center(id) {
                line.push_str(&format!(",{c:?}"));
            }
            line.push_str(&format!(",{m:?}\n"));
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct GridFunction {
    pub grid: SimplexGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: SimplexGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("grid function values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples f at the cell centers.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: SimplexGrid, f: F) -> Self {
        let values = (0..grid.len()).map(|c| f(&grid.center(c))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: SimplexGrid, v: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![v; n] }
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts_and_volumes() {
        for m in [1, 2, 7, 64] {
            let g1 = SimplexGrid::new(1, m).unwrap();
            assert_eq!(g1.len(), m);
            assert!((g1.cell_volume() * m as f64 - 1.0).abs() < 1e-12);
            let g2 = SimplexGrid::new(2, m).unwrap();
            assert_eq!(g2.len(), m * m);
            assert!((g2.cell_volume() * (m * m) as f64 - 0.5).abs() < 1e-12);
        }
        assert!(SimplexGrid::new(3, 4).is_err());
    }

    fn area(c: &[[f64; 2]]) -> f64 {
        0.5 * ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1])).abs()
    }

    #[test]
    fn ids_round_trip_and_locate_centers() {
        let g = SimplexGrid::new(2, 9).unwrap();
        let mut seen = vec![false; g.len()];
        for i in 0..9 {
            for j in 0..(9 - i) {
                for up in [false, true] {
                    if up && i + j + 2 > 9 {
                        continue;
                    }
                    let id = g.cell_id(i, j, up);
                    assert!(!seen[id]);
                    seen[id] = true;
                    assert_eq!(g.cell_index(id), (i, j, up));
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
        for id in 0..g.len() {
            assert_eq!(g.locate(&g.center(id)), id);
            assert!((area(&g.corners(id)) - g.cell_volume()).abs() < 1e-15);
        }
    }

    #[test]
    fn locate_boundaries() {
        let g = SimplexGrid::new(2, 4).unwrap();
        assert_eq!(g.locate(&[1.0, 0.0]), g.cell_id(3, 0, false));
        assert_eq!(g.locate(&[0.0, 1.0]), g.cell_id(0, 3, false));
        assert_eq!(g.locate(&[0.5, 0.5]), g.cell_id(2, 1, false));
        let g1 = SimplexGrid::new(1, 4).unwrap();
        assert_eq!(g1.locate(&[1.0]), 3);
        assert_eq!(g1.locate(&[0.0]), 0);
    }

    #[test]
    fn density_csv() {
        let g = SimplexGrid::new(1, 2).unwrap();
        let d = GridDensity::uniform(g);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "cell_id,x1,mass\n0,0.25,0.5\n1,0.75,0.5\n");
    }
}
