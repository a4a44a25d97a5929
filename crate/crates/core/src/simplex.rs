//! Points of the closed simplex Δ_d and the segment maps H_i(t, x) = t·x + (1−t)·e_i.
//!
//! A point stores its d coordinates x_1..x_d; the 0-th barycentric
//! coordinate x_0 = 1 − Σ x_i is derived on demand.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EPS_GEOM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Vec<f64> {
        p.coords
    }
}

impl SimplexPoint {
    /// Validates and clamps; coordinates may violate the constraints by at most `EPS_GEOM`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotInSimplex(coords));
        }
        let sum: f64 = coords.iter().sum();
        if coords.iter().any(|&c| c < -EPS_GEOM) || sum > 1.0 + EPS_GEOM {
            return Err(Error::NotInSimplex(coords));
        }
        Ok(Self::clamped(coords))
    }

    /// Projects onto Δ_d without validation. Used for results of exact affine maps.
    pub(crate) fn clamped(mut coords: Vec<f64>) -> Self {
        for c in coords.iter_mut() {
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        let sum: f64 = coords.iter().sum();
        if sum > 1.0 {
            for c in coords.iter_mut() {
                *c /= sum;
            }
        }
        SimplexPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn x0(&self) -> f64 {
        (1.0 - self.coords.iter().sum::<f64>()).max(0.0)
    }

    /// Full vector (x_0, x_1, ..., x_d), renormalized to sum to one.
    pub fn barycentric(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.dim() + 1);
        b.push(self.x0());
        b.extend_from_slice(&self.coords);
        let s: f64 = b.iter().sum();
        b.iter_mut().for_each(|v| *v /= s);
        b
    }

    pub fn from_barycentric(b: &[f64]) -> Result<Self> {
        if b.len() < 2 {
            return Err(Error::Invalid("barycentric vector needs length >= 2".into()));
        }
        Self::new(b[1..].to_vec())
    }

    pub fn distance(&self, other: &SimplexPoint) -> f64 {
        self.coords.iter().zip(&other.coords).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

pub fn vertex(i: usize, d: usize) -> Result<SimplexPoint> {
    if d == 0 || i > d {
        return Err(Error::VertexIndex { index: i, dim: d });
    }
    let mut c = vec![0.0; d];
    if i > 0 {
        c[i - 1] = 1.0;
    }
    Ok(SimplexPoint { coords: c })
}

/// H_i(t, x) = t·x + (1−t)·e_i.
pub fn segment_map(i: usize, t: f64, x: &SimplexPoint) -> Result<SimplexPoint> {
    let d = x.dim();
    if i > d {
        return Err(Error::VertexIndex { index: i, dim: d });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParamRange(t));
    }
    Ok(SimplexPoint::clamped(segment_coords(i, t, &x.coords)))
}

#[inline]
pub(crate) fn segment_coords(i: usize, t: f64, x: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = x.iter().map(|v| t * v).collect();
    if i > 0 {
        c[i - 1] += 1.0 - t;
    }
    c
}

/// Inverse of `segment_map`: the t with y = t·x + (1−t)·e_i.
pub fn segment_param(x: &SimplexPoint, y: &SimplexPoint, i: usize) -> Result<f64> {
    let d = x.dim();
    if y.dim() != d {
        return Err(Error::Dimension { expected: d, got: y.dim() });
    }
    let e = vertex(i, d)?;
    let u: Vec<f64> = x.coords.iter().zip(&e.coords).map(|(a, b)| a - b).collect();
    let w: Vec<f64> = y.coords.iter().zip(&e.coords).map(|(a, b)| a - b).collect();
    let uu: f64 = u.iter().map(|v| v * v).sum();
    if uu.sqrt() <= EPS_GEOM {
        return Err(Error::DegenerateSegment(i));
    }
    let t = u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / uu;
    let residual = u.iter().zip(&w).map(|(a, b)| (b - t * a).powi(2)).sum::<f64>().sqrt();
    if residual > EPS_GEOM || !(-EPS_GEOM..=1.0 + EPS_GEOM).contains(&t) {
        return Err(Error::OffSegment { residual: residual.max((t - t.clamp(0.0, 1.0)).abs()) });
    }
    Ok(t.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn vertices() {
        assert_eq!(vertex(0, 2).unwrap().coords(), &[0.0, 0.0]);
        assert_eq!(vertex(1, 2).unwrap().coords(), &[1.0, 0.0]);
        assert_eq!(vertex(2, 3).unwrap().coords(), &[0.0, 1.0, 0.0]);
        assert!(vertex(3, 2).is_err());
    }

    #[test]
    fn segment_map_examples() {
        let x = p(&[0.3, 0.4]);
        assert_eq!(segment_map(1, 0.0, &x).unwrap().coords(), &[1.0, 0.0]);
        assert_eq!(segment_map(0, 1.0, &x).unwrap().coords(), &[0.3, 0.4]);
        let y = segment_map(2, 0.5, &x).unwrap();
        assert!((y.coords()[0] - 0.15).abs() < 1e-15 && (y.coords()[1] - 0.7).abs() < 1e-15);
        assert!(segment_map(0, 1.5, &x).is_err());
        assert!(segment_map(0, -0.1, &x).is_err());
    }

    #[test]
    fn segment_param_examples() {
        let x = p(&[0.3, 0.4]);
        assert!((segment_param(&x, &p(&[0.15, 0.2]), 0).unwrap() - 0.5).abs() < 1e-12);
        assert!((segment_param(&x, &p(&[0.825, 0.1]), 1).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(segment_param(&x, &p(&[0.5, 0.5]), 2), Err(Error::OffSegment { .. })));
        let e1 = vertex(1, 2).unwrap();
        assert!(matches!(segment_param(&e1, &e1, 1), Err(Error::DegenerateSegment(1))));
    }

    #[test]
    fn degenerate_map_stays_at_vertex() {
        let e2 = vertex(2, 2).unwrap();
        assert_eq!(segment_map(2, 0.37, &e2).unwrap(), e2);
    }

    #[test]
    fn clamping() {
        let q = SimplexPoint::new(vec![-1e-13, 0.5]).unwrap();
        assert_eq!(q.coords()[0], 0.0);
        let q = SimplexPoint::new(vec![0.5, 0.5 + 5e-13]).unwrap();
        assert!(q.coords().iter().sum::<f64>() <= 1.0);
        assert!(SimplexPoint::new(vec![-1e-6, 0.5]).is_err());
        assert!(SimplexPoint::new(vec![0.6, 0.5]).is_err());
        assert!(SimplexPoint::new(vec![f64::NAN]).is_err());
    }

    fn point_strategy(d: usize) -> impl Strategy<Value = SimplexPoint> {
        proptest::collection::vec(0.0f64..1.0, d + 1).prop_map(|v| {
            let g: Vec<f64> = v.iter().map(|u| -(1.0 - u).ln()).collect();
            let s: f64 = g.iter().sum::<f64>().max(1e-300);
            SimplexPoint::clamped(g[1..].iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn round_trip(d in 1usize..5, seed in point_strategy(4), t in 0.001f64..0.999, i in 0usize..5) {
            let x = SimplexPoint::clamped(seed.coords()[..d].to_vec());
            let i = i % (d + 1);
            let e = vertex(i, d).unwrap();
            prop_assume!(x.distance(&e) > 1e-6);
            let y = segment_map(i, t, &x).unwrap();
            let back = segment_param(&x, &y, i).unwrap();
            prop_assert!((back - t).abs() < 1e-10);
        }

        #[test]
        fn closure(x in point_strategy(3), t in 0.0f64..=1.0, i in 0usize..4) {
            let y = segment_map(i, t, &x).unwrap();
            prop_assert!(y.coords().iter().all(|&c| c >= 0.0));
            prop_assert!(y.coords().iter().sum::<f64>() <= 1.0 + EPS_GEOM);
        }

        #[test]
        fn barycentric_sums_to_one(x in point_strategy(4)) {
            let s: f64 = x.barycentric().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
