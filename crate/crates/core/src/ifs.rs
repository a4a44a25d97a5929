//! Uniqueness hypotheses for the chain viewed as an iterated function system.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::{grid_minimum, holder_constant, HolderEstimate, WeightKind, WeightSpec};

/// Minimum weight that counts as bounded away from zero.
pub const DELTA_FLOOR: f64 = 1e-6;
/// Grid minima must clear the floor by this factor before they count for
/// specs without an exact minimum.
const STRONG_MARGIN: f64 = 100.0;

/// E[t^α] for t ~ U[0, 1]: the mean α-Lipschitz ratio of H_i(t, ·).
pub fn contraction_coefficient(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Invalid(format!("alpha = {alpha} outside (0, 1]")));
    }
    Ok(1.0 / (1.0 + alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    UniqueByConstantWeights,
    UniqueByH1H2H3,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct H3Evidence {
    pub index: usize,
    pub delta: f64,
    /// Exact minimum (constant, affine, tabulated) rather than a grid estimate.
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub alpha: f64,
    pub r: f64,
    pub holder_bound: HolderEstimate,
    /// Lower bounds on inf p_i, one per i.
    pub minima: Vec<f64>,
    pub minima_exact: bool,
    pub grid_resolution: usize,
    pub h3_index: Option<H3Evidence>,
    pub delta_floor: f64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

fn exact_minimum(spec: &WeightSpec) -> Option<Vec<f64>> {
    if let Some(m) = spec.analytic_minimum() {
        return Some(m);
    }
    match spec.kind() {
        // piecewise-linear or piecewise-constant interpolants attain their minimum at a node
        WeightKind::Tabulated(t) => {
            let mut mins = vec![f64::INFINITY; spec.dim() + 1];
            for row in &t.values {
                for (a, b) in mins.iter_mut().zip(row) {
                    *a = a.min(*b);
                }
            }
            Some(mins)
        }
        _ => None,
    }
}

pub fn check_uniqueness(spec: &WeightSpec, alpha: f64, samples: usize) -> Result<UniquenessReport> {
    let r = contraction_coefficient(alpha)?;
    let holder = holder_constant(spec, alpha, samples)?;
    let d = spec.dim();
    let grid_resolution = match d {
        1 => samples.clamp(64, 1 << 16),
        2 => ((2.0 * samples as f64).sqrt() as usize).clamp(64, 1024),
        _ => 16,
    };
    let grid = grid_minimum(spec, grid_resolution)?;
    let exact = exact_minimum(spec);
    let minima_exact = exact.is_some();
    let minima = exact.unwrap_or_else(|| grid.clone());
    let mut notes = vec![format!("H1: E[t^α] = 1/(1 + α) = {r} < 1")];

    if let Some(ex) = minima_exact.then_some(&minima) {
        for (i, (e, g)) in ex.iter().zip(&grid).enumerate() {
            if g + 1e-12 < *e {
                notes.push(format!("grid minimum of p_{i} ({g}) is below the exact value ({e})"));
            }
        }
    }

    let threshold = if minima_exact { DELTA_FLOOR } else { STRONG_MARGIN * DELTA_FLOOR };
    let h3_index =
        minima.iter().enumerate().find(|(_, v)| **v > threshold).map(|(i, v)| H3Evidence { index: i, delta: *v, certified: minima_exact });

    let verdict = if spec.is_constant() {
        notes.push("constant weights: the invariant measure is unique".into());
        Verdict::UniqueByConstantWeights
    } else {
        let h2 = if matches!(spec.kind(), WeightKind::Affine(_)) {
            notes.push("H2: affine weights are Lipschitz".into());
            true
        } else if holder.possibly_not_holder || !holder.estimate.is_finite() {
            notes.push(format!("H2: Hölder ratio grows at fine scales (estimate {})", holder.estimate));
            false
        } else {
            notes.push(format!("H2: empirical Hölder bound {} (evidence only)", holder.estimate));
            true
        };
        match (&h3_index, h2) {
            (Some(h), true) => {
                let how = if h.certified { "exact" } else { "grid estimate" };
                notes.push(format!("H3: inf p_{} = {} > {DELTA_FLOOR} ({how})", h.index, h.delta));
                Verdict::UniqueByH1H2H3
            }
            (None, _) => {
                notes.push(format!("H3: no p_i has infimum above {threshold}"));
                Verdict::Inconclusive
            }
            (Some(_), false) => Verdict::Inconclusive,
        }
    };
    Ok(UniquenessReport {
        alpha,
        r,
        holder_bound: holder,
        minima,
        minima_exact,
        grid_resolution,
        h3_index,
        delta_floor: DELTA_FLOOR,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn contraction_values() {
        assert_eq!(contraction_coefficient(1.0).unwrap(), 0.5);
        assert_eq!(contraction_coefficient(0.5).unwrap(), 1.0 / 1.5);
        assert!(contraction_coefficient(1e-12).unwrap() < 1.0);
        assert!(contraction_coefficient(0.0).is_err());
        assert!(contraction_coefficient(1.5).is_err());
    }

    #[test]
    fn constant_and_affine_verdicts() {
        let c = check_uniqueness(&WeightSpec::constant(vec![0.3, 0.5, 0.2]).unwrap(), 1.0, 2000).unwrap();
        assert_eq!(c.verdict, Verdict::UniqueByConstantWeights);
        let a = check_uniqueness(&WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap(), 1.0, 2000).unwrap();
        assert_eq!(a.verdict, Verdict::UniqueByH1H2H3);
        assert!(a.minima_exact);
        assert_eq!(a.minima, vec![0.1, 0.2, 0.3]);
        let grid = grid_minimum(&WeightSpec::affine(vec![0.1, 0.2, 0.3]).unwrap(), a.grid_resolution).unwrap();
        for (g, e) in grid.iter().zip(&a.minima) {
            assert!((g - e).abs() < 1e-6);
        }
        let h = a.h3_index.unwrap();
        assert_eq!((h.index, h.delta, h.certified), (0, 0.1, true));
    }

    #[test]
    fn identity_is_inconclusive() {
        let id = WeightSpec::affine(vec![0.0; 3]).unwrap();
        let r = check_uniqueness(&id, 1.0, 2000).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.h3_index.is_none());
        let named = WeightSpec::named("identity", 2, true).unwrap();
        assert_eq!(check_uniqueness(&named, 1.0, 2000).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn no_uniqueness_claim_with_several_minimal_sets() {
        use crate::absorbing::{classify, MAX_KN_ITERS};
        let specs = [
            WeightSpec::named("identity", 2, true).unwrap(),
            WeightSpec::named("two-vertices", 2, true).unwrap(),
            WeightSpec::named("vertex-edge", 2, true).unwrap(),
            WeightSpec::named("one-edge", 2, true).unwrap(),
            WeightSpec::named("k0-stationary", 2, true).unwrap(),
            WeightSpec::affine(vec![1.0 / 3.0, 0.0, 0.0]).unwrap(),
            WeightSpec::affine(vec![0.0, 0.0]).unwrap(),
        ];
        for s in specs {
            let c = classify(&s, 32, MAX_KN_ITERS).unwrap();
            let u = check_uniqueness(&s, 1.0, 2000).unwrap();
            if c.members.len() > 1 {
                assert_eq!(u.verdict, Verdict::Inconclusive, "{:?}", c.class);
            }
        }
    }

    proptest! {
        #[test]
        fn contraction_strictly_decreasing(a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
            prop_assume!(a < b);
            prop_assert!(contraction_coefficient(a).unwrap() > contraction_coefficient(b).unwrap());
        }

        #[test]
        fn affine_delta_is_theta(t in proptest::collection::vec(0.0f64..0.3, 3)) {
            let r = check_uniqueness(&WeightSpec::affine(t.clone()).unwrap(), 1.0, 200).unwrap();
            match r.h3_index {
                Some(h) => prop_assert_eq!(h.delta, t[h.index]),
                None => prop_assert!(t.iter().all(|v| *v <= DELTA_FLOOR)),
            }
        }
    }
}
