use super::grid::{GridDensity, SimplexGrid};
use crate::error::{Error, Result};
use crate::quad;
use crate::weights::WeightSpec;

/// Invariant density for d = 1,
/// g(y) = C·exp(∫_{1/2}^y p_1(t)/(1−t) dt − ∫_{1/2}^y p_0(t)/t dt),
/// integrated over the grid cells.
///
/// Written as y^(−p_0(0))·(1−y)^(−p_1(1))·h(y) with h bounded, so the
/// endpoint singularities are handled by substitution.
pub fn d1_closed_form(spec: &WeightSpec, grid: &SimplexGrid) -> Result<GridDensity> {
    if spec.dim() != 1 || grid.dim() != 1 {
        return Err(Error::Unsupported("closed form exists only for d = 1".into()));
    }
    let p = |y: f64| -> Result<[f64; 2]> {
        let mut out = [0.0; 2];
        spec.eval_into(&[y], &mut out)?;
        Ok(out)
    };
    let at0 = p(0.0)?;
    let at1 = p(1.0)?;
    if !(at0[1] > 0.0 && at1[0] > 0.0) {
        return Err(Error::Invalid(format!(
            "closed form needs p_1(0) > 0 and p_0(1) > 0, got p_1(0) = {} and p_0(1) = {}",
            at0[1], at1[0]
        )));
    }
    let (a0, a1) = (at0[0], at1[1]);
    let (gx, gw) = quad::gauss_legendre(32);
    // log h(y) = ∫_{1/2}^y [(p_1(t) − p_1(1))/(1−t) − (p_0(t) − p_0(0))/t] dt
    let log_h = |y: f64| -> f64 {
        let (lo, hi) = (0.5f64.min(y), 0.5f64.max(y));
        let sign = if y < 0.5 { -1.0 } else { 1.0 };
        let mut acc = 0.0;
        for (u, w) in gx.iter().zip(&gw) {
            let t = lo + (hi - lo) * u;
            let pt = p(t).unwrap_or([f64::NAN; 2]);
            acc += w * ((pt[1] - a1) / (1.0 - t) - (pt[0] - a0) / t);
        }
        sign * (hi - lo) * acc
    };
    let smooth = spec.is_constant();
    let m = grid.resolution();
    let mut masses = Vec::with_capacity(m);
    for c in 0..m {
        let a = c as f64 / m as f64;
        let b = (c + 1) as f64 / m as f64;
        // y and 1 − y from the distances to the cell ends
        let density = |y: f64, dl: f64, dr: f64| -> f64 {
            let h = if smooth { 0.0 } else { log_h(y) };
            (-a0 * (a + dl).ln() - a1 * ((1.0 - b) + dr).ln() + h).exp()
        };
        let sa = if c == 0 { 1.0 - a0 } else { 1.0 };
        let sb = if c + 1 == m { 1.0 - a1 } else { 1.0 };
        masses.push(quad::adaptive_singular(density, a, b, sa, sb, 1e-10));
    }
    if masses.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("closed-form integration produced non-finite masses".into()));
    }
    GridDensity::normalized(grid.clone(), masses)
}
