//! Dirichlet reference measures: density, moments, sampling, cell masses and fit tests.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Beta, ChiSquared, ContinuousCDF, Normal};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::operators::{GridDensity, SimplexGrid};
use crate::quad;
use crate::simplex::SimplexPoint;

/// Relative error target for cell-mass integration.
pub const CELL_REL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirichletParams {
    theta: Vec<f64>,
}

impl DirichletParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 || theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Invalid(format!("Dirichlet parameters must be positive: {theta:?}")));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn total(&self) -> f64 {
        self.theta.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.theta.len() - 1
    }

    /// log Γ(|θ|) − Σ log Γ(θ_i).
    pub fn log_norm(&self) -> f64 {
        ln_gamma(self.total()) - self.theta.iter().map(|t| ln_gamma(*t)).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityValue {
    pub value: f64,
    pub log_value: f64,
    /// y lies on a face of the simplex (some y_i = 0).
    pub on_face: bool,
}

/// Γ(|θ|)/∏Γ(θ_i) · ∏ y_i^(θ_i − 1), evaluated in log space. On faces the
/// value is 0 or +∞ depending on the exponents (NaN if both occur).
pub fn density(params: &DirichletParams, y: &SimplexPoint) -> Result<DensityValue> {
    if y.dim() != params.dim() {
        return Err(Error::Dimension { expected: params.dim(), got: y.dim() });
    }
    let b = y.barycentric();
    let mut log = params.log_norm();
    let mut on_face = false;
    let (mut plus_inf, mut minus_inf) = (false, false);
    for (yi, ti) in b.iter().zip(&params.theta) {
        if *yi <= 0.0 {
            on_face = true;
            if *ti < 1.0 {
                plus_inf = true;
            } else if *ti > 1.0 {
                minus_inf = true;
            }
        } else {
            log += (ti - 1.0) * yi.ln();
        }
    }
    let log_value = match (plus_inf, minus_inf) {
        (true, true) => f64::NAN,
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        _ => log,
    };
    Ok(DensityValue { value: log_value.exp(), log_value, on_face })
}

#[derive(Clone, Debug, Serialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Mean and covariance over the full vector (y_0, ..., y_d).
pub fn moments(params: &DirichletParams) -> Moments {
    let a = params.total();
    let th = &params.theta;
    let mean = th.iter().map(|t| t / a).collect();
    let cov = (0..th.len())
        .map(|i| {
            (0..th.len())
                .map(|j| {
                    let diag = if i == j { th[i] * a } else { 0.0 };
                    (diag - th[i] * th[j]) / (a * a * (a + 1.0))
                })
                .collect()
        })
        .collect();
    Moments { mean, cov }
}

/// One draw by normalizing independent Gamma(θ_i, 1) variables.
pub fn sample<R: Rng>(params: &DirichletParams, rng: &mut R) -> SimplexPoint {
    loop {
        let g: Vec<f64> = params.theta.iter().map(|t| Gamma::new(*t, 1.0).expect("positive shape").sample(rng)).collect();
        let s: f64 = g.iter().sum();
        if s > 0.0 && s.is_finite() {
            return SimplexPoint::clamped(g[1..].iter().map(|v| v / s).collect());
        }
    }
}

/// Exact Dir[θ] mass of every grid cell.
///
/// d = 1 uses Beta CDF differences. For d = 2 the mass of a cell is
/// ∫ f_{Beta(θ_1, θ_0+θ_2)}(y_1) [I_{u_hi}(θ_2, θ_0) − I_{u_lo}(θ_2, θ_0)] dy_1
/// with u = y_2/(1 − y_1), integrated adaptively with endpoint substitution.
pub fn cell_masses(params: &DirichletParams, grid: &SimplexGrid) -> Result<GridDensity> {
    if params.dim() != grid.dim() {
        return Err(Error::Dimension { expected: grid.dim(), got: params.dim() });
    }
    let th = &params.theta;
    let m = grid.resolution();
    let h = 1.0 / m as f64;
    if grid.dim() == 1 {
        let b = Beta::new(th[1], th[0]).map_err(|e| Error::Invalid(e.to_string()))?;
        let masses = (0..m).map(|k| b.cdf((k + 1) as f64 * h) - b.cdf(k as f64 * h)).collect();
        return GridDensity::normalized(grid.clone(), masses);
    }
    let (b1, b2) = (th[1], th[0] + th[2]);
    let log_outer_norm = -statrs::function::beta::ln_beta(b1, b2);
    let (a2, a0) = (th[2], th[0]);
    // conditional law of y2 given y1 at the point (y2, y0): (F, 1 − F), each
    // from the side where it is accurate
    let cond = move |y2: f64, y0: f64| -> (f64, f64) {
        if y2 <= 0.0 {
            return (0.0, 1.0);
        }
        if y0 <= 0.0 {
            return (1.0, 0.0);
        }
        let s = y2 + y0;
        if y2 <= y0 {
            let f = beta_reg(a2, a0, y2 / s);
            (f, 1.0 - f)
        } else {
            let q = beta_reg(a0, a2, y0 / s);
            (1.0 - q, q)
        }
    };
    let masses: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|id| {
            let (i, j, up) = grid.cell_index(id);
            let lo_x = i as f64 * h;
            let hi_x = (i + 1) as f64 * h;
            // y2 and y0 at both ends of the y2-range from lattice gaps, free of cancellation
            let gap = |k: isize| k.max(0) as f64 * h;
            let (mi, ii, jj) = (m as isize, i as isize, j as isize);
            let f = |_: f64, dl: f64, dr: f64| -> f64 {
                let y1 = lo_x + dl;
                let rest = (1.0 - hi_x) + dr;
                if rest <= 0.0 || y1 <= 0.0 {
                    return 0.0;
                }
                let mid_y2 = (gap(jj + 1) - dl).max(0.0);
                let mid_y0 = gap(mi - ii - jj - 1);
                let (bottom, top) = if up {
                    ((mid_y2, mid_y0), (gap(jj + 1), gap(mi - ii - jj - 2) + dr))
                } else {
                    ((gap(jj), gap(mi - ii - jj - 1) + dr), (mid_y2, mid_y0))
                };
                let (fb, qb) = cond(bottom.0, bottom.1);
                let (ft, qt) = cond(top.0, top.1);
                let inner = if fb > 0.5 { qb - qt } else { ft - fb };
                let pdf = (log_outer_norm + (b1 - 1.0) * y1.ln() + (b2 - 1.0) * rest.ln()).exp();
                pdf * inner.max(0.0)
            };
            let sa = if i == 0 { th[1] } else { 1.0 };
            let sb = if i + 1 == m { th[0] + th[2] } else { 1.0 };
            quad::adaptive_singular(f, lo_x, hi_x, sa, sb, CELL_REL_TOL * 1e-2)
        })
        .collect();
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > 1e-5 {
        return Err(Error::Invalid(format!("Dirichlet cell masses sum to {total}")));
    }
    GridDensity::normalized(grid.clone(), masses)
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub samples: usize,
    pub significance: f64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub chi_square_p: f64,
    pub merged_groups: usize,
    pub moment_z: Vec<f64>,
    pub moment_p: Vec<f64>,
    pub ks_statistic: f64,
    pub ks_p: f64,
    /// Each test is run at significance / (number of tests).
    pub per_test_level: f64,
    pub chi_square_pass: bool,
    pub moments_pass: bool,
    pub ks_pass: bool,
    pub pass: bool,
}

/// Chi-square over grid cells (merged until expected counts reach 5), z-scores
/// of coordinate means and a Kolmogorov–Smirnov test of the x_1 marginal.
/// `cells` is the grid resolution; samples should be roughly independent.
pub fn goodness_of_fit(samples: &[SimplexPoint], params: &DirichletParams, cells: usize, significance: f64) -> Result<FitReport> {
    let n = samples.len();
    if n < 10_000 {
        return Err(Error::Invalid(format!("goodness of fit needs at least 10000 samples, got {n}")));
    }
    let d = params.dim();
    let grid = SimplexGrid::new(d, cells)?;
    let expected = cell_masses(params, &grid)?;
    let mut counts = vec![0usize; grid.len()];
    for s in samples {
        counts[grid.locate(s.coords())] += 1;
    }
    let nf = n as f64;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (c, m) in counts.iter().zip(&expected.masses) {
        acc.0 += *c as f64;
        acc.1 += m * nf;
        if acc.1 >= 5.0 {
            groups.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => groups.push(acc),
        }
    }
    let chi_square: f64 = groups.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = groups.len().saturating_sub(1).max(1);
    let chi_square_p = 1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(chi_square);

    let mo = moments(params);
    let std_normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut moment_z = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let mean = samples.iter().map(|s| s.barycentric()[k]).sum::<f64>() / nf;
        moment_z.push((mean - mo.mean[k]) / (mo.cov[k][k] / nf).sqrt());
    }
    let moment_p: Vec<f64> = moment_z.iter().map(|z| 2.0 * (1.0 - std_normal.cdf(z.abs()))).collect();

    let marg = Beta::new(params.theta[1], params.total() - params.theta[1]).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut xs: Vec<f64> = samples.iter().map(|s| s.coords()[0]).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut ks: f64 = 0.0;
    for (k, x) in xs.iter().enumerate() {
        let f = marg.cdf(*x);
        ks = ks.max((f - k as f64 / nf).abs()).max(((k + 1) as f64 / nf - f).abs());
    }
    let ks_p = kolmogorov_p(ks, n);

    let tests = 2 + moment_p.len();
    let level = significance / tests as f64;
    let chi_square_pass = chi_square_p > level;
    let moments_pass = moment_p.iter().all(|p| *p > level);
    let ks_pass = ks_p > level;
    Ok(FitReport {
        samples: n,
        significance,
        chi_square,
        degrees_of_freedom: dof,
        chi_square_p,
        merged_groups: groups.len(),
        moment_z,
        moment_p,
        ks_statistic: ks,
        ks_p,
        per_test_level: level,
        chi_square_pass,
        moments_pass,
        ks_pass,
        pass: chi_square_pass && moments_pass && ks_pass,
    })
}

/// Asymptotic Kolmogorov tail with the Stephens small-sample correction.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use statrs::function::gamma::gamma;

    fn pt(c: &[f64]) -> SimplexPoint {
        SimplexPoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn strip_sums_match_the_marginals() {
        for (th, m) in [([0.1, 0.2, 0.3], 16), ([0.3, 0.5, 0.2], 24), ([2.0, 0.7, 1.5], 10)] {
            let g = SimplexGrid::new(2, m).unwrap();
            let masses = cell_masses(&DirichletParams::new(th.to_vec()).unwrap(), &g).unwrap();
            let marg = Beta::new(th[1], th[0] + th[2]).unwrap();
            let col = Beta::new(th[2], th[0] + th[1]).unwrap();
            let mut rows = vec![0.0; m];
            let mut cols = vec![0.0; m];
            for (id, v) in masses.masses.iter().enumerate() {
                let (i, j, _) = g.cell_index(id);
                rows[i] += v;
                cols[j] += v;
            }
            for k in 0..m {
                let (a, b) = (k as f64 / m as f64, (k + 1) as f64 / m as f64);
                let want = marg.cdf(b) - marg.cdf(a);
                assert!((rows[k] - want).abs() < 1e-9, "{th:?} row {k}: {} vs {want}", rows[k]);
                let want = col.cdf(b) - col.cdf(a);
                assert!((cols[k] - want).abs() < 1e-9, "{th:?} column {k}: {} vs {want}", cols[k]);
            }
        }
    }

    #[test]
    fn density_examples() {
        let flat = DirichletParams::new(vec![1.0; 3]).unwrap();
        assert!((density(&flat, &pt(&[0.2, 0.3])).unwrap().value - 2.0).abs() < 1e-12);
        let third = DirichletParams::new(vec![1.0 / 3.0; 3]).unwrap();
        let v = density(&third, &pt(&[1.0 / 3.0, 1.0 / 3.0])).unwrap().value;
        let want = 9.0 / gamma(1.0 / 3.0).powi(3);
        assert!((v / want - 1.0).abs() < 1e-12, "{v} vs {want}");
        let face = density(&DirichletParams::new(vec![2.0, 1.0, 1.0]).unwrap(), &pt(&[0.4, 0.6])).unwrap();
        assert!(face.on_face && face.value == 0.0);
        let inf = density(&third, &pt(&[0.4, 0.6])).unwrap();
        assert!(inf.on_face && inf.value.is_infinite());
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn unit_total_prefactor() {
        // for |θ| = 1 the prefactor is 1/∏Γ(θ_i)
        let p = DirichletParams::new(vec![0.3, 0.5, 0.2]).unwrap();
        let y = pt(&[0.25, 0.35]);
        let b = y.barycentric();
        let direct = b.iter().zip(p.theta()).map(|(y, t)| y.powf(t - 1.0) / gamma(*t)).product::<f64>();
        assert!((density(&p, &y).unwrap().value / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_examples() {
        let m = moments(&DirichletParams::new(vec![1.0; 3]).unwrap());
        assert!(m.mean.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let m = moments(&DirichletParams::new(vec![0.3, 0.5, 0.2]).unwrap());
        assert!(m.mean.iter().zip([0.3, 0.5, 0.2]).all(|(a, b)| (a - b).abs() < 1e-15));
        for row in &m.cov {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_moments_match() {
        let p = DirichletParams::new(vec![2.0, 3.0, 4.0]).unwrap();
        let mo = moments(&p);
        let mut r = rng::stream(17, 0);
        let n = 200_000;
        let xs: Vec<Vec<f64>> = (0..n).map(|_| sample(&p, &mut r).barycentric()).collect();
        for k in 0..3 {
            let mean = xs.iter().map(|x| x[k]).sum::<f64>() / n as f64;
            assert!((mean - mo.mean[k]).abs() < 4.0 * (mo.cov[k][k] / n as f64).sqrt());
            let cov01 = xs.iter().map(|x| (x[0] - mo.mean[0]) * (x[1] - mo.mean[1])).sum::<f64>() / n as f64;
            assert!((cov01 - mo.cov[0][1]).abs() < 2e-4);
        }
    }

    #[test]
    fn cell_masses_sum_to_one() {
        for th in [[1.0, 1.0, 1.0], [2.0, 3.0, 4.0], [0.5, 0.5, 0.5], [0.3, 0.5, 0.2]] {
            let p = DirichletParams::new(th.to_vec()).unwrap();
            let g = SimplexGrid::new(2, 16).unwrap();
            let raw: f64 = {
                let cm = cell_masses(&p, &g).unwrap();
                cm.masses.iter().sum()
            };
            assert!((raw - 1.0).abs() < 1e-5);
        }
        let flat = cell_masses(&DirichletParams::new(vec![1.0; 3]).unwrap(), &SimplexGrid::new(2, 8).unwrap()).unwrap();
        assert!(flat.masses.iter().all(|m| (m - 1.0 / 64.0).abs() < 1e-9));
    }

    #[test]
    fn cell_masses_match_monte_carlo() {
        let p = DirichletParams::new(vec![0.3, 0.5, 0.2]).unwrap();
        let g = SimplexGrid::new(2, 4).unwrap();
        let cm = cell_masses(&p, &g).unwrap();
        let mut r = rng::stream(5, 0);
        let n = 400_000;
        let mut counts = vec![0.0; g.len()];
        for _ in 0..n {
            counts[g.locate(sample(&p, &mut r).coords())] += 1.0 / n as f64;
        }
        for (c, m) in counts.iter().zip(&cm.masses) {
            assert!((c - m).abs() < 4.0 * (m * (1.0 - m) / n as f64).sqrt() + 1e-6, "{c} vs {m}");
        }
    }

    #[test]
    fn fit_accepts_own_samples_and_rejects_wrong_params() {
        let p = DirichletParams::new(vec![0.3, 0.5, 0.2]).unwrap();
        let mut r = rng::stream(8, 0);
        let xs: Vec<SimplexPoint> = (0..20_000).map(|_| sample(&p, &mut r)).collect();
        assert!(goodness_of_fit(&xs, &p, 8, 0.01).unwrap().pass);
        let wrong = DirichletParams::new(vec![0.4, 0.4, 0.2]).unwrap();
        assert!(!goodness_of_fit(&xs, &wrong, 8, 0.01).unwrap().pass);
        assert!(goodness_of_fit(&xs[..100], &p, 8, 0.01).is_err());
    }

    #[test]
    fn kolmogorov_tail() {
        assert!((kolmogorov_p(1.36 / 100.0, 10_000) - 0.05).abs() < 0.005);
        assert_eq!(kolmogorov_p(0.0, 100), 1.0);
    }
}
