//! One-dimensional quadrature: Gauss–Legendre rules and adaptive Gauss–Kronrod.

/// Gauss–Legendre nodes and weights on [0, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        // z is the (i+1)-th largest root on [-1, 1]
        let wt = 1.0 / ((1.0 - z * z) * pp * pp);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        x[i] = 0.5 * (1.0 - z);
        w[n - 1 - i] = wt;
        w[i] = wt;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7–K15 bisection until the total error estimate is below
/// max(abs_tol, rel_tol·|I|).
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..2000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (k, _) = parts.iter().enumerate().fold((0, -1.0), |acc, (k, p)| if p.3 > acc.1 { (k, p.3) } else { acc });
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    parts.iter().map(|p| p.2).sum()
}

/// ∫_a^b f for f behaving like (x−a)^(sa−1) near a and (b−x)^(sb−1) near b.
///
/// Each singular end is removed with the substitution x − a = (b − a)·w^(1/s);
/// exponents s ≥ 1 need no change. The integrand is called as f(x, x − a, b − x)
/// with the distances computed without cancellation near the singular ends.
pub fn adaptive_singular<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64, sa: f64, sb: f64, rel_tol: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = mid - a;
    let left = if sa < 1.0 {
        end_substituted(|r| f(a + r, r, b - a - r), half, sa, rel_tol)
    } else {
        adaptive(|x| f(x, x - a, b - x), a, mid, rel_tol, 0.0)
    };
    let right = if sb < 1.0 {
        end_substituted(|r| f(b - r, b - a - r, r), b - mid, sb, rel_tol)
    } else {
        adaptive(|x| f(x, x - a, b - x), mid, b, rel_tol, 0.0)
    };
    left + right
}

/// ∫_0^len g(r) dr with r = len·w^(1/s).
fn end_substituted<G: Fn(f64) -> f64>(g: G, len: f64, s: f64, rel_tol: f64) -> f64 {
    let inv = 1.0 / s;
    let h = |w: f64| {
        if w <= 0.0 {
            return 0.0;
        }
        let r = len * w.powf(inv);
        if r <= 0.0 {
            return 0.0;
        }
        g(r) * len * inv * w.powf(inv - 1.0)
    };
    adaptive(h, 0.0, 1.0, rel_tol, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_weights_and_polynomials() {
        for n in [1, 2, 5, 8, 32, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14, "n = {n}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg + 1) as f64).abs() < 1e-13, "n = {n}, deg = {deg}");
            }
        }
    }

    #[test]
    fn adaptive_smooth() {
        let v = adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_endpoints() {
        // ∫_0^1 x^(-0.7) (1-x)^(-0.4) dx = B(0.3, 0.6)
        let b = statrs::function::beta::beta(0.3, 0.6);
        let v = adaptive_singular(|_, l: f64, r: f64| l.powf(-0.7) * r.powf(-0.4), 0.0, 1.0, 0.3, 0.6, 1e-10);
        assert!((v / b - 1.0).abs() < 1e-8, "{v} vs {b}");
    }
}
