use super::grid::SimplexGrid;
use crate::error::Result;
use crate::quad;
use crate::weights::WeightSpec;

/// Smallest face exponent used for source profiles.
pub const MIN_FACE_EXPONENT: f64 = 0.05;

/// Nodes and normalized weights for ∫ F dBeta(α, β) on [0, 1], n per half.
///
/// On each half the distance r to the end is graded as r = w^q/2, with
/// q = 1/exponent for singular ends and q = 3 for other non-integer exponents.
pub fn beta_nodes(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = quad::gauss_legendre(n);
    let mut nodes = Vec::with_capacity(2 * n);
    let mut wts = Vec::with_capacity(2 * n);
    let half = |e: f64, other: f64, out: &mut Vec<(f64, f64)>| {
        let q = if e < 1.0 {
            1.0 / e
        } else if e.fract() != 0.0 {
            3.0
        } else {
            1.0
        };
        for (wk, gk) in x.iter().zip(&w) {
            let r = 0.5 * wk.powf(q);
            let wt = gk * q * 0.5f64.powf(e) * wk.powf(q - 1.0 + q * (e - 1.0)) * (1.0 - r).powf(other - 1.0);
            out.push((r, wt));
        }
    };
    let mut left = Vec::with_capacity(n);
    half(a, b, &mut left);
    let mut right = Vec::with_capacity(n);
    half(b, a, &mut right);
    for (r, wt) in left {
        nodes.push(r);
        wts.push(wt);
    }
    for (r, wt) in right.into_iter().rev() {
        nodes.push(1.0 - r);
        wts.push(wt);
    }
    let s: f64 = wts.iter().sum();
    wts.iter_mut().for_each(|v| *v /= s);
    (nodes, wts)
}

fn face_exponent(spec: &WeightSpec, k: usize, at: &[f64]) -> Result<f64> {
    let mut p = vec![0.0; spec.dim() + 1];
    spec.eval_into(at, &mut p)?;
    Ok(p[k].clamp(MIN_FACE_EXPONENT, 1.0))
}

/// Source points (2s per direction) for a cell whose mass is spread like dist(·, face k)^(a_k − 1)
/// near each face k the cell touches, with a_k = p_k on that face. Cells away
/// from the boundary get the uniform law. Returns None when every exponent is 1.
pub fn face_adapted_points(spec: &WeightSpec, grid: &SimplexGrid, cell: usize, s: usize) -> Result<Option<Vec<(Vec<f64>, f64)>>> {
    let m = grid.resolution();
    let h = 1.0 / m as f64;
    if grid.dim() == 1 {
        let lo = if cell == 0 { face_exponent(spec, 1, &[0.0])? } else { 1.0 };
        let hi = if cell + 1 == m { face_exponent(spec, 0, &[1.0])? } else { 1.0 };
        if lo == 1.0 && hi == 1.0 {
            return Ok(None);
        }
        let (u, w) = beta_nodes(lo, hi, s);
        let a = cell as f64 * h;
        return Ok(Some(u.iter().zip(w).map(|(u, w)| (vec![a + h * u], w)).collect()));
    }
    let (i, j, up) = grid.cell_index(cell);
    let c = grid.corners(cell);
    if !up {
        // corners A=(i,j), B=(i+1,j), C=(i,j+1); Dirichlet(α_A, α_B, α_C) on the cell
        let mut alpha = [1.0; 3];
        if j == 0 {
            alpha[2] = face_exponent(spec, 2, &[(i as f64 + 0.5) * h, 0.0])?;
        }
        if i == 0 {
            alpha[1] = face_exponent(spec, 1, &[0.0, (j as f64 + 0.5) * h])?;
        }
        if i + j + 1 == m {
            alpha[0] = face_exponent(spec, 0, &[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h])?;
        }
        if alpha.iter().all(|a| *a == 1.0) {
            return Ok(None);
        }
        let mut order = [0, 1, 2];
        order.sort_by(|x, y| alpha[*x].partial_cmp(&alpha[*y]).unwrap());
        let [jx, kx, lx] = order;
        let (us, uw) = beta_nodes(alpha[jx], alpha[kx] + alpha[lx], s);
        let (vs, vw) = beta_nodes(alpha[kx], alpha[lx], s);
        let mut pts = Vec::with_capacity(4 * s * s);
        for (u, wu) in us.iter().zip(&uw) {
            for (v, wv) in vs.iter().zip(&vw) {
                let mut lam = [0.0; 3];
                lam[jx] = *u;
                lam[kx] = (1.0 - u) * v;
                lam[lx] = (1.0 - u) * (1.0 - v);
                pts.push((combine(&c, &lam), wu * wv));
            }
        }
        return Ok(Some(pts));
    }
    // corners P=(i+1,j), Q=(i+1,j+1), R=(i,j+1) touch faces only at single points
    let mut alpha = [1.0; 3];
    if j == 0 {
        alpha[0] = face_exponent(spec, 2, &c[0])?;
    }
    if i + j + 2 == m {
        alpha[1] = face_exponent(spec, 0, &c[1])?;
    }
    if i == 0 {
        alpha[2] = face_exponent(spec, 1, &c[2])?;
    }
    if alpha.iter().all(|a| *a == 1.0) {
        return Ok(None);
    }
    let apex = (0..3).min_by(|x, y| alpha[*x].partial_cmp(&alpha[*y]).unwrap()).unwrap();
    let (o1, o2) = ((apex + 1) % 3, (apex + 2) % 3);
    // the distance to the face through the apex corner is ∝ 1 − λ_apex
    let (us, uw) = beta_nodes(1.0, alpha[apex] + 1.0, s);
    let (vs, vw) = beta_nodes(1.0, 1.0, s);
    let mut pts = Vec::with_capacity(4 * s * s);
    for (u, wu) in us.iter().zip(&uw) {
        for (v, wv) in vs.iter().zip(&vw) {
            let mut lam = [0.0; 3];
            lam[apex] = *u;
            lam[o1] = (1.0 - u) * v;
            lam[o2] = (1.0 - u) * (1.0 - v);
            let mut w = wu * wv;
            for k in [o1, o2] {
                if alpha[k] < 1.0 {
                    w *= (1.0 - lam[k]).powf(alpha[k] - 1.0);
                }
            }
            pts.push((combine(&c, &lam), w));
        }
    }
    let total: f64 = pts.iter().map(|p| p.1).sum();
    pts.iter_mut().for_each(|p| p.1 /= total);
    Ok(Some(pts))
}

fn combine(c: &[[f64; 2]], lam: &[f64; 3]) -> Vec<f64> {
    vec![lam[0] * c[0][0] + lam[1] * c[1][0] + lam[2] * c[2][0], lam[0] * c[0][1] + lam[1] * c[1][1] + lam[2] * c[2][1]]
}
