//! Plain SVG rendering of grid densities and absorbing regions.

use std::fmt::Write as _;

use crate::absorbing::Region2D;
use crate::operators::GridDensity;

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

// viridis anchors
const STOPS: [[f64; 3]; 5] = [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];

fn color(u: f64) -> String {
    let u = if u.is_finite() { u.clamp(0.0, 1.0) } else { 0.0 };
    let s = u * (STOPS.len() - 1) as f64;
    let k = (s.floor() as usize).min(STOPS.len() - 2);
    let f = s - k as f64;
    let c: Vec<u8> = (0..3).map(|j| (STOPS[k][j] + f * (STOPS[k + 1][j] - STOPS[k][j])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn to_px(p: [f64; 2]) -> (f64, f64) {
    (PAD + p[0] * SIZE, PAD + (1.0 - p[1]) * SIZE)
}

fn header(out: &mut String, title: &str) {
    let w = SIZE + 2.0 * PAD;
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#);
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn normalized(values: &[f64], scale: Scale) -> Vec<f64> {
    let v: Vec<f64> = match scale {
        Scale::Linear => values.to_vec(),
        Scale::Log => {
            let floor = values.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
            let floor = if floor.is_finite() { floor } else { 1.0 };
            values.iter().map(|v| v.max(floor).ln()).collect()
        }
    };
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    v.iter().map(|x| (x - lo) / span).collect()
}

/// Heatmap of density values (mass / cell volume): triangles for d = 2, bars for d = 1.
pub fn density_svg(g: &GridDensity, scale: Scale, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let values = g.values();
    let u = normalized(&values, scale);
    let grid = &g.grid;
    if grid.dim() == 1 {
        let m = grid.resolution() as f64;
        let hi = values.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        for (k, v) in values.iter().enumerate() {
            let h = match scale {
                Scale::Linear => v / hi,
                Scale::Log => u[k].max(0.02),
            };
            let x = PAD + k as f64 / m * SIZE;
            let _ = writeln!(
                out,
                r#"<rect x="{x:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                PAD + (1.0 - h) * SIZE,
                SIZE / m,
                h * SIZE,
                color(u[k])
            );
        }
    } else {
        for id in 0..grid.len() {
            let pts: Vec<String> = grid
                .corners(id)
                .into_iter()
                .map(|c| {
                    let (x, y) = to_px(c);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let fill = color(u[id]);
            let _ = writeln!(out, r#"<polygon points="{}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#, pts.join(" "));
        }
        outline(&mut out);
    }
    out.push_str("</svg>\n");
    out
}

fn outline(out: &mut String) {
    let pts: Vec<String> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        .into_iter()
        .map(|c| {
            let (x, y) = to_px(c);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="black" stroke-width="1"/>"#, pts.join(" "));
}

/// Successive regions K_0, K_1, ... drawn from last to first, lightest to darkest.
pub fn regions_svg(stages: &[Region2D], title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = stages.len().max(1);
    for (k, region) in stages.iter().enumerate().rev() {
        let fill = color(0.25 + 0.7 * k as f64 / n as f64);
        let mut d = String::new();
        for ring in &region.rings {
            for (j, p) in ring.iter().enumerate() {
                let (x, y) = to_px(*p);
                let _ = write!(d, "{}{x:.3},{y:.3} ", if j == 0 { "M" } else { "L" });
            }
            d.push_str("Z ");
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="{fill}" fill-opacity="0.55" fill-rule="evenodd" stroke="black" stroke-width="0.6"><title>K_{k}</title></path>"#,
            d.trim_end()
        );
    }
    outline(&mut out);
    out.push_str("</svg>\n");
    out
}
