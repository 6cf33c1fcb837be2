//! Finite differences and scalar references for the objectives.

use std::f64::consts::PI;

/// Central difference of `f` along coordinate `i`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, step: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[i] += step;
    b[i] -= step;
    (f(&a) - f(&b)) / (2.0 * step)
}

pub fn numeric_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    (0..x.len()).map(|i| central_difference(f, x, i, step)).collect()
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

pub fn gaussian(d2: f64, sigma: f64) -> f64 {
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Complete IoU of `[cx, cy, w, h]` boxes from corner coordinates.
pub fn ciou(p: [f64; 4], g: [f64; 4]) -> f64 {
    let (px1, py1, px2, py2) = (p[0] - p[2] / 2.0, p[1] - p[3] / 2.0, p[0] + p[2] / 2.0, p[1] + p[3] / 2.0);
    let (gx1, gy1, gx2, gy2) = (g[0] - g[2] / 2.0, g[1] - g[3] / 2.0, g[0] + g[2] / 2.0, g[1] + g[3] / 2.0);
    let iw = (px2.min(gx2) - px1.max(gx1)).max(0.0);
    let ih = (py2.min(gy2) - py1.max(gy1)).max(0.0);
    let inter = iw * ih;
    let iou = inter / ((px2 - px1) * (py2 - py1) + (gx2 - gx1) * (gy2 - gy1) - inter);
    let diag = (px2.max(gx2) - px1.min(gx1)).powi(2) + (py2.max(gy2) - py1.min(gy1)).powi(2);
    let centre = (p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2);
    let v = 4.0 / (PI * PI) * ((g[2] / g[3]).atan() - (p[2] / p[3]).atan()).powi(2);
    let alpha = if v == 0.0 { 0.0 } else { v / ((1.0 - iou) + v) };
    iou - centre / diag - alpha * v
}

/// Positive-cell term of the center focal loss.
pub fn focal_positive(p: f64, alpha: f64) -> f64 {
    -(1.0 - p).powf(alpha) * p.ln()
}

/// Focal term for a pixel whose correct-class probability is `pt`.
pub fn focal_pixel(pt: f64, alpha: f64, gamma: f64) -> f64 {
    -alpha * (1.0 - pt).powf(gamma) * pt.ln()
}

pub fn dice(p: &[f64], g: &[f64], eps: f64) -> f64 {
    let inter: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    1.0 - (2.0 * inter + eps) / (p.iter().sum::<f64>() + g.iter().sum::<f64>() + eps)
}

/// Mean performance over relative power, with power the mean-by-`tau`
/// sum of trained-minus-untrained energies.
pub fn mept(perf: &[f64], trained: &[f64], untrained: &[f64], tau: f64) -> f64 {
    let power: f64 = trained.iter().zip(untrained).map(|(a, b)| a - b).sum::<f64>() / tau;
    perf.iter().sum::<f64>() / perf.len() as f64 / power
}
