//! Training objectives evaluated in `f64`, each returning its value and the
//! analytic gradient with respect to the predictions.

use std::f64::consts::PI;

use crate::config::parse_key_values;
use crate::error::{Error, Result};

pub const PROB_CLAMP: f64 = 1e-6;
pub const DICE_SMOOTH: f64 = 1.0;
pub const GAUSSIAN_MIN_OVERLAP: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub alpha_conf: f64,
    pub beta_conf: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub alpha_res: f64,
    pub gamma_res: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            alpha_conf: 2.0,
            beta_conf: 4.0,
            tau1: 1.0,
            tau2: 0.1,
            tau3: 1.0,
            alpha_res: 0.25,
            gamma_res: 2.0,
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

impl LossConfig {
    /// Parses `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (key, value) in parse_key_values(text)? {
            cfg.set(&key, &value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v: f64 = value
            .parse()
            .map_err(|_| Error::Parse(format!("loss config: '{key}' has non-numeric value '{value}'")))?;
        let slot = match key {
            "alpha_conf" => &mut self.alpha_conf,
            "beta_conf" => &mut self.beta_conf,
            "tau1" => &mut self.tau1,
            "tau2" => &mut self.tau2,
            "tau3" => &mut self.tau3,
            "alpha_res" => &mut self.alpha_res,
            "gamma_res" => &mut self.gamma_res,
            "lambda1" => &mut self.lambda1,
            "lambda2" => &mut self.lambda2,
            _ => return Err(Error::Parse(format!("loss config: unknown key '{key}'"))),
        };
        *slot = v;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_conf", self.alpha_conf),
            ("beta_conf", self.beta_conf),
            ("alpha_res", self.alpha_res),
            ("gamma_res", self.gamma_res),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Rendered center heatmap, row-major `h x w`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTarget {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
    /// `(x, y)` grid cells.
    pub centers: Vec<(usize, usize)>,
    pub radii: Vec<f64>,
}

/// Largest radius such that a box shifted by it still overlaps the
/// original by at least `min_overlap` IoU (three corner cases, minimum
/// taken). Sizes are in grid cells.
pub fn gaussian_radius(w: f64, h: f64, min_overlap: f64) -> f64 {
    let b1 = h + w;
    let c1 = w * h * (1.0 - min_overlap) / (1.0 + min_overlap);
    let r1 = (b1 + (b1 * b1 - 4.0 * c1).sqrt()) / 2.0;

    let a2 = 4.0;
    let b2 = 2.0 * (h + w);
    let c2 = (1.0 - min_overlap) * w * h;
    let r2 = (b2 + (b2 * b2 - 4.0 * a2 * c2).sqrt()) / 2.0;

    let a3 = 4.0 * min_overlap;
    let b3 = -2.0 * min_overlap * (h + w);
    let c3 = (min_overlap - 1.0) * w * h;
    let r3 = (b3 + (b3 * b3 - 4.0 * a3 * c3).sqrt()) / 2.0;

    r1.min(r2).min(r3)
}

/// Elementwise max over per-object Gaussians
/// `exp(-((x-cx)^2 + (y-cy)^2) / (2 sigma^2))` with `sigma = radius / 3`.
pub fn gaussian_target(centers: &[(usize, usize)], sizes: &[(f64, f64)], h: usize, w: usize) -> Result<HeatmapTarget> {
    if centers.len() != sizes.len() {
        return Err(Error::InvalidInput(format!(
            "{} centers but {} sizes",
            centers.len(),
            sizes.len()
        )));
    }
    let mut values = vec![0f64; h * w];
    let mut radii = Vec::with_capacity(centers.len());
    for (&(cx, cy), &(bw, bh)) in centers.iter().zip(sizes) {
        if cx >= w || cy >= h {
            return Err(Error::InvalidInput(format!("center ({cx}, {cy}) outside {w}x{h} grid")));
        }
        if !(bw > 0.0 && bh > 0.0) {
            return Err(Error::InvalidInput(format!("object size {bw}x{bh} must be positive")));
        }
        let radius = gaussian_radius(bw, bh, GAUSSIAN_MIN_OVERLAP);
        let sigma = (radius / 3.0).max(f64::MIN_POSITIVE);
        let denom = 2.0 * sigma * sigma;
        for y in 0..h {
            for x in 0..w {
                let dx = x as f64 - cx as f64;
                let dy = y as f64 - cy as f64;
                let g = (-(dx * dx + dy * dy) / denom).exp();
                let slot = &mut values[y * w + x];
                if g > *slot {
                    *slot = g;
                }
            }
        }
        radii.push(radius);
    }
    Ok(HeatmapTarget {
        height: h,
        width: w,
        values,
        centers: centers.to_vec(),
        radii,
    })
}

/// Penalty-reduced focal loss over the center heatmap. `N` is the number of
/// cells with target exactly 1 (at least 1).
pub fn conf_loss(pred: &[f64], target: &[f64], cfg: &LossConfig) -> Result<LossValue> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::InvalidInput(format!(
            "conf_loss: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let (a, b) = (cfg.alpha_conf, cfg.beta_conf);
    let n = target.iter().filter(|&&y| y == 1.0).count().max(1) as f64;
    let mut clamped = 0usize;
    let mut sum = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (i, (&p_raw, &y)) in pred.iter().zip(target).enumerate() {
        let p = p_raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let inside = p == p_raw;
        if !inside {
            clamped += 1;
        }
        let (term, dterm) = if y == 1.0 {
            let q = 1.0 - p;
            let t = q.powf(a) * p.ln();
            let dt = -a * pow_m1(q, a) * p.ln() + q.powf(a) / p;
            (t, dt)
        } else {
            let wgt = (1.0 - y).powf(b);
            let l = (1.0 - p).ln();
            let t = wgt * p.powf(a) * l;
            let dt = wgt * (a * pow_m1(p, a) * l - p.powf(a) / (1.0 - p));
            (t, dt)
        };
        sum += term;
        if inside {
            grad[i] = -dterm / n;
        }
    }
    if clamped > 0 {
        log::debug!("conf_loss: clamped {clamped} predictions into [{PROB_CLAMP}, 1 - {PROB_CLAMP}]");
    }
    Ok(LossValue { value: -sum / n, grad })
}

/// `x^(a-1)` with the convention `0^0 = 1` and `a * 0^(a-1) = 0` for `a = 0`.
fn pow_m1(x: f64, a: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        x.powf(a - 1.0)
    }
}

/// L1 loss between predicted sub-cell offsets at each object's cell and
/// `p / R - floor(p / R)`. `pred` is laid out `(2, h, w)` with x then y;
/// `centers` are image-pixel `(x, y)`. Normalized by `2N`.
pub fn offset_loss(pred: &[f64], h: usize, w: usize, centers: &[(f64, f64)], downsample: usize) -> Result<LossValue> {
    if pred.len() != 2 * h * w {
        return Err(Error::InvalidInput(format!(
            "offset_loss: prediction length {} != 2*{h}*{w}",
            pred.len()
        )));
    }
    let mut grad = vec![0.0; pred.len()];
    if centers.is_empty() {
        return Ok(LossValue { value: 0.0, grad });
    }
    let r = downsample as f64;
    let norm = 2.0 * centers.len() as f64;
    let mut sum = 0.0;
    for &(px, py) in centers {
        let (sx, sy) = (px / r, py / r);
        let (gx, gy) = (sx.floor(), sy.floor());
        if gx < 0.0 || gy < 0.0 || gx as usize >= w || gy as usize >= h {
            return Err(Error::InvalidInput(format!("center ({px}, {py}) falls outside the {w}x{h} grid")));
        }
        let cell = gy as usize * w + gx as usize;
        for (ch, target) in [(0usize, sx - gx), (1, sy - gy)] {
            let d = pred[ch * h * w + cell] - target;
            sum += d.abs();
            grad[ch * h * w + cell] += d.signum() * (d != 0.0) as u8 as f64 / norm;
        }
    }
    Ok(LossValue { value: sum / norm, grad })
}

/// Sub-cell target offset `p / R - floor(p / R)` for an image-pixel point.
pub fn offset_target(p: (f64, f64), downsample: usize) -> ((usize, usize), (f64, f64)) {
    let r = downsample as f64;
    let (sx, sy) = (p.0 / r, p.1 / r);
    ((sx.floor() as usize, sy.floor() as usize), (sx - sx.floor(), sy - sy.floor()))
}

/// Complete IoU of center-format boxes `[cx, cy, w, h]` and its gradient
/// with respect to the first box.
pub fn ciou(pred: [f64; 4], gt: [f64; 4]) -> (f64, [f64; 4]) {
    let [cx, cy, w, h] = pred;
    let [gcx, gcy, gw, gh] = gt;
    // d/d(cx, cy, w, h) of each edge
    let dx1 = [1.0, 0.0, -0.5, 0.0];
    let dx2 = [1.0, 0.0, 0.5, 0.0];
    let dy1 = [0.0, 1.0, 0.0, -0.5];
    let dy2 = [0.0, 1.0, 0.0, 0.5];
    let zero = [0.0; 4];
    let (x1, x2, y1, y2) = (cx - w / 2.0, cx + w / 2.0, cy - h / 2.0, cy + h / 2.0);
    let (gx1, gx2, gy1, gy2) = (gcx - gw / 2.0, gcx + gw / 2.0, gcy - gh / 2.0, gcy + gh / 2.0);

    let sub = |a: [f64; 4], b: [f64; 4]| [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]];
    let lin = |s: f64, a: [f64; 4], t: f64, b: [f64; 4]| {
        [
            s * a[0] + t * b[0],
            s * a[1] + t * b[1],
            s * a[2] + t * b[2],
            s * a[3] + t * b[3],
        ]
    };

    // intersection extents
    let (imin_x, dimin_x) = if x2 < gx2 { (x2, dx2) } else { (gx2, zero) };
    let (imax_x, dimax_x) = if x1 > gx1 { (x1, dx1) } else { (gx1, zero) };
    let (imin_y, dimin_y) = if y2 < gy2 { (y2, dy2) } else { (gy2, zero) };
    let (imax_y, dimax_y) = if y1 > gy1 { (y1, dy1) } else { (gy1, zero) };
    let (iw, diw) = if imin_x > imax_x { (imin_x - imax_x, sub(dimin_x, dimax_x)) } else { (0.0, zero) };
    let (ih, dih) = if imin_y > imax_y { (imin_y - imax_y, sub(dimin_y, dimax_y)) } else { (0.0, zero) };

    let inter = iw * ih;
    let dinter = lin(ih, diw, iw, dih);
    let union = w * h + gw * gh - inter;
    let dunion = sub([0.0, 0.0, h, w], dinter);
    let iou = inter / union;
    let diou = lin(1.0 / union, dinter, -inter / (union * union), dunion);

    // enclosing box
    let (emax_x, demax_x) = if x2 > gx2 { (x2, dx2) } else { (gx2, zero) };
    let (emin_x, demin_x) = if x1 < gx1 { (x1, dx1) } else { (gx1, zero) };
    let (emax_y, demax_y) = if y2 > gy2 { (y2, dy2) } else { (gy2, zero) };
    let (emin_y, demin_y) = if y1 < gy1 { (y1, dy1) } else { (gy1, zero) };
    let (cw, dcw) = (emax_x - emin_x, sub(demax_x, demin_x));
    let (ch, dch) = (emax_y - emin_y, sub(demax_y, demin_y));
    let c2 = cw * cw + ch * ch;
    let dc2 = lin(2.0 * cw, dcw, 2.0 * ch, dch);

    let rho2 = (cx - gcx).powi(2) + (cy - gcy).powi(2);
    let drho2 = [2.0 * (cx - gcx), 2.0 * (cy - gcy), 0.0, 0.0];
    let dist = rho2 / c2;
    let ddist = lin(1.0 / c2, drho2, -rho2 / (c2 * c2), dc2);

    let k = 4.0 / (PI * PI);
    let angle = (gw / gh).atan() - (w / h).atan();
    let v = k * angle * angle;
    // d atan(w/h) = (h dw - w dh) / (w^2 + h^2)
    let r = w * w + h * h;
    let datan = [0.0, 0.0, h / r, -w / r];
    let dv = datan.map(|d| -2.0 * k * angle * d);

    let s = 1.0 - iou;
    let (penalty, dpenalty) = if v == 0.0 || s + v == 0.0 {
        (0.0, zero)
    } else {
        // alpha * v = v^2 / (s + v)
        let den = s + v;
        let ds = diou.map(|d| -d);
        let p = v * v / den;
        let dp = [0, 1, 2, 3].map(|i| (2.0 * v * dv[i] * den - v * v * (ds[i] + dv[i])) / (den * den));
        (p, dp)
    };

    let value = iou - dist - penalty;
    let grad = [0, 1, 2, 3].map(|i| diou[i] - ddist[i] - dpenalty[i]);
    (value, grad)
}

/// Mean `1 - CIoU` over paired boxes; gradient laid out 4 per box.
pub fn ciou_wh_loss(pred: &[[f64; 4]], gt: &[[f64; 4]]) -> Result<LossValue> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidInput(format!(
            "ciou: {} predictions vs {} targets",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Ok(LossValue {
            value: 0.0,
            grad: Vec::new(),
        });
    }
    for (i, (p, g)) in pred.iter().zip(gt).enumerate() {
        if !(g[2] > 0.0 && g[3] > 0.0) {
            return Err(Error::InvalidInput(format!("ground-truth box {i} has zero area")));
        }
        if !(p[2] > 0.0 && p[3] > 0.0) {
            return Err(Error::InvalidInput(format!("predicted box {i} has non-positive size")));
        }
    }
    let n = pred.len() as f64;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(4 * pred.len());
    for (p, g) in pred.iter().zip(gt) {
        let (c, dc) = ciou(*p, *g);
        value += 1.0 - c;
        grad.extend(dc.iter().map(|d| -d / n));
    }
    Ok(LossValue { value: value / n, grad })
}

/// `1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps)`.
pub fn dice_loss(p: &[f64], g: &[f64]) -> Result<LossValue> {
    if p.is_empty() || p.len() != g.len() {
        return Err(Error::InvalidInput(format!(
            "dice_loss: {} predictions vs {} targets",
            p.len(),
            g.len()
        )));
    }
    let inter: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    let num = 2.0 * inter + DICE_SMOOTH;
    let den = p.iter().sum::<f64>() + g.iter().sum::<f64>() + DICE_SMOOTH;
    let grad = g.iter().map(|&gi| -(2.0 * gi * den - num) / (den * den)).collect();
    Ok(LossValue {
        value: 1.0 - num / den,
        grad,
    })
}

/// Mean over pixels of `-alpha (1 - p_t)^gamma log(p_t)`, with `p_t = p`
/// on foreground and `1 - p` on background.
pub fn focal_seg_loss(p: &[f64], g: &[f64], cfg: &LossConfig) -> Result<LossValue> {
    if p.is_empty() || p.len() != g.len() {
        return Err(Error::InvalidInput(format!(
            "focal_seg_loss: {} predictions vs {} targets",
            p.len(),
            g.len()
        )));
    }
    let (alpha, gamma) = (cfg.alpha_res, cfg.gamma_res);
    let n = p.len() as f64;
    let mut sum = 0.0;
    let mut grad = Vec::with_capacity(p.len());
    for (&pr, &gi) in p.iter().zip(g) {
        let pc = pr.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        let fg = gi >= 0.5;
        let pt = if fg { pc } else { 1.0 - pc };
        let q = 1.0 - pt;
        sum += -alpha * q.powf(gamma) * pt.ln();
        let dpt = alpha * (gamma * pow_m1(q, gamma) * pt.ln() - q.powf(gamma) / pt);
        let d = if pc != pr {
            0.0
        } else if fg {
            dpt
        } else {
            -dpt
        };
        grad.push(d / n);
    }
    Ok(LossValue { value: sum / n, grad })
}

pub fn rec_loss(conf: f64, offset: f64, wh: f64, cfg: &LossConfig) -> f64 {
    cfg.tau1 * conf + cfg.tau2 * offset + cfg.tau3 * wh
}

pub fn res_loss(dice: f64, focal: f64, cfg: &LossConfig) -> f64 {
    cfg.lambda1 * dice + cfg.lambda2 * focal
}

/// Task-uncertainty weights, stored as `log sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyWeights {
    pub log_sigma1: f64,
    pub log_sigma2: f64,
}

impl Default for UncertaintyWeights {
    fn default() -> Self {
        Self {
            log_sigma1: 0.0,
            log_sigma2: 0.0,
        }
    }
}

impl UncertaintyWeights {
    pub fn from_sigmas(sigma1: f64, sigma2: f64) -> Result<Self> {
        if !(sigma1 > 0.0 && sigma2 > 0.0) {
            return Err(Error::InvalidParam(format!(
                "uncertainty sigmas must be positive, got {sigma1}, {sigma2}"
            )));
        }
        Ok(Self {
            log_sigma1: sigma1.ln(),
            log_sigma2: sigma2.ln(),
        })
    }

    pub fn sigma1(&self) -> f64 {
        self.log_sigma1.exp()
    }

    pub fn sigma2(&self) -> f64 {
        self.log_sigma2.exp()
    }
}

/// `L_rec / (2 s1^2) + L_res / (2 s2^2) + log s1 + log s2`.
pub fn total_loss(l_rec: f64, l_res: f64, u: &UncertaintyWeights) -> f64 {
    let (s1, s2) = (u.sigma1(), u.sigma2());
    l_rec / (2.0 * s1 * s1) + l_res / (2.0 * s2 * s2) + u.log_sigma1 + u.log_sigma2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conf_single_positive() {
        let l = conf_loss(&[0.5], &[1.0], &LossConfig::default()).unwrap();
        assert!((l.value - 0.25 * 2f64.ln()).abs() < 1e-12);
        assert!((l.value - 0.1733).abs() < 1e-4);
    }

    #[test]
    fn conf_perfect_prediction() {
        let t = gaussian_target(&[(3, 4)], &[(4.0, 6.0)], 8, 8).unwrap();
        let pred: Vec<f64> = t.values.iter().map(|&y| if y == 1.0 { 1.0 } else { 0.0 }).collect();
        let l = conf_loss(&pred, &t.values, &LossConfig::default()).unwrap();
        assert!(l.value >= 0.0 && l.value <= 1e-4, "{}", l.value);
    }

    #[test]
    fn offset_hand_case() {
        let (h, w) = (16, 16);
        let ((gx, gy), (tx, ty)) = offset_target((41.2, 49.6), 4);
        assert_eq!((gx, gy), (10, 12));
        assert!((tx - 0.3).abs() < 1e-9 && (ty - 0.4).abs() < 1e-9);
        let mut pred = vec![0.0; 2 * h * w];
        pred[gy * w + gx] = tx;
        pred[h * w + gy * w + gx] = ty;
        assert!(offset_loss(&pred, h, w, &[(41.2, 49.6)], 4).unwrap().value.abs() < 1e-12);
        pred[gy * w + gx] = tx + 0.1;
        pred[h * w + gy * w + gx] = ty - 0.1;
        assert!((offset_loss(&pred, h, w, &[(41.2, 49.6)], 4).unwrap().value - 0.1).abs() < 1e-12);
        assert_eq!(offset_loss(&pred, h, w, &[], 4).unwrap().value, 0.0);
    }

    #[test]
    fn ciou_identity_and_far_apart() {
        let b = [5.0, 6.0, 3.0, 2.0];
        let l = ciou_wh_loss(&[b], &[b]).unwrap();
        assert!(l.value.abs() < 1e-12);
        let far = ciou_wh_loss(&[[0.0, 0.0, 1.0, 1.0]], &[[10.0, 0.0, 1.0, 1.0]]).unwrap();
        assert!((far.value - (1.0 + 100.0 / 122.0)).abs() < 1e-12);
        assert!(ciou_wh_loss(&[b], &[[0.0, 0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn dice_cases() {
        let l = dice_loss(&[0.0; 100], &[1.0; 100]).unwrap();
        assert!((l.value - (1.0 - 1.0 / 101.0)).abs() < 1e-12);
        assert!((l.value - 0.9901).abs() < 1e-4);
        let g: Vec<f64> = (0..1000).map(|i| (i % 3 == 0) as u8 as f64).collect();
        assert!(dice_loss(&g, &g).unwrap().value <= 1e-3);
        assert!(dice_loss(&[], &[]).is_err());
    }

    #[test]
    fn focal_cases() {
        let cfg = LossConfig::default();
        let l = focal_seg_loss(&[0.5], &[1.0], &cfg).unwrap();
        assert!((l.value - 0.0625 * 2f64.ln()).abs() < 1e-12);
        assert!((l.value - 0.0433).abs() < 1e-4);
        let confident = focal_seg_loss(&[1.0 - 1e-6, 1e-6], &[1.0, 0.0], &cfg).unwrap();
        assert!(confident.value < 1e-12);
    }

    #[test]
    fn total_loss_cases() {
        let u = UncertaintyWeights::default();
        assert_eq!(total_loss(3.0, 5.0, &u), 0.5 * 3.0 + 0.5 * 5.0);
        let u = UncertaintyWeights::from_sigmas(1.0, 2.0).unwrap();
        assert!((total_loss(2.0, 4.0, &u) - (1.5 + 2f64.ln())).abs() < 1e-12);
        assert!((total_loss(2.0, 4.0, &u) - 2.1931).abs() < 1e-4);
        assert!(UncertaintyWeights::from_sigmas(0.0, 1.0).is_err());
    }

    #[test]
    fn config_defaults_and_parse() {
        let d = LossConfig::default();
        assert_eq!((d.tau1, d.tau2, d.tau3), (1.0, 0.1, 1.0));
        assert_eq!((d.lambda1, d.lambda2), (1.0, 1.0));
        let c = LossConfig::parse("# comment\ntau2 = 0.5\ngamma_res=3\n").unwrap();
        assert_eq!((c.tau2, c.gamma_res), (0.5, 3.0));
        assert!(LossConfig::parse("bogus = 1").is_err());
        assert!(LossConfig::parse("alpha_conf = -1").is_err());
    }

    #[test]
    fn gaussian_center_is_one() {
        let t = gaussian_target(&[(2, 3), (6, 6)], &[(3.0, 3.0), (5.0, 2.0)], 8, 9).unwrap();
        assert_eq!(t.values[3 * 9 + 2], 1.0);
        assert_eq!(t.values[6 * 9 + 6], 1.0);
        assert!(t.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(gaussian_target(&[(9, 0)], &[(1.0, 1.0)], 8, 9).is_err());
    }
}
