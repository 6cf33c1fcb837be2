use crate::error::{shape_err, Error, Result};
use crate::tensor::FeatureMap;

/// Smallest decoded width/height, in heatmap cells.
pub const MIN_BOX_SIDE: f32 = 1e-3;

/// Center-format box in image pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionBox {
    pub cx: f32,
    pub cy: f32,
    pub w: f32,
    pub h: f32,
    pub score: f32,
}

impl DetectionBox {
    pub fn new(cx: f32, cy: f32, w: f32, h: f32, score: f32) -> Self {
        Self { cx, cy, w, h, score }
    }

    pub fn area(&self) -> f32 {
        self.w * self.h
    }

    /// `(x1, y1, x2, y2)`.
    pub fn corners(&self) -> (f32, f32, f32, f32) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }
}

/// A cell is a peak when it is `>=` every 3x3 neighbour and, among
/// neighbours with an equal score, has the smallest flat index.
pub fn is_peak(plane: &[f32], h: usize, w: usize, y: usize, x: usize) -> bool {
    let v = plane[y * w + x];
    let idx = y * w + x;
    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
        for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
            let nidx = ny * w + nx;
            if nidx == idx {
                continue;
            }
            let nv = plane[nidx];
            if nv > v || (nv == v && nidx < idx) {
                return false;
            }
        }
    }
    true
}

/// Extracts up to `k` boxes from single-item head outputs.
pub fn decode_boxes(
    heatmap: &FeatureMap,
    wh: &FeatureMap,
    offset: &FeatureMap,
    downsample: usize,
    k: usize,
    score_thresh: f32,
) -> Result<Vec<DetectionBox>> {
    if k == 0 {
        return Err(Error::InvalidParam("top-k must be positive".into()));
    }
    let [n, c, h, w] = heatmap.shape();
    if n != 1 || c != 1 {
        return shape_err(format!("heatmap must be (1, 1, h, w), got {:?}", heatmap.shape()));
    }
    if wh.shape() != [1, 2, h, w] || offset.shape() != [1, 2, h, w] {
        return shape_err(format!(
            "wh {:?} / offset {:?} must be (1, 2, {h}, {w})",
            wh.shape(),
            offset.shape()
        ));
    }
    let plane = heatmap.plane(0, 0);
    let mut peaks: Vec<(usize, f32)> = (0..h * w)
        .filter(|&i| plane[i] >= score_thresh && is_peak(plane, h, w, i / w, i % w))
        .map(|i| (i, plane[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    peaks.truncate(k);

    let r = downsample as f32;
    Ok(peaks
        .into_iter()
        .map(|(i, score)| {
            let (y, x) = (i / w, i % w);
            DetectionBox {
                cx: (x as f32 + offset.plane(0, 0)[i]) * r,
                cy: (y as f32 + offset.plane(0, 1)[i]) * r,
                w: wh.plane(0, 0)[i].max(MIN_BOX_SIDE) * r,
                h: wh.plane(0, 1)[i].max(MIN_BOX_SIDE) * r,
                score,
            }
        })
        .collect())
}
