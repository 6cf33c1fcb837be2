use crate::error::{shape_err, Result};
use crate::exec;
use crate::tensor::FeatureMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpsampleMode {
    Nearest,
    /// Half-pixel centers (`align_corners = false`), edge-clamped.
    Bilinear,
}

pub fn upsample(x: &FeatureMap, factor: usize, mode: UpsampleMode) -> Result<FeatureMap> {
    if factor < 1 {
        return shape_err("upsample factor must be >= 1");
    }
    if factor == 1 {
        return Ok(x.clone());
    }
    let [n, c, h, w] = x.shape();
    let (ho, wo) = (h * factor, w * factor);
    let mut out = FeatureMap::zeros([n, c, ho, wo]);
    // source coordinate and the two taps along one axis
    let taps = |len: usize| -> Vec<(usize, usize, f64)> {
        (0..len * factor)
            .map(|d| {
                let src = ((d as f64 + 0.5) / factor as f64 - 0.5).max(0.0);
                let i0 = (src.floor() as usize).min(len - 1);
                let i1 = (i0 + 1).min(len - 1);
                (i0, i1, src - i0 as f64)
            })
            .collect()
    };
    let (ty, tx) = (taps(h), taps(w));
    exec::for_each_plane(out.data_mut(), ho * wo, |idx, dst| {
        let src = x.plane(idx / c, idx % c);
        for oy in 0..ho {
            for ox in 0..wo {
                dst[oy * wo + ox] = match mode {
                    UpsampleMode::Nearest => src[(oy / factor) * w + ox / factor],
                    UpsampleMode::Bilinear => {
                        let (y0, y1, ly) = ty[oy];
                        let (x0, x1, lx) = tx[ox];
                        let v = |yy: usize, xx: usize| src[yy * w + xx] as f64;
                        ((1.0 - ly) * ((1.0 - lx) * v(y0, x0) + lx * v(y0, x1))
                            + ly * ((1.0 - lx) * v(y1, x0) + lx * v(y1, x1))) as f32
                    }
                };
            }
        }
    });
    Ok(out)
}

/// Bilinear read of an `h x w` plane at real coordinates; samples whose
/// corners fall outside the plane read those corners as zero, and points
/// at or beyond one pixel outside read zero entirely.
#[inline]
pub fn sample_bilinear_zero(plane: &[f32], h: usize, w: usize, y: f64, x: f64) -> f64 {
    if y <= -1.0 || y >= h as f64 || x <= -1.0 || x >= w as f64 {
        return 0.0;
    }
    let y0 = y.floor();
    let x0 = x.floor();
    let (ly, lx) = (y - y0, x - x0);
    let (y0, x0) = (y0 as isize, x0 as isize);
    let get = |yy: isize, xx: isize| {
        if yy < 0 || xx < 0 || yy >= h as isize || xx >= w as isize {
            0.0
        } else {
            plane[yy as usize * w + xx as usize] as f64
        }
    };
    (1.0 - ly) * (1.0 - lx) * get(y0, x0)
        + (1.0 - ly) * lx * get(y0, x0 + 1)
        + ly * (1.0 - lx) * get(y0 + 1, x0)
        + ly * lx * get(y0 + 1, x0 + 1)
}
