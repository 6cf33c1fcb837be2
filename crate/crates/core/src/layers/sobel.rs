use crate::error::{shape_err, Result};
use crate::exec;
use crate::tensor::FeatureMap;

const GX: [[f64; 3]; 3] = [[-1., 0., 1.], [-2., 0., 2.], [-1., 0., 1.]];
const GY: [[f64; 3]; 3] = [[-1., -2., -1.], [0., 0., 0.], [1., 2., 1.]];

fn check(x: &FeatureMap) -> Result<()> {
    if x.height() < 3 || x.width() < 3 {
        return shape_err(format!("sobel needs H,W >= 3, got {}x{}", x.height(), x.width()));
    }
    Ok(())
}

fn response(plane: &[f32], h: usize, w: usize, y: usize, x: usize, k: &[[f64; 3]; 3]) -> f64 {
    let mut acc = 0.0;
    for (dy, krow) in k.iter().enumerate() {
        let iy = y as isize + dy as isize - 1;
        if iy < 0 || iy >= h as isize {
            continue;
        }
        for (dx, &kv) in krow.iter().enumerate() {
            let ix = x as isize + dx as isize - 1;
            if ix < 0 || ix >= w as isize {
                continue;
            }
            acc += kv * plane[iy as usize * w + ix as usize] as f64;
        }
    }
    acc
}

/// Horizontal and vertical Sobel responses, zero padded.
pub fn sobel_components(x: &FeatureMap) -> Result<(FeatureMap, FeatureMap)> {
    check(x)?;
    let (h, w, c) = (x.height(), x.width(), x.channels());
    let mut gx = FeatureMap::zeros(x.shape());
    let mut gy = FeatureMap::zeros(x.shape());
    for (out, k) in [(&mut gx, &GX), (&mut gy, &GY)] {
        exec::for_each_plane(out.data_mut(), h * w, |idx, dst| {
            let plane = x.plane(idx / c, idx % c);
            for y in 0..h {
                for xx in 0..w {
                    dst[y * w + xx] = response(plane, h, w, y, xx, k) as f32;
                }
            }
        });
    }
    Ok((gx, gy))
}

/// Per-channel gradient magnitude `sqrt(Gx^2 + Gy^2)`.
pub fn sobel(x: &FeatureMap) -> Result<FeatureMap> {
    check(x)?;
    let (h, w, c) = (x.height(), x.width(), x.channels());
    let mut out = FeatureMap::zeros(x.shape());
    exec::for_each_plane(out.data_mut(), h * w, |idx, dst| {
        let plane = x.plane(idx / c, idx % c);
        for y in 0..h {
            for xx in 0..w {
                let a = response(plane, h, w, y, xx, &GX);
                let b = response(plane, h, w, y, xx, &GY);
                dst[y * w + xx] = (a * a + b * b).sqrt() as f32;
            }
        }
    });
    Ok(out)
}
