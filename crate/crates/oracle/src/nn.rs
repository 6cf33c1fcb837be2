//! Primitive layers on `(C, H, W)` volumes.

/// Single-item `(C, H, W)` volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Volume {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![0.0; c * h * w],
        }
    }

    pub fn from_f32(c: usize, h: usize, w: usize, data: &[f32]) -> Self {
        assert_eq!(data.len(), c * h * w, "volume size");
        Self {
            c,
            h,
            w,
            data: data.iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }

    /// Zero outside the spatial extent.
    pub fn get_padded(&self, c: usize, y: isize, x: isize) -> f64 {
        if y < 0 || x < 0 || y >= self.h as isize || x >= self.w as isize {
            0.0
        } else {
            self.get(c, y as usize, x as usize)
        }
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.h + y) * self.w + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Volume {
        Volume {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn zip(&self, o: &Volume, f: impl Fn(f64, f64) -> f64) -> Volume {
        assert_eq!((self.c, self.h, self.w), (o.c, o.h, o.w), "volume shapes");
        Volume {
            data: self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect(),
            ..*self
        }
    }

    pub fn add(&self, o: &Volume) -> Volume {
        self.zip(o, |a, b| a + b)
    }

    pub fn max_abs_diff_f32(&self, other: &[f32]) -> f64 {
        assert_eq!(self.data.len(), other.len(), "comparison length");
        self.data
            .iter()
            .zip(other)
            .map(|(&a, &b)| (a - b as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// Square-kernel convolution: weight `(c_out, c_in / groups, k, k)`.
#[derive(Debug, Clone)]
pub struct Conv {
    pub c_in: usize,
    pub c_out: usize,
    pub k: usize,
    pub stride: usize,
    pub pad: usize,
    pub groups: usize,
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl Conv {
    pub fn w(&self, co: usize, ci: usize, ky: usize, kx: usize) -> f64 {
        let cig = self.c_in / self.groups;
        self.weight[((co * cig + ci) * self.k + ky) * self.k + kx]
    }

    pub fn out_size(&self, n: usize) -> usize {
        (n + 2 * self.pad - self.k) / self.stride + 1
    }
}

pub fn conv(x: &Volume, p: &Conv) -> Volume {
    assert_eq!(x.c, p.c_in, "conv input channels");
    let (ho, wo) = (p.out_size(x.h), p.out_size(x.w));
    let cig = p.c_in / p.groups;
    let cog = p.c_out / p.groups;
    let mut out = Volume::zeros(p.c_out, ho, wo);
    for co in 0..p.c_out {
        let g = co / cog;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut s = p.bias.as_ref().map_or(0.0, |b| b[co]);
                for ci in 0..cig {
                    for ky in 0..p.k {
                        for kx in 0..p.k {
                            let iy = (oy * p.stride + ky) as isize - p.pad as isize;
                            let ix = (ox * p.stride + kx) as isize - p.pad as isize;
                            s += p.w(co, ci, ky, kx) * x.get_padded(g * cig + ci, iy, ix);
                        }
                    }
                }
                out.set(co, oy, ox, s);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Bn {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub eps: f64,
}

pub fn bn(x: &Volume, p: &Bn) -> Volume {
    let mut out = x.clone();
    for c in 0..x.c {
        for y in 0..x.h {
            for xx in 0..x.w {
                let v = (x.get(c, y, xx) - p.mean[c]) / (p.var[c] + p.eps).sqrt() * p.gamma[c] + p.beta[c];
                out.set(c, y, xx, v);
            }
        }
    }
    out
}

pub fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn silu(v: f64) -> f64 {
    v * sigmoid(v)
}

/// Gradient magnitude with the standard 3x3 Sobel pair, zero padded.
pub fn sobel(x: &Volume) -> Volume {
    let gx = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let gy = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
    let mut out = Volume::zeros(x.c, x.h, x.w);
    for c in 0..x.c {
        for y in 0..x.h {
            for xx in 0..x.w {
                let (mut a, mut b) = (0.0, 0.0);
                for i in 0..3 {
                    for j in 0..3 {
                        let v = x.get_padded(c, y as isize + i as isize - 1, xx as isize + j as isize - 1);
                        a += gx[i][j] * v;
                        b += gy[i][j] * v;
                    }
                }
                out.set(c, y, xx, (a * a + b * b).sqrt());
            }
        }
    }
    out
}

/// Bilinear read at `(y, x)` where each of the four neighbours outside the
/// grid contributes zero.
pub fn bilinear_zero(x: &Volume, c: usize, y: f64, xf: f64) -> f64 {
    let y0 = y.floor() as isize;
    let x0 = xf.floor() as isize;
    let fy = y - y0 as f64;
    let fx = xf - x0 as f64;
    let mut s = 0.0;
    for (dy, wy) in [(0isize, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0isize, 1.0 - fx), (1, fx)] {
            s += wy * wx * x.get_padded(c, y0 + dy, x0 + dx);
        }
    }
    s
}

/// 3x3 deformable convolution (stride and padding from `main`). `offsets`
/// has 18 channels: `(dy, dx)` of tap `k = ky * 3 + kx` at `2k`, `2k + 1`.
pub fn deform(x: &Volume, offsets: &Volume, main: &Conv) -> Volume {
    assert_eq!(main.k, 3, "deform kernel");
    let (ho, wo) = (main.out_size(x.h), main.out_size(x.w));
    let cig = main.c_in / main.groups;
    let cog = main.c_out / main.groups;
    let mut out = Volume::zeros(main.c_out, ho, wo);
    for co in 0..main.c_out {
        let g = co / cog;
        for oy in 0..ho {
            for ox in 0..wo {
                let mut s = main.bias.as_ref().map_or(0.0, |b| b[co]);
                for ky in 0..3 {
                    for kx in 0..3 {
                        let k = ky * 3 + kx;
                        let py = (oy * main.stride + ky) as f64 - main.pad as f64 + offsets.get(2 * k, oy, ox);
                        let px = (ox * main.stride + kx) as f64 - main.pad as f64 + offsets.get(2 * k + 1, oy, ox);
                        for ci in 0..cig {
                            s += main.w(co, ci, ky, kx) * bilinear_zero(x, g * cig + ci, py, px);
                        }
                    }
                }
                out.set(co, oy, ox, s);
            }
        }
    }
    out
}

/// Efficient channel attention: global average, odd 1-D kernel across
/// channels with zero padding, sigmoid, channel-wise scale.
pub fn eca(x: &Volume, kernel: &[f64]) -> Volume {
    let n = (x.h * x.w) as f64;
    let avg: Vec<f64> = (0..x.c)
        .map(|c| {
            let mut s = 0.0;
            for y in 0..x.h {
                for xx in 0..x.w {
                    s += x.get(c, y, xx);
                }
            }
            s / n
        })
        .collect();
    let half = (kernel.len() / 2) as isize;
    let mut out = x.clone();
    for c in 0..x.c {
        let mut z = 0.0;
        for (t, &kv) in kernel.iter().enumerate() {
            let src = c as isize + t as isize - half;
            if src >= 0 && (src as usize) < x.c {
                z += kv * avg[src as usize];
            }
        }
        let g = sigmoid(z);
        for y in 0..x.h {
            for xx in 0..x.w {
                out.set(c, y, xx, x.get(c, y, xx) * g);
            }
        }
    }
    out
}

/// Row-wise 1-D max pooling without padding.
pub fn maxpool_rows(rows: &[Vec<f64>], k: usize, s: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let mut out = Vec::new();
            let mut start = 0;
            while start + k <= r.len() {
                out.push(r[start..start + k].iter().copied().fold(f64::NEG_INFINITY, f64::max));
                start += s;
            }
            out
        })
        .collect()
}

pub fn upsample_nearest(x: &Volume, f: usize) -> Volume {
    let mut out = Volume::zeros(x.c, x.h * f, x.w * f);
    for c in 0..x.c {
        for y in 0..x.h * f {
            for xx in 0..x.w * f {
                out.set(c, y, xx, x.get(c, y / f, xx / f));
            }
        }
    }
    out
}

/// Half-pixel bilinear upsampling with clamped edges.
pub fn upsample_bilinear(x: &Volume, f: usize) -> Volume {
    let mut out = Volume::zeros(x.c, x.h * f, x.w * f);
    let coord = |o: usize, n: usize| -> (usize, usize, f64) {
        let s = ((o as f64 + 0.5) / f as f64 - 0.5).max(0.0);
        let lo = (s.floor() as usize).min(n - 1);
        let hi = if lo + 1 < n { lo + 1 } else { n - 1 };
        (lo, hi, s - lo as f64)
    };
    for c in 0..x.c {
        for y in 0..x.h * f {
            let (y0, y1, ty) = coord(y, x.h);
            for xx in 0..x.w * f {
                let (x0, x1, tx) = coord(xx, x.w);
                let top = x.get(c, y0, x0) * (1.0 - tx) + x.get(c, y0, x1) * tx;
                let bot = x.get(c, y1, x0) * (1.0 - tx) + x.get(c, y1, x1) * tx;
                out.set(c, y, xx, top * (1.0 - ty) + bot * ty);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_counts_valid_taps() {
        let x = Volume {
            c: 1,
            h: 3,
            w: 3,
            data: vec![1.0; 9],
        };
        let p = Conv {
            c_in: 1,
            c_out: 1,
            k: 3,
            stride: 1,
            pad: 1,
            groups: 1,
            weight: vec![1.0; 9],
            bias: None,
        };
        let y = conv(&x, &p);
        assert_eq!(y.data, vec![4.0, 6.0, 4.0, 6.0, 9.0, 6.0, 4.0, 6.0, 4.0]);
    }

    #[test]
    fn bilinear_integer_points_are_exact() {
        let x = Volume {
            c: 1,
            h: 2,
            w: 2,
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        assert_eq!(bilinear_zero(&x, 0, 1.0, 1.0), 4.0);
        assert_eq!(bilinear_zero(&x, 0, 0.5, 0.5), 2.5);
        assert_eq!(bilinear_zero(&x, 0, -1.0, 0.0), 0.0);
    }

    #[test]
    fn pool_lengths() {
        let r = maxpool_rows(&[vec![1.0, 5.0, 2.0, 4.0, 3.0]], 3, 2);
        assert_eq!(r, vec![vec![5.0, 4.0]]);
        assert_eq!(maxpool_rows(&[vec![0.0; 50]], 3, 2)[0].len(), 24);
    }
}
