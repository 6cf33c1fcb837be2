//! Triplet-modal dynamic fusion of image, radar and text features at one
//! pyramid level.
//!
//! Image features go through a 1x1 depthwise conv; radar features through a
//! 1x1 depthwise conv and channel attention. Their sum is refined by a 3x3
//! deformable conv, offset by a learnable position grid and flattened into
//! the query `(H*W, C)`. Text features plus a sinusoidal position table are
//! projected to `C` channels and max-pooled along the sequence (kernel 3,
//! stride 2) into a single tensor that serves as both key and value. The
//! output is `reshape((Q K / sqrt(C)) V^T)`; no softmax is applied unless
//! `normalize` is set.

use crate::error::{shape_err, Error, Result};
use crate::exec;
use crate::layers::{conv2d, global_avg_pool, maxpool1d, sample_bilinear_zero, sigmoid, ConvParams};
use crate::params::{load_conv, load_matrix, ConvSpec, Init, ParamSource};
use crate::tensor::{FeatureMap, Matrix};

pub const ECA_KERNEL: usize = 3;
pub const TEXT_POOL_KERNEL: usize = 3;
pub const TEXT_POOL_STRIDE: usize = 2;

/// 1-D kernel applied across the channel descriptor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EcaParams {
    pub weights: Vec<f32>,
}

impl EcaParams {
    pub fn new(weights: Vec<f32>) -> Result<Self> {
        if weights.len().is_multiple_of(2) {
            return Err(Error::InvalidParam(format!(
                "ECA kernel size must be odd, got {}",
                weights.len()
            )));
        }
        Ok(Self { weights })
    }
}

/// Per-(batch, channel) sigmoid gates.
pub fn eca_gates(x: &FeatureMap, p: &EcaParams) -> Matrix {
    let pooled = global_avg_pool(x);
    let (n, c) = (pooled.rows(), pooled.cols());
    let half = p.weights.len() / 2;
    Matrix::from_fn(n, c, |b, ch| {
        let mut acc = 0f64;
        for (t, &w) in p.weights.iter().enumerate() {
            let src = ch as isize + t as isize - half as isize;
            if src >= 0 && (src as usize) < c {
                acc += w as f64 * pooled.at(b, src as usize) as f64;
            }
        }
        sigmoid(acc as f32)
    })
}

/// Channel attention: `x * sigmoid(conv1d(gap(x)))`.
pub fn eca(x: &FeatureMap, p: &EcaParams) -> Result<FeatureMap> {
    let gates = eca_gates(x, p);
    let c = x.channels();
    let mut out = x.clone();
    exec::for_each_plane(out.data_mut(), x.plane_len(), |idx, dst| {
        let g = gates.at(idx / c, idx % c);
        for v in dst.iter_mut() {
            *v *= g;
        }
    });
    Ok(out)
}

/// Offset predictor plus the main 3x3 kernel; offsets are
/// `(dy, dx)` pairs per tap, tap-major (`2*k` is dy of tap `k`).
#[derive(Debug, Clone)]
pub struct DeformParams {
    pub offset_conv: ConvParams,
    pub main: ConvParams,
}

impl DeformParams {
    pub fn new(offset_conv: ConvParams, main: ConvParams) -> Result<Self> {
        let (kh, kw) = main.kernel_size();
        if offset_conv.out_channels() != 2 * kh * kw {
            return Err(Error::InvalidParam(format!(
                "offset conv has {} channels, need {}",
                offset_conv.out_channels(),
                2 * kh * kw
            )));
        }
        if offset_conv.in_channels() != main.in_channels() {
            return Err(Error::InvalidParam("offset conv and main kernel disagree on input channels".into()));
        }
        Ok(Self { offset_conv, main })
    }
}

pub fn deform_conv(x: &FeatureMap, p: &DeformParams) -> Result<FeatureMap> {
    let offsets = conv2d(x, &p.offset_conv)?;
    deform_conv_with_offsets(x, &offsets, &p.main)
}

/// Deformable convolution with explicit offsets; out-of-range samples read
/// zero.
pub fn deform_conv_with_offsets(x: &FeatureMap, offsets: &FeatureMap, main: &ConvParams) -> Result<FeatureMap> {
    let [n, c_in, h, w] = x.shape();
    if c_in != main.in_channels() {
        return shape_err(format!(
            "deform_conv: input has {c_in} channels, kernel expects {}",
            main.in_channels()
        ));
    }
    let (ho, wo) = main.output_hw(h, w)?;
    let (kh, kw) = main.kernel_size();
    let taps = kh * kw;
    if offsets.shape() != [n, 2 * taps, ho, wo] {
        return shape_err(format!(
            "deform_conv: offsets {:?}, expected {:?}",
            offsets.shape(),
            [n, 2 * taps, ho, wo]
        ));
    }
    let (s, pad) = (main.stride as f64, main.padding as f64);
    let c_out = main.out_channels();
    let cin_g = main.weight.channels();
    let cout_g = c_out / main.groups;
    let npos = ho * wo;

    let mut out = FeatureMap::zeros([n, c_out, ho, wo]);
    for b in 0..n {
        // sampled columns: [c_in][tap][pos]
        let cols: Vec<Vec<f64>> = exec::map_indices(c_in * taps, |ck| {
            let (ci, k) = (ck / taps, ck % taps);
            let (ky, kx) = (k / kw, k % kw);
            let plane = x.plane(b, ci);
            let dy = offsets.plane(b, 2 * k);
            let dx = offsets.plane(b, 2 * k + 1);
            (0..npos)
                .map(|pos| {
                    let (oy, ox) = (pos / wo, pos % wo);
                    let sy = oy as f64 * s - pad + ky as f64 + dy[pos] as f64;
                    let sx = ox as f64 * s - pad + kx as f64 + dx[pos] as f64;
                    sample_bilinear_zero(plane, h, w, sy, sx)
                })
                .collect()
        });
        let item = &mut out.data_mut()[b * c_out * npos..(b + 1) * c_out * npos];
        exec::for_each_plane(item, npos, |co, dst| {
            let g = co / cout_g;
            let mut acc = vec![0f64; npos];
            for cl in 0..cin_g {
                let ci = g * cin_g + cl;
                for k in 0..taps {
                    let wv = main.weight.at(co, cl, k / kw, k % kw) as f64;
                    if wv == 0.0 {
                        continue;
                    }
                    for (a, &v) in acc.iter_mut().zip(&cols[ci * taps + k]) {
                        *a += wv * v;
                    }
                }
            }
            let bias = main.bias.as_ref().map_or(0.0, |bb| bb[co] as f64);
            for (o, a) in dst.iter_mut().zip(acc) {
                *o = (a + bias) as f32;
            }
        });
    }
    Ok(out)
}

/// `(H*W, C)` view of batch item `n`: row `y*W + x`, column `c`.
pub fn flatten_spatial(x: &FeatureMap, n: usize) -> Matrix {
    let (c, hw) = (x.channels(), x.plane_len());
    Matrix::from_fn(hw, c, |pos, ch| x.plane(n, ch)[pos])
}

/// Inverse of [`flatten_spatial`] for a single batch item.
pub fn unflatten_spatial(m: &Matrix, h: usize, w: usize) -> Result<FeatureMap> {
    if m.rows() != h * w {
        return shape_err(format!("cannot reshape {} rows into {h}x{w}", m.rows()));
    }
    let c = m.cols();
    Ok(FeatureMap::from_fn([1, c, h, w], |_, ch, y, x| m.at(y * w + x, ch)))
}

fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..m.rows() {
        let row = m.row(r);
        let mx = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
        let exps: Vec<f64> = row.iter().map(|&v| (v as f64 - mx).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (c, e) in exps.into_iter().enumerate() {
            out.set(r, c, (e / sum) as f32);
        }
    }
    out
}

/// Scaled dot-product similarity `Q K / sqrt(d)` between an `(N, d)` query
/// and a `(d, L')` key.
pub fn similarity(q: &Matrix, k: &Matrix, normalize: bool) -> Result<Matrix> {
    let d = q.cols() as f32;
    let sim = q.matmul(k)?.scale(1.0 / d.sqrt());
    Ok(if normalize { softmax_rows(&sim) } else { sim })
}

/// `similarity(q, k) * v^T`, giving `(N, d)`.
pub fn attend(q: &Matrix, k: &Matrix, v: &Matrix, normalize: bool) -> Result<Matrix> {
    similarity(q, k, normalize)?.matmul(&v.transpose())
}

#[derive(Debug, Clone)]
pub struct TmdfParams {
    pub w_img: ConvParams,
    pub w_radar: ConvParams,
    pub eca: EcaParams,
    pub deform: DeformParams,
    /// `(1, C, H, W)`.
    pub lpe: FeatureMap,
    /// `(C, E)` projection of the text embedding.
    pub w_text: Matrix,
    pub b_text: Vec<f32>,
    /// `(E, L)`.
    pub ape: Matrix,
    pub normalize: bool,
}

impl TmdfParams {
    /// Loads `{prefix}.*` for a level with `channels` channels and
    /// `h x w` resolution.
    #[allow(clippy::too_many_arguments)]
    pub fn load(
        src: &mut dyn ParamSource,
        prefix: &str,
        channels: usize,
        h: usize,
        w: usize,
        embed_dim: usize,
        text_len: usize,
        normalize: bool,
    ) -> Result<Self> {
        let c = channels;
        let eca = EcaParams::new(src.fetch(
            &format!("{prefix}.eca.weight"),
            &[ECA_KERNEL],
            Init::Weight { fan_in: ECA_KERNEL },
        )?)?;
        let offset_conv = load_conv(src, &format!("{prefix}.deform.offset"), ConvSpec::dense(c, 18, 3, 1))?;
        let main = load_conv(src, &format!("{prefix}.deform.main"), ConvSpec::dense(c, c, 3, 1))?;
        let lpe = FeatureMap::new([1, c, h, w], src.fetch(&format!("{prefix}.lpe"), &[1, c, h, w], Init::Zero)?)?;
        Ok(Self {
            w_img: load_conv(src, &format!("{prefix}.w_img"), ConvSpec::depthwise(c, 1, 1))?,
            w_radar: load_conv(src, &format!("{prefix}.w_radar"), ConvSpec::depthwise(c, 1, 1))?,
            eca,
            deform: DeformParams::new(offset_conv, main)?,
            lpe,
            w_text: load_matrix(src, &format!("{prefix}.w_text.weight"), c, embed_dim, Init::Weight { fan_in: embed_dim })?,
            b_text: src.fetch(&format!("{prefix}.w_text.bias"), &[c], Init::Bias)?,
            ape: load_matrix(src, &format!("{prefix}.ape"), embed_dim, text_len, Init::Sinusoid)?,
            normalize,
        })
    }

    pub fn channels(&self) -> usize {
        self.w_img.out_channels()
    }
}

/// Image-radar branch: returns the deformable-conv output plus position
/// grid, shape `(N, C, H, W)`, before flattening.
pub fn tmdf_query_map(f_img: &FeatureMap, f_radar: &FeatureMap, p: &TmdfParams) -> Result<FeatureMap> {
    f_img.expect_same_shape(f_radar)?;
    let img = conv2d(f_img, &p.w_img)?;
    let radar = eca(&conv2d(f_radar, &p.w_radar)?, &p.eca)?;
    let fused = img.add(&radar)?;
    deform_conv(&fused, &p.deform)?.add_broadcast_batch(&p.lpe)
}

/// Text branch: `maxpool(W_T (f_T + APE) + b)`, shape `(C, L')`; used as
/// both key and value.
pub fn tmdf_key_value(f_text: &Matrix, p: &TmdfParams) -> Result<Matrix> {
    if f_text.cols() < TEXT_POOL_KERNEL {
        return shape_err(format!(
            "text length {} is shorter than the pooling kernel {TEXT_POOL_KERNEL}",
            f_text.cols()
        ));
    }
    if f_text.rows() != p.ape.rows() || f_text.cols() != p.ape.cols() {
        return shape_err(format!(
            "text feature {}x{} does not match position table {}x{}",
            f_text.rows(),
            f_text.cols(),
            p.ape.rows(),
            p.ape.cols()
        ));
    }
    let projected = p.w_text.matmul(&f_text.add(&p.ape)?)?;
    let biased = Matrix::from_fn(projected.rows(), projected.cols(), |r, c| projected.at(r, c) + p.b_text[r]);
    maxpool1d(&biased, TEXT_POOL_KERNEL, TEXT_POOL_STRIDE)
}

/// Fuses one pyramid level. `f_text` holds one `(E, L)` matrix per batch
/// item.
pub fn tmdf_fuse(f_img: &FeatureMap, f_radar: &FeatureMap, f_text: &[Matrix], p: &TmdfParams) -> Result<FeatureMap> {
    let [n, c, h, w] = f_img.shape();
    if f_text.len() != n {
        return shape_err(format!("{} text features for batch of {n}", f_text.len()));
    }
    if c != p.channels() {
        return shape_err(format!("tmdf: features have {c} channels, params {}", p.channels()));
    }
    let query = tmdf_query_map(f_img, f_radar, p)?;
    let mut items = Vec::with_capacity(n);
    for (b, text) in f_text.iter().enumerate() {
        let kv = tmdf_key_value(text, p)?;
        let q = flatten_spatial(&query, b);
        items.push(unflatten_spatial(&attend(&q, &kv, &kv, p.normalize)?, h, w)?);
    }
    FeatureMap::stack(&items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Generator, InitMode};

    #[test]
    fn eca_zero_weights_halves() {
        let x = FeatureMap::from_fn([2, 3, 4, 4], |n, c, y, xx| (n + c) as f32 - (y * xx) as f32 * 0.1);
        let y = eca(&x, &EcaParams::new(vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!(y, x.scale(0.5));
        assert!(EcaParams::new(vec![0.0; 2]).is_err());
    }

    #[test]
    fn eca_saturates_open() {
        let x = FeatureMap::full([1, 1, 3, 3], 2.0);
        let y = eca(&x, &EcaParams::new(vec![0.0, 100.0, 0.0]).unwrap()).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn flatten_round_trip() {
        let x = FeatureMap::from_fn([1, 3, 2, 5], |_, c, y, xx| (c * 10 + y * 5 + xx) as f32);
        let m = flatten_spatial(&x, 0);
        assert_eq!(m.rows(), 10);
        assert_eq!(unflatten_spatial(&m, 2, 5).unwrap(), x);
        assert_eq!(flatten_spatial(&unflatten_spatial(&m, 2, 5).unwrap(), 0), m);
    }

    #[test]
    fn single_position_hand_case() {
        let d = 4;
        let q = Matrix::from_fn(1, d, |_, _| 1.0);
        let k = Matrix::from_fn(d, 1, |_, _| 1.0);
        let v = Matrix::new(d, 1, vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let out = attend(&q, &k, &v, false).unwrap();
        let s = (d as f32).sqrt();
        assert_eq!(out.data(), &[s, -2.0 * s, 0.5 * s, 3.0 * s]);
    }

    #[test]
    fn zero_text_annihilates() {
        let mut g = Generator::new(5, InitMode::Random);
        let mut p = TmdfParams::load(&mut g, "t", 4, 6, 6, 5, 9, false).unwrap();
        p.ape = Matrix::zeros(5, 9);
        p.b_text = vec![0.0; 4];
        let x = FeatureMap::from_fn([1, 4, 6, 6], |_, c, y, xx| (c as f32 - 1.5) * (y as f32 - xx as f32));
        let out = tmdf_fuse(&x, &x, &[Matrix::zeros(5, 9)], &p).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
        assert_eq!(out.shape(), [1, 4, 6, 6]);
    }

    #[test]
    fn short_text_rejected() {
        let mut g = Generator::new(5, InitMode::Random);
        let p = TmdfParams::load(&mut g, "t", 4, 2, 2, 5, 2, false).unwrap();
        let x = FeatureMap::zeros([1, 4, 2, 2]);
        assert!(tmdf_fuse(&x, &x, &[Matrix::zeros(5, 2)], &p).is_err());
    }
}
