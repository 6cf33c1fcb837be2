//! Composite blocks written out step by step.

use crate::nn::{bn, conv, deform, eca, maxpool_rows, relu, sigmoid, silu, sobel, upsample_bilinear, upsample_nearest};
use crate::nn::{Bn, Conv, Volume};

/// Parameters of one fusion level.
#[derive(Debug, Clone)]
pub struct Tmdf {
    pub w_img: Conv,
    pub w_radar: Conv,
    pub eca: Vec<f64>,
    pub offset: Conv,
    pub main: Conv,
    /// `(C, H, W)`.
    pub lpe: Volume,
    /// `C` rows of `E`.
    pub w_text: Vec<Vec<f64>>,
    pub b_text: Vec<f64>,
    /// `E` rows of `L`.
    pub ape: Vec<Vec<f64>>,
    pub pool_k: usize,
    pub pool_s: usize,
    pub normalize: bool,
}

/// `text` is `E` rows of `L` token columns.
pub fn tmdf(img: &Volume, radar: &Volume, text: &[Vec<f64>], p: &Tmdf) -> Volume {
    let f_i = conv(img, &p.w_img);
    let f_r = eca(&conv(radar, &p.w_radar), &p.eca);
    let summed = f_i.add(&f_r);
    let offsets = conv(&summed, &p.offset);
    let q_map = deform(&summed, &offsets, &p.main).add(&p.lpe);
    let (c, h, w) = (q_map.c, q_map.h, q_map.w);

    // text branch: projection of (f_T + APE), then pooling along tokens
    let e = text.len();
    let l = text[0].len();
    let mut proj = vec![vec![0.0; l]; c];
    for (ci, row) in proj.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            let mut s = p.b_text[ci];
            for ei in 0..e {
                s += p.w_text[ci][ei] * (text[ei][j] + p.ape[ei][j]);
            }
            *slot = s;
        }
    }
    let kv = maxpool_rows(&proj, p.pool_k, p.pool_s);
    let lp = kv[0].len();

    let scale = 1.0 / (c as f64).sqrt();
    let mut out = Volume::zeros(c, h, w);
    for y in 0..h {
        for x in 0..w {
            let mut sim: Vec<f64> = (0..lp)
                .map(|j| (0..c).map(|ci| q_map.get(ci, y, x) * kv[ci][j]).sum::<f64>() * scale)
                .collect();
            if p.normalize {
                let m = sim.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = sim.iter().map(|s| (s - m).exp()).sum();
                for s in sim.iter_mut() {
                    *s = (*s - m).exp() / z;
                }
            }
            for ci in 0..c {
                let v: f64 = (0..lp).map(|j| sim[j] * kv[ci][j]).sum();
                out.set(ci, y, x, v);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct EnMoe {
    pub edge_conv: Conv,
    pub edge_bn: Bn,
    pub nbr_conv: Conv,
    pub nbr_bn: Bn,
    pub gate_h: Conv,
    pub gate_l: Conv,
    pub w_o: Conv,
    pub theta1_raw: f64,
    pub theta2_raw: f64,
}

pub fn enmoe(f: &Volume, p: &EnMoe) -> Volume {
    let f_h = bn(&conv(&sobel(f), &p.edge_conv), &p.edge_bn).map(silu);
    let f_l = bn(&conv(f, &p.nbr_conv), &p.nbr_bn).map(silu);
    let w_h = conv(&f_h, &p.gate_h).map(sigmoid);
    let w_l = conv(&f_l, &p.gate_l).map(sigmoid);
    let f_hat = conv(f, &p.w_o);
    let (t1, t2) = (sigmoid(p.theta1_raw), sigmoid(p.theta2_raw));
    let mut out = f.clone();
    for i in 0..out.data.len() {
        out.data[i] = t1 * w_h.data[i] * f_hat.data[i] + t2 * w_l.data[i] * f_hat.data[i] + f.data[i];
    }
    out
}

/// Three-branch block in its training form.
#[derive(Debug, Clone)]
pub struct MsRep {
    pub dw3: Conv,
    pub bn3: Bn,
    pub dw1: Conv,
    pub bn1: Bn,
    pub bn_id: Bn,
}

pub fn msrep(x: &Volume, p: &MsRep) -> Volume {
    bn(&conv(x, &p.dw3), &p.bn3)
        .add(&bn(&conv(x, &p.dw1), &p.bn1))
        .add(&bn(x, &p.bn_id))
}

/// Top-down pyramid from finest-first levels.
pub fn fpn(levels: &[Volume], lateral: &[Conv], smooth: &[Conv]) -> Vec<Volume> {
    let lat: Vec<Volume> = levels.iter().zip(lateral).map(|(l, c)| conv(l, c)).collect();
    let mut merged = lat.clone();
    for i in (0..levels.len() - 1).rev() {
        merged[i] = lat[i].add(&upsample_nearest(&merged[i + 1], 2));
    }
    merged.iter().zip(smooth).map(|(m, s)| conv(m, s)).collect()
}

/// Mask logits at `factor` times the finest level.
pub fn res_head(pyramid: &[Volume], entry: &Conv, blocks: &[MsRep], proj: &Conv, factor: usize) -> Volume {
    let mut d = conv(&pyramid[3], entry);
    for (block, level) in blocks.iter().zip([2usize, 1, 0]) {
        let mixed = msrep(&d, block).add(&d).map(relu);
        d = pyramid[level].add(&upsample_nearest(&mixed, 2));
    }
    upsample_bilinear(&conv(&d, proj), factor)
}
