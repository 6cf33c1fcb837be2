//! Conversions from runtime parameter structs into the reference types,
//! plus seeded random inputs.

#![allow(dead_code)]

use nanomvg::enmoe::EnMoeParams;
use nanomvg::heads::{MsRepBranches, MsRepParams};
use nanomvg::layers::{BnParams, ConvParams};
use nanomvg::tensor::{FeatureMap, Matrix};
use nanomvg::tmdf::{TmdfParams, TEXT_POOL_KERNEL, TEXT_POOL_STRIDE};
use nanomvg_oracle::fusion;
use nanomvg_oracle::{Bn, Conv, Volume};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_map(rng: &mut ChaCha8Rng, shape: [usize; 4], scale: f32) -> FeatureMap {
    FeatureMap::from_fn(shape, |_, _, _, _| rng.gen_range(-scale..scale))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f32) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn vol(x: &FeatureMap, n: usize) -> Volume {
    let [_, c, h, w] = x.shape();
    Volume::from_f32(c, h, w, &x.data()[n * c * h * w..(n + 1) * c * h * w])
}

fn f64s(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

pub fn conv(p: &ConvParams) -> Conv {
    let [c_out, _, k, kw] = p.weight.shape();
    assert_eq!(k, kw);
    Conv {
        c_in: p.in_channels(),
        c_out,
        k,
        stride: p.stride,
        pad: p.padding,
        groups: p.groups,
        weight: f64s(p.weight.data()),
        bias: p.bias.as_deref().map(f64s),
    }
}

pub fn bn(p: &BnParams) -> Bn {
    Bn {
        gamma: f64s(&p.gamma),
        beta: f64s(&p.beta),
        mean: f64s(&p.running_mean),
        var: f64s(&p.running_var),
        eps: p.eps as f64,
    }
}

pub fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| f64s(m.row(r))).collect()
}

pub fn tmdf(p: &TmdfParams) -> fusion::Tmdf {
    let [_, c, h, w] = p.lpe.shape();
    fusion::Tmdf {
        w_img: conv(&p.w_img),
        w_radar: conv(&p.w_radar),
        eca: f64s(&p.eca.weights),
        offset: conv(&p.deform.offset_conv),
        main: conv(&p.deform.main),
        lpe: Volume::from_f32(c, h, w, p.lpe.data()),
        w_text: rows(&p.w_text),
        b_text: f64s(&p.b_text),
        ape: rows(&p.ape),
        pool_k: TEXT_POOL_KERNEL,
        pool_s: TEXT_POOL_STRIDE,
        normalize: p.normalize,
    }
}

pub fn enmoe(p: &EnMoeParams) -> fusion::EnMoe {
    fusion::EnMoe {
        edge_conv: conv(&p.edge.conv),
        edge_bn: bn(&p.edge.bn),
        nbr_conv: conv(&p.neighbour.conv),
        nbr_bn: bn(&p.neighbour.bn),
        gate_h: conv(&p.gate_h),
        gate_l: conv(&p.gate_l),
        w_o: conv(&p.w_o),
        theta1_raw: p.theta1_raw as f64,
        theta2_raw: p.theta2_raw as f64,
    }
}

pub fn msrep(p: &MsRepParams) -> fusion::MsRep {
    let MsRepParams::Train(MsRepBranches { dw3, bn3, dw1, bn1, bn_id }) = p else {
        panic!("reference block needs the training form");
    };
    fusion::MsRep {
        dw3: conv(dw3),
        bn3: bn(bn3),
        dw1: conv(dw1),
        bn1: bn(bn1),
        bn_id: bn(bn_id),
    }
}

pub fn max_abs_diff(reference: &Volume, got: &FeatureMap, n: usize) -> f64 {
    reference.max_abs_diff_f32(&got.data()[n * got.shape()[1] * got.plane_len()..(n + 1) * got.shape()[1] * got.plane_len()])
}
