//! Edge/neighbour mixture of experts applied to each pyramid level.
//!
//! ```text
//! f_h  = SiLU(BN(dw1x1(sobel(f_o))))        edge expert
//! f_l  = SiLU(BN(dw5x5(f_o)))               neighbour expert
//! W_H  = sigmoid(gate_h(f_h)),  W_L = sigmoid(gate_l(f_l))
//! f_o' = W_o f_o
//! out  = sigmoid(t1) * W_H * f_o' + sigmoid(t2) * W_L * f_o' + f_o
//! ```
//!
//! Gates are per-position 1x1 dense layers, so `W_H` and `W_L` are
//! full-resolution maps.

use crate::block::ConvBn;
use crate::error::{shape_err, Result};
use crate::exec;
use crate::layers::{conv2d, sigmoid, sobel, Activation, ConvParams};
use crate::params::{load_conv, load_scalar, ConvSpec, Init, ParamSource};
use crate::tensor::FeatureMap;

#[derive(Debug, Clone)]
pub struct EnMoeParams {
    pub edge: ConvBn,
    pub neighbour: ConvBn,
    pub gate_h: ConvParams,
    pub gate_l: ConvParams,
    pub w_o: ConvParams,
    pub theta1_raw: f32,
    pub theta2_raw: f32,
}

impl EnMoeParams {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize) -> Result<Self> {
        let c = channels;
        let silu = Some(Activation::Silu);
        Ok(Self {
            edge: ConvBn::load(src, &format!("{prefix}.edge"), ConvSpec::depthwise(c, 1, 1), silu)?,
            neighbour: ConvBn::load(src, &format!("{prefix}.neighbour"), ConvSpec::depthwise(c, 5, 1), silu)?,
            gate_h: load_conv(src, &format!("{prefix}.gate_h"), ConvSpec::dense(c, c, 1, 1))?,
            gate_l: load_conv(src, &format!("{prefix}.gate_l"), ConvSpec::dense(c, c, 1, 1))?,
            w_o: load_conv(src, &format!("{prefix}.w_o"), ConvSpec::dense(c, c, 1, 1))?,
            theta1_raw: load_scalar(src, &format!("{prefix}.theta1_raw"), Init::Zero)?,
            theta2_raw: load_scalar(src, &format!("{prefix}.theta2_raw"), Init::Zero)?,
        })
    }
}

/// Intermediate tensors of one forward pass.
#[derive(Debug, Clone)]
pub struct EnMoeTrace {
    pub edge: FeatureMap,
    pub neighbour: FeatureMap,
    pub weight_h: FeatureMap,
    pub weight_l: FeatureMap,
    pub projected: FeatureMap,
    pub theta1: f32,
    pub theta2: f32,
    pub output: FeatureMap,
}

pub fn enmoe_trace(f_o: &FeatureMap, p: &EnMoeParams) -> Result<EnMoeTrace> {
    if f_o.height() < 5 || f_o.width() < 5 {
        return shape_err(format!(
            "en-moe needs spatial dims >= 5, got {}x{}",
            f_o.height(),
            f_o.width()
        ));
    }
    let edge = p.edge.forward(&sobel(f_o)?)?;
    let neighbour = p.neighbour.forward(f_o)?;
    let weight_h = conv2d(&edge, &p.gate_h)?.map(sigmoid);
    let weight_l = conv2d(&neighbour, &p.gate_l)?.map(sigmoid);
    let projected = conv2d(f_o, &p.w_o)?;
    let (t1, t2) = (sigmoid(p.theta1_raw), sigmoid(p.theta2_raw));

    let mut output = FeatureMap::zeros(f_o.shape());
    let plane = f_o.plane_len();
    let c = f_o.channels();
    exec::for_each_plane(output.data_mut(), plane, |idx, dst| {
        let (b, ch) = (idx / c, idx % c);
        let (wh, wl) = (weight_h.plane(b, ch), weight_l.plane(b, ch));
        let (fp, fo) = (projected.plane(b, ch), f_o.plane(b, ch));
        for i in 0..plane {
            dst[i] = (t1 * wh[i] * fp[i] + t2 * wl[i] * fp[i]) + fo[i];
        }
    });
    Ok(EnMoeTrace {
        edge,
        neighbour,
        weight_h,
        weight_l,
        projected,
        theta1: t1,
        theta2: t2,
        output,
    })
}

pub fn enmoe_forward(f_o: &FeatureMap, p: &EnMoeParams) -> Result<FeatureMap> {
    Ok(enmoe_trace(f_o, p)?.output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Generator, InitMode};
    use crate::tensor::FeatureMap;

    fn identity_wo(c: usize) -> ConvParams {
        let w = FeatureMap::from_fn([c, c, 1, 1], |o, i, _, _| if o == i { 1.0 } else { 0.0 });
        ConvParams::new(w, Some(vec![0.0; c]), 1, 0, 1).unwrap()
    }

    #[test]
    fn neutral_gates_give_one_and_a_half() {
        let mut g = Generator::new(4, InitMode::Zero);
        let mut p = EnMoeParams::load(&mut g, "m", 3).unwrap();
        p.w_o = identity_wo(3);
        let x = FeatureMap::from_fn([1, 3, 6, 7], |_, c, y, xx| (c as f32 + 1.0) * ((y * 7 + xx) as f32 * 0.37).cos());
        let out = enmoe_forward(&x, &p).unwrap();
        for (o, v) in out.data().iter().zip(x.data()) {
            assert!((o - 1.5 * v).abs() <= 1e-6 * v.abs().max(1.0));
        }
    }

    #[test]
    fn closed_gates_return_input_exactly() {
        let mut g = Generator::new(4, InitMode::Random);
        let mut p = EnMoeParams::load(&mut g, "m", 3).unwrap();
        p.theta1_raw = -1e4;
        p.theta2_raw = -1e4;
        let x = FeatureMap::from_fn([2, 3, 5, 5], |n, c, y, xx| (n * 3 + c) as f32 - (y * xx) as f32 * 0.2);
        assert_eq!(enmoe_forward(&x, &p).unwrap(), x);
    }

    #[test]
    fn gates_in_unit_interval() {
        let mut g = Generator::new(9, InitMode::Random);
        let p = EnMoeParams::load(&mut g, "m", 4).unwrap();
        let x = FeatureMap::from_fn([1, 4, 8, 8], |_, c, y, xx| ((c * 64 + y * 8 + xx) as f32 * 0.13).sin());
        let t = enmoe_trace(&x, &p).unwrap();
        for v in t.weight_h.data().iter().chain(t.weight_l.data()) {
            assert!(*v > 0.0 && *v < 1.0);
        }
        assert!(t.theta1 > 0.0 && t.theta1 < 1.0);
        assert_eq!(t.output.shape(), x.shape());
    }

    #[test]
    fn constant_input_constant_interior() {
        let mut g = Generator::new(9, InitMode::Random);
        let p = EnMoeParams::load(&mut g, "m", 2).unwrap();
        let x = FeatureMap::full([1, 2, 9, 9], 0.7);
        let out = enmoe_forward(&x, &p).unwrap();
        for c in 0..2 {
            let v = out.at(0, c, 2, 2);
            for y in 2..7 {
                for xx in 2..7 {
                    assert!((out.at(0, c, y, xx) - v).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn too_small() {
        let mut g = Generator::new(9, InitMode::Random);
        let p = EnMoeParams::load(&mut g, "m", 2).unwrap();
        assert!(enmoe_forward(&FeatureMap::zeros([1, 2, 4, 8]), &p).is_err());
    }
}
