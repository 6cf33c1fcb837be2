use crate::block::ConvBn;
use crate::error::Result;
use crate::layers::{conv2d, sigmoid, Activation, ConvParams};
use crate::params::{load_conv, ConvSpec, ParamSource};
use crate::tensor::FeatureMap;

/// `[3x3 DWC + BN + ReLU] -> [1x1 PWC + BN + ReLU] -> 1x1 projection`.
#[derive(Debug, Clone)]
pub struct RecBranch {
    pub dw: ConvBn,
    pub pw: ConvBn,
    pub proj: ConvParams,
}

impl RecBranch {
    fn load(src: &mut dyn ParamSource, prefix: &str, c: usize, out: usize) -> Result<Self> {
        let relu = Some(Activation::Relu);
        Ok(Self {
            dw: ConvBn::load(src, &format!("{prefix}.dw"), ConvSpec::depthwise(c, 3, 1), relu)?,
            pw: ConvBn::load(src, &format!("{prefix}.pw"), ConvSpec::dense(c, c, 1, 1), relu)?,
            proj: load_conv(src, &format!("{prefix}.proj"), ConvSpec::dense(c, out, 1, 1))?,
        })
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        conv2d(&self.pw.forward(&self.dw.forward(x)?)?, &self.proj)
    }
}

#[derive(Debug, Clone)]
pub struct RecHeadParams {
    pub conf: RecBranch,
    pub wh: RecBranch,
    pub offset: RecBranch,
    /// Image pixels per heatmap cell.
    pub downsample: usize,
}

impl RecHeadParams {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize, downsample: usize) -> Result<Self> {
        Ok(Self {
            conf: RecBranch::load(src, &format!("{prefix}.conf"), channels, 1)?,
            wh: RecBranch::load(src, &format!("{prefix}.wh"), channels, 2)?,
            offset: RecBranch::load(src, &format!("{prefix}.offset"), channels, 2)?,
            downsample,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecHeadOutput {
    /// `(N, 1, h, w)`, sigmoid-activated.
    pub heatmap: FeatureMap,
    /// `(N, 2, h, w)`: width, height in cells.
    pub wh: FeatureMap,
    /// `(N, 2, h, w)`: x, y sub-cell offset.
    pub offset: FeatureMap,
}

pub fn rec_head_forward(feat: &FeatureMap, p: &RecHeadParams) -> Result<RecHeadOutput> {
    Ok(RecHeadOutput {
        heatmap: p.conf.forward(feat)?.map(sigmoid),
        wh: p.wh.forward(feat)?,
        offset: p.offset.forward(feat)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Generator, InitMode};

    #[test]
    fn zero_weights_half_heatmap() {
        let mut g = Generator::new(0, InitMode::Zero);
        let p = RecHeadParams::load(&mut g, "rec", 8, 4).unwrap();
        let x = FeatureMap::from_fn([1, 8, 16, 16], |_, c, y, xx| (c + y + xx) as f32);
        let out = rec_head_forward(&x, &p).unwrap();
        assert!(out.heatmap.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn output_shapes() {
        let mut g = Generator::new(1, InitMode::Random);
        let p = RecHeadParams::load(&mut g, "rec", 64, 4).unwrap();
        let x = FeatureMap::full([1, 64, 16, 16], 0.1);
        let out = rec_head_forward(&x, &p).unwrap();
        assert_eq!(out.heatmap.shape(), [1, 1, 16, 16]);
        assert_eq!(out.wh.shape(), [1, 2, 16, 16]);
        assert_eq!(out.offset.shape(), [1, 2, 16, 16]);
        assert!(out.heatmap.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }
}
