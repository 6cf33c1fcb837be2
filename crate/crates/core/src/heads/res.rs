use crate::error::{shape_err, Error, Result};
use crate::layers::{conv2d, upsample, ConvParams, UpsampleMode};
use crate::params::{load_conv, ConvSpec, ParamSource};
use crate::tensor::FeatureMap;

use super::msrep::{msrep_forward, msrep_fuse, MsRepParams};

/// Mask head: a 1x1 depthwise entry conv on the coarsest level, one
/// multi-branch block per top-down step (levels 5, 4, 3), and a final
/// 1-channel projection.
#[derive(Debug, Clone)]
pub struct ResHeadParams {
    pub entry: ConvParams,
    pub blocks: Vec<MsRepParams>,
    pub proj: ConvParams,
}

impl ResHeadParams {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize) -> Result<Self> {
        let entry = load_conv(src, &format!("{prefix}.entry"), ConvSpec::depthwise(channels, 1, 1))?;
        let blocks = (0..3)
            .map(|i| MsRepParams::load(src, &format!("{prefix}.msrep{i}"), channels))
            .collect::<Result<Vec<_>>>()?;
        let proj = load_conv(src, &format!("{prefix}.proj"), ConvSpec::dense(channels, 1, 1, 1))?;
        Ok(Self { entry, blocks, proj })
    }

    pub fn fused(&self) -> Result<Self> {
        Ok(Self {
            entry: self.entry.clone(),
            blocks: self.blocks.iter().map(msrep_fuse).collect::<Result<_>>()?,
            proj: self.proj.clone(),
        })
    }

    pub fn is_fused(&self) -> bool {
        self.blocks.iter().all(MsRepParams::is_fused)
    }
}

/// Returns `(N, 1, image_h, image_w)` mask logits from `[S2, S3, S4, S5]`.
pub fn res_head_forward(pyramid: &[FeatureMap], p: &ResHeadParams, image_size: (usize, usize)) -> Result<FeatureMap> {
    if pyramid.len() != 4 || p.blocks.len() != 3 {
        return shape_err("res head needs 4 pyramid levels and 3 blocks");
    }
    let mut d = conv2d(&pyramid[3], &p.entry)?;
    for (block, level) in p.blocks.iter().zip([2usize, 1, 0]) {
        let mixed = msrep_forward(&d, block)?.add(&d)?.map(|v| v.max(0.0));
        let up = upsample(&mixed, 2, UpsampleMode::Nearest)?;
        if up.shape() != pyramid[level].shape() {
            return shape_err(format!(
                "res head: upsampled {:?} does not match level {:?}",
                up.shape(),
                pyramid[level].shape()
            ));
        }
        d = pyramid[level].add(&up)?;
    }
    let logits = conv2d(&d, &p.proj)?;
    let (ih, iw) = image_size;
    if ih % logits.height() != 0 || ih / logits.height() != iw / logits.width() || iw % logits.width() != 0 {
        return shape_err(format!(
            "image size {ih}x{iw} is not an integer multiple of mask grid {}x{}",
            logits.height(),
            logits.width()
        ));
    }
    upsample(&logits, ih / logits.height(), UpsampleMode::Bilinear)
}

/// Foreground/background bitmap at image resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub height: usize,
    pub width: usize,
    /// Row-major, values 0 or 1.
    pub bits: Vec<u8>,
    pub threshold: f32,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != height * width || bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("mask bitmap must be h*w values in {0, 1}".into()));
        }
        Ok(Self {
            height,
            width,
            bits,
            threshold: 0.0,
        })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}

/// `logit > threshold` per pixel, one mask per batch item.
pub fn binarize(logits: &FeatureMap, threshold: f32) -> Vec<BinaryMask> {
    let (h, w) = (logits.height(), logits.width());
    (0..logits.batch())
        .map(|n| BinaryMask {
            height: h,
            width: w,
            bits: logits.plane(n, 0).iter().map(|&v| (v > threshold) as u8).collect(),
            threshold,
        })
        .collect()
}
