//! Multi-branch depthwise block with train-to-inference fusion.
//!
//! Train mode sums three branches: `BN(dw3x3(x)) + BN(dw1x1(x)) + BN(x)`.
//! Fusing folds each BN into its branch, pads the 1x1 kernel to 3x3,
//! writes the identity as a centered delta and adds everything into a
//! single biased 3x3 depthwise conv.

use crate::archive::WeightArchive;
use crate::error::{Error, Result};
use crate::layers::{batchnorm_inference, conv2d, BnParams, ConvParams};
use crate::params::{load_bn, load_conv, store_bn, store_conv, ConvSpec, ParamSource};
use crate::tensor::FeatureMap;

#[derive(Debug, Clone)]
pub struct MsRepBranches {
    pub dw3: ConvParams,
    pub bn3: BnParams,
    pub dw1: ConvParams,
    pub bn1: BnParams,
    pub bn_id: BnParams,
}

#[derive(Debug, Clone)]
pub enum MsRepParams {
    Train(MsRepBranches),
    Fused(ConvParams),
}

impl MsRepParams {
    pub fn is_fused(&self) -> bool {
        matches!(self, MsRepParams::Fused(_))
    }

    /// Loads `{prefix}.fused.*` when present, otherwise the three branches.
    pub fn load(src: &mut dyn ParamSource, prefix: &str, channels: usize) -> Result<Self> {
        if src.contains(&format!("{prefix}.fused.weight")) {
            return Ok(MsRepParams::Fused(load_conv(
                src,
                &format!("{prefix}.fused"),
                ConvSpec::depthwise(channels, 3, 1),
            )?));
        }
        Ok(MsRepParams::Train(MsRepBranches {
            dw3: load_conv(src, &format!("{prefix}.dw3"), ConvSpec::depthwise(channels, 3, 1).no_bias())?,
            bn3: load_bn(src, &format!("{prefix}.bn3"), channels)?,
            dw1: load_conv(src, &format!("{prefix}.dw1"), ConvSpec::depthwise(channels, 1, 1).no_bias())?,
            bn1: load_bn(src, &format!("{prefix}.bn1"), channels)?,
            bn_id: load_bn(src, &format!("{prefix}.bn_id"), channels)?,
        }))
    }

    pub fn store(&self, archive: &mut WeightArchive, prefix: &str) -> Result<()> {
        match self {
            MsRepParams::Fused(conv) => store_conv(archive, &format!("{prefix}.fused"), conv),
            MsRepParams::Train(b) => {
                store_conv(archive, &format!("{prefix}.dw3"), &b.dw3)?;
                store_bn(archive, &format!("{prefix}.bn3"), &b.bn3)?;
                store_conv(archive, &format!("{prefix}.dw1"), &b.dw1)?;
                store_bn(archive, &format!("{prefix}.bn1"), &b.bn1)?;
                store_bn(archive, &format!("{prefix}.bn_id"), &b.bn_id)
            }
        }
    }
}

pub fn msrep_forward(x: &FeatureMap, p: &MsRepParams) -> Result<FeatureMap> {
    match p {
        MsRepParams::Fused(conv) => conv2d(x, conv),
        MsRepParams::Train(b) => {
            let big = batchnorm_inference(&conv2d(x, &b.dw3)?, &b.bn3)?;
            let small = batchnorm_inference(&conv2d(x, &b.dw1)?, &b.bn1)?;
            let id = batchnorm_inference(x, &b.bn_id)?;
            big.add(&small)?.add(&id)
        }
    }
}

pub fn msrep_fuse(p: &MsRepParams) -> Result<MsRepParams> {
    let MsRepParams::Train(b) = p else {
        return Err(Error::AlreadyFused);
    };
    let c = b.bn3.channels();
    if b.dw3.kernel_size() != (3, 3) || b.dw1.kernel_size() != (1, 1) || b.dw3.groups != c || b.dw1.groups != c {
        return Err(Error::InvalidParam("msrep branches must be depthwise 3x3 and 1x1".into()));
    }
    let (ss3, ss1, ssid) = (b.bn3.scale_shift(), b.bn1.scale_shift(), b.bn_id.scale_shift());
    let mut kernel = vec![0f32; c * 9];
    let mut bias = vec![0f32; c];
    for ch in 0..c {
        let (s3, sh3) = ss3[ch];
        let (s1, sh1) = ss1[ch];
        let (sid, shid) = ssid[ch];
        let mut k = [0f64; 9];
        for (t, kv) in k.iter_mut().enumerate() {
            *kv = b.dw3.weight.at(ch, 0, t / 3, t % 3) as f64 * s3;
        }
        k[4] += b.dw1.weight.at(ch, 0, 0, 0) as f64 * s1 + sid;
        let conv_bias = |conv: &ConvParams| conv.bias.as_ref().map_or(0.0, |v| v[ch] as f64);
        let bsum = sh3 + conv_bias(&b.dw3) * s3 + sh1 + conv_bias(&b.dw1) * s1 + shid;
        for (t, kv) in k.iter().enumerate() {
            kernel[ch * 9 + t] = *kv as f32;
        }
        bias[ch] = bsum as f32;
    }
    let weight = FeatureMap::new([c, 1, 3, 3], kernel)?;
    Ok(MsRepParams::Fused(ConvParams::new(weight, Some(bias), 1, 1, c)?))
}
