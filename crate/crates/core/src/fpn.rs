//! Top-down feature pyramid: 1x1 laterals, nearest x2 upsampling, 3x3
//! smoothing.

use crate::error::{shape_err, Result};
use crate::layers::{conv2d, upsample, ConvParams, UpsampleMode};
use crate::params::{load_conv, ConvSpec, ParamSource};
use crate::tensor::FeatureMap;

pub const DEFAULT_FPN_CHANNELS: usize = 64;

#[derive(Debug, Clone)]
pub struct FpnParams {
    pub lateral: Vec<ConvParams>,
    pub smooth: Vec<ConvParams>,
    pub out_channels: usize,
}

impl FpnParams {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, in_channels: [usize; 4], out_channels: usize) -> Result<Self> {
        let mut lateral = Vec::with_capacity(4);
        let mut smooth = Vec::with_capacity(4);
        for (i, &c) in in_channels.iter().enumerate() {
            lateral.push(load_conv(src, &format!("{prefix}.lateral{i}"), ConvSpec::dense(c, out_channels, 1, 1))?);
        }
        for i in 0..4 {
            smooth.push(load_conv(src, &format!("{prefix}.smooth{i}"), ConvSpec::dense(out_channels, out_channels, 3, 1))?);
        }
        Ok(Self {
            lateral,
            smooth,
            out_channels,
        })
    }
}

/// Maps `[c2, c3, c4, c5]` (finest first) to `[S2, S3, S4, S5]`.
pub fn fpn_forward(levels: &[FeatureMap], p: &FpnParams) -> Result<Vec<FeatureMap>> {
    if levels.len() != 4 {
        return shape_err(format!("fpn expects 4 levels, got {}", levels.len()));
    }
    for pair in levels.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if a.batch() != b.batch() || a.height() != 2 * b.height() || a.width() != 2 * b.width() {
            return shape_err(format!(
                "fpn levels must halve spatially: {:?} then {:?}",
                a.shape(),
                b.shape()
            ));
        }
    }
    let mut merged: Vec<FeatureMap> = Vec::with_capacity(4);
    let mut above: Option<FeatureMap> = None;
    for i in (0..4).rev() {
        let lat = conv2d(&levels[i], &p.lateral[i])?;
        let cur = match above {
            Some(up) => lat.add(&upsample(&up, 2, UpsampleMode::Nearest)?)?,
            None => lat,
        };
        merged.push(cur.clone());
        above = Some(cur);
    }
    merged.reverse();
    merged.iter().zip(&p.smooth).map(|(m, s)| conv2d(m, s)).collect()
}
