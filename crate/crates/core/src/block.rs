use crate::error::Result;
use crate::layers::{activation, batchnorm_inference, conv2d, Activation, BnParams, ConvParams};
use crate::params::{load_bn, load_conv, ConvSpec, ParamSource};
use crate::tensor::FeatureMap;

/// Convolution followed by batch norm and an optional activation.
#[derive(Debug, Clone)]
pub struct ConvBn {
    pub conv: ConvParams,
    pub bn: BnParams,
    pub act: Option<Activation>,
}

impl ConvBn {
    /// Loads `{prefix}.conv.*` and `{prefix}.bn.*`.
    pub fn load(src: &mut dyn ParamSource, prefix: &str, spec: ConvSpec, act: Option<Activation>) -> Result<Self> {
        Ok(Self {
            conv: load_conv(src, &format!("{prefix}.conv"), spec)?,
            bn: load_bn(src, &format!("{prefix}.bn"), spec.c_out)?,
            act,
        })
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        let y = batchnorm_inference(&conv2d(x, &self.conv)?, &self.bn)?;
        Ok(match self.act {
            Some(a) => activation(&y, a),
            None => y,
        })
    }
}
