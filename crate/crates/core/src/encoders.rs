//! Lightweight stand-in encoders for the three input modalities.
//!
//! Image and radar encoders both produce a four-level pyramid at 1/4, 1/8,
//! 1/16 and 1/32 of the input resolution with identical channel counts, so
//! the per-level fusion can add them elementwise. The text encoder is an
//! embedding lookup producing a `(embed_dim, L)` sequence.

use crate::block::ConvBn;
use crate::error::{shape_err, Error, Result};
use crate::layers::{activation, conv2d, Activation, BnParams, ConvParams};
use crate::params::{load_bn, load_conv, load_matrix, ConvSpec, Init, ParamSource};
use crate::tensor::{FeatureMap, Matrix};
use crate::vocab::PAD_ID;

pub const DEFAULT_TEXT_LEN: usize = 50;
pub const DEFAULT_STAGE_CHANNELS: [usize; 4] = [16, 32, 64, 96];

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub stage_channels: [usize; 4],
    pub text_vocab: usize,
    pub text_len: usize,
    pub embed_dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            stage_channels: DEFAULT_STAGE_CHANNELS,
            text_vocab: 256,
            text_len: DEFAULT_TEXT_LEN,
            embed_dim: 64,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage_channels.windows(2).any(|w| w[1] < w[0]) || self.stage_channels[0] == 0 {
            return Err(Error::InvalidParam(format!(
                "stage channels must be positive and non-decreasing: {:?}",
                self.stage_channels
            )));
        }
        if self.text_vocab == 0 || self.embed_dim == 0 || self.text_len < 3 {
            return Err(Error::InvalidParam(
                "text_vocab and embed_dim must be positive, text_len at least 3".into(),
            ));
        }
        Ok(())
    }
}

/// Token ids with a padding mask; `ids.len() == text_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    pub padding_mask: Vec<bool>,
}

impl TokenSequence {
    pub fn all_pad(len: usize) -> Self {
        Self {
            ids: vec![PAD_ID; len],
            padding_mask: vec![true; len],
        }
    }
}

fn check_input(x: &FeatureMap, what: &str) -> Result<()> {
    let [_, c, h, w] = x.shape();
    if c != 3 {
        return shape_err(format!("{what} input must have 3 channels, got {c}"));
    }
    if h == 0 || w == 0 || h % 32 != 0 || w % 32 != 0 {
        return shape_err(format!(
            "{what} input {h}x{w}: height and width must be positive multiples of 32"
        ));
    }
    Ok(())
}

/// Stride-2 depthwise 3x3 followed by a pointwise projection, BN and ReLU.
#[derive(Debug, Clone)]
pub struct DepthwiseSeparable {
    pub dw: ConvParams,
    pub pw: ConvParams,
    pub bn: BnParams,
}

impl DepthwiseSeparable {
    fn load(src: &mut dyn ParamSource, prefix: &str, c_in: usize, c_out: usize) -> Result<Self> {
        Ok(Self {
            dw: load_conv(src, &format!("{prefix}.dw"), ConvSpec::depthwise(c_in, 3, 2))?,
            pw: load_conv(src, &format!("{prefix}.pw"), ConvSpec::dense(c_in, c_out, 1, 1))?,
            bn: load_bn(src, &format!("{prefix}.bn"), c_out)?,
        })
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        let y = conv2d(&conv2d(x, &self.dw)?, &self.pw)?;
        Ok(activation(
            &crate::layers::batchnorm_inference(&y, &self.bn)?,
            Activation::Relu,
        ))
    }
}

#[derive(Debug, Clone)]
pub struct ImageEncoder {
    pub stem: ConvBn,
    pub stages: Vec<DepthwiseSeparable>,
}

impl ImageEncoder {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, cfg: &EncoderConfig) -> Result<Self> {
        let ch = cfg.stage_channels;
        let stem = ConvBn::load(src, &format!("{prefix}.stem"), ConvSpec::dense(3, ch[0], 3, 2), Some(Activation::Relu))?;
        let mut stages = Vec::with_capacity(4);
        let mut c_in = ch[0];
        for (i, &c_out) in ch.iter().enumerate() {
            stages.push(DepthwiseSeparable::load(src, &format!("{prefix}.stage{i}"), c_in, c_out)?);
            c_in = c_out;
        }
        Ok(Self { stem, stages })
    }

    pub fn forward(&self, rgb: &FeatureMap) -> Result<Vec<FeatureMap>> {
        check_input(rgb, "image")?;
        let mut x = self.stem.forward(rgb)?;
        let mut out = Vec::with_capacity(4);
        for s in &self.stages {
            x = s.forward(&x)?;
            out.push(x.clone());
        }
        Ok(out)
    }
}

/// One radar stage: optional 1x1 bridge when channels change, two
/// depthwise 3x3 + BN + ReLU blocks with an additive residual around them,
/// then a stride-2 depthwise 3x3 + BN + ReLU downsample.
#[derive(Debug, Clone)]
pub struct RadarStage {
    pub bridge: Option<ConvParams>,
    pub blocks: [ConvBn; 2],
    pub down: ConvBn,
}

impl RadarStage {
    fn load(src: &mut dyn ParamSource, prefix: &str, c_in: usize, c_out: usize) -> Result<Self> {
        let bridge = if c_in != c_out {
            Some(load_conv(src, &format!("{prefix}.bridge"), ConvSpec::dense(c_in, c_out, 1, 1))?)
        } else {
            None
        };
        let relu = Some(Activation::Relu);
        let blocks = [
            ConvBn::load(src, &format!("{prefix}.block0"), ConvSpec::depthwise(c_out, 3, 1), relu)?,
            ConvBn::load(src, &format!("{prefix}.block1"), ConvSpec::depthwise(c_out, 3, 1), relu)?,
        ];
        let down = ConvBn::load(src, &format!("{prefix}.down"), ConvSpec::depthwise(c_out, 3, 2), relu)?;
        Ok(Self { bridge, blocks, down })
    }

    pub fn forward(&self, x: &FeatureMap) -> Result<FeatureMap> {
        let u = match &self.bridge {
            Some(b) => conv2d(x, b)?,
            None => x.clone(),
        };
        let body = self.blocks[1].forward(&self.blocks[0].forward(&u)?)?;
        self.down.forward(&body.add(&u)?)
    }
}

#[derive(Debug, Clone)]
pub struct RadarEncoder {
    pub stem: ConvBn,
    pub stages: Vec<RadarStage>,
}

impl RadarEncoder {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, cfg: &EncoderConfig) -> Result<Self> {
        let ch = cfg.stage_channels;
        let stem = ConvBn::load(src, &format!("{prefix}.stem"), ConvSpec::dense(3, ch[0], 3, 2), Some(Activation::Relu))?;
        let mut stages = Vec::with_capacity(4);
        let mut c_in = ch[0];
        for (i, &c_out) in ch.iter().enumerate() {
            stages.push(RadarStage::load(src, &format!("{prefix}.stage{i}"), c_in, c_out)?);
            c_in = c_out;
        }
        Ok(Self { stem, stages })
    }

    /// `radar` channels are range, velocity and reflected power.
    pub fn forward(&self, radar: &FeatureMap) -> Result<Vec<FeatureMap>> {
        check_input(radar, "radar")?;
        let mut x = self.stem.forward(radar)?;
        let mut out = Vec::with_capacity(4);
        for s in &self.stages {
            x = s.forward(&x)?;
            out.push(x.clone());
        }
        Ok(out)
    }
}

/// Embedding table `(vocab, embed_dim)`.
#[derive(Debug, Clone)]
pub struct TextEncoder {
    pub table: Matrix,
    pub text_len: usize,
}

impl TextEncoder {
    pub fn load(src: &mut dyn ParamSource, prefix: &str, cfg: &EncoderConfig) -> Result<Self> {
        Ok(Self {
            table: load_matrix(src, &format!("{prefix}.embedding"), cfg.text_vocab, cfg.embed_dim, Init::Embedding)?,
            text_len: cfg.text_len,
        })
    }

    /// Column `j` of the result is the embedding of token `j`; padded
    /// positions read the padding row.
    pub fn forward(&self, tokens: &TokenSequence) -> Result<Matrix> {
        if tokens.ids.len() != self.text_len || tokens.padding_mask.len() != self.text_len {
            return shape_err(format!(
                "token sequence length {} != text_len {}",
                tokens.ids.len(),
                self.text_len
            ));
        }
        if let Some(&bad) = tokens.ids.iter().find(|&&id| id >= self.table.rows()) {
            return Err(Error::InvalidInput(format!(
                "token id {bad} outside vocabulary of {}",
                self.table.rows()
            )));
        }
        let dim = self.table.cols();
        Ok(Matrix::from_fn(dim, self.text_len, |d, j| {
            let id = if tokens.padding_mask[j] { PAD_ID } else { tokens.ids[j] };
            self.table.at(id, d)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Generator, InitMode};

    fn small_cfg() -> EncoderConfig {
        EncoderConfig {
            stage_channels: [4, 8, 8, 12],
            text_vocab: 10,
            text_len: 7,
            embed_dim: 5,
        }
    }

    #[test]
    fn image_stage_shapes() {
        let cfg = small_cfg();
        let mut g = Generator::new(3, InitMode::Random);
        let enc = ImageEncoder::load(&mut g, "enc.image", &cfg).unwrap();
        let rad = RadarEncoder::load(&mut g, "enc.radar", &cfg).unwrap();
        let x = FeatureMap::from_fn([1, 3, 64, 64], |_, c, y, xx| ((c + y * xx) % 7) as f32 / 7.0);
        let img = enc.forward(&x).unwrap();
        let radar = rad.forward(&x).unwrap();
        for (i, (a, b)) in img.iter().zip(&radar).enumerate() {
            let side = 16 >> i;
            assert_eq!(a.shape(), [1, cfg.stage_channels[i], side, side]);
            assert_eq!(a.shape(), b.shape());
        }
    }

    #[test]
    fn rejects_indivisible_input() {
        let cfg = small_cfg();
        let mut g = Generator::new(3, InitMode::Random);
        let enc = ImageEncoder::load(&mut g, "enc.image", &cfg).unwrap();
        let err = enc.forward(&FeatureMap::zeros([1, 3, 48, 64])).unwrap_err();
        assert!(err.to_string().contains("multiples of 32"));
    }

    #[test]
    fn zero_weights_give_zero_stages() {
        let cfg = small_cfg();
        let mut g = Generator::new(0, InitMode::Zero);
        let enc = ImageEncoder::load(&mut g, "enc.image", &cfg).unwrap();
        let rad = RadarEncoder::load(&mut g, "enc.radar", &cfg).unwrap();
        let x = FeatureMap::zeros([1, 3, 64, 64]);
        for s in enc.forward(&x).unwrap().iter().chain(&rad.forward(&x).unwrap()) {
            assert!(s.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn text_lookup() {
        let cfg = small_cfg();
        let table = Matrix::from_fn(10, 5, |r, c| if r % 5 == c { 1.0 } else { 0.0 });
        let enc = TextEncoder { table, text_len: cfg.text_len };
        let pad = enc.forward(&TokenSequence::all_pad(7)).unwrap();
        for j in 1..7 {
            for d in 0..5 {
                assert_eq!(pad.at(d, j), pad.at(d, 0));
            }
        }
        let toks = TokenSequence {
            ids: vec![3, 1, 0, 0, 0, 0, 0],
            padding_mask: vec![false, false, true, true, true, true, true],
        };
        let out = enc.forward(&toks).unwrap();
        assert_eq!((0..5).map(|d| out.at(d, 0)).collect::<Vec<_>>(), vec![0., 0., 0., 1., 0.]);
        assert_eq!(out, enc.forward(&toks).unwrap());
        let bad = TokenSequence {
            ids: vec![10, 0, 0, 0, 0, 0, 0],
            padding_mask: vec![false; 7],
        };
        assert!(enc.forward(&bad).is_err());
    }
}
