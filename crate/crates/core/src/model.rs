//! Full network: encoders, per-level fusion, pyramid, experts and heads.

use crate::archive::WeightArchive;
use crate::config::{RunConfig, HEAD_SCALE};
use crate::encoders::{ImageEncoder, RadarEncoder, TextEncoder, TokenSequence};
use crate::enmoe::{enmoe_forward, EnMoeParams};
use crate::error::{shape_err, Error, Result};
use crate::fpn::{fpn_forward, FpnParams};
use crate::heads::{
    binarize, decode_boxes, msrep_fuse, rec_head_forward, res_head_forward, BinaryMask, DetectionBox, MsRepParams,
    RecHeadParams, ResHeadParams,
};
use crate::params::{ArchiveSource, Generator, InitMode, ParamSource};
use crate::tensor::FeatureMap;
use crate::tmdf::{tmdf_fuse, TmdfParams};

/// Smallest side the expert block accepts; coarser levels pass through.
pub const MIN_EXPERT_SIDE: usize = 5;

#[derive(Debug, Clone)]
pub struct NanoMvg {
    config: RunConfig,
    pub image: ImageEncoder,
    pub radar: RadarEncoder,
    pub text: TextEncoder,
    pub tmdf: Vec<TmdfParams>,
    pub fpn: FpnParams,
    pub enmoe: Vec<EnMoeParams>,
    pub rec: RecHeadParams,
    pub res: ResHeadParams,
}

/// Raw head outputs for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    /// `(N, 1, S/4, S/4)`.
    pub heatmap: FeatureMap,
    pub wh: FeatureMap,
    pub offset: FeatureMap,
    /// `(N, 1, S, S)`.
    pub mask_logits: FeatureMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub boxes: Vec<DetectionBox>,
    pub mask: BinaryMask,
}

impl NanoMvg {
    pub fn load(src: &mut dyn ParamSource, config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let enc = &config.encoder;
        let ch = enc.stage_channels;
        let fpn_c = config.fpn_channels;
        let image = ImageEncoder::load(src, "encoder.image", enc)?;
        let radar = RadarEncoder::load(src, "encoder.radar", enc)?;
        let text = TextEncoder::load(src, "encoder.text", enc)?;
        let tmdf = (0..4)
            .map(|i| {
                let s = config.level_size(i);
                TmdfParams::load(
                    src,
                    &format!("tmdf.stage{i}"),
                    ch[i],
                    s,
                    s,
                    enc.embed_dim,
                    enc.text_len,
                    config.attention_normalize,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let fpn = FpnParams::load(src, "fpn", ch, fpn_c)?;
        let enmoe = (0..4)
            .map(|i| EnMoeParams::load(src, &format!("enmoe.stage{i}"), fpn_c))
            .collect::<Result<Vec<_>>>()?;
        let rec = RecHeadParams::load(src, "rec", fpn_c, HEAD_SCALE)?;
        let res = ResHeadParams::load(src, "res", fpn_c)?;
        Ok(Self {
            config: config.clone(),
            image,
            radar,
            text,
            tmdf,
            fpn,
            enmoe,
            rec,
            res,
        })
    }

    /// Loads every parameter from `archive`, which must hold no extras.
    pub fn from_archive(archive: &WeightArchive, config: &RunConfig) -> Result<Self> {
        let mut src = ArchiveSource::new(archive);
        let model = Self::load(&mut src, config)?;
        src.finish()?;
        Ok(model)
    }

    /// Seeded parameters plus the archive that reproduces them.
    pub fn generate(config: &RunConfig, seed: u64, mode: InitMode) -> Result<(Self, WeightArchive)> {
        let mut g = Generator::new(seed, mode);
        let model = Self::load(&mut g, config)?;
        Ok((model, g.into_archive()))
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn is_fused(&self) -> bool {
        self.res.is_fused()
    }

    /// Copy with every mask-head block collapsed to a single conv.
    pub fn fused(&self) -> Result<Self> {
        let mut m = self.clone();
        m.res = self.res.fused()?;
        Ok(m)
    }

    pub fn forward(&self, image: &FeatureMap, radar: &FeatureMap, tokens: &[TokenSequence]) -> Result<ModelOutput> {
        let s = self.config.input_size;
        let [n, _, h, w] = image.shape();
        if (h, w) != (s, s) {
            return shape_err(format!("image is {h}x{w}, model expects {s}x{s}"));
        }
        if radar.shape() != image.shape() {
            return shape_err(format!(
                "radar {:?} does not match image {:?}",
                radar.shape(),
                image.shape()
            ));
        }
        if tokens.len() != n {
            return shape_err(format!("{} prompts for a batch of {n}", tokens.len()));
        }
        let img_levels = self.image.forward(image)?;
        let radar_levels = self.radar.forward(radar)?;
        let text = tokens.iter().map(|t| self.text.forward(t)).collect::<Result<Vec<_>>>()?;

        let fused = img_levels
            .iter()
            .zip(&radar_levels)
            .zip(&self.tmdf)
            .map(|((fi, fr), p)| tmdf_fuse(fi, fr, &text, p))
            .collect::<Result<Vec<_>>>()?;
        let pyramid = fpn_forward(&fused, &self.fpn)?;
        let experts = pyramid
            .iter()
            .zip(&self.enmoe)
            .enumerate()
            .map(|(i, (level, p))| {
                if level.height() < MIN_EXPERT_SIDE || level.width() < MIN_EXPERT_SIDE {
                    log::debug!(
                        "level {i} is {}x{}; skipping experts",
                        level.height(),
                        level.width()
                    );
                    Ok(level.clone())
                } else {
                    enmoe_forward(level, p)
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let rec = rec_head_forward(&experts[0], &self.rec)?;
        let mask_logits = res_head_forward(&experts, &self.res, (h, w))?;
        Ok(ModelOutput {
            heatmap: rec.heatmap,
            wh: rec.wh,
            offset: rec.offset,
            mask_logits,
        })
    }

    /// Boxes and binary mask per batch item using the configured thresholds.
    pub fn infer(&self, image: &FeatureMap, radar: &FeatureMap, tokens: &[TokenSequence]) -> Result<Vec<Prediction>> {
        let out = self.forward(image, radar, tokens)?;
        self.postprocess(&out)
    }

    pub fn postprocess(&self, out: &ModelOutput) -> Result<Vec<Prediction>> {
        let c = &self.config;
        let masks = binarize(&out.mask_logits, c.mask_thresh);
        masks
            .into_iter()
            .enumerate()
            .map(|(b, mask)| {
                let boxes = decode_boxes(
                    &out.heatmap.batch_item(b),
                    &out.wh.batch_item(b),
                    &out.offset.batch_item(b),
                    self.rec.downsample,
                    c.topk,
                    c.score_thresh,
                )?;
                Ok(Prediction { boxes, mask })
            })
            .collect()
    }
}

/// Rewrites the mask-head blocks of `archive` into their fused form. All
/// other entries are kept unchanged.
pub fn fuse_archive(archive: &WeightArchive, config: &RunConfig) -> Result<WeightArchive> {
    let model = NanoMvg::from_archive(archive, config)?;
    if model.res.blocks.iter().any(MsRepParams::is_fused) {
        return Err(Error::AlreadyFused);
    }
    let mut out = archive.clone();
    for (i, block) in model.res.blocks.iter().enumerate() {
        let prefix = format!("res.msrep{i}");
        out.remove_prefix(&format!("{prefix}."));
        msrep_fuse(block)?.store(&mut out, &prefix)?;
    }
    Ok(out)
}

pub fn generate_archive(config: &RunConfig, seed: u64, mode: InitMode) -> Result<WeightArchive> {
    Ok(NanoMvg::generate(config, seed, mode)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig::parse("input_size = 64\nstage_channels = 4,4,8,8\nfpn_channels = 8\nembed_dim = 8\ntext_vocab = 32\n")
            .unwrap()
    }

    fn inputs(n: usize) -> (FeatureMap, FeatureMap, Vec<TokenSequence>) {
        let img = FeatureMap::from_fn([n, 3, 64, 64], |b, c, y, x| ((b + c + y * 3 + x) % 17) as f32 / 17.0);
        let radar = FeatureMap::from_fn([n, 3, 64, 64], |b, c, y, x| ((b * 5 + c + y + x * 7) % 13) as f32 / 13.0);
        let tok = TokenSequence {
            ids: (0..50).map(|i| if i < 4 { i + 2 } else { 0 }).collect(),
            padding_mask: (0..50).map(|i| i >= 4).collect(),
        };
        (img, radar, vec![tok; n])
    }

    #[test]
    fn shapes_at_64() {
        let cfg = small();
        let (m, _) = NanoMvg::generate(&cfg, 3, InitMode::Random).unwrap();
        let (img, radar, tok) = inputs(1);
        let out = m.forward(&img, &radar, &tok).unwrap();
        assert_eq!(out.heatmap.shape(), [1, 1, 16, 16]);
        assert_eq!(out.mask_logits.shape(), [1, 1, 64, 64]);
        assert!(out.heatmap.is_finite() && out.mask_logits.is_finite());
    }

    #[test]
    fn archive_round_trip_and_fuse() {
        let cfg = small();
        let (m, archive) = NanoMvg::generate(&cfg, 5, InitMode::Random).unwrap();
        let loaded = NanoMvg::from_archive(&archive, &cfg).unwrap();
        let (img, radar, tok) = inputs(1);
        let a = m.forward(&img, &radar, &tok).unwrap();
        assert_eq!(a, loaded.forward(&img, &radar, &tok).unwrap());

        let fused_archive = fuse_archive(&archive, &cfg).unwrap();
        let fused = NanoMvg::from_archive(&fused_archive, &cfg).unwrap();
        assert!(fused.is_fused());
        let b = fused.forward(&img, &radar, &tok).unwrap();
        assert!(a.mask_logits.max_abs_diff(&b.mask_logits) <= 1e-5);
        assert!(fuse_archive(&fused_archive, &cfg).is_err());
    }

    #[test]
    fn missing_parameter_is_named() {
        let cfg = small();
        let mut archive = generate_archive(&cfg, 1, InitMode::Zero).unwrap();
        archive.remove_prefix("enmoe.stage0.theta1_raw");
        let err = NanoMvg::from_archive(&archive, &cfg).unwrap_err();
        assert!(err.to_string().contains("enmoe.stage0.theta1_raw"), "{err}");
    }

    #[test]
    fn zero_weights_give_no_boxes() {
        let cfg = small();
        let (m, _) = NanoMvg::generate(&cfg, 0, InitMode::Zero).unwrap();
        let (img, radar, tok) = inputs(2);
        let preds = m.infer(&img, &radar, &tok).unwrap();
        assert_eq!(preds.len(), 2);
        assert!(preds.iter().all(|p| p.boxes.is_empty()));
        assert_eq!((preds[0].mask.height, preds[0].mask.width), (64, 64));
    }
}
