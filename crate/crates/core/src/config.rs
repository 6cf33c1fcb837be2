//! `key = value` configuration files.

use std::path::{Path, PathBuf};

use crate::encoders::EncoderConfig;
use crate::error::{Error, Result};
use crate::fpn::DEFAULT_FPN_CHANNELS;

/// Splits `key = value` lines, ignoring blanks and `#` comments.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected 'key = value', got '{line}'", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Pixels per heatmap cell; the detection head reads the 1/4 pyramid level.
pub const HEAD_SCALE: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_size: usize,
    pub encoder: EncoderConfig,
    pub fpn_channels: usize,
    pub attention_normalize: bool,
    pub head_scale: usize,
    pub score_thresh: f32,
    pub topk: usize,
    pub mask_thresh: f32,
    pub loss_config: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input_size: 640,
            encoder: EncoderConfig::default(),
            fpn_channels: DEFAULT_FPN_CHANNELS,
            attention_normalize: false,
            head_scale: HEAD_SCALE,
            score_thresh: 0.6,
            topk: 10,
            mask_thresh: 0.0,
            loss_config: None,
            seed: 0,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("config: '{key}' has invalid value '{value}'")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "input_size" => self.input_size = num(key, value)?,
            "stage_channels" => {
                let parts: Vec<usize> = value
                    .split(',')
                    .map(|p| num(key, p.trim()))
                    .collect::<Result<_>>()?;
                self.encoder.stage_channels = parts
                    .try_into()
                    .map_err(|_| Error::Parse("config: stage_channels needs 4 comma-separated values".into()))?;
            }
            "fpn_channels" => self.fpn_channels = num(key, value)?,
            "embed_dim" => self.encoder.embed_dim = num(key, value)?,
            "text_vocab" => self.encoder.text_vocab = num(key, value)?,
            "text_len" => self.encoder.text_len = num(key, value)?,
            "attention_normalize" => self.attention_normalize = num(key, value)?,
            "head_scale" => self.head_scale = num(key, value)?,
            "score_thresh" => self.score_thresh = num(key, value)?,
            "topk" => self.topk = num(key, value)?,
            "mask_thresh" => self.mask_thresh = num(key, value)?,
            "loss_config" => self.loss_config = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::Parse(format!("config: unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || !self.input_size.is_multiple_of(32) {
            return Err(Error::InvalidParam(format!(
                "input_size {} must be a positive multiple of 32",
                self.input_size
            )));
        }
        if self.head_scale != HEAD_SCALE {
            return Err(Error::InvalidParam(format!(
                "head_scale {} unsupported; the detection head runs at stride {HEAD_SCALE}",
                self.head_scale
            )));
        }
        if self.fpn_channels == 0 || self.topk == 0 {
            return Err(Error::InvalidParam("fpn_channels and topk must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.score_thresh) || !self.mask_thresh.is_finite() {
            return Err(Error::InvalidParam("score_thresh must lie in [0, 1]; mask_thresh finite".into()));
        }
        self.encoder.validate()
    }

    /// Key-value text that [`RunConfig::parse`] reads back to `self`.
    pub fn to_text(&self) -> String {
        let c = self.encoder.stage_channels;
        let mut out = format!(
            "input_size = {}\nstage_channels = {},{},{},{}\nfpn_channels = {}\nembed_dim = {}\ntext_vocab = {}\n\
             text_len = {}\nattention_normalize = {}\nhead_scale = {}\nscore_thresh = {}\ntopk = {}\n\
             mask_thresh = {}\nseed = {}\n",
            self.input_size,
            c[0],
            c[1],
            c[2],
            c[3],
            self.fpn_channels,
            self.encoder.embed_dim,
            self.encoder.text_vocab,
            self.encoder.text_len,
            self.attention_normalize,
            self.head_scale,
            self.score_thresh,
            self.topk,
            self.mask_thresh,
            self.seed
        );
        if let Some(p) = &self.loss_config {
            out.push_str(&format!("loss_config = {}\n", p.display()));
        }
        out
    }

    /// Side length of pyramid level `i` (0 = 1/4).
    pub fn level_size(&self, i: usize) -> usize {
        self.input_size / (HEAD_SCALE << i)
    }
}
