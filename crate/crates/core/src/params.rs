//! Parameter resolution: every block pulls its tensors by dotted name from a
//! [`ParamSource`], which is either a loaded archive or a seeded generator.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archive::WeightArchive;
use crate::error::{ArchiveError, Result};
use crate::layers::{BnParams, ConvParams, DEFAULT_BN_EPS};
use crate::tensor::{FeatureMap, Matrix};

/// How a freshly generated tensor is filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `±1/sqrt(fan_in)`.
    Weight { fan_in: usize },
    Bias,
    BnGamma,
    BnBeta,
    BnMean,
    BnVar,
    Embedding,
    /// Sinusoidal absolute position table of shape `(dim, len)`.
    Sinusoid,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Random,
    /// Weights, biases and statistics zero; variances one.
    Zero,
}

pub trait ParamSource {
    fn fetch(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Vec<f32>>;

    /// Whether `name` is present without consuming it.
    fn contains(&self, _name: &str) -> bool {
        false
    }
}

/// Sinusoidal table, `pe[2i, pos] = sin(pos / 10000^(2i/dim))`,
/// `pe[2i+1, pos] = cos(..)`.
pub fn sinusoid_table(dim: usize, len: usize) -> Vec<f32> {
    let mut out = vec![0f32; dim * len];
    for d in 0..dim {
        let pair = (d / 2) * 2;
        let freq = 1.0 / 10000f64.powf(pair as f64 / dim.max(1) as f64);
        for pos in 0..len {
            let a = pos as f64 * freq;
            out[d * len + pos] = if d % 2 == 0 { a.sin() } else { a.cos() } as f32;
        }
    }
    out
}

fn name_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Deterministic generator; every tensor depends only on `(seed, name)`.
/// Generated tensors are recorded so they can be written out as an archive.
#[derive(Debug)]
pub struct Generator {
    seed: u64,
    mode: InitMode,
    archive: WeightArchive,
}

impl Generator {
    pub fn new(seed: u64, mode: InitMode) -> Self {
        Self {
            seed,
            mode,
            archive: WeightArchive::new(),
        }
    }

    pub fn into_archive(self) -> WeightArchive {
        self.archive
    }

    fn fill(&self, name: &str, shape: &[usize], init: Init) -> Vec<f32> {
        let n: usize = shape.iter().product();
        if let Init::Sinusoid = init {
            let (dim, len) = (shape[0], shape[1..].iter().product());
            return sinusoid_table(dim, len);
        }
        if self.mode == InitMode::Zero {
            let v = if init == Init::BnVar { 1.0 } else { 0.0 };
            return vec![v; n];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(name_seed(self.seed, name));
        let mut uni = |lo: f32, hi: f32| -> Vec<f32> { (0..n).map(|_| rng.gen_range(lo..hi)).collect() };
        match init {
            Init::Weight { fan_in } => {
                let b = 1.0 / (fan_in.max(1) as f32).sqrt();
                uni(-b, b)
            }
            Init::Bias | Init::BnBeta | Init::BnMean => uni(-0.1, 0.1),
            Init::BnGamma | Init::BnVar => uni(0.5, 1.5),
            Init::Embedding => uni(-1.0, 1.0),
            Init::Zero => vec![0.0; n],
            Init::Sinusoid => unreachable!(),
        }
    }
}

impl ParamSource for Generator {
    fn fetch(&mut self, name: &str, shape: &[usize], init: Init) -> Result<Vec<f32>> {
        let data = self.fill(name, shape, init);
        self.archive.insert(name, shape.to_vec(), data.clone())?;
        Ok(data)
    }
}

/// Reads from an archive and tracks which entries were consumed.
#[derive(Debug)]
pub struct ArchiveSource<'a> {
    archive: &'a WeightArchive,
    used: HashSet<String>,
}

impl<'a> ArchiveSource<'a> {
    pub fn new(archive: &'a WeightArchive) -> Self {
        Self {
            archive,
            used: HashSet::new(),
        }
    }

    /// Fails on the first archive entry that was never requested.
    pub fn finish(self) -> Result<()> {
        for e in self.archive.entries() {
            if !self.used.contains(&e.name) {
                return Err(ArchiveError::Unused(e.name.clone()).into());
            }
        }
        Ok(())
    }
}

impl ParamSource for ArchiveSource<'_> {
    fn fetch(&mut self, name: &str, shape: &[usize], _init: Init) -> Result<Vec<f32>> {
        let entry = self
            .archive
            .get(name)
            .ok_or_else(|| ArchiveError::Missing(name.to_string()))?;
        if entry.shape != shape {
            return Err(ArchiveError::ShapeMismatch {
                name: name.to_string(),
                expected: shape.to_vec(),
                found: entry.shape.clone(),
            }
            .into());
        }
        if !self.used.insert(name.to_string()) {
            return Err(ArchiveError::Duplicate(name.to_string()).into());
        }
        Ok(entry.data.clone())
    }

    fn contains(&self, name: &str) -> bool {
        self.archive.contains(name)
    }
}

/// Convolution layer spec used when resolving `{prefix}.weight` / `{prefix}.bias`.
#[derive(Debug, Clone, Copy)]
pub struct ConvSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    pub bias: bool,
}

impl ConvSpec {
    pub fn dense(c_in: usize, c_out: usize, kernel: usize, stride: usize) -> Self {
        Self {
            c_in,
            c_out,
            kernel,
            stride,
            padding: kernel / 2,
            groups: 1,
            bias: true,
        }
    }

    pub fn depthwise(channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            c_in: channels,
            c_out: channels,
            kernel,
            stride,
            padding: kernel / 2,
            groups: channels,
            bias: true,
        }
    }

    pub fn no_bias(mut self) -> Self {
        self.bias = false;
        self
    }
}

pub fn load_conv(src: &mut dyn ParamSource, prefix: &str, spec: ConvSpec) -> Result<ConvParams> {
    let cin_g = spec.c_in / spec.groups;
    let fan_in = cin_g * spec.kernel * spec.kernel;
    let shape = [spec.c_out, cin_g, spec.kernel, spec.kernel];
    let w = src.fetch(&format!("{prefix}.weight"), &shape, Init::Weight { fan_in })?;
    let bias = if spec.bias {
        Some(src.fetch(&format!("{prefix}.bias"), &[spec.c_out], Init::Bias)?)
    } else {
        None
    };
    ConvParams::new(FeatureMap::new(shape, w)?, bias, spec.stride, spec.padding, spec.groups)
}

pub fn store_conv(archive: &mut WeightArchive, prefix: &str, conv: &ConvParams) -> Result<()> {
    archive.insert(
        format!("{prefix}.weight"),
        conv.weight.shape().to_vec(),
        conv.weight.data().to_vec(),
    )?;
    if let Some(b) = &conv.bias {
        archive.insert(format!("{prefix}.bias"), vec![b.len()], b.clone())?;
    }
    Ok(())
}

pub fn load_bn(src: &mut dyn ParamSource, prefix: &str, channels: usize) -> Result<BnParams> {
    let shape = [channels];
    BnParams::new(
        src.fetch(&format!("{prefix}.gamma"), &shape, Init::BnGamma)?,
        src.fetch(&format!("{prefix}.beta"), &shape, Init::BnBeta)?,
        src.fetch(&format!("{prefix}.mean"), &shape, Init::BnMean)?,
        src.fetch(&format!("{prefix}.var"), &shape, Init::BnVar)?,
        DEFAULT_BN_EPS,
    )
}

pub fn store_bn(archive: &mut WeightArchive, prefix: &str, bn: &BnParams) -> Result<()> {
    let c = bn.channels();
    archive.insert(format!("{prefix}.gamma"), vec![c], bn.gamma.clone())?;
    archive.insert(format!("{prefix}.beta"), vec![c], bn.beta.clone())?;
    archive.insert(format!("{prefix}.mean"), vec![c], bn.running_mean.clone())?;
    archive.insert(format!("{prefix}.var"), vec![c], bn.running_var.clone())?;
    Ok(())
}

pub fn load_matrix(src: &mut dyn ParamSource, name: &str, rows: usize, cols: usize, init: Init) -> Result<Matrix> {
    Matrix::new(rows, cols, src.fetch(name, &[rows, cols], init)?)
}

pub fn load_scalar(src: &mut dyn ParamSource, name: &str, init: Init) -> Result<f32> {
    Ok(src.fetch(name, &[1], init)?[0])
}
