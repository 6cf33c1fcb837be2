//! Binary PGM/PPM (P5/P6, 8-bit) and raw planar little-endian `f32` rasters.

use std::path::Path;

use crate::error::{Error, Result};
use crate::heads::BinaryMask;
use crate::tensor::FeatureMap;

/// Interleaved 8-bit raster with 1 or 3 channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if !(channels == 1 || channels == 3) || data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "raster {width}x{height}x{channels} with {} bytes",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = next_token(bytes, &mut pos)?;
        let channels = match magic.as_str() {
            "P5" => 1,
            "P6" => 3,
            other => return Err(Error::Parse(format!("unsupported raster magic '{other}'"))),
        };
        let width = parse_dim(bytes, &mut pos, "width")?;
        let height = parse_dim(bytes, &mut pos, "height")?;
        let maxval = parse_dim(bytes, &mut pos, "maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::Parse(format!("maxval {maxval} unsupported; only 8-bit rasters")));
        }
        // exactly one whitespace byte separates the header from the pixels
        pos += 1;
        let n = width * height * channels;
        let data = bytes
            .get(pos..pos + n)
            .ok_or_else(|| Error::Parse(format!("raster truncated: need {n} pixel bytes")))?
            .to_vec();
        if maxval != 255 {
            let scaled = data.iter().map(|&v| ((v as u32 * 255 + maxval as u32 / 2) / maxval as u32) as u8);
            return Self::new(width, height, channels, scaled.collect());
        }
        Self::new(width, height, channels, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read(path)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let magic = if self.channels == 1 { "P5" } else { "P6" };
        let mut out = format!("{magic}\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    /// `(1, 3, H, W)` in `[0, 1]`; grey rasters are replicated.
    pub fn to_feature_map(&self) -> FeatureMap {
        let c = self.channels;
        FeatureMap::from_fn([1, 3, self.height, self.width], |_, ch, y, x| {
            let src = if c == 1 { 0 } else { ch };
            self.data[(y * self.width + x) * c + src] as f32 / 255.0
        })
    }

    /// Quantizes the first item of a 3-channel map, clamping to `[0, 1]`.
    pub fn from_feature_map(x: &FeatureMap) -> Result<Self> {
        let [_, c, h, w] = x.shape();
        if c != 3 && c != 1 {
            return Err(Error::InvalidInput(format!("cannot rasterize {c} channels")));
        }
        let mut data = vec![0u8; h * w * c];
        for y in 0..h {
            for xx in 0..w {
                for ch in 0..c {
                    data[(y * w + xx) * c + ch] = (x.at(0, ch, y, xx).clamp(0.0, 1.0) * 255.0).round() as u8;
                }
            }
        }
        Self::new(w, h, c, data)
    }
}

fn skip_ws_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    skip_ws_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("raster header truncated".into()));
    }
    Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

fn parse_dim(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("raster {what} '{tok}' is not an integer")))
}

/// Raw planar `f32` (channel-major, little-endian, no header) into `(1, C, H, W)`.
pub fn parse_planar_f32(bytes: &[u8], channels: usize, height: usize, width: usize) -> Result<FeatureMap> {
    let n = channels * height * width;
    if bytes.len() != n * 4 {
        return Err(Error::Parse(format!(
            "planar f32 raster has {} bytes, expected {} for {channels}x{height}x{width}",
            bytes.len(),
            n * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMap::new([1, channels, height, width], data)
}

pub fn planar_f32_bytes(x: &FeatureMap) -> Vec<u8> {
    x.data().iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Loads a 3-channel model input of `size x size`: `.rf32` files are raw
/// planar floats, anything else a PGM/PPM.
pub fn load_input(path: impl AsRef<Path>, size: usize) -> Result<FeatureMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let x = if path.extension().is_some_and(|e| e == "rf32") {
        parse_planar_f32(&bytes, 3, size, size)?
    } else {
        Raster::parse(&bytes)?.to_feature_map()
    };
    if x.height() != size || x.width() != size {
        return Err(Error::InvalidInput(format!(
            "{}: raster is {}x{}, expected {size}x{size}",
            path.display(),
            x.width(),
            x.height()
        )));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput(format!("{}: non-finite values", path.display())));
    }
    Ok(x)
}

/// Foreground written as 255.
pub fn mask_to_raster(mask: &BinaryMask) -> Raster {
    Raster {
        width: mask.width,
        height: mask.height,
        channels: 1,
        data: mask.bits.iter().map(|&b| b * 255).collect(),
    }
}

/// Pixels above 127 are foreground.
pub fn mask_from_raster(r: &Raster) -> Result<BinaryMask> {
    if r.channels != 1 {
        return Err(Error::InvalidInput("mask raster must be single-channel".into()));
    }
    BinaryMask::new(r.height, r.width, r.data.iter().map(|&v| (v > 127) as u8).collect())
}
