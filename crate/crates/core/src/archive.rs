//! `NMVG` weight archives.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! b"NMVG" | u32 version (=1) | u32 manifest_len | manifest (UTF-8) | blob
//! ```
//!
//! The manifest holds one `name dtype shape offset` line per tensor, where
//! `shape` is a comma-separated dimension list and `offset` is a byte
//! offset into the blob. Only `f32` is supported.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{ArchiveError, Result};

pub const MAGIC: &[u8; 4] = b"NMVG";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// Named tensors in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightArchive {
    entries: Vec<ArchiveEntry>,
    index: HashMap<String, usize>,
}

impl WeightArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&ArchiveEntry> {
        self.index.get(name).map(|&i| &self.entries[i])
    }

    pub fn insert(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(ArchiveError::Duplicate(name).into());
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(ArchiveError::ShapeMismatch {
                name,
                expected: shape,
                found: vec![data.len()],
            }
            .into());
        }
        validate_name(&name, 0)?;
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push(ArchiveEntry { name, shape, data });
        Ok(())
    }

    /// Removes every entry whose name starts with `prefix`; returns how many.
    pub fn remove_prefix(&mut self, prefix: &str) -> usize {
        let before = self.entries.len();
        self.entries.retain(|e| !e.name.starts_with(prefix));
        self.reindex();
        before - self.entries.len()
    }

    fn reindex(&mut self) {
        self.index = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.name.clone(), i))
            .collect();
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut manifest = String::new();
        let mut offset = 0usize;
        for e in &self.entries {
            let dims: Vec<String> = e.shape.iter().map(|d| d.to_string()).collect();
            manifest.push_str(&format!("{} f32 {} {}\n", e.name, dims.join(","), offset));
            offset += e.data.len() * 4;
        }
        let mut out = Vec::with_capacity(12 + manifest.len() + offset);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(manifest.as_bytes());
        for e in &self.entries {
            for v in &e.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(ArchiveError::BadMagic.into());
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(ArchiveError::UnsupportedVersion(version).into());
        }
        let mlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let manifest_bytes = bytes.get(12..12 + mlen).ok_or(ArchiveError::Manifest {
            line: 0,
            reason: "manifest extends past end of file".into(),
        })?;
        let manifest = std::str::from_utf8(manifest_bytes).map_err(|e| ArchiveError::Manifest {
            line: 0,
            reason: format!("not UTF-8: {e}"),
        })?;
        let blob = &bytes[12 + mlen..];

        let mut spans: Vec<(usize, usize, String)> = Vec::new();
        let mut archive = WeightArchive::new();
        for (i, line) in manifest.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| ArchiveError::Manifest {
                line: i + 1,
                reason: reason.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [name, dtype, shape, offset] = fields[..] else {
                return Err(bad("expected 4 fields").into());
            };
            if dtype != "f32" {
                return Err(bad(&format!("unsupported dtype {dtype}")).into());
            }
            let shape: Vec<usize> = shape
                .split(',')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad shape"))?;
            let offset: usize = offset.parse().map_err(|_| bad("bad offset"))?;
            let count: usize = shape.iter().product();
            let end = count
                .checked_mul(4)
                .and_then(|b| b.checked_add(offset))
                .ok_or_else(|| ArchiveError::OutOfBounds(name.to_string()))?;
            if end > blob.len() {
                return Err(ArchiveError::OutOfBounds(name.to_string()).into());
            }
            let data = blob[offset..end]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            spans.push((offset, end, name.to_string()));
            archive.insert(name, shape, data)?;
        }
        spans.sort();
        for pair in spans.windows(2) {
            if pair[0].1 > pair[1].0 {
                return Err(ArchiveError::Overlap(pair[0].2.clone(), pair[1].2.clone()).into());
            }
        }
        Ok(archive)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn validate_name(name: &str, line: usize) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) {
        return Err(ArchiveError::Manifest {
            line,
            reason: format!("invalid tensor name '{name}'"),
        }
        .into());
    }
    Ok(())
}
