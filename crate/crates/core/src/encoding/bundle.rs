//! Embedding bundles: precomputed `[T×d]` matrices on disk.
//!
//! Layout: `manifest.json` plus one binary file per record and role holding
//! `u32 T`, `u32 d` (little-endian) followed by `T·d` little-endian `f64`
//! values in row-major order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::encoding::{EncodedSequence, Role};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const BUNDLE_FORMAT: &str = "FGE1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub format: String,
    pub d: usize,
    pub record_count: usize,
    pub roles: Vec<Role>,
    /// record id → role → file name relative to the bundle directory.
    pub files: BTreeMap<String, BTreeMap<Role, String>>,
}

pub fn write_matrix(w: &mut impl Write, m: &Matrix) -> std::io::Result<()> {
    w.write_all(&u32_of(m.rows())?.to_le_bytes())?;
    w.write_all(&u32_of(m.cols())?.to_le_bytes())?;
    let mut buf = Vec::with_capacity(m.len() * 8);
    for v in m.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn u32_of(n: usize) -> std::io::Result<u32> {
    u32::try_from(n).map_err(|_| std::io::Error::other(format!("{n} does not fit in u32")))
}

pub fn read_matrix(r: &mut impl Read) -> std::io::Result<Matrix> {
    let rows = read_u32(r)? as usize;
    let cols = read_u32(r)? as usize;
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data).map_err(std::io::Error::other)
}

pub(crate) fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Writes matrices into a bundle directory; the manifest is written by
/// [`BundleWriter::finish`].
pub struct BundleWriter {
    dir: PathBuf,
    d: usize,
    files: BTreeMap<String, BTreeMap<Role, String>>,
    order: Vec<String>,
}

impl BundleWriter {
    pub fn create(dir: impl AsRef<Path>, d: usize) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            d,
            files: BTreeMap::new(),
            order: Vec::new(),
        })
    }

    pub fn add(&mut self, record_id: &str, role: Role, m: &Matrix) -> Result<()> {
        if m.cols() != self.d {
            return Err(Error::shape(format!(
                "bundle has d={}, matrix for {record_id} has {} columns",
                self.d,
                m.cols()
            )));
        }
        if !self.files.contains_key(record_id) {
            self.order.push(record_id.to_string());
        }
        let index = self.order.iter().position(|r| r == record_id).unwrap();
        let name = format!("{index:06}.{}.bin", role.as_str());
        let path = self.dir.join(&name);
        let mut buf = Vec::new();
        write_matrix(&mut buf, m).map_err(|e| Error::io(&path, e))?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        self.files.entry(record_id.to_string()).or_default().insert(role, name);
        Ok(())
    }

    pub fn finish(self) -> Result<BundleManifest> {
        let mut roles: Vec<Role> = self.files.values().flat_map(|m| m.keys().copied()).collect();
        roles.sort();
        roles.dedup();
        let manifest = BundleManifest {
            format: BUNDLE_FORMAT.to_string(),
            d: self.d,
            record_count: self.files.len(),
            roles,
            files: self.files,
        };
        let path = self.dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

#[derive(Clone, Debug)]
pub struct EmbeddingBundle {
    dir: PathBuf,
    manifest: BundleManifest,
}

impl EmbeddingBundle {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: BundleManifest = serde_json::from_str(&text)?;
        if manifest.format != BUNDLE_FORMAT {
            return Err(Error::Format(format!(
                "unknown bundle format {:?}",
                manifest.format
            )));
        }
        Ok(Self { dir, manifest })
    }

    pub fn manifest(&self) -> &BundleManifest {
        &self.manifest
    }

    pub fn d(&self) -> usize {
        self.manifest.d
    }

    /// Loads one matrix, checking its width against `expected_d`.
    pub fn load(&self, record_id: &str, role: Role, expected_d: usize) -> Result<EncodedSequence> {
        if self.manifest.d != expected_d {
            return Err(Error::config(format!(
                "bundle has d={}, model is configured with d={expected_d}",
                self.manifest.d
            )));
        }
        let name = self
            .manifest
            .files
            .get(record_id)
            .and_then(|roles| roles.get(&role))
            .ok_or_else(|| {
                Error::Lookup(format!("no {} matrix for record {record_id}", role.as_str()))
            })?;
        let path = self.dir.join(name);
        let mut file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let matrix = read_matrix(&mut std::io::BufReader::new(&mut file)).map_err(|e| Error::io(&path, e))?;
        if matrix.cols() != expected_d {
            return Err(Error::config(format!(
                "{} stores d={}, expected {expected_d}",
                path.display(),
                matrix.cols()
            )));
        }
        Ok(EncodedSequence { matrix, role })
    }
}

pub fn load_precomputed(
    dir: impl AsRef<Path>,
    record_id: &str,
    role: Role,
    expected_d: usize,
) -> Result<EncodedSequence> {
    EmbeddingBundle::open(dir)?.load(record_id, role, expected_d)
}
