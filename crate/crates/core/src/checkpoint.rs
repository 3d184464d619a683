//! Binary checkpoints: a 4-byte magic, a length-prefixed JSON header and a
//! list of named `f64` tensors, all little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::encoding::bundle::{read_matrix, read_u32, write_matrix};
use crate::encoding::Vocabulary;
use crate::error::{Error, Result};
use crate::fusion::{ModelConfig, Teacher};
use crate::params::ParamStore;
use crate::tensor::Matrix;
use crate::training::aux::AUX_PREFIX;

pub const TEACHER_MAGIC: [u8; 4] = *b"FG1\0";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherHeader {
    pub model: ModelConfig,
    pub vocab: Option<Vocabulary>,
    pub vocab_hash: Option<String>,
}

fn len_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Format(format!("{what} length {n} exceeds u32")))
}

pub(crate) fn write_container<H: Serialize>(
    path: &Path,
    magic: [u8; 4],
    header: &H,
    tensors: &[(&str, &Matrix)],
) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let json = serde_json::to_vec(header)?;
    w.write_all(&magic).map_err(io)?;
    w.write_all(&len_u32(json.len(), "header")?.to_le_bytes()).map_err(io)?;
    w.write_all(&json).map_err(io)?;
    w.write_all(&len_u32(tensors.len(), "tensor list")?.to_le_bytes()).map_err(io)?;
    for (name, m) in tensors {
        w.write_all(&len_u32(name.len(), "name")?.to_le_bytes()).map_err(io)?;
        w.write_all(name.as_bytes()).map_err(io)?;
        write_matrix(&mut w, m).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub(crate) fn read_container<H: DeserializeOwned>(path: &Path, magic: [u8; 4]) -> Result<(H, Vec<(String, Matrix)>)> {
    let io = |e| Error::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut got = [0u8; 4];
    r.read_exact(&mut got).map_err(io)?;
    if got != magic {
        return Err(Error::Format(format!(
            "{}: bad magic {:?}, expected {:?}",
            path.display(),
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(&magic)
        )));
    }
    let n = read_u32(&mut r).map_err(io)? as usize;
    let mut json = vec![0u8; n];
    r.read_exact(&mut json).map_err(io)?;
    let header = serde_json::from_slice(&json)?;
    let count = read_u32(&mut r).map_err(io)? as usize;
    let mut tensors = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let len = read_u32(&mut r).map_err(io)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(io)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(format!("tensor name: {e}")))?;
        tensors.push((name, read_matrix(&mut r).map_err(io)?));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io)? != 0 {
        return Err(Error::Format(format!("{}: trailing bytes", path.display())));
    }
    Ok((header, tensors))
}

/// Copies named tensors into `store`. Every tensor must already exist there
/// with the same shape and every store entry accepted by `wanted` must be
/// supplied.
pub(crate) fn restore(store: &mut ParamStore, tensors: Vec<(String, Matrix)>, wanted: impl Fn(&str) -> bool) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for (name, m) in tensors {
        let id = store
            .find(&name)
            .ok_or_else(|| Error::Format(format!("checkpoint tensor {name} is not part of the model")))?;
        store.set(id, m)?;
        seen.insert(name);
    }
    let missing: Vec<&str> = store
        .tensors()
        .iter()
        .map(|t| t.name.as_str())
        .filter(|n| wanted(n) && !seen.contains(*n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Format(format!("checkpoint lacks {}", missing.join(", "))));
    }
    Ok(())
}

fn inference_param(name: &str) -> bool {
    !name.starts_with(AUX_PREFIX)
}

/// Writes the inference parameters of `teacher`. Auxiliary training heads are
/// left out.
pub fn save_teacher(path: impl AsRef<Path>, teacher: &Teacher) -> Result<()> {
    let header = TeacherHeader {
        model: teacher.config().clone(),
        vocab: teacher.vocab.clone(),
        vocab_hash: teacher.vocab.as_ref().map(Vocabulary::hash),
    };
    let tensors: Vec<(&str, &Matrix)> = teacher
        .params
        .tensors()
        .iter()
        .filter(|t| inference_param(&t.name))
        .map(|t| (t.name.as_str(), &t.value))
        .collect();
    write_container(path.as_ref(), TEACHER_MAGIC, &header, &tensors)
}

pub fn load_teacher(path: impl AsRef<Path>) -> Result<Teacher> {
    let path = path.as_ref();
    let (header, tensors): (TeacherHeader, _) = read_container(path, TEACHER_MAGIC)?;
    if let (Some(v), Some(h)) = (&header.vocab, &header.vocab_hash) {
        if &v.hash() != h {
            return Err(Error::Format(format!("{}: vocabulary hash mismatch", path.display())));
        }
    }
    header.model.validate()?;
    let mut teacher = Teacher::new(header.model, header.vocab, 0)?;
    restore(&mut teacher.params, tensors, inference_param)?;
    Ok(teacher)
}
