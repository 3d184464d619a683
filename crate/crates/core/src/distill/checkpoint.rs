use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{read_container, restore, write_container};
use crate::distill::student::Student;
use crate::encoding::Vocabulary;
use crate::error::{Error, Result};
use crate::fusion::ModelConfig;
use crate::tensor::Matrix;

pub const STUDENT_MAGIC: [u8; 4] = *b"FGD1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudentHeader {
    pub model: ModelConfig,
    pub train_encoder: bool,
    pub simulator_blocks: usize,
    pub vocab: Option<Vocabulary>,
    pub vocab_hash: Option<String>,
}

/// Writes every student tensor: news encoder, simulator and classifier.
pub fn save_student(path: impl AsRef<Path>, student: &Student) -> Result<()> {
    let header = StudentHeader {
        model: student.config.clone(),
        train_encoder: student.train_encoder,
        simulator_blocks: student.simulator.blocks.len(),
        vocab: student.vocab.clone(),
        vocab_hash: student.vocab.as_ref().map(Vocabulary::hash),
    };
    let tensors: Vec<(&str, &Matrix)> = student
        .params
        .tensors()
        .iter()
        .map(|t| (t.name.as_str(), &t.value))
        .collect();
    write_container(path.as_ref(), STUDENT_MAGIC, &header, &tensors)
}

pub fn load_student(path: impl AsRef<Path>) -> Result<Student> {
    let path = path.as_ref();
    let (header, tensors): (StudentHeader, _) = read_container(path, STUDENT_MAGIC)?;
    if let (Some(v), Some(h)) = (&header.vocab, &header.vocab_hash) {
        if &v.hash() != h {
            return Err(Error::Format(format!("{}: vocabulary hash mismatch", path.display())));
        }
    }
    let mut student = Student::blank(header.model, header.vocab, 0, header.train_encoder)?;
    if student.simulator.blocks.len() != header.simulator_blocks {
        return Err(Error::Format(format!(
            "{}: {} simulator blocks, this build uses {}",
            path.display(),
            header.simulator_blocks,
            student.simulator.blocks.len()
        )));
    }
    restore(&mut student.params, tensors, |_| true)?;
    Ok(student)
}
