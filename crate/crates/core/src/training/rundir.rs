//! Layout of a training run directory.
//!
//! ```text
//! <run>/config.json
//! <run>/history.csv
//! <run>/checkpoints/epoch_NNN.fg1   one per improving epoch
//! <run>/checkpoints/best.fg1
//! <run>/meta.json                   wall-clock data, excluded from determinism checks
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::checkpoint::save_teacher;
use crate::error::{Error, Result};
use crate::fusion::Teacher;
use crate::training::trainer::EpochRecord;

#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let ck = root.join("checkpoints");
        fs::create_dir_all(&ck).map_err(|e| Error::io(&ck, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn checkpoint_path(&self, epoch: usize) -> PathBuf {
        self.root.join("checkpoints").join(format!("epoch_{epoch:03}.fg1"))
    }

    pub fn best_path(&self) -> PathBuf {
        self.root.join("checkpoints").join("best.fg1")
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        write_json(&self.path(name), value)
    }

    /// Rewrites `history.csv` with all rows so far.
    pub fn write_history(&self, history: &[EpochRecord]) -> Result<()> {
        write_history(&self.path("history.csv"), history)
    }

    /// Saves the epoch checkpoint and refreshes `best.fg1`.
    pub fn save_improvement(&self, epoch: usize, teacher: &Teacher) -> Result<()> {
        let p = self.checkpoint_path(epoch);
        save_teacher(&p, teacher)?;
        fs::copy(&p, self.best_path()).map_err(|e| Error::io(self.best_path(), e))?;
        Ok(())
    }

    pub fn write_meta(&self, started: SystemTime, extra: serde_json::Value) -> Result<()> {
        let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        let now = SystemTime::now();
        let meta = serde_json::json!({
            "started_unix": secs(started),
            "finished_unix": secs(now),
            "elapsed_s": now.duration_since(started).map_or(0.0, |d| d.as_secs_f64()),
            "version": env!("CARGO_PKG_VERSION"),
            "info": extra,
        });
        self.write_json("meta.json", &meta)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_history(path: &Path) -> Result<Vec<EpochRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn history_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::create(dir.path().join("run")).unwrap();
        let rows = vec![
            EpochRecord {
                epoch: 1,
                l_cls: 0.69,
                l_usability: 1.3,
                l_text: 1.8,
                l_total: 1.2,
                val_acc: 0.5,
                val_macf1: 0.4,
                val_f1_real: 0.3,
                val_f1_fake: 0.5,
            };
            2
        ];
        run.write_history(&rows).unwrap();
        assert_eq!(read_history(&run.path("history.csv")).unwrap(), rows);
        let text = fs::read_to_string(run.path("history.csv")).unwrap();
        assert!(text.starts_with("epoch,l_cls,l_usability,l_text,l_total,val_acc,val_macf1,val_f1_real,val_f1_fake\n"));
    }
}
