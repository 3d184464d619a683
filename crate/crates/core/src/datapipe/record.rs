use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// The LLM's verdict on a news item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmJudgment {
    Real,
    Fake,
    Other,
}

impl LlmJudgment {
    /// BCE target for the usability supervision: real 0, fake 1, other 0.5.
    pub fn binary_target(self) -> f64 {
        match self {
            LlmJudgment::Real => 0.0,
            LlmJudgment::Fake => 1.0,
            LlmJudgment::Other => 0.5,
        }
    }

    /// Class index for the three-way rationale classifier.
    pub fn class_index(self) -> usize {
        match self {
            LlmJudgment::Real => 0,
            LlmJudgment::Fake => 1,
            LlmJudgment::Other => 2,
        }
    }

    pub fn from_label(y: u8) -> Self {
        if y == 1 {
            LlmJudgment::Fake
        } else {
            LlmJudgment::Real
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LlmJudgment::Real => "real",
            LlmJudgment::Fake => "fake",
            LlmJudgment::Other => "other",
        }
    }

    /// Case-insensitive `real`/`fake`; anything else is `other`.
    pub fn parse_word(word: &str) -> Self {
        let w = word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
        match w.as_str() {
            "real" | "true" | "真" | "真实" => LlmJudgment::Real,
            "fake" | "false" | "假" | "虚假" => LlmJudgment::Fake,
            _ => LlmJudgment::Other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Zh,
    En,
}

impl std::str::FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zh" => Ok(Lang::Zh),
            "en" => Ok(Lang::En),
            other => Err(Error::config(format!("unknown language {other:?}, expected zh or en"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub n: String,
    pub c: String,
    pub r: String,
    /// 1 = fake.
    pub y: u8,
    pub y_llm: LlmJudgment,
    pub lang: Lang,
    pub split: Split,
    /// Fields not listed above, carried through unchanged.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl NewsRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.n.trim().is_empty() {
            return Err(format!("record {} has empty news text", self.id));
        }
        if self.y > 1 {
            return Err(format!("record {} has label {}, expected 0 or 1", self.id, self.y));
        }
        Ok(())
    }
}

/// Hash used for duplicate detection: NFC, lowercase, collapsed whitespace.
pub fn text_fingerprint(text: &str) -> [u8; 32] {
    let norm: String = text.nfc().collect::<String>().to_lowercase();
    let collapsed = norm.split_whitespace().collect::<Vec<_>>().join(" ");
    Sha256::digest(collapsed.as_bytes()).into()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadReport {
    pub duplicates_dropped: usize,
    pub dropped_ids: Vec<String>,
    pub unknown_fields: BTreeSet<String>,
}

const KNOWN_FIELDS: [&str; 8] = ["id", "n", "c", "r", "y", "y_llm", "lang", "split"];

/// Reads a JSON-lines dataset, dropping records whose news text duplicates an
/// earlier one.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<(Vec<NewsRecord>, LoadReport)> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: NewsRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        record.validate().map_err(|m| parse_err(lineno, m))?;
        for key in record.extra.keys() {
            if report.unknown_fields.insert(key.clone()) {
                log::warn!("{}:{lineno}: unknown field {key:?} preserved", path.display());
            }
        }
        if seen.insert(text_fingerprint(&record.n)) {
            records.push(record);
        } else {
            report.duplicates_dropped += 1;
            report.dropped_ids.push(record.id);
        }
    }
    if report.duplicates_dropped > 0 {
        log::info!(
            "{}: dropped {} duplicate news texts",
            path.display(),
            report.duplicates_dropped
        );
    }
    Ok((records, report))
}

pub fn save_dataset(records: &[NewsRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        if let Some(k) = r.extra.keys().find(|k| KNOWN_FIELDS.contains(&k.as_str())) {
            return Err(Error::arg(format!("extra field {k:?} shadows a record field")));
        }
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Input row for data preparation: news text and gold label, optionally a
/// split or a timestamp to derive one from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub n: String,
    pub y: u8,
    pub lang: Lang,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
}

pub fn load_raw(path: impl AsRef<Path>) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if r.y > 1 || r.n.trim().is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("record {} needs nonempty n and y in {{0, 1}}", r.id),
            });
        }
        out.push(r);
    }
    Ok(out)
}

/// Train/val/test sizes of the two benchmark corpora, used as split ratios.
pub fn split_counts(lang: Lang) -> [usize; 3] {
    match lang {
        Lang::Zh => [5204, 1951, 1951],
        Lang::En => [3884, 1274, 1258],
    }
}

/// Assigns splits to records lacking one: ordered by timestamp (records
/// without a timestamp keep their input order after those with one) and cut in
/// the ratio of `counts`.
pub fn temporal_split(records: &mut [RawRecord], counts: [usize; 3]) {
    let total: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|&a, &b| {
        let ta = records[a].timestamp.unwrap_or(f64::INFINITY);
        let tb = records[b].timestamp.unwrap_or(f64::INFINITY);
        ta.total_cmp(&tb).then(a.cmp(&b))
    });
    let n = records.len() as f64;
    let train_end = (n * counts[0] as f64 / total as f64).round() as usize;
    let val_end = (n * (counts[0] + counts[1]) as f64 / total as f64).round() as usize;
    for (rank, &i) in order.iter().enumerate() {
        if records[i].split.is_some() {
            continue;
        }
        records[i].split = Some(if rank < train_end {
            Split::Train
        } else if rank < val_end {
            Split::Val
        } else {
            Split::Test
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, n: &str) -> NewsRecord {
        NewsRecord {
            id: id.into(),
            n: n.into(),
            c: "topic".into(),
            r: "reasoning. Verdict: fake".into(),
            y: 1,
            y_llm: LlmJudgment::Fake,
            lang: Lang::En,
            split: Split::Train,
            extra: Map::new(),
        }
    }

    #[test]
    fn judgment_mapping() {
        assert_eq!(LlmJudgment::Real.binary_target(), 0.0);
        assert_eq!(LlmJudgment::Fake.binary_target(), 1.0);
        assert_eq!(LlmJudgment::Other.binary_target(), 0.5);
        assert_eq!(
            [LlmJudgment::Real, LlmJudgment::Fake, LlmJudgment::Other].map(LlmJudgment::class_index),
            [0, 1, 2]
        );
        assert_eq!(LlmJudgment::parse_word("REAL."), LlmJudgment::Real);
        assert_eq!(LlmJudgment::parse_word("maybe"), LlmJudgment::Other);
    }

    #[test]
    fn round_trip_and_dedup() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut a = record("a", "Storm hits coast");
        a.extra.insert("source".into(), Value::String("wire".into()));
        let records = vec![a, record("b", "Mayor resigns")];
        save_dataset(&records, &path).unwrap();
        let (loaded, report) = load_dataset(&path).unwrap();
        assert_eq!(loaded, records);
        assert!(report.unknown_fields.contains("source"));

        let dup = vec![record("a", "Storm hits coast"), record("b", "storm  hits COAST")];
        save_dataset(&dup, &path).unwrap();
        let (loaded, report) = load_dataset(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(report.duplicates_dropped, 1);
        assert_eq!(report.dropped_ids, vec!["b".to_string()]);
    }

    #[test]
    fn missing_label_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let good = serde_json::to_string(&record("a", "x")).unwrap();
        let bad = r#"{"id":"b","n":"y","c":"","r":"","y_llm":"real","lang":"en","split":"val"}"#;
        fs::write(&path, format!("{good}\n{bad}\n")).unwrap();
        match load_dataset(&path) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("`y`"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn temporal_split_follows_benchmark_ratios() {
        let total: usize = split_counts(Lang::En).iter().sum();
        let mut raw: Vec<RawRecord> = (0..total)
            .map(|i| RawRecord {
                id: i.to_string(),
                n: format!("item {i}"),
                y: 0,
                lang: Lang::En,
                split: None,
                timestamp: Some((total - i) as f64),
            })
            .collect();
        temporal_split(&mut raw, split_counts(Lang::En));
        let count = |s| raw.iter().filter(|r| r.split == Some(s)).count();
        assert_eq!([count(Split::Train), count(Split::Val), count(Split::Test)], [3884, 1274, 1258]);
        // Latest timestamps (lowest ids here) land in the test split.
        assert_eq!(raw[0].split, Some(Split::Test));
        assert_eq!(raw[total - 1].split, Some(Split::Train));
    }
}
