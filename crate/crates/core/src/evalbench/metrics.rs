use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts with fake (label 1) as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub f1_real: f64,
    pub f1_fake: f64,
    pub macf1: f64,
}

/// A prediction counts as fake iff `p >= threshold`.
pub fn confusion(preds: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::arg(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in preds.iter().zip(labels) {
        match (p >= threshold, y) {
            (true, 1) => cm.tp += 1,
            (false, 0) => cm.tn += 1,
            (true, 0) => cm.fp += 1,
            (false, 1) => cm.fn_ += 1,
            (_, other) => return Err(Error::arg(format!("label {other} is not 0 or 1"))),
        }
    }
    Ok(cm)
}

/// `a / b`, with `0 / 0` taken as 0.
fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Mean of the two per-class F1 scores.
pub fn macro_f1(f1_real: f64, f1_fake: f64) -> f64 {
    (f1_real + f1_fake) / 2.0
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::arg("metrics of an empty confusion matrix"));
    }
    let f1_fake = f1(ratio(cm.tp, cm.tp + cm.fp), ratio(cm.tp, cm.tp + cm.fn_));
    let f1_real = f1(ratio(cm.tn, cm.tn + cm.fn_), ratio(cm.tn, cm.tn + cm.fp));
    Ok(MetricsReport {
        acc: ratio(cm.tp + cm.tn, total),
        f1_real,
        f1_fake,
        macf1: macro_f1(f1_real, f1_fake),
    })
}

pub fn evaluate(preds: &[f64], labels: &[u8]) -> Result<MetricsReport> {
    metrics(&confusion(preds, labels, 0.5)?)
}

/// Area under the ROC curve of `scores` ranking the `positive` items first;
/// tied pairs count one half.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(Error::arg("scores and labels differ in length"));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Average ranks over ties (Mann–Whitney U).
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::arg("AUC needs both positive and negative items"));
    }
    let rank_sum: f64 = ranks.iter().zip(positive).filter(|(_, &p)| p).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count_real: usize,
    pub count_fake: usize,
}

/// Per-class histograms of predicted probabilities over equal-width bins on
/// `[0, 1]`. Bins are `[lo, hi)` except the last, which includes 1.
pub fn confidence_histogram(preds: &[f64], labels: &[u8], bins: usize) -> Result<Vec<ConfidenceBin>> {
    if bins < 2 {
        return Err(Error::arg("confidence histogram needs at least 2 bins"));
    }
    if preds.len() != labels.len() {
        return Err(Error::arg("predictions and labels differ in length"));
    }
    let mut out: Vec<ConfidenceBin> = (0..bins)
        .map(|b| ConfidenceBin {
            bin_lo: b as f64 / bins as f64,
            bin_hi: (b + 1) as f64 / bins as f64,
            count_real: 0,
            count_fake: 0,
        })
        .collect();
    for (&p, &y) in preds.iter().zip(labels) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::arg(format!("prediction {p} outside [0, 1]")));
        }
        let b = ((p * bins as f64).floor() as usize).min(bins - 1);
        match y {
            0 => out[b].count_real += 1,
            1 => out[b].count_fake += 1,
            other => return Err(Error::arg(format!("label {other} is not 0 or 1"))),
        }
    }
    Ok(out)
}

pub fn write_confidence_csv(path: impl AsRef<Path>, bins: &[ConfidenceBin]) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    for b in bins {
        w.serialize(b)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

#[derive(Serialize)]
struct MetricsRow<'a> {
    split: &'a str,
    count: usize,
    tp: usize,
    tn: usize,
    fp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    acc: f64,
    f1_real: f64,
    f1_fake: f64,
    macf1: f64,
}

pub fn write_metrics_csv(
    path: impl AsRef<Path>,
    rows: &[(&str, ConfusionMatrix, MetricsReport)],
) -> Result<()> {
    let mut w = csv_writer(path.as_ref())?;
    for (split, cm, m) in rows {
        w.serialize(MetricsRow {
            split,
            count: cm.total(),
            tp: cm.tp,
            tn: cm.tn,
            fp: cm.fp,
            fn_: cm.fn_,
            acc: m.acc,
            f1_real: m.f1_real,
            f1_fake: m.f1_fake,
            macf1: m.macf1,
        })?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0.9, 0.1], &[1, 0], 0.5).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 });
        assert_eq!(confusion(&[0.5], &[1], 0.5).unwrap().tp, 1);
        assert!(confusion(&[0.5], &[1, 0], 0.5).is_err());
    }

    #[test]
    fn metrics_examples() {
        let m = metrics(&ConfusionMatrix { tp: 1, tn: 1, fp: 0, fn_: 0 }).unwrap();
        assert_eq!(m, MetricsReport { acc: 1.0, f1_real: 1.0, f1_fake: 1.0, macf1: 1.0 });

        let m = metrics(&ConfusionMatrix { tp: 50, tn: 40, fp: 10, fn_: 0 }).unwrap();
        assert_abs_diff_eq!(m.acc, 0.9, epsilon = 1e-15);
        let p = 5.0 / 6.0;
        assert_abs_diff_eq!(m.f1_fake, 2.0 * p / (p + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(m.f1_fake, 0.9091, epsilon = 1e-4);

        assert!(metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn macro_f1_of_reported_row() {
        let m = macro_f1(0.824, 0.777);
        assert_abs_diff_eq!(m, 0.8005, epsilon = 1e-12);
        assert_eq!(format!("{:.3}", m + 1e-12), "0.801");
    }

    #[test]
    fn all_one_class_has_zero_f1_for_the_other() {
        let m = evaluate(&[0.9, 0.8], &[1, 1]).unwrap();
        assert_eq!(m.f1_real, 0.0);
        assert_eq!(m.f1_fake, 1.0);
        assert_eq!(m.macf1, 0.5);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(), 0.75);
        assert_eq!(auc(&[0.5, 0.5], &[true, false]).unwrap(), 0.5);
        assert_eq!(auc(&[0.2, 0.9], &[false, true]).unwrap(), 1.0);
        assert!(auc(&[0.2], &[true]).is_err());
    }

    #[test]
    fn auc_matches_pairwise_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scores: Vec<f64> = (0..200).map(|_| (rng.gen_range(0..20) as f64) / 20.0).collect();
        let pos: Vec<bool> = (0..200).map(|_| rng.gen_bool(0.4)).collect();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..200 {
            for j in 0..200 {
                if pos[i] && !pos[j] {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert_abs_diff_eq!(auc(&scores, &pos).unwrap(), wins / pairs, epsilon = 1e-12);
    }

    #[test]
    fn histogram_examples() {
        let h = confidence_histogram(&[0.95; 7], &[1; 7], 10).unwrap();
        assert_eq!(h[9].count_fake, 7);
        assert_eq!(h.iter().map(|b| b.count_fake + b.count_real).sum::<usize>(), 7);

        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let h = confidence_histogram(&grid, &[0; 100], 10).unwrap();
        assert!(h.iter().all(|b| b.count_real == 10));

        let h = confidence_histogram(&[1.0, 0.0], &[0, 1], 4).unwrap();
        assert_eq!(h[3].count_real, 1);
        assert_eq!(h[0].count_fake, 1);
        assert!(confidence_histogram(&[0.5], &[0], 1).is_err());
    }

    #[test]
    fn histogram_csv_conserves_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("confidence.csv");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let preds: Vec<f64> = (0..321).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let labels: Vec<u8> = (0..321).map(|_| rng.gen_range(0..2)).collect();
        write_confidence_csv(&path, &confidence_histogram(&preds, &labels, 10).unwrap()).unwrap();
        let mut total = 0;
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(
            r.headers().unwrap(),
            vec!["bin_lo", "bin_hi", "count_real", "count_fake"]
        );
        for row in r.deserialize::<ConfidenceBin>() {
            let b = row.unwrap();
            total += b.count_real + b.count_fake;
        }
        assert_eq!(total, 321);
    }

    /// Per-sample counting, class by class, straight from the definitions.
    fn brute_force(preds: &[f64], labels: &[u8]) -> MetricsReport {
        let predicted: Vec<u8> = preds.iter().map(|&p| u8::from(p >= 0.5)).collect();
        let class_f1 = |k: u8| {
            let hits = predicted.iter().zip(labels).filter(|&(&p, &y)| p == k && y == k).count();
            let called = predicted.iter().filter(|&&p| p == k).count();
            let actual = labels.iter().filter(|&&y| y == k).count();
            let precision = if called == 0 { 0.0 } else { hits as f64 / called as f64 };
            let recall = if actual == 0 { 0.0 } else { hits as f64 / actual as f64 };
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        };
        let correct = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
        let (f1_real, f1_fake) = (class_f1(0), class_f1(1));
        MetricsReport {
            acc: correct as f64 / labels.len() as f64,
            f1_real,
            f1_fake,
            macf1: (f1_real + f1_fake) / 2.0,
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(1000))]
        #[test]
        fn metrics_match_brute_force(
            pairs in proptest::collection::vec((0.0..=1.0f64, 0u8..2), 1..60),
        ) {
            let (preds, labels): (Vec<f64>, Vec<u8>) = pairs.into_iter().unzip();
            let m = evaluate(&preds, &labels).unwrap();
            proptest::prop_assert_eq!(m, brute_force(&preds, &labels));
            proptest::prop_assert_eq!(m.macf1, (m.f1_real + m.f1_fake) / 2.0);
            proptest::prop_assert_eq!(confusion(&preds, &labels, 0.5).unwrap().total(), preds.len());
        }
    }
}
