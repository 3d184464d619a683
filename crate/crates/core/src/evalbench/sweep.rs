//! Hyperparameter sweeps over the loss weights and the distillation weight.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evalbench::metrics::{csv_writer, MetricsReport};

/// `0.0, 0.1, …, 1.0`.
pub fn unit_grid() -> Vec<f64> {
    (0..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// `0, 1, …, 10`.
pub fn integer_grid() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub alpha: f64,
    pub beta: f64,
    pub macf1: f64,
    pub acc: f64,
    pub f1_real: f64,
    pub f1_fake: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaRow {
    pub lambda: f64,
    pub macf1: f64,
    pub acc: f64,
    pub f1_real: f64,
    pub f1_fake: f64,
    /// Held-out feature MSE against the teacher.
    pub mse: f64,
}

/// Runs `cell` on every `(α, β)` pair. Cells run in parallel; rows come back
/// in row-major grid order (α outer).
pub fn grid_search<F>(alphas: &[f64], betas: &[f64], cell: F) -> Result<Vec<SurfaceRow>>
where
    F: Fn(f64, f64) -> Result<MetricsReport> + Sync,
{
    if alphas.is_empty() || betas.is_empty() {
        return Err(Error::arg("alpha and beta grids must be nonempty"));
    }
    let pairs: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| betas.iter().map(move |&b| (a, b))).collect();
    pairs
        .par_iter()
        .map(|&(alpha, beta)| {
            let m = cell(alpha, beta)?;
            log::info!("alpha={alpha} beta={beta} macf1={:.4}", m.macf1);
            Ok(SurfaceRow {
                alpha,
                beta,
                macf1: m.macf1,
                acc: m.acc,
                f1_real: m.f1_real,
                f1_fake: m.f1_fake,
            })
        })
        .collect()
}

/// Runs `cell` for every λ; it returns test metrics and the held-out MSE.
pub fn lambda_sweep<F>(lambdas: &[f64], cell: F) -> Result<Vec<LambdaRow>>
where
    F: Fn(f64) -> Result<(MetricsReport, f64)> + Sync,
{
    if lambdas.is_empty() {
        return Err(Error::arg("lambda grid must be nonempty"));
    }
    lambdas
        .par_iter()
        .map(|&lambda| {
            let (m, mse) = cell(lambda)?;
            log::info!("lambda={lambda} macf1={:.4} mse={mse:.6}", m.macf1);
            Ok(LambdaRow {
                lambda,
                macf1: m.macf1,
                acc: m.acc,
                f1_real: m.f1_real,
                f1_fake: m.f1_fake,
                mse,
            })
        })
        .collect()
}

pub fn write_rows<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_cell(a: f64, b: f64) -> Result<MetricsReport> {
        Ok(MetricsReport {
            acc: a,
            f1_real: b,
            f1_fake: a,
            macf1: (a + b) / 2.0,
        })
    }

    #[test]
    fn grid_cardinality_and_order() {
        let rows = grid_search(&[0.1, 0.2], &[0.3, 0.4], fake_cell).unwrap();
        assert_eq!(rows.len(), 4);
        let pairs: Vec<_> = rows.iter().map(|r| (r.alpha, r.beta)).collect();
        assert_eq!(pairs, [(0.1, 0.3), (0.1, 0.4), (0.2, 0.3), (0.2, 0.4)]);

        let rows = grid_search(&[0.5], &unit_grid(), fake_cell).unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows.iter().all(|r| r.alpha == 0.5));
        assert!(grid_search(&[], &[0.1], fake_cell).is_err());
    }

    #[test]
    fn default_grids() {
        assert_eq!(unit_grid().len(), 11);
        assert_eq!(unit_grid()[4], 0.4);
        assert_eq!(integer_grid().len(), 11);
        assert!(integer_grid().contains(&8.0));
    }

    #[test]
    fn lambda_rows_and_csv() {
        let rows = lambda_sweep(&integer_grid(), |l| Ok((MetricsReport::default(), l * 0.01))).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[8].lambda, 8.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lambda.csv");
        write_rows(&p, &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("lambda,macf1,acc,f1_real,f1_fake,mse\n"));
        assert_eq!(text.lines().count(), 12);

        let p = dir.path().join("surface.csv");
        write_rows(&p, &grid_search(&[0.0], &[1.0], fake_cell).unwrap()).unwrap();
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("alpha,beta,macf1,acc,f1_real,f1_fake\n"));
    }
}
