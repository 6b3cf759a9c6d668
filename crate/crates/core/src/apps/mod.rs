//! Classification pipelines that run end to end on a compiled encoding.

mod dataset;
mod hdc;
mod knn;
mod quantize;

pub use dataset::{load_csv, load_idx_images, load_idx_labels, load_mnist, Dataset};
pub use hdc::{HdcConfig, HdcEvaluation, HdcModel};
pub use knn::{hardware_knn, majority_label, software_knn, KnnEvaluation};
pub use quantize::Quantizer;

use std::path::PathBuf;

use thiserror::Error;

use crate::array::ArrayError;
use crate::encoder::{derive_encoding, EncoderError, VoltageEncoding};
use crate::metric::{build_dm, symbol_distance, DistanceSpec, MetricError, MetricKind};
use crate::solver::{find_min_k, CurrentRange, SolveOptions, SolverError};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("class {0} has no training samples")]
    EmptyClass(usize),
    #[error("{0}")]
    Shape(String),
    #[error("no encoding found for {kind} with up to {k_max} FeFETs")]
    NoEncoding { kind: MetricKind, k_max: usize },
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

/// Compiles a built-in metric with the smallest cell that realizes it. The
/// current range is every integer up to the largest matrix entry.
pub fn compile_metric(
    kind: MetricKind,
    bits: usize,
    k_max: usize,
) -> Result<VoltageEncoding, AppError> {
    let dm = build_dm(&DistanceSpec::built_in(kind, bits as u32))?;
    let cr = CurrentRange::contiguous(dm.max_entry().max(1))?;
    let result = find_min_k(&dm, &cr, k_max, &SolveOptions::default())?;
    let ga = result
        .solution()
        .ok_or(AppError::NoEncoding { kind, k_max })?;
    Ok(derive_encoding(ga)?)
}

/// Summed per-symbol distance between two symbol vectors.
pub fn vector_distance(kind: MetricKind, a: &[u32], b: &[u32]) -> u64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| symbol_distance(kind, x, y) as u64)
        .sum()
}

/// Row with the smallest distance to `query`, lowest index on ties.
pub fn nearest_row(kind: MetricKind, rows: &[Vec<u32>], query: &[u32]) -> usize {
    let mut best = (u64::MAX, 0);
    for (i, row) in rows.iter().enumerate() {
        let d = vector_distance(kind, query, row);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::verify_encoding;

    #[test]
    fn compiled_metrics_verify() {
        for kind in MetricKind::BUILT_IN {
            let enc = compile_metric(kind, 2, 6).unwrap();
            let dm = build_dm(&DistanceSpec::built_in(kind, 2)).unwrap();
            assert!(verify_encoding(&enc, &dm).unwrap().pass);
        }
    }

    #[test]
    fn nearest_row_tie_break() {
        let rows = vec![vec![3, 0], vec![0, 1], vec![1, 0]];
        assert_eq!(nearest_row(MetricKind::Hamming, &rows, &[0, 0]), 1);
        assert_eq!(nearest_row(MetricKind::SqEuclidean, &rows, &[3, 0]), 0);
    }
}
