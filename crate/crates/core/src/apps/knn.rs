use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compile_metric, vector_distance, AppError, Dataset, Quantizer};
use crate::array::TiledCrossbar;
use crate::device::VariationParams;
use crate::encoder::{VoltageEncoding, VoltageLadder};
use crate::metric::MetricKind;

/// Most frequent label among `neighbors` (ordered nearest first). Tied
/// labels resolve to whichever appears nearest.
pub fn majority_label(neighbors: &[usize], labels: &[usize]) -> usize {
    let mut counts: Vec<(usize, usize)> = Vec::new();
    for &n in neighbors {
        let label = labels[n];
        match counts.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => *c += 1,
            None => counts.push((label, 1)),
        }
    }
    let top = counts.iter().map(|&(_, c)| c).max().unwrap_or(0);
    counts
        .iter()
        .find(|&&(_, c)| c == top)
        .map(|&(l, _)| l)
        .expect("at least one neighbor")
}

/// Quantized KNN computed directly from symbol distances.
pub fn software_knn(
    kind: MetricKind,
    train: &[Vec<u32>],
    labels: &[usize],
    test: &[Vec<u32>],
    kq: usize,
) -> Vec<usize> {
    test.par_iter()
        .map(|q| {
            let mut order: Vec<(u64, usize)> = train
                .iter()
                .enumerate()
                .map(|(i, t)| (vector_distance(kind, q, t), i))
                .collect();
            order.sort_unstable();
            let neighbors: Vec<usize> = order.iter().take(kq).map(|&(_, i)| i).collect();
            majority_label(&neighbors, labels)
        })
        .collect()
}

/// KNN on simulated arrays holding the training rows. `tile_rows` splits the
/// rows across several arrays; `None` uses one array.
#[allow(clippy::too_many_arguments)]
pub fn hardware_knn(
    encoding: &VoltageEncoding,
    ladder: &VoltageLadder,
    variation: Option<VariationParams>,
    train: &[Vec<u32>],
    labels: &[usize],
    test: &[Vec<u32>],
    kq: usize,
    tile_rows: Option<usize>,
) -> Result<Vec<usize>, AppError> {
    let tile_rows = tile_rows.unwrap_or(train.len()).max(1);
    let arrays = TiledCrossbar::new(encoding.clone(), *ladder, train, tile_rows, variation)?;
    test.par_iter()
        .map(|q| Ok(majority_label(&arrays.knn(q, kq)?, labels)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnEvaluation {
    pub metric: MetricKind,
    pub bits: usize,
    pub kq: usize,
    pub k: usize,
    pub train: usize,
    pub test: usize,
    pub hardware_predictions: Vec<usize>,
    pub software_predictions: Vec<usize>,
    pub hardware_accuracy: f64,
    pub software_accuracy: f64,
    /// Fraction of test samples where hardware and software agree.
    pub agreement: f64,
    /// Software minus hardware accuracy.
    pub degradation: f64,
}

pub(super) fn accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    correct as f64 / predictions.len().max(1) as f64
}

pub(super) fn agreement(a: &[usize], b: &[usize]) -> f64 {
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / a.len().max(1) as f64
}

impl KnnEvaluation {
    /// Quantizes `data` on its training split, compiles `kind`, and scores
    /// hardware and software KNN on the test split.
    pub fn run(
        data: &Dataset,
        kind: MetricKind,
        bits: usize,
        kq: usize,
        ladder: &VoltageLadder,
        variation: Option<VariationParams>,
        tile_rows: Option<usize>,
    ) -> Result<KnnEvaluation, AppError> {
        let quantizer = Quantizer::fit(&data.train, bits)?;
        let train = quantizer.quantize_all(&data.train)?;
        let test = quantizer.quantize_all(&data.test)?;
        let encoding = compile_metric(kind, bits, 8)?;
        let hw = hardware_knn(
            &encoding,
            ladder,
            variation,
            &train,
            &data.train_labels,
            &test,
            kq,
            tile_rows,
        )?;
        let sw = software_knn(kind, &train, &data.train_labels, &test, kq);
        let hardware_accuracy = accuracy(&hw, &data.test_labels);
        let software_accuracy = accuracy(&sw, &data.test_labels);
        Ok(KnnEvaluation {
            metric: kind,
            bits,
            kq,
            k: encoding.k(),
            train: train.len(),
            test: test.len(),
            agreement: agreement(&hw, &sw),
            hardware_accuracy,
            software_accuracy,
            degradation: software_accuracy - hardware_accuracy,
            hardware_predictions: hw,
            software_predictions: sw,
        })
    }
}
