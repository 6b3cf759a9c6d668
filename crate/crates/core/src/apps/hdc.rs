use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::{accuracy, agreement};
use super::{compile_metric, nearest_row, AppError, Dataset, Quantizer};
use crate::array::Crossbar;
use crate::device::VariationParams;
use crate::encoder::{VoltageEncoding, VoltageLadder};
use crate::metric::MetricKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdcConfig {
    pub dimension: usize,
    pub bits: usize,
    /// Perceptron passes after the initial accumulation.
    pub epochs: usize,
    pub seed: u64,
}

impl Default for HdcConfig {
    fn default() -> Self {
        HdcConfig {
            dimension: 1024,
            bits: 2,
            epochs: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdcModel {
    pub config: HdcConfig,
    pub feature_count: usize,
    pub class_count: usize,
    /// Row-major `feature_count x dimension` matrix of +1/-1.
    pub projection: Vec<i8>,
    /// Mean projected training vector, subtracted during encoding.
    pub center: Vec<f64>,
    pub class_vectors: Vec<Vec<f64>>,
    /// Per-dimension quantizer for encoded queries.
    pub query_quantizer: Quantizer,
    /// Per-dimension quantizer fitted on the class vectors.
    pub class_quantizer: Quantizer,
    pub quantized_class_vectors: Vec<Vec<u32>>,
}

fn random_projection(features: usize, dimension: usize, seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..features * dimension)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect()
}

fn project(projection: &[i8], dimension: usize, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dimension];
    for (f, &v) in x.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let row = &projection[f * dimension..(f + 1) * dimension];
        for (o, &p) in out.iter_mut().zip(row) {
            *o += v * p as f64;
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn most_similar(classes: &[Vec<f64>], h: &[f64]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (c, v) in classes.iter().enumerate() {
        let norm = dot(v, v).sqrt();
        let score = if norm > 0.0 { dot(v, h) / norm } else { 0.0 };
        if score > best.0 {
            best = (score, c);
        }
    }
    best.1
}

impl HdcModel {
    pub fn train(data: &Dataset, config: HdcConfig) -> Result<HdcModel, AppError> {
        if config.dimension == 0 {
            return Err(AppError::Shape("dimension must be positive".into()));
        }
        let d = config.dimension;
        let projection = random_projection(data.feature_count, d, config.seed);
        let raw: Vec<Vec<f64>> = data
            .train
            .par_iter()
            .map(|x| project(&projection, d, x))
            .collect();
        let mut center = vec![0.0; d];
        for h in &raw {
            for (c, v) in center.iter_mut().zip(h) {
                *c += v;
            }
        }
        for c in &mut center {
            *c /= raw.len() as f64;
        }
        let encoded: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|h| h.iter().zip(&center).map(|(v, c)| v - c).collect())
            .collect();

        let mut class_vectors = vec![vec![0.0; d]; data.class_count];
        let mut seen = vec![false; data.class_count];
        for (h, &label) in encoded.iter().zip(&data.train_labels) {
            seen[label] = true;
            for (a, v) in class_vectors[label].iter_mut().zip(h) {
                *a += v;
            }
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(AppError::EmptyClass(empty));
        }
        for _ in 0..config.epochs {
            for (h, &label) in encoded.iter().zip(&data.train_labels) {
                let guess = most_similar(&class_vectors, h);
                if guess != label {
                    for (t, v) in class_vectors[label].iter_mut().zip(h) {
                        *t += v;
                    }
                    for (g, v) in class_vectors[guess].iter_mut().zip(h) {
                        *g -= v;
                    }
                }
            }
        }

        let query_quantizer = Quantizer::fit(&encoded, config.bits)?;
        let class_quantizer = Quantizer::fit(&class_vectors, config.bits)?;
        let quantized_class_vectors = class_quantizer.quantize_all(&class_vectors)?;
        Ok(HdcModel {
            config,
            feature_count: data.feature_count,
            class_count: data.class_count,
            projection,
            center,
            class_vectors,
            query_quantizer,
            class_quantizer,
            quantized_class_vectors,
        })
    }

    /// Projects `x` and subtracts the training mean.
    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>, AppError> {
        if x.len() != self.feature_count {
            return Err(AppError::Shape(format!(
                "expected {} features, found {}",
                self.feature_count,
                x.len()
            )));
        }
        let h = project(&self.projection, self.config.dimension, x);
        Ok(h.iter().zip(&self.center).map(|(v, c)| v - c).collect())
    }

    pub fn query_symbols(&self, x: &[f64]) -> Result<Vec<u32>, AppError> {
        self.query_quantizer.quantize(&self.encode(x)?)
    }

    /// Cosine-similarity prediction on the real-valued class vectors.
    pub fn predict_real(&self, x: &[f64]) -> Result<usize, AppError> {
        Ok(most_similar(&self.class_vectors, &self.encode(x)?))
    }

    /// Nearest quantized class vector under `kind`, computed in software.
    pub fn predict_software(&self, kind: MetricKind, x: &[f64]) -> Result<usize, AppError> {
        Ok(nearest_row(
            kind,
            &self.quantized_class_vectors,
            &self.query_symbols(x)?,
        ))
    }

    /// An array with one row per class vector.
    pub fn crossbar(
        &self,
        encoding: &VoltageEncoding,
        ladder: &VoltageLadder,
        variation: Option<VariationParams>,
    ) -> Result<Crossbar, AppError> {
        Ok(Crossbar::new(
            encoding.clone(),
            *ladder,
            &self.quantized_class_vectors,
            variation,
        )?)
    }

    pub fn predict_hardware(&self, array: &Crossbar, x: &[f64]) -> Result<usize, AppError> {
        Ok(array.search(&self.query_symbols(x)?)?.winner)
    }

    /// Real-valued accuracy on the training split.
    pub fn train_accuracy(&self, data: &Dataset) -> Result<f64, AppError> {
        let predictions = data
            .train
            .par_iter()
            .map(|x| self.predict_real(x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(accuracy(&predictions, &data.train_labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HdcEvaluation {
    pub metric: MetricKind,
    pub config: HdcConfig,
    pub k: usize,
    pub hardware_predictions: Vec<usize>,
    pub software_predictions: Vec<usize>,
    pub hardware_accuracy: f64,
    pub software_accuracy: f64,
    /// Cosine-similarity accuracy before quantization.
    pub real_accuracy: f64,
    pub agreement: f64,
}

impl HdcEvaluation {
    pub fn run(
        model: &HdcModel,
        data: &Dataset,
        kind: MetricKind,
        ladder: &VoltageLadder,
        variation: Option<VariationParams>,
    ) -> Result<HdcEvaluation, AppError> {
        let encoding = compile_metric(kind, model.config.bits, 8)?;
        let array = model.crossbar(&encoding, ladder, variation)?;
        let rows = data
            .test
            .par_iter()
            .map(|x| {
                Ok((
                    model.predict_hardware(&array, x)?,
                    model.predict_software(kind, x)?,
                    model.predict_real(x)?,
                ))
            })
            .collect::<Result<Vec<_>, AppError>>()?;
        let hw: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let sw: Vec<usize> = rows.iter().map(|r| r.1).collect();
        let real: Vec<usize> = rows.iter().map(|r| r.2).collect();
        Ok(HdcEvaluation {
            metric: kind,
            config: model.config,
            k: encoding.k(),
            hardware_accuracy: accuracy(&hw, &data.test_labels),
            software_accuracy: accuracy(&sw, &data.test_labels),
            real_accuracy: accuracy(&real, &data.test_labels),
            agreement: agreement(&hw, &sw),
            hardware_predictions: hw,
            software_predictions: sw,
        })
    }
}
