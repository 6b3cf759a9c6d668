use serde::{Deserialize, Serialize};

use super::AppError;

/// Per-feature equal-mass binning into `2^bits` levels.
///
/// Threshold `j` of a feature is the `ceil(j * N / L)`-th smallest training
/// value; a value's level is the number of thresholds it exceeds. A constant
/// feature therefore maps everything seen in training to level 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub bits: usize,
    /// `thresholds[feature]` holds `2^bits - 1` ascending cut points.
    pub thresholds: Vec<Vec<f64>>,
}

impl Quantizer {
    pub fn fit(samples: &[Vec<f64>], bits: usize) -> Result<Quantizer, AppError> {
        if !(1..=8).contains(&bits) {
            return Err(AppError::Shape(format!("bits must be 1..=8, got {bits}")));
        }
        let n = samples.len();
        let features = samples.first().map(Vec::len).unwrap_or(0);
        if n == 0 || features == 0 {
            return Err(AppError::Shape("cannot fit a quantizer on no data".into()));
        }
        let levels = 1usize << bits;
        let picks: Vec<usize> = (1..levels).map(|j| (j * n).div_ceil(levels) - 1).collect();
        let mut column = vec![0.0; n];
        let thresholds = (0..features)
            .map(|f| {
                for (c, s) in column.iter_mut().zip(samples) {
                    *c = s[f];
                }
                column.sort_by(f64::total_cmp);
                picks.iter().map(|&p| column[p]).collect()
            })
            .collect();
        Ok(Quantizer { bits, thresholds })
    }

    pub fn features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn quantize(&self, values: &[f64]) -> Result<Vec<u32>, AppError> {
        if values.len() != self.features() {
            return Err(AppError::Shape(format!(
                "expected {} features, found {}",
                self.features(),
                values.len()
            )));
        }
        Ok(values
            .iter()
            .zip(&self.thresholds)
            .map(|(&v, cuts)| cuts.iter().filter(|&&t| v > t).count() as u32)
            .collect())
    }

    pub fn quantize_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<u32>>, AppError> {
        rows.iter().map(|r| self.quantize(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn uniform_feature_quartiles() {
        let data = column(&[8.0, 1.0, 7.0, 2.0, 6.0, 3.0, 5.0, 4.0]);
        let q = Quantizer::fit(&data, 2).unwrap();
        assert_eq!(q.thresholds, vec![vec![2.0, 4.0, 6.0]]);
        let levels: Vec<u32> = (1..=8)
            .map(|v| q.quantize(&[v as f64]).unwrap()[0])
            .collect();
        assert_eq!(levels, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn constant_feature_is_level_zero() {
        let q = Quantizer::fit(&column(&[3.0; 10]), 2).unwrap();
        assert_eq!(q.quantize(&[3.0]).unwrap(), vec![0]);
    }

    #[test]
    fn shape_errors() {
        assert!(Quantizer::fit(&[], 2).is_err());
        assert!(Quantizer::fit(&column(&[1.0]), 0).is_err());
        let q = Quantizer::fit(&column(&[1.0, 2.0]), 1).unwrap();
        assert!(q.quantize(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn levels_are_bounded_and_monotone(
            data in prop::collection::vec(-100.0f64..100.0, 1..60),
            bits in 1usize..=3,
            a in -150.0f64..150.0,
            b in -150.0f64..150.0,
        ) {
            let q = Quantizer::fit(&column(&data), bits).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ql = q.quantize(&[lo]).unwrap()[0];
            let qh = q.quantize(&[hi]).unwrap()[0];
            prop_assert!(qh < 1 << bits);
            prop_assert!(ql <= qh);
        }
    }
}
