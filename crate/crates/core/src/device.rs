//! Behavioral 1FeFET1R conduction with device-to-device variation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Saturation ceiling used when none is given. Far above any unit current in
/// use, so the resistor sets the ON current.
pub const DEFAULT_ISAT: f64 = 10e-6;

/// Threshold-voltage spread (volts) reported for fabricated FeFETs.
pub const REFERENCE_SIGMA_VTH: f64 = 0.054;

/// Relative resistor spread reported for BEOL 1FeFET1R cells.
pub const REFERENCE_SIGMA_R_REL: f64 = 0.08;

/// Sampled resistances never drop below this fraction of nominal.
pub const MIN_RESISTANCE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeFetState {
    pub vth: f64,
    pub resistance: f64,
    pub isat: f64,
}

impl FeFetState {
    pub fn new(vth: f64, resistance: f64) -> Self {
        FeFetState {
            vth,
            resistance,
            isat: DEFAULT_ISAT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationParams {
    /// Standard deviation of the threshold voltage, volts.
    pub sigma_vth: f64,
    /// Relative standard deviation of the series resistance.
    pub sigma_r_rel: f64,
    pub seed: u64,
}

impl VariationParams {
    pub fn none(seed: u64) -> Self {
        VariationParams {
            sigma_vth: 0.0,
            sigma_r_rel: 0.0,
            seed,
        }
    }

    pub fn reference(seed: u64) -> Self {
        VariationParams {
            sigma_vth: REFERENCE_SIGMA_VTH,
            sigma_r_rel: REFERENCE_SIGMA_R_REL,
            seed,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_vth == 0.0 && self.sigma_r_rel == 0.0
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.sigma_vth >= 0.0 && self.sigma_r_rel >= 0.0) {
            return Err(format!(
                "variation sigmas must be nonnegative (got {}, {})",
                self.sigma_vth, self.sigma_r_rel
            ));
        }
        Ok(())
    }
}

/// Drain current: `min(isat, vds / R)` when `vgs > vth`, otherwise 0.
pub fn conduct(vgs: f64, vds: f64, state: &FeFetState) -> f64 {
    if vgs > state.vth {
        state.isat.min(vds / state.resistance)
    } else {
        0.0
    }
}

/// Draws one device around `nominal`. Both perturbations are Gaussian; two
/// standard-normal draws are consumed per call regardless of the sigmas, so
/// equal seeds line up across different sigma settings.
pub fn sample_variation<R: Rng + ?Sized>(
    nominal: &FeFetState,
    params: &VariationParams,
    rng: &mut R,
) -> FeFetState {
    let z_vth: f64 = rand_distr::StandardNormal.sample(rng);
    let z_r: f64 = rand_distr::StandardNormal.sample(rng);
    let vth = nominal.vth + params.sigma_vth * z_vth;
    let scale = (1.0 + params.sigma_r_rel * z_r).max(MIN_RESISTANCE_FRACTION);
    FeFetState {
        vth,
        resistance: nominal.resistance * scale,
        isat: nominal.isat,
    }
}

/// Gaussian sensing noise added to a row current.
pub fn sense_noise<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma)
        .map(|n| n.sample(rng))
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nominal() -> FeFetState {
        FeFetState::new(0.5, 1e6)
    }

    #[test]
    fn ohmic_branch_and_cutoff() {
        let s = nominal();
        assert!((conduct(0.7, 0.1, &s) - 100e-9).abs() < 1e-18);
        assert_eq!(conduct(0.3, 0.1, &s), 0.0);
        assert_eq!(conduct(0.5, 0.1, &s), 0.0);
    }

    #[test]
    fn drain_levels_scale_current_exactly() {
        let s = nominal();
        assert_eq!(conduct(0.7, 0.2, &s), 2.0 * conduct(0.7, 0.1, &s));
    }

    #[test]
    fn saturation_ceiling() {
        let s = FeFetState {
            isat: 150e-9,
            ..nominal()
        };
        assert!((conduct(0.7, 0.1, &s) - 100e-9).abs() < 1e-18);
        assert_eq!(conduct(0.7, 0.2, &s), 150e-9);
    }

    #[test]
    fn monotone_in_vds_and_flat_in_vgs() {
        let s = nominal();
        let mut last = 0.0;
        for step in 0..50 {
            let i = conduct(0.9, step as f64 * 0.05, &s);
            assert!(i >= last);
            last = i;
        }
        assert_eq!(conduct(0.51, 0.1, &s), conduct(1.5, 0.1, &s));
        assert_eq!(conduct(-1.0, 0.1, &s), conduct(0.49, 0.1, &s));
    }

    #[test]
    fn zero_variation_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_variation(&nominal(), &VariationParams::none(1), &mut rng);
        assert_eq!(s, nominal());
    }

    #[test]
    fn sampled_spreads_match_parameters() {
        let params = VariationParams::reference(7);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let n = 100_000;
        let samples: Vec<FeFetState> = (0..n)
            .map(|_| sample_variation(&nominal(), &params, &mut rng))
            .collect();
        let std = |xs: Vec<f64>| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
        };
        let vth_std = std(samples.iter().map(|s| s.vth).collect());
        let r_rel_std = std(samples.iter().map(|s| s.resistance / 1e6).collect());
        assert!((vth_std / 0.054 - 1.0).abs() < 0.02, "{vth_std}");
        assert!((r_rel_std / 0.08 - 1.0).abs() < 0.02, "{r_rel_std}");
        assert!(samples
            .iter()
            .all(|s| s.resistance > 0.0 && s.isat == DEFAULT_ISAT));
    }

    #[test]
    fn resistance_is_clamped() {
        let params = VariationParams {
            sigma_vth: 0.0,
            sigma_r_rel: 10.0,
            seed: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = sample_variation(&nominal(), &params, &mut rng);
            assert!(s.resistance >= 1e6 * MIN_RESISTANCE_FRACTION);
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let params = VariationParams::reference(11);
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            (0..100)
                .map(|_| sample_variation(&nominal(), &params, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn negative_sigma_rejected() {
        let p = VariationParams {
            sigma_vth: -0.1,
            sigma_r_rel: 0.0,
            seed: 0,
        };
        assert!(p.validate().is_err());
        assert!(VariationParams::reference(0).validate().is_ok());
    }
}
