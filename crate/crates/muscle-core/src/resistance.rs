//! Fold-resistance calibration.
//!
//! Pouch folds dissipate force while the actuator shortens. The model lumps
//! this into a resistance force `Fr = kr(ΔP1)·(Ssum0 − Ssum)` that is zero at
//! the blocked state and grows linearly with absolute shortening. The
//! coefficient `kr` is calibrated per skeleton pressure from a quasi-static
//! pull-to-length test: beyond the initial unfolding transient the measured
//! force–displacement record is linear, its slope gives the resistance per
//! metre of *gap* shortening, and rescaling by the full-stroke shortening
//! yields `kr`.

use serde::{Deserialize, Serialize};

use crate::types::{ActuatorSpec, Error, Result};

/// Default linear-region filter: keep samples with displacement > 9 mm.
pub const DEFAULT_LINEAR_THRESHOLD: f64 = 0.009;

/// Result of one resistance calibration at a fixed skeleton pressure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KrFit {
    /// Resistance coefficient `kr` [N/m].
    pub kr: f64,
    /// Fitted slope of the force–displacement record [N/m].
    pub slope: f64,
    /// Fitted intercept [N].
    pub intercept: f64,
    /// Coefficient of determination of the linear fit.
    pub r_squared: f64,
    /// Number of samples that survived the linear-region filter.
    pub samples_used: usize,
}

/// Fit the resistance coefficient from a pull-test record.
///
/// `samples` are `(displacement [m], force [N])` pairs with strictly
/// increasing displacement; samples at or below `linear_threshold` are
/// discarded as the unfolding transient. The slope of the surviving samples
/// is scaled to a full stroke: the maximum resistance
/// `Fr_max = slope·(n−1)·L20` occurs at the fully folded length, and
/// `kr = Fr_max / (n(1−2/π)L10 + (n−1)L20)` normalizes it by the maximum
/// shortening.
pub fn fit_kr(
    samples: &[(f64, f64)],
    spec: &ActuatorSpec,
    linear_threshold: f64,
) -> Result<KrFit> {
    spec.validate()?;
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::NonMonotonicSamples(format!(
                "displacement {} m follows {} m",
                w[1].0, w[0].0
            )));
        }
    }
    let linear: Vec<(f64, f64)> =
        samples.iter().copied().filter(|(d, _)| *d > linear_threshold).collect();
    if linear.len() < 2 {
        return Err(Error::InsufficientData(linear.len()));
    }

    let m = linear.len() as f64;
    let mean_d = linear.iter().map(|(d, _)| d).sum::<f64>() / m;
    let mean_f = linear.iter().map(|(_, f)| f).sum::<f64>() / m;
    let sxx: f64 = linear.iter().map(|(d, _)| (d - mean_d) * (d - mean_d)).sum();
    let sxy: f64 = linear.iter().map(|(d, f)| (d - mean_d) * (f - mean_f)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("zero displacement variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_f - slope * mean_d;

    let ss_tot: f64 = linear.iter().map(|(_, f)| (f - mean_f) * (f - mean_f)).sum();
    let ss_res: f64 = linear
        .iter()
        .map(|(d, f)| {
            let e = f - (slope * d + intercept);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };

    let n = spec.columns_n as f64;
    let l10 = spec.pouch_length_l10;
    let l20 = spec.gap_length_l20;
    let fr_max = slope * (n - 1.0) * l20;
    let max_shortening = n * (1.0 - 2.0 / std::f64::consts::PI) * l10 + (n - 1.0) * l20;
    Ok(KrFit {
        kr: fr_max / max_shortening,
        slope,
        intercept,
        r_squared,
        samples_used: linear.len(),
    })
}

/// Piecewise-linear resistance coefficient as a function of skeleton gauge
/// pressure, with constant extrapolation beyond the calibrated range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResistanceModel {
    /// Calibration samples `(ΔP1 [Pa], kr [N/m])`, strictly increasing in
    /// pressure.
    samples: Vec<(f64, f64)>,
}

impl ResistanceModel {
    /// Build a model from `(ΔP1 [Pa], kr [N/m])` calibration points; the
    /// points are sorted by pressure and duplicates are rejected.
    pub fn new(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData(0));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in samples.windows(2) {
            if w[1].0 == w[0].0 {
                return Err(Error::DuplicatePressure { dp1_pa: w[0].0 });
            }
        }
        for (dp1, kr) in &samples {
            if !(*kr >= 0.0) || !kr.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "kr must be finite and >= 0, got {kr} at {dp1} Pa"
                )));
            }
        }
        Ok(ResistanceModel { samples })
    }

    /// A frictionless model: `kr = 0` at every pressure. Use when fold
    /// resistance is to be ignored.
    pub fn zero() -> Self {
        ResistanceModel { samples: vec![(0.0, 0.0)] }
    }

    /// The calibration points, sorted by pressure.
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Coefficient at gauge pressure `dp1` [Pa]: linear between calibration
    /// points, constant beyond the first/last.
    pub fn kr_at(&self, dp1: f64) -> f64 {
        let s = &self.samples;
        if dp1 <= s[0].0 {
            return s[0].1;
        }
        if dp1 >= s[s.len() - 1].0 {
            return s[s.len() - 1].1;
        }
        for w in s.windows(2) {
            let ((p0, k0), (p1, k1)) = (w[0], w[1]);
            if dp1 <= p1 {
                let t = (dp1 - p0) / (p1 - p0);
                return k0 + t * (k1 - k0);
            }
        }
        unreachable!("dp1 inside the sampled range must hit a segment");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ActuatorSpec {
        ActuatorSpec::reference()
    }

    #[test]
    fn exact_linear_record_recovers_slope_and_kr() {
        // F = 100·d + 2 beyond the transient; a bump below threshold must be
        // ignored.
        let mut samples = vec![(0.002, 9.0), (0.006, 1.5)];
        for i in 0..20 {
            let d = 0.010 + i as f64 * 0.002;
            samples.push((d, 100.0 * d + 2.0));
        }
        let fit = fit_kr(&samples, &reference(), DEFAULT_LINEAR_THRESHOLD).unwrap();
        assert_eq!(fit.samples_used, 20);
        assert!((fit.slope - 100.0).abs() < 1e-9);
        assert!((fit.intercept - 2.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        // Fr_max = 100·6·0.01 = 6 N over a 110.87 mm max shortening.
        assert!((fit.kr - 54.116).abs() < 1e-2, "kr = {}", fit.kr);
    }

    #[test]
    fn noisy_record_recovers_slope_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut samples = Vec::new();
        for i in 0..200 {
            let d = 0.0095 + i as f64 * 0.0004;
            let noise: f64 = rng.random_range(-0.5..0.5);
            samples.push((d, 80.0 * d - 1.0 + noise));
        }
        let fit = fit_kr(&samples, &reference(), DEFAULT_LINEAR_THRESHOLD).unwrap();
        assert!((fit.slope - 80.0).abs() < 2.0, "slope = {}", fit.slope);
        assert!(fit.r_squared > 0.9);
    }

    #[test]
    fn too_few_linear_samples_is_an_error() {
        let samples = vec![(0.001, 1.0), (0.004, 2.0), (0.010, 3.0)];
        match fit_kr(&samples, &reference(), DEFAULT_LINEAR_THRESHOLD) {
            Err(Error::InsufficientData(1)) => {}
            other => panic!("expected InsufficientData(1), got {other:?}"),
        }
    }

    #[test]
    fn non_monotonic_displacements_are_rejected() {
        let samples = vec![(0.010, 1.0), (0.012, 2.0), (0.011, 3.0)];
        assert!(matches!(
            fit_kr(&samples, &reference(), DEFAULT_LINEAR_THRESHOLD),
            Err(Error::NonMonotonicSamples(_))
        ));
    }

    #[test]
    fn flat_force_record_fits_zero_slope_with_unit_r_squared() {
        let samples = vec![(0.010, 5.0), (0.020, 5.0), (0.030, 5.0)];
        let fit = fit_kr(&samples, &reference(), DEFAULT_LINEAR_THRESHOLD).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.kr, 0.0);
    }

    #[test]
    fn model_interpolates_and_clamps() {
        let model = ResistanceModel::new(vec![(60e3, 50.0), (30e3, 20.0), (90e3, 110.0)]).unwrap();
        // Sorted internally.
        assert_eq!(model.samples()[0].0, 30e3);
        // Clamped extrapolation.
        assert_eq!(model.kr_at(10e3), 20.0);
        assert_eq!(model.kr_at(120e3), 110.0);
        // Linear interpolation between 30 and 60 kPa.
        assert!((model.kr_at(45e3) - 35.0).abs() < 1e-12);
        // On-sample values are exact.
        assert_eq!(model.kr_at(60e3), 50.0);
    }

    #[test]
    fn single_sample_model_is_constant() {
        let model = ResistanceModel::new(vec![(60e3, 54.1)]).unwrap();
        assert_eq!(model.kr_at(0.0), 54.1);
        assert_eq!(model.kr_at(200e3), 54.1);
    }

    #[test]
    fn duplicate_pressures_are_rejected() {
        assert!(matches!(
            ResistanceModel::new(vec![(60e3, 50.0), (60e3, 51.0)]),
            Err(Error::DuplicatePressure { .. })
        ));
    }

    #[test]
    fn negative_kr_is_rejected() {
        assert!(ResistanceModel::new(vec![(60e3, -1.0)]).is_err());
    }
}
