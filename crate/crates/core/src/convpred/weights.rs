use crate::convpred::LambdaMode;
use crate::error::{Error, Result};
use crate::stft::ComplexSpectrogram;

/// Per-unit variances `λ̂(t, f)`; the least-squares weight of a unit is `1 / λ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    frames: usize,
    bins: usize,
    lambda: Vec<f64>,
}

impl WeightMap {
    pub fn unit(frames: usize, bins: usize) -> Self {
        WeightMap {
            frames,
            bins,
            lambda: vec![1.0; frames * bins],
        }
    }

    /// `λ̂ = max(ε · max(P), P)` for a frame-major power map `P`.
    pub fn floored(frames: usize, bins: usize, power: &[f64], floor: f64) -> Result<Self> {
        if power.len() != frames * bins {
            return Err(Error::shape(format!(
                "power map has {} entries, expected {}",
                power.len(),
                frames * bins
            )));
        }
        if !(floor > 0.0 && floor <= 1.0) {
            return Err(Error::config(format!(
                "floor must lie in (0, 1], got {floor}"
            )));
        }
        if power.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::numerical(
                "power map must be finite and non-negative",
            ));
        }
        let peak = power.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::numerical(
                "reference spectrogram is silent; the weight floor is undefined",
            ));
        }
        let min = floor * peak;
        Ok(WeightMap {
            frames,
            bins,
            lambda: power.iter().map(|&p| p.max(min)).collect(),
        })
    }

    /// Every variance multiplied by `k > 0`. The least-squares filter does
    /// not change; only the objective value scales by `1 / k`.
    pub fn scaled(&self, k: f64) -> Self {
        WeightMap {
            frames: self.frames,
            bins: self.bins,
            lambda: self.lambda.iter().map(|l| l * k).collect(),
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn values(&self) -> &[f64] {
        &self.lambda
    }

    pub fn get(&self, t: usize, f: usize) -> f64 {
        self.lambda[t * self.bins + f]
    }

    /// Least-squares weights `1 / λ̂` of one frequency bin.
    pub fn bin_weights(&self, f: usize) -> Vec<f64> {
        (0..self.frames).map(|t| 1.0 / self.get(t, f)).collect()
    }

    pub(crate) fn ensure_matches(&self, spec: &ComplexSpectrogram) -> Result<()> {
        if self.frames == spec.frames() && self.bins == spec.bins() {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "weight map is {}x{}, spectrogram is {}x{}",
                self.frames,
                self.bins,
                spec.frames(),
                spec.bins()
            )))
        }
    }
}

/// Floored-power weights computed from `reference`.
///
/// `EstPower` and `MixPower` differ only in which spectrogram the caller
/// passes; see [`LambdaMode::weights_for`] for the dispatching form.
pub fn lambda_weights(
    reference: &ComplexSpectrogram,
    mode: LambdaMode,
    floor: f64,
) -> Result<WeightMap> {
    match mode {
        LambdaMode::Unit => Ok(WeightMap::unit(reference.frames(), reference.bins())),
        LambdaMode::EstPower | LambdaMode::MixPower => WeightMap::floored(
            reference.frames(),
            reference.bins(),
            &reference.power(),
            floor,
        ),
    }
}

impl LambdaMode {
    /// Pick the spectrogram this mode reads and build its weights.
    pub fn weights_for(
        self,
        mixture: &ComplexSpectrogram,
        estimate: &ComplexSpectrogram,
        floor: f64,
    ) -> Result<WeightMap> {
        match self {
            LambdaMode::MixPower => lambda_weights(mixture, self, floor),
            LambdaMode::EstPower => lambda_weights(estimate, self, floor),
            LambdaMode::Unit => lambda_weights(mixture, self, floor),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stft::StftConfig;
    use num_complex::Complex64;

    fn spec_with_powers(powers: &[f64]) -> ComplexSpectrogram {
        let cfg = StftConfig::narrowband();
        let mut s = ComplexSpectrogram::zeros(powers.len(), cfg);
        for (t, p) in powers.iter().enumerate() {
            s.set(t, 3, Complex64::new(0.0, p.sqrt()));
        }
        s
    }

    #[test]
    fn floor_substitution() {
        let s = spec_with_powers(&[100.0, 1.0, 0.01]);
        let w = lambda_weights(&s, LambdaMode::EstPower, 1e-3).unwrap();
        let got: Vec<f64> = (0..3).map(|t| w.get(t, 3)).collect();
        for (g, e) in got.iter().zip([100.0, 1.0, 0.1]) {
            assert!((g - e).abs() < 1e-12, "{got:?}");
        }
        // untouched bins sit at the floor
        assert!((w.get(0, 0) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unit_floor_is_constant_peak() {
        let s = spec_with_powers(&[4.0, 2.0, 0.0, 9.0]);
        let w = lambda_weights(&s, LambdaMode::MixPower, 1.0).unwrap();
        assert!(w.values().iter().all(|&v| (v - 9.0).abs() < 1e-12));
    }

    #[test]
    fn unit_mode() {
        let s = spec_with_powers(&[0.0, 0.0]);
        let w = lambda_weights(&s, LambdaMode::Unit, 1e-3).unwrap();
        assert!(w.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn silent_reference_is_an_error() {
        let s = spec_with_powers(&[0.0, 0.0]);
        assert!(lambda_weights(&s, LambdaMode::EstPower, 1e-3).is_err());
        assert!(lambda_weights(&s, LambdaMode::MixPower, 1.0).is_err());
    }

    #[test]
    fn weights_are_positive_and_floored() {
        let s = spec_with_powers(&[5.0, 0.3, 0.0, 1e-9]);
        let w = lambda_weights(&s, LambdaMode::EstPower, 0.01).unwrap();
        assert!(w.values().iter().all(|&v| v >= 0.05 - 1e-15));
        assert!((w.bin_weights(3)[0] - 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn dispatch_reads_the_right_spectrogram() {
        let mix = spec_with_powers(&[1.0, 4.0]);
        let est = spec_with_powers(&[9.0, 1.0]);
        let m = LambdaMode::MixPower.weights_for(&mix, &est, 1.0).unwrap();
        let e = LambdaMode::EstPower.weights_for(&mix, &est, 1.0).unwrap();
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(e.get(0, 0), 9.0);
    }
}
