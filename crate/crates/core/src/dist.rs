//! Three-point (low / mode / high) uncertainty distributions and the
//! counter-based uniform stream used to sample them.
//!
//! Every uncertain input of the model is triangular.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Low,
    Mode,
    High,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error(
        "ordering violation: {bound:?} bound is out of order (low={low}, mode={mode}, high={high})"
    )]
    OrderingViolation {
        bound: Bound,
        low: f64,
        mode: f64,
        high: f64,
    },
    #[error("non-finite {0:?} bound")]
    NonFinite(Bound),
    #[error("uniform variate {0} is outside [0, 1)")]
    InvalidUniform(f64),
}

/// Triangular distribution over `[low, high]` peaking at `mode`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangularDist {
    pub low: f64,
    pub mode: f64,
    pub high: f64,
}

impl TriangularDist {
    /// Builds and validates a distribution.
    pub fn new(low: f64, mode: f64, high: f64) -> Result<Self, DistError> {
        let d = Self { low, mode, high };
        d.validate()?;
        Ok(d)
    }

    /// A degenerate distribution that always yields `value`.
    pub fn constant(value: f64) -> Self {
        Self {
            low: value,
            mode: value,
            high: value,
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        for (bound, v) in [
            (Bound::Low, self.low),
            (Bound::Mode, self.mode),
            (Bound::High, self.high),
        ] {
            if !v.is_finite() {
                return Err(DistError::NonFinite(bound));
            }
        }
        let violation = |bound| DistError::OrderingViolation {
            bound,
            low: self.low,
            mode: self.mode,
            high: self.high,
        };
        if self.mode < self.low {
            return Err(violation(Bound::Low));
        }
        if self.mode > self.high {
            return Err(violation(Bound::High));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.low == self.high
    }

    pub fn mean(&self) -> f64 {
        (self.low + self.mode + self.high) / 3.0
    }

    /// CDF evaluated at the mode.
    pub fn mode_quantile(&self) -> f64 {
        if self.is_degenerate() {
            return 1.0;
        }
        (self.mode - self.low) / (self.high - self.low)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.low..=self.high).contains(&x)
    }

    /// Inverse-CDF sample for a uniform variate `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Result<f64, DistError> {
        if !(0.0..1.0).contains(&u) {
            return Err(DistError::InvalidUniform(u));
        }
        Ok(self.quantile(u))
    }

    fn quantile(&self, u: f64) -> f64 {
        if self.is_degenerate() {
            return self.mode;
        }
        let width = self.high - self.low;
        let x = if u <= self.mode_quantile() {
            self.low + (u * width * (self.mode - self.low)).sqrt()
        } else {
            self.high - ((1.0 - u) * width * (self.high - self.mode)).sqrt()
        };
        // rounding in the square roots can step a hair outside the support
        x.clamp(self.low, self.high)
    }
}

/// Deterministic source of uniform variates keyed by
/// `(master_seed, iteration, variable_id)`.
///
/// Each variable owns a ChaCha stream selected by a stable hash of its id, and
/// the iteration index picks the word position inside that stream, so a value
/// never depends on evaluation order or on which other variables exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    master_seed: u64,
}

impl SampleStream {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn uniform(&self, iteration: u64, variable_id: &str) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(stream_id(variable_id));
        // one u64 consumes two 32-bit words
        rng.set_word_pos(u128::from(iteration) * 2);
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// 64-bit FNV-1a; stable across platforms and compiler versions.
pub fn stream_id(variable_id: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    variable_id
        .bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn biochar_price() -> TriangularDist {
        TriangularDist::new(334.0, 1078.0, 1822.0).unwrap()
    }

    #[test]
    fn validate_examples() {
        assert!(TriangularDist::new(334.0, 1078.0, 1822.0).is_ok());
        assert!(TriangularDist::new(5.0, 5.0, 5.0).is_ok());
        assert!(matches!(
            TriangularDist::new(10.0, 5.0, 20.0),
            Err(DistError::OrderingViolation {
                bound: Bound::Low,
                ..
            })
        ));
        assert!(matches!(
            TriangularDist::new(1.0, 5.0, 2.0),
            Err(DistError::OrderingViolation {
                bound: Bound::High,
                ..
            })
        ));
        assert_eq!(
            TriangularDist::new(1.0, f64::NAN, 2.0),
            Err(DistError::NonFinite(Bound::Mode))
        );
        assert_eq!(
            TriangularDist::new(f64::NEG_INFINITY, 0.0, 2.0),
            Err(DistError::NonFinite(Bound::Low))
        );
    }

    #[test]
    fn mean_examples() {
        assert_abs_diff_eq!(biochar_price().mean(), 1078.0, epsilon = 1e-12);
        let prunings = TriangularDist::new(5991.0, 7107.0, 8222.0).unwrap();
        assert_abs_diff_eq!(prunings.mean(), 7_106.666_666_666_667, epsilon = 1e-9);
        assert_eq!(TriangularDist::constant(42.5).mean(), 42.5);
    }

    #[test]
    fn sample_examples() {
        let d = TriangularDist::new(0.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(d.sample(0.5).unwrap(), 1.0, epsilon = 1e-12);

        let p = biochar_price();
        let u = (1078.0 - 334.0) / (1822.0 - 334.0);
        assert_abs_diff_eq!(p.sample(u).unwrap(), 1078.0, epsilon = 1e-9);

        assert_eq!(TriangularDist::constant(5.0).sample(0.999).unwrap(), 5.0);
    }

    #[test]
    fn sample_rejects_bad_uniform() {
        let d = biochar_price();
        assert_eq!(d.sample(1.0), Err(DistError::InvalidUniform(1.0)));
        assert_eq!(d.sample(-0.1), Err(DistError::InvalidUniform(-0.1)));
        assert!(d.sample(f64::NAN).is_err());
        assert_eq!(d.sample(0.0).unwrap(), 334.0);
    }

    #[test]
    fn stratified_mean_converges() {
        let d = biochar_price();
        let n = 100_000;
        let total: f64 = (0..n)
            .map(|i| d.sample((i as f64 + 0.5) / n as f64).unwrap())
            .sum();
        let mean = total / n as f64;
        assert!((mean - d.mean()).abs() / d.mean() < 0.005, "mean {mean}");
    }

    #[test]
    fn stream_is_pure_and_keyed() {
        let s = SampleStream::new(42);
        let a = s.uniform(7, "biochar_price");
        assert_eq!(a, SampleStream::new(42).uniform(7, "biochar_price"));
        assert_ne!(a, s.uniform(8, "biochar_price"));
        assert_ne!(a, s.uniform(7, "grape_price"));
        assert_ne!(a, SampleStream::new(43).uniform(7, "biochar_price"));
    }

    #[test]
    fn stream_uniforms_look_uniform() {
        let s = SampleStream::new(0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|i| s.uniform(i, "x")).collect();
        assert!(xs.iter().all(|u| (0.0..1.0).contains(u)));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
        let below = xs.iter().filter(|&&u| u < 0.25).count() as f64 / n as f64;
        assert!((below - 0.25).abs() < 0.015, "quartile {below}");
    }

    proptest! {
        #[test]
        fn samples_stay_in_support(
            low in -1e6f64..1e6,
            a in 0.0f64..1e6,
            b in 0.0f64..1e6,
            u in 0.0f64..1.0,
        ) {
            let d = TriangularDist::new(low, low + a, low + a + b).unwrap();
            let x = d.sample(u).unwrap();
            prop_assert!(d.contains(x));
        }

        #[test]
        fn sampling_is_monotone(
            low in -1e3f64..1e3,
            a in 0.0f64..1e3,
            b in 0.0f64..1e3,
            u1 in 0.0f64..1.0,
            u2 in 0.0f64..1.0,
        ) {
            let d = TriangularDist::new(low, low + a, low + a + b).unwrap();
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            prop_assert!(d.sample(lo).unwrap() <= d.sample(hi).unwrap());
        }

        #[test]
        fn stream_in_unit_interval(seed: u64, it in 0u64..1_000_000, id in "[a-z_]{1,24}") {
            let u = SampleStream::new(seed).uniform(it, &id);
            prop_assert!((0.0..1.0).contains(&u));
        }
    }
}
