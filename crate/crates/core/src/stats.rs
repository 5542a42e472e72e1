//! Directional statistics for phase-valued data.
//!
//! Everything is computed from summed unit vectors, so results do not depend
//! on the order of accumulation or on which `2π` representative a sample uses.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(phase: f64) -> f64 {
    let mut wrapped = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped += 2.0 * PI;
    }
    wrapped
}

/// Angle of a complex number in `(-π, π]`.
pub fn arg_pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        PI
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CircularAccumulator {
    sum: Complex64,
    count: usize,
}

impl CircularAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, phase: f64) {
        self.sum += Complex64::from_polar(1.0, phase);
        self.count += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.sum += other.sum;
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Mean resultant length in `[0, 1]`.
    pub fn resultant_length(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.sum.norm() / self.count as f64).min(1.0)
    }

    /// Circular mean in `(-π, π]`; `None` when empty.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| arg_pi(self.sum))
    }

    /// Circular standard deviation `sqrt(-2 ln R)`.
    pub fn std(&self) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let r = self.resultant_length();
        if r <= 0.0 {
            return Some(f64::INFINITY);
        }
        Some((-2.0 * r.ln()).max(0.0).sqrt())
    }
}

impl FromIterator<f64> for CircularAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        iter.into_iter().for_each(|p| acc.push(p));
        acc
    }
}

pub fn circular_mean(phases: &[f64]) -> Option<f64> {
    phases
        .iter()
        .copied()
        .collect::<CircularAccumulator>()
        .mean()
}

pub fn circular_std(phases: &[f64]) -> Option<f64> {
    phases
        .iter()
        .copied()
        .collect::<CircularAccumulator>()
        .std()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_phase(PI), PI);
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(arg_pi(Complex64::new(-1.0, -0.0)), PI);
    }

    #[test]
    fn mean_near_pi_does_not_collapse_to_zero() {
        let m = circular_mean(&[PI - 0.1, -(PI - 0.1)]).unwrap();
        assert!((m.abs() - PI).abs() < 1e-12, "{m}");
    }

    #[test]
    fn identical_samples_have_zero_std() {
        assert_eq!(circular_std(&[0.3; 17]).unwrap(), 0.0);
        assert!(circular_mean(&[]).is_none());
    }

    proptest! {
        #[test]
        fn invariant_under_two_pi_shifts(
            phases in proptest::collection::vec(-1.0f64..1.0, 1..40),
            shifts in proptest::collection::vec(-3i32..4, 40),
        ) {
            let shifted: Vec<f64> = phases
                .iter()
                .zip(&shifts)
                .map(|(p, s)| p + 2.0 * PI * *s as f64)
                .collect();
            let a = circular_mean(&phases).unwrap();
            let b = circular_mean(&shifted).unwrap();
            prop_assert!(wrap_phase(a - b).abs() < 1e-9);
            let sa = circular_std(&phases).unwrap();
            let sb = circular_std(&shifted).unwrap();
            prop_assert!((sa - sb).abs() < 1e-6);
        }
    }
}
