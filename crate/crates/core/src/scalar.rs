//! Scalar abstraction for fitness values.
//!
//! Everything that stores or combines fitness measurements (caches,
//! statistics, roulette weights, the structural surrogate) is generic over
//! [`Fitness`], so the same search can run in `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A real scalar usable as a fitness value in `[0, 1]`.
pub trait Fitness:
    Float
    + FromPrimitive
    + ToPrimitive
    + Serialize
    + DeserializeOwned
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; fitness values never leave `[0, 1]`
    /// so this cannot overflow.
    fn from_f64_lossy(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value).unwrap_or_else(Self::nan)
    }

    /// Clamp into the fitness domain `[0, 1]`. NaN stays NaN.
    fn clamp_unit(self) -> Self {
        if self.is_nan() {
            self
        } else {
            self.max(Self::zero()).min(Self::one())
        }
    }

    fn in_unit_range(self) -> bool {
        self.is_finite() && self >= Self::zero() && self <= Self::one()
    }
}

impl Fitness for f32 {}
impl Fitness for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<F: Fitness>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let sum = values.iter().fold(F::zero(), |acc, &v| acc + v);
    Some(sum / F::from_usize_lossy(values.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamp_unit_bounds() {
        assert_eq!(1.7f64.clamp_unit(), 1.0);
        assert_eq!((-0.2f32).clamp_unit(), 0.0);
        assert_eq!(0.25f64.clamp_unit(), 0.25);
        assert!(f64::NAN.clamp_unit().is_nan());
    }

    #[test]
    fn unit_range_rejects_non_finite() {
        assert!(!f64::INFINITY.in_unit_range());
        assert!(!f32::NAN.in_unit_range());
        assert!(1.0f64.in_unit_range());
        assert!(!1.2f64.in_unit_range());
    }

    #[test]
    fn mean_of_slices() {
        assert_eq!(mean::<f64>(&[]), None);
        assert_eq!(mean(&[0.25f64, 0.75]), Some(0.5));
        assert_eq!(mean(&[0.5f32, 0.5, 0.5]), Some(0.5));
    }
}
