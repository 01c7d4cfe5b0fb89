//! Numeric type for ratios (precision, recall, coverage fractions).

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::Num;

pub trait Scalar: Num + Copy + PartialOrd + Debug {
    fn from_count(n: u64) -> Self;
    fn to_f64(self) -> f64;

    /// `num / den`, or `zero_case` when `den` is 0.
    fn ratio_or(num: u64, den: u64, zero_case: Self) -> Self {
        if den == 0 {
            zero_case
        } else {
            Self::from_count(num) / Self::from_count(den)
        }
    }
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for Ratio<u64> {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_float_agree() {
        let exact = Ratio::<u64>::ratio_or(1, 3, Ratio::from_integer(1));
        assert_eq!(exact, Ratio::new(1, 3));
        assert!((exact.to_f64() - f64::ratio_or(1, 3, 1.0)).abs() < 1e-15);
        assert_eq!(f32::ratio_or(0, 0, 1.0), 1.0);
    }
}
