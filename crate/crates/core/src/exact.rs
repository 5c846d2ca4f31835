//! Exact arithmetic on finite `f64` values.
//!
//! Every finite double is a dyadic rational `m * 2^e`, so sums and integer
//! multiples of doubles can be represented and compared without rounding.

use core::cmp::Ordering;

use num_bigint::BigInt;

#[derive(Clone, Debug)]
pub(crate) struct Dyadic {
    mant: BigInt,
    exp: i32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mant: BigInt::from(0), exp: 0 }
    }

    /// Panics on NaN or infinities.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "exact arithmetic needs finite input");
        if x == 0.0 {
            return Self::zero();
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Dyadic { mant: BigInt::from(m) * sign, exp: e }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic { mant: BigInt::from(n), exp: 0 }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, i32) {
        let e = self.exp.min(other.exp);
        let a = &self.mant << ((self.exp - e) as usize);
        let b = &other.mant << ((other.exp - e) as usize);
        (a, b, e)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b, e) = self.aligned(other);
        Dyadic { mant: a + b, exp: e }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Dyadic { mant: &self.mant * k, exp: self.exp }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Dyadic { mant: &self.mant * &other.mant, exp: self.exp + other.exp }
    }
}

// Equality of values, not of representations.
impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

/// Exact sum of a sequence of finite doubles.
pub(crate) fn exact_sum(values: impl IntoIterator<Item = f64>) -> Dyadic {
    values
        .into_iter()
        .fold(Dyadic::zero(), |acc, x| acc.add(&Dyadic::from_f64(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_ordering_of_doubles() {
        let xs = [0.0, -0.0, 1.0, -1.0, 0.1, 1e-300, 5e-324, 1e300, -2.5, f64::MAX];
        for &a in &xs {
            for &b in &xs {
                assert_eq!(
                    Dyadic::from_f64(a).cmp(&Dyadic::from_f64(b)),
                    a.partial_cmp(&b).unwrap(),
                    "{a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn sums_are_exact() {
        // 0.1 + 0.2 != 0.3 in floating point, and exactly so.
        let lhs = exact_sum([0.1, 0.2]);
        assert_ne!(lhs, Dyadic::from_f64(0.3));
        let big = exact_sum([1e20, 1.0, -1e20]);
        assert_eq!(big, Dyadic::from_int(1));
        assert_eq!(Dyadic::from_f64(0.75).mul_int(4), Dyadic::from_int(3));
        assert_eq!(Dyadic::from_f64(0.5).mul(&Dyadic::from_f64(0.5)), Dyadic::from_f64(0.25));
    }
}
