//! Exact accumulation of IEEE-754 doubles.
//!
//! Every finite double is an integer multiple of 2^-1074, so sums are kept as
//! arbitrary-precision integers in those units (squares in 2^-2148 units).
//! Accumulation is therefore associative: merging partial sums in any batch
//! order reproduces the full-pass result bit for bit. Variance comes from the
//! exact integers as (n·Σx² − (Σx)²) / n², which cannot cancel
//! catastrophically; conversion to f64 happens once, at read-out.

use num_bigint::{BigInt, BigUint, Sign};

const SUM_SCALE: u32 = 1074;
const SQ_SCALE: u32 = 2148;

/// Count, sum, and sum of squares of a sequence of finite doubles, exact.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactMoments {
    n: u64,
    sum: BigInt,
    sum_sq: BigInt,
}

/// Splits a finite double into `sign * mantissa * 2^exp2`, exactly.
fn decompose(x: f64) -> (bool, u64, i32) {
    debug_assert!(x.is_finite());
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        (negative, frac, -1074)
    } else {
        (negative, frac | (1u64 << 52), biased - 1075)
    }
}

impl ExactMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Adds `count` occurrences of `x`.
    pub fn add(&mut self, x: f64, count: u64) {
        if count == 0 {
            return;
        }
        let (neg, m, exp2) = decompose(x);
        self.n += count;
        if m == 0 {
            return;
        }
        let shift = (exp2 + SUM_SCALE as i32) as u32;
        let mut term = BigInt::from(m as u128 * count as u128) << shift;
        if neg {
            term = -term;
        }
        self.sum += term;

        let sq_shift = (2 * exp2 + SQ_SCALE as i32) as u32;
        let sq = BigInt::from(m as u128 * m as u128) * count << sq_shift;
        self.sum_sq += sq;
    }

    pub fn merge(&mut self, other: &ExactMoments) {
        self.n += other.n;
        self.sum += &other.sum;
        self.sum_sq += &other.sum_sq;
    }

    pub fn sum_f64(&self) -> f64 {
        bigint_to_f64_scaled(&self.sum, -(SUM_SCALE as i64))
    }

    pub fn sum_sq_f64(&self) -> f64 {
        bigint_to_f64_scaled(&self.sum_sq, -(SQ_SCALE as i64))
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sum_f64() / self.n as f64
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let num = BigInt::from(self.n) * &self.sum_sq - (&self.sum * &self.sum);
        debug_assert!(num.sign() != Sign::Minus, "n·Σx² − (Σx)² is non-negative");
        let scaled = bigint_to_f64_scaled(&num, -(SQ_SCALE as i64));
        scaled / (self.n as f64 * self.n as f64)
    }

    pub fn stddev(&self) -> f64 {
        self.variance().max(0.0).sqrt()
    }
}

/// `x * 2^exp2` as f64, rounding once.
///
/// Magnitudes wider than 63 bits are truncated to their top 63 bits first
/// (relative error below 2^-62, and deterministic).
fn bigint_to_f64_scaled(x: &BigInt, exp2: i64) -> f64 {
    if x.sign() == Sign::NoSign {
        return 0.0;
    }
    let mag: &BigUint = x.magnitude();
    let bits = mag.bits();
    let (top, extra) = if bits <= 63 {
        (u64::try_from(mag).expect("fits"), 0i64)
    } else {
        let shift = bits - 63;
        (u64::try_from(&(mag >> shift)).expect("fits"), shift as i64)
    };
    let val = ldexp(top as f64, exp2 + extra);
    if x.sign() == Sign::Minus {
        -val
    } else {
        val
    }
}

/// `x * 2^e` via exact power-of-two factors.
fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1023 {
        x *= 2f64.powi(1023);
        e -= 1023;
        if !x.is_finite() {
            return x;
        }
    }
    while e < -1022 {
        x *= 2f64.powi(-1022);
        e += 1022;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_sums_are_exact() {
        let mut m = ExactMoments::new();
        for x in [1.0, 2.0, 3.0] {
            m.add(x, 1);
        }
        assert_eq!(m.count(), 3);
        assert_eq!(m.sum_f64(), 6.0);
        assert_eq!(m.sum_sq_f64(), 14.0);
        assert_eq!(m.mean(), 2.0);
        assert_eq!(m.variance(), 6.0 / 9.0);
        assert_eq!(m.stddev(), (6.0f64 / 9.0).sqrt());
    }

    #[test]
    fn weighted_add_matches_repeats() {
        let mut a = ExactMoments::new();
        let mut b = ExactMoments::new();
        for _ in 0..7 {
            a.add(0.1, 1);
            a.add(-3.25, 1);
        }
        b.add(0.1, 7);
        b.add(-3.25, 7);
        assert_eq!(a, b);
    }

    #[test]
    fn merge_is_associative_bit_for_bit() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64) * 0.3 - 7.7).collect();
        let mut whole = ExactMoments::new();
        for &x in &xs {
            whole.add(x, 1);
        }
        for split in [1usize, 3, 7, 50, 99] {
            let (l, r) = xs.split_at(split);
            let mut a = ExactMoments::new();
            for &x in l {
                a.add(x, 1);
            }
            let mut b = ExactMoments::new();
            for &x in r {
                b.add(x, 1);
            }
            a.merge(&b);
            assert_eq!(a, whole);
            assert_eq!(a.variance().to_bits(), whole.variance().to_bits());
        }
    }

    #[test]
    fn no_catastrophic_cancellation() {
        // Offset data where the textbook f64 accumulator loses everything.
        let mut m = ExactMoments::new();
        for x in [1e8 + 1.0, 1e8 + 2.0, 1e8 + 3.0] {
            m.add(x, 1);
        }
        assert_eq!(m.variance(), 6.0 / 9.0);
        // Constant column: variance is exactly zero.
        let mut c = ExactMoments::new();
        c.add(0.1, 10_000);
        assert_eq!(c.variance(), 0.0);
    }

    #[test]
    fn handles_negatives_and_subnormals() {
        let tiny = f64::from_bits(3); // subnormal
        let mut m = ExactMoments::new();
        m.add(-2.5, 2);
        m.add(tiny, 1);
        let back = m.sum_f64();
        assert!((back - (-5.0)).abs() < 1e-12);
        assert!(m.variance() > 0.0);
    }

    #[test]
    fn empty_moments_read_as_zero() {
        let m = ExactMoments::new();
        assert_eq!(m.sum_f64(), 0.0);
        assert_eq!(m.mean(), 0.0);
        assert_eq!(m.variance(), 0.0);
    }
}
