//! Small numeric utilities: compensated summation, streaming log-sum-exp,
//! decimal formatting with a fixed significant-digit budget, and the RNG
//! stream-id scheme that keeps parallel work reproducible.

use crate::scalar::{real, Scalar};

/// Neumaier-compensated accumulator. Used wherever a long sum feeds a
/// tolerance-sensitive comparison.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<F> {
    sum: F,
    comp: F,
}

impl<F: Scalar> Default for KahanSum<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> KahanSum<F> {
    pub fn new() -> Self {
        KahanSum {
            sum: F::zero(),
            comp: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> F {
        self.sum + self.comp
    }
}

/// Streaming log-sum-exp: consumes terms `t_k` one at a time and returns
/// `log Σ_k e^{t_k}` without materializing the list. `-inf` terms are
/// absorbed exactly; the result is `-inf` only if every term was.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp<F> {
    max: F,
    acc: F,
}

impl<F: Scalar> Default for LogSumExp<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Scalar> LogSumExp<F> {
    pub fn new() -> Self {
        LogSumExp {
            max: F::neg_infinity(),
            acc: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, t: F) {
        if t == F::neg_infinity() {
            return;
        }
        if t <= self.max {
            self.acc += (t - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - t).exp() + F::one();
            self.max = t;
        }
    }

    pub fn value(&self) -> F {
        if self.max == F::neg_infinity() {
            F::neg_infinity()
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Dot product of two equal-length slices.
#[inline]
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

/// Max-norm distance between two equal-length slices.
#[inline]
pub fn linf_dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    let mut m = F::zero();
    for (x, y) in a.iter().zip(b) {
        m = m.max((*x - *y).abs());
    }
    m
}

/// L1 norm of a slice.
#[inline]
pub fn l1_norm<F: Scalar>(a: &[F]) -> F {
    a.iter().fold(F::zero(), |s, x| s + x.abs())
}

/// L1 distance between two equal-length slices.
#[inline]
pub fn l1_dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for (x, y) in a.iter().zip(b) {
        s += (*x - *y).abs();
    }
    s
}

/// Relative gap `|a-b| / max(1, |a|, |b|)`.
#[inline]
pub fn rel_gap<F: Scalar>(a: F, b: F) -> F {
    (a - b).abs() / F::one().max(a.abs()).max(b.abs())
}

/// Structural tolerance for weight normalization and symmetry checks: the
/// documented `1e-12` at `f64`, widened to a few ulps for narrower scalars.
#[inline]
pub fn structural_tol<F: Scalar>() -> F {
    real::<F>(1e-12).max(F::epsilon() * real(64.0))
}

/// Formats a float with 17 significant digits, enough to reproduce the exact
/// `f64` bit pattern on read-back. Used by JSON-lines records and serialized
/// measures.
pub fn fmt_g17<T: num_traits::ToPrimitive>(x: T) -> String {
    let x = x.to_f64().unwrap_or(f64::NAN);
    format!("{x:.16e}")
}

/// Formats a float with 10 significant digits, the CSV summary precision.
pub fn fmt_g10<T: num_traits::ToPrimitive>(x: T) -> String {
    let x = x.to_f64().unwrap_or(f64::NAN);
    format!("{x:.9e}")
}

/// Purpose tags for ChaCha streams. A worker derives its RNG as
/// `ChaCha8Rng::seed_from_u64(master_seed)` followed by
/// `set_stream(stream_id(purpose, index))`, so every restart, Monte Carlo
/// batch, and sampling pass owns a disjoint, scheduler-independent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Solver restart initialization.
    Restart,
    /// Monte Carlo sample batch (shared by the direct and importance
    /// estimators so that tilting by the base measure replays identical draws).
    MonteCarlo,
    /// Gradient sampling for the covering estimate.
    Cover,
    /// Miscellaneous instance generation (random functionals, test fixtures).
    Fixture,
}

/// Packs a purpose and an index into a ChaCha stream id.
#[inline]
pub fn stream_id(purpose: StreamPurpose, index: u64) -> u64 {
    let tag = match purpose {
        StreamPurpose::Restart => 1u64,
        StreamPurpose::MonteCarlo => 2,
        StreamPurpose::Cover => 3,
        StreamPurpose::Fixture => 4,
    };
    (tag << 48) | (index & 0x0000_ffff_ffff_ffff)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_matches_direct() {
        let terms = [-700.0f64, -1.5, 0.0, 2.5, 699.0];
        let mut lse = LogSumExp::new();
        for &t in &terms {
            lse.add(t);
        }
        let m = 699.0f64;
        let direct = m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln();
        assert!((lse.value() - direct).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_empty_is_neg_inf() {
        let lse = LogSumExp::<f64>::new();
        assert_eq!(lse.value(), f64::NEG_INFINITY);
        let mut one = LogSumExp::new();
        one.add(f64::NEG_INFINITY);
        assert_eq!(one.value(), f64::NEG_INFINITY);
    }

    #[test]
    fn kahan_beats_naive_on_adversarial_sum() {
        let mut k = KahanSum::new();
        k.add(1.0f64);
        for _ in 0..10 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-15)).abs() < 1e-18);
    }

    #[test]
    fn g17_round_trips_bits() {
        for &x in &[0.1f64, 1.0 / 3.0, 2.5e-300, -7.1e200, 0.0, -0.0] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn stream_ids_are_disjoint_across_purposes() {
        let a = stream_id(StreamPurpose::Restart, 5);
        let b = stream_id(StreamPurpose::MonteCarlo, 5);
        let c = stream_id(StreamPurpose::Cover, 5);
        assert_ne!(a, b);
        assert_ne!(b, c);
        assert_eq!(a, stream_id(StreamPurpose::Restart, 5));
    }
}
