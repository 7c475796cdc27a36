//! Log-domain arithmetic and the tiny float shims that keep the crate
//! `no_std`-compatible (libm supplies ln/exp/sqrt when std is absent).

/// Natural logarithm.
#[inline(always)]
pub fn ln(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.ln()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::log(x)
    }
}

/// ln(1 + x), accurate near zero.
#[inline(always)]
pub fn ln_1p(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.ln_1p()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::log1p(x)
    }
}

/// Natural exponential.
#[inline(always)]
pub fn exp(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.exp()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::exp(x)
    }
}

/// Square root.
#[inline(always)]
pub fn sqrt(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.sqrt()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::sqrt(x)
    }
}

/// Absolute value.
#[inline(always)]
pub fn abs(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.abs()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::fabs(x)
    }
}

/// Round half away from zero.
#[inline(always)]
pub fn round(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.round()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::round(x)
    }
}

/// log(exp(a) + exp(b)) without leaving the log domain.
///
/// Either argument may be negative infinity (log of zero); the result is then
/// the other argument.
#[inline]
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        b
    } else if b == f64::NEG_INFINITY {
        a
    } else if a > b {
        a + ln_1p(exp(b - a))
    } else {
        b + ln_1p(exp(a - b))
    }
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps a running maximum `m` and the scaled sum `s = sum exp(x - m)`, so a
/// whole lattice cell is reduced with one `exp` per term and one `ln` at the
/// end. Pushing negative infinity is a no-op.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    m: f64,
    s: f64,
}

impl LogSum {
    #[inline(always)]
    pub fn new() -> LogSum {
        LogSum {
            m: f64::NEG_INFINITY,
            s: 0.0,
        }
    }

    #[inline(always)]
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.m {
            self.s += exp(x - self.m);
        } else {
            // exp(NEG_INFINITY - x) is 0.0, so the first push lands on s = 1.
            self.s = self.s * exp(self.m - x) + 1.0;
            self.m = x;
        }
    }

    /// log of the accumulated sum; negative infinity if nothing was pushed.
    #[inline(always)]
    pub fn value(&self) -> f64 {
        if self.s == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.m + ln(self.s)
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum::new()
    }
}

/// log-sum-exp over a slice.
pub fn log_sum_exp_slice(xs: &[f64]) -> f64 {
    let mut acc = LogSum::new();
    for &x in xs {
        acc.push(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_direct_evaluation() {
        let a: f64 = -1.25;
        let b: f64 = -3.5;
        let direct = (a.exp() + b.exp()).ln();
        assert!((log_sum_exp(a, b) - direct).abs() < 1e-15);
        assert!((log_sum_exp(b, a) - direct).abs() < 1e-15);
    }

    #[test]
    fn neg_infinity_is_the_identity() {
        assert_eq!(log_sum_exp(f64::NEG_INFINITY, -2.0), -2.0);
        assert_eq!(log_sum_exp(-2.0, f64::NEG_INFINITY), -2.0);
        assert_eq!(
            log_sum_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn streaming_matches_slice_reduction() {
        let xs = [-0.5, -1.0, -20.0, f64::NEG_INFINITY, -0.25, -7.5];
        let direct = xs
            .iter()
            .filter(|x| x.is_finite())
            .map(|x| x.exp())
            .sum::<f64>()
            .ln();
        assert!((log_sum_exp_slice(&xs) - direct).abs() < 1e-14);
    }

    #[test]
    fn empty_accumulator_is_log_zero() {
        assert_eq!(LogSum::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn single_push_returns_the_value() {
        let mut acc = LogSum::new();
        acc.push(-4.75);
        assert_eq!(acc.value(), -4.75);
    }
}
