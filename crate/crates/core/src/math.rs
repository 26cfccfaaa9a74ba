//! Scalar numerics shared by the scoring paths.
//!
//! `core` has no transcendental functions, so everything goes through
//! `libm`. `ln_gamma` is the FreeBSD `lgamma` port, accurate to a few ulp
//! over the argument range the scores use.

use alloc::vec::Vec;

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `ln(n!)` for `n` in `0..=max`, built by summation so consecutive entries
/// are consistent with each other.
pub fn ln_factorials(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for n in 1..=max {
        acc += ln(n as f64);
        table.push(acc);
    }
    table
}

/// Streaming log-sum-exp with a running max shift.
///
/// The result depends on the order in which terms are pushed; callers feed
/// terms in a fixed enumeration order so scores are bit-stable.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
    terms: u64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub const fn new() -> Self {
        Self { max: f64::NEG_INFINITY, scaled: 0.0, terms: 0 }
    }

    pub fn push(&mut self, x: f64) {
        self.terms += 1;
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * exp(self.max - x) + 1.0;
            self.max = x;
        } else {
            self.scaled += exp(x - self.max);
        }
    }

    /// Number of terms pushed, including `-inf` ones.
    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + ln(self.scaled)
        }
    }
}

/// Log-sum-exp of a slice, two-pass.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| exp(x - max)).sum();
    max + ln(sum)
}
