//! Numerical utilities: exact summation, stable log-sum-exp, a portable
//! seeded PRNG, and the finite-difference gradient oracle.

use crate::error::{Error, Result};

/// Exact floating-point accumulator (Shewchuk's expansion algorithm, as used
/// by Python's `math.fsum`). The returned total is the correctly rounded sum
/// of the inputs, which makes it independent of accumulation order. Loss
/// values rely on this for exact permutation invariance over batch order.
///
/// Finite f64 inputs produce at most ceil((1023 + 1074)/53) = 40
/// non-overlapping partials, so the buffer never grows.
#[derive(Debug, Clone)]
pub struct ExactSum {
    partials: [f64; 44],
    len: usize,
}

impl Default for ExactSum {
    fn default() -> Self {
        Self { partials: [0.0; 44], len: 0 }
    }
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let mut x = x;
        let mut i = 0;
        for j in 0..self.len {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        debug_assert!(i < self.partials.len());
        self.partials[i] = x;
        self.len = i + 1;
    }

    pub fn total(&self) -> f64 {
        self.partials[..self.len].iter().sum()
    }
}

/// Correctly rounded sum of an iterator of values.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// log Σ exp(vᵏ), computed with a max shift so that inputs up to ±1e300 do
/// not overflow. The shifted exponentials are summed exactly, so the result
/// depends only on the multiset of values.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("log_sum_exp"));
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum = exact_sum(values.iter().map(|v| (v - max).exp()));
    Ok(max + sum.ln())
}

/// SplitMix64 generator. State advance and output finalizer use the published
/// constants, so a given seed produces the same sequence on every platform.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        const DEN: f64 = (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64) / DEN
    }

    /// Unbiased uniform integer in [0, n). Rejection sampling keeps the draw
    /// exactly uniform while staying a pure function of the state sequence.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        let zone = (u64::MAX / n) * n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal via Box-Muller. Each call consumes exactly two raw
    /// draws so the stream position stays predictable.
    pub fn next_gaussian(&mut self) -> f64 {
        const DEN: f64 = (1u64 << 53) as f64;
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 / DEN;
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// First `k` elements of a seeded Fisher-Yates shuffle of `items`,
    /// drawn uniformly without replacement.
    pub fn sample_without_replacement<T: Clone>(&mut self, items: &[T], k: usize) -> Vec<T> {
        let mut pool: Vec<T> = items.to_vec();
        let k = k.min(pool.len());
        for i in 0..k {
            let j = i + self.next_below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Central-difference gradient of `f` at `x`: (f(x+h·eₖ) − f(x−h·eₖ)) / 2h
/// per coordinate. The default step is [`DEFAULT_FD_STEP`].
pub fn finite_difference_gradient<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let plus = f(&probe);
        probe[k] = x[k] - h;
        let minus = f(&probe);
        probe[k] = x[k];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("finite_difference_gradient"));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

/// Step size balancing truncation against rounding for f64 central differences.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default relative tolerance for gradient comparisons.
pub const DEFAULT_GRAD_TOL: f64 = 1e-5;

/// Outcome of comparing an analytic gradient against a numeric one.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub rel_tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.rel_tol
    }
}

/// Per-coordinate relative error |a−n| / max(1e−8, |a|+|n|); passes iff the
/// maximum over coordinates is at most `rel_tol`.
pub fn check_gradient(analytic: &[f64], numeric: &[f64], rel_tol: f64) -> Result<GradCheckReport> {
    if analytic.len() != numeric.len() {
        return Err(Error::ShapeMismatch {
            analytic: analytic.len(),
            numeric: numeric.len(),
        });
    }
    let mut max_rel_error = 0.0;
    let mut worst_index = 0;
    for (k, (&a, &n)) in analytic.iter().zip(numeric).enumerate() {
        let rel = (a - n).abs() / (a.abs() + n.abs()).max(1e-8);
        if rel > max_rel_error {
            max_rel_error = rel;
            worst_index = k;
        }
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst_index,
        rel_tol,
    })
}
