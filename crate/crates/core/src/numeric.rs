//! Compensated summation helpers.
//!
//! Monte Carlo reductions in this crate always accumulate in replicate order
//! (parallel stages collect into an indexed buffer first), so these helpers
//! are deterministic regardless of thread count.

/// Kahan–Babuska compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(xs: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Compensated mean.
pub fn mean(xs: &[f64]) -> f64 {
    kahan_sum(xs) / xs.len() as f64
}

/// Mean and sample variance (divisor n-1), computed relative to the first
/// element so that a bitwise-constant input yields a variance of exactly 0.
pub fn mean_and_sample_var(xs: &[f64]) -> (f64, f64) {
    assert!(xs.len() >= 2, "need at least two values");
    let shift = xs[0];
    let mut diff = KahanSum::new();
    for &x in xs {
        diff.add(x - shift);
    }
    let m = shift + diff.value() / xs.len() as f64;
    let mut ss = KahanSum::new();
    for &x in xs {
        let d = x - m;
        ss.add(d * d);
    }
    (m, ss.value() / (xs.len() - 1) as f64)
}

/// Sample covariance (divisor n-1) of two equal-length slices.
pub fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let mx = mean(xs);
    let my = mean(ys);
    let mut acc = KahanSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        acc.add((x - mx) * (y - my));
    }
    acc.value() / (xs.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_has_exactly_zero_variance() {
        let xs = vec![0.1 + 0.2; 5000];
        let (m, v) = mean_and_sample_var(&xs);
        assert_eq!(m, xs[0]);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn matches_naive_on_small_input() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let (m, v) = mean_and_sample_var(&xs);
        assert!((m - 3.75).abs() < 1e-12);
        let naive: f64 = xs.iter().map(|x| (x - 3.75) * (x - 3.75)).sum::<f64>() / 3.0;
        assert!((v - naive).abs() < 1e-12);
    }

    #[test]
    fn kahan_recovers_lost_bits() {
        let mut xs = vec![1e16];
        xs.extend(std::iter::repeat_n(1.0, 1000));
        xs.push(-1e16);
        assert_eq!(kahan_sum(&xs), 1000.0);
    }

    #[test]
    fn covariance_sign() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [2.0, 4.0, 6.0, 8.0];
        assert!((sample_cov(&xs, &ys) - 2.0 * sample_cov(&xs, &xs).sqrt() * sample_cov(&xs, &xs).sqrt()).abs() < 1e-12);
    }
}
