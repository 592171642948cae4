//! Normality testing and empirical-moment utilities.
//!
//! The Shapiro-Wilk test follows Royston's AS R94 algorithm (Royston 1995,
//! Applied Statistics 44), the same approximation used by R's
//! `shapiro.test`: expected normal order statistics with polynomial
//! small-sample corrections for the W statistic, and a normal/log-normal
//! transformation of 1 - W for the p-value. Valid for 3 <= n <= 5000.

use crate::error::{Error, Result};
use crate::normal::{normal_cdf, normal_quantile_unchecked};
use crate::numeric::KahanSum;

/// Shapiro-Wilk test result.
#[derive(Debug, Clone, PartialEq)]
pub struct SwResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

// Polynomial coefficient sets from Royston (1995), constant term first.
const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Shapiro-Wilk W statistic and p-value for a sample of size 3..=5000.
/// Errors on constant samples and non-finite values. Ties are permitted.
pub fn shapiro_wilk(sample: &[f64]) -> Result<SwResult> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::SampleSize { n, min: 3, max: 5000 });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("sample contains non-finite values".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Err(Error::ConstantSample);
    }

    let m = n / 2;
    // 1-based coefficient array, matching the published algorithm.
    let mut a = vec![0.0f64; m + 1];
    if n == 3 {
        a[1] = std::f64::consts::FRAC_1_SQRT_2;
    } else {
        let an = n as f64;
        let an25 = an + 0.25;
        let mut summ2 = 0.0;
        for (i, ai) in a.iter_mut().enumerate().skip(1) {
            *ai = normal_quantile_unchecked((i as f64 - 0.375) / an25);
            summ2 += *ai * *ai;
        }
        summ2 *= 2.0;
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - a[1] / ssumm2;
        let (start, fac) = if n > 5 {
            let a2 = -a[2] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            a[2] = a2;
            (3, fac)
        } else {
            let fac = ((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1)).sqrt();
            (2, fac)
        };
        a[1] = a1;
        for ai in a.iter_mut().take(m + 1).skip(start) {
            *ai /= -fac;
        }
    }

    // W as the squared correlation between the scaled order statistics and
    // the antisymmetric coefficient vector.
    let scaled: Vec<f64> = x.iter().map(|v| v / range).collect();
    let sx = scaled.iter().sum::<f64>() / n as f64;
    let coeff_at = |i: usize| -> f64 {
        let j = n - 1 - i;
        if i == j {
            0.0
        } else {
            let idx = i.min(j) + 1;
            if i > j {
                a[idx]
            } else {
                -a[idx]
            }
        }
    };
    let sa = (0..n).map(coeff_at).sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, &s) in scaled.iter().enumerate() {
        let asa = coeff_at(i) - sa;
        let xsx = s - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    // 1 - W computed directly to keep precision when W is near 1.
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(0.0, 1.0);

    let p_value = p_value_for(w, n).clamp(0.0, 1.0);
    Ok(SwResult { statistic: w, p_value, n })
}

fn p_value_for(w: f64, n: usize) -> f64 {
    let an = n as f64;
    if n == 3 {
        // Exact distribution for n = 3.
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        return (pi6 * (w.sqrt().asin() - stqr)).clamp(0.0, 1.0);
    }
    let y = (1.0 - w).ln();
    if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return 1e-99;
        }
        let y = -(gamma - y).ln();
        let mu = poly(&C3, an);
        let sigma = poly(&C4, an).exp();
        1.0 - normal_cdf((y - mu) / sigma)
    } else {
        let xx = an.ln();
        let mu = poly(&C5, xx);
        let sigma = poly(&C6, xx).exp();
        1.0 - normal_cdf((y - mu) / sigma)
    }
}

/// First four empirical moments. Variance uses divisor n-1; skewness and
/// kurtosis use the population central-moment ratios (kurtosis is excess
/// kurtosis, and `None` for n < 4 or a degenerate sample).
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: Option<f64>,
}

pub fn empirical_moments(sample: &[f64]) -> Result<Moments> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 observations for moments, got {n}"
        )));
    }
    let nf = n as f64;
    let mut sum = KahanSum::new();
    for &x in sample {
        sum.add(x);
    }
    let mean = sum.value() / nf;
    let (mut m2, mut m3, mut m4) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
    for &x in sample {
        let d = x - mean;
        let d2 = d * d;
        m2.add(d2);
        m3.add(d2 * d);
        m4.add(d2 * d2);
    }
    let m2v = m2.value() / nf;
    let variance = m2.value() / (nf - 1.0);
    let skewness = if m2v > 0.0 { (m3.value() / nf) / m2v.powf(1.5) } else { 0.0 };
    let kurtosis = if n >= 4 && m2v > 0.0 {
        Some((m4.value() / nf) / (m2v * m2v) - 3.0)
    } else {
        None
    };
    Ok(Moments { mean, variance, skewness, kurtosis })
}

/// Kolmogorov-Smirnov test result against the uniform distribution on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample KS test of U(0, 1), with the asymptotic Kolmogorov p-value
/// (Stephens' small-sample correction of the argument). Used to check that
/// p-values produced under a true null are uniform.
pub fn ks_uniformity(sample: &[f64]) -> Result<KsResult> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::EmptyInput("KS test needs at least one value".into()));
    }
    if sample.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidParameter("KS uniformity expects values in [0, 1]".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &xi) in x.iter().enumerate() {
        let lo = xi - i as f64 / nf;
        let hi = (i + 1) as f64 / nf - xi;
        d = d.max(lo).max(hi);
    }
    let sqrt_n = nf.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    Ok(KsResult { statistic: d, p_value: p.clamp(0.0, 1.0), n })
}
