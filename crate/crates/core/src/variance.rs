//! Variance components, variance estimators, and confidence intervals.
//!
//! The Monte Carlo decomposition ([`variance_components_mc`]) estimates the
//! finite-population moments sigma_1^2, sigma_0^2, sigma_01 together with the
//! interference-added component sigma_tau^2 = n*Var(Ybar^(1) - Ybar^(0)), and
//! records the observed variance of the difference-in-means estimator across
//! the same replicates.

use crate::design::{diff_in_means, Assignment};
use crate::error::{Error, Result};
use crate::normal::normal_quantile;
use crate::numeric::{mean, mean_and_sample_var, sample_cov, KahanSum};
use crate::outcome::OutcomeOracle;
use crate::rng::{derive_seed, SplitMix64};
use rayon::prelude::*;

/// Total redraw budget for degenerate assignments within one Monte Carlo
/// call. At n >= 500 and moderate pi a redraw is essentially impossible;
/// the budget exists so that small-n runs fail loudly instead of looping.
pub const REDRAW_BUDGET: usize = 100;

/// Finite-n variance components estimated over Monte Carlo replicates.
///
/// `sigma_sutva_sq = sigma1_sq + sigma0_sq + 2*sigma01` is the conditional
/// (no-interference) variance; `sigma_tau_sq` is the additional variance
/// contributed by interference. The `se_*`/`cov_*` fields are plug-in Monte
/// Carlo uncertainty estimates for the derived ratios.
#[derive(Debug, Clone)]
pub struct VarianceComponents {
    pub sigma1_sq: f64,
    pub sigma0_sq: f64,
    pub sigma01: f64,
    pub sigma_tau_sq: f64,
    pub sigma_sutva_sq: f64,
    pub observed_var_dm: f64,
    pub replicates: usize,
    /// Degenerate assignments redrawn during sampling.
    pub redraws: usize,
    pub se_sutva: f64,
    pub se_tau_sq: f64,
    pub se_observed: f64,
    pub cov_tau_sutva: f64,
    pub cov_observed_sutva: f64,
}

impl VarianceComponents {
    /// Expected total variance of the difference in means (x n): the SUTVA
    /// component plus the interference component.
    pub fn expected_total(&self) -> f64 {
        self.sigma_sutva_sq + self.sigma_tau_sq
    }

    /// (sigma_SUTVA^2 + sigma_tau^2) / sigma_SUTVA^2.
    pub fn ratio_expected(&self) -> f64 {
        self.expected_total() / self.sigma_sutva_sq
    }

    /// observed n*Var(tau_hat) / sigma_SUTVA^2.
    pub fn ratio_observed(&self) -> f64 {
        self.observed_var_dm / self.sigma_sutva_sq
    }

    /// Delta-method standard error of `ratio_expected`.
    pub fn ratio_expected_se(&self) -> f64 {
        ratio_se(
            self.sigma_tau_sq,
            self.sigma_sutva_sq,
            self.se_tau_sq,
            self.se_sutva,
            self.cov_tau_sutva,
        )
    }

    /// Delta-method standard error of `ratio_observed`.
    pub fn ratio_observed_se(&self) -> f64 {
        // ratio_observed = V/B = 1 + (V-B)/B; same delta form with A = V - B,
        // var(A) = var(V) + var(B) - 2cov(V,B), cov(A,B) = cov(V,B) - var(B).
        let var_v = self.se_observed * self.se_observed;
        let var_b = self.se_sutva * self.se_sutva;
        let var_a = (var_v + var_b - 2.0 * self.cov_observed_sutva).max(0.0);
        let cov_ab = self.cov_observed_sutva - var_b;
        delta_ratio_var(
            self.observed_var_dm - self.sigma_sutva_sq,
            self.sigma_sutva_sq,
            var_a,
            var_b,
            cov_ab,
        )
    }
}

fn delta_ratio_var(a: f64, b: f64, var_a: f64, var_b: f64, cov_ab: f64) -> f64 {
    let v = var_a / (b * b) + a * a * var_b / (b * b * b * b) - 2.0 * a * cov_ab / (b * b * b);
    v.max(0.0).sqrt()
}

fn ratio_se(a: f64, b: f64, se_a: f64, se_b: f64, cov_ab: f64) -> f64 {
    delta_ratio_var(a, b, se_a * se_a, se_b * se_b, cov_ab)
}

/// Neyman conservative variance estimator `S1^2/N1 + S0^2/N0` with
/// within-arm sample variances (divisors N1-1 and N0-1).
pub fn neyman_sutva_variance(a: &Assignment, y: &[f64]) -> Result<f64> {
    if y.len() != a.n() {
        return Err(Error::LengthMismatch { expected: a.n(), actual: y.len() });
    }
    if a.n1() < 2 || a.n0() < 2 {
        return Err(Error::DegenerateAssignment {
            n1: a.n1(),
            n0: a.n0(),
            required: "both arms need at least 2 units",
        });
    }
    let (mut sum1, mut sum0) = (KahanSum::new(), KahanSum::new());
    for (&b, &yi) in a.bits().iter().zip(y) {
        if b {
            sum1.add(yi);
        } else {
            sum0.add(yi);
        }
    }
    let mean1 = sum1.value() / a.n1() as f64;
    let mean0 = sum0.value() / a.n0() as f64;
    let (mut ss1, mut ss0) = (KahanSum::new(), KahanSum::new());
    for (&b, &yi) in a.bits().iter().zip(y) {
        if b {
            ss1.add((yi - mean1) * (yi - mean1));
        } else {
            ss0.add((yi - mean0) * (yi - mean0));
        }
    }
    let s1 = ss1.value() / (a.n1() - 1) as f64;
    let s0 = ss0.value() / (a.n0() - 1) as f64;
    Ok(s1 / a.n1() as f64 + s0 / a.n0() as f64)
}

/// The plug-in interference-variance estimator, computed literally as
/// written: `Ybar_1^2 + Ybar_0^2 - 2*Ybar_1*Ybar_0 - tau_hat^2`.
///
/// Since `tau_hat = Ybar_1 - Ybar_0`, the expression is algebraically zero;
/// it is kept in its literal form rather than silently replaced. For a
/// usable Monte Carlo ground truth of the interference component see
/// [`variance_components_mc`].
pub fn vtau_plugin(a: &Assignment, y: &[f64]) -> Result<f64> {
    if y.len() != a.n() {
        return Err(Error::LengthMismatch { expected: a.n(), actual: y.len() });
    }
    if a.n1() == 0 || a.n0() == 0 {
        return Err(Error::DegenerateAssignment {
            n1: a.n1(),
            n0: a.n0(),
            required: "both arms nonempty",
        });
    }
    let (mut sum1, mut sum0) = (KahanSum::new(), KahanSum::new());
    for (&b, &yi) in a.bits().iter().zip(y) {
        if b {
            sum1.add(yi);
        } else {
            sum0.add(yi);
        }
    }
    let ybar1 = sum1.value() / a.n1() as f64;
    let ybar0 = sum0.value() / a.n0() as f64;
    let tau_hat = ybar1 - ybar0;
    Ok(ybar1 * ybar1 + ybar0 * ybar0 - 2.0 * ybar1 * ybar0 - tau_hat * tau_hat)
}

/// Combined conservative estimator: Neyman SUTVA variance plus the plug-in
/// interference adjustment.
pub fn combined_variance(a: &Assignment, y: &[f64]) -> Result<f64> {
    Ok(neyman_sutva_variance(a, y)? + vtau_plugin(a, y)?)
}

/// Gaussian-quantile confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceInterval {
    pub center: f64,
    pub half_width: f64,
    pub level: f64,
    pub variance_used: f64,
}

impl ConfidenceInterval {
    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= self.half_width
    }
}

/// `tau_hat +/- z_{alpha/2} * sqrt(variance)`. The quantile comes from a
/// rational approximation accurate to better than 1e-8.
pub fn confidence_interval(tau_hat: f64, variance: f64, level: f64) -> Result<ConfidenceInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    if variance < 0.0 {
        return Err(Error::InvalidParameter(format!("variance must be nonnegative, got {variance}")));
    }
    let z = normal_quantile(0.5 + level / 2.0)?;
    Ok(ConfidenceInterval {
        center: tau_hat,
        half_width: z * variance.sqrt(),
        level,
        variance_used: variance,
    })
}

/// Asymptotic variance of the difference in means:
/// `((1-pi)/pi) sigma_1^2 + (pi/(1-pi)) sigma_0^2 + 2 sigma_01 + sigma_tau^2`.
pub fn asymptotic_variance(c: &VarianceComponents, pi: f64) -> Result<f64> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidParameter(format!("pi must lie in (0, 1), got {pi}")));
    }
    Ok((1.0 - pi) / pi * c.sigma1_sq + pi / (1.0 - pi) * c.sigma0_sq + 2.0 * c.sigma01
        + c.sigma_tau_sq)
}

struct ReplicateStats {
    m1: f64,
    m0: f64,
    m01: f64,
    t: f64,
    tau_hat: f64,
    redraws: usize,
}

/// Estimates the variance components of an oracle under a Bernoulli(pi)
/// design over seeded replicate draws of the treatment vector.
///
/// Per replicate the potential-outcome vectors are recomputed, the
/// population moments (divisor n, centered at the replicate means) are
/// accumulated, and the difference in means of the observed outcomes is
/// recorded. Degenerate assignments (an empty arm) are redrawn with a total
/// budget of [`REDRAW_BUDGET`]; exhausting it is an error. Replicates run in
/// parallel with per-replicate derived seeds and are reduced in replicate
/// order, so results do not depend on thread count.
pub fn variance_components_mc(
    oracle: &dyn OutcomeOracle,
    pi: f64,
    replicates: usize,
    seed: u64,
) -> Result<VarianceComponents> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidParameter(format!("pi must lie in (0, 1), got {pi}")));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    let n = oracle.n();
    let stats: Vec<Result<ReplicateStats>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r);
            let mut assignment = None;
            let mut redraws = 0usize;
            for attempt in 0..=REDRAW_BUDGET as u64 {
                let mut rng = SplitMix64::new(derive_seed(rep_seed, attempt));
                let a = Assignment::new((0..n).map(|_| rng.bernoulli(pi)).collect());
                if a.n1() >= 1 && a.n0() >= 1 {
                    assignment = Some(a);
                    break;
                }
                redraws += 1;
            }
            let a = assignment.ok_or(Error::RedrawBudgetExhausted {
                redraws,
                budget: REDRAW_BUDGET,
            })?;
            let mut y0 = vec![0.0; n];
            let mut y1 = vec![0.0; n];
            oracle.counterfactuals_into(a.bits(), &mut y0, &mut y1);
            let ybar1 = mean(&y1);
            let ybar0 = mean(&y0);
            let (mut m1, mut m0, mut m01) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
            for i in 0..n {
                let d1 = y1[i] - ybar1;
                let d0 = y0[i] - ybar0;
                m1.add(d1 * d1);
                m0.add(d0 * d0);
                m01.add(d1 * d0);
            }
            let observed: Vec<f64> = a
                .bits()
                .iter()
                .zip(y0.iter().zip(&y1))
                .map(|(&b, (&c, &t))| if b { t } else { c })
                .collect();
            let tau_hat = diff_in_means(&a, &observed)?;
            Ok(ReplicateStats {
                m1: m1.value() / n as f64,
                m0: m0.value() / n as f64,
                m01: m01.value() / n as f64,
                t: ybar1 - ybar0,
                tau_hat,
                redraws,
            })
        })
        .collect();

    let mut per_rep = Vec::with_capacity(replicates);
    let mut total_redraws = 0usize;
    for s in stats {
        let s = s?;
        total_redraws += s.redraws;
        per_rep.push(s);
    }
    if total_redraws > REDRAW_BUDGET {
        return Err(Error::RedrawBudgetExhausted { redraws: total_redraws, budget: REDRAW_BUDGET });
    }

    let nf = n as f64;
    let m1: Vec<f64> = per_rep.iter().map(|s| s.m1).collect();
    let m0: Vec<f64> = per_rep.iter().map(|s| s.m0).collect();
    let m01: Vec<f64> = per_rep.iter().map(|s| s.m01).collect();
    let ts: Vec<f64> = per_rep.iter().map(|s| s.t).collect();
    let taus: Vec<f64> = per_rep.iter().map(|s| s.tau_hat).collect();

    let sigma1_sq = mean(&m1);
    let sigma0_sq = mean(&m0);
    let sigma01 = mean(&m01);
    let sigma_sutva_sq = sigma1_sq + sigma0_sq + 2.0 * sigma01;

    let (t_mean, t_var) = mean_and_sample_var(&ts);
    let sigma_tau_sq = nf * t_var;
    let (tau_mean, tau_var) = mean_and_sample_var(&taus);
    let observed_var_dm = nf * tau_var;

    // Per-replicate contributions for plug-in uncertainty of the summaries.
    let s_contrib: Vec<f64> = (0..replicates).map(|r| m1[r] + m0[r] + 2.0 * m01[r]).collect();
    let u_contrib: Vec<f64> = ts.iter().map(|&t| nf * (t - t_mean) * (t - t_mean)).collect();
    let v_contrib: Vec<f64> =
        taus.iter().map(|&t| nf * (t - tau_mean) * (t - tau_mean)).collect();
    let rf = replicates as f64;
    let se_of = |xs: &[f64]| {
        let (_, var) = mean_and_sample_var(xs);
        (var / rf).sqrt()
    };

    Ok(VarianceComponents {
        sigma1_sq,
        sigma0_sq,
        sigma01,
        sigma_tau_sq,
        sigma_sutva_sq,
        observed_var_dm,
        replicates,
        redraws: total_redraws,
        se_sutva: se_of(&s_contrib),
        se_tau_sq: se_of(&u_contrib),
        se_observed: se_of(&v_contrib),
        cov_tau_sutva: sample_cov(&u_contrib, &s_contrib) / rf,
        cov_observed_sutva: sample_cov(&v_contrib, &s_contrib) / rf,
    })
}

/// Population (divisor n) variance helper used in tests and diagnostics.
pub fn population_moments(y1: &[f64], y0: &[f64]) -> (f64, f64, f64) {
    let n = y1.len() as f64;
    let ybar1 = mean(y1);
    let ybar0 = mean(y0);
    let mut m1 = KahanSum::new();
    let mut m0 = KahanSum::new();
    let mut m01 = KahanSum::new();
    for (&a, &b) in y1.iter().zip(y0) {
        m1.add((a - ybar1) * (a - ybar1));
        m0.add((b - ybar0) * (b - ybar0));
        m01.add((a - ybar1) * (b - ybar0));
    }
    (m1.value() / n, m0.value() / n, m01.value() / n)
}

/// Convenience wrapper retaining only the sum used by law-of-total-variance
/// checks.
pub fn sutva_population_variance(y1: &[f64], y0: &[f64]) -> f64 {
    let (m1, m0, m01) = population_moments(y1, y0);
    m1 + m0 + 2.0 * m01
}
