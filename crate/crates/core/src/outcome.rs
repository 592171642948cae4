//! Potential-outcome oracles and the expected average treatment effect.
//!
//! An [`OutcomeOracle`] deterministically maps a full treatment vector to all
//! n outcomes. The [`DecayModel`] is the parametric oracle used throughout
//! the simulation harness: a heterogeneous direct effect plus spillover
//! terms that decay exponentially with graph distance.

use crate::design::Assignment;
use crate::error::{Error, Result};
use crate::graph::DistanceShells;
use crate::numeric::{kahan_sum, mean_and_sample_var, KahanSum};
use crate::rng::{derive_seed, SplitMix64};
use rayon::prelude::*;
use std::sync::Arc;

/// Per-unit direct effects (alpha_control, alpha_treated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaPair {
    pub control: f64,
    pub treated: f64,
}

impl AlphaPair {
    pub fn direct_effect(&self) -> f64 {
        self.treated - self.control
    }
}

/// Deterministic map from a full treatment vector to potential outcomes.
///
/// `counterfactuals_into` fills the vectors `Y_i^(0)(w_-i)` and
/// `Y_i^(1)(w_-i)`: each unit's ego treatment is forced to the respective
/// branch while all other treatments come from `w`. The default
/// implementation probes the black box by flipping one ego bit at a time;
/// structured oracles should override it with a direct computation.
pub trait OutcomeOracle: Sync {
    fn n(&self) -> usize;

    /// Observed outcomes `Y_i(w)`.
    fn outcomes_into(&self, w: &[bool], out: &mut [f64]);

    fn counterfactuals_into(&self, w: &[bool], y0: &mut [f64], y1: &mut [f64]) {
        let n = self.n();
        let mut probe = w.to_vec();
        let mut buf = vec![0.0; n];
        for i in 0..n {
            let original = probe[i];
            probe[i] = false;
            self.outcomes_into(&probe, &mut buf);
            y0[i] = buf[i];
            probe[i] = true;
            self.outcomes_into(&probe, &mut buf);
            y1[i] = buf[i];
            probe[i] = original;
        }
    }

    fn outcomes(&self, w: &[bool]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        self.outcomes_into(w, &mut out);
        out
    }

    fn counterfactuals(&self, w: &[bool]) -> (Vec<f64>, Vec<f64>) {
        let mut y0 = vec![0.0; self.n()];
        let mut y1 = vec![0.0; self.n()];
        self.counterfactuals_into(w, &mut y0, &mut y1);
        (y0, y1)
    }
}

/// Exposure fractions `Z[rho][i]`: the treated proportion of the nodes at
/// exact distance rho from i. Empty shells yield 0 by convention (the raw
/// definition is 0/0 there), which keeps outcomes finite; the closed-form
/// EATE carries the matching nonempty-shell correction.
pub fn exposure_fractions(shells: &DistanceShells, w: &[bool]) -> Result<Vec<Vec<f64>>> {
    if w.len() != shells.n() {
        return Err(Error::LengthMismatch { expected: shells.n(), actual: w.len() });
    }
    let mut z = vec![vec![0.0; shells.n()]; shells.rho_max()];
    for (row, rho) in z.iter_mut().zip(1..) {
        for (i, zi) in row.iter_mut().enumerate() {
            let shell = shells.shell(i, rho);
            if !shell.is_empty() {
                let treated = shell.iter().filter(|&&j| w[j as usize]).count();
                *zi = treated as f64 / shell.len() as f64;
            }
        }
    }
    Ok(z)
}

/// Distance-decay response model.
///
/// `Y_i^(s) = alpha_i^(s) + sum_{rho=1..rho_max} beta_rho^(s) Z_{rho,i}` with
/// `beta_rho^(1) = 2 gamma^rho` and `beta_rho^(0) = gamma^rho`. With
/// `rho_max = 0` the sum is omitted entirely and the model satisfies SUTVA.
#[derive(Debug, Clone)]
pub struct DecayModel {
    shells: Arc<DistanceShells>,
    rho_max: usize,
    gamma: f64,
    alpha: Vec<AlphaPair>,
    beta_control: Vec<f64>,
    beta_treated: Vec<f64>,
}

impl DecayModel {
    pub fn new(
        shells: Arc<DistanceShells>,
        rho_max: usize,
        gamma: f64,
        alpha: Vec<AlphaPair>,
    ) -> Result<Self> {
        if rho_max > shells.rho_max() {
            return Err(Error::InvalidParameter(format!(
                "rho_max = {rho_max} exceeds the shells' radius {}",
                shells.rho_max()
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1), got {gamma}"
            )));
        }
        if alpha.len() != shells.n() {
            return Err(Error::LengthMismatch { expected: shells.n(), actual: alpha.len() });
        }
        let beta_control: Vec<f64> = (1..=rho_max).map(|rho| gamma.powi(rho as i32)).collect();
        let beta_treated: Vec<f64> = beta_control.iter().map(|b| 2.0 * b).collect();
        Ok(Self { shells, rho_max, gamma, alpha, beta_control, beta_treated })
    }

    pub fn shells(&self) -> &Arc<DistanceShells> {
        &self.shells
    }

    pub fn rho_max(&self) -> usize {
        self.rho_max
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> &[AlphaPair] {
        &self.alpha
    }

    pub fn mean_direct_effect(&self) -> f64 {
        kahan_sum(&self.alpha.iter().map(AlphaPair::direct_effect).collect::<Vec<_>>())
            / self.alpha.len() as f64
    }

    /// Spillover term `sum_rho beta_rho^(s) Z_{rho,i}` for both branches.
    /// The shells exclude the ego node, so this depends only on `w_-i`.
    #[inline]
    fn spillover(&self, w: &[bool], i: usize) -> (f64, f64) {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for rho in 1..=self.rho_max {
            let shell = self.shells.shell(i, rho);
            if shell.is_empty() {
                continue;
            }
            let mut treated = 0u32;
            for &j in shell {
                treated += w[j as usize] as u32;
            }
            let z = treated as f64 / shell.len() as f64;
            s0 += self.beta_control[rho - 1] * z;
            s1 += self.beta_treated[rho - 1] * z;
        }
        (s0, s1)
    }
}

impl OutcomeOracle for DecayModel {
    fn n(&self) -> usize {
        self.alpha.len()
    }

    fn outcomes_into(&self, w: &[bool], out: &mut [f64]) {
        for i in 0..self.n() {
            let (s0, s1) = self.spillover(w, i);
            out[i] = if w[i] {
                self.alpha[i].treated + s1
            } else {
                self.alpha[i].control + s0
            };
        }
    }

    fn counterfactuals_into(&self, w: &[bool], y0: &mut [f64], y1: &mut [f64]) {
        for i in 0..self.n() {
            let (s0, s1) = self.spillover(w, i);
            y0[i] = self.alpha[i].control + s0;
            y1[i] = self.alpha[i].treated + s1;
        }
    }
}

/// Potential and observed outcomes of the decay model under assignment `w`:
/// `(Y^(0), Y^(1), Y_observed)`.
pub fn decay_outcomes(model: &DecayModel, w: &Assignment) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if w.n() != model.n() {
        return Err(Error::LengthMismatch { expected: model.n(), actual: w.n() });
    }
    let (y0, y1) = model.counterfactuals(w.bits());
    let observed = w
        .bits()
        .iter()
        .zip(y0.iter().zip(&y1))
        .map(|(&b, (&c, &t))| if b { t } else { c })
        .collect();
    Ok((y0, y1, observed))
}

/// Draws heterogeneous direct effects: `alpha^(1) ~ Exp(mean_treated)` and
/// `alpha^(0) ~ Exp(mean_control)`, independent across units and branches.
pub fn sample_direct_effects(
    n: usize,
    mean_treated: f64,
    mean_control: f64,
    seed: u64,
) -> Result<Vec<AlphaPair>> {
    if mean_treated <= 0.0 || mean_control <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "exponential means must be positive, got ({mean_treated}, {mean_control})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    Ok((0..n)
        .map(|_| {
            let treated = rng.exponential(mean_treated);
            let control = rng.exponential(mean_control);
            AlphaPair { control, treated }
        })
        .collect())
}

/// Plain-text description of a decay-model configuration (the realized alpha
/// draws are reproduced from the seed, not serialized). Keys: `gamma`,
/// `rho_max`, `alpha_means` (treated,control), `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayModelSpec {
    pub gamma: f64,
    pub rho_max: usize,
    pub alpha_mean_treated: f64,
    pub alpha_mean_control: f64,
    pub seed: u64,
}

impl DecayModelSpec {
    pub fn to_config_text(&self) -> String {
        format!(
            "gamma = {}\nrho_max = {}\nalpha_means = {},{}\nseed = {}\n",
            self.gamma, self.rho_max, self.alpha_mean_treated, self.alpha_mean_control, self.seed
        )
    }

    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut gamma = None;
        let mut rho_max = None;
        let mut means = None;
        let mut seed = None;
        for (key, value) in crate::kvtext::parse_kv_lines(text)? {
            match key.as_str() {
                "gamma" => gamma = Some(crate::kvtext::parse_field::<f64>(&key, &value)?),
                "rho_max" => rho_max = Some(crate::kvtext::parse_field::<usize>(&key, &value)?),
                "alpha_means" => {
                    let pair = crate::kvtext::parse_list::<f64>(&key, &value)?;
                    if pair.len() != 2 {
                        return Err(Error::Config(
                            "alpha_means expects exactly two comma-separated values".into(),
                        ));
                    }
                    means = Some((pair[0], pair[1]));
                }
                "seed" => seed = Some(crate::kvtext::parse_field::<u64>(&key, &value)?),
                other => return Err(Error::Config(format!("unknown decay-model key `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Config(format!("missing decay-model key `{what}`"));
        let (alpha_mean_treated, alpha_mean_control) = means.ok_or_else(|| missing("alpha_means"))?;
        Ok(Self {
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            rho_max: rho_max.ok_or_else(|| missing("rho_max"))?,
            alpha_mean_treated,
            alpha_mean_control,
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }

    /// Realizes the model on the given shells, sampling the direct effects
    /// from the stored seed.
    pub fn build(&self, shells: Arc<DistanceShells>) -> Result<DecayModel> {
        let alpha = sample_direct_effects(
            shells.n(),
            self.alpha_mean_treated,
            self.alpha_mean_control,
            self.seed,
        )?;
        DecayModel::new(shells, self.rho_max, self.gamma, alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EateMethod {
    ClosedForm,
    Enumeration,
    MonteCarlo,
}

/// An EATE value with its provenance. `mc_standard_error` is present exactly
/// when the estimate came from the Monte Carlo path.
#[derive(Debug, Clone)]
pub struct EateEstimate {
    pub value: f64,
    pub mc_standard_error: Option<f64>,
    pub method: EateMethod,
    pub replicates: Option<usize>,
}

fn check_pi(pi: f64) -> Result<()> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidParameter(format!("pi must lie in (0, 1), got {pi}")));
    }
    Ok(())
}

/// Closed-form EATE for the decay model under a Bernoulli(pi) design:
///
/// `tau = mean_i(alpha_i^(1) - alpha_i^(0)) + sum_rho gamma^rho * pi * phi_rho`,
///
/// where `phi_rho` is the fraction of nodes with a nonempty rho-shell. The
/// derivation uses `E[Z_{rho,i}] = pi` for nonempty shells (the shell members
/// are all distinct from i, so their treatments are iid Bernoulli(pi)) and
/// the empty-shell convention `Z = 0`.
pub fn eate_closed_form(model: &DecayModel, pi: f64) -> Result<EateEstimate> {
    check_pi(pi)?;
    let mut value = model.mean_direct_effect();
    for rho in 1..=model.rho_max() {
        let phi = model.shells().nonempty_fraction(rho);
        value += model.gamma().powi(rho as i32) * pi * phi;
    }
    Ok(EateEstimate { value, mc_standard_error: None, method: EateMethod::ClosedForm, replicates: None })
}

/// Default population cap for exhaustive design enumeration.
pub const ENUMERATION_CAP: usize = 20;

/// Exact EATE by enumerating all `2^n` assignments, weighting each by its
/// Bernoulli(pi) design probability.
pub fn eate_enumeration(oracle: &dyn OutcomeOracle, pi: f64) -> Result<EateEstimate> {
    eate_enumeration_with_cap(oracle, pi, ENUMERATION_CAP)
}

pub fn eate_enumeration_with_cap(
    oracle: &dyn OutcomeOracle,
    pi: f64,
    cap: usize,
) -> Result<EateEstimate> {
    check_pi(pi)?;
    let n = oracle.n();
    if n > cap {
        return Err(Error::EnumerationCapExceeded { n, cap });
    }
    let mut acc = KahanSum::new();
    let mut w = vec![false; n];
    let mut y0 = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    for mask in 0u64..(1u64 << n) {
        for (i, bit) in w.iter_mut().enumerate() {
            *bit = (mask >> i) & 1 == 1;
        }
        let treated = mask.count_ones() as i32;
        let prob = pi.powi(treated) * (1.0 - pi).powi(n as i32 - treated);
        oracle.counterfactuals_into(&w, &mut y0, &mut y1);
        let mut diff = KahanSum::new();
        for i in 0..n {
            diff.add(y1[i] - y0[i]);
        }
        acc.add(prob * diff.value() / n as f64);
    }
    Ok(EateEstimate {
        value: acc.value(),
        mc_standard_error: None,
        method: EateMethod::Enumeration,
        replicates: None,
    })
}

/// Monte Carlo EATE: averages the assignment-conditional mean effect over
/// seeded replicate draws of the treatment vector. Deterministic per seed
/// and independent of thread count (each replicate derives its own seed).
pub fn eate_monte_carlo(
    oracle: &dyn OutcomeOracle,
    pi: f64,
    replicates: usize,
    seed: u64,
) -> Result<EateEstimate> {
    check_pi(pi)?;
    if replicates < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates for a standard error, got {replicates}"
        )));
    }
    let n = oracle.n();
    let per_rep: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = SplitMix64::new(derive_seed(seed, r));
            let w: Vec<bool> = (0..n).map(|_| rng.bernoulli(pi)).collect();
            let mut y0 = vec![0.0; n];
            let mut y1 = vec![0.0; n];
            oracle.counterfactuals_into(&w, &mut y0, &mut y1);
            let mut diff = KahanSum::new();
            for i in 0..n {
                diff.add(y1[i] - y0[i]);
            }
            diff.value() / n as f64
        })
        .collect();
    let (mean, var) = mean_and_sample_var(&per_rep);
    Ok(EateEstimate {
        value: mean,
        mc_standard_error: Some((var / replicates as f64).sqrt()),
        method: EateMethod::MonteCarlo,
        replicates: Some(replicates),
    })
}
