//! Bernoulli treatment designs and point estimators.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// A realized binary treatment vector with cached arm sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    w: Vec<bool>,
    n1: usize,
    n0: usize,
}

impl Assignment {
    pub fn new(w: Vec<bool>) -> Self {
        let n1 = w.iter().filter(|&&b| b).count();
        let n0 = w.len() - n1;
        Self { w, n1, n0 }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    /// Treated count N1.
    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Control count N0.
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn bits(&self) -> &[bool] {
        &self.w
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.w[i]
    }

    /// A copy with unit `i` set to `value`.
    pub fn with_bit(&self, i: usize, value: bool) -> Assignment {
        let mut w = self.w.clone();
        w[i] = value;
        Assignment::new(w)
    }

    /// One `0`/`1` per line, for replaying assignments.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(2 * self.w.len());
        for &b in &self.w {
            s.push(if b { '1' } else { '0' });
            s.push('\n');
        }
        s
    }

    /// Parses a single 0/1 column. Blank lines and `#` comments are ignored.
    pub fn from_csv(text: &str) -> Result<Assignment> {
        let mut w = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "0" => w.push(false),
                "1" => w.push(true),
                other => {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("expected 0 or 1, got `{other}`"),
                    })
                }
            }
        }
        if w.is_empty() {
            return Err(Error::EmptyInput("assignment column is empty".into()));
        }
        Ok(Assignment::new(w))
    }
}

/// Bernoulli design: each unit treated independently with probability `pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design {
    pi: f64,
    seed: u64,
}

impl Design {
    pub fn new(pi: f64, seed: u64) -> Result<Self> {
        if !(pi > 0.0 && pi < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "treatment probability must lie strictly in (0, 1), got {pi}"
            )));
        }
        Ok(Self { pi, seed })
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Draws the assignment for one replicate. Deterministic for fixed
/// `(design.seed, replicate_index)` and independent of thread count.
pub fn draw_assignment(design: &Design, n: usize, replicate_index: u64) -> Assignment {
    let mut rng = SplitMix64::new(derive_seed(design.seed(), replicate_index));
    Assignment::new((0..n).map(|_| rng.bernoulli(design.pi())).collect())
}

/// Difference-in-means estimator with empirical arm sizes. Errors when an
/// arm is empty; redraw policy is the caller's.
pub fn diff_in_means(a: &Assignment, y: &[f64]) -> Result<f64> {
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
    let mut sum1 = 0.0;
    let mut sum0 = 0.0;
    for (&b, &yi) in a.bits().iter().zip(y) {
        if b {
            sum1 += yi;
        } else {
            sum0 += yi;
        }
    }
    Ok(sum1 / a.n1() as f64 - sum0 / a.n0() as f64)
}

/// Horvitz-Thompson variant of the difference in means, normalizing by the
/// population arm sizes `n*pi` and `n*(1-pi)`. Defined for every assignment,
/// including all-treated and all-control.
pub fn horvitz_thompson(a: &Assignment, y: &[f64], pi: f64) -> Result<f64> {
    if y.len() != a.n() {
        return Err(Error::LengthMismatch { expected: a.n(), actual: y.len() });
    }
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidParameter(format!("pi must be in (0, 1), got {pi}")));
    }
    let n = a.n() as f64;
    let mut acc = 0.0;
    for (&b, &yi) in a.bits().iter().zip(y) {
        if b {
            acc += yi / (n * pi);
        } else {
            acc -= yi / (n * (1.0 - pi));
        }
    }
    Ok(acc)
}
