//! Experiment configuration: flat key/value text with flag overrides.
//!
//! Recognized keys: `graph` (edge-list path) or `generator`
//! (`erdos_renyi` | `watts_strogatz` | `barabasi_albert`) with `n` and the
//! kind's parameters (`p`; `k`, `beta`; `m`), plus `label`, `pi`,
//! `gamma_list`, `rho_max_list`, `instances`, `replicates`,
//! `alpha_mean_treated`, `alpha_mean_control`, `level`, `seed`, `out_dir`.

use crate::error::{Error, Result};
use crate::graph::GraphKind;
use crate::kvtext::{parse_field, parse_kv_lines, parse_list};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphSource {
    /// Edge-list file; ingestion keeps the largest connected component.
    EdgeListFile(PathBuf),
    /// Synthetic graph, drawn from the run seed.
    Generator { kind: GraphKind, n: usize },
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub label: Option<String>,
    pub pi: f64,
    pub gamma_list: Vec<f64>,
    pub rho_max_list: Vec<usize>,
    pub instances: usize,
    /// Per-runner defaults apply when unset (500 normality, 5000 variance,
    /// 2000 coverage).
    pub replicates: Option<usize>,
    pub alpha_mean_treated: f64,
    pub alpha_mean_control: f64,
    pub level: f64,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
}

/// Partial configuration collected from a file or from CLI flags. Overlays
/// merge with "later wins" semantics before building the final config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverlay {
    pub graph: Option<PathBuf>,
    pub generator: Option<String>,
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub beta: Option<f64>,
    pub m: Option<usize>,
    pub label: Option<String>,
    pub pi: Option<f64>,
    pub gamma_list: Option<Vec<f64>>,
    pub rho_max_list: Option<Vec<usize>>,
    pub instances: Option<usize>,
    pub replicates: Option<usize>,
    pub alpha_mean_treated: Option<f64>,
    pub alpha_mean_control: Option<f64>,
    pub level: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

macro_rules! take_over {
    ($dst:expr, $src:expr, $($field:ident),+ $(,)?) => {
        $(if $src.$field.is_some() { $dst.$field = $src.$field.clone(); })+
    };
}

impl ConfigOverlay {
    pub fn parse(text: &str) -> Result<Self> {
        let mut overlay = ConfigOverlay::default();
        for (key, value) in parse_kv_lines(text)? {
            match key.as_str() {
                "graph" => overlay.graph = Some(PathBuf::from(&value)),
                "generator" => overlay.generator = Some(value),
                "n" => overlay.n = Some(parse_field(&key, &value)?),
                "p" => overlay.p = Some(parse_field(&key, &value)?),
                "k" => overlay.k = Some(parse_field(&key, &value)?),
                "beta" => overlay.beta = Some(parse_field(&key, &value)?),
                "m" => overlay.m = Some(parse_field(&key, &value)?),
                "label" => overlay.label = Some(value),
                "pi" => overlay.pi = Some(parse_field(&key, &value)?),
                "gamma_list" => overlay.gamma_list = Some(parse_list(&key, &value)?),
                "rho_max_list" => overlay.rho_max_list = Some(parse_list(&key, &value)?),
                "instances" => overlay.instances = Some(parse_field(&key, &value)?),
                "replicates" => overlay.replicates = Some(parse_field(&key, &value)?),
                "alpha_mean_treated" => {
                    overlay.alpha_mean_treated = Some(parse_field(&key, &value)?)
                }
                "alpha_mean_control" => {
                    overlay.alpha_mean_control = Some(parse_field(&key, &value)?)
                }
                "level" => overlay.level = Some(parse_field(&key, &value)?),
                "seed" => overlay.seed = Some(parse_field(&key, &value)?),
                "out_dir" => overlay.out_dir = Some(PathBuf::from(&value)),
                other => return Err(Error::Config(format!("unknown config key `{other}`"))),
            }
        }
        Ok(overlay)
    }

    /// Applies `other` on top of `self` (fields set in `other` win).
    pub fn overridden_by(mut self, other: &ConfigOverlay) -> ConfigOverlay {
        take_over!(
            self, other, graph, generator, n, p, k, beta, m, label, pi, gamma_list,
            rho_max_list, instances, replicates, alpha_mean_treated, alpha_mean_control,
            level, seed, out_dir,
        );
        self
    }

    /// Resolves defaults and validates ranges.
    pub fn build(&self) -> Result<ExperimentConfig> {
        let graph = match (&self.graph, &self.generator) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either `graph` or `generator`, not both".into()))
            }
            (Some(path), None) => GraphSource::EdgeListFile(path.clone()),
            (None, Some(gen)) => {
                let n = self.n.ok_or_else(|| {
                    Error::Config("generator configs require `n`".into())
                })?;
                let kind = match gen.as_str() {
                    "erdos_renyi" => GraphKind::ErdosRenyi {
                        p: self.p.ok_or_else(|| Error::Config("erdos_renyi requires `p`".into()))?,
                    },
                    "watts_strogatz" => GraphKind::WattsStrogatz {
                        k: self.k.ok_or_else(|| {
                            Error::Config("watts_strogatz requires `k`".into())
                        })?,
                        beta: self.beta.ok_or_else(|| {
                            Error::Config("watts_strogatz requires `beta`".into())
                        })?,
                    },
                    "barabasi_albert" => GraphKind::BarabasiAlbert {
                        m: self.m.ok_or_else(|| {
                            Error::Config("barabasi_albert requires `m`".into())
                        })?,
                    },
                    other => {
                        return Err(Error::Config(format!("unknown generator `{other}`")))
                    }
                };
                GraphSource::Generator { kind, n }
            }
            (None, None) => {
                return Err(Error::Config("config needs a `graph` file or a `generator`".into()))
            }
        };

        let cfg = ExperimentConfig {
            graph,
            label: self.label.clone(),
            pi: self.pi.unwrap_or(0.5),
            gamma_list: self.gamma_list.clone().unwrap_or_else(|| vec![0.5, 0.9, 0.99]),
            rho_max_list: self.rho_max_list.clone().unwrap_or_else(|| vec![2, 6]),
            instances: self.instances.unwrap_or(10),
            replicates: self.replicates,
            alpha_mean_treated: self.alpha_mean_treated.unwrap_or(1.0 / 0.3),
            alpha_mean_control: self.alpha_mean_control.unwrap_or(2.0),
            level: self.level.unwrap_or(0.95),
            seed: self.seed.ok_or_else(|| Error::Config("`seed` is required".into()))?,
            out_dir: self.out_dir.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let check_unit = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("`{name}` must lie in (0, 1), got {v}")));
            }
            Ok(())
        };
        check_unit("pi", self.pi)?;
        check_unit("level", self.level)?;
        if self.gamma_list.is_empty() {
            return Err(Error::Config("`gamma_list` must not be empty".into()));
        }
        for &g in &self.gamma_list {
            check_unit("gamma_list entry", g)?;
        }
        if self.rho_max_list.is_empty() {
            return Err(Error::Config("`rho_max_list` must not be empty".into()));
        }
        if self.instances == 0 {
            return Err(Error::Config("`instances` must be at least 1".into()));
        }
        if let Some(r) = self.replicates {
            if r < 2 {
                return Err(Error::Config("`replicates` must be at least 2".into()));
            }
        }
        if self.alpha_mean_treated <= 0.0 || self.alpha_mean_control <= 0.0 {
            return Err(Error::Config("alpha means must be positive".into()));
        }
        Ok(())
    }

    /// Grid cells in row-major (rho_max, gamma) order; this is also the
    /// output row order.
    pub fn grid(&self) -> Vec<(usize, f64)> {
        let mut cells = Vec::with_capacity(self.rho_max_list.len() * self.gamma_list.len());
        for &rho in &self.rho_max_list {
            for &gamma in &self.gamma_list {
                cells.push((rho, gamma));
            }
        }
        cells
    }
}
