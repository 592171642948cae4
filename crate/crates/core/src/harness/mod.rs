//! Simulation harness: normality study, variance-ratio study, and CI
//! coverage study over a (rho_max, gamma) grid on one graph.
//!
//! Seed derivation is hierarchical and documented: the run seed spawns one
//! stream for the synthetic graph, one for the direct-effect draws, and one
//! per grid cell; cells spawn per-instance and per-replicate streams. Every
//! loop that runs in parallel collects into replicate order before reducing,
//! so outputs are byte-identical for a fixed config and seed regardless of
//! thread count.

mod config;

pub use config::{ConfigOverlay, ExperimentConfig, GraphSource};

use crate::design::{diff_in_means, Assignment};
use crate::error::Result;
use crate::graph::{
    distance_shells, gen_random_graph, largest_connected_component, load_edge_list, Graph,
};
use crate::normality::shapiro_wilk;
use crate::numeric::mean;
use crate::outcome::{eate_closed_form, sample_direct_effects, DecayModel, OutcomeOracle};
use crate::rng::{derive_seed, SplitMix64};
use crate::variance::{
    confidence_interval, neyman_sutva_variance, variance_components_mc, vtau_plugin,
    VarianceComponents, REDRAW_BUDGET,
};
use rayon::prelude::*;
use std::path::Path;
use std::sync::Arc;

const STREAM_GRAPH: u64 = 1;
const STREAM_ALPHA: u64 = 2;
const STREAM_CELLS: u64 = 3;

/// A graph resolved from the config, with its display label.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub graph: Graph,
    pub label: String,
}

/// Loads or generates the experiment graph. Edge-list files are reduced to
/// their largest connected component, mirroring the ingestion used for real
/// networks; generated graphs are used as-is.
pub fn prepare_graph(cfg: &ExperimentConfig) -> Result<PreparedGraph> {
    match &cfg.graph {
        GraphSource::EdgeListFile(path) => {
            let text = std::fs::read_to_string(path)?;
            let load = load_edge_list(&text)?;
            let (graph, _) = largest_connected_component(&load.graph);
            let label = cfg.label.clone().unwrap_or_else(|| {
                path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into())
            });
            Ok(PreparedGraph { graph, label })
        }
        GraphSource::Generator { kind, n } => {
            let graph = gen_random_graph(kind, *n, derive_seed(cfg.seed, STREAM_GRAPH))?;
            let label = cfg.label.clone().unwrap_or_else(|| format!("{kind}-n{n}"));
            Ok(PreparedGraph { graph, label })
        }
    }
}

/// Outcome of one grid cell. Failed cells keep their row (with NaN payloads)
/// so the output row count always equals the grid cardinality.
#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

impl CellStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, CellStatus::Ok)
    }

    fn csv(&self) -> String {
        match self {
            CellStatus::Ok => "ok".into(),
            CellStatus::Failed(msg) => format!("failed: {}", msg.replace(',', ";")),
        }
    }
}

/// One normality-study row: Shapiro-Wilk statistics of the
/// difference-in-means sample, aggregated over direct-effect instances.
#[derive(Debug, Clone)]
pub struct NormalityRow {
    pub network: String,
    pub nodes: usize,
    pub rho_max: usize,
    pub gamma: f64,
    pub sw_statistic_avg: f64,
    pub p_avg: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Per-instance p-values (not emitted to CSV).
    pub p_values: Vec<f64>,
    pub status: CellStatus,
}

/// One variance-study row, mirroring the variance-table layout.
#[derive(Debug, Clone)]
pub struct VarianceRow {
    pub rho_max: usize,
    pub gamma: f64,
    pub sutva: f64,
    pub expected: f64,
    pub observed: f64,
    pub ratio_expected: f64,
    pub ratio_observed: f64,
    /// Full component set (not emitted to CSV).
    pub components: Option<VarianceComponents>,
    pub status: CellStatus,
}

/// One coverage-study row: empirical 95%-CI coverage under three variance
/// choices. `coverage_oracle_adjusted` adds the Monte Carlo ground-truth
/// sigma_tau^2 / n to the Neyman estimator; it is labeled an oracle because
/// it uses the simulated truth, not an estimator.
#[derive(Debug, Clone)]
pub struct CoverageRow {
    pub rho_max: usize,
    pub gamma: f64,
    pub tau_true: f64,
    pub coverage_sutva: f64,
    pub coverage_combined: f64,
    pub coverage_oracle_adjusted: f64,
    pub replicates: usize,
    pub status: CellStatus,
}

fn draw_nondegenerate(
    n: usize,
    pi: f64,
    rep_seed: u64,
    min_arm: usize,
) -> std::result::Result<(Assignment, usize), usize> {
    let mut redraws = 0usize;
    for attempt in 0..=REDRAW_BUDGET as u64 {
        let mut rng = SplitMix64::new(derive_seed(rep_seed, attempt));
        let a = Assignment::new((0..n).map(|_| rng.bernoulli(pi)).collect());
        if a.n1() >= min_arm && a.n0() >= min_arm {
            return Ok((a, redraws));
        }
        redraws += 1;
    }
    Err(redraws)
}

/// Runs the normality study: per grid cell, redraws the direct effects
/// `instances` times, collects `replicates` difference-in-means estimates
/// per instance, and tests each sample for normality.
pub fn run_sim_normality(cfg: &ExperimentConfig) -> Result<Vec<NormalityRow>> {
    cfg.validate()?;
    let prepared = prepare_graph(cfg)?;
    let graph = &prepared.graph;
    let n = graph.node_count();
    let replicates = cfg.replicates.unwrap_or(500);
    let max_rho = *cfg.rho_max_list.iter().max().unwrap();
    let shells = Arc::new(distance_shells(graph, max_rho)?);
    let cells_seed = derive_seed(cfg.seed, STREAM_CELLS);

    let mut rows = Vec::with_capacity(cfg.grid().len());
    for (ci, (rho_max, gamma)) in cfg.grid().into_iter().enumerate() {
        let cell_seed = derive_seed(cells_seed, ci as u64);
        let mut stats = Vec::with_capacity(cfg.instances);
        let mut pvals = Vec::with_capacity(cfg.instances);
        let mut failure: Option<String> = None;

        'instances: for inst in 0..cfg.instances {
            let inst_seed = derive_seed(cell_seed, inst as u64);
            let alpha = sample_direct_effects(
                n,
                cfg.alpha_mean_treated,
                cfg.alpha_mean_control,
                derive_seed(inst_seed, 0),
            )?;
            let model = DecayModel::new(shells.clone(), rho_max, gamma, alpha)?;

            let reps: Vec<std::result::Result<(f64, usize), usize>> = (0..replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let rep_seed = derive_seed(inst_seed, 1 + r);
                    let (a, redraws) = draw_nondegenerate(n, cfg.pi, rep_seed, 1)?;
                    let y = model.outcomes(a.bits());
                    let tau = diff_in_means(&a, &y).map_err(|_| redraws)?;
                    Ok((tau, redraws))
                })
                .collect();

            let mut taus = Vec::with_capacity(replicates);
            let mut cell_redraws = 0usize;
            for rep in reps {
                match rep {
                    Ok((tau, redraws)) => {
                        cell_redraws += redraws;
                        taus.push(tau);
                    }
                    Err(redraws) => {
                        cell_redraws += redraws;
                        failure = Some(format!(
                            "redraw budget exhausted ({cell_redraws} redraws, budget {REDRAW_BUDGET})"
                        ));
                        break 'instances;
                    }
                }
            }
            if cell_redraws > REDRAW_BUDGET {
                failure = Some(format!(
                    "redraw budget exhausted ({cell_redraws} redraws, budget {REDRAW_BUDGET})"
                ));
                break 'instances;
            }
            match shapiro_wilk(&taus) {
                Ok(sw) => {
                    stats.push(sw.statistic);
                    pvals.push(sw.p_value);
                }
                Err(e) => {
                    failure = Some(format!("shapiro-wilk failed: {e}"));
                    break 'instances;
                }
            }
        }

        rows.push(match failure {
            None => NormalityRow {
                network: prepared.label.clone(),
                nodes: n,
                rho_max,
                gamma,
                sw_statistic_avg: mean(&stats),
                p_avg: mean(&pvals),
                p_min: pvals.iter().cloned().fold(f64::INFINITY, f64::min),
                p_max: pvals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                p_values: pvals,
                status: CellStatus::Ok,
            },
            Some(msg) => NormalityRow {
                network: prepared.label.clone(),
                nodes: n,
                rho_max,
                gamma,
                sw_statistic_avg: f64::NAN,
                p_avg: f64::NAN,
                p_min: f64::NAN,
                p_max: f64::NAN,
                p_values: Vec::new(),
                status: CellStatus::Failed(msg),
            },
        });
    }
    Ok(rows)
}

/// Runs the variance study: a single direct-effect instance, then per grid
/// cell a Monte Carlo variance decomposition.
pub fn run_sim_variance(cfg: &ExperimentConfig) -> Result<Vec<VarianceRow>> {
    cfg.validate()?;
    let prepared = prepare_graph(cfg)?;
    let graph = &prepared.graph;
    let n = graph.node_count();
    let replicates = cfg.replicates.unwrap_or(5000);
    let max_rho = *cfg.rho_max_list.iter().max().unwrap();
    let shells = Arc::new(distance_shells(graph, max_rho)?);
    let alpha = sample_direct_effects(
        n,
        cfg.alpha_mean_treated,
        cfg.alpha_mean_control,
        derive_seed(cfg.seed, STREAM_ALPHA),
    )?;
    let cells_seed = derive_seed(cfg.seed, STREAM_CELLS);

    let mut rows = Vec::with_capacity(cfg.grid().len());
    for (ci, (rho_max, gamma)) in cfg.grid().into_iter().enumerate() {
        let cell_seed = derive_seed(cells_seed, ci as u64);
        let model = DecayModel::new(shells.clone(), rho_max, gamma, alpha.clone())?;
        match variance_components_mc(&model, cfg.pi, replicates, cell_seed) {
            Ok(c) => rows.push(VarianceRow {
                rho_max,
                gamma,
                sutva: c.sigma_sutva_sq,
                expected: c.expected_total(),
                observed: c.observed_var_dm,
                ratio_expected: c.ratio_expected(),
                ratio_observed: c.ratio_observed(),
                components: Some(c),
                status: CellStatus::Ok,
            }),
            Err(e) => rows.push(VarianceRow {
                rho_max,
                gamma,
                sutva: f64::NAN,
                expected: f64::NAN,
                observed: f64::NAN,
                ratio_expected: f64::NAN,
                ratio_observed: f64::NAN,
                components: None,
                status: CellStatus::Failed(e.to_string()),
            }),
        }
    }
    Ok(rows)
}

/// Runs the coverage study: per grid cell, the true effect comes from the
/// closed form, the interference variance from a Monte Carlo decomposition,
/// and the empirical coverage from fresh assignment draws.
pub fn run_sim_coverage(cfg: &ExperimentConfig) -> Result<Vec<CoverageRow>> {
    cfg.validate()?;
    let prepared = prepare_graph(cfg)?;
    let graph = &prepared.graph;
    let n = graph.node_count();
    let replicates = cfg.replicates.unwrap_or(2000);
    let max_rho = *cfg.rho_max_list.iter().max().unwrap();
    let shells = Arc::new(distance_shells(graph, max_rho)?);
    let alpha = sample_direct_effects(
        n,
        cfg.alpha_mean_treated,
        cfg.alpha_mean_control,
        derive_seed(cfg.seed, STREAM_ALPHA),
    )?;
    let cells_seed = derive_seed(cfg.seed, STREAM_CELLS);

    let mut rows = Vec::with_capacity(cfg.grid().len());
    for (ci, (rho_max, gamma)) in cfg.grid().into_iter().enumerate() {
        let cell_seed = derive_seed(cells_seed, ci as u64);
        let model = DecayModel::new(shells.clone(), rho_max, gamma, alpha.clone())?;
        let row = coverage_cell(cfg, &model, n, rho_max, gamma, replicates, cell_seed);
        rows.push(row);
    }
    Ok(rows)
}

type CoverageRep = std::result::Result<((bool, bool, bool), usize), String>;

fn coverage_cell(
    cfg: &ExperimentConfig,
    model: &DecayModel,
    n: usize,
    rho_max: usize,
    gamma: f64,
    replicates: usize,
    cell_seed: u64,
) -> CoverageRow {
    let failed = |msg: String| CoverageRow {
        rho_max,
        gamma,
        tau_true: f64::NAN,
        coverage_sutva: f64::NAN,
        coverage_combined: f64::NAN,
        coverage_oracle_adjusted: f64::NAN,
        replicates,
        status: CellStatus::Failed(msg),
    };

    let tau_true = match eate_closed_form(model, cfg.pi) {
        Ok(est) => est.value,
        Err(e) => return failed(e.to_string()),
    };
    let comps = match variance_components_mc(model, cfg.pi, replicates, derive_seed(cell_seed, 0)) {
        Ok(c) => c,
        Err(e) => return failed(e.to_string()),
    };
    let sigma_tau_over_n = comps.sigma_tau_sq / n as f64;

    let draws_seed = derive_seed(cell_seed, 1);
    let reps: Vec<CoverageRep> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(draws_seed, r);
            // Neyman needs two units per arm.
            let (a, redraws) = draw_nondegenerate(n, cfg.pi, rep_seed, 2)
                .map_err(|_| "redraw budget exhausted".to_string())?;
            let y = model.outcomes(a.bits());
            let tau_hat = diff_in_means(&a, &y).map_err(|e| e.to_string())?;
            let v_sutva = neyman_sutva_variance(&a, &y).map_err(|e| e.to_string())?;
            let v_combined = v_sutva + vtau_plugin(&a, &y).map_err(|e| e.to_string())?;
            let v_oracle = v_sutva + sigma_tau_over_n;
            let covers = |variance: f64| -> std::result::Result<bool, String> {
                Ok(confidence_interval(tau_hat, variance, cfg.level)
                    .map_err(|e| e.to_string())?
                    .contains(tau_true))
            };
            Ok(((covers(v_sutva)?, covers(v_combined)?, covers(v_oracle)?), redraws))
        })
        .collect();

    let mut hits = (0usize, 0usize, 0usize);
    let mut total_redraws = 0usize;
    for rep in reps {
        match rep {
            Ok(((s, c, o), redraws)) => {
                total_redraws += redraws;
                hits.0 += s as usize;
                hits.1 += c as usize;
                hits.2 += o as usize;
            }
            Err(msg) => return failed(msg),
        }
    }
    if total_redraws > REDRAW_BUDGET {
        return failed(format!(
            "redraw budget exhausted ({total_redraws} redraws, budget {REDRAW_BUDGET})"
        ));
    }
    let frac = |h: usize| h as f64 / replicates as f64;
    CoverageRow {
        rho_max,
        gamma,
        tau_true,
        coverage_sutva: frac(hits.0),
        coverage_combined: frac(hits.1),
        coverage_oracle_adjusted: frac(hits.2),
        replicates,
        status: CellStatus::Ok,
    }
}

pub const NORMALITY_CSV_HEADER: &str =
    "network,nodes,rho_max,gamma,sw_statistic_avg,p_avg,p_min,p_max,status";

pub fn normality_csv(rows: &[NormalityRow]) -> String {
    let mut s = format!("{NORMALITY_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.3},{:.3},{:.3},{:.3},{}\n",
            r.network,
            r.nodes,
            r.rho_max,
            r.gamma,
            r.sw_statistic_avg,
            r.p_avg,
            r.p_min,
            r.p_max,
            r.status.csv()
        ));
    }
    s
}

pub const VARIANCE_CSV_HEADER: &str =
    "rho_max,gamma,sutva,expected,observed,ratio_expected,ratio_observed,status";

pub fn variance_csv(rows: &[VarianceRow]) -> String {
    let mut s = format!("{VARIANCE_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.3},{:.3},{:.3},{:.3},{:.3},{}\n",
            r.rho_max, r.gamma, r.sutva, r.expected, r.observed, r.ratio_expected,
            r.ratio_observed,
            r.status.csv()
        ));
    }
    s
}

pub const COVERAGE_CSV_HEADER: &str =
    "rho_max,gamma,tau_true,coverage_sutva,coverage_combined,coverage_oracle_adjusted,replicates,status";

pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    let mut s = format!("{COVERAGE_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{},{}\n",
            r.rho_max,
            r.gamma,
            r.tau_true,
            r.coverage_sutva,
            r.coverage_combined,
            r.coverage_oracle_adjusted,
            r.replicates,
            r.status.csv()
        ));
    }
    s
}

/// Writes a text file, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSource::Generator {
                kind: crate::graph::GraphKind::ErdosRenyi { p: 0.08 },
                n: 60,
            },
            label: None,
            pi: 0.5,
            gamma_list: vec![0.5],
            rho_max_list: vec![0, 1],
            instances: 3,
            replicates: Some(80),
            alpha_mean_treated: 1.0 / 0.3,
            alpha_mean_control: 2.0,
            level: 0.95,
            seed,
            out_dir: None,
        }
    }

    #[test]
    fn normality_rows_cover_grid_and_are_deterministic() {
        let cfg = small_cfg(5);
        let a = run_sim_normality(&cfg).unwrap();
        let b = run_sim_normality(&cfg).unwrap();
        assert_eq!(a.len(), cfg.grid().len());
        assert_eq!(normality_csv(&a), normality_csv(&b));
        for row in &a {
            assert!(row.status.is_ok());
            assert_eq!(row.p_values.len(), 3);
            assert!(row.p_min <= row.p_avg && row.p_avg <= row.p_max);
            assert!(row.sw_statistic_avg <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn variance_rows_have_unit_ratio_under_sutva() {
        let cfg = ExperimentConfig { rho_max_list: vec![0], ..small_cfg(7) };
        let rows = run_sim_variance(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!(row.status.is_ok());
        assert_eq!(row.ratio_expected, 1.0);
        assert_eq!(row.sutva, row.expected);
    }

    #[test]
    fn variance_csv_is_byte_stable() {
        let cfg = small_cfg(11);
        let a = variance_csv(&run_sim_variance(&cfg).unwrap());
        let b = variance_csv(&run_sim_variance(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(VARIANCE_CSV_HEADER));
    }

    #[test]
    fn coverage_runs_on_sutva_cell() {
        let cfg = ExperimentConfig {
            rho_max_list: vec![0],
            replicates: Some(400),
            ..small_cfg(13)
        };
        let rows = run_sim_coverage(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert!(row.status.is_ok(), "{:?}", row.status);
        // Neyman is conservative under SUTVA; at n = 60 coverage should sit
        // near or above nominal.
        assert!(row.coverage_sutva > 0.9, "coverage {}", row.coverage_sutva);
        assert_eq!(row.coverage_sutva, row.coverage_combined);
    }

    #[test]
    fn coverage_csv_is_byte_stable() {
        let cfg = ExperimentConfig { replicates: Some(150), ..small_cfg(23) };
        let a = coverage_csv(&run_sim_coverage(&cfg).unwrap());
        let b = coverage_csv(&run_sim_coverage(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(COVERAGE_CSV_HEADER));
        assert_eq!(a.lines().count(), 1 + cfg.grid().len());
    }

    #[test]
    fn failed_cells_are_reported_not_skipped() {
        // pi extreme enough that a 6-node graph draws degenerate assignments
        // until the redraw budget runs out.
        let cfg = ExperimentConfig {
            graph: GraphSource::Generator {
                kind: crate::graph::GraphKind::ErdosRenyi { p: 0.5 },
                n: 6,
            },
            pi: 0.999,
            replicates: Some(500),
            ..small_cfg(17)
        };
        let rows = run_sim_variance(&cfg).unwrap();
        assert_eq!(rows.len(), cfg.grid().len());
        assert!(rows.iter().any(|r| !r.status.is_ok()));
        let csv = variance_csv(&rows);
        assert!(csv.contains("failed:"));
    }

    #[test]
    fn prepared_graph_from_file_takes_lcc() {
        let dir = std::env::temp_dir().join("netexp-harness-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("two-components.edges");
        std::fs::write(&path, "0 1\n1 2\n5 6\n").unwrap();
        let cfg = ExperimentConfig {
            graph: GraphSource::EdgeListFile(path.clone()),
            ..small_cfg(19)
        };
        let prepared = prepare_graph(&cfg).unwrap();
        assert_eq!(prepared.graph.node_count(), 3);
        assert_eq!(prepared.label, "two-components");
        std::fs::remove_file(path).ok();
    }
}
