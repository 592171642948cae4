//! Estimators, variance decomposition, and interference diagnostics for
//! randomized experiments on networks.
//!
//! The crate provides:
//!
//! - [`graph`]: undirected simple graphs, edge-list ingestion, synthetic
//!   generators, BFS distance shells, and summary statistics;
//! - [`outcome`]: potential-outcome oracles, the distance-decay response
//!   model, and the expected average treatment effect (closed form, exact
//!   enumeration, Monte Carlo);
//! - [`design`]: Bernoulli designs, the difference-in-means estimator, and
//!   its Horvitz-Thompson variant;
//! - [`variance`]: the Neyman variance estimator, the literal plug-in
//!   interference adjustment, confidence intervals, and a Monte Carlo
//!   variance decomposition into SUTVA and interference components;
//! - [`dependency`]: dependency-graph construction (analytic and exhaustive
//!   probe), degree-rate diagnostics, normal-approximation bound terms, and
//!   the discrete-derivative decomposition;
//! - [`normality`]: Shapiro-Wilk (Royston AS R94), empirical moments, and a
//!   KS uniformity check;
//! - [`harness`]: config-driven simulation studies (normality, variance
//!   ratios, CI coverage) with deterministic seeding and CSV output.
//!
//! Everything randomized takes an explicit 64-bit seed; replicate loops
//! derive per-replicate seeds so parallel runs are bitwise reproducible.
//!
//! ```
//! use netexp::graph::{distance_shells, gen_random_graph, GraphKind};
//! use netexp::outcome::{eate_closed_form, sample_direct_effects, DecayModel};
//! use netexp::variance::variance_components_mc;
//! use std::sync::Arc;
//!
//! let graph = gen_random_graph(&GraphKind::ErdosRenyi { p: 0.05 }, 120, 7)?;
//! let shells = Arc::new(distance_shells(&graph, 2)?);
//! let alpha = sample_direct_effects(120, 1.0 / 0.3, 2.0, 8)?;
//! let model = DecayModel::new(shells, 2, 0.9, alpha)?;
//!
//! let tau = eate_closed_form(&model, 0.5)?.value;
//! let c = variance_components_mc(&model, 0.5, 400, 9)?;
//! assert!(tau > 0.0);
//! assert!(c.ratio_expected() >= 1.0);
//! # Ok::<(), netexp::Error>(())
//! ```

pub mod dependency;
pub mod design;
pub mod error;
pub mod graph;
pub mod harness;
mod kvtext;
pub mod normal;
pub mod normality;
pub mod numeric;
pub mod outcome;
pub mod rng;
pub mod variance;

pub use error::{Error, Result};
