//! Seeded random graph generators.
//!
//! All generators are bitwise deterministic for a fixed `(kind, n, seed)` and
//! run single-threaded, so results never depend on thread count.

use super::Graph;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Random graph families used as synthetic stand-ins for real networks.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    ErdosRenyi { p: f64 },
    WattsStrogatz { k: usize, beta: f64 },
    BarabasiAlbert { m: usize },
}

impl std::fmt::Display for GraphKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphKind::ErdosRenyi { p } => write!(f, "erdos_renyi-p{p}"),
            GraphKind::WattsStrogatz { k, beta } => write!(f, "watts_strogatz-k{k}-beta{beta}"),
            GraphKind::BarabasiAlbert { m } => write!(f, "barabasi_albert-m{m}"),
        }
    }
}

pub fn gen_random_graph(kind: &GraphKind, n: usize, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    match *kind {
        GraphKind::ErdosRenyi { p } => erdos_renyi(n, p, seed),
        GraphKind::WattsStrogatz { k, beta } => watts_strogatz(n, k, beta, seed),
        GraphKind::BarabasiAlbert { m } => barabasi_albert(n, m, seed),
    }
}

fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p must be in [0, 1], got {p}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    for i in 0..n as u32 {
        for j in (i + 1)..n as u32 {
            if rng.bernoulli(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

fn watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Result<Graph> {
    if k == 0 || !k.is_multiple_of(2) || k >= n {
        return Err(Error::InvalidParameter(format!(
            "watts_strogatz requires even k with 0 < k < n, got k = {k}, n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter(format!("beta must be in [0, 1], got {beta}")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut adj: Vec<std::collections::HashSet<u32>> = vec![Default::default(); n];
    let add = |adj: &mut Vec<std::collections::HashSet<u32>>, a: usize, b: usize| {
        adj[a].insert(b as u32);
        adj[b].insert(a as u32);
    };
    for i in 0..n {
        for lane in 1..=k / 2 {
            add(&mut adj, i, (i + lane) % n);
        }
    }
    // Rewire the far endpoint of each lattice edge with probability beta,
    // keeping the edge count fixed. Rewires that would create a self-loop or
    // a duplicate keep the original edge.
    for lane in 1..=k / 2 {
        for i in 0..n {
            if !rng.bernoulli(beta) {
                continue;
            }
            let old = (i + lane) % n;
            if adj[i].len() >= n - 1 {
                continue;
            }
            let target = loop {
                let t = rng.next_range(n as u64) as usize;
                if t != i && !adj[i].contains(&(t as u32)) {
                    break t;
                }
            };
            adj[i].remove(&(old as u32));
            adj[old].remove(&(i as u32));
            add(&mut adj, i, target);
        }
    }
    let adjacency = adj
        .into_iter()
        .map(|set| {
            let mut v: Vec<u32> = set.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();
    Ok(Graph::from_adjacency(adjacency))
}

fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m == 0 || m >= n {
        return Err(Error::InvalidParameter(format!(
            "barabasi_albert requires 1 <= m < n, got m = {m}, n = {n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity((n - m) * m);
    // One endpoint entry per edge end; sampling from this multiset is
    // preferential attachment by degree.
    let mut repeated: Vec<u32> = Vec::with_capacity(2 * (n - m) * m);
    let mut targets: Vec<u32> = (0..m as u32).collect();
    for new in m..n {
        let new = new as u32;
        for &t in &targets {
            edges.push((t.min(new), t.max(new)));
            repeated.push(t);
            repeated.push(new);
        }
        if new as usize + 1 == n {
            break;
        }
        targets.clear();
        while targets.len() < m {
            let pick = repeated[rng.next_range(repeated.len() as u64) as usize];
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
    }
    Graph::from_edges(n, &edges)
}
