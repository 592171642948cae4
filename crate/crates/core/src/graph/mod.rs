//! Undirected simple graphs: ingestion, generation, BFS distance shells, and
//! summary statistics.

mod generate;
mod shells;

pub use generate::{gen_random_graph, GraphKind};
pub use shells::{distance_shells, DistanceShells};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use rayon::prelude::*;
use std::collections::VecDeque;

/// Undirected simple graph on nodes `0..n` with sorted adjacency lists.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
    edges: usize,
}

impl Graph {
    /// Builds a graph from an edge list over nodes `0..n`. Self-loops and
    /// duplicate edges are rejected here; use [`load_edge_list`] for lenient
    /// ingestion of raw text.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph must have at least one node".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            if list.len() != before {
                return Err(Error::InvalidParameter("duplicate edge".into()));
            }
            edge_count += list.len();
        }
        Ok(Self { adjacency, edges: edge_count / 2 })
    }

    pub(crate) fn from_adjacency(adjacency: Vec<Vec<u32>>) -> Self {
        let edges = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Self { adjacency, edges }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn avg_degree(&self) -> f64 {
        2.0 * self.edges as f64 / self.node_count() as f64
    }

    /// Edges as (low, high) pairs in lexicographic order.
    pub fn edge_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edges);
        for (i, list) in self.adjacency.iter().enumerate() {
            for &j in list {
                if (i as u32) < j {
                    out.push((i as u32, j));
                }
            }
        }
        out
    }

    /// Edge list text, one `a b` pair per line.
    pub fn to_edge_list_text(&self) -> String {
        let mut s = String::new();
        for (a, b) in self.edge_pairs() {
            s.push_str(&format!("{a} {b}\n"));
        }
        s
    }

    /// BFS distances from `source`; `u32::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.node_count()];
        dist[source] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(source as u32);
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize] + 1;
            for &u in &self.adjacency[v as usize] {
                if dist[u as usize] == u32::MAX {
                    dist[u as usize] = d;
                    queue.push_back(u);
                }
            }
        }
        dist
    }

    /// Connected components as sorted node lists, largest first; ties broken
    /// by smallest minimum node id.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let n = self.node_count();
        let mut comp = vec![usize::MAX; n];
        let mut groups: Vec<Vec<u32>> = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = groups.len();
            let mut members = vec![start as u32];
            comp[start] = id;
            let mut queue = VecDeque::from([start as u32]);
            while let Some(v) = queue.pop_front() {
                for &u in &self.adjacency[v as usize] {
                    if comp[u as usize] == usize::MAX {
                        comp[u as usize] = id;
                        members.push(u);
                        queue.push_back(u);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        // Discovery order already gives ascending minimum id within equal sizes.
        groups.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        groups
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Induced subgraph on the given sorted node set. Returns the subgraph
    /// together with the map from new ids to the ids in `self`.
    pub fn induced_subgraph(&self, nodes: &[u32]) -> (Graph, Vec<u32>) {
        let mut new_id = vec![u32::MAX; self.node_count()];
        for (new, &old) in nodes.iter().enumerate() {
            new_id[old as usize] = new as u32;
        }
        let adjacency = nodes
            .iter()
            .map(|&old| {
                self.adjacency[old as usize]
                    .iter()
                    .filter(|&&v| new_id[v as usize] != u32::MAX)
                    .map(|&v| new_id[v as usize])
                    .collect()
            })
            .collect();
        (Graph::from_adjacency(adjacency), nodes.to_vec())
    }
}

/// Result of ingesting an edge-list file.
#[derive(Debug, Clone)]
pub struct EdgeListLoad {
    pub graph: Graph,
    /// Map from compact node id to the original id in the input.
    pub original_ids: Vec<u64>,
    pub duplicate_edges_dropped: usize,
    pub self_loops_dropped: usize,
}

/// Parses whitespace-separated node-pair lines into an undirected simple
/// graph. `#` starts a comment. Duplicate edges and self-loops are dropped
/// and counted. Node ids are compacted to `0..n-1` in ascending original-id
/// order; the original ids are returned alongside the graph.
pub fn load_edge_list(text: &str) -> Result<EdgeListLoad> {
    let mut raw_edges: Vec<(u64, u64)> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let a = tokens.next();
        let b = tokens.next();
        let extra = tokens.next();
        match (a, b, extra) {
            (Some(a), Some(b), None) => {
                let a: u64 = a.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid node id `{a}`"),
                })?;
                let b: u64 = b.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid node id `{b}`"),
                })?;
                raw_edges.push((a, b));
            }
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected two integer tokens, got `{line}`"),
                })
            }
        }
    }
    if raw_edges.is_empty() {
        return Err(Error::EmptyInput("edge list contains no edges".into()));
    }

    let mut ids: Vec<u64> = raw_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index_of = |id: u64| ids.binary_search(&id).unwrap() as u32;

    let mut self_loops = 0usize;
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(raw_edges.len());
    for (a, b) in raw_edges {
        if a == b {
            self_loops += 1;
            continue;
        }
        let (x, y) = (index_of(a), index_of(b));
        pairs.push(if x < y { (x, y) } else { (y, x) });
    }
    pairs.sort_unstable();
    let before = pairs.len();
    pairs.dedup();
    let duplicates = before - pairs.len();

    let graph = Graph::from_edges(ids.len(), &pairs)?;
    Ok(EdgeListLoad {
        graph,
        original_ids: ids,
        duplicate_edges_dropped: duplicates,
        self_loops_dropped: self_loops,
    })
}

/// Induced subgraph on the largest connected component, with the map from
/// new ids to ids in `g`. Ties between equal-sized components go to the one
/// containing the smallest node id.
pub fn largest_connected_component(g: &Graph) -> (Graph, Vec<u32>) {
    let components = g.components();
    g.induced_subgraph(&components[0])
}

/// Distance statistics in the style of a network summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
    pub avg_pairwise_distance: f64,
    /// Exact diameter when `distances_exact`, otherwise a lower bound from
    /// the sampled sources.
    pub diameter: u32,
    pub distances_exact: bool,
    /// True when the input was disconnected and distance statistics were
    /// computed on the largest connected component only.
    pub lcc_only: bool,
}

impl GraphSummary {
    pub const CSV_HEADER: &'static str = "network,nodes,edges,avg_degree,avg_pairwise_dist,diameter";

    pub fn csv_row(&self, label: &str) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{}",
            label, self.nodes, self.edges, self.avg_degree, self.avg_pairwise_distance, self.diameter
        )
    }
}

/// Computes node/edge counts, average degree, average pairwise distance and
/// diameter. With `exact_distances` the distance statistics run BFS from
/// every node; otherwise they are estimated from `sample_size` uniformly
/// sampled sources (the diameter is then only a lower bound). Disconnected
/// input restricts the distance statistics to the largest connected
/// component and flags the summary accordingly.
pub fn graph_summary(
    g: &Graph,
    exact_distances: bool,
    sample_size: usize,
    seed: u64,
) -> Result<GraphSummary> {
    if g.node_count() == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    let components = g.components();
    let lcc_only = components.len() > 1;
    let (work, _) = if lcc_only {
        g.induced_subgraph(&components[0])
    } else {
        (g.clone(), Vec::new())
    };

    let k = work.node_count();
    let sources: Vec<usize> = if exact_distances || sample_size >= k {
        (0..k).collect()
    } else {
        if sample_size == 0 {
            return Err(Error::InvalidParameter("sample_size must be positive".into()));
        }
        // Partial Fisher-Yates over node ids.
        let mut rng = SplitMix64::new(seed);
        let mut pool: Vec<usize> = (0..k).collect();
        for i in 0..sample_size {
            let j = i + rng.next_range((k - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(sample_size);
        pool
    };
    let exact = sources.len() == k;

    let per_source: Vec<(u64, u64, u32)> = sources
        .par_iter()
        .map(|&s| {
            let dist = work.bfs_distances(s);
            let mut sum = 0u64;
            let mut cnt = 0u64;
            let mut ecc = 0u32;
            for (v, &d) in dist.iter().enumerate() {
                if v != s && d != u32::MAX {
                    sum += d as u64;
                    cnt += 1;
                    ecc = ecc.max(d);
                }
            }
            (sum, cnt, ecc)
        })
        .collect();

    let total: u64 = per_source.iter().map(|&(s, _, _)| s).sum();
    let pairs: u64 = per_source.iter().map(|&(_, c, _)| c).sum();
    let diameter = per_source.iter().map(|&(_, _, e)| e).max().unwrap_or(0);
    let avg = if pairs > 0 { total as f64 / pairs as f64 } else { 0.0 };

    Ok(GraphSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        avg_degree: g.avg_degree(),
        avg_pairwise_distance: avg,
        diameter,
        distances_exact: exact,
        lcc_only,
    })
}
