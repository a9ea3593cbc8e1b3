//! Link-traced sampling of a population and the per-node recruitment log.

mod depth;
mod io;
mod sampler;

use std::collections::HashMap;

pub use depth::node_depth;
pub use io::{read_long_format, to_long_format, write_long_format, SAMPLE_HEADER};
pub use sampler::{link_trace_sample, QueueOrder, SamplerConfig};

use crate::netgen::PopulationGraph;

/// One sampled node, in sampling order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRow {
    pub order: usize,
    pub node_id: usize,
    /// Recruiting node; `None` for the initial seed and for leaps.
    pub source_id: Option<usize>,
    pub pop_degree: usize,
    pub links_reported: usize,
    pub links_responding: usize,
    /// Referrals from this node that were later added to the sample.
    pub links_recruited: usize,
    /// Referrals from this node purged because the referred node was
    /// already sampled.
    pub links_redundant: usize,
    pub infected: bool,
    pub x: f64,
    pub y: f64,
    /// Mean geodesic distance to the rest of this node's recruitment tree.
    pub depth: Option<f64>,
}

impl NodeRow {
    pub fn is_leap(&self) -> bool {
        self.source_id.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleRecord {
    pub rows: Vec<NodeRow>,
}

impl SampleRecord {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_leaps(&self) -> usize {
        self.rows.iter().filter(|r| r.is_leap()).count()
    }

    /// Recruitment edges as `(source_id, node_id)`.
    pub fn recruitment_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .filter_map(|r| r.source_id.map(|s| (s, r.node_id)))
    }

    /// Row index of every sampled node id.
    pub fn row_index(&self) -> HashMap<usize, usize> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.node_id, i))
            .collect()
    }

    /// Checks the structural guarantees of a sample against its population:
    /// consecutive order, unique nodes, counter monotonicity, leap
    /// accounting, a recruitment forest whose sources precede their recruits,
    /// and containment of every recruitment edge in the population.
    pub fn check_invariants(&self, graph: &PopulationGraph) -> Result<(), String> {
        let index = self.row_index();
        if index.len() != self.rows.len() {
            return Err("a node appears more than once".into());
        }
        let mut recruited_by = vec![0usize; self.rows.len()];
        for (i, r) in self.rows.iter().enumerate() {
            if r.order != i {
                return Err(format!("row {i} has order {}", r.order));
            }
            if r.node_id >= graph.n_nodes() {
                return Err(format!("row {i}: node {} not in population", r.node_id));
            }
            if r.pop_degree != graph.degree(r.node_id) {
                return Err(format!("row {i}: degree mismatch"));
            }
            if !(r.links_recruited <= r.links_responding
                && r.links_responding <= r.links_reported
                && r.links_reported <= r.pop_degree)
            {
                return Err(format!(
                    "row {i}: counters not monotone ({} <= {} <= {} <= {})",
                    r.links_recruited, r.links_responding, r.links_reported, r.pop_degree
                ));
            }
            if let Some(s) = r.source_id {
                let Some(&si) = index.get(&s) else {
                    return Err(format!("row {i}: source {s} is not sampled"));
                };
                if si >= i {
                    return Err(format!("row {i}: source row {si} does not precede it"));
                }
                if !graph.has_edge(s, r.node_id) {
                    return Err(format!(
                        "row {i}: edge ({s}, {}) not in population",
                        r.node_id
                    ));
                }
                recruited_by[si] += 1;
            }
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.links_recruited != recruited_by[i] {
                return Err(format!(
                    "row {i}: links_recruited {} but {} recruits",
                    r.links_recruited, recruited_by[i]
                ));
            }
        }
        let edges = self.recruitment_edges().count();
        if edges != self.rows.len() - self.n_leaps() {
            return Err("recruitment edges != rows - leaps".into());
        }
        let total: usize = self.rows.iter().map(|r| r.links_recruited).sum();
        if total != edges {
            return Err("sum of links_recruited != rows - leaps".into());
        }
        Ok(())
    }
}
