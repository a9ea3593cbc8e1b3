use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;

use super::{NodeRow, SampleRecord};
use crate::netgen::PopulationGraph;
use crate::{Error, Result};

/// Order in which queued referrals are explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueueOrder {
    /// Breadth-first: referrals are followed in the order they were made.
    #[default]
    Fifo,
    /// Every referral gets an independent `uniform(0, 1)` response delay
    /// after its recruiter joined; referrals are followed in time order.
    RandomDelay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub n_samp: usize,
    pub pr_response: f64,
    pub order: QueueOrder,
}

impl SamplerConfig {
    pub fn new(n_samp: usize, pr_response: f64) -> Self {
        Self {
            n_samp,
            pr_response,
            order: QueueOrder::Fifo,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Referral {
    node: u32,
    source_row: u32,
    time: f64,
    seq: u64,
}

// Min-heap ordering on (time, seq) for `BinaryHeap`.
impl Ord for Referral {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Referral {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Referral {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Referral {}

enum Queue {
    Fifo(VecDeque<Referral>),
    Delay(BinaryHeap<Referral>),
}

impl Queue {
    fn push(&mut self, r: Referral) {
        match self {
            Queue::Fifo(q) => q.push_back(r),
            Queue::Delay(h) => h.push(r),
        }
    }

    fn pop(&mut self) -> Option<Referral> {
        match self {
            Queue::Fifo(q) => q.pop_front(),
            Queue::Delay(h) => h.pop(),
        }
    }

    fn retain(&mut self, f: impl FnMut(&Referral) -> bool) {
        match self {
            Queue::Fifo(q) => q.retain(f),
            Queue::Delay(h) => h.retain(f),
        }
    }
}

/// Nodes not yet sampled, with O(1) uniform draw and removal.
struct Pool {
    items: Vec<u32>,
    pos: Vec<usize>,
}

impl Pool {
    fn new(n: usize) -> Self {
        Self {
            items: (0..n as u32).collect(),
            pos: (0..n).collect(),
        }
    }

    fn remove(&mut self, node: usize) {
        let i = self.pos[node];
        let last = *self.items.last().expect("pool not empty");
        self.items.swap_remove(i);
        if last as usize != node {
            self.pos[last as usize] = i;
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.items[rng.random_range(0..self.items.len())] as usize
    }
}

/// Link-traced sample of `min(n_samp, N_V)` nodes.
///
/// Each iteration first purges every queued referral whose node is already
/// sampled, crediting a redundant link to the referral's source. The next
/// referral is then followed; if none is left, a leap draws a uniformly
/// random unsampled node. Every neighbour of a newly added node (including
/// its recruiter) responds independently with `pr_response` and is queued.
pub fn link_trace_sample<R: Rng + ?Sized>(
    graph: &PopulationGraph,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<SampleRecord> {
    let n = graph.n_nodes();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if config.n_samp == 0 {
        return Err(Error::InvalidParameter("n_samp must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&config.pr_response) {
        return Err(Error::InvalidParameter(format!(
            "pr_response {} outside [0, 1]",
            config.pr_response
        )));
    }

    let target = config.n_samp.min(n);
    let mut rows: Vec<NodeRow> = Vec::with_capacity(target);
    let mut sampled = vec![false; n];
    let mut pool = Pool::new(n);
    let mut queue = match config.order {
        QueueOrder::Fifo => Queue::Fifo(VecDeque::new()),
        QueueOrder::RandomDelay => Queue::Delay(BinaryHeap::new()),
    };
    let mut seq = 0u64;
    let mut clock = 0.0f64;

    while rows.len() < target {
        queue.retain(|r| {
            if sampled[r.node as usize] {
                rows[r.source_row as usize].links_redundant += 1;
                false
            } else {
                true
            }
        });

        let (node, source_row) = match queue.pop() {
            Some(r) => {
                clock = clock.max(r.time);
                (r.node as usize, Some(r.source_row as usize))
            }
            None => (pool.draw(rng), None),
        };

        sampled[node] = true;
        pool.remove(node);
        let source_id = source_row.map(|s| {
            rows[s].links_recruited += 1;
            rows[s].node_id
        });

        let row_index = rows.len();
        let mut responding = 0;
        for &nb in graph.neighbors(node) {
            let responds = config.pr_response >= 1.0
                || (config.pr_response > 0.0 && rng.random::<f64>() < config.pr_response);
            if !responds {
                continue;
            }
            responding += 1;
            let time = match config.order {
                QueueOrder::Fifo => 0.0,
                QueueOrder::RandomDelay => clock + rng.random::<f64>(),
            };
            queue.push(Referral {
                node: nb,
                source_row: row_index as u32,
                time,
                seq,
            });
            seq += 1;
        }

        let n_info = graph.nodes()[node];
        let degree = graph.degree(node);
        rows.push(NodeRow {
            order: row_index,
            node_id: node,
            source_id,
            pop_degree: degree,
            links_reported: degree,
            links_responding: responding,
            links_recruited: 0,
            links_redundant: 0,
            infected: n_info.infected,
            x: n_info.x,
            y: n_info.y,
            depth: None,
        });
    }

    Ok(SampleRecord { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::Node;
    use crate::run_rng;

    fn graph(n: usize, edges: &[(usize, usize)]) -> PopulationGraph {
        let nodes = (0..n)
            .map(|i| Node {
                x: i as f64 / n as f64,
                y: 0.5,
                infected: i % 2 == 0,
            })
            .collect();
        PopulationGraph::from_edges(nodes, edges).unwrap()
    }

    #[test]
    fn edgeless_graph_is_all_leaps() {
        let g = graph(10, &[]);
        let rec = link_trace_sample(&g, &SamplerConfig::new(5, 1.0), &mut run_rng(1, 0)).unwrap();
        assert_eq!(rec.rows.len(), 5);
        for r in &rec.rows {
            assert!(r.source_id.is_none());
            assert_eq!(
                (
                    r.pop_degree,
                    r.links_responding,
                    r.links_recruited,
                    r.links_redundant
                ),
                (0, 0, 0, 0)
            );
        }
        rec.check_invariants(&g).unwrap();
    }

    #[test]
    fn zero_nodes_fails() {
        let g = graph(0, &[]);
        let err = link_trace_sample(&g, &SamplerConfig::new(5, 1.0), &mut run_rng(1, 0));
        assert!(matches!(err, Err(Error::EmptyGraph)));
    }

    #[test]
    fn stops_at_population_size() {
        let g = graph(4, &[(0, 1), (2, 3)]);
        let rec = link_trace_sample(&g, &SamplerConfig::new(50, 0.5), &mut run_rng(2, 0)).unwrap();
        assert_eq!(rec.rows.len(), 4);
        rec.check_invariants(&g).unwrap();
    }

    #[test]
    fn no_response_means_every_row_leaps() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]);
        let rec = link_trace_sample(&g, &SamplerConfig::new(6, 0.0), &mut run_rng(4, 0)).unwrap();
        assert!(rec.rows.iter().all(|r| r.source_id.is_none()));
        assert!(rec.rows.iter().all(|r| r.links_responding == 0));
        assert!(rec.rows.iter().all(|r| r.links_reported == r.pop_degree));
    }

    #[test]
    fn random_delay_keeps_invariants() {
        let edges: Vec<(usize, usize)> = (0..30)
            .map(|i| (i, (i * 7 + 3) % 31))
            .filter(|(a, b)| a != b)
            .collect();
        let mut uniq = std::collections::HashSet::new();
        let edges: Vec<_> = edges
            .into_iter()
            .filter(|&(a, b)| uniq.insert((a.min(b), a.max(b))))
            .collect();
        let g = graph(31, &edges);
        let cfg = SamplerConfig {
            n_samp: 20,
            pr_response: 0.8,
            order: QueueOrder::RandomDelay,
        };
        for seed in 0..50 {
            let rec = link_trace_sample(&g, &cfg, &mut run_rng(seed, 0)).unwrap();
            assert_eq!(rec.rows.len(), 20);
            rec.check_invariants(&g).unwrap();
        }
    }
}
