use std::collections::HashSet;
use std::io::Write;

use rand::Rng;

use super::prior::{ParameterSet, PriorSpec};
use crate::{Error, Result};

pub const AVG_DEGREE: &str = "avg_degree";
pub const N_NODES: &str = "n_nodes";
pub const PHI: &str = "phi";
pub const ALPHA: &str = "alpha";
pub const GAMMA: &str = "gamma";

/// Rejection attempts for a uniform target before enumerating eligible nodes.
const UNIFORM_TRIES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    pub y: f64,
    pub infected: bool,
}

impl Node {
    pub fn distance(&self, other: &Node) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Simple undirected graph over spatially placed nodes. Edges are kept in
/// formation order with the smaller endpoint first.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGraph {
    nodes: Vec<Node>,
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl PopulationGraph {
    fn empty(nodes: Vec<Node>) -> Self {
        let adjacency = vec![Vec::new(); nodes.len()];
        Self {
            nodes,
            edges: Vec::new(),
            adjacency,
        }
    }

    /// Builds a graph from explicit parts, rejecting self-loops, duplicate
    /// edges and out-of-range endpoints.
    pub fn from_edges(nodes: Vec<Node>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = nodes.len();
        let mut g = Self::empty(nodes);
        let mut seen = HashSet::new();
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidParameter(format!("bad edge ({a}, {b})")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate edge ({a}, {b})"
                )));
            }
            g.push_edge(a, b);
        }
        Ok(g)
    }

    fn push_edge(&mut self, a: usize, b: usize) {
        let (lo, hi) = (a.min(b) as u32, a.max(b) as u32);
        self.edges.push((lo, hi));
        self.adjacency[a].push(b as u32);
        self.adjacency[b].push(a as u32);
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (short, other) = if self.degree(a) <= self.degree(b) {
            (a, b)
        } else {
            (b, a)
        };
        self.adjacency[short].iter().any(|&j| j as usize == other)
    }

    pub fn infected_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.infected).count()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        2.0 * self.edges.len() as f64 / self.nodes.len() as f64
    }

    /// Mean Euclidean length over all edges; `None` for an edgeless graph.
    pub fn mean_edge_length(&self) -> Option<f64> {
        if self.edges.is_empty() {
            return None;
        }
        let total: f64 = self
            .edges
            .iter()
            .map(|&(a, b)| self.nodes[a as usize].distance(&self.nodes[b as usize]))
            .sum();
        Some(total / self.edges.len() as f64)
    }

    /// `id,x,y,infected`
    pub fn write_nodes_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "x", "y", "infected"])?;
        for (i, n) in self.nodes.iter().enumerate() {
            w.write_record([
                i.to_string(),
                n.x.to_string(),
                n.y.to_string(),
                u8::from(n.infected).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `id_a,id_b` with `id_a < id_b`, in formation order.
    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id_a", "id_b"])?;
        for &(a, b) in &self.edges {
            w.write_record([a.to_string(), b.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Resolved model parameters for one population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationParams {
    pub avg_degree: f64,
    pub n_nodes: usize,
    /// Initial infection proportion.
    pub phi: f64,
    /// Per-edge transmission chance.
    pub alpha: f64,
    /// Distance-decay exponent in `D^-gamma`.
    pub gamma: f64,
}

impl PopulationParams {
    pub fn n_edges(&self) -> u64 {
        (self.avg_degree * self.n_nodes as f64 / 2.0).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.avg_degree >= 0.0 && self.avg_degree.is_finite()) {
            return bad(format!("avg_degree {} must be >= 0", self.avg_degree));
        }
        if self.n_nodes < 2 {
            return bad(format!("n_nodes {} must be >= 2", self.n_nodes));
        }
        if !(0.0..=1.0).contains(&self.phi) {
            return bad(format!("phi {} outside [0, 1]", self.phi));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !self.gamma.is_finite() {
            return bad(format!("gamma {} is not finite", self.gamma));
        }
        Ok(())
    }
}

/// Fixed values for population parameters that the prior does not vary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopulationConfig {
    pub avg_degree: Option<f64>,
    pub n_nodes: Option<f64>,
    pub phi: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
}

impl PopulationConfig {
    /// Takes each parameter from the drawn set when the prior names it,
    /// otherwise from the fixed values here.
    pub fn resolve(&self, prior: &PriorSpec, set: &ParameterSet) -> Result<PopulationParams> {
        let pick = |name: &str, fixed: Option<f64>| -> Result<f64> {
            match prior.index_of(name) {
                Some(i) => Ok(set.values[i]),
                None => fixed.ok_or_else(|| {
                    Error::Config(format!("`{name}` is neither in the prior nor fixed"))
                }),
            }
        };
        let n_nodes = pick(N_NODES, self.n_nodes)?;
        if !(n_nodes.is_finite() && n_nodes >= 0.0) {
            return Err(Error::InvalidParameter(format!("n_nodes {n_nodes}")));
        }
        let params = PopulationParams {
            avg_degree: pick(AVG_DEGREE, self.avg_degree)?,
            n_nodes: n_nodes.round() as usize,
            phi: pick(PHI, self.phi)?,
            alpha: pick(ALPHA, self.alpha)?,
            gamma: pick(GAMMA, self.gamma)?,
        };
        params.validate()?;
        Ok(params)
    }
}

/// Scratch space for distance-decay target selection.
struct TargetSampler {
    weights: Vec<f64>,
    blocked: Vec<bool>,
}

impl TargetSampler {
    fn new(n: usize) -> Self {
        Self {
            weights: vec![0.0; n],
            blocked: vec![false; n],
        }
    }

    /// Fills `self.weights` with `D(source, j)^-gamma` for every eligible
    /// `j` (not the source, not already adjacent) and zero elsewhere, then
    /// returns the total. Coincident nodes use the smallest positive
    /// distance; overflowing weights fall back to a max-shifted log form.
    fn fill_weights(&mut self, graph: &PopulationGraph, source: usize, gamma: f64) -> f64 {
        let nodes = &graph.nodes;
        self.blocked[source] = true;
        for &j in graph.neighbors(source) {
            self.blocked[j as usize] = true;
        }
        let s = nodes[source];
        let half = -0.5 * gamma;
        let mut total = 0.0;
        for (j, node) in nodes.iter().enumerate() {
            // d2 == 0 gives inf (gamma > 0), which routes to the log form.
            let w = if self.blocked[j] {
                0.0
            } else {
                ((s.x - node.x).powi(2) + (s.y - node.y).powi(2)).powf(half)
            };
            self.weights[j] = w;
            total += w;
        }
        if !total.is_finite() || (total == 0.0 && graph.degree(source) + 1 < nodes.len()) {
            total = self.fill_log_weights(graph, source, gamma);
        }
        self.blocked[source] = false;
        for &j in graph.neighbors(source) {
            self.blocked[j as usize] = false;
        }
        total
    }

    fn fill_log_weights(&mut self, graph: &PopulationGraph, source: usize, gamma: f64) -> f64 {
        let nodes = &graph.nodes;
        let s = nodes[source];
        let min_d = f64::from_bits(1);
        let mut max_log = f64::NEG_INFINITY;
        for (j, node) in nodes.iter().enumerate() {
            if self.blocked[j] {
                self.weights[j] = f64::NEG_INFINITY;
                continue;
            }
            let d = s.distance(node).max(min_d);
            let l = -gamma * d.ln();
            self.weights[j] = l;
            max_log = max_log.max(l);
        }
        let mut total = 0.0;
        for w in self.weights.iter_mut() {
            *w = if *w == f64::NEG_INFINITY {
                0.0
            } else {
                (*w - max_log).exp()
            };
            total += *w;
        }
        total
    }

    fn pick<R: Rng + ?Sized>(&self, total: f64, rng: &mut R) -> usize {
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for (j, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last = Some(j);
                if acc > target {
                    return j;
                }
            }
        }
        last.expect("at least one eligible target")
    }
}

/// Normalised target-selection probabilities for `source`, as used by
/// [`generate_population`] for the next edge out of `source`.
pub fn target_probabilities(graph: &PopulationGraph, source: usize, gamma: f64) -> Vec<f64> {
    let mut sampler = TargetSampler::new(graph.n_nodes());
    let total = sampler.fill_weights(graph, source, gamma);
    if total > 0.0 {
        sampler.weights.iter().map(|w| w / total).collect()
    } else {
        sampler.weights
    }
}

/// Places nodes, seeds the infection, then forms `round(avg_degree * N_V / 2)`
/// edges one at a time. Each edge picks a uniform source (redrawn while
/// saturated) and a non-adjacent target with probability proportional to
/// `D^-gamma`. When exactly one endpoint of a new edge is infected, the other
/// becomes infected with probability `alpha`.
pub fn generate_population<R: Rng + ?Sized>(
    params: &PopulationParams,
    rng: &mut R,
) -> Result<PopulationGraph> {
    params.validate()?;
    let n = params.n_nodes;
    let n_edges = params.n_edges();
    let capacity = n as u64 * (n as u64 - 1) / 2;
    if n_edges > capacity {
        return Err(Error::TooManyEdges {
            edges: n_edges,
            nodes: n,
        });
    }

    let mut nodes: Vec<Node> = (0..n)
        .map(|_| Node {
            x: rng.random::<f64>(),
            y: rng.random::<f64>(),
            infected: false,
        })
        .collect();
    for node in nodes.iter_mut() {
        node.infected = rng.random::<f64>() < params.phi;
    }

    let mut graph = PopulationGraph::empty(nodes);
    graph.edges.reserve(n_edges as usize);
    let mut existing: HashSet<(u32, u32)> = HashSet::with_capacity(n_edges as usize);
    let mut sampler = TargetSampler::new(n);

    while (graph.edges.len() as u64) < n_edges {
        let source = rng.random_range(0..n);
        if graph.degree(source) == n - 1 {
            continue;
        }
        let target = if params.gamma == 0.0 {
            uniform_target(&graph, &existing, &mut sampler, source, rng)
        } else {
            let total = sampler.fill_weights(&graph, source, params.gamma);
            sampler.pick(total, rng)
        };
        existing.insert((source.min(target) as u32, source.max(target) as u32));
        graph.push_edge(source, target);

        let (a, b) = (graph.nodes[source].infected, graph.nodes[target].infected);
        if a != b && rng.random::<f64>() < params.alpha {
            let other = if a { target } else { source };
            graph.nodes[other].infected = true;
        }
    }
    Ok(graph)
}

fn uniform_target<R: Rng + ?Sized>(
    graph: &PopulationGraph,
    existing: &HashSet<(u32, u32)>,
    sampler: &mut TargetSampler,
    source: usize,
    rng: &mut R,
) -> usize {
    let n = graph.n_nodes();
    for _ in 0..UNIFORM_TRIES {
        let mut j = rng.random_range(0..n - 1);
        if j >= source {
            j += 1;
        }
        if !existing.contains(&(source.min(j) as u32, source.max(j) as u32)) {
            return j;
        }
    }
    let total = sampler.fill_weights(graph, source, 0.0);
    sampler.pick(total, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::run_rng;

    fn params(
        avg_degree: f64,
        n_nodes: usize,
        phi: f64,
        alpha: f64,
        gamma: f64,
    ) -> PopulationParams {
        PopulationParams {
            avg_degree,
            n_nodes,
            phi,
            alpha,
            gamma,
        }
    }

    fn assert_simple(g: &PopulationGraph) {
        let mut seen = HashSet::new();
        for &(a, b) in g.edges() {
            assert!(a < b, "edge ({a}, {b}) not normalised");
            assert!(seen.insert((a, b)), "duplicate edge ({a}, {b})");
        }
        let degree_sum: usize = (0..g.n_nodes()).map(|i| g.degree(i)).sum();
        assert_eq!(degree_sum, 2 * g.n_edges());
    }

    #[test]
    fn zero_degree_has_no_edges() {
        let mut rng = run_rng(3, 0);
        let g = generate_population(&params(0.0, 500, 0.3, 0.9, 2.0), &mut rng).unwrap();
        assert_eq!(g.n_edges(), 0);
        let k = g.infected_count() as f64;
        // Binomial(500, 0.3): mean 150, sd ~10.2
        assert!((k - 150.0).abs() < 50.0);
    }

    #[test]
    fn triangle_is_forced() {
        for seed in 0..20 {
            let mut rng = run_rng(seed, 0);
            let g = generate_population(&params(2.0, 3, 0.0, 0.0, 0.0), &mut rng).unwrap();
            assert_eq!(g.n_edges(), 3);
            assert_simple(&g);
            for i in 0..3 {
                assert_eq!(g.degree(i), 2);
            }
        }
    }

    #[test]
    fn too_many_edges_fails() {
        let mut rng = run_rng(0, 0);
        let err = generate_population(&params(3.0, 3, 0.0, 0.0, 0.0), &mut rng).unwrap_err();
        assert!(matches!(err, Error::TooManyEdges { edges: 5, nodes: 3 }));
    }

    #[test]
    fn complete_graph_with_decay() {
        let mut rng = run_rng(11, 0);
        let g = generate_population(&params(9.0, 10, 0.5, 0.5, 6.0), &mut rng).unwrap();
        assert_eq!(g.n_edges(), 45);
        assert_simple(&g);
    }

    #[test]
    fn infection_rules() {
        for seed in 0..10 {
            let mut rng = run_rng(seed, 1);
            let g = generate_population(&params(4.0, 300, 0.0, 1.0, 1.0), &mut rng).unwrap();
            assert_eq!(g.infected_count(), 0);

            // alpha = 0: the infected set is exactly the initial one. Replay
            // the stream prefix that seeds infection to recover it.
            let p = params(4.0, 300, 0.2, 0.0, 1.0);
            let mut rng = run_rng(seed, 2);
            let g = generate_population(&p, &mut rng).unwrap();
            let mut replay = run_rng(seed, 2);
            for _ in 0..2 * p.n_nodes {
                replay.random::<f64>();
            }
            let initial: Vec<bool> = (0..p.n_nodes)
                .map(|_| replay.random::<f64>() < p.phi)
                .collect();
            let got: Vec<bool> = g.nodes().iter().map(|n| n.infected).collect();
            assert_eq!(got, initial);
        }
    }

    #[test]
    fn transmission_spreads() {
        let mut rng = run_rng(5, 0);
        let g = generate_population(&params(6.0, 400, 0.05, 1.0, 0.0), &mut rng).unwrap();
        // With certain transmission, infection spreads well beyond the seed set.
        assert!(g.infected_count() > 100);
    }

    #[test]
    fn deterministic_serialisation() {
        let p = params(3.5, 200, 0.1, 0.4, 7.3);
        let render = |seed| {
            let g = generate_population(&p, &mut run_rng(seed, 9)).unwrap();
            let mut nodes = Vec::new();
            let mut edges = Vec::new();
            g.write_nodes_csv(&mut nodes).unwrap();
            g.write_edges_csv(&mut edges).unwrap();
            (nodes, edges)
        };
        assert_eq!(render(1), render(1));
        assert_ne!(render(1), render(2));
        let (nodes, edges) = render(1);
        let nodes = String::from_utf8(nodes).unwrap();
        assert!(nodes.starts_with("id,x,y,infected\n0,"));
        assert_eq!(nodes.lines().count(), 201);
        let edges = String::from_utf8(edges).unwrap();
        assert!(edges.starts_with("id_a,id_b\n"));
        assert_eq!(edges.lines().count(), 351);
    }

    #[test]
    fn probabilities_follow_distance() {
        let mut rng = run_rng(21, 0);
        let g = generate_population(&params(2.0, 60, 0.0, 0.0, 1.0), &mut rng).unwrap();
        for &gamma in &[3.0, -2.0, 0.0] {
            for source in [0usize, 17, 42] {
                let probs = target_probabilities(&g, source, gamma);
                assert_eq!(probs[source], 0.0);
                for &j in g.neighbors(source) {
                    assert_eq!(probs[j as usize], 0.0);
                }
                let total: f64 = probs.iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
                let mut eligible: Vec<(f64, f64)> = probs
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != source && !g.has_edge(source, j))
                    .map(|(j, &p)| (g.nodes()[source].distance(&g.nodes()[j]), p))
                    .collect();
                eligible.sort_by(|a, b| a.0.total_cmp(&b.0));
                for w in eligible.windows(2) {
                    if gamma > 0.0 {
                        assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12));
                    } else if gamma < 0.0 {
                        assert!(w[1].1 >= w[0].1 * (1.0 - 1e-12));
                    } else {
                        assert!((w[1].1 - w[0].1).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn coincident_nodes_get_finite_preference() {
        let nodes = vec![
            Node {
                x: 0.5,
                y: 0.5,
                infected: false,
            },
            Node {
                x: 0.5,
                y: 0.5,
                infected: false,
            },
            Node {
                x: 0.9,
                y: 0.1,
                infected: false,
            },
        ];
        let g = PopulationGraph::from_edges(nodes, &[]).unwrap();
        let probs = target_probabilities(&g, 0, 8.0);
        assert!(probs.iter().all(|p| p.is_finite()));
        assert!(probs[1] > 0.999_999);
        let probs = target_probabilities(&g, 0, -8.0);
        assert!(probs[2] > 0.999_999);
    }

    #[test]
    fn from_edges_rejects_invalid() {
        let nodes = vec![
            Node {
                x: 0.0,
                y: 0.0,
                infected: false
            };
            3
        ];
        assert!(PopulationGraph::from_edges(nodes.clone(), &[(0, 0)]).is_err());
        assert!(PopulationGraph::from_edges(nodes.clone(), &[(0, 1), (1, 0)]).is_err());
        assert!(PopulationGraph::from_edges(nodes.clone(), &[(0, 3)]).is_err());
        let g = PopulationGraph::from_edges(nodes, &[(2, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2)]);
        assert!(g.has_edge(0, 2) && g.has_edge(2, 0) && !g.has_edge(0, 1));
    }

    #[test]
    fn resolve_mixes_prior_and_fixed() {
        use super::super::prior::{Distribution, PriorEntry};
        let prior = PriorSpec::new(vec![PriorEntry::new(
            AVG_DEGREE,
            Distribution::Uniform { lo: 0.0, hi: 7.0 },
        )])
        .unwrap();
        let set = prior.from_quantiles(&[0.5]);
        let cfg = PopulationConfig {
            n_nodes: Some(1000.0),
            phi: Some(0.0),
            alpha: Some(0.0),
            gamma: Some(0.0),
            ..Default::default()
        };
        let p = cfg.resolve(&prior, &set).unwrap();
        assert_eq!(p.avg_degree, 3.5);
        assert_eq!(p.n_nodes, 1000);
        assert_eq!(p.n_edges(), 1750);

        let missing = PopulationConfig::default();
        assert!(matches!(
            missing.resolve(&prior, &set),
            Err(Error::Config(_))
        ));
    }
}
