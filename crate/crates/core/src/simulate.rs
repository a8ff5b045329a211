//! Ground-truth DAGs and cascade datasets.
//!
//! A dataset is one random weighted DAG plus `n_samples` independent
//! cascades. Each cascade draws a step budget `T ~ Poisson(lambda)`, starts
//! at a uniformly chosen source, and at every step activates exactly one
//! not-yet-positive out-neighbour `b` of the positive set `A` with probability
//! proportional to `sum_{a in A} w(a, b)`. It halts early when no candidate is
//! left. Entries are then masked independently: positives with probability
//! `p_miss_pos`, negatives with probability `p_miss_neg`.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::{Cell, ObservationMatrix};
use crate::par;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthDag {
    n_nodes: usize,
    edges: Vec<WeightedEdge>,
    sources: Vec<usize>,
}

impl GroundTruthDag {
    /// Validates acyclicity, weights, and endpoints; derives the sources.
    pub fn new(n_nodes: usize, mut edges: Vec<WeightedEdge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::Config("DAG needs at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.from >= n_nodes || e.to >= n_nodes {
                return Err(Error::Dimension(format!(
                    "edge {}->{} out of range for {n_nodes} nodes",
                    e.from, e.to
                )));
            }
            if e.from == e.to {
                return Err(Error::Invalid(format!("self-loop on node {}", e.from)));
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::Invalid(format!(
                    "edge {}->{} has non-positive weight {}",
                    e.from, e.to, e.weight
                )));
            }
            if !seen.insert((e.from, e.to)) {
                return Err(Error::Invalid(format!("duplicate edge {}->{}", e.from, e.to)));
            }
        }
        edges.sort_by_key(|e| (e.from, e.to));
        let dag = Self {
            n_nodes,
            sources: Vec::new(),
            edges,
        };
        if dag.topological_order().is_none() {
            return Err(Error::Invalid("edge set contains a directed cycle".into()));
        }
        let mut indegree = vec![0usize; n_nodes];
        for e in &dag.edges {
            indegree[e.to] += 1;
        }
        let sources = (0..n_nodes).filter(|&v| indegree[v] == 0).collect();
        Ok(Self { sources, ..dag })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        self.edges
            .binary_search_by_key(&(from, to), |e| (e.from, e.to))
            .map(|i| self.edges[i].weight)
            .unwrap_or(0.0)
    }

    /// Undirected skeleton as `(min, max)` pairs.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges
            .iter()
            .map(|e| (e.from.min(e.to), e.from.max(e.to)))
            .collect()
    }

    /// Kahn's algorithm; `None` if a cycle exists.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree = vec![0usize; self.n_nodes];
        let mut out = vec![Vec::new(); self.n_nodes];
        for e in &self.edges {
            indegree[e.to] += 1;
            out[e.from].push(e.to);
        }
        let mut ready: BTreeSet<usize> = (0..self.n_nodes).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.n_nodes);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.insert(w);
                }
            }
        }
        (order.len() == self.n_nodes).then_some(order)
    }

    /// Dense `n x n` weight matrix, `w[from][to]`.
    fn weight_matrix(&self) -> Vec<Vec<f64>> {
        let mut w = vec![vec![0.0; self.n_nodes]; self.n_nodes];
        for e in &self.edges {
            w[e.from][e.to] = e.weight;
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_samples: usize,
    pub poisson_lambda: f64,
    pub p_miss_pos: f64,
    pub p_miss_neg: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_nodes: 10,
            n_edges: 15,
            n_samples: 1000,
            poisson_lambda: 4.0,
            p_miss_pos: 0.1,
            p_miss_neg: 0.5,
            seed: 0,
        }
    }
}

pub const DEFAULT_EDGE_COUNTS: [usize; 4] = [10, 15, 20, 25];
pub const DEFAULT_P_MISS_POS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

fn check_edge_count(n_nodes: usize, n_edges: usize) -> Result<()> {
    let max = n_nodes * n_nodes.saturating_sub(1) / 2;
    if n_edges > max {
        return Err(Error::Config(format!(
            "infeasible edge count: n_edges = {n_edges} exceeds {max} for n_nodes = {n_nodes}"
        )));
    }
    Ok(())
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 || self.n_nodes > crate::observation::MAX_VARS {
            return Err(Error::Config(format!(
                "n_nodes = {} outside 1..={}",
                self.n_nodes,
                crate::observation::MAX_VARS
            )));
        }
        check_edge_count(self.n_nodes, self.n_edges)?;
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be positive".into()));
        }
        if !(self.poisson_lambda > 0.0 && self.poisson_lambda.is_finite()) {
            return Err(Error::Config(format!(
                "poisson_lambda = {} must be positive",
                self.poisson_lambda
            )));
        }
        if !(0.0..0.5).contains(&self.p_miss_pos) {
            return Err(Error::Config(format!(
                "p_miss_pos = {} must lie in [0, 0.5)",
                self.p_miss_pos
            )));
        }
        if !(0.0..=1.0).contains(&self.p_miss_neg) {
            return Err(Error::Config(format!(
                "p_miss_neg = {} must lie in [0, 1]",
                self.p_miss_neg
            )));
        }
        Ok(())
    }
}

/// Random topological order, then `n_edges` distinct forward pairs drawn
/// uniformly, each weighted `Uniform(0, 1]`.
pub fn random_dag<R: Rng + ?Sized>(n_nodes: usize, n_edges: usize, rng: &mut R) -> Result<GroundTruthDag> {
    if n_nodes == 0 {
        return Err(Error::Config("n_nodes must be positive".into()));
    }
    check_edge_count(n_nodes, n_edges)?;
    let mut order: Vec<usize> = (0..n_nodes).collect();
    order.shuffle(rng);
    // Forward pairs (i < j in the order), enumerated row-major.
    let forward: Vec<(usize, usize)> = (0..n_nodes)
        .flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)))
        .collect();
    let mut chosen: Vec<usize> = index::sample(rng, forward.len(), n_edges).into_vec();
    chosen.sort_unstable();
    let edges = chosen
        .into_iter()
        .map(|k| {
            let (i, j) = forward[k];
            let weight = 1.0 - rng.random::<f64>();
            WeightedEdge {
                from: order[i],
                to: order[j],
                weight,
            }
        })
        .collect();
    GroundTruthDag::new(n_nodes, edges)
}

/// One cascade with an explicit step budget.
pub fn cascade_with_steps<R: Rng + ?Sized>(dag: &GroundTruthDag, steps: usize, rng: &mut R) -> Vec<bool> {
    let weights = dag.weight_matrix();
    cascade_from_matrix(dag, &weights, steps, rng)
}

fn cascade_from_matrix<R: Rng + ?Sized>(
    dag: &GroundTruthDag,
    weights: &[Vec<f64>],
    steps: usize,
    rng: &mut R,
) -> Vec<bool> {
    let n = dag.n_nodes();
    let mut positive = vec![false; n];
    let start = dag.sources()[rng.random_range(0..dag.sources().len())];
    positive[start] = true;
    let mut mass = vec![0.0; n];
    for _ in 0..steps {
        for (b, m) in mass.iter_mut().enumerate() {
            *m = if positive[b] {
                0.0
            } else {
                (0..n).filter(|&a| positive[a]).map(|a| weights[a][b]).sum()
            };
        }
        let Ok(pick) = WeightedIndex::new(&mass) else {
            break;
        };
        positive[pick.sample(rng)] = true;
    }
    positive
}

/// Draws `T ~ Poisson(lambda)` and runs one cascade.
pub fn sample_cascade<R: Rng + ?Sized>(dag: &GroundTruthDag, lambda: f64, rng: &mut R) -> Result<Vec<bool>> {
    let poisson = Poisson::new(lambda)
        .map_err(|e| Error::Config(format!("poisson_lambda = {lambda}: {e}")))?;
    let steps = poisson.sample(rng) as usize;
    Ok(cascade_with_steps(dag, steps, rng))
}

/// Masks each entry independently according to its true value.
pub fn inject_missing<R: Rng + ?Sized>(
    sample: &[bool],
    p_miss_pos: f64,
    p_miss_neg: f64,
    rng: &mut R,
) -> Result<Vec<Cell>> {
    for p in [p_miss_pos, p_miss_neg] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("missing probability {p} outside [0, 1]")));
        }
    }
    Ok(sample
        .iter()
        .map(|&v| {
            let p = if v { p_miss_pos } else { p_miss_neg };
            if rng.random_bool(p) {
                Cell::Missing
            } else {
                Cell::from_bool(v)
            }
        })
        .collect())
}

/// Complete cascade samples before masking, plus the matrix after masking.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub observations: ObservationMatrix,
    pub truth: GroundTruthDag,
    pub complete: Vec<Vec<bool>>,
}

/// Sample `i` uses its own stream derived from `(seed, i)`, so generation
/// order does not matter.
pub fn generate(cfg: &SimulationConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut dag_rng = seed::rng(cfg.seed, seed::domain::DAG, 0);
    let truth = random_dag(cfg.n_nodes, cfg.n_edges, &mut dag_rng)?;
    let weights = truth.weight_matrix();
    let poisson = Poisson::new(cfg.poisson_lambda)
        .map_err(|e| Error::Config(format!("poisson_lambda: {e}")))?;
    let draws: Vec<(Vec<bool>, Vec<Cell>)> = par::map_range(cfg.n_samples, |i| {
        let mut rng = seed::rng(cfg.seed, seed::domain::CASCADE, i as u64);
        let steps = poisson.sample(&mut rng) as usize;
        let sample = cascade_from_matrix(&truth, &weights, steps, &mut rng);
        let row = inject_missing(&sample, cfg.p_miss_pos, cfg.p_miss_neg, &mut rng)
            .expect("probabilities validated");
        (sample, row)
    });
    let (complete, rows) = draws.into_iter().unzip();
    let observations = ObservationMatrix::new(ObservationMatrix::default_labels(cfg.n_nodes), rows)?;
    Ok(Dataset {
        observations,
        truth,
        complete,
    })
}

pub fn generate_dataset(cfg: &SimulationConfig) -> Result<(ObservationMatrix, GroundTruthDag)> {
    let d = generate(cfg)?;
    Ok((d.observations, d.truth))
}
