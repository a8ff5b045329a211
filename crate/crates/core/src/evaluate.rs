//! Scoring inferred graphs against ground truth.

use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infer::{Edge, PathGraph};
use crate::observation::ObservationMatrix;
use crate::par;
use crate::pipeline::{self, PipelineConfig};
use crate::seed;
use crate::simulate::{generate_dataset, GroundTruthDag, SimulationConfig};
use crate::summarize::MissingnessPrior;

/// Edge-level comparison against the truth's undirected skeleton. Both rates
/// are normalized by the number of true edges, so `fp_rate` can exceed 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphDiff {
    pub true_edges: usize,
    pub inferred_edges: usize,
    pub recovered: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
}

fn rate(count: usize, total: usize) -> f64 {
    match (count, total) {
        (0, _) => 0.0,
        (_, 0) => f64::INFINITY,
        (c, t) => c as f64 / t as f64,
    }
}

pub fn diff(inferred: &PathGraph, truth: &GroundTruthDag) -> Result<GraphDiff> {
    if inferred.n_vars() != truth.n_nodes() {
        return Err(Error::Dimension(format!(
            "inferred graph has {} vertices, truth has {}",
            inferred.n_vars(),
            truth.n_nodes()
        )));
    }
    let skeleton = truth.skeleton();
    let recovered = inferred.edges().intersection(&skeleton).count();
    let false_pos = inferred.edge_count() - recovered;
    let false_neg = skeleton.len() - recovered;
    Ok(GraphDiff {
        true_edges: skeleton.len(),
        inferred_edges: inferred.edge_count(),
        recovered,
        false_pos,
        false_neg,
        fp_rate: rate(false_pos, skeleton.len()),
        fn_rate: rate(false_neg, skeleton.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeFrequency {
    pub edge: Edge,
    pub count: usize,
    pub frequency: f64,
    pub in_full: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub fraction: f64,
    pub repeats: usize,
    pub subsample_rows: usize,
    pub full_graph: PathGraph,
    /// Every edge of the full-data graph or of any run; sorted by descending
    /// frequency, then by edge.
    pub edges: Vec<EdgeFrequency>,
}

impl StabilityReport {
    /// Smallest frequency among edges of the full-data graph.
    pub fn min_full_frequency(&self) -> Option<f64> {
        self.edges
            .iter()
            .filter(|e| e.in_full)
            .map(|e| e.frequency)
            .min_by(f64::total_cmp)
    }
}

/// Re-runs the pipeline on `repeats` uniform row subsamples of size
/// `ceil(fraction * m)` and counts how often each edge appears.
pub fn cross_validate(
    obs: &ObservationMatrix,
    fraction: f64,
    repeats: usize,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<StabilityReport> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction = {fraction} must lie in (0, 1]")));
    }
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let m = obs.n_rows();
    let size = (fraction * m as f64).ceil() as usize;
    if size == 0 {
        return Err(Error::Config("subsample would contain no rows".into()));
    }
    let size = size.min(m);
    let full = pipeline::run(obs, cfg)?.graph;
    let runs = par::map_range(repeats, |r| -> Result<PathGraph> {
        let mut rng = seed::rng(seed, seed::domain::SUBSAMPLE, r as u64);
        let mut rows = index::sample(&mut rng, m, size).into_vec();
        rows.sort_unstable();
        let sub = obs.select_rows(&rows)?;
        Ok(pipeline::run(&sub, cfg)?.graph)
    });
    let mut counts: BTreeMap<Edge, usize> = full.edges().iter().map(|&e| (e, 0)).collect();
    for graph in runs {
        for &e in graph?.edges() {
            *counts.entry(e).or_insert(0) += 1;
        }
    }
    let mut edges: Vec<EdgeFrequency> = counts
        .into_iter()
        .map(|(edge, count)| EdgeFrequency {
            edge,
            count,
            frequency: count as f64 / repeats as f64,
            in_full: full.has_edge(edge.0, edge.1),
        })
        .collect();
    edges.sort_by(|a, b| b.count.cmp(&a.count).then(a.edge.cmp(&b.edge)));
    Ok(StabilityReport {
        fraction,
        repeats,
        subsample_rows: size,
        full_graph: full,
        edges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n_edges: usize,
    pub p_miss_pos: f64,
    pub runs: Vec<GraphDiff>,
    pub mean_fp_rate: f64,
    pub mean_fn_rate: f64,
    pub var_fp_rate: f64,
    pub var_fn_rate: f64,
}

fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// How the estimator's prior is chosen for each simulated cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub repeats: usize,
    /// Prior used when a cell has no positive masking (`p_miss_pos = 0`);
    /// otherwise the cell's own `p_miss_pos` is the prior.
    pub fallback_prior: f64,
    pub pipeline: PipelineConfig,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            repeats: 10,
            fallback_prior: 0.1,
            pipeline: PipelineConfig::new(MissingnessPrior::new(0.1).expect("valid")),
        }
    }
}

/// Pipeline prior for a simulated cell.
pub fn prior_for(cell: &SimulationConfig, opts: &SweepOptions) -> Result<MissingnessPrior> {
    let p = if cell.p_miss_pos > 0.0 {
        cell.p_miss_pos
    } else {
        opts.fallback_prior
    };
    let neg = if cell.p_miss_neg > 0.0 && cell.p_miss_neg < 1.0 {
        cell.p_miss_neg
    } else {
        MissingnessPrior::DEFAULT_P_MISS_NEG
    };
    MissingnessPrior::with_negative(p, neg)
}

/// Simulate, infer, and diff one replicate.
pub fn run_replicate(cell: &SimulationConfig, opts: &SweepOptions) -> Result<GraphDiff> {
    let (obs, truth) = generate_dataset(cell)?;
    let cfg = PipelineConfig {
        prior: prior_for(cell, opts)?,
        ..opts.pipeline
    };
    let out = pipeline::run(&obs, &cfg)?;
    diff(&out.graph, &truth)
}

/// Replicate `r` of cell `c` simulates with seed
/// `derive(seed, SWEEP ^ (c << 8), r)`.
pub fn sweep(grid: &[SimulationConfig], opts: &SweepOptions, seed: u64) -> Result<Vec<SweepCell>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    if opts.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..opts.repeats).map(move |r| (c, r)))
        .collect();
    let results = par::map_slice(&jobs, |&(c, r)| {
        let cell = SimulationConfig {
            seed: seed::derive(seed, seed::domain::SWEEP ^ ((c as u64) << 8), r as u64),
            ..grid[c]
        };
        run_replicate(&cell, opts)
    });
    let mut diffs = results.into_iter();
    grid.iter()
        .map(|cell| {
            let runs = diffs.by_ref().take(opts.repeats).collect::<Result<Vec<_>>>()?;
            let fp: Vec<f64> = runs.iter().map(|d| d.fp_rate).collect();
            let fnr: Vec<f64> = runs.iter().map(|d| d.fn_rate).collect();
            let (mean_fp_rate, var_fp_rate) = mean_and_variance(&fp);
            let (mean_fn_rate, var_fn_rate) = mean_and_variance(&fnr);
            Ok(SweepCell {
                n_edges: cell.n_edges,
                p_miss_pos: cell.p_miss_pos,
                runs,
                mean_fp_rate,
                mean_fn_rate,
                var_fp_rate,
                var_fn_rate,
            })
        })
        .collect()
}

/// `edges x p` grid with every other field taken from `base`.
pub fn grid(base: &SimulationConfig, edge_counts: &[usize], p_values: &[f64]) -> Vec<SimulationConfig> {
    edge_counts
        .iter()
        .flat_map(|&n_edges| {
            p_values.iter().map(move |&p_miss_pos| SimulationConfig {
                n_edges,
                p_miss_pos,
                ..*base
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::WeightedEdge;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    fn dag(n: usize, edges: &[(usize, usize)]) -> GroundTruthDag {
        GroundTruthDag::new(
            n,
            edges
                .iter()
                .map(|&(from, to)| WeightedEdge { from, to, weight: 0.5 })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_recovery() {
        let truth = dag(3, &[(0, 1), (2, 1)]);
        let g = PathGraph::from_edges(labels(3), [(0, 1), (1, 2)]).unwrap();
        let d = diff(&g, &truth).unwrap();
        assert_eq!((d.fp_rate, d.fn_rate), (0.0, 0.0));
        assert_eq!(d.recovered, 2);
    }

    #[test]
    fn half_wrong() {
        let truth = dag(3, &[(0, 1), (1, 2)]);
        let g = PathGraph::from_edges(labels(3), [(0, 1), (0, 2)]).unwrap();
        let d = diff(&g, &truth).unwrap();
        assert_eq!((d.fp_rate, d.fn_rate), (0.5, 0.5));
        assert_eq!(d.recovered + d.false_neg, d.true_edges);
    }

    #[test]
    fn fp_rate_above_one() {
        let truth_edges: Vec<(usize, usize)> = (0..10).map(|i| (i, i + 1)).collect();
        let truth = dag(11, &truth_edges);
        let mut edges = truth_edges.clone();
        edges.extend((0..9).map(|i| (i, i + 2)));
        edges.extend((0..4).map(|i| (i, i + 3)));
        let g = PathGraph::from_edges(labels(11), edges).unwrap();
        let d = diff(&g, &truth).unwrap();
        assert_eq!(d.false_pos, 13);
        assert!((d.fp_rate - 1.3).abs() < 1e-12);
        assert_eq!(d.fn_rate, 0.0);
    }

    #[test]
    fn node_count_mismatch() {
        let truth = dag(3, &[(0, 1)]);
        let g = PathGraph::empty(labels(4));
        assert!(matches!(diff(&g, &truth), Err(Error::Dimension(_))));
    }

    #[test]
    fn variance_of_single_value_is_zero() {
        assert_eq!(mean_and_variance(&[0.25]), (0.25, 0.0));
        let (m, v) = mean_and_variance(&[1.0, 3.0]);
        assert_eq!((m, v), (2.0, 2.0));
    }
}
