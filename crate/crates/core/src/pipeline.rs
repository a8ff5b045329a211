//! summarize -> prune -> infer as one call.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::infer::{greedy_infer_with, InferenceTrace, PairRule, PathGraph};
use crate::observation::ObservationMatrix;
use crate::summarize::{
    fit, prune, MissingnessPrior, SolverOptions, StateMatrix, SummaryDistribution,
    DEFAULT_PRUNE_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub prior: MissingnessPrior,
    pub solver: SolverOptions,
    pub prune_eps: f64,
    #[serde(default)]
    pub pair_rule: PairRule,
}

impl PipelineConfig {
    pub fn new(prior: MissingnessPrior) -> Self {
        Self {
            prior,
            solver: SolverOptions::default(),
            prune_eps: DEFAULT_PRUNE_EPS,
            pair_rule: PairRule::Path,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub summary: SummaryDistribution,
    pub states: StateMatrix,
    pub graph: PathGraph,
    pub trace: InferenceTrace,
}

pub fn run(obs: &ObservationMatrix, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let summary = fit(obs, &cfg.prior, &cfg.solver)?;
    let states = prune(&summary, cfg.prune_eps)?;
    let (graph, trace) = greedy_infer_with(&states, cfg.pair_rule)?;
    Ok(PipelineOutput {
        summary,
        states,
        graph,
        trace,
    })
}
