//! Stage one: summarize incomplete observations as a sparse distribution over
//! complete states.

mod candidates;
mod likelihood;
mod simplex;
mod solver;

pub use candidates::{enumerate_candidates, CandidateStateSet, DEFAULT_CANDIDATE_CAP};
pub use likelihood::{conforms, row_likelihood, MissingnessPrior};
pub use simplex::project_simplex;
pub use solver::{
    fit, gradient, minimize, objective, Init, LikelihoodTable, SolverOptions, SolverRun,
    PROB_FLOOR,
};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::State;

pub const DEFAULT_PRUNE_EPS: f64 = 1e-6;

/// Fitted distribution over a candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDistribution {
    pub labels: Vec<String>,
    pub candidates: CandidateStateSet,
    pub probs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Sparse set of retained states with renormalized probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMatrix {
    labels: Vec<String>,
    states: Vec<State>,
    probs: Vec<f64>,
}

impl StateMatrix {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(labels: Vec<String>, states: Vec<State>, probs: Vec<f64>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Invalid("state matrix has no states".into()));
        }
        if states.len() != probs.len() {
            return Err(Error::Dimension(format!(
                "{} states but {} probabilities",
                states.len(),
                probs.len()
            )));
        }
        let mut seen = HashSet::new();
        for s in &states {
            if s.width() != labels.len() {
                return Err(Error::Dimension(format!(
                    "state {s} has width {} but there are {} labels",
                    s.width(),
                    labels.len()
                )));
            }
            if !seen.insert(*s) {
                return Err(Error::Invalid(format!("duplicate state {s}")));
            }
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p <= 1.0)) {
            return Err(Error::Invalid(format!("state probability {p} outside (0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Invalid(format!("state probabilities sum to {total}")));
        }
        Ok(Self {
            labels,
            states,
            probs,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&State, f64)> {
        self.states.iter().zip(self.probs.iter().copied())
    }
}

/// Keeps states with probability above `eps` and renormalizes.
pub fn prune(dist: &SummaryDistribution, eps: f64) -> Result<StateMatrix> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Config(format!("prune eps = {eps} must lie in [0, 1)")));
    }
    let kept: Vec<(State, f64)> = dist
        .candidates
        .states()
        .iter()
        .zip(&dist.probs)
        .filter(|(_, &p)| p > eps)
        .map(|(s, &p)| (*s, p))
        .collect();
    if kept.is_empty() {
        return Err(Error::Degenerate(format!(
            "every state has probability <= {eps}"
        )));
    }
    let total: f64 = kept.iter().map(|(_, p)| p).sum();
    let (states, probs) = kept.into_iter().map(|(s, p)| (s, p / total)).unzip();
    StateMatrix::new(dist.labels.clone(), states, probs)
}
