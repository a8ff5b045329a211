//! Projected gradient descent for the constrained maximum-likelihood fit.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::candidates::{enumerate_candidates, CandidateStateSet, DEFAULT_CANDIDATE_CAP};
use super::likelihood::MissingnessPrior;
use super::simplex::project_simplex;
use super::SummaryDistribution;
use crate::error::{Error, Result};
use crate::observation::{ObservationMatrix, RowMask};
use crate::par;
use crate::seed;

/// Lower clamp on `P(O_i)` before taking logs or dividing.
pub const PROB_FLOOR: f64 = 1e-300;

const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// Equal mass on every candidate.
    Uniform,
    /// Symmetric Dirichlet(1) draw keyed by [`SolverOptions::seed`].
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub init: Init,
    pub seed: u64,
    pub candidate_cap: usize,
    /// Largest trial step of the backtracking line search.
    pub max_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 20_000,
            init: Init::Uniform,
            seed: 0,
            candidate_cap: DEFAULT_CANDIDATE_CAP,
            max_step: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol = {} must be finite and >= 0", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if self.candidate_cap == 0 {
            return Err(Error::Config("candidate_cap must be positive".into()));
        }
        if !(self.max_step > 0.0 && self.max_step.is_finite()) {
            return Err(Error::Config(format!("max_step = {} must be positive", self.max_step)));
        }
        Ok(())
    }
}

/// Sparse `(unique row) x (candidate)` likelihood table with row
/// multiplicities.
#[derive(Debug, Clone)]
pub struct LikelihoodTable {
    n_states: usize,
    counts: Vec<f64>,
    /// Per unique row: `(state, likelihood)`, ascending by state.
    by_row: Vec<Vec<(u32, f64)>>,
    /// Per state: `(unique row, count * likelihood)`, ascending by row.
    by_state: Vec<Vec<(u32, f64)>>,
}

impl LikelihoodTable {
    pub fn new(
        obs: &ObservationMatrix,
        candidates: &CandidateStateSet,
        prior: &MissingnessPrior,
    ) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Invalid("candidate set is empty".into()));
        }
        if candidates.per_row_conformity().len() != obs.n_rows() {
            return Err(Error::Dimension(format!(
                "candidate set covers {} rows, matrix has {}",
                candidates.per_row_conformity().len(),
                obs.n_rows()
            )));
        }
        let width = obs.n_vars();
        if candidates.states()[0].width() != width {
            return Err(Error::Dimension("candidate width differs from matrix".into()));
        }
        // Duplicate rows collapse into one weighted term.
        let mut grouped: BTreeMap<RowMask, (usize, f64)> = BTreeMap::new();
        for (i, mask) in obs.masks().into_iter().enumerate() {
            grouped.entry(mask).or_insert((i, 0.0)).1 += 1.0;
        }
        let groups: Vec<(RowMask, usize, f64)> =
            grouped.into_iter().map(|(m, (i, c))| (m, i, c)).collect();
        let factors = prior.log_factors();
        let states = candidates.states();
        let by_row: Vec<Vec<(u32, f64)>> = par::map_slice(&groups, |(mask, first, _)| {
            candidates
                .conformity(*first)
                .iter()
                .map(|&j| {
                    let l = factors.conforming_likelihood(mask, states[j].bits(), width);
                    (j as u32, l)
                })
                .collect()
        });
        let counts: Vec<f64> = groups.iter().map(|g| g.2).collect();
        let mut by_state: Vec<Vec<(u32, f64)>> = vec![Vec::new(); states.len()];
        for (i, entries) in by_row.iter().enumerate() {
            for &(j, l) in entries {
                by_state[j as usize].push((i as u32, counts[i] * l));
            }
        }
        Ok(Self {
            n_states: states.len(),
            counts,
            by_row,
            by_state,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_unique_rows(&self) -> usize {
        self.counts.len()
    }

    fn check(&self, probs: &[f64]) -> Result<()> {
        if probs.len() != self.n_states {
            return Err(Error::Dimension(format!(
                "probability vector has {} entries, expected {}",
                probs.len(),
                self.n_states
            )));
        }
        Ok(())
    }

    /// `P(O_i)` for every unique row.
    pub fn row_probabilities(&self, probs: &[f64]) -> Result<Vec<f64>> {
        self.check(probs)?;
        Ok(par::map_slice(&self.by_row, |entries| {
            entries.iter().map(|&(j, l)| l * probs[j as usize]).sum()
        }))
    }

    fn objective_from_rows(&self, row_probs: &[f64]) -> f64 {
        let terms: Vec<f64> = row_probs
            .iter()
            .zip(&self.counts)
            .map(|(&p, &c)| -c * p.max(PROB_FLOOR).ln())
            .collect();
        par::pairwise_sum(&terms)
    }

    fn gradient_from_rows(&self, row_probs: &[f64]) -> Vec<f64> {
        par::map_slice(&self.by_state, |entries| {
            -entries
                .iter()
                .map(|&(i, w)| w / row_probs[i as usize].max(PROB_FLOOR))
                .sum::<f64>()
        })
    }

    /// `-sum_i c_i ln max(P(O_i), floor)`.
    pub fn objective(&self, probs: &[f64]) -> Result<f64> {
        let rows = self.row_probabilities(probs)?;
        Ok(self.objective_from_rows(&rows))
    }

    pub fn gradient(&self, probs: &[f64]) -> Result<Vec<f64>> {
        let rows = self.row_probabilities(probs)?;
        Ok(self.gradient_from_rows(&rows))
    }

    /// Objective, or `None` when some row probability is at or below the
    /// floor (outside the domain of the log).
    fn objective_in_domain(&self, probs: &[f64]) -> Result<Option<f64>> {
        let rows = self.row_probabilities(probs)?;
        if rows.iter().any(|&p| p.is_nan() || p <= PROB_FLOOR) {
            return Ok(None);
        }
        Ok(Some(self.objective_from_rows(&rows)))
    }

    pub fn objective_and_gradient(&self, probs: &[f64]) -> Result<(f64, Vec<f64>)> {
        let rows = self.row_probabilities(probs)?;
        Ok((self.objective_from_rows(&rows), self.gradient_from_rows(&rows)))
    }
}

/// Objective of `dist` on `obs`, evaluated over its own candidate set.
pub fn objective(
    dist: &SummaryDistribution,
    obs: &ObservationMatrix,
    prior: &MissingnessPrior,
) -> Result<f64> {
    LikelihoodTable::new(obs, &dist.candidates, prior)?.objective(&dist.probs)
}

pub fn gradient(
    dist: &SummaryDistribution,
    obs: &ObservationMatrix,
    prior: &MissingnessPrior,
) -> Result<Vec<f64>> {
    LikelihoodTable::new(obs, &dist.candidates, prior)?.gradient(&dist.probs)
}

fn initial_point(n: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    match opts.init {
        Init::Uniform => Ok(vec![1.0 / n as f64; n]),
        Init::Random => {
            let mut rng = seed::rng(opts.seed, seed::domain::INIT, 0);
            let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = draws.iter().sum();
            project_simplex(&draws.iter().map(|d| d / total).collect::<Vec<_>>())
        }
    }
}

/// Result of [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun {
    pub probs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after initialization and after every accepted step.
    pub history: Vec<f64>,
}

/// Projected gradient descent with Armijo backtracking from `start`.
pub fn minimize(table: &LikelihoodTable, start: Vec<f64>, opts: &SolverOptions) -> Result<SolverRun> {
    opts.validate()?;
    let mut probs = project_simplex(&start)?;
    let (mut value, mut grad) = table.objective_and_gradient(&probs)?;
    let mut history = vec![value];
    let mut step = opts.max_step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iters {
        let mut accepted = None;
        let mut trial = step;
        for _ in 0..MAX_BACKTRACKS {
            let shifted: Vec<f64> = probs.iter().zip(&grad).map(|(p, g)| p - trial * g).collect();
            let candidate = project_simplex(&shifted)?;
            let decrease: f64 = grad
                .iter()
                .zip(candidate.iter().zip(&probs))
                .map(|(g, (c, p))| g * (c - p))
                .sum();
            if decrease == 0.0 && candidate == probs {
                break;
            }
            let in_domain = table.objective_in_domain(&candidate)?;
            if let Some(candidate_value) = in_domain.filter(|v| *v <= value + ARMIJO_C * decrease) {
                accepted = Some((candidate, candidate_value, trial));
                break;
            }
            trial *= SHRINK;
        }
        let Some((next, next_value, used)) = accepted else {
            // Projected fixed point: no feasible descent at working precision.
            converged = true;
            break;
        };
        iterations += 1;
        let change = (value - next_value).abs() / value.abs().max(PROB_FLOOR);
        probs = next;
        value = next_value;
        grad = table.gradient(&probs)?;
        history.push(value);
        step = (used / SHRINK).min(opts.max_step);
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(SolverRun {
        probs,
        objective: value,
        iterations,
        converged,
        history,
    })
}

/// Fits the maximum-likelihood state distribution of `obs`.
pub fn fit(
    obs: &ObservationMatrix,
    prior: &MissingnessPrior,
    opts: &SolverOptions,
) -> Result<SummaryDistribution> {
    opts.validate()?;
    let candidates = enumerate_candidates(obs, opts.candidate_cap)?;
    let table = LikelihoodTable::new(obs, &candidates, prior)?;
    let start = initial_point(candidates.len(), opts)?;
    let run = minimize(&table, start, opts)?;
    Ok(SummaryDistribution {
        labels: obs.labels().to_vec(),
        candidates,
        probs: run.probs,
        objective: run.objective,
        iterations: run.iterations,
        converged: run.converged,
        history: run.history,
    })
}
