//! Per-row observation model.
//!
//! Given a true state, each positive variable is observed with probability
//! `q = 1 - p_miss_pos` and each negative variable with probability
//! `1 - p_miss_neg`; entries are masked independently. For the default
//! `p_miss_neg = 0.5` the likelihood of a conforming row reduces to
//! `q^x (1-q)^(y-x) 0.5^(n-y)` with `x` observed positives and `y` state
//! positives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::{Cell, RowMask, State};

/// Prior probabilities that a true positive / true negative entry is missing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingnessPrior {
    p_miss_pos: f64,
    p_miss_neg: f64,
}

impl MissingnessPrior {
    pub const DEFAULT_P_MISS_NEG: f64 = 0.5;

    pub fn new(p_miss_pos: f64) -> Result<Self> {
        Self::with_negative(p_miss_pos, Self::DEFAULT_P_MISS_NEG)
    }

    pub fn with_negative(p_miss_pos: f64, p_miss_neg: f64) -> Result<Self> {
        if !(p_miss_pos > 0.0 && p_miss_pos < 0.5) {
            return Err(Error::Config(format!(
                "p_miss_pos = {p_miss_pos} must lie in (0, 0.5)"
            )));
        }
        if !(p_miss_neg > 0.0 && p_miss_neg < 1.0) {
            return Err(Error::Config(format!(
                "p_miss_neg = {p_miss_neg} must lie in (0, 1)"
            )));
        }
        Ok(Self {
            p_miss_pos,
            p_miss_neg,
        })
    }

    pub fn p_miss_pos(&self) -> f64 {
        self.p_miss_pos
    }

    pub fn p_miss_neg(&self) -> f64 {
        self.p_miss_neg
    }

    /// Probability that a true positive is observed.
    pub fn q(&self) -> f64 {
        1.0 - self.p_miss_pos
    }

    pub(crate) fn log_factors(&self) -> LogFactors {
        LogFactors {
            observed_pos: self.q().ln(),
            missing_pos: self.p_miss_pos.ln(),
            observed_neg: (1.0 - self.p_miss_neg).ln(),
            missing_neg: self.p_miss_neg.ln(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogFactors {
    observed_pos: f64,
    missing_pos: f64,
    observed_neg: f64,
    missing_neg: f64,
}

impl LogFactors {
    /// Likelihood of `row` under `bits`, assuming the pair conforms.
    pub fn conforming_likelihood(&self, row: &RowMask, bits: u64, width: usize) -> f64 {
        let x = row.observed_positives() as f64;
        let y = bits.count_ones() as f64;
        let missing = row.missing_count() as f64;
        let missing_pos = y - x;
        let missing_neg = missing - missing_pos;
        let observed_neg = width as f64 - y - missing_neg;
        (x * self.observed_pos
            + missing_pos * self.missing_pos
            + observed_neg * self.observed_neg
            + missing_neg * self.missing_neg)
            .exp()
    }
}

fn check_width(row: &[Cell], state: &State) -> Result<()> {
    if row.len() != state.width() {
        return Err(Error::Dimension(format!(
            "row has {} entries but state has width {}",
            row.len(),
            state.width()
        )));
    }
    Ok(())
}

/// True iff every observed entry of `row` matches `state`.
pub fn conforms(row: &[Cell], state: &State) -> Result<bool> {
    check_width(row, state)?;
    Ok(RowMask::from_cells(row).conforms(state.bits(), state.width()))
}

/// `P(row | state)`; zero when the pair does not conform.
pub fn row_likelihood(row: &[Cell], state: &State, prior: &MissingnessPrior) -> Result<f64> {
    check_width(row, state)?;
    let mask = RowMask::from_cells(row);
    if !mask.conforms(state.bits(), state.width()) {
        return Ok(0.0);
    }
    Ok(prior
        .log_factors()
        .conforming_likelihood(&mask, state.bits(), state.width()))
}
