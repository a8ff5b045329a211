//! Observation rows and complete binary states.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest state representable in a single machine word.
pub const MAX_VARS: usize = 64;

/// One entry of an observation row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cell {
    Negative,
    Positive,
    Missing,
}

impl Cell {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Cell::Positive
        } else {
            Cell::Negative
        }
    }
}

/// A complete binary assignment to every variable.
///
/// Variable `k` of a width-`w` state lives at bit `w - 1 - k`, so ordering
/// states by their integer value is the same as ordering their 0/1 strings
/// (written in variable order) lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    bits: u64,
    width: u8,
}

pub(crate) fn width_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl State {
    /// Builds a state from raw bits in the internal layout (see type docs).
    pub fn from_bits(bits: u64, width: usize) -> Result<Self> {
        if width == 0 || width > MAX_VARS {
            return Err(Error::Dimension(format!(
                "state width {width} outside 1..={MAX_VARS}"
            )));
        }
        if bits & !width_mask(width) != 0 {
            return Err(Error::Dimension(format!(
                "bits {bits:#x} do not fit in width {width}"
            )));
        }
        Ok(Self {
            bits,
            width: width as u8,
        })
    }

    pub fn from_positives(positives: &[usize], width: usize) -> Result<Self> {
        let mut bits = 0u64;
        for &k in positives {
            if k >= width {
                return Err(Error::Dimension(format!(
                    "variable index {k} out of range for width {width}"
                )));
            }
            bits |= 1u64 << (width - 1 - k);
        }
        Self::from_bits(bits, width)
    }

    pub fn from_bools(values: &[bool]) -> Result<Self> {
        let positives: Vec<usize> = values
            .iter()
            .enumerate()
            .filter_map(|(k, &v)| v.then_some(k))
            .collect();
        Self::from_positives(&positives, values.len())
    }

    /// Parses a fixed-width 0/1 string such as `"1010"`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut positives = Vec::new();
        for (k, c) in s.chars().enumerate() {
            match c {
                '1' => positives.push(k),
                '0' => {}
                other => {
                    return Err(Error::Invalid(format!(
                        "state string {s:?} contains {other:?}; expected only 0 and 1"
                    )))
                }
            }
        }
        Self::from_positives(&positives, s.chars().count())
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn get(&self, k: usize) -> bool {
        k < self.width() && (self.bits >> (self.width() - 1 - k)) & 1 == 1
    }

    /// Indices of the positive variables, ascending.
    pub fn positives(&self) -> Vec<usize> {
        (0..self.width()).filter(|&k| self.get(k)).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn contains_all(&self, other_bits: u64) -> bool {
        self.bits & other_bits == other_bits
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.width() {
            f.write_str(if self.get(k) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Bitmask view of one observation row in the [`State`] bit layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct RowMask {
    pub positive: u64,
    pub missing: u64,
}

impl RowMask {
    pub fn from_cells(cells: &[Cell]) -> Self {
        let width = cells.len();
        let mut positive = 0u64;
        let mut missing = 0u64;
        for (k, cell) in cells.iter().enumerate() {
            let bit = 1u64 << (width - 1 - k);
            match cell {
                Cell::Positive => positive |= bit,
                Cell::Missing => missing |= bit,
                Cell::Negative => {}
            }
        }
        Self { positive, missing }
    }

    pub fn observed_positives(&self) -> u32 {
        self.positive.count_ones()
    }

    pub fn missing_count(&self) -> u32 {
        self.missing.count_ones()
    }

    /// True iff `bits` agrees with every observed entry.
    pub fn conforms(&self, bits: u64, width: usize) -> bool {
        let observed = width_mask(width) & !self.missing;
        bits & observed == self.positive
    }
}

/// `m` observation rows over `n` labelled binary variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl ObservationMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        if labels.is_empty() || labels.len() > MAX_VARS {
            return Err(Error::Dimension(format!(
                "variable count {} outside 1..={MAX_VARS}",
                labels.len()
            )));
        }
        let mut seen = HashSet::new();
        for label in &labels {
            if label.is_empty() {
                return Err(Error::Invalid("empty variable label".into()));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::Invalid(format!("duplicate variable label {label:?}")));
            }
        }
        if rows.is_empty() {
            return Err(Error::Invalid("observation matrix has no rows".into()));
        }
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != labels.len()) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {}",
                row.len(),
                labels.len()
            )));
        }
        Ok(Self { labels, rows })
    }

    /// Labels `X0..X{n-1}`.
    pub fn default_labels(n: usize) -> Vec<String> {
        (0..n).map(|k| format!("X{k}")).collect()
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    /// Matrix made of the given rows (indices may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let rows = indices
            .iter()
            .map(|&i| {
                self.rows
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Dimension(format!("row index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.labels.clone(), rows)
    }

    pub(crate) fn masks(&self) -> Vec<RowMask> {
        self.rows.iter().map(|r| RowMask::from_cells(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_string_round_trip_and_order() {
        let a = State::parse("1010").unwrap();
        assert_eq!(a.to_string(), "1010");
        assert_eq!(a.positives(), vec![0, 2]);
        assert_eq!(a.positive_count(), 2);
        let b = State::parse("1011").unwrap();
        assert!(a < b);
        assert!(State::parse("0111").unwrap() < a);
    }

    #[test]
    fn state_rejects_bad_input() {
        assert!(State::parse("10x").is_err());
        assert!(State::parse("").is_err());
        assert!(State::from_positives(&[3], 3).is_err());
        assert!(State::from_bits(0b100, 2).is_err());
    }

    #[test]
    fn matrix_validation() {
        let labels = vec!["A".to_string(), "B".to_string()];
        assert!(ObservationMatrix::new(labels.clone(), vec![]).is_err());
        assert!(ObservationMatrix::new(labels.clone(), vec![vec![Cell::Positive]]).is_err());
        assert!(ObservationMatrix::new(
            vec!["A".into(), "A".into()],
            vec![vec![Cell::Positive, Cell::Negative]]
        )
        .is_err());
        assert!(ObservationMatrix::new(
            vec!["A".into(), "".into()],
            vec![vec![Cell::Positive, Cell::Negative]]
        )
        .is_err());
        let m = ObservationMatrix::new(labels, vec![vec![Cell::Positive, Cell::Missing]]).unwrap();
        assert_eq!(m.n_vars(), 2);
        assert_eq!(m.n_rows(), 1);
    }

    #[test]
    fn wide_states() {
        let all: Vec<usize> = (0..64).collect();
        let s = State::from_positives(&all, 64).unwrap();
        assert_eq!(s.positive_count(), 64);
        assert_eq!(s.bits(), u64::MAX);
    }
}
