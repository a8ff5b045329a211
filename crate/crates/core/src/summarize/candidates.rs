use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observation::{ObservationMatrix, RowMask, State};

/// Default upper bound on the number of distinct candidate states.
pub const DEFAULT_CANDIDATE_CAP: usize = 1 << 20;

/// Finite optimization support: every completion of every row's missing
/// entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateStateSet {
    states: Vec<State>,
    per_row_conformity: Vec<Vec<usize>>,
}

impl CandidateStateSet {
    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// For observation row `i`, the ascending indices `j` of conforming states.
    pub fn conformity(&self, row: usize) -> &[usize] {
        &self.per_row_conformity[row]
    }

    pub fn per_row_conformity(&self) -> &[Vec<usize>] {
        &self.per_row_conformity
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: &State) -> Option<usize> {
        self.states.binary_search(state).ok()
    }
}

/// Calls `f` with every completion of `row`'s missing bits.
pub(crate) fn for_each_completion(row: &RowMask, mut f: impl FnMut(u64)) {
    let mut sub = row.missing;
    loop {
        f(row.positive | sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & row.missing;
    }
}

/// Enumerates the deduplicated union of all row completions, ascending.
pub fn enumerate_candidates(obs: &ObservationMatrix, cap: usize) -> Result<CandidateStateSet> {
    if cap == 0 {
        return Err(Error::Config("candidate cap must be positive".into()));
    }
    let width = obs.n_vars();
    let masks = obs.masks();
    let total = masks.len();
    let mut seen: HashSet<u64> = HashSet::new();
    let mut unique_rows: HashSet<RowMask> = HashSet::new();
    for (i, row) in masks.iter().enumerate() {
        if !unique_rows.insert(*row) {
            continue;
        }
        let completions = 1u128 << row.missing_count();
        if completions > cap as u128 {
            return Err(Error::Capacity {
                cap,
                rows_processed: i + 1,
                rows_total: total,
            });
        }
        let mut overflow = false;
        for_each_completion(row, |bits| {
            if !overflow && seen.insert(bits) && seen.len() > cap {
                overflow = true;
            }
        });
        if overflow {
            return Err(Error::Capacity {
                cap,
                rows_processed: i + 1,
                rows_total: total,
            });
        }
    }
    let mut bits: Vec<u64> = seen.into_iter().collect();
    bits.sort_unstable();
    let states = bits
        .iter()
        .map(|&b| State::from_bits(b, width))
        .collect::<Result<Vec<_>>>()?;
    let per_row_conformity = masks
        .iter()
        .map(|row| {
            let mut idx = Vec::with_capacity(1 << row.missing_count().min(20));
            for_each_completion(row, |b| {
                idx.push(bits.binary_search(&b).expect("completion was enumerated"))
            });
            idx.sort_unstable();
            idx
        })
        .collect();
    Ok(CandidateStateSet {
        states,
        per_row_conformity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observation::Cell::{self, Missing as M, Negative as N, Positive as P};

    fn matrix(rows: Vec<Vec<Cell>>) -> ObservationMatrix {
        let n = rows[0].len();
        ObservationMatrix::new(ObservationMatrix::default_labels(n), rows).unwrap()
    }

    fn strings(c: &CandidateStateSet) -> Vec<String> {
        c.states().iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn complete_rows_contribute_themselves() {
        let c = enumerate_candidates(&matrix(vec![vec![P, N], vec![N, P]]), 16).unwrap();
        assert_eq!(strings(&c), vec!["01", "10"]);
        assert_eq!(c.conformity(0), &[1]);
        assert_eq!(c.conformity(1), &[0]);
    }

    #[test]
    fn one_missing_bit_gives_two_completions() {
        let c = enumerate_candidates(&matrix(vec![vec![P, M]]), 16).unwrap();
        assert_eq!(strings(&c), vec!["10", "11"]);
    }

    #[test]
    fn overlapping_completions_are_deduplicated() {
        let c = enumerate_candidates(&matrix(vec![vec![P, M, M], vec![M, M, P]]), 64).unwrap();
        assert_eq!(
            strings(&c),
            vec!["001", "011", "100", "101", "110", "111"]
        );
        let row0: Vec<String> = c.conformity(0).iter().map(|&j| c.states()[j].to_string()).collect();
        assert_eq!(row0, vec!["100", "101", "110", "111"]);
    }

    #[test]
    fn capacity_error_names_row() {
        let err = enumerate_candidates(&matrix(vec![vec![P, N, N], vec![M, M, M]]), 4).unwrap_err();
        match err {
            Error::Capacity {
                cap,
                rows_processed,
                rows_total,
            } => {
                assert_eq!((cap, rows_processed, rows_total), (4, 2, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        // The union, not any single row, crosses the cap here.
        let err = enumerate_candidates(&matrix(vec![vec![P, M, N], vec![N, M, P]]), 3).unwrap_err();
        assert!(matches!(err, Error::Capacity { rows_processed: 2, .. }));
    }
}
