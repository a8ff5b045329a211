use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::union_find::DisjointSet;
use crate::error::{Error, Result};

/// Unordered vertex pair stored as `(min, max)`.
pub type Edge = (usize, usize);

pub fn normalize(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Undirected simple graph over labelled variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathGraph {
    labels: Vec<String>,
    edges: BTreeSet<Edge>,
}

impl PathGraph {
    pub fn empty(labels: Vec<String>) -> Self {
        Self {
            labels,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(labels: Vec<String>, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        let mut g = Self::empty(labels);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn n_vars(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&normalize(a, b))
    }

    fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n_vars() {
            return Err(Error::Dimension(format!(
                "vertex {v} out of range for {} vertices",
                self.n_vars()
            )));
        }
        Ok(())
    }

    /// Inserts `{a, b}`; returns `false` if it was already present.
    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        if a == b {
            return Err(Error::Invalid(format!("self-loop on vertex {a}")));
        }
        Ok(self.edges.insert(normalize(a, b)))
    }

    pub(crate) fn disjoint_set(&self) -> DisjointSet {
        let mut d = DisjointSet::new(self.n_vars());
        for &(a, b) in &self.edges {
            d.union(a, b);
        }
        d
    }

    /// True iff a path joins `a` and `b`.
    pub fn connected(&self, a: usize, b: usize) -> Result<bool> {
        self.check_vertex(a)?;
        self.check_vertex(b)?;
        let mut d = self.disjoint_set();
        Ok(d.find(a) == d.find(b))
    }

    /// Component count of the subgraph induced on `vset`.
    pub fn components_within(&self, vset: &[usize]) -> Result<usize> {
        for &v in vset {
            self.check_vertex(v)?;
        }
        let mut mask = 0u64;
        for &v in vset {
            mask |= 1u64 << v;
        }
        Ok(self.components_within_mask(mask))
    }

    /// As [`components_within`](Self::components_within) with the vertex set
    /// given as a bitmask over vertex indices.
    pub(crate) fn components_within_mask(&self, mask: u64) -> usize {
        let n = self.n_vars();
        let mut d = DisjointSet::new(n);
        for &(a, b) in &self.edges {
            if mask >> a & 1 == 1 && mask >> b & 1 == 1 {
                d.union(a, b);
            }
        }
        // Vertices outside the mask stay singletons.
        d.components() - (n - mask.count_ones() as usize)
    }
}
