//! Stage two: greedy minimum-edge pathway graph from a state matrix.
//!
//! Starting from the empty graph, every state with exactly two positive
//! variables forces its edge. Afterwards each iteration scores every pair of
//! vertices `(x, y)` that no path joins yet:
//!
//! ```text
//! W(x, y) = sum over states S with x, y in V_S of P(S) / components(G[V_S])
//! ```
//!
//! and adds the single highest-scoring edge (ties go to the smallest index
//! pair) until every state's positive set induces a connected subgraph.
//!
//! A path through vertices outside `V_S` can leave a state unsatisfied even
//! though every pair inside it is already joined. When no eligible pair
//! remains in that situation, the iteration falls back to pairs that lie in
//! different components of some unsatisfied state's induced subgraph, scored
//! the same way over just those states.
//!
//! [`PairRule::NonAdjacent`] widens eligibility to every pair without a
//! direct edge and scores over all states, which yields denser graphs.

mod graph;
mod union_find;

pub use graph::{normalize, Edge, PathGraph};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::summarize::StateMatrix;

/// How a traced edge was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "score", rename_all = "snake_case")]
pub enum EdgeChoice {
    /// Sole pair of a two-positive state.
    Forced,
    /// Highest `W` among globally disconnected pairs.
    Scored(f64),
    /// Highest within-state score when no globally disconnected pair remained.
    Bridged(f64),
}

impl EdgeChoice {
    pub fn score(&self) -> Option<f64> {
        match self {
            EdgeChoice::Forced => None,
            EdgeChoice::Scored(s) | EdgeChoice::Bridged(s) => Some(*s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub edge: Edge,
    pub choice: EdgeChoice,
    /// 0 for forced edges, then 1, 2, ... for greedy additions.
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub steps: Vec<TraceStep>,
    pub satisfied: bool,
}

/// State as a bitmask over vertex indices (bit `k` = vertex `k`).
fn vertex_masks(sm: &StateMatrix) -> Vec<u64> {
    sm.states()
        .iter()
        .map(|s| s.positives().iter().fold(0u64, |m, &k| m | 1u64 << k))
        .collect()
}

fn check_dims(graph: &PathGraph, sm: &StateMatrix) -> Result<()> {
    if graph.n_vars() != sm.n_vars() {
        return Err(Error::Dimension(format!(
            "graph has {} vertices, state matrix {} variables",
            graph.n_vars(),
            sm.n_vars()
        )));
    }
    Ok(())
}

/// `W(x, y)` for a pair with no path between its endpoints.
pub fn edge_score(x: usize, y: usize, sm: &StateMatrix, graph: &PathGraph) -> Result<f64> {
    check_dims(graph, sm)?;
    if x == y {
        return Err(Error::Contract(format!("edge score of self-pair ({x}, {x})")));
    }
    if graph.connected(x, y)? {
        return Err(Error::Contract(format!(
            "vertices {x} and {y} are already connected"
        )));
    }
    let pair = 1u64 << x | 1u64 << y;
    Ok(vertex_masks(sm)
        .iter()
        .zip(sm.probs())
        .filter(|(m, _)| *m & pair == pair)
        .map(|(&m, &p)| p / graph.components_within_mask(m) as f64)
        .sum())
}

/// True iff every state's positive set induces at most one component.
pub fn is_satisfied(graph: &PathGraph, sm: &StateMatrix) -> Result<bool> {
    check_dims(graph, sm)?;
    Ok(vertex_masks(sm)
        .iter()
        .all(|&m| m.count_ones() <= 1 || graph.components_within_mask(m) <= 1))
}

/// Which vertex pairs may receive the next edge.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairRule {
    /// Pairs with no path between them; scores sum over unsatisfied states.
    /// Without fallback additions the result is a forest plus forced edges.
    #[default]
    Path,
    /// Pairs with no direct edge; every state containing both endpoints
    /// contributes, including already-connected ones. Produces denser graphs
    /// with chords between frequently co-occurring variables.
    NonAdjacent,
}

impl std::str::FromStr for PairRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(PairRule::Path),
            "non-adjacent" => Ok(PairRule::NonAdjacent),
            other => Err(Error::Config(format!(
                "unknown pair rule {other:?}; expected \"path\" or \"non-adjacent\""
            ))),
        }
    }
}

impl std::fmt::Display for PairRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PairRule::Path => "path",
            PairRule::NonAdjacent => "non-adjacent",
        })
    }
}

/// Per-iteration view of one state with at least two positives.
struct StateView {
    mask: u64,
    prob: f64,
    /// Component root of each vertex within the induced subgraph.
    local_root: Vec<usize>,
    components: usize,
}

impl StateView {
    fn contains(&self, pair: u64) -> bool {
        self.mask & pair == pair
    }

    fn score(&self) -> f64 {
        self.prob / self.components as f64
    }
}

fn state_views(graph: &PathGraph, masks: &[u64], probs: &[f64]) -> Vec<StateView> {
    let n = graph.n_vars();
    let evaluated = par::map_range(masks.len(), |i| {
        let mask = masks[i];
        if mask.count_ones() <= 1 {
            return None;
        }
        let mut d = union_find::DisjointSet::new(n);
        for &(a, b) in graph.edges() {
            if mask >> a & 1 == 1 && mask >> b & 1 == 1 {
                d.union(a, b);
            }
        }
        let components = d.components() - (n - mask.count_ones() as usize);
        let local_root = (0..n).map(|v| d.find(v)).collect();
        Some(StateView {
            mask,
            prob: probs[i],
            local_root,
            components,
        })
    });
    evaluated.into_iter().flatten().collect()
}

/// Best pair by score, then smallest `(x, y)`.
fn argmax(scores: Vec<(Edge, f64)>) -> Option<(Edge, f64)> {
    scores
        .into_iter()
        .filter(|(_, s)| *s > 0.0)
        .fold(None, |best, (e, s)| match best {
            Some((be, bs)) if bs > s || (bs == s && be < e) => Some((be, bs)),
            _ => Some((e, s)),
        })
}

/// Runs the greedy inference on `sm` with the default [`PairRule::Path`].
pub fn greedy_infer(sm: &StateMatrix) -> Result<(PathGraph, InferenceTrace)> {
    greedy_infer_with(sm, PairRule::Path)
}

pub fn greedy_infer_with(sm: &StateMatrix, rule: PairRule) -> Result<(PathGraph, InferenceTrace)> {
    if sm.is_empty() {
        return Err(Error::Invalid("state matrix is empty".into()));
    }
    let n = sm.n_vars();
    let masks = vertex_masks(sm);
    let probs = sm.probs();
    let mut graph = PathGraph::empty(sm.labels().to_vec());
    let mut steps = Vec::new();

    for &m in &masks {
        if m.count_ones() == 2 {
            let a = m.trailing_zeros() as usize;
            let b = 63 - m.leading_zeros() as usize;
            if graph.add_edge(a, b)? {
                steps.push(TraceStep {
                    edge: (a, b),
                    choice: EdgeChoice::Forced,
                    iteration: 0,
                });
            }
        }
    }

    let pairs: Vec<Edge> = (0..n)
        .flat_map(|x| (x + 1..n).map(move |y| (x, y)))
        .collect();
    let mut iteration = 0;
    loop {
        let views = state_views(&graph, &masks, probs);
        let pending: Vec<&StateView> = views.iter().filter(|v| v.components > 1).collect();
        if pending.is_empty() {
            break;
        }
        iteration += 1;

        let scored = match rule {
            PairRule::Path => {
                let mut global = graph.disjoint_set();
                let root: Vec<usize> = (0..n).map(|v| global.find(v)).collect();
                par::map_slice(&pairs, |&(x, y)| {
                    if root[x] == root[y] {
                        return ((x, y), 0.0);
                    }
                    let pair = 1u64 << x | 1u64 << y;
                    let w = pending.iter().filter(|s| s.contains(pair)).map(|s| s.score()).sum();
                    ((x, y), w)
                })
            }
            PairRule::NonAdjacent => par::map_slice(&pairs, |&(x, y)| {
                if graph.has_edge(x, y) {
                    return ((x, y), 0.0);
                }
                let pair = 1u64 << x | 1u64 << y;
                let w = views.iter().filter(|s| s.contains(pair)).map(|s| s.score()).sum();
                ((x, y), w)
            }),
        };
        let (edge, choice) = match argmax(scored) {
            Some((e, w)) => (e, EdgeChoice::Scored(w)),
            None => {
                let bridged = par::map_slice(&pairs, |&(x, y)| {
                    let pair = 1u64 << x | 1u64 << y;
                    let w = pending
                        .iter()
                        .filter(|s| s.contains(pair) && s.local_root[x] != s.local_root[y])
                        .map(|s| s.score())
                        .sum();
                    ((x, y), w)
                });
                let (e, w) = argmax(bridged).ok_or_else(|| {
                    Error::Contract("unsatisfied state without a joinable pair".into())
                })?;
                (e, EdgeChoice::Bridged(w))
            }
        };
        graph.add_edge(edge.0, edge.1)?;
        steps.push(TraceStep {
            edge,
            choice,
            iteration,
        });
    }

    let satisfied = is_satisfied(&graph, sm)?;
    Ok((graph, InferenceTrace { steps, satisfied }))
}
