//! Pathway inference from binary observations with massive, non-uniform
//! missingness.
//!
//! The pipeline has two stages:
//!
//! 1. [`summarize`] fits a maximum-likelihood distribution over complete
//!    binary states given the incomplete observation rows, and prunes it to a
//!    sparse [`summarize::StateMatrix`].
//! 2. [`infer`] greedily builds an undirected graph with few edges such that
//!    each retained state's positive variables induce a connected subgraph.
//!
//! [`simulate`] generates weighted ground-truth DAGs and cascade datasets and
//! [`evaluate`] scores inferred graphs against them.

pub mod error;
pub mod evaluate;
pub mod infer;
pub mod observation;
pub mod par;
pub mod pipeline;
pub mod seed;
pub mod simulate;
pub mod summarize;

pub use error::{Error, Result};
pub use observation::{Cell, ObservationMatrix, State};
