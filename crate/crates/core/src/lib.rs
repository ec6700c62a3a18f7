//! Concept-subspace estimation, projection edits and causal-separability
//! diagnostics for score-based generative models.
//!
//! The pipeline: collect score vectors over a prompt grid ([`dataset`]),
//! estimate a style subspace from a content-fixed slice ([`subspace`]),
//! project every sample into it and measure cluster structure before and
//! after per-content normalisation ([`diagnostics`]). [`synthetic`] provides
//! a factor model with known entanglement for validating all of the above.

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod report;
pub mod subspace;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
