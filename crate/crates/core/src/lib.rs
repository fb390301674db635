//! Equilibrium computation for two-player zero-sum extensive-form games.
//!
//! Games are compiled to the sequence-form saddle-point problem
//! `min_{x in Q1} max_{y in Q2} x^T A y` and solved either with the
//! Excessive Gap Technique under a dilated-entropy prox-function or with
//! CFR / CFR+.

pub mod bspp;
pub mod cfr;
pub mod cli;
pub mod egt;
pub mod error;
pub mod games;
pub mod sparse;
pub mod trace;
pub mod treeplex;

pub use bspp::SaddlePointProblem;
pub use error::{GameError, SolveError, TreeplexError};
pub use games::{build_kuhn, build_leduc, sequence_form, GameTree, Player};
pub use sparse::SparsePayoffMatrix;
pub use trace::{Phase, Solution, SolveOptions, SolveTrace, TraceRecord};
pub use treeplex::{ProxSetup, SequenceVector, Treeplex};
