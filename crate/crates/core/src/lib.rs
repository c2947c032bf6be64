//! Unary finite automata and their photonic OAM realization.
//!
//! Besides the machines themselves the crate carries the numerics used to
//! design and test them on an optical loop.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod automata;
pub mod error;
pub mod expsim;
pub mod holography;
pub mod kset;
pub mod linalg;
pub mod photonic;

pub use automata::{
    dfa_build_modn, pfa_run, qfa2_build, qfa2d_build, qfa_run, Decision, DecisionMode, DfaSpec,
    FinalState, PfaSpec, QfaSpec, RunResult,
};
pub use error::{Error, Result};
pub use expsim::{
    accept_probabilities, simulate_repeats, simulate_run, BlochVector, ExperimentConfig,
    LoopProbabilities, Mode, TimeHistogram,
};
pub use holography::{Grid, HologramSpec, ScalarField};
pub use kset::{
    exhaustive_best_kset, randomized_best_kset, verify_log_bound, worst_false_accept, AngleRule,
    KSetResult, SearchOptions,
};
pub use linalg::{CMatrix, RMatrix};
pub use photonic::{
    accept_prob_closed_form, dove_unitary, exit_probability, photonic_qfa, DoveConfig, LoopConfig,
    PetalBasis,
};
