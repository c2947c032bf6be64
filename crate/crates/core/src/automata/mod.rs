//! Classical and quantum finite automata over the unary alphabet `{a}`.
//!
//! Every machine reads a left end-marker `¢`, then `len` copies of `a`, then a
//! right end-marker `$`. Only the input length matters, so all run functions
//! take a length rather than a string.

mod construct;
mod dfa;
mod pfa;
mod qfa;

pub(crate) use construct::spread_state;
pub use construct::{qfa2_build, qfa2d_build, rotation};
pub use dfa::{dfa_build_modn, DfaSpec};
pub use pfa::{pfa_run, PfaSpec};
pub use qfa::{qfa_run, QfaDocument, QfaSpec, QfaTrace};

use crate::linalg::C64;

/// Final configuration of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Quantum(Vec<C64>),
    Stochastic(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub accept_prob: f64,
    pub final_state: FinalState,
}

/// Outcome of applying a [`DecisionMode`] to an acceptance probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
    /// Bounded-error mode only: the probability fell in `(ε, 1−ε]`.
    Undecided,
}

/// How an acceptance probability is turned into a yes/no answer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionMode {
    /// Accept iff the probability exceeds the cutpoint (½ by default).
    Cutpoint(f64),
    /// Accept iff the probability exceeds `1 − ε`, reject iff it is at most `ε`.
    BoundedError(f64),
}

impl Default for DecisionMode {
    fn default() -> Self {
        DecisionMode::Cutpoint(0.5)
    }
}

impl DecisionMode {
    pub fn decide(self, accept_prob: f64) -> Decision {
        match self {
            DecisionMode::Cutpoint(c) => {
                if accept_prob > c {
                    Decision::Accept
                } else {
                    Decision::Reject
                }
            }
            DecisionMode::BoundedError(eps) => {
                if accept_prob > 1.0 - eps {
                    Decision::Accept
                } else if accept_prob <= eps {
                    Decision::Reject
                } else {
                    Decision::Undecided
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutpoint_default_is_half() {
        let m = DecisionMode::default();
        assert_eq!(m.decide(0.5), Decision::Reject);
        assert_eq!(m.decide(0.5000001), Decision::Accept);
        assert_eq!(DecisionMode::Cutpoint(0.9).decide(0.8), Decision::Reject);
    }

    #[test]
    fn bounded_error_has_a_gap() {
        let m = DecisionMode::BoundedError(1.0 / 3.0);
        assert_eq!(m.decide(0.9), Decision::Accept);
        assert_eq!(m.decide(0.0625), Decision::Reject);
        assert_eq!(m.decide(0.5), Decision::Undecided);
    }
}
