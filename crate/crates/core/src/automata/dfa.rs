use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

use super::PfaSpec;

/// Deterministic automaton over `{a}`; `transition[s]` is the successor of `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DfaSpec {
    n_states: usize,
    initial: usize,
    accepting: BTreeSet<usize>,
    transition: Vec<usize>,
}

impl DfaSpec {
    pub fn new(
        n_states: usize,
        initial: usize,
        accepting: BTreeSet<usize>,
        transition: Vec<usize>,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(Error::InvalidSpec("DFA needs at least one state".into()));
        }
        if initial >= n_states {
            return Err(Error::InvalidSpec(format!(
                "initial state {initial} out of range 0..{n_states}"
            )));
        }
        if transition.len() != n_states {
            return Err(Error::InvalidSpec(format!(
                "transition table has {} entries for {n_states} states",
                transition.len()
            )));
        }
        if let Some(&s) = transition
            .iter()
            .chain(&accepting)
            .find(|&&s| s >= n_states)
        {
            return Err(Error::InvalidSpec(format!(
                "state {s} out of range 0..{n_states}"
            )));
        }
        Ok(Self {
            n_states,
            initial,
            accepting,
            transition,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    pub fn step(&self, state: usize) -> usize {
        self.transition[state]
    }

    pub fn final_state(&self, len: usize) -> usize {
        (0..len).fold(self.initial, |s, _| self.step(s))
    }

    pub fn accepts(&self, len: usize) -> bool {
        self.accepting.contains(&self.final_state(len))
    }

    /// The same machine as a PFA with 0/1 (permutation-like) matrices and
    /// identity end-marker operators.
    pub fn to_pfa(&self) -> PfaSpec {
        let n = self.n_states;
        let mut a = RMatrix::zeros(n, n);
        for (from, &to) in self.transition.iter().enumerate() {
            a[(to, from)] = 1.0;
        }
        let mut v0 = vec![0.0; n];
        v0[self.initial] = 1.0;
        PfaSpec::new(
            v0,
            RMatrix::identity(n),
            a,
            RMatrix::identity(n),
            self.accepting.clone(),
        )
        .expect("a DFA transition table is always column-stochastic")
    }
}

/// The cyclic `n`-state DFA for MOD_n: s₀ → s₁ → ⋯ → s_{n−1} → s₀, accepting {s₀}.
pub fn dfa_build_modn(n: usize) -> Result<DfaSpec> {
    if n < 2 {
        return Err(Error::InvalidModulus(n));
    }
    DfaSpec::new(
        n,
        0,
        BTreeSet::from([0]),
        (0..n).map(|s| (s + 1) % n).collect(),
    )
}
