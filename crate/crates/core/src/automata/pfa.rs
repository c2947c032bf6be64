use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

use super::{FinalState, RunResult};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Probabilistic automaton with left-stochastic matrices (columns sum to 1),
/// so the state evolves as `v ← A v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PfaSpec {
    v0: Vec<f64>,
    a_cent: RMatrix,
    a_a: RMatrix,
    a_dollar: RMatrix,
    accepting: BTreeSet<usize>,
}

fn check_stochastic(name: &str, m: &RMatrix, n: usize) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::InvalidSpec(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.rows(),
            m.cols()
        )));
    }
    for j in 0..n {
        let mut sum = 0.0;
        for i in 0..n {
            let x = m[(i, j)];
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidSpec(format!(
                    "{name}[{i},{j}] = {x} not in [0,1]"
                )));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidSpec(format!(
                "{name} column {j} sums to {sum}"
            )));
        }
    }
    Ok(())
}

impl PfaSpec {
    pub fn new(
        v0: Vec<f64>,
        a_cent: RMatrix,
        a_a: RMatrix,
        a_dollar: RMatrix,
        accepting: BTreeSet<usize>,
    ) -> Result<Self> {
        let n = v0.len();
        if n == 0 {
            return Err(Error::InvalidSpec("PFA needs at least one state".into()));
        }
        if v0.iter().any(|p| !(0.0..=1.0).contains(p))
            || (v0.iter().sum::<f64>() - 1.0).abs() > STOCHASTIC_TOL
        {
            return Err(Error::InvalidSpec("v0 is not a probability vector".into()));
        }
        check_stochastic("A_cent", &a_cent, n)?;
        check_stochastic("A_a", &a_a, n)?;
        check_stochastic("A_dollar", &a_dollar, n)?;
        if let Some(s) = accepting.iter().find(|&&s| s >= n) {
            return Err(Error::InvalidSpec(format!(
                "accepting state {s} out of range"
            )));
        }
        Ok(Self {
            v0,
            a_cent,
            a_a,
            a_dollar,
            accepting,
        })
    }

    pub fn n_states(&self) -> usize {
        self.v0.len()
    }

    pub fn run(&self, len: usize) -> RunResult {
        let mut v = self.a_cent.mul_vec(&self.v0);
        for _ in 0..len {
            v = self.a_a.mul_vec(&v);
        }
        let v = self.a_dollar.mul_vec(&v);
        let accept_prob = self.accepting.iter().map(|&j| v[j]).sum();
        RunResult {
            accept_prob,
            final_state: FinalState::Stochastic(v),
        }
    }
}

/// `v_f = A_$ · A_a^len · A_¢ · v0`; accepts with the mass on accepting states.
pub fn pfa_run(spec: &PfaSpec, len: usize) -> RunResult {
    spec.run(len)
}
