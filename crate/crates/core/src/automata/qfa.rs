use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

use super::{FinalState, RunResult};

/// Maximum tolerated `‖U†U − I‖_max` for symbol operators.
pub const UNITARITY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-12;

/// Measure-once QFA over `{a}` with end-markers.
///
/// Immutable after construction; every constructor path validates dimensions,
/// unitarity and the initial-state norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QfaDocument", into = "QfaDocument")]
pub struct QfaSpec {
    v0: Vec<C64>,
    v_cent: CMatrix,
    v_a: CMatrix,
    v_dollar: CMatrix,
    accepting: BTreeSet<usize>,
}

impl QfaSpec {
    pub fn new(
        v0: Vec<C64>,
        v_cent: CMatrix,
        v_a: CMatrix,
        v_dollar: CMatrix,
        accepting: BTreeSet<usize>,
    ) -> Result<Self> {
        let dim = v0.len();
        if dim == 0 {
            return Err(Error::InvalidSpec(
                "QFA needs at least one basis state".into(),
            ));
        }
        let n = linalg::norm(&v0);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidSpec(format!("initial state has norm {n}")));
        }
        for (name, m) in [("V_cent", &v_cent), ("V_a", &v_a), ("V_dollar", &v_dollar)] {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::InvalidSpec(format!(
                    "{name} is {}x{}, expected {dim}x{dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            let defect = m.unitarity_defect();
            if defect > UNITARITY_TOL {
                return Err(Error::InvalidSpec(format!(
                    "{name} is not unitary (defect {defect:.3e})"
                )));
            }
        }
        if let Some(s) = accepting.iter().find(|&&s| s >= dim) {
            return Err(Error::InvalidSpec(format!(
                "accepting state {s} out of range 0..{dim}"
            )));
        }
        Ok(Self {
            v0,
            v_cent,
            v_a,
            v_dollar,
            accepting,
        })
    }

    pub fn dim(&self) -> usize {
        self.v0.len()
    }

    pub fn v0(&self) -> &[C64] {
        &self.v0
    }

    pub fn v_cent(&self) -> &CMatrix {
        &self.v_cent
    }

    pub fn v_a(&self) -> &CMatrix {
        &self.v_a
    }

    pub fn v_dollar(&self) -> &CMatrix {
        &self.v_dollar
    }

    pub fn accepting(&self) -> &BTreeSet<usize> {
        &self.accepting
    }

    /// Projector expectation `Σ_{j∈accepting} |⟨e_j|state⟩|²`.
    pub fn accept_prob_of(&self, state: &[C64]) -> f64 {
        self.accepting.iter().map(|&j| state[j].norm_sqr()).sum()
    }

    /// States after `¢` and after each of the `len` symbols (not including `$`).
    pub fn trace(&self, len: usize) -> QfaTrace<'_> {
        QfaTrace {
            spec: self,
            state: self.v_cent.mul_vec(&self.v0),
            remaining: len + 1,
        }
    }

    pub fn run(&self, len: usize) -> RunResult {
        let before_end = self
            .trace(len)
            .last()
            .expect("trace yields at least one state");
        let vf = self.v_dollar.mul_vec(&before_end);
        RunResult {
            accept_prob: self.accept_prob_of(&vf),
            final_state: FinalState::Quantum(vf),
        }
    }

    /// Same as [`run`](Self::run) but through a precomputed `V_aⁿ`.
    pub fn run_with_power(&self, len: u64) -> RunResult {
        let vf = self
            .v_dollar
            .mul_vec(&self.v_a.pow(len).mul_vec(&self.v_cent.mul_vec(&self.v0)));
        RunResult {
            accept_prob: self.accept_prob_of(&vf),
            final_state: FinalState::Quantum(vf),
        }
    }
}

/// Iterator over the intermediate states of a QFA run, one `V_a`
/// multiplication per symbol read.
pub struct QfaTrace<'a> {
    spec: &'a QfaSpec,
    state: Vec<C64>,
    remaining: usize,
}

impl Iterator for QfaTrace<'_> {
    type Item = Vec<C64>;

    fn next(&mut self) -> Option<Vec<C64>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.state.clone();
        if self.remaining > 0 {
            self.state = self.spec.v_a.mul_vec(&self.state);
        }
        Some(out)
    }
}

/// `v_f = V_$ · V_a^len · V_¢ · v0`, accepting with the projector onto the
/// accepting basis states.
pub fn qfa_run(spec: &QfaSpec, len: usize) -> RunResult {
    spec.run(len)
}

type Pair = [f64; 2];

/// Wire form of a [`QfaSpec`]: complex entries as `[re, im]`, matrices as
/// row-major arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfaDocument {
    pub dim: usize,
    pub v0: Vec<Pair>,
    pub v_cent: Vec<Vec<Pair>>,
    pub v_a: Vec<Vec<Pair>>,
    pub v_dollar: Vec<Vec<Pair>>,
    pub accepting: Vec<usize>,
}

fn to_pairs(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

fn matrix_from_doc(name: &str, rows: &[Vec<Pair>]) -> Result<CMatrix> {
    CMatrix::from_rows(rows.iter().map(|r| from_pairs(r)).collect())
        .ok_or_else(|| Error::InvalidSpec(format!("{name} has ragged rows")))
}

impl From<QfaSpec> for QfaDocument {
    fn from(q: QfaSpec) -> Self {
        let m = |m: &CMatrix| m.to_rows().iter().map(|r| to_pairs(r)).collect();
        QfaDocument {
            dim: q.dim(),
            v0: to_pairs(&q.v0),
            v_cent: m(&q.v_cent),
            v_a: m(&q.v_a),
            v_dollar: m(&q.v_dollar),
            accepting: q.accepting.iter().copied().collect(),
        }
    }
}

impl TryFrom<QfaDocument> for QfaSpec {
    type Error = Error;

    fn try_from(doc: QfaDocument) -> Result<Self> {
        if doc.v0.len() != doc.dim {
            return Err(Error::InvalidSpec(format!(
                "dim is {} but v0 has {} entries",
                doc.dim,
                doc.v0.len()
            )));
        }
        QfaSpec::new(
            from_pairs(&doc.v0),
            matrix_from_doc("v_cent", &doc.v_cent)?,
            matrix_from_doc("v_a", &doc.v_a)?,
            matrix_from_doc("v_dollar", &doc.v_dollar)?,
            doc.accepting.into_iter().collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::{qfa2_build, qfa2d_build};

    fn identity_spec(dim: usize) -> QfaSpec {
        let i = CMatrix::identity(dim);
        QfaSpec::new(
            linalg::basis(dim, 0),
            i.clone(),
            i.clone(),
            i,
            BTreeSet::from([0]),
        )
        .unwrap()
    }

    #[test]
    fn identity_accepts_everything() {
        assert_eq!(qfa_run(&identity_spec(3), 100).accept_prob, 1.0);
    }

    #[test]
    fn trace_has_one_state_per_symbol_plus_start() {
        let q = qfa2_build(5, 1).unwrap();
        let states: Vec<_> = q.trace(4).collect();
        assert_eq!(states.len(), 5);
        // after two symbols the real rotation sits at 144°
        let th = 4.0 * std::f64::consts::PI / 5.0;
        assert!((states[2][0].re - th.cos()).abs() < 1e-14);
        assert!((states[2][1].re - th.sin()).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unitary_and_bad_norm() {
        let i = CMatrix::identity(2);
        let mut bad = CMatrix::identity(2);
        bad[(0, 1)] = C64::new(1e-6, 0.0);
        let e = QfaSpec::new(
            linalg::basis(2, 0),
            i.clone(),
            bad,
            i.clone(),
            BTreeSet::from([0]),
        );
        assert!(matches!(e, Err(Error::InvalidSpec(_))));
        let v = vec![C64::new(1.0, 0.0), C64::new(0.1, 0.0)];
        assert!(QfaSpec::new(v, i.clone(), i.clone(), i.clone(), BTreeSet::new()).is_err());
        assert!(QfaSpec::new(
            linalg::basis(2, 0),
            i.clone(),
            i.clone(),
            i,
            BTreeSet::from([2])
        )
        .is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let q = qfa2d_build(11, &[1, 2, 3, 4]).unwrap();
        let text = serde_json::to_string(&q).unwrap();
        let back: QfaSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(q, back);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["dim"], 8);
        assert_eq!(doc["accepting"], serde_json::json!([0]));
    }

    #[test]
    fn json_rejects_non_unitary_documents() {
        let q = qfa2_build(5, 1).unwrap();
        let mut doc = QfaDocument::from(q);
        doc.v_a[0][0] = [2.0, 0.0];
        let text = serde_json::to_string(&doc).unwrap();
        assert!(serde_json::from_str::<QfaSpec>(&text).is_err());
        let mut doc2 = QfaDocument::from(qfa2_build(5, 1).unwrap());
        doc2.dim = 3;
        assert!(QfaSpec::try_from(doc2).is_err());
    }
}
