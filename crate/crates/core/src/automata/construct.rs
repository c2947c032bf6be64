//! The rotation-based MOD_p machines: a single 2-state rotor and the
//! 2d-state machine running d rotors in superposition.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, RMatrix, C64};

use super::QfaSpec;

/// Real counter-clockwise rotation by `theta`.
pub fn rotation(theta: f64) -> RMatrix {
    let (s, c) = theta.sin_cos();
    RMatrix::from_rows(vec![vec![c, -s], vec![s, c]]).expect("2x2")
}

fn check_k(p: usize, k: usize) -> Result<()> {
    if k == 0 || k >= p {
        return Err(Error::InvalidParameter(format!(
            "k = {k} not in 1..{}",
            p.saturating_sub(1)
        )));
    }
    Ok(())
}

/// 2-state QFA: identity end-markers, `V_a` rotates by `2kπ/p`, accept {0}.
pub fn qfa2_build(p: usize, k: usize) -> Result<QfaSpec> {
    if p < 2 {
        return Err(Error::InvalidModulus(p));
    }
    check_k(p, k)?;
    let theta = 2.0 * k as f64 * PI / p as f64;
    let i = CMatrix::identity(2);
    QfaSpec::new(
        linalg::basis(2, 0),
        i.clone(),
        CMatrix::from_real(&rotation(theta)),
        i,
        BTreeSet::from([0]),
    )
}

/// 2d-state QFA over the rotation set `ks`.
///
/// `V_¢` sends `e₀` to `(e₀ + e₂ + ⋯ + e_{2d−2})/√d` and is completed to a
/// unitary deterministically (see [`linalg::complete_to_unitary`]);
/// `V_$ = V_¢†`. Block `j` of `V_a` rotates by `2 k_j π / p`.
pub fn qfa2d_build(p: usize, ks: &[usize]) -> Result<QfaSpec> {
    if p < 2 {
        return Err(Error::InvalidModulus(p));
    }
    if ks.is_empty() {
        return Err(Error::InvalidParameter("rotation set K is empty".into()));
    }
    let mut seen = BTreeSet::new();
    for &k in ks {
        check_k(p, k)?;
        if !seen.insert(k) {
            return Err(Error::InvalidParameter(format!("duplicate k = {k} in K")));
        }
    }
    let d = ks.len();
    let blocks: Vec<CMatrix> = ks
        .iter()
        .map(|&k| CMatrix::from_real(&rotation(2.0 * k as f64 * PI / p as f64)))
        .collect();
    let v_cent = linalg::complete_to_unitary(&spread_state(d));
    QfaSpec::new(
        linalg::basis(2 * d, 0),
        v_cent.clone(),
        CMatrix::block_diag(&blocks),
        v_cent.adjoint(),
        BTreeSet::from([0]),
    )
}

/// `(e₀ + e₂ + ⋯ + e_{2d−2})/√d` in dimension `2d`.
pub(crate) fn spread_state(d: usize) -> Vec<C64> {
    let amp = 1.0 / (d as f64).sqrt();
    let mut v = vec![C64::new(0.0, 0.0); 2 * d];
    for j in 0..d {
        v[2 * j] = C64::new(amp, 0.0);
    }
    v
}
