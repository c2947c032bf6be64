//! Single-qubit tomography in the `{|+ℓ⟩, |−ℓ⟩}` basis with projectors
//! `z± = |±ℓ⟩`, `x± = (|ℓ⟩ ± |−ℓ⟩)/√2`, `y± = (|ℓ⟩ ± i|−ℓ⟩)/√2`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::photonic::dove_unitary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &BlochVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// False when the length exceeds `1 + slack` (e.g. three standard
    /// deviations of the reconstruction).
    pub fn is_physical(&self, slack: f64) -> bool {
        self.norm() <= 1.0 + slack
    }

    pub fn max_abs_diff(&self, o: &BlochVector) -> f64 {
        (self.x - o.x)
            .abs()
            .max((self.y - o.y).abs())
            .max((self.z - o.z).abs())
    }
}

/// Counts (or probabilities) for the six projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionCounts {
    pub z_plus: f64,
    pub z_minus: f64,
    pub x_plus: f64,
    pub x_minus: f64,
    pub y_plus: f64,
    pub y_minus: f64,
}

impl ProjectionCounts {
    /// Order `z+, z−, x+, x−, y+, y−`.
    pub fn from_array(c: [f64; 6]) -> Self {
        Self {
            z_plus: c[0],
            z_minus: c[1],
            x_plus: c[2],
            x_minus: c[3],
            y_plus: c[4],
            y_minus: c[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.z_plus,
            self.z_minus,
            self.x_plus,
            self.x_minus,
            self.y_plus,
            self.y_minus,
        ]
    }
}

/// One input state with its counts and reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyRow {
    pub label: String,
    pub counts: ProjectionCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<BlochVector>,
}

fn axis(plus: f64, minus: f64, name: &str) -> Result<f64> {
    if plus < 0.0 || minus < 0.0 {
        return Err(Error::Inversion(format!("negative {name} counts")));
    }
    let total = plus + minus;
    if !(total > 0.0) {
        return Err(Error::Inversion(format!("no counts on the {name} axis")));
    }
    Ok((plus - minus) / total)
}

/// `r_a = (N_{a+} − N_{a−}) / (N_{a+} + N_{a−})` for each axis.
pub fn qst_direct_inversion(c: &ProjectionCounts) -> Result<BlochVector> {
    Ok(BlochVector {
        x: axis(c.x_plus, c.x_minus, "x")?,
        y: axis(c.y_plus, c.y_minus, "y")?,
        z: axis(c.z_plus, c.z_minus, "z")?,
    })
}

/// Overlap `(1 + r·r_ref)/2` with the accepting state `r_ref`.
pub fn accept_prob_from_bloch(r: &BlochVector, r_ref: &BlochVector) -> f64 {
    0.5 * (1.0 + r.dot(r_ref))
}

/// Born probabilities of the six projectors for `a|ℓ⟩ + b|−ℓ⟩`.
pub fn born_probabilities(state: [C64; 2]) -> ProjectionCounts {
    let [a, b] = state;
    let i = C64::new(0.0, 1.0);
    let p = |u: C64, v: C64| (u.conj() * a + v.conj() * b).norm_sqr();
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    ProjectionCounts {
        z_plus: p(one, zero),
        z_minus: p(zero, one),
        x_plus: p(s, s),
        x_minus: p(s, -s),
        y_plus: p(s, i * s),
        y_minus: p(s, -i * s),
    }
}

/// `|p⁺_ℓ⟩` after `n` Dove passes, in the `(|ℓ⟩, |−ℓ⟩)` basis.
pub fn dove_trajectory_state(ell: u32, phi: f64, n: u64) -> [C64; 2] {
    let v = dove_unitary(ell, phi).pow(n);
    let petal = v.mul_vec(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    // |p±⟩ = (|ℓ⟩ ± |−ℓ⟩)/√2
    [
        (petal[0] + petal[1]) * FRAC_1_SQRT_2,
        (petal[0] - petal[1]) * FRAC_1_SQRT_2,
    ]
}

/// Analytic trajectory: the Bloch vector turns by `4ℓφ` about `z` per pass,
/// starting from `x`.
pub fn dove_trajectory_bloch(ell: u32, phi: f64, n: u64) -> BlochVector {
    let a = 4.0 * ell as f64 * phi * n as f64;
    BlochVector::new(a.cos(), a.sin(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversion_examples() {
        let pole = qst_direct_inversion(&ProjectionCounts::from_array([
            1.0, 0.0, 0.5, 0.5, 0.5, 0.5,
        ]))
        .unwrap();
        assert_eq!(pole, BlochVector::new(0.0, 0.0, 1.0));
        let eq = qst_direct_inversion(&ProjectionCounts::from_array([
            0.5, 0.5, 1.0, 0.0, 0.5, 0.5,
        ]))
        .unwrap();
        assert_eq!(eq, BlochVector::new(1.0, 0.0, 0.0));
        let err = qst_direct_inversion(&ProjectionCounts::from_array([
            0.0, 0.0, 1.0, 0.0, 1.0, 0.0,
        ]))
        .unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn accept_from_bloch_extremes() {
        let r = BlochVector::new(1.0, 0.0, 0.0);
        assert_eq!(accept_prob_from_bloch(&r, &r), 1.0);
        assert_eq!(
            accept_prob_from_bloch(&BlochVector::new(-1.0, 0.0, 0.0), &r),
            0.0
        );
    }

    #[test]
    fn trajectory_state_matches_analytic_bloch() {
        for ell in 1..=4 {
            for n in 0..12 {
                let phi = 4.5f64.to_radians();
                let r =
                    qst_direct_inversion(&born_probabilities(dove_trajectory_state(ell, phi, n)))
                        .unwrap();
                assert!(r.max_abs_diff(&dove_trajectory_bloch(ell, phi, n)) < 1e-12);
            }
        }
    }

    #[test]
    fn physicality_flag() {
        assert!(BlochVector::new(0.6, 0.8, 0.0).is_physical(0.0));
        assert!(!BlochVector::new(1.0, 0.2, 0.0).is_physical(0.01));
    }
}
