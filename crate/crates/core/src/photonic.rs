//! Petal-mode (OAM) realization of the 2d-state MOD_p machine.
//!
//! Basis index `2j` is the positive petal `|p⁺_ℓj⟩ = (|ℓj⟩ + |−ℓj⟩)/√2` and
//! `2j+1` the negative petal. A Dove prism tilted by `φ` rotates the
//! transverse field by `2φ`, which multiplies `|±ℓ⟩` by `e^{∓i2ℓφ}`; in the
//! petal basis that is [`dove_unitary`].
//!
//! Global phase: with `φ = π/(2p)` every sub-machine returns to `−1` times its
//! start after `p` passes. Acceptance is a squared modulus, so no correction
//! is applied.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::automata::{QfaDocument, QfaSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

/// Ordered set of distinct positive OAM values `ℓ₁ … ℓ_d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetalBasis {
    ells: Vec<u32>,
}

/// Which petal of a sub-machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PetalSign {
    Plus,
    Minus,
}

impl PetalBasis {
    pub fn new(ells: Vec<u32>) -> Result<Self> {
        if ells.is_empty() {
            return Err(Error::InvalidParameter("OAM set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for &l in &ells {
            if l == 0 {
                return Err(Error::InvalidParameter("OAM values must be >= 1".into()));
            }
            if !seen.insert(l) {
                return Err(Error::InvalidParameter(format!("duplicate OAM value {l}")));
            }
        }
        Ok(Self { ells })
    }

    pub fn ells(&self) -> &[u32] {
        &self.ells
    }

    pub fn d(&self) -> usize {
        self.ells.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.ells.len()
    }

    pub fn index(&self, ell: u32, sign: PetalSign) -> Option<usize> {
        let j = self.ells.iter().position(|&l| l == ell)?;
        Some(match sign {
            PetalSign::Plus => 2 * j,
            PetalSign::Minus => 2 * j + 1,
        })
    }

    pub fn label(&self, index: usize) -> Option<(u32, PetalSign)> {
        let &ell = self.ells.get(index / 2)?;
        let sign = if index.is_multiple_of(2) {
            PetalSign::Plus
        } else {
            PetalSign::Minus
        };
        Some((ell, sign))
    }
}

/// Dove-prism tilt. The transverse structure turns by `2φ` per pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoveConfig {
    phi: f64,
}

impl DoveConfig {
    pub fn new(phi: f64) -> Result<Self> {
        if !(0.0..PI).contains(&phi) {
            return Err(Error::InvalidParameter(format!(
                "Dove angle {phi} rad not in [0, π)"
            )));
        }
        Ok(Self { phi })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Beamsplitter loop: reflectance keeps the photon circulating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopConfig {
    pub r: f64,
    pub t: f64,
    /// Optical transmission of one round trip.
    pub eta_loop: f64,
    /// Round-trip delay in seconds.
    pub delta_t: f64,
    pub dove: DoveConfig,
}

impl LoopConfig {
    pub fn new(r: f64, t: f64, eta_loop: f64, delta_t: f64, dove: DoveConfig) -> Result<Self> {
        if (r + t - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("R + T = {} != 1", r + t)));
        }
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!("T = {t} not in (0, 1)")));
        }
        if !(eta_loop > 0.0 && eta_loop <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eta_loop = {eta_loop} not in (0, 1]"
            )));
        }
        if !(delta_t > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "loop delay {delta_t} must be positive"
            )));
        }
        Ok(Self {
            r,
            t,
            eta_loop,
            delta_t,
            dove,
        })
    }

    /// Lossless loop from an `R:T` split in percent, e.g. `(70, 30)`.
    pub fn lossless_split(r_percent: f64, t_percent: f64, dove: DoveConfig) -> Result<Self> {
        let total = r_percent + t_percent;
        Self::new(r_percent / total, t_percent / total, 1.0, 2.26e-9, dove)
    }
}

/// `[[cos 2ℓφ, −i sin 2ℓφ], [−i sin 2ℓφ, cos 2ℓφ]]` in the petal basis.
pub fn dove_unitary(ell: u32, phi: f64) -> CMatrix {
    let (s, c) = (2.0 * ell as f64 * phi).sin_cos();
    let c = C64::new(c, 0.0);
    let s = C64::new(0.0, -s);
    CMatrix::from_rows(vec![vec![c, s], vec![s, c]]).expect("2x2")
}

/// Block-diagonal `V_a` for the whole petal basis.
pub fn va_block(basis: &PetalBasis, phi: f64) -> CMatrix {
    let blocks: Vec<CMatrix> = basis.ells.iter().map(|&l| dove_unitary(l, phi)).collect();
    CMatrix::block_diag(&blocks)
}

/// `(1/d²) (Σ_j cos(2 n ℓ_j φ))²`.
pub fn accept_prob_closed_form(ells: &[u32], phi: f64, n: u64) -> f64 {
    let d = ells.len() as f64;
    let s: f64 = ells
        .iter()
        .map(|&l| (2.0 * n as f64 * l as f64 * phi).cos())
        .sum();
    (s / d).powi(2)
}

/// Photonic machine as an explicit [`QfaSpec`]: `V_¢` prepares the equal
/// superposition of positive petals, `V_a` is [`va_block`], `V_$ = V_¢†`.
pub fn photonic_qfa(basis: &PetalBasis, phi: f64) -> QfaSpec {
    let v_cent = linalg::complete_to_unitary(&crate::automata::spread_state(basis.d()));
    QfaSpec::new(
        linalg::basis(basis.dim(), 0),
        v_cent.clone(),
        va_block(basis, phi),
        v_cent.adjoint(),
        BTreeSet::from([0]),
    )
    .expect("photonic operators are unitary by construction")
}

/// `|explicit matrix product − closed form|` for `n` passes.
pub fn matrix_vs_closed_form(basis: &PetalBasis, phi: f64, n: u64) -> f64 {
    let q = photonic_qfa(basis, phi);
    let explicit = q.run(n as usize).accept_prob;
    (explicit - accept_prob_closed_form(basis.ells(), phi, n)).abs()
}

/// Dove angle that makes every sub-machine close after `p` passes:
/// `π/(2p)` when all ℓ share parity, `π/p` otherwise.
pub fn dove_angle_for_p(p: usize, ells: &[u32]) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidModulus(p));
    }
    let first = ells
        .first()
        .ok_or_else(|| Error::InvalidParameter("OAM set is empty".into()))?;
    let same_parity = ells.iter().all(|l| l % 2 == first % 2);
    Ok(if same_parity {
        PI / (2.0 * p as f64)
    } else {
        PI / p as f64
    })
}

/// Probability that a photon leaves the loop after exactly `n` round trips:
/// `T² Rⁿ⁻¹ η_loopⁿ` for `n ≥ 1`, and `R` for the direct reflection `n = 0`.
pub fn exit_probability(lp: &LoopConfig, n: u32) -> f64 {
    if n == 0 {
        return lp.r;
    }
    lp.t * lp.t * lp.r.powi(n as i32 - 1) * lp.eta_loop.powi(n as i32)
}

/// `photonic` section of the machine document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonicSection {
    pub ells: Vec<u32>,
    pub phi_rad: f64,
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub eta_loop: f64,
    pub delta_t_s: f64,
}

/// A photonic machine: the explicit QFA plus the optical parameters that
/// realize it. Serializes as the QFA document with an extra `photonic` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhotonicDocument", into = "PhotonicDocument")]
pub struct PhotonicQfa {
    machine: QfaSpec,
    basis: PetalBasis,
    loop_config: LoopConfig,
}

impl PhotonicQfa {
    pub fn new(basis: PetalBasis, loop_config: LoopConfig) -> Self {
        let machine = photonic_qfa(&basis, loop_config.dove.phi());
        Self {
            machine,
            basis,
            loop_config,
        }
    }

    pub fn machine(&self) -> &QfaSpec {
        &self.machine
    }

    pub fn basis(&self) -> &PetalBasis {
        &self.basis
    }

    pub fn loop_config(&self) -> &LoopConfig {
        &self.loop_config
    }
}

#[derive(Serialize, Deserialize)]
struct PhotonicDocument {
    #[serde(flatten)]
    machine: QfaDocument,
    photonic: PhotonicSection,
}

impl From<PhotonicQfa> for PhotonicDocument {
    fn from(q: PhotonicQfa) -> Self {
        let lp = q.loop_config;
        PhotonicDocument {
            machine: q.machine.into(),
            photonic: PhotonicSection {
                ells: q.basis.ells.clone(),
                phi_rad: lp.dove.phi(),
                r: lp.r,
                t: lp.t,
                eta_loop: lp.eta_loop,
                delta_t_s: lp.delta_t,
            },
        }
    }
}

impl TryFrom<PhotonicDocument> for PhotonicQfa {
    type Error = Error;

    fn try_from(doc: PhotonicDocument) -> Result<Self> {
        let ph = doc.photonic;
        let basis = PetalBasis::new(ph.ells)?;
        let dove = DoveConfig::new(ph.phi_rad)?;
        let loop_config = LoopConfig::new(ph.r, ph.t, ph.eta_loop, ph.delta_t_s, dove)?;
        let machine = QfaSpec::try_from(doc.machine)?;
        if machine.dim() != basis.dim() {
            return Err(Error::InvalidSpec(format!(
                "machine has dim {} but the petal basis needs {}",
                machine.dim(),
                basis.dim()
            )));
        }
        Ok(Self {
            machine,
            basis,
            loop_config,
        })
    }
}
