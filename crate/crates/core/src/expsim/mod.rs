//! Monte Carlo model of the loop experiment, and the analysis that turns its
//! coincidence histograms back into per-loop acceptance probabilities.

mod analysis;
mod calibration;
mod histogram;
mod simulate;
mod tomography;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::{accept_prob_closed_form, DoveConfig, LoopConfig, PetalBasis};

pub use analysis::{accept_probabilities, LoopPoint, LoopProbabilities};
pub use calibration::{calibration_fit, CalibrationFit};
pub use histogram::{
    estimate_accidentals, loop_counts_corrected, window_counts, BinGeometry, HistogramMeta,
    PeakGrid, TimeHistogram,
};
pub use simulate::{simulate_repeats, simulate_run};
pub use tomography::{
    accept_prob_from_bloch, born_probabilities, dove_trajectory_bloch, dove_trajectory_state,
    qst_direct_inversion, BlochVector, ProjectionCounts, TomographyRow,
};

/// What is sent through the loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// Rotation-invariant reference beam: every loop is accepted.
    Gaussian,
    /// Petal superposition over `ells`, filtered against the initial state.
    Qfa { ells: Vec<u32> },
}

impl Mode {
    pub fn label(&self) -> String {
        match self {
            Mode::Gaussian => "gaussian".into(),
            Mode::Qfa { ells } => {
                let ks: Vec<String> = ells.iter().map(u32::to_string).collect();
                format!("qfa_{}", ks.join("-"))
            }
        }
    }

    fn stream_tag(&self) -> u64 {
        match self {
            Mode::Gaussian => 0,
            Mode::Qfa { .. } => 1,
        }
    }
}

fn default_bin_width() -> f64 {
    13e-12
}
fn default_window() -> usize {
    77
}
fn default_spacing() -> usize {
    174
}
fn default_prerecord() -> f64 {
    10e-9
}
fn default_lead() -> f64 {
    4e-9
}
fn default_jitter() -> f64 {
    5.0
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub phi_rad: f64,
    pub reflectance: f64,
    pub transmittance: f64,
    #[serde(default = "one")]
    pub eta_loop: f64,
    pub n_max: usize,
    /// Herald-arm singles rate.
    pub r1_hz: f64,
    /// Signal-arm singles rate.
    pub r2_hz: f64,
    /// Heralded photons per dataset.
    pub budget: u64,
    #[serde(default = "default_bin_width")]
    pub bin_width_s: f64,
    #[serde(default = "default_window")]
    pub window_bins: usize,
    #[serde(default = "default_spacing")]
    pub peak_spacing_bins: usize,
    /// Recording starts this long before the zeroth-loop peak.
    #[serde(default = "default_prerecord")]
    pub prerecord_s: f64,
    /// Accidentals are averaged over this leading stretch of the record.
    #[serde(default = "default_lead")]
    pub accidental_lead_s: f64,
    #[serde(default = "default_jitter")]
    pub jitter_sigma_bins: f64,
    /// Mode-carving and coupling loss for QFA modes.
    #[serde(default = "one")]
    pub encoding_efficiency: f64,
    /// Per-loop depolarization probability `λ`.
    #[serde(default)]
    pub depolarization: f64,
    /// Fixed record length; derived from `n_max` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span_bins: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Default timing and rates (`R1 = 10⁶ Hz`, `R2 = 10⁴ Hz`) around a loop.
    pub fn new(mode: Mode, lp: &LoopConfig, n_max: usize, budget: u64, seed: u64) -> Self {
        Self {
            mode,
            phi_rad: lp.dove.phi(),
            reflectance: lp.r,
            transmittance: lp.t,
            eta_loop: lp.eta_loop,
            n_max,
            r1_hz: 1e6,
            r2_hz: 1e4,
            budget,
            bin_width_s: default_bin_width(),
            window_bins: default_window(),
            peak_spacing_bins: default_spacing(),
            prerecord_s: default_prerecord(),
            accidental_lead_s: default_lead(),
            jitter_sigma_bins: default_jitter(),
            encoding_efficiency: 1.0,
            depolarization: 0.0,
            span_bins: None,
            seed,
        }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    pub fn loop_config(&self) -> Result<LoopConfig> {
        LoopConfig::new(
            self.reflectance,
            self.transmittance,
            self.eta_loop,
            self.peak_spacing_bins as f64 * self.bin_width_s,
            DoveConfig::new(self.phi_rad)?,
        )
    }

    pub fn validate(&self) -> Result<BinGeometry> {
        let bad = |m: String| Err(Error::Config(m));
        self.loop_config()?;
        if let Mode::Qfa { ells } = &self.mode {
            PetalBasis::new(ells.clone())?;
        }
        if self.window_bins == 0 || self.window_bins.is_multiple_of(2) {
            return bad(format!("window_bins = {} must be odd", self.window_bins));
        }
        if self.window_bins > self.peak_spacing_bins {
            return bad(format!(
                "window_bins {} > peak_spacing_bins {}",
                self.window_bins, self.peak_spacing_bins
            ));
        }
        if !(self.bin_width_s > 0.0) {
            return bad("bin_width_s must be positive".into());
        }
        if !(self.r1_hz >= 0.0 && self.r2_hz >= 0.0) {
            return bad("singles rates must be non-negative".into());
        }
        if !(self.jitter_sigma_bins >= 0.0) {
            return bad("jitter_sigma_bins must be non-negative".into());
        }
        if !(self.encoding_efficiency > 0.0 && self.encoding_efficiency <= 1.0) {
            return bad("encoding_efficiency must be in (0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.depolarization) {
            return bad("depolarization must be in [0, 1]".into());
        }
        let half = self.window_bins / 2;
        let t0_bin = (self.prerecord_s / self.bin_width_s).ceil() as usize;
        let lead_bins = (self.accidental_lead_s / self.bin_width_s).floor() as usize;
        if lead_bins == 0 {
            return bad("accidental lead region is empty".into());
        }
        if lead_bins + half > t0_bin {
            return bad("accidental lead region overlaps the zeroth-loop window".into());
        }
        let needed = t0_bin + self.n_max * self.peak_spacing_bins + self.window_bins;
        let span = match self.span_bins {
            Some(s) if s < needed => {
                return bad(format!(
                    "span_bins {s} < {needed} needed for n_max = {}",
                    self.n_max
                ))
            }
            Some(s) => s,
            None => needed,
        };
        Ok(BinGeometry {
            bin_width: self.bin_width_s,
            t0_bin,
            window_bins: self.window_bins,
            peak_spacing_bins: self.peak_spacing_bins,
            lead_bins,
            span,
        })
    }

    /// Probability that a photon exiting after `n` passes is detected in its
    /// peak, loop losses included.
    pub fn detection_probability(&self, n: usize) -> f64 {
        let eta = self.eta_loop.powi(n as i32);
        match &self.mode {
            Mode::Gaussian => eta,
            Mode::Qfa { ells } => eta * self.encoding_efficiency * self.filter_acceptance(ells, n),
        }
    }

    /// Closed-form acceptance mixed with the maximally mixed state:
    /// `(1−λ)ⁿ P + (1 − (1−λ)ⁿ)/(2d)`.
    pub fn filter_acceptance(&self, ells: &[u32], n: usize) -> f64 {
        let ideal = accept_prob_closed_form(ells, self.phi_rad, n as u64);
        let keep = (1.0 - self.depolarization).powi(n as i32);
        keep * ideal + (1.0 - keep) / (2 * ells.len()) as f64
    }

    /// Mean accidentals per bin, `R1 R2 τ T_meas` with `T_meas = budget/R1`.
    pub fn accidental_mean_per_bin(&self) -> f64 {
        if self.r1_hz == 0.0 {
            return 0.0;
        }
        let t_meas = self.budget as f64 / self.r1_hz;
        self.r1_hz * self.r2_hz * self.bin_width_s * t_meas
    }
}
