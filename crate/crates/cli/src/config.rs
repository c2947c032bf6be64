//! TOML run configuration for `simulate`.
//!
//! ```toml
//! [run]
//! seed = 7
//! repeats = 40
//!
//! [qfa]
//! ells = [1, 3]
//! phi_deg = 18.0
//!
//! [loop]
//! bs = "70:30"
//! eta_loop = 1.0
//!
//! [sim]
//! n_max = 10
//! budget = 1_000_000
//! ```

use qfa_core::expsim::{ExperimentConfig, Mode};
use qfa_core::photonic::{DoveConfig, LoopConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    pub qfa: QfaSection,
    #[serde(default, rename = "loop")]
    pub loop_: LoopSection,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub detector: DetectorSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_u64")]
    pub repeats: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QfaSection {
    pub ells: Vec<u32>,
    pub phi_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSection {
    /// `"R:T"`, e.g. `"70:30"`.
    #[serde(default = "default_bs")]
    pub bs: String,
    #[serde(default = "one_f64")]
    pub eta_loop: f64,
}

impl Default for LoopSection {
    fn default() -> Self {
        Self {
            bs: default_bs(),
            eta_loop: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "one_f64")]
    pub encoding_efficiency: f64,
    #[serde(default)]
    pub depolarization: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            budget: default_budget(),
            encoding_efficiency: 1.0,
            depolarization: 0.0,
        }
    }
}

/// Every field falls back to the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub r1_hz: Option<f64>,
    pub r2_hz: Option<f64>,
    pub bin_width_s: Option<f64>,
    pub window_bins: Option<usize>,
    pub peak_spacing_bins: Option<usize>,
    pub prerecord_s: Option<f64>,
    pub accidental_lead_s: Option<f64>,
    pub jitter_sigma_bins: Option<f64>,
}

fn one_u64() -> u64 {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn default_bs() -> String {
    "50:50".into()
}
fn default_n_max() -> usize {
    10
}
fn default_budget() -> u64 {
    1_000_000
}

/// `"70:30"` → `(70, 30)`.
pub fn parse_split(s: &str) -> Result<(f64, f64)> {
    let bad = || CliError::Usage(format!("beamsplitter ratio {s:?} is not R:T"));
    let (r, t) = s.split_once(':').ok_or_else(bad)?;
    let r: f64 = r.trim().parse().map_err(|_| bad())?;
    let t: f64 = t.trim().parse().map_err(|_| bad())?;
    if !(r > 0.0 && t > 0.0) {
        return Err(bad());
    }
    Ok((r, t))
}

/// `"1,3"` → `[1, 3]`.
pub fn parse_list(s: &str) -> std::result::Result<Vec<u32>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}")))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: path.into(),
            message: e.to_string(),
        })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let (r, t) = parse_split(&self.loop_.bs)?;
        let total = r + t;
        let lp = LoopConfig::new(
            r / total,
            t / total,
            self.loop_.eta_loop,
            2.26e-9,
            DoveConfig::from_degrees(self.qfa.phi_deg)?,
        )?;
        let mut cfg = ExperimentConfig::new(
            Mode::Qfa {
                ells: self.qfa.ells.clone(),
            },
            &lp,
            self.sim.n_max,
            self.sim.budget,
            self.run.seed,
        );
        cfg.encoding_efficiency = self.sim.encoding_efficiency;
        cfg.depolarization = self.sim.depolarization;
        let d = &self.detector;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = d.$f { cfg.$f = v; })* };
        }
        set!(
            r1_hz,
            r2_hz,
            bin_width_s,
            window_bins,
            peak_spacing_bins,
            prerecord_s,
            accidental_lead_s,
            jitter_sigma_bins
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse("[qfa]\nells = [1, 3]\nphi_deg = 18.0\n", "x.toml").unwrap();
        let e = c.experiment().unwrap();
        assert_eq!(e.mode, Mode::Qfa { ells: vec![1, 3] });
        assert_eq!(e.window_bins, 77);
        assert_eq!(c.run.repeats, 1);
    }

    #[test]
    fn unknown_keys_report_location() {
        let err =
            RunConfig::parse("[qfa]\nells = [1]\nphi_deg = 18.0\nphi = 3\n", "x.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("x.toml") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn split_parsing() {
        assert_eq!(parse_split("70:30").unwrap(), (70.0, 30.0));
        assert!(parse_split("70").is_err());
        assert!(parse_split("0:1").is_err());
        assert_eq!(parse_list("1, 3").unwrap(), vec![1, 3]);
        assert!(parse_list("1,x").is_err());
    }
}
