use std::io::Write;

use serde::{Deserialize, Serialize};

use super::histogram::{
    check_same_geometry, estimate_accidentals, loop_counts_corrected, window_counts, PeakGrid,
    TimeHistogram,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopPoint {
    pub n: usize,
    pub p: f64,
    /// One standard deviation: spread across datasets, or Poisson
    /// propagation when a mode has a single dataset.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopProbabilities {
    pub points: Vec<LoopPoint>,
    pub qfa_datasets: usize,
    pub gaussian_datasets: usize,
    pub peaks: PeakGrid,
}

impl LoopProbabilities {
    pub fn get(&self, n: usize) -> Option<&LoopPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// `n,P_n,sigma_n` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,P_n,sigma_n")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.n, p.p, p.sigma)?;
        }
        Ok(())
    }
}

/// Mean and standard deviation of `C_n/C_0` over datasets, for `n = 0..=n_max`.
fn mode_ratios(hists: &[TimeHistogram], grid: &PeakGrid, n_max: usize) -> Result<Vec<(f64, f64)>> {
    let mut per_set = Vec::with_capacity(hists.len());
    for h in hists {
        let c0 = loop_counts_corrected(h, grid, 0)?;
        if !(c0 > 0.0) {
            return Err(Error::Normalization(format!(
                "zeroth-loop count {c0} <= 0 in {} repeat {}",
                h.meta.mode, h.meta.repeat
            )));
        }
        let a = estimate_accidentals(h)?;
        let var_a = a / h.geometry.lead_bins as f64;
        let w = grid.window as f64;
        let var_c =
            |n: usize| -> Result<f64> { Ok(window_counts(h, grid, n)? as f64 + w * w * var_a) };
        let v0 = var_c(0)?;
        let mut row = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let cn = loop_counts_corrected(h, grid, n)?;
            let p = cn / c0;
            let var = if n == 0 {
                0.0
            } else {
                var_c(n)? / (c0 * c0) + cn * cn * v0 / c0.powi(4)
            };
            row.push((p, var));
        }
        per_set.push(row);
    }
    let k = per_set.len() as f64;
    Ok((0..=n_max)
        .map(|n| {
            let mean = per_set.iter().map(|r| r[n].0).sum::<f64>() / k;
            let sd = if per_set.len() == 1 {
                per_set[0][n].1.sqrt()
            } else {
                (per_set.iter().map(|r| (r[n].0 - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            };
            (mean, sd)
        })
        .collect())
}

/// `P_n = P̄_n^Q / P̄_n^G` with windows centered on the Gaussian peaks.
pub fn accept_probabilities(
    qfa: &[TimeHistogram],
    gaussian: &[TimeHistogram],
    n_max: usize,
) -> Result<LoopProbabilities> {
    if qfa.is_empty() || gaussian.is_empty() {
        return Err(Error::Config("need at least one dataset per mode".into()));
    }
    let grid = PeakGrid::locate(gaussian)?;
    check_same_geometry(qfa, &gaussian[0].geometry)?;
    let q = mode_ratios(qfa, &grid, n_max)?;
    let g = mode_ratios(gaussian, &grid, n_max)?;
    let mut points = Vec::with_capacity(n_max + 1);
    for (n, ((pq, sq), (pg, sg))) in q.into_iter().zip(g).enumerate() {
        if !(pg > 0.0) {
            return Err(Error::Normalization(format!(
                "Gaussian reference has no counts at loop {n}"
            )));
        }
        let p = pq / pg;
        let sigma = ((sq / pg).powi(2) + (pq * sg / (pg * pg)).powi(2)).sqrt();
        points.push(LoopPoint { n, p, sigma });
    }
    Ok(LoopProbabilities {
        points,
        qfa_datasets: qfa.len(),
        gaussian_datasets: gaussian.len(),
        peaks: grid,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{simulate_repeats, simulate_run, ExperimentConfig, Mode};
    use super::*;
    use crate::photonic::{accept_prob_closed_form, DoveConfig, LoopConfig};

    fn base(mode: Mode, budget: u64) -> ExperimentConfig {
        let lp = LoopConfig::lossless_split(70.0, 30.0, DoveConfig::from_degrees(18.0).unwrap())
            .unwrap();
        ExperimentConfig::new(mode, &lp, 10, budget, 5)
    }

    #[test]
    fn self_normalization_is_exact() {
        let hs = simulate_repeats(&base(Mode::Gaussian, 200_000), 3).unwrap();
        let r = accept_probabilities(&hs, &hs, 10).unwrap();
        for p in &r.points {
            assert_eq!(p.p, 1.0);
        }
    }

    #[test]
    fn single_dataset_poisson_errors() {
        let g = simulate_run(&base(Mode::Gaussian, 1_000_000)).unwrap();
        let q = simulate_run(&base(Mode::Qfa { ells: vec![1, 3] }, 1_000_000)).unwrap();
        let r = accept_probabilities(&[q], &[g], 10).unwrap();
        let phi = 18f64.to_radians();
        for p in &r.points {
            let want = accept_prob_closed_form(&[1, 3], phi, p.n as u64);
            assert!(p.sigma > 0.0 || p.n == 0);
            assert!(
                (p.p - want).abs() < 4.0 * p.sigma.max(1e-12),
                "n = {}: {} vs {want} ± {}",
                p.n,
                p.p,
                p.sigma
            );
        }
    }

    #[test]
    fn empty_reference_fails_normalization() {
        let g = simulate_run(&base(Mode::Gaussian, 0)).unwrap();
        let err = accept_probabilities(std::slice::from_ref(&g), std::slice::from_ref(&g), 10)
            .unwrap_err();
        assert!(err.is_numerical());
    }

    #[test]
    fn geometry_mismatch_is_rejected() {
        let g = simulate_run(&base(Mode::Gaussian, 1000)).unwrap();
        let mut other = base(Mode::Gaussian, 1000);
        other.n_max = 5;
        let q = simulate_run(&other).unwrap();
        assert!(matches!(
            accept_probabilities(&[q], &[g], 5),
            Err(Error::Config(_))
        ));
    }
}
