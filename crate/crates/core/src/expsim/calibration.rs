//! Least-squares fit of `A cos²(ℓ(θ − δ)) + B` to power-versus-angle data.
//!
//! Expanding `cos²` gives `c₀ + c₁ cos 2ℓθ + c₂ sin 2ℓθ`, which is linear in
//! the coefficients, so the fit is a single 3×3 normal-equation solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    /// Offset in degrees, in `(−90/ℓ, 90/ℓ]`.
    pub delta_deg: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub rms_residual: f64,
}

/// Fit `(θ in degrees, power)` samples for OAM `ell`.
pub fn calibration_fit(samples: &[(f64, f64)], ell: u32) -> Result<CalibrationFit> {
    if ell == 0 {
        return Err(Error::InvalidParameter("calibration needs l >= 1".into()));
    }
    if samples.len() < 3 {
        return Err(Error::Fit(format!(
            "{} samples, need at least 3",
            samples.len()
        )));
    }
    let period = 180.0 / ell as f64;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| {
            (lo.min(t), hi.max(t))
        });
    if hi - lo < period - 1e-9 {
        return Err(Error::Fit(format!(
            "samples span {:.3}°, need a full period of {period:.3}°",
            hi - lo
        )));
    }
    let k = 2.0 * ell as f64;
    let basis = |t: f64| {
        let (s, c) = (k * t.to_radians()).sin_cos();
        [1.0, c, s]
    };
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for &(t, y) in samples {
        let b = basis(t);
        for i in 0..3 {
            atb[i] += b[i] * y;
            for j in 0..3 {
                ata[i][j] += b[i] * b[j];
            }
        }
    }
    let [c0, c1, c2] = solve3(ata, atb)?;
    let half_amp = c1.hypot(c2);
    let scale = samples.iter().map(|s| s.1.abs()).fold(0.0, f64::max);
    if !(half_amp > 1e-9 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Fit("no modulation in the samples".into()));
    }
    let mut delta = c2.atan2(c1).to_degrees() / k;
    if delta <= -period / 2.0 {
        delta += period;
    }
    let amplitude = 2.0 * half_amp;
    let baseline = c0 - half_amp;
    let rms = (samples
        .iter()
        .map(|&(t, y)| {
            let m = amplitude * (ell as f64 * (t - delta).to_radians()).cos().powi(2) + baseline;
            (y - m).powi(2)
        })
        .sum::<f64>()
        / samples.len() as f64)
        .sqrt();
    Ok(CalibrationFit {
        delta_deg: delta,
        amplitude,
        baseline,
        rms_residual: rms,
    })
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[piv][col].abs() <= 1e-12 * scale {
            return Err(Error::Fit("degenerate sample angles".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            let pivot = a[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synth(ell: u32, delta: f64, amp: f64, base: f64) -> Vec<(f64, f64)> {
        (0..=340)
            .map(|i| {
                let t = i as f64 * 0.1;
                (
                    t,
                    amp * (ell as f64 * (t - delta).to_radians()).cos().powi(2) + base,
                )
            })
            .collect()
    }

    #[test]
    fn noiseless_recovery() {
        let f = calibration_fit(&synth(10, 0.25, 3.0, 0.5), 10).unwrap();
        assert!((f.delta_deg - 0.25).abs() < 1e-9);
        assert!((f.amplitude - 3.0).abs() < 1e-9);
        assert!((f.baseline - 0.5).abs() < 1e-9);
        let f = calibration_fit(&synth(10, 0.0, 1.0, 0.0), 10).unwrap();
        assert!(f.delta_deg.abs() <= 1e-6);
    }

    #[test]
    fn offset_is_reduced_to_smallest_magnitude() {
        let f = calibration_fit(&synth(10, 17.5, 1.0, 0.0), 10).unwrap();
        assert!((f.delta_deg + 0.5).abs() < 1e-9, "{}", f.delta_deg);
    }

    #[test]
    fn noisy_recovery_over_seeds() {
        let noise = Normal::new(0.0, 0.01).unwrap();
        let clean = synth(10, -0.2, 1.0, 0.1);
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<_> = clean
                .iter()
                .map(|&(t, y)| (t, y + noise.sample(&mut rng)))
                .collect();
            let f = calibration_fit(&data, 10).unwrap();
            assert!(
                (f.delta_deg + 0.2).abs() < 0.05,
                "seed {seed}: {}",
                f.delta_deg
            );
        }
    }

    #[test]
    fn degenerate_inputs() {
        let flat: Vec<_> = (0..=340).map(|i| (i as f64 * 0.1, 2.0)).collect();
        assert!(matches!(calibration_fit(&flat, 10), Err(Error::Fit(_))));
        let short: Vec<_> = synth(10, 0.0, 1.0, 0.0).into_iter().take(50).collect();
        assert!(matches!(calibration_fit(&short, 10), Err(Error::Fit(_))));
        assert!(calibration_fit(&synth(10, 0.0, 1.0, 0.0), 0).is_err());
    }
}
