use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use rayon::prelude::*;

use super::histogram::{BinGeometry, HistogramMeta, TimeHistogram};
use super::ExperimentConfig;
use crate::error::{Error, Result};

const PHOTONS_PER_CHUNK: u64 = 1 << 16;
const PURPOSE_PHOTONS: u64 = 0;
const PURPOSE_ACCIDENTALS: u64 = 1;

/// Independent ChaCha stream per (purpose, mode, repeat, chunk), so results do
/// not depend on how chunks are scheduled.
fn stream(seed: u64, purpose: u64, mode: u64, repeat: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 62) | (mode << 60) | ((repeat & 0xfff_ffff) << 32) | chunk);
    rng
}

/// One dataset (repeat 0).
pub fn simulate_run(cfg: &ExperimentConfig) -> Result<TimeHistogram> {
    simulate_repeat(cfg, 0)
}

/// `repeats` datasets with independent streams, in parallel.
pub fn simulate_repeats(cfg: &ExperimentConfig, repeats: u64) -> Result<Vec<TimeHistogram>> {
    cfg.validate()?;
    (0..repeats)
        .into_par_iter()
        .map(|r| simulate_repeat(cfg, r))
        .collect()
}

fn simulate_repeat(cfg: &ExperimentConfig, repeat: u64) -> Result<TimeHistogram> {
    let geom = cfg.validate()?;
    let meta = HistogramMeta {
        mode: cfg.mode.label(),
        budget: cfg.budget,
        seed: cfg.seed,
        repeat,
    };
    let mut hist = TimeHistogram::empty(geom, meta);
    let detect: Vec<f64> = (0..=cfg.n_max)
        .map(|n| cfg.detection_probability(n))
        .collect();
    let exits = Geometric::new(cfg.transmittance)
        .map_err(|e| Error::InvalidParameter(format!("transmittance: {e}")))?;
    let jitter = Jitter::new(cfg.jitter_sigma_bins, geom.window_bins / 2)?;
    let tag = cfg.mode.stream_tag();

    let n_chunks = cfg.budget.div_ceil(PHOTONS_PER_CHUNK);
    let signal = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = stream(cfg.seed, PURPOSE_PHOTONS, tag, repeat, chunk);
            let photons = PHOTONS_PER_CHUNK.min(cfg.budget - chunk * PHOTONS_PER_CHUNK);
            let mut counts = vec![0u64; geom.span];
            for _ in 0..photons {
                let n = if rng.random::<f64>() < cfg.reflectance {
                    0
                } else {
                    1 + exits.sample(&mut rng)
                };
                if n > cfg.n_max as u64 {
                    continue;
                }
                if rng.random::<f64>() >= detect[n as usize] {
                    continue;
                }
                let center = (geom.t0_bin + n as usize * geom.peak_spacing_bins) as i64;
                counts[(center + jitter.sample(&mut rng)) as usize] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; geom.span],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    hist.counts = signal;
    add_accidentals(cfg, &geom, repeat, &mut hist.counts)?;
    Ok(hist)
}

fn add_accidentals(
    cfg: &ExperimentConfig,
    geom: &BinGeometry,
    repeat: u64,
    counts: &mut [u64],
) -> Result<()> {
    let mean = cfg.accidental_mean_per_bin();
    if mean <= 0.0 {
        return Ok(());
    }
    let pois =
        Poisson::new(mean).map_err(|e| Error::InvalidParameter(format!("accidental rate: {e}")))?;
    let mut rng = stream(
        cfg.seed,
        PURPOSE_ACCIDENTALS,
        cfg.mode.stream_tag(),
        repeat,
        0,
    );
    for c in counts.iter_mut().take(geom.span) {
        *c += pois.sample(&mut rng) as u64;
    }
    Ok(())
}

/// Discrete Gaussian timing jitter truncated to `±half` bins.
struct Jitter {
    normal: Option<Normal<f64>>,
    half: i64,
}

impl Jitter {
    fn new(sigma: f64, half: usize) -> Result<Self> {
        let normal = if sigma > 0.0 {
            Some(
                Normal::new(0.0, sigma)
                    .map_err(|e| Error::InvalidParameter(format!("jitter: {e}")))?,
            )
        } else {
            None
        };
        Ok(Self {
            normal,
            half: half as i64,
        })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> i64 {
        let Some(normal) = &self.normal else {
            return 0;
        };
        loop {
            let j = normal.sample(rng).round() as i64;
            if j.abs() <= self.half {
                return j;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::histogram::{estimate_accidentals, window_counts, PeakGrid};
    use super::super::Mode;
    use super::*;
    use crate::photonic::{DoveConfig, LoopConfig};

    fn gaussian(budget: u64) -> ExperimentConfig {
        let lp = LoopConfig::lossless_split(50.0, 50.0, DoveConfig::from_degrees(18.0).unwrap())
            .unwrap();
        let mut c = ExperimentConfig::new(Mode::Gaussian, &lp, 6, budget, 11);
        c.r1_hz = 0.0;
        c
    }

    #[test]
    fn deterministic_and_scheduling_independent() {
        let c = gaussian(200_000);
        let a = simulate_run(&c).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_run(&c).unwrap());
        assert_eq!(a, b);
        let mut c2 = c.clone();
        c2.seed += 1;
        assert_ne!(simulate_run(&c2).unwrap().counts, a.counts);
    }

    #[test]
    fn zero_budget_is_empty() {
        let h = simulate_run(&gaussian(0)).unwrap();
        assert_eq!(h.total(), 0);
    }

    #[test]
    fn gaussian_loop_counts_follow_exit_law() {
        let budget = 1_000_000;
        let h = simulate_run(&gaussian(budget)).unwrap();
        let grid = PeakGrid::nominal(&h.geometry);
        for n in 0..=6usize {
            let expect = if n == 0 {
                0.5
            } else {
                0.25 * 0.5f64.powi(n as i32 - 1)
            } * budget as f64;
            let got = window_counts(&h, &grid, n).unwrap() as f64;
            let sd = (expect * (1.0 - expect / budget as f64)).sqrt();
            assert!(
                (got - expect).abs() < 4.0 * sd,
                "n = {n}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn accidental_floor_matches_rate() {
        let mut c = gaussian(10_000);
        c.r1_hz = 1e6;
        c.r2_hz = 1e4;
        c.budget = 10_000_000;
        // Only the floor matters here; photons are cheap at this size.
        let h = simulate_run(&c).unwrap();
        let mean = c.accidental_mean_per_bin();
        assert!((mean - 1.3).abs() < 1e-12);
        let a = estimate_accidentals(&h).unwrap();
        let sd = (mean / h.geometry.lead_bins as f64).sqrt();
        assert!((a - mean).abs() < 3.0 * sd, "{a} vs {mean}");
    }

    #[test]
    fn jitter_stays_inside_window() {
        let j = Jitter::new(5.0, 38).unwrap();
        let mut rng = stream(3, 0, 0, 0, 0);
        let xs: Vec<i64> = (0..100_000).map(|_| j.sample(&mut rng)).collect();
        assert!(xs.iter().all(|x| x.abs() <= 38));
        let var = xs.iter().map(|&x| (x * x) as f64).sum::<f64>() / xs.len() as f64;
        assert!((var.sqrt() - 5.0).abs() < 0.1);
    }
}
