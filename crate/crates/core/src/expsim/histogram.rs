use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Search radius around the nominal zeroth-loop bin when locating peaks.
const PEAK_SEARCH_BINS: usize = 87;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGeometry {
    /// Seconds per bin.
    pub bin_width: f64,
    /// Nominal bin of the zeroth-loop peak.
    pub t0_bin: usize,
    pub window_bins: usize,
    pub peak_spacing_bins: usize,
    /// Leading bins used for the accidental estimate.
    pub lead_bins: usize,
    pub span: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramMeta {
    pub mode: String,
    pub budget: u64,
    pub seed: u64,
    pub repeat: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeHistogram {
    pub geometry: BinGeometry,
    pub counts: Vec<u64>,
    pub meta: HistogramMeta,
}

impl TimeHistogram {
    pub fn empty(geometry: BinGeometry, meta: HistogramMeta) -> Self {
        Self {
            counts: vec![0; geometry.span],
            geometry,
            meta,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `bin_index,count` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "bin_index,count")?;
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(w, "{i},{c}")?;
        }
        Ok(())
    }

    /// Counts from [`write_csv`](Self::write_csv) output; the geometry and
    /// metadata come from the sidecar.
    pub fn read_csv<R: BufRead>(r: R, geometry: BinGeometry, meta: HistogramMeta) -> Result<Self> {
        let mut counts = vec![0; geometry.span];
        for (lineno, line) in r.lines().enumerate().skip(1) {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = || -> Option<(usize, u64)> {
                let (a, b) = line.split_once(',')?;
                Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
            };
            let (i, c) = parse()
                .ok_or_else(|| Error::Config(format!("histogram line {}: {line:?}", lineno + 1)))?;
            *counts.get_mut(i).ok_or_else(|| {
                Error::Config(format!(
                    "histogram line {}: bin {i} beyond span",
                    lineno + 1
                ))
            })? = c;
        }
        Ok(Self {
            geometry,
            counts,
            meta,
        })
    }
}

/// Window centers: the zeroth-loop center, then fixed spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakGrid {
    pub center0: usize,
    pub spacing: usize,
    pub window: usize,
}

impl PeakGrid {
    pub fn nominal(g: &BinGeometry) -> Self {
        Self {
            center0: g.t0_bin,
            spacing: g.peak_spacing_bins,
            window: g.window_bins,
        }
    }

    /// Zeroth-loop maximum of the summed reference histograms.
    pub fn locate(reference: &[TimeHistogram]) -> Result<Self> {
        let first = reference
            .first()
            .ok_or_else(|| Error::Config("no reference histograms".into()))?;
        let g = first.geometry;
        check_same_geometry(reference, &g)?;
        let lo = g.t0_bin.saturating_sub(PEAK_SEARCH_BINS).max(g.lead_bins);
        let hi = (g.t0_bin + PEAK_SEARCH_BINS).min(g.span - 1);
        let summed = |b: usize| reference.iter().map(|h| h.counts[b]).sum::<u64>();
        let mut best = (g.t0_bin, 0u64);
        for b in lo..=hi {
            let c = summed(b);
            if c > best.1 {
                best = (b, c);
            }
        }
        Ok(Self {
            center0: best.0,
            ..Self::nominal(&g)
        })
    }

    pub fn window(&self, n: usize, span: usize) -> Result<std::ops::Range<usize>> {
        let half = self.window / 2;
        let center = self.center0 + n * self.spacing;
        if center < half || center + half >= span {
            return Err(Error::Range { loop_index: n });
        }
        Ok(center - half..center + half + 1)
    }
}

pub(crate) fn check_same_geometry(hists: &[TimeHistogram], g: &BinGeometry) -> Result<()> {
    if let Some(h) = hists
        .iter()
        .find(|h| h.geometry != *g || h.counts.len() != g.span)
    {
        return Err(Error::Config(format!(
            "histogram {} (repeat {}) has a different bin geometry",
            h.meta.mode, h.meta.repeat
        )));
    }
    Ok(())
}

/// Raw counts summed over the window of loop `n`.
pub fn window_counts(hist: &TimeHistogram, grid: &PeakGrid, n: usize) -> Result<u64> {
    Ok(hist.counts[grid.window(n, hist.counts.len())?].iter().sum())
}

/// Mean counts per bin over the leading accidental region, `Ā`.
pub fn estimate_accidentals(hist: &TimeHistogram) -> Result<f64> {
    let lead = hist.geometry.lead_bins;
    if lead == 0 || lead > hist.counts.len() {
        return Err(Error::Config(
            "histogram has no accidental lead region".into(),
        ));
    }
    Ok(hist.counts[..lead].iter().sum::<u64>() as f64 / lead as f64)
}

/// `Σ_window (C_b − Ā)`; negative values are kept.
pub fn loop_counts_corrected(hist: &TimeHistogram, grid: &PeakGrid, n: usize) -> Result<f64> {
    let raw = window_counts(hist, grid, n)? as f64;
    Ok(raw - grid.window as f64 * estimate_accidentals(hist)?)
}
