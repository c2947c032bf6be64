//! Scalar fields on a square grid, and the phase-only holograms that carve
//! them out of a Gaussian beam or project onto them.
//!
//! Samples are row-major, `values[iy * n + ix]`, at `x = (ix − n/2)·pitch`
//! so that the optical axis falls on a sample. Propagation between the
//! hologram and the fiber is ideal imaging.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::photonic::PetalSign;

pub const DEFAULT_GRID_N: usize = 512;
/// Grid side length in units of the largest waist.
pub const DEFAULT_EXTENT_WAISTS: f64 = 8.0;
const INV_SINC_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    pitch: f64,
}

impl Grid {
    pub fn new(n: usize, pitch: f64) -> Result<Self> {
        if n < 2 || !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::Grid(format!(
                "need n >= 2 and pitch > 0, got {n}, {pitch}"
            )));
        }
        Ok(Self { n, pitch })
    }

    /// `n × n` grid spanning [`DEFAULT_EXTENT_WAISTS`] times `waist`.
    pub fn for_waist(n: usize, waist: f64) -> Result<Self> {
        Self::new(n, DEFAULT_EXTENT_WAISTS * waist / n as f64)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.pitch
    }

    pub fn xy(&self, idx: usize) -> (f64, f64) {
        (self.coord(idx % self.n), self.coord(idx / self.n))
    }

    pub fn half_extent(&self) -> f64 {
        (self.n / 2) as f64 * self.pitch
    }

    fn same_as(&self, other: &Grid) -> Result<()> {
        if self.n != other.n || (self.pitch - other.pitch).abs() > 1e-12 * self.pitch {
            return Err(Error::Grid(format!(
                "{}x{} @ {:e} m vs {}x{} @ {:e} m",
                self.n, self.n, self.pitch, other.n, other.n, other.pitch
            )));
        }
        Ok(())
    }

    fn map<T: Send>(&self, f: impl Fn(f64, f64) -> T + Sync) -> Vec<T> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (x, y) = self.xy(i);
                f(x, y)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<C64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "{} samples for a {}x{} grid",
                values.len(),
                grid.n,
                grid.n
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let values = grid.map(f);
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> C64 {
        self.values[iy * self.grid.n + ix]
    }

    /// `Σ |ψ|² · pitch²`.
    pub fn power(&self) -> f64 {
        self.values.par_iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.pitch.powi(2)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let p = self.power();
        if !(p > 0.0) {
            return Err(Error::Normalization("field has zero power".into()));
        }
        let s = 1.0 / p.sqrt();
        self.values.par_iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `⟨self|other⟩ = Σ conj(self)·other · pitch²`.
    pub fn inner(&self, other: &ScalarField) -> Result<C64> {
        self.grid.same_as(&other.grid)?;
        let s: C64 = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.pitch.powi(2))
    }

    /// `|⟨a|b⟩| / (‖a‖‖b‖)`, insensitive to scale and global phase.
    pub fn fidelity_amplitude(&self, other: &ScalarField) -> Result<f64> {
        let denom = (self.power() * other.power()).sqrt();
        if !(denom > 0.0) {
            return Err(Error::Normalization("zero-power field in overlap".into()));
        }
        Ok(self.inner(other)?.norm() / denom)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Field rotated counter-clockwise by `angle` radians about the axis,
    /// resampled by bicubic convolution; samples mapped from outside the grid
    /// are zero.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let g = self.grid;
        let half = (g.n / 2) as f64;
        let values = g.map(|x, y| {
            let u = (c * x + s * y) / g.pitch + half;
            let v = (-s * x + c * y) / g.pitch + half;
            self.sample_cubic(u, v)
        });
        Self { grid: g, values }
    }

    fn sample_cubic(&self, u: f64, v: f64) -> C64 {
        let n = self.grid.n as isize;
        let (iu, iv) = (u.floor() as isize, v.floor() as isize);
        let (fu, fv) = (u - iu as f64, v - iv as f64);
        let (wu, wv) = (keys_weights(fu), keys_weights(fv));
        let mut acc = C64::new(0.0, 0.0);
        for (j, wy) in wv.iter().enumerate() {
            let yy = iv - 1 + j as isize;
            if yy < 0 || yy >= n {
                continue;
            }
            for (i, wx) in wu.iter().enumerate() {
                let xx = iu - 1 + i as isize;
                if xx < 0 || xx >= n {
                    continue;
                }
                acc += self.values[yy as usize * n as usize + xx as usize] * (wx * wy);
            }
        }
        acc
    }

    /// Header `grid_n: u64`, `pitch: f64`, then interleaved `re, im` as
    /// `f64`, all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.pitch.to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let grid = Grid::new(n, f64::from_le_bytes(b8))?;
        let mut buf = vec![0u8; grid.len() * 16];
        r.read_exact(&mut buf)?;
        let values = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                C64::new(re, im)
            })
            .collect();
        Self::new(grid, values)
    }

    /// `ix,iy,x,y,intensity,phase` rows for plotting.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "ix,iy,x,y,intensity,phase")?;
        for (i, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.xy(i);
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{}",
                i % self.grid.n,
                i / self.grid.n,
                x,
                y,
                v.norm_sqr(),
                v.arg()
            )?;
        }
        Ok(())
    }
}

/// Cubic convolution kernel weights (a = −1/2) for taps at −1, 0, 1, 2.
fn keys_weights(t: f64) -> [f64; 4] {
    const A: f64 = -0.5;
    let near = |x: f64| ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0;
    let far = |x: f64| ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A;
    [far(1.0 + t), near(t), near(1.0 - t), far(2.0 - t)]
}

fn check_resolution(ell: i32, w: f64, grid: &Grid) -> Result<()> {
    let need = 8.0 * grid.pitch * ((ell.unsigned_abs() + 1) as f64).sqrt();
    if !(w > 0.0) || w < need {
        return Err(Error::Resolution(format!(
            "waist {w:e} m < {need:e} m required for |l| = {}",
            ell.unsigned_abs()
        )));
    }
    Ok(())
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Radial-index-zero Laguerre–Gaussian mode with unit power:
/// `√(2/(π|ℓ|!))/w · (r√2/w)^|ℓ| · e^{−r²/w²} · e^{iℓϕ}`.
pub fn lg_field(ell: i32, w: f64, grid: &Grid) -> Result<ScalarField> {
    check_resolution(ell, w, grid)?;
    let m = ell.unsigned_abs();
    let norm = (2.0 / (PI * factorial(m))).sqrt() / w;
    Ok(ScalarField::from_fn(*grid, move |x, y| {
        let r2 = x * x + y * y;
        let radial = norm * (2.0 * r2 / (w * w)).powf(m as f64 / 2.0) * (-r2 / (w * w)).exp();
        C64::from_polar(radial, ell as f64 * y.atan2(x))
    }))
}

/// `(LG_{+ℓ} ± LG_{−ℓ})/√2`, with `2ℓ` azimuthal lobes.
pub fn petal_field(ell: u32, sign: PetalSign, w: f64, grid: &Grid) -> Result<ScalarField> {
    if ell == 0 {
        return Err(Error::InvalidParameter("petal modes need l >= 1".into()));
    }
    let plus = lg_field(ell as i32, w, grid)?;
    let minus = lg_field(-(ell as i32), w, grid)?;
    let s = match sign {
        PetalSign::Plus => 1.0,
        PetalSign::Minus => -1.0,
    };
    let values = plus
        .values
        .iter()
        .zip(&minus.values)
        .map(|(a, b)| (a + b * s) * std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    ScalarField::new(*grid, values)
}

/// Equal superposition `Σ_j p^±_{ℓ_j} / √d`.
pub fn petal_superposition(
    ells: &[u32],
    sign: PetalSign,
    w: f64,
    grid: &Grid,
) -> Result<ScalarField> {
    if ells.is_empty() {
        return Err(Error::InvalidParameter("OAM set is empty".into()));
    }
    let mut acc = petal_field(ells[0], sign, w, grid)?;
    for &l in &ells[1..] {
        acc = acc.add(&petal_field(l, sign, w, grid)?)?;
    }
    Ok(acc.scaled(1.0 / (ells.len() as f64).sqrt()))
}

/// Peak-normalized Gaussian amplitude `A_G = e^{−r²/w²}`.
pub fn gaussian_amplitude(w: f64, grid: &Grid) -> Vec<f64> {
    grid.map(|x, y| (-(x * x + y * y) / (w * w)).exp())
}

/// Unit-power Gaussian `Ψ_G = √(2/π)/w · A_G`.
pub fn gaussian_field(w: f64, grid: &Grid) -> Result<ScalarField> {
    lg_field(0, w, grid)
}

/// Unnormalized `sin(x)/x`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Inverse of [`sinc`] on `[−π, 0]`, by bisection.
pub fn inv_sinc(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("inv_sinc({y}): need y in [0, 1]")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Ok(-PI);
    }
    // sinc increases from 0 at −π to 1 at 0.
    let (mut lo, mut hi) = (-PI, 0.0);
    for _ in 0..INV_SINC_ITERS {
        let mid = 0.5 * (lo + hi);
        if sinc(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest `|A| / A_G(w_in)` over the grid and where it occurs.
pub fn envelope_ratio(target: &ScalarField, w_in: f64) -> (f64, f64, f64) {
    let g = target.grid;
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = g.xy(i);
            let a = target.values[i].norm();
            let ratio = if a == 0.0 {
                0.0
            } else {
                a / (-(x * x + y * y) / (w_in * w_in)).exp()
            };
            (ratio, x, y)
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a })
}

/// `target` rescaled so its largest envelope ratio is `fill ≤ 1`.
pub fn fit_to_envelope(target: &ScalarField, w_in: f64, fill: f64) -> Result<ScalarField> {
    if !(fill > 0.0 && fill <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fill {fill} not in (0, 1]"
        )));
    }
    let (ratio, _, _) = envelope_ratio(target, w_in);
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::Normalization(
            "target has no amplitude inside the envelope".into(),
        ));
    }
    Ok(target.scaled(fill / ratio))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HologramSpec {
    pub target: ScalarField,
    pub w_in: f64,
    pub grating_period: f64,
    /// Modulation depth `M ∈ [0, 1]`.
    pub m: Vec<f64>,
    /// Phase offset `F = Φ − πM`.
    pub f: Vec<f64>,
    /// Displayed phase `M · mod(F + 2πx/Λ, 2π)`, in `[0, 2π)`.
    pub phase: Vec<f64>,
}

/// Phase-only hologram carving `target` (in peak-normalized input units)
/// out of a Gaussian of waist `w_in`.
pub fn hologram_phase(
    target: &ScalarField,
    w_in: f64,
    grating_period: f64,
) -> Result<HologramSpec> {
    if !(w_in > 0.0 && grating_period > 0.0) {
        return Err(Error::InvalidParameter(
            "w_in and grating period must be positive".into(),
        ));
    }
    let (ratio, x, y) = envelope_ratio(target, w_in);
    if ratio > 1.0 + 1e-12 {
        return Err(Error::AmplitudeExceedsInput { ratio, x, y });
    }
    let g = target.grid;
    let mf: Vec<(f64, f64, f64)> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = g.xy(i);
            let v = target.values[i];
            let a = v.norm();
            let ag = (-(x * x + y * y) / (w_in * w_in)).exp();
            let r = if a == 0.0 { 0.0 } else { (a / ag).min(1.0) };
            let m = 1.0 + inv_sinc(r).expect("ratio clamped to [0, 1]") / PI;
            let phi = if a == 0.0 { 0.0 } else { v.arg() };
            let f = phi - PI * m;
            let carrier = (f + 2.0 * PI * x / grating_period).rem_euclid(2.0 * PI);
            (m, f, m * carrier)
        })
        .collect();
    let mut m = Vec::with_capacity(mf.len());
    let mut f = Vec::with_capacity(mf.len());
    let mut phase = Vec::with_capacity(mf.len());
    for (a, b, c) in mf {
        m.push(a);
        f.push(b);
        phase.push(c);
    }
    Ok(HologramSpec {
        target: target.clone(),
        w_in,
        grating_period,
        m,
        f,
        phase,
    })
}

/// `T₁ = −sinc(π(M−1)) · e^{i(F+πM)} · A_G(w_in)`.
pub fn first_order_field(holo: &HologramSpec) -> ScalarField {
    let g = holo.target.grid;
    let w = holo.w_in;
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = g.xy(i);
            let (m, f) = (holo.m[i], holo.f[i]);
            let ag = (-(x * x + y * y) / (w * w)).exp();
            -C64::from_polar(sinc(PI * (m - 1.0)) * ag, f + PI * m)
        })
        .collect();
    ScalarField { grid: g, values }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    /// State to project onto; the hologram displays its conjugate.
    pub measured_structure: ScalarField,
    pub w_out: f64,
    /// Divide the hologram by `A_G(w_out)` to undo the fiber-mode envelope.
    pub gaussian_correction: bool,
    /// Aperture radius; defaults to the grid half-extent.
    pub r_max: Option<f64>,
}

impl FilterSpec {
    pub fn new(measured_structure: ScalarField, w_out: f64) -> Result<Self> {
        if !(w_out > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "w_out {w_out} must be positive"
            )));
        }
        Ok(Self {
            measured_structure: measured_structure.normalized()?,
            w_out,
            gaussian_correction: true,
            r_max: None,
        })
    }
}

/// `∫ H_holo Ψ_in Ψ_G(w_out)` over `r ≤ r_max`, divided by the peak of
/// `Ψ_G` so that a corrected filter returns `⟨Ψ_meas|Ψ_in⟩`.
pub fn measurement_overlap(incident: &ScalarField, filter: &FilterSpec) -> Result<C64> {
    let g = incident.grid;
    g.same_as(&filter.measured_structure.grid)?;
    let r_max = filter.r_max.unwrap_or_else(|| g.half_extent());
    let w = filter.w_out;
    let corrected = filter.gaussian_correction;
    let s: C64 = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (x, y) = g.xy(i);
            let r2 = x * x + y * y;
            if r2 > r_max * r_max {
                return C64::new(0.0, 0.0);
            }
            // H·Ψ_G / peak(Ψ_G): the A_G factors cancel when corrected.
            let envelope = if corrected {
                1.0
            } else {
                (-r2 / (w * w)).exp()
            };
            filter.measured_structure.values[i].conj() * incident.values[i] * envelope
        })
        .sum();
    Ok(s * g.pitch.powi(2))
}
