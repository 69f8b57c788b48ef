//! Scalar and field metrics derived from link responses.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coupling::emitter_to_detector;
use crate::geometry::Vec3;
use crate::scene::{Detector, FrequencyGrid, Scene};
use crate::{Error, Result};

/// How a linear magnitude is mapped to decibels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DbConvention {
    /// `20 log10 |H|`, the amplitude-response convention.
    #[default]
    #[serde(rename = "20log")]
    Amplitude,
    /// `10 log10 |H|`.
    #[serde(rename = "10log")]
    Power,
}

/// Decibel convention plus an additive offset used to register simulated
/// curves against differently calibrated measurements.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DbScale {
    pub convention: DbConvention,
    pub offset_db: f64,
}

impl DbScale {
    pub fn to_db(&self, magnitude: f64) -> f64 {
        let factor = match self.convention {
            DbConvention::Amplitude => 20.0,
            DbConvention::Power => 10.0,
        };
        factor * magnitude.log10() + self.offset_db
    }

    pub fn from_db(&self, db: f64) -> f64 {
        let factor = match self.convention {
            DbConvention::Amplitude => 20.0,
            DbConvention::Power => 10.0,
        };
        10f64.powf((db - self.offset_db) / factor)
    }
}

/// Gain at the grid sample nearest `f`.
pub fn gain_db(values: &[Complex64], grid: &FrequencyGrid, f: f64, scale: DbScale) -> f64 {
    scale.to_db(values[grid.nearest_index(f)].norm())
}

/// A complex response on an explicit frequency list, e.g. a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(freqs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if freqs.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} frequencies but {} samples",
                freqs.len(),
                values.len()
            )));
        }
        Ok(Self { freqs, values })
    }

    /// Real, non-negative samples carrying only the magnitude.
    pub fn from_amplitudes(freqs: Vec<f64>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            freqs,
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            freqs: self.freqs.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseMode {
    /// Differences of complex samples.
    #[default]
    Complex,
    /// Differences of magnitudes only, for phase-less measurements.
    Amplitude,
}

/// `100 * sum |H_m - H_s|^2 / sum |H_m|^2`, in percent.
pub fn relative_mse(measured: &Spectrum, simulated: &Spectrum, mode: MseMode) -> Result<f64> {
    if measured.freqs.len() != simulated.freqs.len() {
        return Err(Error::GridMismatch(format!(
            "{} vs {} samples",
            measured.freqs.len(),
            simulated.freqs.len()
        )));
    }
    for (i, (a, b)) in measured.freqs.iter().zip(&simulated.freqs).enumerate() {
        if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
            return Err(Error::GridMismatch(format!("sample {i}: {a} Hz vs {b} Hz")));
        }
    }
    let (mut err, mut reference) = (0.0, 0.0);
    for (m, s) in measured.values.iter().zip(&simulated.values) {
        let d = match mode {
            MseMode::Complex => (m - s).norm_sqr(),
            MseMode::Amplitude => (m.norm() - s.norm()).powi(2),
        };
        err += d;
        reference += m.norm_sqr();
    }
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * err / reference)
}

/// True when `mse_percent` is strictly below `threshold_percent`.
pub fn mse_passes(mse_percent: f64, threshold_percent: f64) -> bool {
    mse_percent < threshold_percent
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub x_step: f64,
    pub y_step: f64,
    pub height: f64,
    /// Area and FOV of the probe; it is always placed facing straight up.
    pub template: Detector,
}

/// Received DC optical power on a horizontal plane. `values[iy][ix]` in
/// watts at `(xs[ix], ys[iy], height)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub height: f64,
    pub values: Vec<Vec<f64>>,
}

impl Heatmap {
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for (iy, row) in self.values.iter().enumerate() {
            for (ix, &p) in row.iter().enumerate() {
                if p > v {
                    v = p;
                    best = (ix, iy);
                }
            }
        }
        best
    }
}

/// Cell-centered sample positions along an edge of length `len`, no further
/// apart than `step`.
fn cell_centers(len: f64, step: f64) -> Vec<f64> {
    let n = ((len / step) - 1e-9).ceil().max(1.0) as usize;
    let h = len / n as f64;
    (0..n).map(|i| (i as f64 + 0.5) * h).collect()
}

/// Sum over emitters of `optical_power * LOS DC gain` at every grid point.
pub fn dc_heatmap(scene: &Scene, spec: &HeatmapSpec) -> Result<Heatmap> {
    let room = scene.room();
    if !(spec.x_step > 0.0 && spec.y_step > 0.0) {
        return Err(Error::InvalidParameter {
            name: "step",
            reason: "heat map steps must be positive".into(),
        });
    }
    if !(spec.height > 0.0 && spec.height < room.height_z()) {
        return Err(Error::InvalidParameter {
            name: "height",
            reason: format!("{} m outside the room", spec.height),
        });
    }
    let xs = cell_centers(room.length_x(), spec.x_step);
    let ys = cell_centers(room.width_y(), spec.y_step);
    let up = Vec3::new(0.0, 0.0, 1.0);
    let mut values = Vec::with_capacity(ys.len());
    for &y in &ys {
        let mut row = Vec::with_capacity(xs.len());
        for &x in &xs {
            let probe = spec.template.placed(Vec3::new(x, y, spec.height), up)?;
            let mut p = 0.0;
            for tx in &scene.emitters {
                p += tx.optical_power * emitter_to_detector(tx, &probe)?.gain;
            }
            row.push(p);
        }
        values.push(row);
    }
    Ok(Heatmap {
        xs,
        ys,
        height: spec.height,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    /// One-sided Hann taper from 1 at DC to 0 at the top of the band.
    Hann,
}

/// Real impulse response sampled every `dt`; `taps` sum to `H(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    pub dt: f64,
    pub taps: Vec<f64>,
}

/// Hermitian-extends a response on a uniform grid `0, df, ..., K df` to
/// `2K` bins and inverts it. Time resolution is `1 / (2 f_max)`.
pub fn impulse_response(
    values: &[Complex64],
    grid: &FrequencyGrid,
    window: Window,
) -> Result<ImpulseResponse> {
    let freqs = grid.samples();
    if values.len() != freqs.len() {
        return Err(Error::GridMismatch(
            "response length differs from grid".into(),
        ));
    }
    if freqs.len() < 2 || freqs[0] != 0.0 {
        return Err(Error::InvalidParameter {
            name: "frequency_grid",
            reason: "impulse response needs a grid starting at DC with at least two samples".into(),
        });
    }
    let k_max = freqs.len() - 1;
    let df = freqs[k_max] / k_max as f64;
    if freqs
        .iter()
        .enumerate()
        .any(|(k, &f)| (f - k as f64 * df).abs() > 1e-6 * df)
    {
        return Err(Error::InvalidParameter {
            name: "frequency_grid",
            reason: "impulse response needs a uniformly spaced grid".into(),
        });
    }
    let weight = |k: usize| match window {
        Window::Rectangular => 1.0,
        Window::Hann => 0.5 * (1.0 + (PI * k as f64 / k_max as f64).cos()),
    };

    let m = 2 * k_max;
    let mut buf = vec![Complex64::default(); m];
    buf[0] = Complex64::new(values[0].re * weight(0), 0.0);
    for k in 1..k_max {
        let v = values[k] * weight(k);
        buf[k] = v;
        buf[m - k] = v.conj();
    }
    buf[k_max] = Complex64::new(values[k_max].re * weight(k_max), 0.0);

    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    Ok(ImpulseResponse {
        dt: 1.0 / (m as f64 * df),
        taps: buf.iter().map(|c| c.re * scale).collect(),
    })
}
