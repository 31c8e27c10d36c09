//! Sensor transfer function: impulse response, thermal noise, decimation.
//!
//! Calibration is referenced to the peak: a unit-amplitude point return
//! centered on an output pixel produces `calibration` at that pixel. The
//! thermal noise power per output pixel equals the mean power a distributed
//! target of reflectivity NESigma0 would produce after the same chain.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use super::clutter::pixel_ground_area;
use super::ipr::{Ipr, IprKernel, Window};
use super::raster::{GridSpec, SourceImage};
use crate::fft::fft2;
use crate::scene::AcquisitionGeometry;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub range_resolution_m: f64,
    pub cross_range_resolution_m: f64,
    /// Output pixel spacing on both axes, m.
    pub pixel_spacing_m: f64,
    pub window: Window,
    pub nesigma0_db: f64,
    /// Output amplitude per √m² of point return.
    pub calibration: f64,
}

impl SensorModel {
    /// 0.3 m resolution, 0.2 m pixels, Taylor −35 dB / n̄ = 4.
    pub fn mstar_like() -> Self {
        SensorModel {
            range_resolution_m: 0.3,
            cross_range_resolution_m: 0.3,
            pixel_spacing_m: 0.2,
            window: Window::Taylor {
                sidelobe_db: -35.0,
                nbar: 4,
            },
            nesigma0_db: -32.0,
            calibration: 1.0,
        }
    }

    /// The MSTAR-like sensor without spectral weighting.
    pub fn rectangular() -> Self {
        SensorModel {
            window: Window::Rectangular,
            ..Self::mstar_like()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "mstar_like" => Ok(Self::mstar_like()),
            "rectangular" => Ok(Self::rectangular()),
            other => Err(Error::invalid(format!("unknown sensor preset `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if !(self.pixel_spacing_m > 0.0 && self.pixel_spacing_m.is_finite()) {
            return Err(Error::invalid("pixel spacing must be > 0"));
        }
        for res in [self.range_resolution_m, self.cross_range_resolution_m] {
            if !(res.is_finite() && res >= self.pixel_spacing_m) {
                return Err(Error::invalid(format!(
                    "resolution {res} m is finer than the {} m pixel spacing",
                    self.pixel_spacing_m
                )));
            }
        }
        if !(self.calibration > 0.0 && self.calibration.is_finite()) {
            return Err(Error::invalid("calibration must be > 0"));
        }
        if !crate::from_db(self.nesigma0_db).is_finite() || self.nesigma0_db.is_nan() {
            return Err(Error::invalid("NESigma0 gives a non-finite noise power"));
        }
        Ok(())
    }

    /// Source-grid spacing for `oversampling`.
    pub fn source_spacing(&self, oversampling: usize) -> f64 {
        self.pixel_spacing_m / oversampling as f64
    }
}

/// Separable impulse response sampled on the oversampled grid.
pub fn ipr_kernel(sensor: &SensorModel, oversampling: usize) -> Result<IprKernel> {
    sensor.validate()?;
    if oversampling < 1 {
        return Err(Error::invalid("oversampling must be >= 1"));
    }
    let ds = sensor.source_spacing(oversampling);
    let axis = |res: f64| Ipr::new(res, &sensor.window)?.taps(res, ds);
    Ok(IprKernel {
        range: axis(sensor.range_resolution_m)?,
        cross: axis(sensor.cross_range_resolution_m)?,
    })
}

/// Everything needed to reproduce a chip.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChipMetadata {
    pub label: String,
    pub paradigm: String,
    pub geometry: Option<AcquisitionGeometry>,
    pub seeds: BTreeMap<String, u64>,
    pub sensor: Option<SensorModel>,
    pub oversampling: usize,
    /// Concrete draw of a randomization policy, for replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randomized: Option<crate::augment::RandomizedParams>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

/// Decimated complex radar image.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarChip {
    pub rows: usize,
    pub cols: usize,
    pub range_spacing_m: f64,
    pub cross_spacing_m: f64,
    /// `(range, cross_range)` of pixel `(rows/2, cols/2)`.
    pub origin: (f64, f64),
    pub data: Vec<Complex64>,
    pub metadata: ChipMetadata,
}

impl RadarChip {
    pub fn magnitude(&self) -> Vec<f32> {
        self.data.iter().map(|z| z.norm() as f32).collect()
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }
}

fn padded_spectrum(taps: &[f64], n: usize) -> Vec<Complex64> {
    let half = taps.len() / 2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &h) in taps.iter().enumerate() {
        let idx = (i as isize - half as isize).rem_euclid(n as isize) as usize;
        buf[idx] += Complex64::new(h, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Linear convolution of a `rows × cols` grid with the separable kernel,
/// same size as the input, computed spectrally on a grid padded by the
/// kernel half-width on every side.
pub fn convolve(
    data: &[Complex64],
    rows: usize,
    cols: usize,
    kernel: &IprKernel,
) -> Vec<Complex64> {
    let (lr, lc) = (kernel.range_half(), kernel.cross_half());
    let (pr, pc) = (rows + 2 * lr, cols + 2 * lc);
    let mut buf = vec![Complex64::new(0.0, 0.0); pr * pc];
    for r in 0..rows {
        buf[r * pc..r * pc + cols].copy_from_slice(&data[r * cols..(r + 1) * cols]);
    }
    fft2(&mut buf, pr, pc, FftDirection::Forward);
    let hr = padded_spectrum(&kernel.range, pr);
    let hc = padded_spectrum(&kernel.cross, pc);
    for (r, row) in buf.chunks_exact_mut(pc).enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v *= hr[r] * hc[c];
        }
    }
    fft2(&mut buf, pr, pc, FftDirection::Inverse);
    let scale = 1.0 / (pr * pc) as f64;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        out.extend(buf[r * pc..r * pc + cols].iter().map(|v| v * scale));
    }
    out
}

/// Thermal noise power per output pixel.
pub fn noise_power(
    sensor: &SensorModel,
    kernel: &IprKernel,
    grid: &GridSpec,
    depression_deg: f64,
) -> Result<f64> {
    let area = pixel_ground_area(grid, depression_deg)?;
    let p = crate::from_db(sensor.nesigma0_db) * area * kernel.energy()
        / kernel.center_gain().powi(2)
        * sensor.calibration.powi(2);
    if !p.is_finite() {
        return Err(Error::invalid("NESigma0 gives a non-finite noise power"));
    }
    Ok(p)
}

/// Convolves `source + clutter` with the impulse response, decimates by the
/// grid oversampling and adds thermal noise when `noise_seed` is given.
pub fn apply_sensor(
    source: &SourceImage,
    clutter: Option<&SourceImage>,
    sensor: &SensorModel,
    depression_deg: f64,
    noise_seed: Option<u64>,
) -> Result<RadarChip> {
    sensor.validate()?;
    let grid = source.grid;
    grid.validate()?;
    let osf = grid.oversampling;
    let ds = sensor.source_spacing(osf);
    for (name, s) in [
        ("range", grid.range_spacing_m),
        ("cross-range", grid.cross_spacing_m),
    ] {
        if ((s - ds) / ds).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!(
                "{name} spacing {s} m, sensor expects {ds} m at oversampling {osf}"
            )));
        }
    }
    let mut field = source.data.clone();
    if let Some(c) = clutter {
        if !c.grid.same_layout(&grid) {
            return Err(Error::GridMismatch(
                "clutter and source grids differ".into(),
            ));
        }
        for (f, z) in field.iter_mut().zip(&c.data) {
            *f += z;
        }
    }
    let kernel = ipr_kernel(sensor, osf)?;
    let (out_rows, out_cols) = (grid.output_rows(), grid.output_cols());
    let gain = sensor.calibration / kernel.center_gain();
    let mut data = vec![Complex64::new(0.0, 0.0); out_rows * out_cols];
    if field.iter().any(|z| *z != Complex64::new(0.0, 0.0)) {
        let focused = convolve(&field, grid.rows, grid.cols, &kernel);
        for r in 0..out_rows {
            for c in 0..out_cols {
                data[r * out_cols + c] = focused[(r * osf) * grid.cols + c * osf] * gain;
            }
        }
    }
    let mut seeds = BTreeMap::new();
    if let Some(seed) = noise_seed {
        let p = noise_power(sensor, &kernel, &grid, depression_deg)?;
        let s = (0.5 * p).sqrt();
        let mut rng = crate::rng::stream(seed, 0);
        for z in &mut data {
            let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            *z += Complex64::new(s * re, s * im);
        }
        seeds.insert("noise".to_string(), seed);
    }
    Ok(RadarChip {
        rows: out_rows,
        cols: out_cols,
        range_spacing_m: grid.range_spacing_m * osf as f64,
        cross_spacing_m: grid.cross_spacing_m * osf as f64,
        origin: grid.origin,
        data,
        metadata: ChipMetadata {
            seeds,
            sensor: Some(*sensor),
            oversampling: osf,
            ..ChipMetadata::default()
        },
    })
}
