//! Source images, the sensor transfer function and chip files.
//!
//! Point returns from either paradigm are splatted onto an oversampled
//! focusing grid (the source image: Dirac impulse response, no noise).
//! [`apply_sensor`] adds clutter, convolves with the window-weighted impulse
//! response, decimates to the output spacing and adds thermal noise.
//!
//! Image phases are referenced to the scene origin: a return at slant range
//! `r` carries `exp(-j2kr)`.

mod clutter;
mod ipr;
mod preview;
mod raster;
mod sensor;


pub use clutter::{pixel_ground_area, synth_clutter, ClutterFamily, ClutterModel};
pub use ipr::{Ipr, IprKernel, Window, RECT_HALF_POWER_WIDTH, SUPPORT_RESOLUTIONS};
pub use preview::{
    chip_bytes, chip_paths, read_chip, save_preview, sidecar_text, to_preview, write_chip,
    ChipHeader,
};
pub use raster::{rasterize, GridSpec, PointReturn, SourceImage};
pub use sensor::{
    apply_sensor, convolve, ipr_kernel, noise_power, ChipMetadata, RadarChip, SensorModel,
};

use num_complex::Complex64;

use crate::centers::M3dModel;
use crate::sbr::RayContribution;
use crate::scene::{AcquisitionGeometry, Polarization};
use crate::{Error, Result};

pub const DEFAULT_OVERSAMPLING: usize = 4;
pub const DEFAULT_CHIP_SIZE: usize = 128;

/// Point returns of traced paths for one channel. `plane_distance` is the
/// launch plane distance the paths were traced from.
pub fn returns_from_contributions(
    contributions: &[RayContribution],
    channel: Polarization,
    k: f64,
    plane_distance: f64,
) -> Vec<PointReturn> {
    let shift = Complex64::from_polar(1.0, 2.0 * k * plane_distance);
    contributions
        .iter()
        .map(|c| PointReturn {
            range: c.range,
            cross_range: c.cross_range,
            amplitude: c.amplitude(channel) * shift,
        })
        .collect()
}

/// Point returns of an M3D rendered at `geom`: directivity evaluated along
/// the rendering line of sight, positions projected into its frame.
pub fn returns_from_m3d(model: &M3dModel, geom: &AcquisitionGeometry) -> Result<Vec<PointReturn>> {
    if geom.polarization != model.geometry.polarization {
        return Err(Error::invalid(format!(
            "model built for {}, rendering requested {}",
            model.geometry.polarization, geom.polarization
        )));
    }
    let detect = model.geometry.frame()?;
    let frame = geom.frame()?;
    let k = geom.wavenumber();
    Ok(model
        .scatterers
        .iter()
        .map(|s| {
            let range = frame.range_of(&s.position);
            PointReturn {
                range,
                cross_range: frame.cross_range_of(&s.position),
                amplitude: s.amplitude_toward(&detect.los, &frame.los, k)
                    * Complex64::from_polar(1.0, -2.0 * k * range),
            }
        })
        .collect())
}

/// Output chip size and source-grid oversampling; the chip is centered on
/// the scene origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ChipLayout {
    pub rows: usize,
    pub cols: usize,
    pub oversampling: usize,
}

impl Default for ChipLayout {
    fn default() -> Self {
        ChipLayout {
            rows: DEFAULT_CHIP_SIZE,
            cols: DEFAULT_CHIP_SIZE,
            oversampling: DEFAULT_OVERSAMPLING,
        }
    }
}

impl ChipLayout {
    pub fn grid(&self, sensor: &SensorModel) -> Result<GridSpec> {
        GridSpec::for_output(
            self.rows,
            self.cols,
            sensor.pixel_spacing_m,
            self.oversampling,
            (0.0, 0.0),
        )
    }
}

/// Rasterize, add clutter, apply the sensor. `clutter` carries the model
/// and its seed.
pub fn render_chip(
    returns: &[PointReturn],
    layout: &ChipLayout,
    sensor: &SensorModel,
    depression_deg: f64,
    clutter: Option<(&ClutterModel, u64)>,
    noise_seed: Option<u64>,
) -> Result<RadarChip> {
    let grid = layout.grid(sensor)?;
    let source = rasterize(returns, &grid)?;
    render_source(&source, sensor, depression_deg, clutter, noise_seed)
}

pub(crate) fn render_source(
    source: &SourceImage,
    sensor: &SensorModel,
    depression_deg: f64,
    clutter: Option<(&ClutterModel, u64)>,
    noise_seed: Option<u64>,
) -> Result<RadarChip> {
    let field = clutter
        .map(|(model, seed)| synth_clutter(model, &source.grid, depression_deg, seed))
        .transpose()?;
    let mut chip = apply_sensor(source, field.as_ref(), sensor, depression_deg, noise_seed)?;
    if let Some((_, seed)) = clutter {
        chip.metadata.seeds.insert("clutter".into(), seed);
    }
    Ok(chip)
}
