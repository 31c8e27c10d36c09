//! Statistical background clutter added to the source image.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::raster::{GridSpec, SourceImage};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClutterFamily {
    /// Circular Gaussian field, Rayleigh magnitude.
    Rayleigh,
    /// Weibull magnitude with the given shape, uniform phase.
    Weibull { shape: f64 },
    /// Gaussian speckle modulated by a unit-mean Gamma texture of shape `nu`.
    K { nu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterModel {
    #[serde(flatten)]
    pub family: ClutterFamily,
    pub mean_sigma0_db: f64,
}

impl ClutterModel {
    pub fn validate(&self) -> Result<()> {
        if !self.mean_sigma0_db.is_finite() {
            return Err(Error::invalid("clutter σ0 must be finite"));
        }
        match self.family {
            ClutterFamily::Rayleigh => Ok(()),
            ClutterFamily::Weibull { shape } if shape > 0.0 && shape.is_finite() => Ok(()),
            ClutterFamily::K { nu } if nu > 0.0 && nu.is_finite() => Ok(()),
            _ => Err(Error::invalid(format!(
                "invalid clutter shape in {:?}",
                self.family
            ))),
        }
    }
}

/// Ground area of one source pixel, m².
pub fn pixel_ground_area(grid: &GridSpec, depression_deg: f64) -> Result<f64> {
    let c = depression_deg.to_radians().cos();
    if !(c > 1e-9) {
        return Err(Error::invalid(
            "pixel ground area undefined at depression 90",
        ));
    }
    Ok(grid.range_spacing_m * grid.cross_spacing_m / c)
}

/// I.i.d. clutter field with mean power `σ0 · pixel ground area`.
pub fn synth_clutter(
    model: &ClutterModel,
    grid: &GridSpec,
    depression_deg: f64,
    seed: u64,
) -> Result<SourceImage> {
    model.validate()?;
    grid.validate()?;
    let power = crate::from_db(model.mean_sigma0_db) * pixel_ground_area(grid, depression_deg)?;
    let mut rng = crate::rng::stream(seed, 0);
    let mut field = SourceImage::zeros(*grid);
    let gaussian = |rng: &mut rand_chacha::ChaCha8Rng, p: f64| {
        let s = (0.5 * p).sqrt();
        let (re, im): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        Complex64::new(s * re, s * im)
    };
    match model.family {
        ClutterFamily::Rayleigh => {
            for z in &mut field.data {
                *z = gaussian(&mut rng, power);
            }
        }
        ClutterFamily::Weibull { shape } => {
            let scale = (power / gamma(1.0 + 2.0 / shape)).sqrt();
            let dist = Weibull::new(scale, shape).map_err(|e| Error::invalid(e.to_string()))?;
            for z in &mut field.data {
                let mag = dist.sample(&mut rng);
                *z = Complex64::from_polar(mag, rng.random_range(0.0..2.0 * PI));
            }
        }
        ClutterFamily::K { nu } => {
            let texture = Gamma::new(nu, 1.0 / nu).map_err(|e| Error::invalid(e.to_string()))?;
            for z in &mut field.data {
                let tau = texture.sample(&mut rng);
                *z = gaussian(&mut rng, power * tau);
            }
        }
    }
    Ok(field)
}
