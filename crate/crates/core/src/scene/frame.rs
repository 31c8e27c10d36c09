//! Acquisition geometry and the line-of-sight frame.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

/// Transmit/receive channel, written transmit-first (`HV`: transmit H,
/// receive V). Channel index order is `HH, HV, VH, VV`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Polarization {
    pub transmit: Pol,
    pub receive: Pol,
}

impl Polarization {
    pub const HH: Polarization = Polarization {
        transmit: Pol::H,
        receive: Pol::H,
    };
    pub const HV: Polarization = Polarization {
        transmit: Pol::H,
        receive: Pol::V,
    };
    pub const VH: Polarization = Polarization {
        transmit: Pol::V,
        receive: Pol::H,
    };
    pub const VV: Polarization = Polarization {
        transmit: Pol::V,
        receive: Pol::V,
    };
    pub const ALL: [Polarization; 4] = [Self::HH, Self::HV, Self::VH, Self::VV];

    pub fn index(self) -> usize {
        let t = matches!(self.transmit, Pol::V) as usize;
        let r = matches!(self.receive, Pol::V) as usize;
        2 * t + r
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.transmit, self.receive)
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown polarization `{s}`")))
    }
}

/// Monostatic acquisition geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionGeometry {
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub frequency_hz: f64,
    pub polarization: Polarization,
}

impl AcquisitionGeometry {
    /// Azimuth is wrapped into `[0, 360)`.
    pub fn new(
        azimuth_deg: f64,
        depression_deg: f64,
        frequency_hz: f64,
        polarization: Polarization,
    ) -> Result<Self> {
        let geom = AcquisitionGeometry {
            azimuth_deg: azimuth_deg.rem_euclid(360.0),
            depression_deg,
            frequency_hz,
            polarization,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// X band, HH.
    pub fn x_band(azimuth_deg: f64, depression_deg: f64) -> Result<Self> {
        Self::new(azimuth_deg, depression_deg, 10e9, Polarization::HH)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.azimuth_deg.is_finite() && (0.0..360.0).contains(&self.azimuth_deg)) {
            return Err(Error::invalid(format!(
                "azimuth {} outside [0, 360)",
                self.azimuth_deg
            )));
        }
        if !(self.depression_deg >= 0.0 && self.depression_deg <= 90.0) {
            return Err(Error::invalid(format!(
                "depression {} outside [0, 90]",
                self.depression_deg
            )));
        }
        let lambda = self.wavelength();
        if !(self.frequency_hz > 0.0 && lambda.is_finite() && lambda > 0.0) {
            return Err(Error::invalid(format!(
                "frequency {} Hz gives no finite wavelength",
                self.frequency_hz
            )));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength()
    }

    pub fn with_azimuth(&self, azimuth_deg: f64) -> Result<Self> {
        Self::new(
            azimuth_deg,
            self.depression_deg,
            self.frequency_hz,
            self.polarization,
        )
    }

    pub fn frame(&self) -> Result<LosFrame> {
        los_frame(self)
    }
}

/// Orthonormal right-handed triad attached to the line of sight.
///
/// `los` points from the scene origin toward the sensor, `cross` is the
/// horizontal cross-range axis `ẑ × los` normalized, and `elevation =
/// los × cross` completes the image plane perpendicular to `los`.
/// Horizontal polarization is along `cross`, vertical along `elevation`,
/// for both transmit and receive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LosFrame {
    pub los: Vec3,
    pub cross: Vec3,
    pub elevation: Vec3,
}

impl LosFrame {
    /// Slant-range coordinate of `p`; grows away from the sensor.
    pub fn range_of(&self, p: &Vec3) -> f64 {
        -self.los.dot(p)
    }

    pub fn cross_range_of(&self, p: &Vec3) -> f64 {
        self.cross.dot(p)
    }

    pub fn receive_vector(&self, pol: Pol) -> Vec3 {
        match pol {
            Pol::H => self.cross,
            Pol::V => self.elevation,
        }
    }
}

pub fn los_frame(geom: &AcquisitionGeometry) -> Result<LosFrame> {
    geom.validate()?;
    if geom.depression_deg >= 90.0 {
        return Err(Error::DegenerateFrame);
    }
    let (sa, ca) = geom.azimuth_deg.to_radians().sin_cos();
    let (sd, cd) = geom.depression_deg.to_radians().sin_cos();
    let los = Vec3::new(cd * ca, cd * sa, sd);
    let cross = Vec3::z().cross(&los).normalize();
    let elevation = los.cross(&cross);
    Ok(LosFrame {
        los,
        cross,
        elevation,
    })
}
