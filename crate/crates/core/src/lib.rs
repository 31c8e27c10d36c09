//! Radar target signature simulation.
//!
//! Two independent routes from a meshed target to a radar image chip:
//!
//! * [`sbr`] traces shooting-and-bouncing rays through the scene with
//!   geometrical optics and evaluates physical optics on the last facet of
//!   every path;
//! * [`centers`] detects canonical scattering effects (plates, dihedrals,
//!   trihedrals) on the mesh, evaluates them analytically and fills the
//!   visible surface with non-coherent backscatter, producing a scatterer
//!   list valid for one acquisition geometry.
//!
//! Both outputs are rasterized into an oversampled source image and turned
//! into chips by the sensor model in [`imaging`]. [`augment`] randomizes the
//! sensor and scene parameters per generated chip.
//!
//! Conventions shared by every module:
//!
//! * right-handed target frame, `z` up, lengths in meters;
//! * azimuth is measured from `+x` toward `+y`, depression above the horizon,
//!   both in degrees at API boundaries;
//! * time dependence `exp(+jωt)`: a path of length `L` carries the phase
//!   `exp(-j 2π L / λ)` and lossy dielectrics have `Im(ε) ≤ 0`.

pub mod augment;
pub mod centers;
mod error;
mod fft;
pub mod imaging;
pub mod rng;
pub mod sbr;
pub mod scene;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn to_db(power: f64) -> f64 {
    10.0 * power.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
