//! Window-weighted band-limited impulse response.
//!
//! A band of width `B` weighted by `W(p) = 1 + 2 Σ F_m cos(2π m p)`,
//! `p ∈ [-1/2, 1/2]`, transforms to
//! `g(x) = sinc(πBx) + Σ F_m [sinc(π(Bx + m)) + sinc(π(Bx - m))]`.
//! The band is set so that the unweighted response has its −3 dB width at
//! the nominal resolution: `B = κ / ρ` with `κ` the half-power width of
//! `sin(πu)/(πu)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Half-power full width of `sin(πu)/(πu)`.
pub const RECT_HALF_POWER_WIDTH: f64 = 0.885_892_941_378_132_8;

/// Kernel half-support, in resolution cells.
pub const SUPPORT_RESOLUTIONS: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Taylor { sidelobe_db: f64, nbar: u32 },
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        if let Window::Taylor { sidelobe_db, nbar } = *self {
            if !(sidelobe_db < -20.0 && sidelobe_db.is_finite()) {
                return Err(Error::invalid("Taylor sidelobe level must be below -20 dB"));
            }
            if nbar < 2 {
                return Err(Error::invalid("Taylor nbar must be >= 2"));
            }
        }
        Ok(())
    }

    /// Cosine-series coefficients `F_1 .. F_{nbar-1}`.
    pub fn coefficients(&self) -> Vec<f64> {
        match *self {
            Window::Rectangular => Vec::new(),
            Window::Taylor { sidelobe_db, nbar } => taylor_coefficients(sidelobe_db, nbar),
        }
    }
}

fn taylor_coefficients(sidelobe_db: f64, nbar: u32) -> Vec<f64> {
    let r = 10f64.powf(sidelobe_db.abs() / 20.0);
    let a = r.acosh() / std::f64::consts::PI;
    let nb = nbar as f64;
    let sigma2 = nb * nb / (a * a + (nb - 0.5).powi(2));
    (1..nbar)
        .map(|m| {
            let m = m as f64;
            let num: f64 = (1..nbar)
                .map(|n| 1.0 - m * m / (sigma2 * (a * a + (n as f64 - 0.5).powi(2))))
                .product();
            let den: f64 = (1..nbar)
                .filter(|&n| n as f64 != m)
                .map(|n| 1.0 - m * m / (n as f64).powi(2))
                .product();
            let sign = if (m as u32) % 2 == 1 { 1.0 } else { -1.0 };
            0.5 * sign * num / den
        })
        .collect()
}

fn sinc_pi(t: f64) -> f64 {
    if t.abs() < 1e-12 {
        1.0
    } else {
        let x = std::f64::consts::PI * t;
        x.sin() / x
    }
}

/// Continuous impulse response along one axis, unit peak for the
/// rectangular window.
#[derive(Debug, Clone, PartialEq)]
pub struct Ipr {
    pub bandwidth: f64,
    coefficients: Vec<f64>,
}

impl Ipr {
    pub fn new(resolution_m: f64, window: &Window) -> Result<Self> {
        window.validate()?;
        if !(resolution_m > 0.0 && resolution_m.is_finite()) {
            return Err(Error::invalid("resolution must be > 0"));
        }
        Ok(Ipr {
            bandwidth: RECT_HALF_POWER_WIDTH / resolution_m,
            coefficients: window.coefficients(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = self.bandwidth * x;
        let mut g = sinc_pi(u);
        for (i, f) in self.coefficients.iter().enumerate() {
            let m = (i + 1) as f64;
            g += f * (sinc_pi(u + m) + sinc_pi(u - m));
        }
        g
    }

    /// Samples at `spacing`, truncated to ±[`SUPPORT_RESOLUTIONS`]
    /// resolutions and normalized to unit sum.
    pub fn taps(&self, resolution_m: f64, spacing: f64) -> Result<Vec<f64>> {
        if self.bandwidth * spacing > 1.0 {
            return Err(Error::invalid(format!(
                "resolution {resolution_m} m is finer than a {spacing} m grid supports"
            )));
        }
        let half = (SUPPORT_RESOLUTIONS * resolution_m / spacing).ceil() as isize;
        let mut taps: Vec<f64> = (-half..=half)
            .map(|n| self.eval(n as f64 * spacing))
            .collect();
        let sum: f64 = taps.iter().sum();
        for t in &mut taps {
            *t /= sum;
        }
        Ok(taps)
    }
}

/// Separable kernel: odd-length range and cross-range taps, centered.
#[derive(Debug, Clone, PartialEq)]
pub struct IprKernel {
    pub range: Vec<f64>,
    pub cross: Vec<f64>,
}

impl IprKernel {
    pub fn range_half(&self) -> usize {
        self.range.len() / 2
    }

    pub fn cross_half(&self) -> usize {
        self.cross.len() / 2
    }

    /// Product of the center taps.
    pub fn center_gain(&self) -> f64 {
        self.range[self.range_half()] * self.cross[self.cross_half()]
    }

    /// `Σh_r² · Σh_c²`.
    pub fn energy(&self) -> f64 {
        self.range.iter().map(|h| h * h).sum::<f64>()
            * self.cross.iter().map(|h| h * h).sum::<f64>()
    }
}
