//! Rough ground patches.
//!
//! Heights are a stationary Gaussian field with Gaussian correlation
//! `rms² exp(-r²/ℓ²)`, synthesized spectrally on a periodic grid: white
//! noise is filtered by the square root of the power spectrum
//! `∝ exp(-k²ℓ²/4)` and rescaled so the expected variance is exactly `rms²`.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::material::MaterialId;
use super::mesh::TargetMesh;
use super::Vec3;
use crate::fft::{fft2, signed_bin};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPatch {
    /// Side of the square patch, m; the patch is centered on the origin.
    pub extent_m: f64,
    pub spacing_m: f64,
    pub rms_height_m: f64,
    pub correlation_length_m: f64,
    pub seed: u64,
}

impl GroundPatch {
    pub fn validate(&self) -> Result<()> {
        if !(self.extent_m > 0.0 && self.spacing_m > 0.0 && self.correlation_length_m > 0.0) {
            return Err(Error::invalid(
                "ground extent, spacing and correlation length must be > 0",
            ));
        }
        if !(self.rms_height_m >= 0.0 && self.rms_height_m.is_finite()) {
            return Err(Error::invalid("ground rms height must be >= 0"));
        }
        if self.spacing_m >= self.extent_m {
            return Err(Error::invalid(format!(
                "ground spacing {} must be below extent {}",
                self.spacing_m, self.extent_m
            )));
        }
        if self.correlation_length_m < 2.0 * self.spacing_m {
            return Err(Error::invalid(format!(
                "correlation length {} aliases on spacing {} (needs >= 2x spacing)",
                self.correlation_length_m, self.spacing_m
            )));
        }
        Ok(())
    }

    /// Grid nodes per side.
    pub fn nodes(&self) -> usize {
        (self.extent_m / self.spacing_m).round() as usize + 1
    }
}

/// Regular height grid, row-major over `y` then `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heightfield {
    pub nodes: usize,
    pub spacing_m: f64,
    pub heights: Vec<f64>,
}

impl Heightfield {
    pub fn origin(&self) -> f64 {
        -0.5 * self.spacing_m * (self.nodes - 1) as f64
    }

    /// Bilinear height at `(x, y)`, clamped to the patch.
    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let n = self.nodes;
        let fx = ((x - self.origin()) / self.spacing_m).clamp(0.0, (n - 1) as f64);
        let fy = ((y - self.origin()) / self.spacing_m).clamp(0.0, (n - 1) as f64);
        let (ix, iy) = ((fx as usize).min(n - 2), (fy as usize).min(n - 2));
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let h = |i: usize, j: usize| self.heights[j * n + i];
        (1.0 - tx) * (1.0 - ty) * h(ix, iy)
            + tx * (1.0 - ty) * h(ix + 1, iy)
            + (1.0 - tx) * ty * h(ix, iy + 1)
            + tx * ty * h(ix + 1, iy + 1)
    }

    pub fn to_mesh(&self, material: MaterialId) -> TargetMesh {
        let n = self.nodes;
        let o = self.origin();
        let p = |i: usize, j: usize| {
            Vec3::new(
                o + i as f64 * self.spacing_m,
                o + j as f64 * self.spacing_m,
                self.heights[j * n + i],
            )
        };
        let mut tris = Vec::with_capacity(2 * (n - 1) * (n - 1));
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                tris.push(([p(i, j), p(i + 1, j), p(i + 1, j + 1)], material));
                tris.push(([p(i, j), p(i + 1, j + 1), p(i, j + 1)], material));
            }
        }
        TargetMesh::from_triangles(tris)
    }
}

pub fn synthesize_heights(patch: &GroundPatch) -> Result<Heightfield> {
    patch.validate()?;
    let n = patch.nodes();
    let mut heights = vec![0.0; n * n];
    if patch.rms_height_m > 0.0 {
        let mut rng = rng::stream(patch.seed, 0);
        let mut field: Vec<Complex64> = (0..n * n)
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
            .collect();
        fft2(&mut field, n, n, FftDirection::Forward);
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * patch.spacing_m);
        let l2 = patch.correlation_length_m.powi(2);
        let mut gain_power = 0.0;
        for j in 0..n {
            let ky = signed_bin(j, n) * dk;
            for i in 0..n {
                let kx = signed_bin(i, n) * dk;
                let g = (-(kx * kx + ky * ky) * l2 / 8.0).exp();
                gain_power += g * g;
                field[j * n + i] *= g;
            }
        }
        fft2(&mut field, n, n, FftDirection::Inverse);
        // Unit white noise through the filter has variance sum|g|²/N; the
        // unnormalized inverse transform adds a factor N.
        let nn = (n * n) as f64;
        let scale = patch.rms_height_m / (gain_power / nn).sqrt() / nn;
        for (h, z) in heights.iter_mut().zip(&field) {
            *h = z.re * scale;
        }
    }
    Ok(Heightfield {
        nodes: n,
        spacing_m: patch.spacing_m,
        heights,
    })
}

/// Triangulated rough ground; every facet carries material 0.
pub fn synthesize_rough_ground(patch: &GroundPatch) -> Result<TargetMesh> {
    Ok(synthesize_heights(patch)?.to_mesh(MaterialId(0)))
}
