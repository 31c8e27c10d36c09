//! Focusing grid and bilinear rasterization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Oversampled focusing grid. Rows run along slant range, columns along
/// cross-range; pixel `(rows/2, cols/2)` sits at `origin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub range_spacing_m: f64,
    pub cross_spacing_m: f64,
    pub oversampling: usize,
    /// `(range, cross_range)` of the grid center, m.
    pub origin: (f64, f64),
}

impl GridSpec {
    /// Grid whose decimated output is `out_rows × out_cols` pixels of
    /// `spacing_m`.
    pub fn for_output(
        out_rows: usize,
        out_cols: usize,
        spacing_m: f64,
        oversampling: usize,
        origin: (f64, f64),
    ) -> Result<Self> {
        let grid = GridSpec {
            rows: out_rows * oversampling,
            cols: out_cols * oversampling,
            range_spacing_m: spacing_m / oversampling as f64,
            cross_spacing_m: spacing_m / oversampling as f64,
            oversampling,
            origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.oversampling < 1 {
            return Err(Error::invalid("oversampling must be >= 1"));
        }
        if self.rows == 0 || self.cols == 0 || self.rows % 2 != 0 || self.cols % 2 != 0 {
            return Err(Error::invalid("grid dimensions must be even and non-zero"));
        }
        if self.rows % self.oversampling != 0 || self.cols % self.oversampling != 0 {
            return Err(Error::invalid(
                "grid dimensions must be multiples of the oversampling",
            ));
        }
        if !(self.range_spacing_m > 0.0 && self.cross_spacing_m > 0.0) {
            return Err(Error::invalid("grid spacing must be > 0"));
        }
        if !(self.origin.0.is_finite() && self.origin.1.is_finite()) {
            return Err(Error::invalid("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fractional `(row, col)` of a `(range, cross_range)` position.
    pub fn pixel_of(&self, range: f64, cross_range: f64) -> (f64, f64) {
        (
            (range - self.origin.0) / self.range_spacing_m + (self.rows / 2) as f64,
            (cross_range - self.origin.1) / self.cross_spacing_m + (self.cols / 2) as f64,
        )
    }

    /// `(range, cross_range)` of pixel `(row, col)`.
    pub fn position_of(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin.0 + (row as f64 - (self.rows / 2) as f64) * self.range_spacing_m,
            self.origin.1 + (col as f64 - (self.cols / 2) as f64) * self.cross_spacing_m,
        )
    }

    pub fn output_rows(&self) -> usize {
        self.rows / self.oversampling
    }

    pub fn output_cols(&self) -> usize {
        self.cols / self.oversampling
    }

    pub fn same_layout(&self, other: &GridSpec) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.range_spacing_m == other.range_spacing_m
            && self.cross_spacing_m == other.cross_spacing_m
            && self.oversampling == other.oversampling
    }
}

/// A point return in image coordinates, phase referenced to the scene
/// origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointReturn {
    pub range: f64,
    pub cross_range: f64,
    pub amplitude: Complex64,
}

/// Ideal focused image: complex, Dirac impulse response, no noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceImage {
    pub grid: GridSpec,
    /// Row-major, `grid.rows × grid.cols`.
    pub data: Vec<Complex64>,
}

impl SourceImage {
    pub fn zeros(grid: GridSpec) -> Self {
        SourceImage {
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.grid.cols + col]
    }

    pub fn sum(&self) -> Complex64 {
        crate::sbr::coherent_sum(self.data.iter().copied())
    }
}

/// Number of offending input indices reported in an error.
const REPORTED: usize = 10;

/// Splats every return bilinearly onto `grid`. Weights of a return sum to
/// one, so the grid's complex sum equals the input's. A return is on the
/// grid when all pixels it touches with non-zero weight exist.
pub fn rasterize(returns: &[PointReturn], grid: &GridSpec) -> Result<SourceImage> {
    grid.validate()?;
    let mut image = SourceImage::zeros(*grid);
    let mut offenders = Vec::new();
    let mut count = 0;
    for (i, p) in returns.iter().enumerate() {
        match splat_targets(grid, p) {
            Some(targets) => {
                for (idx, w) in targets.into_iter().flatten() {
                    image.data[idx] += p.amplitude * w;
                }
            }
            None => {
                count += 1;
                if offenders.len() < REPORTED {
                    offenders.push(i);
                }
            }
        }
    }
    if count > 0 {
        return Err(Error::OutsideGrid {
            count,
            total: returns.len(),
            first: offenders,
        });
    }
    Ok(image)
}

type Targets = [Option<(usize, f64)>; 4];

fn axis(f: f64, n: usize) -> Option<[(usize, f64); 2]> {
    if !f.is_finite() {
        return None;
    }
    let i0 = f.floor();
    let w = f - i0;
    if i0 < 0.0 || i0 >= n as f64 {
        return None;
    }
    let i0 = i0 as usize;
    if w > 0.0 && i0 + 1 >= n {
        return None;
    }
    Some([(i0, 1.0 - w), (i0 + 1, w)])
}

fn splat_targets(grid: &GridSpec, p: &PointReturn) -> Option<Targets> {
    let (fr, fc) = grid.pixel_of(p.range, p.cross_range);
    let rows = axis(fr, grid.rows)?;
    let cols = axis(fc, grid.cols)?;
    let mut out: Targets = [None; 4];
    let mut k = 0;
    for (r, wr) in rows {
        for (c, wc) in cols {
            let w = wr * wc;
            if w != 0.0 {
                out[k] = Some((r * grid.cols + c, w));
            }
            k += 1;
        }
    }
    Some(out)
}
