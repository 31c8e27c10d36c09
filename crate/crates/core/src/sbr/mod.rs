//! Shooting and bouncing rays.
//!
//! A uniform grid of ray tubes is launched from a plane perpendicular to the
//! line of sight. Each tube is traced with geometrical optics: specular
//! reflection at every facet hit, the field rotated into the local (s, p)
//! basis and multiplied by the material's reflection coefficients. When the
//! ray finally escapes the scene, physical optics on the last facet it hit
//! radiates the tube's field back toward the sensor. Planar facets cause
//! no tube divergence, so tube cross-sections are carried unchanged.
//!
//! Launch plane and phase reference: rays start on the plane
//! `x·los = D`, `D` just beyond the scene bounding box. A contribution's
//! path length is the full round trip from that plane; its range
//! coordinate is `path/2 - D`, i.e. slant range relative to the plane
//! through the scene origin, and its cross-range coordinate is the launch
//! ray's offset along the cross-range axis.

mod dump;

pub use dump::{read_contributions, write_contributions, ContributionDump};

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::scene::{
    AccelIndex, AcquisitionGeometry, LosFrame, MaterialTable, Pol, Polarization, Ray, Vec3,
};
use crate::{Error, Result};

type Field = Vector3<Complex64>;

/// Rays per work unit; fixes the concatenation and reduction order
/// independently of the thread count.
const CHUNK: usize = 2048;

/// Minimum ray parameter accepted after a bounce, m.
const T_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbrConfig {
    pub max_bounces: u32,
    /// Ray tube cross-section at launch, m².
    pub ray_area_m2: f64,
    /// Paths whose field amplitude falls below this are dropped.
    pub amplitude_cutoff: f64,
    /// Launch grid margin around the projected bounding box, as a fraction
    /// of the box diagonal.
    pub aperture_margin: f64,
    /// Hard limit on the number of launched rays.
    pub max_rays: u64,
    /// Drop contributions whose return line to the sensor is blocked.
    pub return_visibility: bool,
}

impl Default for SbrConfig {
    fn default() -> Self {
        SbrConfig {
            max_bounces: 5,
            ray_area_m2: 1e-6,
            amplitude_cutoff: 1e-4,
            aperture_margin: 0.02,
            max_rays: 200_000_000,
            return_visibility: true,
        }
    }
}

impl SbrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bounces < 1 {
            return Err(Error::invalid("max_bounces must be >= 1"));
        }
        if !(self.ray_area_m2 > 0.0 && self.ray_area_m2.is_finite()) {
            return Err(Error::invalid("ray area must be > 0"));
        }
        if !(0.0..1.0).contains(&self.amplitude_cutoff) {
            return Err(Error::invalid("amplitude cutoff must be in [0, 1)"));
        }
        if !(self.aperture_margin >= 0.0 && self.aperture_margin.is_finite()) {
            return Err(Error::invalid("aperture margin must be >= 0"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.ray_area_m2.sqrt()
    }
}

/// One traced path's field returned to the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct RayContribution {
    /// √m² amplitude per channel, indexed by [`Polarization::index`].
    pub amplitudes: [Complex64; 4],
    /// Round trip from the launch plane, m.
    pub path_length: f64,
    pub range: f64,
    pub cross_range: f64,
    pub bounces: u32,
    /// Facets hit, in order.
    pub facets: SmallVec<[u32; 6]>,
}

impl RayContribution {
    pub fn amplitude(&self, channel: Polarization) -> Complex64 {
        self.amplitudes[channel.index()]
    }

    pub fn first_facet(&self) -> u32 {
        self.facets[0]
    }

    pub fn last_facet(&self) -> u32 {
        *self.facets.last().expect("contribution without facets")
    }
}

/// Uniform launch grid on the plane perpendicular to the line of sight.
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchGrid {
    pub frame: LosFrame,
    /// Distance of the launch plane from the origin along the line of sight.
    pub plane_distance: f64,
    pub spacing: f64,
    pub tube_area: f64,
    /// Cross-range and elevation coordinates of the first cell center.
    pub start: (f64, f64),
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaunchRay {
    pub ray: Ray,
    pub cross: f64,
    pub elevation: f64,
}

impl LaunchGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ray(&self, i: usize) -> LaunchRay {
        let (ix, iy) = (i % self.nx, i / self.nx);
        let cross = self.start.0 + ix as f64 * self.spacing;
        let elevation = self.start.1 + iy as f64 * self.spacing;
        let f = &self.frame;
        let origin = f.los * self.plane_distance + f.cross * cross + f.elevation * elevation;
        LaunchRay {
            ray: Ray::new(origin, -f.los),
            cross,
            elevation,
        }
    }

    pub fn rays(&self) -> impl Iterator<Item = LaunchRay> + '_ {
        (0..self.len()).map(|i| self.ray(i))
    }
}

pub fn launch_grid(
    index: &AccelIndex,
    geom: &AcquisitionGeometry,
    cfg: &SbrConfig,
) -> Result<LaunchGrid> {
    cfg.validate()?;
    let frame = geom.frame()?;
    let bbox = index.bbox();
    let corners = bbox.corners();
    let project = |axis: &Vec3| {
        corners
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                let v = axis.dot(c);
                (lo.min(v), hi.max(v))
            })
    };
    let (x_lo, x_hi) = project(&frame.cross);
    let (y_lo, y_hi) = project(&frame.elevation);
    let (_, d_hi) = project(&frame.los);
    let margin = cfg.aperture_margin * bbox.diagonal();
    let spacing = cfg.spacing();
    let width = x_hi - x_lo + 2.0 * margin;
    let height = y_hi - y_lo + 2.0 * margin;
    let nx = ((width / spacing).ceil() as u64).max(1);
    let ny = ((height / spacing).ceil() as u64).max(1);
    let requested = nx.saturating_mul(ny);
    if requested > cfg.max_rays {
        return Err(Error::RayLimit {
            requested,
            limit: cfg.max_rays,
        });
    }
    Ok(LaunchGrid {
        frame,
        plane_distance: d_hi + margin + spacing,
        spacing,
        tube_area: cfg.ray_area_m2,
        start: (x_lo - margin + 0.5 * spacing, y_lo - margin + 0.5 * spacing),
        nx: nx as usize,
        ny: ny as usize,
    })
}

/// Traces every launch ray and returns the contributions in launch order.
pub fn trace_paths(
    index: &AccelIndex,
    materials: &MaterialTable,
    geom: &AcquisitionGeometry,
    cfg: &SbrConfig,
) -> Result<Vec<RayContribution>> {
    let grid = launch_grid(index, geom, cfg)?;
    Ok(trace_grid(index, materials, geom, cfg, &grid))
}

pub fn trace_grid(
    index: &AccelIndex,
    materials: &MaterialTable,
    geom: &AcquisitionGeometry,
    cfg: &SbrConfig,
    grid: &LaunchGrid,
) -> Vec<RayContribution> {
    let tracer = Tracer {
        index,
        materials,
        grid,
        cfg,
        k: geom.wavenumber(),
        lambda: geom.wavelength(),
    };
    let chunks = grid.len().div_ceil(CHUNK);
    let parts: Vec<Vec<RayContribution>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(grid.len());
            (c * CHUNK..end)
                .filter_map(|i| tracer.trace(&grid.ray(i)))
                .collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

struct Tracer<'a> {
    index: &'a AccelIndex,
    materials: &'a MaterialTable,
    grid: &'a LaunchGrid,
    cfg: &'a SbrConfig,
    k: f64,
    lambda: f64,
}

/// State at the most recent facet interaction.
struct LastHit {
    point: Vec3,
    facet: u32,
    incident: Vec3,
    tube_axes: [Vec3; 2],
    fields: [Field; 2],
    path: f64,
}

fn dot(e: &Field, v: &Vec3) -> Complex64 {
    e.x * v.x + e.y * v.y + e.z * v.z
}

fn scaled(v: &Vec3, a: Complex64) -> Field {
    Field::new(a * v.x, a * v.y, a * v.z)
}

fn field_norm(e: &Field) -> f64 {
    (e.x.norm_sqr() + e.y.norm_sqr() + e.z.norm_sqr()).sqrt()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}

fn reflect(v: &Vec3, n: &Vec3) -> Vec3 {
    v - n * (2.0 * v.dot(n))
}

impl Tracer<'_> {
    fn trace(&self, launch: &LaunchRay) -> Option<RayContribution> {
        let frame = &self.grid.frame;
        let mesh = self.index.mesh();
        let mut ray = launch.ray;
        let mut fields = [
            scaled(&frame.cross, Complex64::new(1.0, 0.0)),
            scaled(&frame.elevation, Complex64::new(1.0, 0.0)),
        ];
        let mut axes = [frame.cross, frame.elevation];
        let mut path = 0.0;
        let mut chain: SmallVec<[u32; 6]> = SmallVec::new();
        let mut last: Option<LastHit> = None;

        let mut skip = None;
        while let Some(hit) = self.index.nearest(&ray, T_EPS, skip) {
            let facet = mesh.facet(hit.facet);
            let n = facet.normal;
            let cos_in = -ray.dir.dot(&n);
            if cos_in <= 0.0 || chain.len() as u32 >= self.cfg.max_bounces {
                // Back face, or one bounce more than allowed.
                return None;
            }
            path += hit.t;
            let point = ray.at(hit.t);
            chain.push(hit.facet);

            let d = ray.dir;
            let mut s = d.cross(&n);
            if s.norm() < 1e-9 {
                s = axes[0] - d * d.dot(&axes[0]);
            }
            let s = s.normalize();
            let p_in = s.cross(&d);
            let d_out = reflect(&d, &n);
            let p_out = s.cross(&d_out);
            let (rs, rp) = self.materials.material(facet.material).reflection(cos_in);
            let incoming_axes = axes;
            for e in &mut fields {
                let es = dot(e, &s) * rs;
                let ep = dot(e, &p_in) * rp;
                *e = scaled(&s, es) + scaled(&p_out, ep);
            }
            last = Some(LastHit {
                point,
                facet: hit.facet,
                incident: d,
                tube_axes: incoming_axes,
                fields,
                path,
            });
            if fields.iter().map(field_norm).fold(0.0, f64::max) < self.cfg.amplitude_cutoff {
                return None;
            }
            axes = [reflect(&axes[0], &n), reflect(&axes[1], &n)];
            ray = Ray::new(point, d_out);
            skip = Some(hit.facet);
        }
        let last = last?;
        self.radiate(launch, &last, chain)
    }

    /// Physical optics on the last facet, observed back along the line of
    /// sight.
    fn radiate(
        &self,
        launch: &LaunchRay,
        last: &LastHit,
        chain: SmallVec<[u32; 6]>,
    ) -> Option<RayContribution> {
        let frame = &self.grid.frame;
        let u = frame.los;
        let facet = self.index.mesh().facet(last.facet);
        let n = facet.normal;
        let n_dot_u = n.dot(&u);
        if n_dot_u <= 0.0 {
            return None;
        }
        if self.cfg.return_visibility
            && self
                .index
                .nearest(&Ray::new(last.point, u), T_EPS, Some(last.facet))
                .is_some()
        {
            return None;
        }
        let d = last.incident;
        let cos_in = -d.dot(&n);
        let spacing = self.grid.spacing;
        let footprint = (self.grid.tube_area / cos_in).min(facet.area);
        let obliquity = 0.5 * (n_dot_u + cos_in);
        // Footprint parallelogram: tube axes projected along d onto the facet.
        let q = (d - u) * self.k;
        let n_dot_d = n.dot(&d);
        let aperture = last
            .tube_axes
            .iter()
            .map(|t| {
                let on_facet = t - d * (n.dot(t) / n_dot_d);
                sinc(0.5 * spacing * q.dot(&on_facet))
            })
            .product::<f64>();
        let back = self.grid.plane_distance - u.dot(&last.point);
        let total = last.path + back;
        let magnitude = (4.0 * PI).sqrt() / self.lambda * footprint * obliquity * aperture;
        let phase = Complex64::from_polar(magnitude, -self.k * total);
        let mut amplitudes = [Complex64::new(0.0, 0.0); 4];
        for pol in Polarization::ALL {
            let tx = match pol.transmit {
                Pol::H => 0,
                Pol::V => 1,
            };
            amplitudes[pol.index()] =
                phase * dot(&last.fields[tx], &frame.receive_vector(pol.receive));
        }
        Some(RayContribution {
            amplitudes,
            path_length: total,
            range: 0.5 * total - self.grid.plane_distance,
            cross_range: launch.cross,
            bounces: chain.len() as u32,
            facets: chain,
        })
    }
}

/// Coherent RCS `|Σ a|²` of one channel, m².
///
/// Compensated summation per fixed-size block, blocks combined in order;
/// the result is bit-reproducible and insensitive to list order up to
/// rounding of the compensated sums.
pub fn rcs_estimate(contributions: &[RayContribution], channel: Polarization) -> f64 {
    coherent_sum(contributions.iter().map(|c| c.amplitude(channel))).norm_sqr()
}

pub(crate) fn coherent_sum(values: impl Iterator<Item = Complex64>) -> Complex64 {
    let mut total = Neumaier::default();
    let mut block = Neumaier::default();
    for (i, v) in values.enumerate() {
        block.add(v);
        if (i + 1) % CHUNK == 0 {
            total.add(block.value());
            block = Neumaier::default();
        }
    }
    total.add(block.value());
    total.value()
}

#[derive(Default)]
struct Neumaier {
    sum: Complex64,
    comp: Complex64,
}

impl Neumaier {
    fn add(&mut self, v: Complex64) {
        let (re, cre) = two_sum(self.sum.re, v.re);
        let (im, cim) = two_sum(self.sum.im, v.im);
        self.sum = Complex64::new(re, im);
        self.comp += Complex64::new(cre, cim);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcsSample {
    pub azimuth_deg: f64,
    pub rcs_m2: f64,
}

impl RcsSample {
    pub fn dbsm(&self) -> f64 {
        crate::to_db(self.rcs_m2)
    }
}

/// RCS for each azimuth, other geometry fields taken from `template`.
pub fn sweep_rcs(
    index: &AccelIndex,
    materials: &MaterialTable,
    template: &AcquisitionGeometry,
    azimuths_deg: &[f64],
    cfg: &SbrConfig,
) -> Result<Vec<RcsSample>> {
    azimuths_deg
        .iter()
        .map(|&az| {
            let geom = template.with_azimuth(az)?;
            let contribs = trace_paths(index, materials, &geom, cfg)?;
            Ok(RcsSample {
                azimuth_deg: az,
                rcs_m2: rcs_estimate(&contribs, geom.polarization),
            })
        })
        .collect()
}
