//! Domain randomization at chip-generation time.
//!
//! Each generated image draws its own sensor resolution, clutter, thermal
//! noise, target offset and bright-point dropout from a
//! [`RandomizationPolicy`]. Draws come from the ChaCha stream
//! `(master seed, image index)`, so an image's parameters depend only on its
//! index, never on production order or worker count.


use num_complex::Complex64;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::centers::M3dModel;
use crate::imaging::{
    self, rasterize, returns_from_contributions, returns_from_m3d, ChipLayout, ClutterFamily,
    ClutterModel, PointReturn, RadarChip, SensorModel, SourceImage,
};
use crate::sbr::RayContribution;
use crate::scene::AcquisitionGeometry;
use crate::{Error, Result};

/// Closed interval `[lo, hi]`, written `[lo, hi]` in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Interval { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

impl Interval {
    pub fn fixed(value: f64) -> Self {
        Interval {
            lo: value,
            hi: value,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `lo + (hi - lo)·u`; exactly `lo` when the interval is degenerate.
    fn at(&self, u: f64) -> f64 {
        (self.lo + self.width() * u).min(self.hi)
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::invalid(format!(
                "{name}: [{}, {}] is not an interval",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomizationPolicy {
    pub range_resolution_m: Interval,
    pub cross_range_resolution_m: Interval,
    pub clutter_sigma0_db: Interval,
    /// Drawn uniformly; empty disables clutter.
    pub clutter_families: Vec<ClutterFamily>,
    pub nesigma0_db: Interval,
    /// Largest target offset, output pixels, along range and cross-range.
    pub max_translation_px: [u32; 2],
    /// Dropout count is uniform over `0..=max_dropout`.
    pub max_dropout: u32,
    pub master_seed: u64,
}

impl Default for RandomizationPolicy {
    fn default() -> Self {
        RandomizationPolicy {
            range_resolution_m: Interval { lo: 0.28, hi: 0.4 },
            cross_range_resolution_m: Interval { lo: 0.28, hi: 0.4 },
            clutter_sigma0_db: Interval {
                lo: -25.0,
                hi: -12.0,
            },
            clutter_families: vec![
                ClutterFamily::Rayleigh,
                ClutterFamily::Weibull { shape: 1.5 },
                ClutterFamily::K { nu: 2.0 },
            ],
            nesigma0_db: Interval {
                lo: -38.0,
                hi: -28.0,
            },
            max_translation_px: [8, 8],
            max_dropout: 10,
            master_seed: 0,
        }
    }
}

impl RandomizationPolicy {
    /// Every interval collapsed onto the sensor's own settings, no clutter,
    /// no offset, no dropout.
    pub fn identity(sensor: &SensorModel, master_seed: u64) -> Self {
        RandomizationPolicy {
            range_resolution_m: Interval::fixed(sensor.range_resolution_m),
            cross_range_resolution_m: Interval::fixed(sensor.cross_range_resolution_m),
            clutter_sigma0_db: Interval::fixed(-20.0),
            clutter_families: Vec::new(),
            nesigma0_db: Interval::fixed(sensor.nesigma0_db),
            max_translation_px: [0, 0],
            max_dropout: 0,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.range_resolution_m.validate("range resolution")?;
        self.cross_range_resolution_m
            .validate("cross-range resolution")?;
        self.clutter_sigma0_db.validate("clutter σ0")?;
        self.nesigma0_db.validate("NESigma0")?;
        if self.range_resolution_m.lo <= 0.0 || self.cross_range_resolution_m.lo <= 0.0 {
            return Err(Error::invalid("resolutions must be > 0"));
        }
        for family in &self.clutter_families {
            ClutterModel {
                family: *family,
                mean_sigma0_db: self.clutter_sigma0_db.lo,
            }
            .validate()?;
        }
        Ok(())
    }
}

/// Per-image seeds derived from the image's stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSeeds {
    pub clutter: u64,
    pub noise: u64,
    pub speckle: u64,
}

/// One concrete draw of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedParams {
    pub index: u64,
    pub range_resolution_m: f64,
    pub cross_range_resolution_m: f64,
    pub clutter: Option<ClutterModel>,
    pub nesigma0_db: f64,
    /// Target offset in output pixels, (range, cross-range).
    pub translation_px: (i64, i64),
    pub dropout: u32,
    pub seeds: ImageSeeds,
}

impl RandomizedParams {
    /// `base` with the drawn resolutions and NESigma0.
    pub fn sensor(&self, base: &SensorModel) -> SensorModel {
        SensorModel {
            range_resolution_m: self.range_resolution_m,
            cross_range_resolution_m: self.cross_range_resolution_m,
            nesigma0_db: self.nesigma0_db,
            ..*base
        }
    }
}

/// Draws image `index`. The number of values consumed from the stream is
/// the same for every policy, so widening one interval never shifts the
/// others' draws.
pub fn sample_params(policy: &RandomizationPolicy, index: u64) -> Result<RandomizedParams> {
    policy.validate()?;
    let mut rng = crate::rng::stream(policy.master_seed, index);
    let mut unit = || rng.random::<f64>();
    let range_resolution_m = policy.range_resolution_m.at(unit());
    let cross_range_resolution_m = policy.cross_range_resolution_m.at(unit());
    let sigma0 = policy.clutter_sigma0_db.at(unit());
    let nesigma0_db = policy.nesigma0_db.at(unit());
    let family_u = unit();
    let tr_u = unit();
    let tc_u = unit();
    let drop_u = unit();
    let clutter = (!policy.clutter_families.is_empty()).then(|| {
        let n = policy.clutter_families.len();
        ClutterModel {
            family: policy.clutter_families[((family_u * n as f64) as usize).min(n - 1)],
            mean_sigma0_db: sigma0,
        }
    });
    let integer = |u: f64, max: u32| -> i64 {
        let n = 2 * max as i64 + 1;
        ((u * n as f64) as i64).min(n - 1) - max as i64
    };
    let [mr, mc] = policy.max_translation_px;
    let dropout = ((drop_u * (policy.max_dropout as f64 + 1.0)) as u32).min(policy.max_dropout);
    let seeds = ImageSeeds {
        clutter: rng.next_u64(),
        noise: rng.next_u64(),
        speckle: rng.next_u64(),
    };
    Ok(RandomizedParams {
        index,
        range_resolution_m,
        cross_range_resolution_m,
        clutter,
        nesigma0_db,
        translation_px: (integer(tr_u, mr), integer(tc_u, mc)),
        dropout,
        seeds,
    })
}

/// Streaming access to consecutive image indices.
#[derive(Debug, Clone)]
pub struct ParamStream {
    policy: RandomizationPolicy,
    next: u64,
}

impl ParamStream {
    pub fn new(policy: RandomizationPolicy, first_index: u64) -> Result<Self> {
        policy.validate()?;
        Ok(ParamStream {
            policy,
            next: first_index,
        })
    }
}

impl Iterator for ParamStream {
    type Item = RandomizedParams;

    fn next(&mut self) -> Option<RandomizedParams> {
        let p = sample_params(&self.policy, self.next).expect("policy validated");
        self.next += 1;
        Some(p)
    }
}

/// Indices of the entries kept after removing the `k` largest magnitudes;
/// ties go to the earlier entry.
fn kept(magnitudes: &[f64], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..magnitudes.len()).collect();
    order.sort_by(|&a, &b| magnitudes[b].total_cmp(&magnitudes[a]).then(a.cmp(&b)));
    let mut keep = vec![true; magnitudes.len()];
    for &i in order.iter().take(k) {
        keep[i] = false;
    }
    keep
}

fn filtered<T: Clone>(items: &[T], magnitudes: &[f64], k: usize) -> Vec<T> {
    items
        .iter()
        .zip(kept(magnitudes, k))
        .filter(|(_, keep)| *keep)
        .map(|(t, _)| t.clone())
        .collect()
}

/// Removal of the strongest point scatterers.
pub trait BrightPoints: Sized {
    /// Removes the `k` entries of largest amplitude magnitude, keeping the
    /// order of the rest.
    fn drop_bright_points(&self, k: usize) -> Self;
}

impl BrightPoints for Vec<PointReturn> {
    fn drop_bright_points(&self, k: usize) -> Self {
        let mags: Vec<f64> = self.iter().map(|p| p.amplitude.norm()).collect();
        filtered(self, &mags, k)
    }
}

impl BrightPoints for M3dModel {
    fn drop_bright_points(&self, k: usize) -> Self {
        let mags: Vec<f64> = self.scatterers.iter().map(|s| s.amplitude.norm()).collect();
        M3dModel {
            scatterers: filtered(&self.scatterers, &mags, k),
            ..self.clone()
        }
    }
}

/// Contributions rank by their total power over the four channels.
impl BrightPoints for Vec<RayContribution> {
    fn drop_bright_points(&self, k: usize) -> Self {
        let mags: Vec<f64> = self
            .iter()
            .map(|c| {
                c.amplitudes
                    .iter()
                    .map(|a| a.norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        filtered(self, &mags, k)
    }
}

/// Shifts the source content by `(dx, dy)` output pixels (range,
/// cross-range), i.e. `oversampling` times as many source pixels.
pub fn translate_target(source: &SourceImage, dx: i64, dy: i64) -> Result<SourceImage> {
    let g = source.grid;
    let (sr, sc) = (dx * g.oversampling as i64, dy * g.oversampling as i64);
    let zero = Complex64::new(0.0, 0.0);
    let mut out = SourceImage::zeros(g);
    for r in 0..g.rows {
        for c in 0..g.cols {
            let v = source.data[r * g.cols + c];
            if v == zero {
                continue;
            }
            let (nr, nc) = (r as i64 + sr, c as i64 + sc);
            if nr < 0 || nc < 0 || nr >= g.rows as i64 || nc >= g.cols as i64 {
                return Err(Error::OffGrid { dx, dy });
            }
            out.data[nr as usize * g.cols + nc as usize] = v;
        }
    }
    Ok(out)
}

/// What a chip is rendered from.
#[derive(Debug, Clone, Copy)]
pub enum ChipInputs<'a> {
    M3d(&'a M3dModel),
    /// Traced paths and the launch-plane distance they were traced from.
    Contributions {
        paths: &'a [RayContribution],
        plane_distance: f64,
    },
}

impl ChipInputs<'_> {
    /// Point returns in the image frame of `geom`. M3D diffuse phases are
    /// redrawn from `speckle_seed` when given.
    pub fn returns(
        &self,
        geom: &AcquisitionGeometry,
        speckle_seed: Option<u64>,
    ) -> Result<Vec<PointReturn>> {
        match *self {
            ChipInputs::M3d(model) => match speckle_seed {
                Some(seed) => returns_from_m3d(&model.with_diffuse_phases(seed), geom),
                None => returns_from_m3d(model, geom),
            },
            ChipInputs::Contributions {
                paths,
                plane_distance,
            } => Ok(returns_from_contributions(
                paths,
                geom.polarization,
                geom.wavenumber(),
                plane_distance,
            )),
        }
    }
}

/// Full randomized pipeline for image `index`: draw, dropout, rasterize,
/// translate, clutter, sensor. Pure in its arguments.
pub fn augment_chip(
    inputs: ChipInputs<'_>,
    geom: &AcquisitionGeometry,
    base_sensor: &SensorModel,
    layout: &ChipLayout,
    policy: &RandomizationPolicy,
    index: u64,
) -> Result<RadarChip> {
    let params = sample_params(policy, index)?;
    let sensor = params.sensor(base_sensor);
    let returns = inputs
        .returns(geom, Some(params.seeds.speckle))?
        .drop_bright_points(params.dropout as usize);
    let source = rasterize(&returns, &layout.grid(&sensor)?)?;
    let (dx, dy) = params.translation_px;
    let source = if (dx, dy) == (0, 0) {
        source
    } else {
        translate_target(&source, dx, dy)?
    };
    let clutter = params.clutter.as_ref().map(|m| (m, params.seeds.clutter));
    let mut chip = imaging::render_source(
        &source,
        &sensor,
        geom.depression_deg,
        clutter,
        Some(params.seeds.noise),
    )?;
    chip.metadata.geometry = Some(*geom);
    chip.metadata
        .seeds
        .insert("speckle".into(), params.seeds.speckle);
    chip.metadata.randomized = Some(params);
    Ok(chip)
}
