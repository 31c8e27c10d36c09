//! Expansion of a config into jobs.

use std::collections::BTreeSet;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::config::{AzimuthSweep, Paradigm, ProductionConfig};
use crate::{ProdError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    /// Position in the plan.
    pub index: usize,
    /// Index into the config's target list.
    pub target: usize,
    pub label: String,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
    pub paradigm: Paradigm,
    pub variant: u32,
    /// Noise and randomization seed of this chip.
    pub seed: u64,
    /// Seed of the simulation shared by all variants of one geometry.
    pub geometry_seed: u64,
}

impl Job {
    /// Chip stem relative to the output directory. Angles are written in
    /// millidegrees so the name carries no dots.
    pub fn stem(&self) -> PathBuf {
        let tag = self.paradigm.tag();
        let milli = |deg: f64| (deg * 1000.0).round() as u64;
        PathBuf::from(&self.label).join(tag).join(format!(
            "{}_{}_d{:06}_a{:06}_v{}",
            self.label,
            tag,
            milli(self.depression_deg),
            milli(self.azimuth_deg),
            self.variant
        ))
    }

    /// Chip file path relative to the output directory, `/`-separated.
    pub fn chip_path(&self) -> String {
        let parts: Vec<_> = self
            .stem()
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        format!("{}.f32", parts.join("/"))
    }

    /// Key shared by the variants of one simulation.
    pub(crate) fn simulation_key(&self) -> (usize, u64, u64, Paradigm) {
        (
            self.target,
            self.depression_deg.to_bits(),
            self.azimuth_deg.to_bits(),
            self.paradigm,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub jobs: Vec<Job>,
    pub azimuths_deg: Vec<f64>,
    pub paradigms: Vec<Paradigm>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

/// Azimuths of a sweep: `start + i·step` up to and including `stop`; a span
/// of a full turn omits the endpoint that coincides with the start.
pub fn azimuths(sweep: &AzimuthSweep) -> Vec<f64> {
    let span = sweep.stop_deg - sweep.start_deg;
    let n = (span / sweep.step_deg + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n)
        .map(|i| sweep.start_deg + i as f64 * sweep.step_deg)
        .collect();
    if let Some(&last) = out.last() {
        if out.len() > 1 && last - sweep.start_deg >= 360.0 - 1e-9 {
            out.pop();
        }
    }
    out
}

fn seed_from(hasher: Sha256) -> u64 {
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("32-byte digest"))
}

fn seed_hasher(
    domain: &str,
    master: u64,
    label: &str,
    az: f64,
    dep: f64,
    paradigm: Paradigm,
) -> Sha256 {
    let mut h = Sha256::new();
    h.update(domain.as_bytes());
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(az.to_bits().to_le_bytes());
    h.update(dep.to_bits().to_le_bytes());
    h.update(paradigm.tag().as_bytes());
    h
}

/// Seed of one chip: the first 8 bytes (little-endian) of a SHA-256 over
/// the master seed, label, angles, paradigm and variant.
pub fn job_seed(
    master: u64,
    label: &str,
    az: f64,
    dep: f64,
    paradigm: Paradigm,
    variant: u32,
) -> u64 {
    let mut h = seed_hasher("sarsim/job", master, label, az, dep, paradigm);
    h.update(variant.to_le_bytes());
    seed_from(h)
}

pub(crate) fn geometry_seed(
    master: u64,
    label: &str,
    az: f64,
    dep: f64,
    paradigm: Paradigm,
) -> u64 {
    seed_from(seed_hasher(
        "sarsim/geometry",
        master,
        label,
        az,
        dep,
        paradigm,
    ))
}

/// Cartesian product targets × depressions × azimuths × paradigms ×
/// variants, in that nesting order.
pub fn plan_production(cfg: &ProductionConfig) -> Result<Plan> {
    cfg.validate()?;
    for t in &cfg.targets {
        for (what, p) in [("mesh", &t.mesh), ("material table", &t.materials)] {
            let path = cfg.resolve(p);
            if !path.is_file() {
                return Err(ProdError::Config(format!(
                    "target `{}`: {what} {} does not exist",
                    t.label,
                    path.display()
                )));
            }
        }
    }
    let azs = azimuths(&cfg.azimuth);
    let paradigms = cfg.paradigm.paradigms();
    let mut jobs = Vec::new();
    for (ti, t) in cfg.targets.iter().enumerate() {
        for &dep in &cfg.depressions_deg {
            for &az in &azs {
                for &paradigm in &paradigms {
                    let geometry_seed = geometry_seed(cfg.master_seed, &t.label, az, dep, paradigm);
                    for variant in 0..cfg.variants {
                        jobs.push(Job {
                            index: jobs.len(),
                            target: ti,
                            label: t.label.clone(),
                            azimuth_deg: az,
                            depression_deg: dep,
                            paradigm,
                            variant,
                            seed: job_seed(cfg.master_seed, &t.label, az, dep, paradigm, variant),
                            geometry_seed,
                        });
                    }
                }
            }
        }
    }
    let mut paths = BTreeSet::new();
    for j in &jobs {
        if !paths.insert(j.chip_path()) {
            return Err(ProdError::Config(format!(
                "two jobs map to {}; azimuths or depressions closer than 0.001°",
                j.chip_path()
            )));
        }
    }
    Ok(Plan {
        jobs,
        azimuths_deg: azs,
        paradigms,
    })
}
