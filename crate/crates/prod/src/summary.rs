//! Dataset coverage and chip statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::config::Paradigm;
use crate::manifest::Manifest;
use crate::{ProdError, Result};

/// One (label, paradigm, azimuth, depression) cell of the lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCell {
    pub label: String,
    pub paradigm: Paradigm,
    pub azimuth_deg: f64,
    pub depression_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Some(Stats { min, mean, max })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub records: usize,
    pub errors: usize,
    /// Records per label and paradigm.
    pub by_paradigm: BTreeMap<String, BTreeMap<Paradigm, usize>>,
    /// Records per label and depression (formatted in degrees).
    pub by_depression: BTreeMap<String, BTreeMap<String, usize>>,
    /// Cells of each label's observed lattice (its paradigms × azimuths ×
    /// depressions) with no valid chip.
    pub gaps: Vec<CoverageCell>,
    /// Chip paths that are missing or fail their checksum.
    pub invalid: Vec<String>,
    /// Per-chip peak magnitude, dB.
    pub peak_db: Option<Stats>,
    /// Per-chip median power, dB.
    pub floor_db: Option<Stats>,
}

fn chip_levels(bytes: &[u8]) -> (f64, f64) {
    let mut power: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])).powi(2))
        .collect();
    power.sort_by(f64::total_cmp);
    let peak = power.last().copied().unwrap_or(0.0);
    let median = power.get(power.len() / 2).copied().unwrap_or(0.0);
    (10.0 * peak.log10(), 10.0 * median.log10())
}

/// Summary of a manifest whose chip paths are relative to `root`.
pub fn summarize(manifest: &Manifest, root: &Path) -> Result<MetricsReport> {
    let mut by_paradigm: BTreeMap<String, BTreeMap<Paradigm, usize>> = BTreeMap::new();
    let mut by_depression: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    // Observed axes per label, keyed by bit patterns for exact matching.
    let mut axes: BTreeMap<&str, (BTreeSet<Paradigm>, BTreeSet<u64>, BTreeSet<u64>)> =
        BTreeMap::new();
    let mut covered = BTreeSet::new();
    let mut invalid = Vec::new();
    let (mut peaks, mut floors) = (Vec::new(), Vec::new());

    for r in &manifest.records {
        *by_paradigm
            .entry(r.label.clone())
            .or_default()
            .entry(r.paradigm)
            .or_default() += 1;
        *by_depression
            .entry(r.label.clone())
            .or_default()
            .entry(format!("{}", r.depression_deg))
            .or_default() += 1;
        let a = axes.entry(&r.label).or_default();
        a.0.insert(r.paradigm);
        a.1.insert(r.azimuth_deg.to_bits());
        a.2.insert(r.depression_deg.to_bits());

        let bytes = std::fs::read(root.join(&r.path)).ok();
        let valid =
            bytes.as_ref().is_some_and(|b| r.verify_bytes(b)) && root.join(r.sidecar()).is_file();
        if valid {
            covered.insert((
                r.label.as_str(),
                r.paradigm,
                r.azimuth_deg.to_bits(),
                r.depression_deg.to_bits(),
            ));
            let (peak, floor) = chip_levels(bytes.as_deref().unwrap_or_default());
            if peak.is_finite() {
                peaks.push(peak);
            }
            if floor.is_finite() {
                floors.push(floor);
            }
        } else {
            invalid.push(r.path.clone());
        }
    }
    for e in &manifest.errors {
        let a = axes.entry(&e.label).or_default();
        a.0.insert(e.paradigm);
        a.1.insert(e.azimuth_deg.to_bits());
        a.2.insert(e.depression_deg.to_bits());
    }

    let mut gaps = Vec::new();
    for (label, (paradigms, azs, deps)) in &axes {
        for &paradigm in paradigms {
            for &dep in deps {
                for &az in azs {
                    if !covered.contains(&(*label, paradigm, az, dep)) {
                        gaps.push(CoverageCell {
                            label: label.to_string(),
                            paradigm,
                            azimuth_deg: f64::from_bits(az),
                            depression_deg: f64::from_bits(dep),
                        });
                    }
                }
            }
        }
    }
    gaps.sort_by(|a, b| {
        (&a.label, a.paradigm)
            .cmp(&(&b.label, b.paradigm))
            .then(a.depression_deg.total_cmp(&b.depression_deg))
            .then(a.azimuth_deg.total_cmp(&b.azimuth_deg))
    });

    Ok(MetricsReport {
        records: manifest.len(),
        errors: manifest.errors.len(),
        by_paradigm,
        by_depression,
        gaps,
        invalid,
        peak_db: Stats::of(&peaks),
        floor_db: Stats::of(&floors),
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| ProdError::Config(format!("report: {e}")))
    }
}
