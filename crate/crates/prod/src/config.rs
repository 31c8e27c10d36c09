//! Production config file (TOML).
//!
//! ```toml
//! output_dir = "dataset"
//! master_seed = 2024
//! paradigm = "both"
//! depressions_deg = [16.0, 17.0, 18.0]
//! sensor = "mstar_like"
//!
//! [azimuth]
//! start_deg = 0.0
//! stop_deg = 360.0
//! step_deg = 0.5
//!
//! [[targets]]
//! label = "t72"
//! mesh = "meshes/t72.obj"
//! materials = "materials.toml"
//! material = "steel"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use sarsim_core::augment::RandomizationPolicy;
use sarsim_core::centers::DetectionConfig;
use sarsim_core::imaging::{ChipLayout, SensorModel};
use sarsim_core::sbr::SbrConfig;
use sarsim_core::scene::{AcquisitionGeometry, MaterialBinding, Polarization};
use serde::{Deserialize, Serialize};

use crate::{ProdError, Result};

/// Overrides the worker count of every production.
pub const WORKERS_ENV: &str = "SARSIM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    Centers,
    Sbr,
}

impl Paradigm {
    pub fn tag(self) -> &'static str {
        match self {
            Paradigm::Centers => "centers",
            Paradigm::Sbr => "sbr",
        }
    }
}

impl std::str::FromStr for Paradigm {
    type Err = ProdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centers" => Ok(Paradigm::Centers),
            "sbr" => Ok(Paradigm::Sbr),
            other => Err(ProdError::Config(format!("unknown paradigm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParadigmSelection {
    Centers,
    Sbr,
    Both,
}

impl ParadigmSelection {
    pub fn paradigms(self) -> Vec<Paradigm> {
        match self {
            ParadigmSelection::Centers => vec![Paradigm::Centers],
            ParadigmSelection::Sbr => vec![Paradigm::Sbr],
            ParadigmSelection::Both => vec![Paradigm::Centers, Paradigm::Sbr],
        }
    }
}

impl std::str::FromStr for ParadigmSelection {
    type Err = ProdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "centers" => Ok(ParadigmSelection::Centers),
            "sbr" => Ok(ParadigmSelection::Sbr),
            "both" => Ok(ParadigmSelection::Both),
            other => Err(ProdError::Config(format!("unknown paradigm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPolicy {
    FailFast,
    #[default]
    Continue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzimuthSweep {
    pub start_deg: f64,
    /// Inclusive, except that a full 360° span does not repeat its start.
    pub stop_deg: f64,
    pub step_deg: f64,
}

/// A preset name or a full sensor description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SensorSpec {
    Preset(String),
    Custom(SensorModel),
}

impl Default for SensorSpec {
    fn default() -> Self {
        SensorSpec::Preset("mstar_like".into())
    }
}

impl SensorSpec {
    pub fn model(&self) -> Result<SensorModel> {
        let model = match self {
            SensorSpec::Preset(name) => SensorModel::preset(name)?,
            SensorSpec::Custom(m) => *m,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetEntry {
    pub label: String,
    pub mesh: PathBuf,
    /// Material table file.
    pub materials: PathBuf,
    /// Shorthand for a uniform binding.
    #[serde(default)]
    pub material: Option<String>,
    #[serde(default)]
    pub binding: Option<MaterialBinding>,
    #[serde(default = "one")]
    pub unit_scale: f64,
}

impl TargetEntry {
    pub fn binding(&self) -> Result<MaterialBinding> {
        match (&self.material, &self.binding) {
            (Some(m), None) => Ok(MaterialBinding::Uniform(m.clone())),
            (None, Some(b)) => Ok(b.clone()),
            _ => Err(ProdError::Config(format!(
                "target `{}` needs exactly one of `material` or `binding`",
                self.label
            ))),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn x_band() -> f64 {
    10e9
}

fn hh() -> String {
    "HH".into()
}

fn preview_range() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductionConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    pub paradigm: ParadigmSelection,
    #[serde(default)]
    pub targets: Vec<TargetEntry>,
    pub depressions_deg: Vec<f64>,
    pub azimuth: AzimuthSweep,
    #[serde(default)]
    pub sensor: SensorSpec,
    #[serde(default)]
    pub chip: ChipLayout,
    #[serde(default = "x_band")]
    pub frequency_hz: f64,
    #[serde(default = "hh")]
    pub polarization: String,
    #[serde(default)]
    pub sbr: SbrConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    /// Per-chip randomization; its master seed is replaced by
    /// `master_seed`.
    #[serde(default)]
    pub randomization: Option<RandomizationPolicy>,
    /// Chips per (target, geometry, paradigm); variants share one
    /// simulation and differ in noise and randomization.
    #[serde(default = "one_u32")]
    pub variants: u32,
    /// Worker count hint; [`WORKERS_ENV`] overrides it.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub on_error: ErrorPolicy,
    /// Also write an 8-bit PNG next to every chip.
    #[serde(default)]
    pub previews: bool,
    #[serde(default = "preview_range")]
    pub preview_range_db: f64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one_u32() -> u32 {
    1
}

impl ProductionConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: ProductionConfig =
            toml::from_str(text).map_err(|e| ProdError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProdError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn polarization(&self) -> Result<Polarization> {
        self.polarization
            .parse()
            .map_err(|e: sarsim_core::Error| ProdError::Config(e.to_string()))
    }

    pub fn sensor_model(&self) -> Result<SensorModel> {
        self.sensor
            .model()
            .map_err(|e| ProdError::Config(e.to_string()))
    }

    /// Policy with the production master seed.
    pub fn policy(&self) -> Option<RandomizationPolicy> {
        self.randomization.clone().map(|p| RandomizationPolicy {
            master_seed: self.master_seed,
            ..p
        })
    }

    pub fn geometry(&self, azimuth_deg: f64, depression_deg: f64) -> Result<AcquisitionGeometry> {
        Ok(AcquisitionGeometry::new(
            azimuth_deg,
            depression_deg,
            self.frequency_hz,
            self.polarization()?,
        )?)
    }

    /// `workers` hint, overridden by the environment.
    pub fn worker_count(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&n: &usize| n > 0)
            .or(self.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ProdError::Config(msg));
        let az = self.azimuth;
        if !(az.step_deg > 0.0 && az.step_deg.is_finite()) {
            return bad(format!("azimuth step {} must be > 0", az.step_deg));
        }
        if !(0.0 <= az.start_deg && az.start_deg <= az.stop_deg && az.stop_deg <= 360.0) {
            return bad(format!(
                "azimuth range [{}, {}] must lie within [0, 360]",
                az.start_deg, az.stop_deg
            ));
        }
        if self.depressions_deg.is_empty() {
            return bad("depression list is empty".into());
        }
        for &d in &self.depressions_deg {
            if !(0.0..90.0).contains(&d) {
                return bad(format!("depression {d} outside [0, 90)"));
            }
        }
        let mut labels = BTreeSet::new();
        for t in &self.targets {
            if t.label.trim().is_empty() {
                return bad("empty target label".into());
            }
            if t.label.contains(['/', '\\']) {
                return bad(format!(
                    "target label `{}` contains a path separator",
                    t.label
                ));
            }
            if !labels.insert(t.label.as_str()) {
                return bad(format!("duplicate target label `{}`", t.label));
            }
            t.binding()?;
            if !(t.unit_scale > 0.0 && t.unit_scale.is_finite()) {
                return bad(format!("target `{}`: unit scale must be > 0", t.label));
            }
        }
        if self.variants == 0 {
            return bad("variants must be >= 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        if !(self.preview_range_db > 0.0) {
            return bad("preview range must be > 0 dB".into());
        }
        let core = |r: sarsim_core::Result<()>| r.map_err(|e| ProdError::Config(e.to_string()));
        let sensor = self.sensor_model()?;
        core(self.chip.grid(&sensor).map(|_| ()))?;
        self.geometry(0.0, self.depressions_deg[0])
            .map_err(|e| ProdError::Config(e.to_string()))?;
        core(self.sbr.validate())?;
        core(self.detection.validate())?;
        if let Some(policy) = &self.randomization {
            core(policy.validate())?;
        }
        Ok(())
    }
}
