//! Electromagnetic materials and the material table file.
//!
//! Under the `exp(+jωt)` convention a lossy dielectric has a relative
//! permittivity `ε' - jε''` with `ε'' ≥ 0`, i.e. a non-positive imaginary
//! part. The table file is TOML:
//!
//! ```toml
//! [materials.hull]
//! kind = "pec"
//! sigma0_db = -15.0
//!
//! [materials.soil]
//! kind = "dielectric"
//! permittivity = [6.0, -0.6]
//! reflectivity = 0.9
//! roughness_m = 0.01
//! sigma0_db = -18.0
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Pec,
    Dielectric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MaterialId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub kind: MaterialKind,
    /// Relative permittivity; ignored for PEC.
    pub permittivity: Complex64,
    /// Amplitude scale applied to every coherent reflection, in `[0, 1]`.
    pub reflectivity: f64,
    pub roughness_m: f64,
    /// Backscatter coefficient used by the non-coherent surface fill.
    pub sigma0_db: f64,
}

impl Material {
    pub fn pec() -> Self {
        Material {
            kind: MaterialKind::Pec,
            permittivity: Complex64::new(1.0, 0.0),
            reflectivity: 1.0,
            roughness_m: 0.0,
            sigma0_db: -20.0,
        }
    }

    pub fn dielectric(permittivity: Complex64) -> Self {
        Material {
            kind: MaterialKind::Dielectric,
            permittivity,
            ..Material::pec()
        }
    }

    pub fn with_sigma0_db(mut self, sigma0_db: f64) -> Self {
        self.sigma0_db = sigma0_db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reflectivity) {
            return Err(Error::MaterialTable(format!(
                "reflectivity {} outside [0, 1]",
                self.reflectivity
            )));
        }
        if !self.sigma0_db.is_finite() {
            return Err(Error::MaterialTable("sigma0 must be finite".into()));
        }
        if !(self.roughness_m >= 0.0 && self.roughness_m.is_finite()) {
            return Err(Error::MaterialTable("roughness must be >= 0".into()));
        }
        if self.kind == MaterialKind::Dielectric {
            let eps = self.permittivity;
            if !(eps.re.is_finite() && eps.im.is_finite()) || eps.im > 0.0 || eps.norm() == 0.0 {
                return Err(Error::MaterialTable(format!(
                    "dielectric permittivity {eps} must be finite, nonzero, with Im <= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn sigma0_linear(&self) -> f64 {
        crate::from_db(self.sigma0_db)
    }

    /// Reflection coefficients `(r_s, r_p)` for a wave arriving at
    /// `cos_incidence` from the normal.
    ///
    /// The p basis vectors are `s × d` before and after reflection, so a
    /// perfect conductor gives `(-1, +1)` and both coefficients tend to that
    /// limit as `|ε| → ∞`. The reflectivity scale is included.
    pub fn reflection(&self, cos_incidence: f64) -> (Complex64, Complex64) {
        let scale = self.reflectivity;
        match self.kind {
            MaterialKind::Pec => (Complex64::new(-scale, 0.0), Complex64::new(scale, 0.0)),
            MaterialKind::Dielectric => {
                let eps = self.permittivity;
                let cos = cos_incidence.clamp(0.0, 1.0);
                let sin2 = 1.0 - cos * cos;
                let root = (eps - sin2).sqrt();
                let rs = (cos - root) / (cos + root);
                let rp = (eps * cos - root) / (eps * cos + root);
                (rs * scale, rp * scale)
            }
        }
    }
}

/// Named materials; facets refer to entries by [`MaterialId`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialTable {
    entries: Vec<(String, Material)>,
}

#[derive(Deserialize)]
struct TableFile {
    materials: BTreeMap<String, MaterialEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialEntry {
    kind: MaterialKind,
    #[serde(default)]
    permittivity: Option<[f64; 2]>,
    #[serde(default = "one")]
    reflectivity: f64,
    #[serde(default)]
    roughness_m: f64,
    #[serde(default = "default_sigma0")]
    sigma0_db: f64,
}

fn one() -> f64 {
    1.0
}

fn default_sigma0() -> f64 {
    -20.0
}

impl MaterialTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds or replaces `name`, returning its id.
    pub fn insert(&mut self, name: impl Into<String>, material: Material) -> MaterialId {
        let name = name.into();
        if let Some(pos) = self.entries.iter().position(|(n, _)| *n == name) {
            self.entries[pos].1 = material;
            return MaterialId(pos as u32);
        }
        self.entries.push((name, material));
        MaterialId(self.entries.len() as u32 - 1)
    }

    pub fn id(&self, name: &str) -> Option<MaterialId> {
        self.entries
            .iter()
            .position(|(n, _)| n == name)
            .map(|p| MaterialId(p as u32))
    }

    pub fn get(&self, id: MaterialId) -> Option<&Material> {
        self.entries.get(id.0 as usize).map(|(_, m)| m)
    }

    /// Material for `id`, falling back to PEC for ids outside the table.
    pub fn material(&self, id: MaterialId) -> Material {
        self.get(id).copied().unwrap_or_else(Material::pec)
    }

    pub fn name(&self, id: MaterialId) -> Option<&str> {
        self.entries.get(id.0 as usize).map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (MaterialId, &str, &Material)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (n, m))| (MaterialId(i as u32), n.as_str(), m))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: TableFile =
            toml::from_str(text).map_err(|e| Error::MaterialTable(e.to_string()))?;
        let mut table = MaterialTable::new();
        for (name, entry) in file.materials {
            let permittivity = match (entry.kind, entry.permittivity) {
                (MaterialKind::Dielectric, None) => {
                    return Err(Error::MaterialTable(format!(
                        "dielectric `{name}` needs a permittivity"
                    )))
                }
                (_, Some([re, im])) => Complex64::new(re, im),
                (MaterialKind::Pec, None) => Complex64::new(1.0, 0.0),
            };
            let material = Material {
                kind: entry.kind,
                permittivity,
                reflectivity: entry.reflectivity,
                roughness_m: entry.roughness_m,
                sigma0_db: entry.sigma0_db,
            };
            material
                .validate()
                .map_err(|e| Error::MaterialTable(format!("`{name}`: {e}")))?;
            table.insert(name, material);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }
}
