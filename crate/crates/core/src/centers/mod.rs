//! Scattering centers.
//!
//! The mesh is first reduced to coplanar facet clusters and the visible
//! projected area of every facet is computed for the acquisition geometry.
//! Canonical effects are then detected on the clusters and evaluated with
//! closed-form physical-optics RCS:
//!
//! * plate, `4πA²/λ²` with `A` the visible area;
//! * dihedral, `8πa²b²/λ²` at the bisector, `a` along the fold and `b` the
//!   shorter face depth, reduced off the bisector by the projected width of
//!   the double-bounce aperture;
//! * square trihedral, `12πa⁴/λ²` on its symmetry axis, with a cosine-power
//!   cone off axis.
//!
//! The visible surface is finally covered with non-coherent diffuse
//! scatterers of power `σ0 · A_visible`. The resulting [`M3dModel`] is valid
//! for the geometry it was computed at; directivity patterns let it be
//! rendered in a small angular neighborhood of that geometry.

mod clusters;
mod detect;
mod io;
mod visibility;

pub use clusters::{coplanar_clusters, min_area_rect, Cluster, PlanarRect};
pub use detect::{
    backscatter_fill, detect_dihedrals, detect_plates, detect_trihedrals, dihedral_candidates,
    DihedralCandidate,
};
pub use io::{read_m3d, summary, write_m3d};
pub use visibility::{visible_areas, VisibilityMode};

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scene::{AcquisitionGeometry, LosFrame, MaterialTable, TargetMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Diffuse,
    Plate,
    Dihedral,
    Trihedral,
}

impl EffectKind {
    pub const ALL: [EffectKind; 4] = [
        EffectKind::Diffuse,
        EffectKind::Plate,
        EffectKind::Dihedral,
        EffectKind::Trihedral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EffectKind::Diffuse => "diffuse",
            EffectKind::Plate => "plate",
            EffectKind::Dihedral => "dihedral",
            EffectKind::Trihedral => "trihedral",
        }
    }

    pub fn is_directive(self) -> bool {
        self != EffectKind::Diffuse
    }
}

/// Angular pattern of a scatterer, relative to its detection direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directivity {
    Isotropic,
    /// Separable `sinc` over the extents along `axes` (plates).
    Sinc {
        axes: [Vec3; 2],
    },
    /// `sinc` along the fold and the projected double-bounce width across it.
    Dihedral {
        fold: Vec3,
        bisector: Vec3,
    },
    /// `cos^exponent` of the angle from `axis`.
    Cone {
        axis: Vec3,
        exponent: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatterer {
    pub kind: EffectKind,
    pub position: Vec3,
    /// √m², for the polarization of the model's geometry.
    pub amplitude: Complex64,
    /// Effect dimensions `(a, b)`, m.
    pub extent: (f64, f64),
    pub directivity: Directivity,
    pub coherent: bool,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Fraction of the dihedral's double-bounce aperture seen along `u`, 1 on
/// the bisector.
fn dihedral_width(fold: &Vec3, bisector: &Vec3, u: &Vec3) -> f64 {
    let side = fold.cross(bisector);
    let n1 = (bisector + side) / 2f64.sqrt();
    let n2 = (bisector - side) / 2f64.sqrt();
    let perp = u - fold * u.dot(fold);
    let norm = perp.norm();
    if norm < 1e-12 {
        return 0.0;
    }
    let perp = perp / norm;
    (2f64.sqrt() * perp.dot(&n1).min(perp.dot(&n2))).max(0.0)
}

impl Scatterer {
    /// Amplitude seen along `los` for a scatterer detected along
    /// `detect_los`, wavenumber `k`.
    pub fn amplitude_toward(&self, detect_los: &Vec3, los: &Vec3, k: f64) -> Complex64 {
        let delta = los - detect_los;
        let (a, b) = self.extent;
        let gain = match self.directivity {
            Directivity::Isotropic => 1.0,
            Directivity::Sinc { axes } => {
                let n = axes[0].cross(&axes[1]);
                let (c0, c1) = (n.dot(detect_los), n.dot(los));
                if c1 <= 0.0 || c0 <= 0.0 {
                    0.0
                } else {
                    sinc(k * a * delta.dot(&axes[0])) * sinc(k * b * delta.dot(&axes[1])) * c1 / c0
                }
            }
            Directivity::Dihedral { fold, bisector } => {
                let w0 = dihedral_width(&fold, &bisector, detect_los);
                if w0 <= 0.0 {
                    0.0
                } else {
                    sinc(k * a * delta.dot(&fold)) * dihedral_width(&fold, &bisector, los) / w0
                }
            }
            Directivity::Cone { axis, exponent } => {
                let (c0, c1) = (axis.dot(detect_los), axis.dot(los));
                if c1 <= 0.0 || c0 <= 0.0 {
                    0.0
                } else {
                    (c1 / c0).powf(exponent)
                }
            }
        };
        self.amplitude * gain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    /// Maximum angle between a plate normal (or the normal to a dihedral
    /// fold) and the line of sight, degrees.
    pub specular_tolerance_deg: f64,
    /// Maximum deviation from a right angle between dihedral or trihedral
    /// faces, degrees.
    pub orthogonality_tolerance_deg: f64,
    /// Depth-buffer samples per bounding-box diagonal.
    pub buffer_resolution: u32,
    pub min_effective_area_m2: f64,
    pub visibility: VisibilityMode,
    /// Facets within this angle of a cluster's seed normal are coplanar.
    pub coplanar_tolerance_deg: f64,
    /// Minimum visible fraction of each face of a multi-bounce effect.
    pub min_visible_fraction: f64,
    /// Trihedral acceptance half-angle around its symmetry axis, degrees.
    pub trihedral_cone_deg: f64,
    /// Power of the cosine pattern around the trihedral axis (amplitude).
    pub trihedral_exponent: f64,
    /// Diffuse fill cell size, m.
    pub diffuse_cell_m: f64,
    /// Diffuse power is `σ0 · A · cos^p(incidence)` with `A` the true
    /// visible area; `p = 1` gives `σ0` times the projected area.
    pub incidence_exponent: f64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            specular_tolerance_deg: 1.0,
            orthogonality_tolerance_deg: 3.0,
            buffer_resolution: 1024,
            min_effective_area_m2: 1e-4,
            visibility: VisibilityMode::DepthBuffer,
            coplanar_tolerance_deg: 0.1,
            min_visible_fraction: 0.5,
            trihedral_cone_deg: 35.0,
            trihedral_exponent: 25.0,
            diffuse_cell_m: 0.5,
            incidence_exponent: 1.0,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("specular tolerance", self.specular_tolerance_deg),
            ("orthogonality tolerance", self.orthogonality_tolerance_deg),
            ("coplanar tolerance", self.coplanar_tolerance_deg),
            ("trihedral cone", self.trihedral_cone_deg),
            ("diffuse cell", self.diffuse_cell_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0")));
            }
        }
        if self.buffer_resolution < 64 {
            return Err(Error::invalid("buffer resolution must be >= 64"));
        }
        if !(self.min_effective_area_m2 >= 0.0) {
            return Err(Error::invalid("minimum effective area must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.min_visible_fraction) {
            return Err(Error::invalid("minimum visible fraction must be in [0, 1]"));
        }
        if !(self.trihedral_exponent >= 0.0 && self.incidence_exponent >= 0.0) {
            return Err(Error::invalid("pattern exponents must be >= 0"));
        }
        Ok(())
    }
}

/// Per-facet visible projected area, m².
pub fn visible_set(
    mesh: &TargetMesh,
    geom: &AcquisitionGeometry,
    cfg: &DetectionConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let frame = geom.frame()?;
    Ok(visible_areas(
        mesh,
        &frame,
        cfg.visibility,
        cfg.buffer_resolution,
    ))
}

/// Mesh state shared by the detectors for one geometry.
#[derive(Debug, Clone)]
pub struct Analysis<'a> {
    pub mesh: &'a TargetMesh,
    pub geometry: AcquisitionGeometry,
    pub frame: LosFrame,
    pub config: DetectionConfig,
    /// Visible projected area per facet.
    pub visible: Vec<f64>,
    pub clusters: Vec<Cluster>,
    /// Visible projected area per cluster.
    pub cluster_visible: Vec<f64>,
    /// Length scale for contact tests, m.
    pub contact_tolerance: f64,
}

impl<'a> Analysis<'a> {
    pub fn new(
        mesh: &'a TargetMesh,
        geom: &AcquisitionGeometry,
        cfg: &DetectionConfig,
    ) -> Result<Self> {
        let visible = visible_set(mesh, geom, cfg)?;
        let diag = mesh.bbox().diagonal();
        let diag = if diag.is_finite() { diag } else { 0.0 };
        let clusters = coplanar_clusters(mesh, cfg.coplanar_tolerance_deg, 1e-4 * diag + 1e-9);
        let cluster_visible = clusters
            .iter()
            .map(|c| c.facets.iter().map(|&f| visible[f as usize]).sum())
            .collect();
        Ok(Analysis {
            mesh,
            geometry: *geom,
            frame: geom.frame()?,
            config: *cfg,
            visible,
            clusters,
            cluster_visible,
            contact_tolerance: 1e-3 * diag + 1e-9,
        })
    }

    /// Visible fraction of the cluster's unoccluded projected area.
    pub fn visible_fraction(&self, cluster: usize) -> f64 {
        let c = &self.clusters[cluster];
        let full = c.area * c.normal.dot(&self.frame.los);
        if full <= 0.0 {
            0.0
        } else {
            (self.cluster_visible[cluster] / full).min(1.0)
        }
    }

    /// Visible-area-weighted centroid of the cluster, falling back to the
    /// geometric centroid.
    pub fn visible_centroid(&self, cluster: usize) -> Vec3 {
        let c = &self.clusters[cluster];
        let mut sum = Vec3::zeros();
        let mut w = 0.0;
        for &f in &c.facets {
            let v = self.visible[f as usize];
            sum += self.mesh.facet(f).centroid() * v;
            w += v;
        }
        if w > 0.0 {
            sum / w
        } else {
            c.centroid
        }
    }
}

/// Scatterer list valid for one acquisition geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct M3dModel {
    pub scatterers: Vec<Scatterer>,
    pub geometry: AcquisitionGeometry,
    pub config: DetectionConfig,
}

impl M3dModel {
    pub fn count(&self, kind: EffectKind) -> usize {
        self.scatterers.iter().filter(|s| s.kind == kind).count()
    }

    /// `|Σ a·exp(-j2k r)|²` over the coherent scatterers at the model's own
    /// geometry, `r` the slant range of each scatterer.
    pub fn coherent_rcs(&self) -> Result<f64> {
        let frame = self.geometry.frame()?;
        let k = self.geometry.wavenumber();
        let sum: Complex64 = self
            .scatterers
            .iter()
            .filter(|s| s.coherent)
            .map(|s| {
                s.amplitude * Complex64::from_polar(1.0, -2.0 * k * frame.range_of(&s.position))
            })
            .sum();
        Ok(sum.norm_sqr())
    }

    /// Sum of `|a|²` over the non-coherent scatterers.
    pub fn diffuse_power(&self) -> f64 {
        self.scatterers
            .iter()
            .filter(|s| !s.coherent)
            .map(|s| s.amplitude.norm_sqr())
            .sum()
    }

    /// Copy with the diffuse phases redrawn for another realization.
    pub fn with_diffuse_phases(&self, seed: u64) -> M3dModel {
        let mut out = self.clone();
        let mut rng = crate::rng::stream(seed, DIFFUSE_STREAM);
        for s in out.scatterers.iter_mut().filter(|s| !s.coherent) {
            s.amplitude =
                Complex64::from_polar(s.amplitude.norm(), rng.random_range(0.0..2.0 * PI));
        }
        out
    }
}

pub(crate) const DIFFUSE_STREAM: u64 = 0xD1FF;

/// Detects every canonical effect, fills the visible surface and stamps the
/// result with the geometry and configuration.
pub fn assemble_m3d(
    mesh: &TargetMesh,
    geom: &AcquisitionGeometry,
    materials: &MaterialTable,
    cfg: &DetectionConfig,
    seed: u64,
) -> Result<M3dModel> {
    cfg.validate()?;
    geom.validate()?;
    if mesh.is_empty() {
        return Ok(M3dModel {
            scatterers: Vec::new(),
            geometry: *geom,
            config: *cfg,
        });
    }
    let analysis = Analysis::new(mesh, geom, cfg)?;
    let mut scatterers = detect_plates(&analysis);
    scatterers.extend(detect_dihedrals(&analysis));
    scatterers.extend(detect_trihedrals(&analysis));
    scatterers.extend(backscatter_fill(&analysis, materials, seed));
    Ok(M3dModel {
        scatterers,
        geometry: *geom,
        config: *cfg,
    })
}

/// Per-kind probabilities for the directive effects.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectProbabilities {
    pub plate: f64,
    pub dihedral: f64,
    pub trihedral: f64,
}

impl EffectProbabilities {
    pub fn get(&self, kind: EffectKind) -> f64 {
        match kind {
            EffectKind::Diffuse => 0.0,
            EffectKind::Plate => self.plate,
            EffectKind::Dihedral => self.dihedral,
            EffectKind::Trihedral => self.trihedral,
        }
    }

    fn validate(&self) -> Result<()> {
        for p in [self.plate, self.dihedral, self.trihedral] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid("probabilities must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbPolicy {
    /// Standard deviation of the isotropic position jitter, m.
    pub position_sigma_m: f64,
    pub drop: EffectProbabilities,
    pub duplicate: EffectProbabilities,
}

/// Jitters every position and drops or duplicates directive effects.
/// Duplicates follow their original with independent jitter.
pub fn perturb_m3d(model: &M3dModel, policy: &PerturbPolicy, seed: u64) -> Result<M3dModel> {
    if !(policy.position_sigma_m >= 0.0 && policy.position_sigma_m.is_finite()) {
        return Err(Error::invalid("position sigma must be >= 0"));
    }
    policy.drop.validate()?;
    policy.duplicate.validate()?;
    let mut rng = crate::rng::stream(seed, 0);
    let sigma = policy.position_sigma_m;
    let jitter = |rng: &mut rand_chacha::ChaCha8Rng| {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        Vec3::new(v[0], v[1], v[2]) * sigma
    };
    let mut out = Vec::with_capacity(model.scatterers.len());
    for s in &model.scatterers {
        // Fixed draw count per scatterer keeps streams aligned across policies.
        let u_drop: f64 = rng.random();
        let u_dup: f64 = rng.random();
        let d0 = jitter(&mut rng);
        let d1 = jitter(&mut rng);
        if u_drop < policy.drop.get(s.kind) {
            continue;
        }
        let mut kept = s.clone();
        kept.position += d0;
        out.push(kept);
        if u_dup < policy.duplicate.get(s.kind) {
            let mut copy = s.clone();
            copy.position += d1;
            out.push(copy);
        }
    }
    Ok(M3dModel {
        scatterers: out,
        geometry: model.geometry,
        config: model.config,
    })
}

#[cfg(test)]
mod tests;
