//! Canonical effect detection and diffuse fill.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::clusters::min_area_rect;
use super::{Analysis, Directivity, EffectKind, Scatterer, DIFFUSE_STREAM};
use crate::scene::{MaterialTable, Pol, Vec3};

/// Scattering-matrix element of an effect for the analysis polarization.
///
/// Odd-bounce returns of a plate reverse the field (`-I`), a trihedral's
/// three reflections restore it (`+I`); a dihedral keeps the component
/// along its fold and reverses the one across it.
fn polarimetric(a: &Analysis, kind: EffectKind, fold: Option<&Vec3>) -> f64 {
    let pol = a.geometry.polarization;
    let co = pol.transmit == pol.receive;
    match kind {
        EffectKind::Diffuse => 1.0,
        EffectKind::Plate => {
            if co {
                -1.0
            } else {
                0.0
            }
        }
        EffectKind::Trihedral => {
            if co {
                1.0
            } else {
                0.0
            }
        }
        EffectKind::Dihedral => {
            let f = fold.expect("dihedral without fold");
            let psi = f.dot(&a.frame.elevation).atan2(f.dot(&a.frame.cross));
            let (s2, c2) = (2.0 * psi).sin_cos();
            match (pol.transmit, pol.receive) {
                (Pol::H, Pol::H) => c2,
                (Pol::V, Pol::V) => -c2,
                _ => s2,
            }
        }
    }
}

fn po_amplitude(area: f64, lambda: f64) -> f64 {
    (4.0 * PI).sqrt() * area / lambda
}

/// One plate per visible coplanar cluster facing the sensor within the
/// specular tolerance.
pub fn detect_plates(a: &Analysis) -> Vec<Scatterer> {
    let cfg = &a.config;
    let u = a.frame.los;
    let cos_tol = cfg.specular_tolerance_deg.to_radians().cos();
    let lambda = a.geometry.wavelength();
    let sign = polarimetric(a, EffectKind::Plate, None);
    if sign == 0.0 {
        return Vec::new();
    }
    a.clusters
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let area = a.cluster_visible[i];
            if c.normal.dot(&u) < cos_tol || area < cfg.min_effective_area_m2 || area <= 0.0 {
                return None;
            }
            let rect = min_area_rect(&c.vertices, &c.normal);
            Some(Scatterer {
                kind: EffectKind::Plate,
                position: a.visible_centroid(i),
                amplitude: Complex64::new(sign * po_amplitude(area, lambda), 0.0),
                extent: (rect.a, rect.b),
                directivity: Directivity::Sinc {
                    axes: [rect.e1, rect.e2],
                },
                coherent: true,
            })
        })
        .collect()
}

/// A concave right-angle pair of clusters meeting along a common fold,
/// independent of the viewing direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DihedralCandidate {
    /// Cluster indices, `first < second`.
    pub clusters: (usize, usize),
    /// Unit fold direction.
    pub fold: Vec3,
    /// Midpoint of the common fold segment.
    pub midpoint: Vec3,
    /// Common fold length, m.
    pub length: f64,
    /// Face depths away from the fold, m.
    pub depths: (f64, f64),
}

/// Point on the intersection line of planes `n1·x = d1`, `n2·x = d2`.
fn plane_line(n1: &Vec3, d1: f64, n2: &Vec3, d2: f64) -> (Vec3, Vec3) {
    let f = n1.cross(n2);
    let p = (n2.cross(&f) * d1 - n1.cross(&f) * d2) / f.norm_squared();
    (p, f.normalize())
}

fn pair_candidate(a: &Analysis, i: usize, j: usize) -> Option<DihedralCandidate> {
    let (ci, cj) = (&a.clusters[i], &a.clusters[j]);
    let sin_tol = a.config.orthogonality_tolerance_deg.to_radians().sin();
    if ci.normal.dot(&cj.normal).abs() > sin_tol {
        return None;
    }
    let tol = a.contact_tolerance;
    let boxes_touch = (0..3)
        .all(|k| ci.bbox.min[k] <= cj.bbox.max[k] + tol && cj.bbox.min[k] <= ci.bbox.max[k] + tol);
    if !boxes_touch {
        return None;
    }
    // Concave: each face lies on the reflective side of the other.
    if ci.normal.dot(&(cj.centroid - ci.centroid)) <= tol
        || cj.normal.dot(&(ci.centroid - cj.centroid)) <= tol
    {
        return None;
    }
    let (p0, fold) = plane_line(
        &ci.normal,
        ci.normal.dot(&ci.centroid),
        &cj.normal,
        cj.normal.dot(&cj.centroid),
    );
    let along = |c: &super::Cluster| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut depth: f64 = 0.0;
        for v in &c.vertices {
            let d = v - p0;
            let s = d.dot(&fold);
            let dist = (d - fold * s).norm();
            depth = depth.max(dist);
            if dist <= tol {
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo, hi, depth)
    };
    let (lo_i, hi_i, b_i) = along(ci);
    let (lo_j, hi_j, b_j) = along(cj);
    let (lo, hi) = (lo_i.max(lo_j), hi_i.min(hi_j));
    if !(hi - lo > tol) {
        return None;
    }
    Some(DihedralCandidate {
        clusters: (i, j),
        fold,
        midpoint: p0 + fold * (0.5 * (lo + hi)),
        length: hi - lo,
        depths: (b_i, b_j),
    })
}

/// All concave right-angle cluster pairs sharing a fold segment, ordered
/// by cluster index.
pub fn dihedral_candidates(a: &Analysis) -> Vec<DihedralCandidate> {
    let n = a.clusters.len();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..n).filter_map(move |j| pair_candidate(a, i, j)))
        .collect()
}

fn faces_visible(a: &Analysis, clusters: &[usize]) -> bool {
    clusters.iter().all(|&c| {
        a.clusters[c].normal.dot(&a.frame.los) > 0.0
            && a.visible_fraction(c) >= a.config.min_visible_fraction
    })
}

/// One dihedral per candidate pair whose fold is perpendicular to the line
/// of sight within the specular tolerance, both faces visible.
pub fn detect_dihedrals(a: &Analysis) -> Vec<Scatterer> {
    let u = a.frame.los;
    let sin_tol = a.config.specular_tolerance_deg.to_radians().sin();
    let lambda = a.geometry.wavelength();
    dihedral_candidates(a)
        .into_iter()
        .filter_map(|c| {
            let (i, j) = c.clusters;
            if c.fold.dot(&u).abs() > sin_tol || !faces_visible(a, &[i, j]) {
                return None;
            }
            let sign = polarimetric(a, EffectKind::Dihedral, Some(&c.fold));
            if sign == 0.0 {
                return None;
            }
            let (n1, n2) = (a.clusters[i].normal, a.clusters[j].normal);
            let bisector = (n1 + n2).normalize();
            let b = c.depths.0.min(c.depths.1);
            // At the bisector the aperture is √2·a·b.
            let area = 2f64.sqrt() * c.length * b * super::dihedral_width(&c.fold, &bisector, &u);
            if area < a.config.min_effective_area_m2 || area <= 0.0 {
                return None;
            }
            Some(Scatterer {
                kind: EffectKind::Dihedral,
                position: c.midpoint,
                amplitude: Complex64::new(sign * po_amplitude(area, lambda), 0.0),
                extent: (c.length, b),
                directivity: Directivity::Dihedral {
                    fold: c.fold,
                    bisector,
                },
                coherent: true,
            })
        })
        .collect()
}

/// One trihedral per mutually orthogonal concave cluster triple with a
/// common apex, the line of sight inside the acceptance cone.
pub fn detect_trihedrals(a: &Analysis) -> Vec<Scatterer> {
    let pairs = dihedral_candidates(a);
    let mut adjacent: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in &pairs {
        adjacent.entry(c.clusters.0).or_default().push(c.clusters.1);
    }
    let linked = |i: usize, j: usize| {
        adjacent
            .get(&i)
            .is_some_and(|v| v.binary_search(&j).is_ok())
    };
    let u = a.frame.los;
    let cos_cone = a.config.trihedral_cone_deg.to_radians().cos();
    let lambda = a.geometry.wavelength();
    let sign = polarimetric(a, EffectKind::Trihedral, None);
    if sign == 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (&i, next) in &adjacent {
        for (x, &j) in next.iter().enumerate() {
            for &k in &next[x + 1..] {
                if !linked(j, k) {
                    continue;
                }
                let cs = [&a.clusters[i], &a.clusters[j], &a.clusters[k]];
                let m = Matrix3::from_rows(&[
                    cs[0].normal.transpose(),
                    cs[1].normal.transpose(),
                    cs[2].normal.transpose(),
                ]);
                let d = Vec3::new(
                    cs[0].normal.dot(&cs[0].centroid),
                    cs[1].normal.dot(&cs[1].centroid),
                    cs[2].normal.dot(&cs[2].centroid),
                );
                let Some(apex) = m.try_inverse().map(|inv| inv * d) else {
                    continue;
                };
                let touches = cs.iter().all(|c| {
                    c.vertices
                        .iter()
                        .any(|v| (v - apex).norm() <= a.contact_tolerance)
                });
                if !touches {
                    continue;
                }
                let axis = (cs[0].normal + cs[1].normal + cs[2].normal).normalize();
                let cos_axis = axis.dot(&u);
                if cos_axis < cos_cone || !faces_visible(a, &[i, j, k]) {
                    continue;
                }
                // Side of the square corner: shortest face extent along
                // the other two normals.
                let mut side = f64::INFINITY;
                for (p, c) in cs.iter().enumerate() {
                    for (q, other) in cs.iter().enumerate() {
                        if p == q {
                            continue;
                        }
                        let ext = c
                            .vertices
                            .iter()
                            .map(|v| (v - apex).dot(&other.normal))
                            .fold(0.0, f64::max);
                        side = side.min(ext);
                    }
                }
                let peak = (12.0 * PI).sqrt() * side * side / lambda;
                if side * side < a.config.min_effective_area_m2 {
                    continue;
                }
                let exponent = a.config.trihedral_exponent;
                out.push(Scatterer {
                    kind: EffectKind::Trihedral,
                    position: apex,
                    amplitude: Complex64::new(sign * peak * cos_axis.powf(exponent), 0.0),
                    extent: (side, side),
                    directivity: Directivity::Cone { axis, exponent },
                    coherent: true,
                });
            }
        }
    }
    out
}

/// Non-coherent scatterers covering the visible surface: one per visible
/// cluster, or per `diffuse_cell_m` cell of larger clusters.
pub fn backscatter_fill(a: &Analysis, materials: &MaterialTable, seed: u64) -> Vec<Scatterer> {
    let cfg = &a.config;
    let u = a.frame.los;
    let mut rng = crate::rng::stream(seed, DIFFUSE_STREAM);
    let mut out = Vec::new();
    for (ci, c) in a.clusters.iter().enumerate() {
        if a.cluster_visible[ci] <= 0.0 {
            continue;
        }
        let cos_inc = c.normal.dot(&u);
        if cos_inc <= 0.0 {
            continue;
        }
        let sigma0 = materials.material(c.material).sigma0_linear();
        let weight = sigma0 * cos_inc.powf(cfg.incidence_exponent - 1.0);
        let rect = min_area_rect(&c.vertices, &c.normal);
        let mut cells: BTreeMap<(i64, i64), (f64, Vec3)> = BTreeMap::new();
        for &f in &c.facets {
            let vis = a.visible[f as usize];
            if vis <= 0.0 {
                continue;
            }
            let centroid = a.mesh.facet(f).centroid();
            let (s, t) = rect.local(&centroid);
            let key = (
                (s / cfg.diffuse_cell_m).floor() as i64,
                (t / cfg.diffuse_cell_m).floor() as i64,
            );
            let e = cells.entry(key).or_insert((0.0, Vec3::zeros()));
            e.0 += vis;
            e.1 += centroid * vis;
        }
        for (_, (vis, weighted)) in cells {
            let power = weight * vis;
            let phase = rng.random_range(0.0..2.0 * PI);
            out.push(Scatterer {
                kind: EffectKind::Diffuse,
                position: weighted / vis,
                amplitude: Complex64::from_polar(power.sqrt(), phase),
                extent: (0.0, 0.0),
                directivity: Directivity::Isotropic,
                coherent: false,
            });
        }
    }
    out
}
