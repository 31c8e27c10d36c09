//! Coplanar facet clusters and planar extents.

use std::collections::{HashMap, VecDeque};

use crate::scene::{Aabb, MaterialId, TargetMesh, Vec3};

/// Connected coplanar facets of one material.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Facet ids in ascending order.
    pub facets: Vec<u32>,
    /// Area-weighted unit normal.
    pub normal: Vec3,
    pub material: MaterialId,
    pub area: f64,
    /// Area-weighted centroid.
    pub centroid: Vec3,
    /// Distinct vertices.
    pub vertices: Vec<Vec3>,
    pub bbox: Aabb,
}

type Key = [i64; 3];

fn key(v: &Vec3, quantum: f64) -> Key {
    [
        (v.x / quantum).round() as i64,
        (v.y / quantum).round() as i64,
        (v.z / quantum).round() as i64,
    ]
}

/// Groups edge-connected facets whose normals lie within `angle_tol_deg` of
/// the seed facet's normal and whose centroids lie within `offset_tol` of the
/// seed plane. Seeds are taken in facet-id order, so the result is a pure
/// function of the mesh.
pub fn coplanar_clusters(mesh: &TargetMesh, angle_tol_deg: f64, offset_tol: f64) -> Vec<Cluster> {
    let n = mesh.len();
    if n == 0 {
        return Vec::new();
    }
    let quantum = (mesh.bbox().diagonal() * 1e-9).max(1e-12);
    let keys: Vec<[Key; 3]> = mesh
        .facets()
        .iter()
        .map(|f| f.vertices.each_ref().map(|v| key(v, quantum)))
        .collect();
    let mut edges: HashMap<(Key, Key), Vec<u32>> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (k[e], k[(e + 1) % 3]);
            let edge = if a <= b { (a, b) } else { (b, a) };
            edges.entry(edge).or_default().push(i as u32);
        }
    }
    let neighbours = |i: usize| -> Vec<u32> {
        let k = &keys[i];
        let mut out: Vec<u32> = (0..3)
            .flat_map(|e| {
                let (a, b) = (k[e], k[(e + 1) % 3]);
                let edge = if a <= b { (a, b) } else { (b, a) };
                edges[&edge].iter().copied()
            })
            .filter(|&j| j as usize != i)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };

    let cos_tol = angle_tol_deg.to_radians().cos();
    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for seed in 0..n {
        if assigned[seed] {
            continue;
        }
        let s = mesh.facet(seed as u32);
        let (sn, sc, sm) = (s.normal, s.centroid(), s.material);
        assigned[seed] = true;
        let mut members = vec![seed as u32];
        let mut queue = VecDeque::from([seed]);
        while let Some(i) = queue.pop_front() {
            for j in neighbours(i) {
                let ju = j as usize;
                if assigned[ju] {
                    continue;
                }
                let f = mesh.facet(j);
                if f.material == sm
                    && f.normal.dot(&sn) >= cos_tol
                    && sn.dot(&(f.centroid() - sc)).abs() <= offset_tol
                {
                    assigned[ju] = true;
                    members.push(j);
                    queue.push_back(ju);
                }
            }
        }
        members.sort_unstable();
        clusters.push(build_cluster(mesh, members, quantum));
    }
    clusters
}

fn build_cluster(mesh: &TargetMesh, facets: Vec<u32>, quantum: f64) -> Cluster {
    let mut normal = Vec3::zeros();
    let mut centroid = Vec3::zeros();
    let mut area = 0.0;
    let mut bbox = Aabb::empty();
    let mut seen = HashMap::new();
    let mut vertices = Vec::new();
    for &id in &facets {
        let f = mesh.facet(id);
        normal += f.normal * f.area;
        centroid += f.centroid() * f.area;
        area += f.area;
        for v in &f.vertices {
            bbox.grow(v);
            seen.entry(key(v, quantum)).or_insert_with(|| {
                vertices.push(*v);
            });
        }
    }
    Cluster {
        material: mesh.facet(facets[0]).material,
        facets,
        normal: normal.normalize(),
        area,
        centroid: centroid / area,
        vertices,
        bbox,
    }
}

/// Minimum-area bounding rectangle of points lying in the plane with unit
/// normal `normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarRect {
    pub center: Vec3,
    /// In-plane axes with `e1 × e2 = normal`.
    pub e1: Vec3,
    pub e2: Vec3,
    /// Side lengths along `e1` and `e2`.
    pub a: f64,
    pub b: f64,
}

impl PlanarRect {
    /// In-plane coordinates of `p` relative to the rectangle's lower corner.
    pub fn local(&self, p: &Vec3) -> (f64, f64) {
        let d = p - self.center;
        (
            d.dot(&self.e1) + 0.5 * self.a,
            d.dot(&self.e2) + 0.5 * self.b,
        )
    }
}

pub fn any_perpendicular(n: &Vec3) -> Vec3 {
    let helper = if n.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    n.cross(&helper).normalize()
}

fn hull(mut pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub fn min_area_rect(points: &[Vec3], normal: &Vec3) -> PlanarRect {
    let u = any_perpendicular(normal);
    let v = normal.cross(&u);
    let origin = points.first().copied().unwrap_or_else(Vec3::zeros);
    let plane: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let d = p - origin;
            (d.dot(&u), d.dot(&v))
        })
        .collect();
    let h = hull(plane);
    let mut dirs: Vec<(f64, f64)> = (0..h.len())
        .filter_map(|i| {
            let (p, q) = (h[i], h[(i + 1) % h.len()]);
            let (dx, dy) = (q.0 - p.0, q.1 - p.1);
            let len = dx.hypot(dy);
            (len > 0.0).then(|| (dx / len, dy / len))
        })
        .collect();
    if dirs.is_empty() {
        dirs.push((1.0, 0.0));
    }
    let mut best: Option<(f64, (f64, f64), [f64; 4])> = None;
    for (cx, cy) in dirs {
        let (mut lo1, mut hi1, mut lo2, mut hi2) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in &h {
            let s = x * cx + y * cy;
            let t = -x * cy + y * cx;
            lo1 = lo1.min(s);
            hi1 = hi1.max(s);
            lo2 = lo2.min(t);
            hi2 = hi2.max(t);
        }
        let area = (hi1 - lo1) * (hi2 - lo2);
        if best.is_none_or(|(a, _, _)| area < a * (1.0 - 1e-12)) {
            best = Some((area, (cx, cy), [lo1, hi1, lo2, hi2]));
        }
    }
    let (_, (cx, cy), [lo1, hi1, lo2, hi2]) = best.unwrap();
    let e1 = (u * cx + v * cy).normalize();
    let e2 = normal.cross(&e1);
    let (m1, m2) = (0.5 * (lo1 + hi1), 0.5 * (lo2 + hi2));
    PlanarRect {
        center: origin + e1 * m1 + e2 * m2,
        e1,
        e2,
        a: hi1 - lo1,
        b: hi2 - lo2,
    }
}
