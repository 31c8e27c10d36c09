//! Bounding-volume hierarchy over mesh facets.
//!
//! Nearest-hit queries return the same facet and distance as a linear scan:
//! both use [`intersect_triangle`] and break distance ties on the lower
//! facet id, and traversal only prunes nodes strictly farther than the best
//! hit so far.

use super::mesh::{Aabb, TargetMesh};
use super::Vec3;
use crate::{Error, Result};

const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Unit direction.
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Ray { origin, dir }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub facet: u32,
    pub t: f64,
}

impl Hit {
    fn closer_than(&self, other: &Option<Hit>) -> bool {
        match other {
            None => true,
            Some(o) => self.t < o.t || (self.t == o.t && self.facet < o.facet),
        }
    }
}

/// Möller–Trumbore intersection, two-sided. Returns the ray parameter of a
/// hit with `t > t_min`.
#[inline]
pub fn intersect_triangle(ray: &Ray, v: &[Vec3; 3], t_min: f64) -> Option<f64> {
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = ray.dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - v[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let w = ray.dir.dot(&q) * inv;
    if w < 0.0 || u + w > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > t_min).then_some(t)
}

/// Linear scan over every facet; the reference for [`AccelIndex::nearest`].
pub fn brute_force_nearest(
    mesh: &TargetMesh,
    ray: &Ray,
    t_min: f64,
    skip: Option<u32>,
) -> Option<Hit> {
    let mut best = None;
    for (i, f) in mesh.facets().iter().enumerate() {
        let id = i as u32;
        if Some(id) == skip {
            continue;
        }
        if let Some(t) = intersect_triangle(ray, &f.vertices, t_min) {
            let hit = Hit { facet: id, t };
            if hit.closer_than(&best) {
                best = Some(hit);
            }
        }
    }
    best
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    /// Leaf: first entry in `order`. Inner: index of the right child (the
    /// left child follows the node directly).
    start: u32,
    /// Leaf entry count; zero for inner nodes.
    count: u32,
}

/// Immutable spatial index owning its mesh.
#[derive(Debug, Clone)]
pub struct AccelIndex {
    mesh: TargetMesh,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct QueryStats {
    pub nodes_visited: usize,
    pub triangles_tested: usize,
}

struct BuildItem {
    bbox: Aabb,
    centroid: Vec3,
    id: u32,
}

impl AccelIndex {
    pub fn new(mesh: TargetMesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut items: Vec<BuildItem> = mesh
            .facets()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut bbox = Aabb::empty();
                f.vertices.iter().for_each(|v| bbox.grow(v));
                BuildItem {
                    bbox,
                    centroid: f.centroid(),
                    id: i as u32,
                }
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * items.len() / LEAF_SIZE + 1);
        let n = items.len();
        build_recursive(&mut items, 0, n, &mut nodes);
        let order = items.iter().map(|it| it.id).collect();
        Ok(AccelIndex { mesh, nodes, order })
    }

    pub fn mesh(&self) -> &TargetMesh {
        &self.mesh
    }

    pub fn bbox(&self) -> Aabb {
        self.nodes[0].bbox
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nearest facet hit with `t > t_min`, excluding `skip`.
    pub fn nearest(&self, ray: &Ray, t_min: f64, skip: Option<u32>) -> Option<Hit> {
        self.nearest_with_stats(ray, t_min, skip).0
    }

    pub fn nearest_with_stats(
        &self,
        ray: &Ray,
        t_min: f64,
        skip: Option<u32>,
    ) -> (Option<Hit>, QueryStats) {
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut stats = QueryStats::default();
        let mut best: Option<Hit> = None;
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        if let Some(t) = slab(&self.nodes[0].bbox, ray, &inv) {
            stack.push((0, t));
        }
        while let Some((idx, t_enter)) = stack.pop() {
            if let Some(b) = best {
                if t_enter > b.t {
                    continue;
                }
            }
            stats.nodes_visited += 1;
            let node = &self.nodes[idx];
            if node.count > 0 {
                let start = node.start as usize;
                for &id in &self.order[start..start + node.count as usize] {
                    if Some(id) == skip {
                        continue;
                    }
                    stats.triangles_tested += 1;
                    let f = self.mesh.facet(id);
                    if let Some(t) = intersect_triangle(ray, &f.vertices, t_min) {
                        let hit = Hit { facet: id, t };
                        if hit.closer_than(&best) {
                            best = Some(hit);
                        }
                    }
                }
                continue;
            }
            let (left, right) = (idx + 1, node.start as usize);
            let tl = slab(&self.nodes[left].bbox, ray, &inv);
            let tr = slab(&self.nodes[right].bbox, ray, &inv);
            // Push the farther child first so the nearer one is popped next.
            match (tl, tr) {
                (Some(a), Some(b)) if a <= b => {
                    stack.push((right, b));
                    stack.push((left, a));
                }
                (Some(a), Some(b)) => {
                    stack.push((left, a));
                    stack.push((right, b));
                }
                (Some(a), None) => stack.push((left, a)),
                (None, Some(b)) => stack.push((right, b)),
                (None, None) => {}
            }
        }
        (best, stats)
    }
}

/// Entry distance of the ray into `bbox` (clamped at 0), if it intersects.
/// The box is padded slightly so that flat boxes and grazing rays are
/// never culled by rounding.
#[inline]
fn slab(bbox: &Aabb, ray: &Ray, inv: &Vec3) -> Option<f64> {
    let pad = 1e-9 * (1.0 + bbox.extent().amax());
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        let lo = bbox.min[a] - pad;
        let hi = bbox.max[a] + pad;
        if ray.dir[a] == 0.0 {
            if ray.origin[a] < lo || ray.origin[a] > hi {
                return None;
            }
            continue;
        }
        let mut ta = (lo - ray.origin[a]) * inv[a];
        let mut tb = (hi - ray.origin[a]) * inv[a];
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return None;
        }
    }
    Some(t0)
}

fn build_recursive(items: &mut [BuildItem], start: usize, end: usize, nodes: &mut Vec<Node>) {
    let slice = &mut items[start..end];
    let mut bbox = Aabb::empty();
    let mut cbox = Aabb::empty();
    for it in slice.iter() {
        bbox = bbox.union(&it.bbox);
        cbox.grow(&it.centroid);
    }
    let idx = nodes.len();
    nodes.push(Node {
        bbox,
        start: start as u32,
        count: (end - start) as u32,
    });
    if slice.len() <= LEAF_SIZE {
        return;
    }
    let Some(mid) = split(slice, &cbox) else {
        return;
    };
    nodes[idx].count = 0;
    build_recursive(items, start, start + mid, nodes);
    nodes[idx].start = nodes.len() as u32;
    build_recursive(items, start + mid, end, nodes);
}

/// Binned surface-area-heuristic split; falls back to a median split when
/// binning cannot separate the items. `None` keeps the node a leaf.
fn split(items: &mut [BuildItem], cbox: &Aabb) -> Option<usize> {
    let extent = cbox.extent();
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 {
        // All centroids coincide; split by position in the list.
        return (items.len() > 2 * LEAF_SIZE).then_some(items.len() / 2);
    }
    let bin_of = |c: &Vec3| {
        let f = (c[axis] - cbox.min[axis]) / extent[axis] * SAH_BINS as f64;
        (f as usize).min(SAH_BINS - 1)
    };
    let mut bins = [(Aabb::empty(), 0usize); SAH_BINS];
    for it in items.iter() {
        let b = bin_of(&it.centroid);
        bins[b].0 = bins[b].0.union(&it.bbox);
        bins[b].1 += 1;
    }
    let mut best = (f64::INFINITY, 0);
    for cut in 1..SAH_BINS {
        let (mut lb, mut ln) = (Aabb::empty(), 0);
        for b in &bins[..cut] {
            lb = lb.union(&b.0);
            ln += b.1;
        }
        let (mut rb, mut rn) = (Aabb::empty(), 0);
        for b in &bins[cut..] {
            rb = rb.union(&b.0);
            rn += b.1;
        }
        if ln == 0 || rn == 0 {
            continue;
        }
        let cost = lb.surface_area() * ln as f64 + rb.surface_area() * rn as f64;
        if cost < best.0 {
            best = (cost, cut);
        }
    }
    if best.0.is_finite() {
        let cut = best.1;
        let mut i = 0;
        for j in 0..items.len() {
            if bin_of(&items[j].centroid) < cut {
                items.swap(i, j);
                i += 1;
            }
        }
        return Some(i);
    }
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| a.centroid[axis].total_cmp(&b.centroid[axis]));
    Some(mid)
}
