//! Visible projected facet area on the plane perpendicular to the line of
//! sight.
//!
//! Every facet occludes, whichever side faces the sensor; only front-facing
//! facets are credited with area. Depth is the coordinate along the line of
//! sight toward the sensor, so larger depth wins.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scene::{LosFrame, TargetMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityMode {
    DepthBuffer,
    ExactClipping,
}

type P2 = (f64, f64);

struct Projected {
    pts: [P2; 3],
    depth: [f64; 3],
    /// Twice the signed projected area.
    area2: f64,
    lo: P2,
    hi: P2,
}

impl Projected {
    fn new(vertices: &[Vec3; 3], frame: &LosFrame) -> Self {
        let pts = vertices.map(|v| (frame.cross.dot(&v), frame.elevation.dot(&v)));
        let depth = vertices.map(|v| frame.los.dot(&v));
        let area2 = cross(pts[0], pts[1], pts[2]);
        let lo = (
            pts[0].0.min(pts[1].0).min(pts[2].0),
            pts[0].1.min(pts[1].1).min(pts[2].1),
        );
        let hi = (
            pts[0].0.max(pts[1].0).max(pts[2].0),
            pts[0].1.max(pts[1].1).max(pts[2].1),
        );
        Projected {
            pts,
            depth,
            area2,
            lo,
            hi,
        }
    }

    /// Counter-clockwise vertex order.
    fn ccw(&self) -> Vec<P2> {
        if self.area2 >= 0.0 {
            self.pts.to_vec()
        } else {
            vec![self.pts[0], self.pts[2], self.pts[1]]
        }
    }

    fn depth_at(&self, p: P2) -> f64 {
        let [a, b, c] = self.pts;
        let w0 = cross(b, c, p) / self.area2;
        let w1 = cross(c, a, p) / self.area2;
        let w2 = 1.0 - w0 - w1;
        w0 * self.depth[0] + w1 * self.depth[1] + w2 * self.depth[2]
    }

    fn overlaps(&self, other: &Projected) -> bool {
        self.lo.0 < other.hi.0
            && other.lo.0 < self.hi.0
            && self.lo.1 < other.hi.1
            && other.lo.1 < self.hi.1
    }
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Visible projected area of each facet, m².
pub fn visible_areas(
    mesh: &TargetMesh,
    frame: &LosFrame,
    mode: VisibilityMode,
    resolution: u32,
) -> Vec<f64> {
    if mesh.is_empty() {
        return Vec::new();
    }
    let projected: Vec<Projected> = mesh
        .facets()
        .iter()
        .map(|f| Projected::new(&f.vertices, frame))
        .collect();
    let front: Vec<bool> = mesh
        .facets()
        .iter()
        .map(|f| f.normal.dot(&frame.los) > 0.0)
        .collect();
    match mode {
        VisibilityMode::DepthBuffer => {
            depth_buffer(&projected, &front, mesh.bbox().diagonal(), resolution)
        }
        VisibilityMode::ExactClipping => exact(&projected, &front),
    }
}

fn depth_buffer(
    projected: &[Projected],
    front: &[bool],
    diagonal: f64,
    resolution: u32,
) -> Vec<f64> {
    let h = diagonal / resolution as f64;
    let lo = projected
        .iter()
        .fold((f64::INFINITY, f64::INFINITY), |acc, p| {
            (acc.0.min(p.lo.0), acc.1.min(p.lo.1))
        });
    let hi = projected
        .iter()
        .fold((f64::NEG_INFINITY, f64::NEG_INFINITY), |acc, p| {
            (acc.0.max(p.hi.0), acc.1.max(p.hi.1))
        });
    let nx = ((hi.0 - lo.0) / h).ceil() as usize + 1;
    let ny = ((hi.1 - lo.1) / h).ceil() as usize + 1;
    let mut depth = vec![f64::NEG_INFINITY; nx * ny];
    let mut owner = vec![u32::MAX; nx * ny];

    for (id, p) in projected.iter().enumerate() {
        if p.area2.abs() < 1e-300 {
            continue;
        }
        let ix0 = (((p.lo.0 - lo.0) / h - 0.5).ceil().max(0.0)) as usize;
        let ix1 = (((p.hi.0 - lo.0) / h - 0.5).floor() as isize).min(nx as isize - 1);
        let iy0 = (((p.lo.1 - lo.1) / h - 0.5).ceil().max(0.0)) as usize;
        let iy1 = (((p.hi.1 - lo.1) / h - 0.5).floor() as isize).min(ny as isize - 1);
        if ix1 < ix0 as isize || iy1 < iy0 as isize {
            continue;
        }
        let tri = p.ccw();
        for iy in iy0..=iy1 as usize {
            let y = lo.1 + (iy as f64 + 0.5) * h;
            for ix in ix0..=ix1 as usize {
                let q = (lo.0 + (ix as f64 + 0.5) * h, y);
                if cross(tri[0], tri[1], q) < 0.0
                    || cross(tri[1], tri[2], q) < 0.0
                    || cross(tri[2], tri[0], q) < 0.0
                {
                    continue;
                }
                let d = p.depth_at(q);
                let cell = iy * nx + ix;
                // Facets arrive in id order, so a tie keeps the lower id.
                if d > depth[cell] {
                    depth[cell] = d;
                    owner[cell] = id as u32;
                }
            }
        }
    }

    let mut visible = vec![0.0; projected.len()];
    let pixel = h * h;
    for &o in &owner {
        if o != u32::MAX && front[o as usize] {
            visible[o as usize] += pixel;
        }
    }
    visible
}

fn polygon_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
}

fn polygon_centroid(poly: &[P2]) -> P2 {
    let n = poly.len();
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.0 * q.1 - q.0 * p.1;
        a += w;
        cx += (p.0 + q.0) * w;
        cy += (p.1 + q.1) * w;
    }
    (cx / (3.0 * a), cy / (3.0 * a))
}

/// Part of `poly` on the left of the directed line `a → b` (or on the right
/// when `keep_left` is false).
fn clip_half(poly: &[P2], a: P2, b: P2, keep_left: bool) -> Vec<P2> {
    let side = |p: P2| {
        let c = cross(a, b, p);
        if keep_left {
            c
        } else {
            -c
        }
    };
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

fn intersect(poly: &[P2], convex: &[P2]) -> Vec<P2> {
    let mut out = poly.to_vec();
    for i in 0..convex.len() {
        if out.is_empty() {
            break;
        }
        out = clip_half(&out, convex[i], convex[(i + 1) % convex.len()], true);
    }
    out
}

/// `poly \ convex` as a list of convex pieces.
fn subtract(poly: &[P2], convex: &[P2], eps: f64) -> Vec<Vec<P2>> {
    let mut pieces = Vec::new();
    let mut rest = poly.to_vec();
    for i in 0..convex.len() {
        let (a, b) = (convex[i], convex[(i + 1) % convex.len()]);
        let outside = clip_half(&rest, a, b, false);
        if polygon_area(&outside) > eps {
            pieces.push(outside);
        }
        rest = clip_half(&rest, a, b, true);
        if polygon_area(&rest) <= eps {
            break;
        }
    }
    pieces
}

fn exact(projected: &[Projected], front: &[bool]) -> Vec<f64> {
    (0..projected.len())
        .into_par_iter()
        .map(|i| {
            let p = &projected[i];
            if !front[i] || p.area2.abs() < 1e-300 {
                return 0.0;
            }
            let eps = 1e-12 * p.area2.abs();
            let tri = p.ccw();
            let mut pieces = vec![tri.clone()];
            for (j, q) in projected.iter().enumerate() {
                if j == i || q.area2.abs() < 1e-300 || !p.overlaps(q) {
                    continue;
                }
                let other = q.ccw();
                let overlap = intersect(&tri, &other);
                if polygon_area(&overlap) <= eps {
                    continue;
                }
                let c = polygon_centroid(&overlap);
                let (di, dj) = (p.depth_at(c), q.depth_at(c));
                let tol = 1e-12 * (1.0 + di.abs());
                let in_front = dj > di + tol || ((dj - di).abs() <= tol && j < i);
                if !in_front {
                    continue;
                }
                pieces = pieces
                    .iter()
                    .flat_map(|piece| subtract(piece, &other, eps))
                    .collect();
                if pieces.is_empty() {
                    break;
                }
            }
            pieces.iter().map(|piece| polygon_area(piece)).sum()
        })
        .collect()
}
