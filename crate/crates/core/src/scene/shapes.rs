//! Canonical target meshes.
//!
//! All shapes are single-sided with normals on the reflective side.

use std::f64::consts::PI;

use super::material::MaterialId;
use super::mesh::TargetMesh;
use super::Vec3;

fn quad(a: Vec3, b: Vec3, c: Vec3, d: Vec3, m: MaterialId) -> [([Vec3; 3], MaterialId); 2] {
    [([a, b, c], m), ([a, c, d], m)]
}

/// Rectangle in the `y-z` plane centered at the origin, normal `+x`
/// (faces the sensor at azimuth 0, depression 0).
pub fn rect_plate(width_y: f64, height_z: f64, m: MaterialId) -> TargetMesh {
    let (w, h) = (width_y / 2.0, height_z / 2.0);
    TargetMesh::from_triangles(quad(
        Vec3::new(0.0, -w, -h),
        Vec3::new(0.0, w, -h),
        Vec3::new(0.0, w, h),
        Vec3::new(0.0, -w, h),
        m,
    ))
}

pub fn square_plate(side: f64, m: MaterialId) -> TargetMesh {
    rect_plate(side, side, m)
}

/// Right-angle ground/wall dihedral with its fold along `y`.
///
/// The floor lies in `z = 0` (normal `+z`, `x ∈ [0, depth]`), the wall in
/// `x = 0` (normal `+x`, `z ∈ [0, depth]`); the fold spans
/// `y ∈ [-length/2, length/2]`. The bisector is azimuth 0, depression 45.
pub fn dihedral(length: f64, depth: f64, m: MaterialId) -> TargetMesh {
    let y = length / 2.0;
    let mut tris = Vec::new();
    tris.extend(quad(
        Vec3::new(0.0, -y, 0.0),
        Vec3::new(depth, -y, 0.0),
        Vec3::new(depth, y, 0.0),
        Vec3::new(0.0, y, 0.0),
        m,
    ));
    tris.extend(quad(
        Vec3::new(0.0, -y, 0.0),
        Vec3::new(0.0, y, 0.0),
        Vec3::new(0.0, y, depth),
        Vec3::new(0.0, -y, depth),
        m,
    ));
    TargetMesh::from_triangles(tris)
}

/// Right-angle dihedral with a vertical fold along `z ∈ [-length/2,
/// length/2]`; walls in `x = 0` (normal `+x`) and `y = 0` (normal `+y`),
/// each `depth` deep. The bisector is azimuth 45, depression 0.
pub fn vertical_dihedral(length: f64, depth: f64, m: MaterialId) -> TargetMesh {
    let z = length / 2.0;
    let mut tris = Vec::new();
    tris.extend(quad(
        Vec3::new(0.0, 0.0, -z),
        Vec3::new(0.0, depth, -z),
        Vec3::new(0.0, depth, z),
        Vec3::new(0.0, 0.0, z),
        m,
    ));
    tris.extend(quad(
        Vec3::new(0.0, 0.0, -z),
        Vec3::new(0.0, 0.0, z),
        Vec3::new(depth, 0.0, z),
        Vec3::new(depth, 0.0, -z),
        m,
    ));
    TargetMesh::from_triangles(tris)
}

/// Which faces of [`trihedral`] to build.
#[derive(Debug, Clone, Copy)]
pub struct TrihedralFaces {
    pub x: bool,
    pub y: bool,
    pub z: bool,
}

impl TrihedralFaces {
    pub const ALL: TrihedralFaces = TrihedralFaces {
        x: true,
        y: true,
        z: true,
    };
}

/// Square-faced trihedral corner at the origin occupying the positive
/// octant. Boresight is azimuth 45, depression `asin(1/√3)`.
pub fn trihedral(side: f64, m: MaterialId) -> TargetMesh {
    trihedral_faces(side, TrihedralFaces::ALL, m)
}

pub fn trihedral_faces(side: f64, faces: TrihedralFaces, m: MaterialId) -> TargetMesh {
    let a = side;
    let o = Vec3::zeros();
    let mut tris = Vec::new();
    if faces.x {
        tris.extend(quad(
            o,
            Vec3::new(0.0, a, 0.0),
            Vec3::new(0.0, a, a),
            Vec3::new(0.0, 0.0, a),
            m,
        ));
    }
    if faces.y {
        tris.extend(quad(
            o,
            Vec3::new(0.0, 0.0, a),
            Vec3::new(a, 0.0, a),
            Vec3::new(a, 0.0, 0.0),
            m,
        ));
    }
    if faces.z {
        tris.extend(quad(
            o,
            Vec3::new(a, 0.0, 0.0),
            Vec3::new(a, a, 0.0),
            Vec3::new(0.0, a, 0.0),
            m,
        ));
    }
    TargetMesh::from_triangles(tris)
}

/// Trihedral boresight as `(azimuth_deg, depression_deg)`.
pub fn trihedral_boresight() -> (f64, f64) {
    (45.0, (1.0f64 / 3f64.sqrt()).asin().to_degrees())
}

/// Latitude/longitude sphere with outward normals.
pub fn uv_sphere(radius: f64, stacks: usize, slices: usize, m: MaterialId) -> TargetMesh {
    let point = |i: usize, j: usize| {
        let theta = PI * i as f64 / stacks as f64;
        let phi = 2.0 * PI * j as f64 / slices as f64;
        Vec3::new(
            radius * theta.sin() * phi.cos(),
            radius * theta.sin() * phi.sin(),
            radius * theta.cos(),
        )
    };
    let mut tris = Vec::new();
    for i in 0..stacks {
        for j in 0..slices {
            let (a, b) = (point(i, j), point(i, j + 1));
            let (c, d) = (point(i + 1, j + 1), point(i + 1, j));
            if i != 0 {
                tris.push(([a, d, b], m));
            }
            if i + 1 != stacks {
                tris.push(([b, d, c], m));
            }
        }
    }
    TargetMesh::from_triangles(tris)
}

/// Axis-aligned closed box centered at the origin, outward normals.
pub fn cuboid(size: Vec3, m: MaterialId) -> TargetMesh {
    let h = size / 2.0;
    let p = |x: f64, y: f64, z: f64| Vec3::new(x * h.x, y * h.y, z * h.z);
    let mut tris = Vec::new();
    tris.extend(quad(
        p(1., -1., -1.),
        p(1., 1., -1.),
        p(1., 1., 1.),
        p(1., -1., 1.),
        m,
    ));
    tris.extend(quad(
        p(-1., -1., -1.),
        p(-1., -1., 1.),
        p(-1., 1., 1.),
        p(-1., 1., -1.),
        m,
    ));
    tris.extend(quad(
        p(-1., 1., -1.),
        p(-1., 1., 1.),
        p(1., 1., 1.),
        p(1., 1., -1.),
        m,
    ));
    tris.extend(quad(
        p(-1., -1., -1.),
        p(1., -1., -1.),
        p(1., -1., 1.),
        p(-1., -1., 1.),
        m,
    ));
    tris.extend(quad(
        p(-1., -1., 1.),
        p(1., -1., 1.),
        p(1., 1., 1.),
        p(-1., 1., 1.),
        m,
    ));
    tris.extend(quad(
        p(-1., -1., -1.),
        p(-1., 1., -1.),
        p(1., 1., -1.),
        p(1., -1., -1.),
        m,
    ));
    TargetMesh::from_triangles(tris)
}

/// Rotation of `mesh` about the vertical axis through the origin.
pub fn rotated_z(mesh: &TargetMesh, degrees: f64) -> TargetMesh {
    let (s, c) = degrees.to_radians().sin_cos();
    let rot = |v: Vec3| Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
    TargetMesh::from_triangles(
        mesh.facets()
            .iter()
            .map(|f| (f.vertices.map(rot), f.material)),
    )
}
