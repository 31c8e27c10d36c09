//! Triangulated target geometry and mesh file loading.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::material::{MaterialId, MaterialTable};
use super::Vec3;
use crate::{Error, Result};

/// Facets below this area are dropped at construction.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.extent().norm()
        }
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - tol && p[i] <= self.max[i] + tol)
    }

    /// Box grown by `fraction` of its extent on every side.
    pub fn inflated(&self, fraction: f64) -> Aabb {
        let pad = self.extent() * fraction;
        Aabb {
            min: self.min - pad,
            max: self.max + pad,
        }
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: [Vec3; 3],
    /// Unit normal following the counter-clockwise winding of `vertices`.
    pub normal: Vec3,
    pub area: f64,
    pub material: MaterialId,
}

impl Facet {
    /// Builds a facet, or `None` when the triangle is degenerate or not finite.
    pub fn new(vertices: [Vec3; 3], material: MaterialId) -> Option<Self> {
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return None;
        }
        let cross = (vertices[1] - vertices[0]).cross(&(vertices[2] - vertices[0]));
        let area = 0.5 * cross.norm();
        if !(area >= DEGENERATE_AREA) {
            return None;
        }
        Some(Facet {
            vertices,
            normal: cross / (2.0 * area),
            area,
            material,
        })
    }

    pub fn centroid(&self) -> Vec3 {
        (self.vertices[0] + self.vertices[1] + self.vertices[2]) / 3.0
    }
}

/// Immutable triangle mesh in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMesh {
    facets: Vec<Facet>,
    bbox: Aabb,
    dropped: usize,
}

impl TargetMesh {
    pub fn empty() -> Self {
        TargetMesh {
            facets: Vec::new(),
            bbox: Aabb::empty(),
            dropped: 0,
        }
    }

    /// Keeps the non-degenerate triangles in input order.
    pub fn from_triangles<I>(triangles: I) -> Self
    where
        I: IntoIterator<Item = ([Vec3; 3], MaterialId)>,
    {
        let mut facets = Vec::new();
        let mut dropped = 0;
        for (vertices, material) in triangles {
            match Facet::new(vertices, material) {
                Some(f) => facets.push(f),
                None => dropped += 1,
            }
        }
        Self::from_facets(facets, dropped)
    }

    fn from_facets(facets: Vec<Facet>, dropped: usize) -> Self {
        let mut bbox = Aabb::empty();
        for f in &facets {
            for v in &f.vertices {
                bbox.grow(v);
            }
        }
        TargetMesh {
            facets,
            bbox,
            dropped,
        }
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, id: u32) -> &Facet {
        &self.facets[id as usize]
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    /// Number of degenerate facets dropped while building this mesh.
    pub fn dropped_degenerate(&self) -> usize {
        self.dropped
    }

    pub fn total_area(&self) -> f64 {
        self.facets.iter().map(|f| f.area).sum()
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                vertices: f.vertices.map(|v| v + offset),
                ..f.clone()
            })
            .collect();
        Self::from_facets(facets, self.dropped)
    }

    /// Mesh translated so that its bounding-box center is the origin.
    pub fn centered(&self) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        self.translated(-self.bbox.center())
    }

    pub fn with_material(&self, material: MaterialId) -> Self {
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                material,
                ..f.clone()
            })
            .collect();
        Self::from_facets(facets, self.dropped)
    }

    /// Concatenation; facet ids of `other` are shifted by `self.len()`.
    pub fn merged(&self, other: &TargetMesh) -> Self {
        let mut facets = self.facets.clone();
        facets.extend_from_slice(&other.facets);
        Self::from_facets(facets, self.dropped + other.dropped)
    }
}

/// How facets obtain their material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialBinding {
    /// Every facet gets the same material.
    Uniform(String),
    /// Wavefront group (`g`/`o`) name → material name. `default` covers
    /// groups that are not listed.
    ByGroup {
        groups: BTreeMap<String, String>,
        #[serde(default)]
        default: Option<String>,
    },
    /// Sidecar table for formats without groups: half-open ranges of
    /// triangle indices in file order. Triangles outside every range use
    /// `default`.
    FacetRanges {
        ranges: Vec<FacetRange>,
        #[serde(default)]
        default: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetRange {
    pub start: usize,
    pub end: usize,
    pub material: String,
}

struct RawTriangle {
    vertices: [Vec3; 3],
    group: String,
}

/// Writes `mesh` as Wavefront OBJ, one group per material named `m<id>`,
/// three vertices per facet in facet order.
pub fn write_obj(mesh: &TargetMesh, path: impl AsRef<Path>) -> Result<()> {
    use std::fmt::Write as _;
    let path = path.as_ref();
    let mut text = String::new();
    let mut group = None;
    for (i, f) in mesh.facets().iter().enumerate() {
        if group != Some(f.material) {
            group = Some(f.material);
            let _ = writeln!(text, "g m{}", f.material.0);
        }
        for v in &f.vertices {
            let _ = writeln!(text, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        let base = 3 * i + 1;
        let _ = writeln!(text, "f {} {} {}", base, base + 1, base + 2);
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a Wavefront `.obj` or binary `.stl` file, scales it to meters and
/// binds materials. Degenerate facets are dropped and counted.
pub fn load_mesh(
    path: impl AsRef<Path>,
    unit_scale: f64,
    binding: &MaterialBinding,
    materials: &MaterialTable,
) -> Result<TargetMesh> {
    let path = path.as_ref();
    if !(unit_scale > 0.0 && unit_scale.is_finite()) {
        return Err(Error::invalid(format!(
            "unit scale {unit_scale} must be > 0"
        )));
    }
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "mesh file not found"),
        ));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let raw = match ext.as_deref() {
        Some("obj") => read_obj(path)?,
        Some("stl") => read_stl(path)?,
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    let ids = bind_materials(&raw, binding, materials)?;
    let total = raw.len();
    let mesh = TargetMesh::from_triangles(
        raw.into_iter()
            .zip(ids)
            .map(|(t, id)| (t.vertices.map(|v| v * unit_scale), id)),
    );
    if mesh.is_empty() {
        return Err(Error::AllDegenerate(total));
    }
    Ok(mesh)
}

fn bind_materials(
    raw: &[RawTriangle],
    binding: &MaterialBinding,
    materials: &MaterialTable,
) -> Result<Vec<MaterialId>> {
    let lookup = |name: &str| {
        materials
            .id(name)
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    };
    match binding {
        MaterialBinding::Uniform(name) => {
            let id = lookup(name)?;
            Ok(vec![id; raw.len()])
        }
        MaterialBinding::ByGroup { groups, default } => {
            let present: BTreeSet<&str> = raw.iter().map(|t| t.group.as_str()).collect();
            if let Some(missing) = groups.keys().find(|g| !present.contains(g.as_str())) {
                return Err(Error::MissingGroup(missing.clone()));
            }
            let default = default.as_deref().map(lookup).transpose()?;
            raw.iter()
                .map(|t| match groups.get(&t.group) {
                    Some(name) => lookup(name),
                    None => default.ok_or_else(|| Error::UnboundGroup(t.group.clone())),
                })
                .collect()
        }
        MaterialBinding::FacetRanges { ranges, default } => {
            let default = default.as_deref().map(lookup).transpose()?;
            let resolved = ranges
                .iter()
                .map(|r| Ok((r.start..r.end, lookup(&r.material)?)))
                .collect::<Result<Vec<_>>>()?;
            (0..raw.len())
                .map(|i| {
                    resolved
                        .iter()
                        .find(|(range, _)| range.contains(&i))
                        .map(|(_, id)| *id)
                        .or(default)
                        .ok_or_else(|| Error::UnboundGroup(format!("triangle {i}")))
                })
                .collect()
        }
    }
}

fn read_obj(path: &Path) -> Result<Vec<RawTriangle>> {
    let options = tobj::LoadOptions {
        triangulate: true,
        single_index: false,
        ignore_points: true,
        ignore_lines: true,
    };
    let (models, _materials) = tobj::load_obj(path, &options).map_err(|e| Error::MeshParse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut out = Vec::new();
    for model in models {
        let mesh = &model.mesh;
        let vertex = |i: u32| -> Result<Vec3> {
            let i = i as usize * 3;
            mesh.positions
                .get(i..i + 3)
                .map(|p| Vec3::new(p[0], p[1], p[2]))
                .ok_or_else(|| Error::MeshParse {
                    path: path.to_path_buf(),
                    reason: "face references a missing vertex".into(),
                })
        };
        for tri in mesh.indices.chunks_exact(3) {
            out.push(RawTriangle {
                vertices: [vertex(tri[0])?, vertex(tri[1])?, vertex(tri[2])?],
                group: model.name.clone(),
            });
        }
    }
    Ok(out)
}

fn read_stl(path: &Path) -> Result<Vec<RawTriangle>> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let stl = stl_io::read_stl(&mut file).map_err(|e| Error::MeshParse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let vertex = |i: usize| {
        let v = stl.vertices[i];
        Vec3::new(v[0] as f64, v[1] as f64, v[2] as f64)
    };
    Ok(stl
        .faces
        .iter()
        .map(|f| RawTriangle {
            vertices: [
                vertex(f.vertices[0]),
                vertex(f.vertices[1]),
                vertex(f.vertices[2]),
            ],
            group: String::new(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::material::Material;
    use crate::scene::shapes;
    use std::io::Write;

    fn pec_table() -> MaterialTable {
        let mut t = MaterialTable::new();
        t.insert("steel", Material::pec());
        t.insert("paint", Material::pec().with_sigma0_db(-8.0));
        t
    }

    const CUBE_OBJ: &str = "\
o body
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3
f 1 3 2
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
";

    fn write_tmp(dir: &tempfile::TempDir, name: &str, body: &[u8]) -> std::path::PathBuf {
        let path = dir.path().join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(body)
            .unwrap();
        path
    }

    #[test]
    fn cube_obj_loads_with_outward_normals() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "cube.obj", CUBE_OBJ.as_bytes());
        let mesh = load_mesh(
            &path,
            1.0,
            &MaterialBinding::Uniform("steel".into()),
            &pec_table(),
        )
        .unwrap();
        assert_eq!(mesh.len(), 12);
        assert_eq!(mesh.bbox().min, Vec3::zeros());
        assert_eq!(mesh.bbox().max, Vec3::repeat(1.0));
        let c = mesh.bbox().center();
        for f in mesh.facets() {
            assert!((f.normal.norm() - 1.0).abs() < 1e-12);
            assert!(f.normal.dot(&(f.centroid() - c)) > 0.0);
        }
        assert!((mesh.total_area() - 6.0).abs() < 1e-12);

        let mm = load_mesh(
            &path,
            0.001,
            &MaterialBinding::Uniform("steel".into()),
            &pec_table(),
        )
        .unwrap();
        assert!((mm.bbox().max - Vec3::repeat(0.001)).norm() < 1e-15);
        assert_eq!(mm.bbox().min, Vec3::zeros());
    }

    #[test]
    fn obj_writer_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = crate::scene::shapes::trihedral(0.2, MaterialId(0));
        let path = dir.path().join("t.obj");
        write_obj(&mesh, &path).unwrap();
        let back = load_mesh(
            &path,
            1.0,
            &MaterialBinding::Uniform("steel".into()),
            &pec_table(),
        )
        .unwrap();
        assert_eq!(back.len(), mesh.len());
        for (a, b) in back.facets().iter().zip(mesh.facets()) {
            assert_eq!(a.vertices, b.vertices);
        }
    }

    #[test]
    fn loading_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "cube.obj", CUBE_OBJ.as_bytes());
        let b = MaterialBinding::Uniform("steel".into());
        let a = load_mesh(&path, 2.0, &b, &pec_table()).unwrap();
        let c = load_mesh(&path, 2.0, &b, &pec_table()).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn group_binding() {
        let obj = "\
v 0 0 0
v 1 0 0
v 0 1 0
v 0 0 1
g top
f 1 2 3
g side
f 1 2 4
";
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "two.obj", obj.as_bytes());
        let table = pec_table();
        let mut groups = BTreeMap::new();
        groups.insert("top".to_string(), "paint".to_string());
        groups.insert("side".to_string(), "steel".to_string());
        let mesh = load_mesh(
            &path,
            1.0,
            &MaterialBinding::ByGroup {
                groups: groups.clone(),
                default: None,
            },
            &table,
        )
        .unwrap();
        assert_eq!(mesh.facet(0).material, table.id("paint").unwrap());
        assert_eq!(mesh.facet(1).material, table.id("steel").unwrap());

        groups.insert("turret".to_string(), "steel".to_string());
        let err = load_mesh(
            &path,
            1.0,
            &MaterialBinding::ByGroup {
                groups,
                default: None,
            },
            &table,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingGroup(g) if g == "turret"));
    }

    #[test]
    fn degenerate_facets_dropped_and_counted() {
        let obj = "\
v 0 0 0
v 1 0 0
v 0 1 0
v 2 0 0
f 1 2 3
f 1 2 4
";
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "d.obj", obj.as_bytes());
        let mesh = load_mesh(
            &path,
            1.0,
            &MaterialBinding::Uniform("steel".into()),
            &pec_table(),
        )
        .unwrap();
        assert_eq!(mesh.len(), 1);
        assert_eq!(mesh.dropped_degenerate(), 1);

        let all_bad = write_tmp(&dir, "bad.obj", b"v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");
        let err = load_mesh(
            &all_bad,
            1.0,
            &MaterialBinding::Uniform("steel".into()),
            &pec_table(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::AllDegenerate(1)));
    }

    #[test]
    fn stl_with_sidecar_ranges() {
        let plate = shapes::square_plate(0.3, MaterialId(0));
        let mut bytes = vec![0u8; 80];
        bytes.extend_from_slice(&(plate.len() as u32).to_le_bytes());
        for f in plate.facets() {
            for c in f.normal.iter() {
                bytes.extend_from_slice(&(*c as f32).to_le_bytes());
            }
            for v in &f.vertices {
                for c in v.iter() {
                    bytes.extend_from_slice(&(*c as f32).to_le_bytes());
                }
            }
            bytes.extend_from_slice(&[0, 0]);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = write_tmp(&dir, "plate.stl", &bytes);
        let table = pec_table();
        let binding = MaterialBinding::FacetRanges {
            ranges: vec![FacetRange {
                start: 1,
                end: 2,
                material: "paint".into(),
            }],
            default: Some("steel".into()),
        };
        let mesh = load_mesh(&path, 1.0, &binding, &table).unwrap();
        assert_eq!(mesh.len(), 2);
        assert!((mesh.total_area() - 0.09).abs() < 1e-7);
        assert_eq!(mesh.facet(0).material, table.id("steel").unwrap());
        assert_eq!(mesh.facet(1).material, table.id("paint").unwrap());
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let b = MaterialBinding::Uniform("steel".into());
        let garbage = write_tmp(&dir, "g.obj", b"f 1 2 3\n");
        assert!(load_mesh(&garbage, 1.0, &b, &pec_table()).is_err());
        let cube = write_tmp(&dir, "c.obj", CUBE_OBJ.as_bytes());
        assert!(load_mesh(&cube, 0.0, &b, &pec_table()).is_err());
        assert!(load_mesh(dir.path().join("nope.obj"), 1.0, &b, &pec_table()).is_err());
        let unknown = MaterialBinding::Uniform("unobtainium".into());
        assert!(matches!(
            load_mesh(&cube, 1.0, &unknown, &pec_table()),
            Err(Error::UnknownMaterial(_))
        ));
    }

    #[test]
    fn plate_hand_geometry() {
        let plate = shapes::square_plate(0.3, MaterialId(0));
        assert_eq!(plate.len(), 2);
        assert!((plate.total_area() - 0.09).abs() < 1e-15);
        assert_eq!(plate.facet(0).normal, plate.facet(1).normal);
    }
}
