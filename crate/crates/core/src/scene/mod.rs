//! Geometry shared by both signature paradigms: meshes, materials, rough
//! ground, the ray-query index and the line-of-sight frame.

mod bvh;
mod frame;
mod ground;
mod material;
mod mesh;
pub mod shapes;

pub use bvh::{brute_force_nearest, intersect_triangle, AccelIndex, Hit, QueryStats, Ray};
pub use frame::{los_frame, AcquisitionGeometry, LosFrame, Pol, Polarization};
pub use ground::{synthesize_heights, synthesize_rough_ground, GroundPatch, Heightfield};
pub use material::{Material, MaterialId, MaterialKind, MaterialTable};
pub use mesh::{
    load_mesh, write_obj, Aabb, Facet, FacetRange, MaterialBinding, TargetMesh, DEGENERATE_AREA,
};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Builds the ray-query index for `mesh`.
pub fn build_index(mesh: TargetMesh) -> crate::Result<AccelIndex> {
    AccelIndex::new(mesh)
}

/// Places `target` on a ground patch: the target's horizontal bounding-box
/// center goes to the patch origin and its lowest point to the local ground
/// height there. Ground facets take `ground_material` and follow the target
/// facets, so target facet ids are unchanged.
pub fn place_on_ground(
    target: &TargetMesh,
    ground: &Heightfield,
    ground_material: MaterialId,
) -> TargetMesh {
    let bbox = target.bbox();
    let center = bbox.center();
    let z0 = ground.height_at(0.0, 0.0);
    let placed = target.translated(Vec3::new(-center.x, -center.y, z0 - bbox.min.z));
    placed.merged(&ground.to_mesh(ground_material))
}
