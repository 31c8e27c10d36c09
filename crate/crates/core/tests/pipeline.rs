//! Mesh file to chip through both paradigms.

use sarsim_core::centers::{assemble_m3d, read_m3d, write_m3d, DetectionConfig};
use sarsim_core::imaging::{
    read_chip, render_chip, returns_from_contributions, returns_from_m3d, write_chip, ChipLayout,
    RadarChip, SensorModel,
};
use sarsim_core::sbr::{
    launch_grid, read_contributions, trace_grid, write_contributions, SbrConfig,
};
use sarsim_core::scene::{
    load_mesh, shapes, write_obj, AccelIndex, AcquisitionGeometry, MaterialBinding, MaterialId,
    MaterialTable, Vec3,
};
use sarsim_core::to_db;

fn peak(chip: &RadarChip) -> (usize, usize, f64) {
    let (i, m) = chip
        .data
        .iter()
        .map(|z| z.norm())
        .enumerate()
        .fold(
            (0, 0.0),
            |best, (i, m)| if m > best.1 { (i, m) } else { best },
        );
    (i / chip.cols, i % chip.cols, m)
}

#[test]
fn dihedral_from_file_images_alike_in_both_paradigms() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("dihedral.obj");
    let offset = Vec3::new(1.5, -2.0, 0.0);
    write_obj(
        &shapes::dihedral(0.6, 0.4, MaterialId(0)).translated(offset),
        &mesh_path,
    )
    .unwrap();
    let table_path = dir.path().join("materials.toml");
    std::fs::write(&table_path, "[materials.steel]\nkind = \"pec\"\n").unwrap();

    let materials = MaterialTable::load(&table_path).unwrap();
    let mesh = load_mesh(
        &mesh_path,
        1.0,
        &MaterialBinding::Uniform("steel".into()),
        &materials,
    )
    .unwrap();
    assert_eq!(mesh.len(), 4);
    let geom = AcquisitionGeometry::x_band(0.0, 40.0).unwrap();
    let sensor = SensorModel::mstar_like();
    let layout = ChipLayout::default();

    let index = AccelIndex::new(mesh.clone()).unwrap();
    let cfg = SbrConfig::default();
    let grid = launch_grid(&index, &geom, &cfg).unwrap();
    let paths = trace_grid(&index, &materials, &geom, &cfg, &grid);
    let sbr_returns = returns_from_contributions(
        &paths,
        geom.polarization,
        geom.wavenumber(),
        grid.plane_distance,
    );
    let sbr_chip = render_chip(&sbr_returns, &layout, &sensor, 40.0, None, None).unwrap();

    let model = assemble_m3d(&mesh, &geom, &materials, &DetectionConfig::default(), 5).unwrap();
    let m3d_chip = render_chip(
        &returns_from_m3d(&model, &geom).unwrap(),
        &layout,
        &sensor,
        40.0,
        None,
        None,
    )
    .unwrap();

    let (sr, sc, sp) = peak(&sbr_chip);
    let (mr, mc, mp) = peak(&m3d_chip);
    // Both peaks land on the fold, which the offset moved off center.
    let frame = geom.frame().unwrap();
    let fold_range = frame.range_of(&offset);
    let fold_cross = frame.cross_range_of(&offset);
    let pixel = |r: usize, c: usize| {
        (
            (r as f64 - 64.0) * sensor.pixel_spacing_m,
            (c as f64 - 64.0) * sensor.pixel_spacing_m,
        )
    };
    for (r, c) in [(sr, sc), (mr, mc)] {
        let (pr, pc) = pixel(r, c);
        assert!(
            (pr - fold_range).abs() <= 0.25 && (pc - fold_cross).abs() <= 0.25,
            "peak at ({pr}, {pc})"
        );
    }
    assert!(
        (to_db(sp * sp) - to_db(mp * mp)).abs() < 3.0,
        "sbr {sp}, centers {mp}"
    );

    // Intermediate products survive their file formats.
    let mut buf = Vec::new();
    write_m3d(&mut buf, &model).unwrap();
    assert_eq!(
        read_m3d(buf.as_slice()).unwrap().scatterers.len(),
        model.scatterers.len()
    );
    let mut buf = Vec::new();
    write_contributions(&mut buf, geom.wavelength(), grid.plane_distance, &paths).unwrap();
    assert_eq!(
        read_contributions(buf.as_slice())
            .unwrap()
            .contributions
            .len(),
        paths.len()
    );

    let stem = dir.path().join("chip.v1");
    write_chip(&sbr_chip, &stem).unwrap();
    let (header, mags) = read_chip(&stem).unwrap();
    assert_eq!((header.rows, header.cols), (128, 128));
    assert_eq!(mags, sbr_chip.magnitude());
    assert!(dir.path().join("chip.v1.f32").is_file());
}
