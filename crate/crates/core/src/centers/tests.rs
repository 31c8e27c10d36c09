use super::*;
use crate::sbr::{self, SbrConfig};
use crate::scene::{shapes, AccelIndex, Material, MaterialId, Polarization};
use crate::to_db;

fn lambda10() -> f64 {
    crate::SPEED_OF_LIGHT / 10e9
}

fn table(sigma0_db: f64) -> MaterialTable {
    let mut t = MaterialTable::new();
    t.insert("pec", Material::pec().with_sigma0_db(sigma0_db));
    t
}

fn exact() -> DetectionConfig {
    DetectionConfig {
        visibility: VisibilityMode::ExactClipping,
        ..DetectionConfig::default()
    }
}

fn geom(az: f64, dep: f64) -> AcquisitionGeometry {
    AcquisitionGeometry::x_band(az, dep).unwrap()
}

fn m3d(mesh: &TargetMesh, g: &AcquisitionGeometry, cfg: &DetectionConfig) -> M3dModel {
    assemble_m3d(mesh, g, &table(-20.0), cfg, 7).unwrap()
}

fn of_kind(model: &M3dModel, kind: EffectKind) -> Vec<&Scatterer> {
    model.scatterers.iter().filter(|s| s.kind == kind).collect()
}

fn sbr_sum(mesh: &TargetMesh, g: &AcquisitionGeometry) -> (f64, Complex64) {
    let idx = AccelIndex::new(mesh.clone()).unwrap();
    let cfg = SbrConfig::default();
    let grid = sbr::launch_grid(&idx, g, &cfg).unwrap();
    let contribs = sbr::trace_grid(&idx, &table(-20.0), g, &cfg, &grid);
    let sum: Complex64 = contribs.iter().map(|c| c.amplitude(g.polarization)).sum();
    // Move the phase reference from the launch plane to the origin.
    let k = g.wavenumber();
    (
        sbr::rcs_estimate(&contribs, g.polarization),
        sum * Complex64::from_polar(1.0, 2.0 * k * grid.plane_distance),
    )
}

fn coherent_sum(model: &M3dModel) -> Complex64 {
    let f = model.geometry.frame().unwrap();
    let k = model.geometry.wavenumber();
    model
        .scatterers
        .iter()
        .filter(|s| s.coherent)
        .map(|s| s.amplitude * Complex64::from_polar(1.0, -2.0 * k * f.range_of(&s.position)))
        .sum()
}

#[test]
fn plate_visible_area() {
    let plate = shapes::square_plate(0.3, MaterialId(0));
    let g = geom(0.0, 0.0);
    let ex: f64 = visible_set(&plate, &g, &exact()).unwrap().iter().sum();
    assert!((ex - 0.09).abs() < 1e-12);
    let db: f64 = visible_set(&plate, &g, &DetectionConfig::default())
        .unwrap()
        .iter()
        .sum();
    assert!((db / 0.09 - 1.0).abs() < 0.01, "{db}");

    let tilted = shapes::rotated_z(&plate, 60.0);
    for cfg in [exact(), DetectionConfig::default()] {
        let v: f64 = visible_set(&tilted, &g, &cfg).unwrap().iter().sum();
        assert!((v / 0.045 - 1.0).abs() < 0.01, "{v}");
    }
    let back: f64 = visible_set(&plate, &geom(180.0, 0.0), &exact())
        .unwrap()
        .iter()
        .sum();
    assert_eq!(back, 0.0);
}

fn plate_with_hidden() -> TargetMesh {
    shapes::square_plate(0.5, MaterialId(0))
        .merged(&shapes::square_plate(0.2, MaterialId(0)).translated(Vec3::new(-0.5, 0.0, 0.0)))
}

#[test]
fn occluded_facet_has_no_visible_area() {
    let mesh = plate_with_hidden();
    for cfg in [exact(), DetectionConfig::default()] {
        let v = visible_set(&mesh, &geom(0.0, 0.0), &cfg).unwrap();
        assert_eq!(v[2], 0.0);
        assert_eq!(v[3], 0.0);
        assert!(v[0] + v[1] > 0.24);
    }
    let model = m3d(&mesh, &geom(0.0, 0.0), &DetectionConfig::default());
    assert_eq!(model.count(EffectKind::Diffuse), 1);
    assert_eq!(model.count(EffectKind::Plate), 1);
    let plate = of_kind(&model, EffectKind::Plate)[0];
    assert!(plate.position.x.abs() < 1e-12);
}

#[test]
fn convex_box_visible_area_is_its_silhouette() {
    let size = Vec3::new(0.6, 0.4, 0.3);
    let mesh = shapes::cuboid(size, MaterialId(0));
    let g = geom(30.0, 20.0);
    let u = g.frame().unwrap().los;
    let oracle =
        size.y * size.z * u.x.abs() + size.x * size.z * u.y.abs() + size.x * size.y * u.z.abs();
    let ex: f64 = visible_set(&mesh, &g, &exact()).unwrap().iter().sum();
    assert!((ex / oracle - 1.0).abs() < 1e-9);
    let db: f64 = visible_set(&mesh, &g, &DetectionConfig::default())
        .unwrap()
        .iter()
        .sum();
    assert!((db / oracle - 1.0).abs() < 0.01);

    let model = assemble_m3d(&mesh, &g, &table(-10.0), &DetectionConfig::default(), 1).unwrap();
    let filled = model.diffuse_power();
    assert!((filled / (0.1 * oracle) - 1.0).abs() < 0.01, "{filled}");
}

#[test]
fn plate_detection_matches_po() {
    let plate = shapes::square_plate(0.3, MaterialId(0));
    let g = geom(0.0, 0.0);
    let model = m3d(&plate, &g, &exact());
    let plates = of_kind(&model, EffectKind::Plate);
    assert_eq!(plates.len(), 1);
    let oracle = 4.0 * PI * 0.09f64.powi(2) / lambda10().powi(2);
    assert!((oracle - 113.2).abs() < 0.1);
    assert!((plates[0].amplitude.norm_sqr() / oracle - 1.0).abs() < 1e-9);
    assert!(plates[0].coherent);
    let (a, b) = plates[0].extent;
    assert!((a - 0.3).abs() < 1e-9 && (b - 0.3).abs() < 1e-9);

    // Default depth buffer: formula applied to the buffered visible area.
    let model = m3d(&plate, &g, &DetectionConfig::default());
    let a = Analysis::new(&plate, &g, &DetectionConfig::default()).unwrap();
    let area: f64 = a.visible.iter().sum();
    let p = of_kind(&model, EffectKind::Plate)[0];
    let expected = 4.0 * PI * area * area / lambda10().powi(2);
    assert!((p.amplitude.norm_sqr() / expected - 1.0).abs() < 1e-9);
}

#[test]
fn plate_gates() {
    let plate = shapes::square_plate(0.3, MaterialId(0));
    let tilted = shapes::rotated_z(&plate, 5.0);
    assert_eq!(
        m3d(&tilted, &geom(0.0, 0.0), &exact()).count(EffectKind::Plate),
        0
    );
    // Geometry specificity: azimuths one tolerance apart differ.
    let at0 = m3d(&plate, &geom(0.0, 0.0), &DetectionConfig::default());
    let at1 = m3d(&plate, &geom(1.5, 0.0), &DetectionConfig::default());
    assert_ne!(
        of_kind(&at0, EffectKind::Plate).len(),
        of_kind(&at1, EffectKind::Plate).len()
    );
}

#[test]
fn coplanar_halves_merge_into_one_plate() {
    let half = shapes::rect_plate(0.15, 0.3, MaterialId(0));
    let mesh = half
        .translated(Vec3::new(0.0, -0.075, 0.0))
        .merged(&half.translated(Vec3::new(0.0, 0.075, 0.0)));
    let model = m3d(&mesh, &geom(0.0, 0.0), &exact());
    let plates = of_kind(&model, EffectKind::Plate);
    assert_eq!(plates.len(), 1);
    let per_half = 4.0 * PI * 0.045f64.powi(2) / lambda10().powi(2);
    assert!((plates[0].amplitude.norm_sqr() / (4.0 * per_half) - 1.0).abs() < 1e-9);
}

#[test]
fn dihedral_at_bisector() {
    let mesh = shapes::dihedral(0.3, 0.3, MaterialId(0));
    let g = geom(0.0, 45.0);
    let model = m3d(&mesh, &g, &exact());
    let d = of_kind(&model, EffectKind::Dihedral);
    assert_eq!(d.len(), 1);
    let oracle = 8.0 * PI * 0.3f64.powi(4) / lambda10().powi(2);
    assert!((to_db(oracle) - 23.55).abs() < 0.01);
    assert!((d[0].amplitude.norm_sqr() / oracle - 1.0).abs() < 1e-9);
    assert!((d[0].position - Vec3::zeros()).norm() < 1e-9);
    assert_eq!(model.count(EffectKind::Plate), 0);
    assert_eq!(model.count(EffectKind::Trihedral), 0);

    let (rcs, _) = sbr_sum(&mesh, &g);
    let centers = model.coherent_rcs().unwrap();
    assert!((to_db(rcs) - to_db(centers)).abs() < 1.0);
}

#[test]
fn dihedral_orthogonality_gate() {
    // Wall leaning over the floor by 10°: faces meet at 80°.
    let (s, c) = 10f64.to_radians().sin_cos();
    let y = 0.15;
    let top = |yy: f64| Vec3::new(0.3 * s, yy, 0.3 * c);
    let floor = shapes::dihedral(0.3, 0.3, MaterialId(0));
    let floor_only: Vec<_> = floor.facets()[..2]
        .iter()
        .map(|f| (f.vertices, f.material))
        .collect();
    let mut tris = floor_only;
    tris.push((
        [Vec3::new(0.0, -y, 0.0), Vec3::new(0.0, y, 0.0), top(y)],
        MaterialId(0),
    ));
    tris.push(([Vec3::new(0.0, -y, 0.0), top(y), top(-y)], MaterialId(0)));
    let mesh = TargetMesh::from_triangles(tris);
    let a = Analysis::new(&mesh, &geom(0.0, 40.0), &exact()).unwrap();
    assert_eq!(a.clusters.len(), 2);
    assert!(dihedral_candidates(&a).is_empty());
    assert!(detect_dihedrals(&a).is_empty());
}

#[test]
fn rotated_dihedral_tracks_sbr() {
    let mesh = shapes::vertical_dihedral(0.3, 0.3, MaterialId(0));
    let g = geom(75.0, 0.0);
    let model = m3d(&mesh, &g, &exact());
    let d = of_kind(&model, EffectKind::Dihedral);
    assert_eq!(d.len(), 1);
    let bisector = 8.0 * PI * 0.3f64.powi(4) / lambda10().powi(2);
    let ratio = d[0].amplitude.norm_sqr() / bisector;
    let oracle = (2.0 * 15f64.to_radians().sin() / 2f64.sqrt()).powi(2);
    assert!((ratio / oracle - 1.0).abs() < 1e-9);
    let (rcs, _) = sbr_sum(&mesh, &g);
    let centers = model.coherent_rcs().unwrap();
    assert!(
        (to_db(rcs) - to_db(centers)).abs() < 1.5,
        "sbr {rcs} centers {centers}"
    );
}

#[test]
fn trihedral_at_boresight_matches_closed_form_and_sbr() {
    let a = 0.2;
    let mesh = shapes::trihedral(a, MaterialId(0));
    let (az, dep) = shapes::trihedral_boresight();
    let g = geom(az, dep);
    let model = m3d(&mesh, &g, &exact());
    let t = of_kind(&model, EffectKind::Trihedral);
    assert_eq!(t.len(), 1);
    let oracle = 12.0 * PI * a.powi(4) / lambda10().powi(2);
    assert!((to_db(oracle) - 18.27).abs() < 0.01);
    assert!((t[0].amplitude.norm_sqr() / oracle - 1.0).abs() < 1e-9);
    assert!(t[0].position.norm() < 1e-9);
    assert_eq!(model.count(EffectKind::Plate), 0);
    assert_eq!(model.count(EffectKind::Dihedral), 0);

    let (rcs, _) = sbr_sum(&mesh, &g);
    assert!(
        (to_db(rcs) - to_db(oracle)).abs() < 1.0,
        "sbr {}",
        to_db(rcs)
    );
}

#[test]
fn trihedral_off_boresight() {
    let mesh = shapes::trihedral(0.2, MaterialId(0));
    let (az, dep) = shapes::trihedral_boresight();
    let peak = 12.0 * PI * 0.2f64.powi(4) / lambda10().powi(2);
    let (sbr_peak, _) = sbr_sum(&mesh, &geom(az, dep));
    for (daz, ddep) in [(5.0, 0.0), (-5.0, 0.0), (0.0, 5.0), (0.0, -5.0)] {
        let g = geom(az + daz, dep + ddep);
        let model = m3d(&mesh, &g, &exact());
        let t = of_kind(&model, EffectKind::Trihedral);
        assert_eq!(t.len(), 1, "{daz} {ddep}");
        let drop = to_db(peak) - to_db(t[0].amplitude.norm_sqr());
        assert!((0.0..1.0).contains(&drop));
        let (rcs, _) = sbr_sum(&mesh, &g);
        let sbr_drop = to_db(sbr_peak) - to_db(rcs);
        assert!(
            (drop - sbr_drop).abs() < 1.0,
            "{daz} {ddep}: {drop} vs {sbr_drop}"
        );
    }
}

#[test]
fn trihedral_without_a_face() {
    let mesh = shapes::trihedral_faces(
        0.2,
        shapes::TrihedralFaces {
            x: true,
            y: true,
            z: false,
        },
        MaterialId(0),
    );
    let (az, dep) = shapes::trihedral_boresight();
    let a = Analysis::new(&mesh, &geom(az, dep), &exact()).unwrap();
    assert!(detect_trihedrals(&a).is_empty());
    let pairs = dihedral_candidates(&a);
    assert_eq!(pairs.len(), 1);
    assert!((pairs[0].fold.z.abs() - 1.0).abs() < 1e-12);
    // Viewed across its fold the remaining pair is a detected dihedral.
    let side = Analysis::new(&mesh, &geom(45.0, 0.0), &exact()).unwrap();
    assert_eq!(detect_dihedrals(&side).len(), 1);
}

#[test]
fn polarimetric_signs_follow_sbr() {
    let cases = [
        (shapes::square_plate(0.3, MaterialId(0)), 0.0, 0.0),
        (shapes::dihedral(0.3, 0.3, MaterialId(0)), 0.0, 45.0),
        (
            shapes::vertical_dihedral(0.3, 0.3, MaterialId(0)),
            45.0,
            0.0,
        ),
        (
            shapes::trihedral(0.2, MaterialId(0)),
            45.0,
            shapes::trihedral_boresight().1,
        ),
    ];
    for (mesh, az, dep) in cases {
        for pol in [Polarization::HH, Polarization::VV] {
            let g = AcquisitionGeometry::new(az, dep, 10e9, pol).unwrap();
            let (_, s) = sbr_sum(&mesh, &g);
            let c = coherent_sum(&m3d(&mesh, &g, &exact()));
            let diff = (s / c).arg();
            assert!(diff.abs() < 0.5, "{az}/{dep} {pol}: {diff}");
        }
    }
}

#[test]
fn backscatter_fill_power_and_phases() {
    let plate = shapes::square_plate(0.3, MaterialId(0));
    let g = geom(0.0, 0.0);
    let a = Analysis::new(&plate, &g, &exact()).unwrap();
    let mats = table(-10.0);
    let d1 = backscatter_fill(&a, &mats, 1);
    assert_eq!(d1.len(), 1);
    assert!((d1[0].amplitude.norm_sqr() - 0.009).abs() < 1e-12);
    assert!(!d1[0].coherent);
    let again = backscatter_fill(&a, &mats, 1);
    assert_eq!(d1, again);
    let d2 = backscatter_fill(&a, &mats, 2);
    assert_ne!(d1[0].amplitude.arg(), d2[0].amplitude.arg());
    assert!((d1[0].amplitude.norm() - d2[0].amplitude.norm()).abs() < 1e-15);

    let redrawn = M3dModel {
        scatterers: d1.clone(),
        geometry: g,
        config: exact(),
    }
    .with_diffuse_phases(9);
    assert_ne!(redrawn.scatterers[0].amplitude, d1[0].amplitude);
    assert!((redrawn.scatterers[0].amplitude.norm() - d1[0].amplitude.norm()).abs() < 1e-15);
}

#[test]
fn large_faces_are_split_into_cells() {
    let wall = shapes::rect_plate(2.0, 1.0, MaterialId(0));
    let g = geom(10.0, 0.0);
    let model = m3d(&wall, &g, &DetectionConfig::default());
    // Two triangles: centroids land in two of the 4×2 cells.
    assert_eq!(model.count(EffectKind::Diffuse), 2);
    let cfg = DetectionConfig {
        diffuse_cell_m: 10.0,
        ..DetectionConfig::default()
    };
    assert_eq!(m3d(&wall, &g, &cfg).count(EffectKind::Diffuse), 1);
}

#[test]
fn assembled_models() {
    let g = geom(0.0, 0.0);
    let empty = m3d(&TargetMesh::empty(), &g, &DetectionConfig::default());
    assert!(empty.scatterers.is_empty());
    assert_eq!(empty.geometry, g);

    let plate = shapes::square_plate(0.3, MaterialId(0));
    let model = m3d(&plate, &g, &DetectionConfig::default());
    assert_eq!(model.scatterers.len(), 2);
    assert_eq!(model.count(EffectKind::Plate), 1);
    assert_eq!(model.count(EffectKind::Diffuse), 1);
    assert_eq!(model, m3d(&plate, &g, &DetectionConfig::default()));
}

fn vehicle() -> TargetMesh {
    let hull = shapes::cuboid(Vec3::new(6.0, 3.0, 1.5), MaterialId(0))
        .translated(Vec3::new(0.0, 0.0, 0.75));
    let turret =
        shapes::uv_sphere(1.2, 50, 100, MaterialId(0)).translated(Vec3::new(0.0, 0.0, 1.8));
    hull.merged(&turret)
}

#[test]
fn vehicle_scale_model() {
    let mesh = vehicle();
    assert!(mesh.len() >= 9_000);
    let g = geom(30.0, 15.0);
    let model = m3d(&mesh, &g, &DetectionConfig::default());
    assert!(model.scatterers.len() >= 1000, "{}", model.scatterers.len());
    let bbox = mesh.bbox().inflated(0.1);
    for s in &model.scatterers {
        assert!(bbox.contains(&s.position, 0.0));
        assert!(s.amplitude.re.is_finite() && s.amplitude.im.is_finite());
        assert_eq!(s.coherent, s.kind != EffectKind::Diffuse);
    }
}

#[test]
fn directivity_patterns() {
    let plate = shapes::square_plate(0.3, MaterialId(0));
    let g = geom(0.0, 0.0);
    let model = m3d(&plate, &g, &exact());
    let p = of_kind(&model, EffectKind::Plate)[0];
    let k = g.wavenumber();
    let u0 = g.frame().unwrap().los;
    assert_eq!(p.amplitude_toward(&u0, &u0, k), p.amplitude);
    let null = (lambda10() / 0.6).asin().to_degrees();
    let u1 = geom(null, 0.0).frame().unwrap().los;
    // The pattern is taken relative to the detection direction, so its
    // first null sits at the small-angle position.
    assert!(p.amplitude_toward(&u0, &u1, k).norm() < 0.01 * p.amplitude.norm());
    let behind = geom(180.0, 0.0).frame().unwrap().los;
    assert_eq!(p.amplitude_toward(&u0, &behind, k).norm(), 0.0);
}

#[test]
fn perturbation_policies() {
    let mesh = vehicle()
        .merged(&shapes::square_plate(1.0, MaterialId(0)).translated(Vec3::new(4.0, 0.0, 1.0)));
    let model = m3d(&mesh, &geom(0.0, 0.0), &DetectionConfig::default());
    assert!(model.count(EffectKind::Plate) >= 1);
    let snapshot = model.clone();
    let identity = perturb_m3d(&model, &PerturbPolicy::default(), 3).unwrap();
    assert_eq!(identity, model);

    let drop = PerturbPolicy {
        drop: EffectProbabilities {
            plate: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let dropped = perturb_m3d(&model, &drop, 3).unwrap();
    assert_eq!(dropped.count(EffectKind::Plate), 0);
    assert_eq!(
        dropped.count(EffectKind::Diffuse),
        model.count(EffectKind::Diffuse)
    );

    let dup = PerturbPolicy {
        duplicate: EffectProbabilities {
            plate: 1.0,
            ..Default::default()
        },
        ..Default::default()
    };
    assert_eq!(
        perturb_m3d(&model, &dup, 3)
            .unwrap()
            .count(EffectKind::Plate),
        2 * model.count(EffectKind::Plate)
    );

    let jitter = PerturbPolicy {
        position_sigma_m: 0.05,
        ..Default::default()
    };
    let moved = perturb_m3d(&model, &jitter, 11).unwrap();
    assert!(model.scatterers.len() >= 1000);
    assert_eq!(moved.scatterers.len(), model.scatterers.len());
    for axis in 0..3 {
        let d: Vec<f64> = moved
            .scatterers
            .iter()
            .zip(&model.scatterers)
            .map(|(m, o)| m.position[axis] - o.position[axis])
            .collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let std = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (d.len() - 1) as f64).sqrt();
        assert!((0.045..=0.055).contains(&std), "axis {axis}: {std}");
    }
    assert_eq!(moved, perturb_m3d(&model, &jitter, 11).unwrap());
    assert_eq!(model, snapshot);

    let negative = PerturbPolicy {
        position_sigma_m: -0.1,
        ..Default::default()
    };
    assert!(perturb_m3d(&model, &negative, 1).is_err());
}

#[test]
fn m3d_roundtrip_and_summary() {
    let mesh = shapes::trihedral(0.2, MaterialId(0))
        .merged(&shapes::square_plate(0.3, MaterialId(0)).translated(Vec3::new(0.5, 0.0, 0.0)));
    let g = geom(0.0, 0.0);
    let model = m3d(&mesh, &g, &DetectionConfig::default());
    let mut buf = Vec::new();
    write_m3d(&mut buf, &model).unwrap();
    let back = read_m3d(buf.as_slice()).unwrap();
    assert_eq!(back, model);
    let text = summary(&model);
    assert!(text.contains(&format!("plate: {}", model.count(EffectKind::Plate))));
    assert!(model.count(EffectKind::Plate) >= 1);
    assert!(text.contains("strongest:"));
    assert!(read_m3d(&b"M3D\0\x09\0\0\0"[..]).is_err());
    assert!(read_m3d(&b"nope"[..]).is_err());
}

#[test]
fn config_validation() {
    let bad = DetectionConfig {
        buffer_resolution: 32,
        ..DetectionConfig::default()
    };
    assert!(bad.validate().is_err());
    let bad = DetectionConfig {
        specular_tolerance_deg: 0.0,
        ..DetectionConfig::default()
    };
    assert!(bad.validate().is_err());
    assert!(DetectionConfig::default().validate().is_ok());
}
