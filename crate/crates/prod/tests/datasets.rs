//! Combining, comparing and summarizing finished datasets.
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use common::{write_fixtures, Setup};
use sarsim_core::imaging::SensorModel;
use sarsim_prod::{
    checksum, combine_datasets, compare_chips, compare_files, plan_production, run_production,
    summarize, ChipRecord, Manifest, Paradigm, ProdError, ProductionConfig, RunOptions,
    MANIFEST_NAME,
};

/// Manifest for every job of a 10-class, 3-depression, 0.5° sweep, with
/// 2×2 chips written under `root` when `root` is given.
fn synthetic(dir: &Path, paradigm: &str, root: Option<&Path>) -> Manifest {
    write_fixtures(dir);
    let owned: Vec<String> = (0..10).map(|i| format!("class{i}")).collect();
    let targets: Vec<(&str, &str)> = owned.iter().map(|l| (l.as_str(), "box.obj")).collect();
    let setup = Setup {
        output: "out",
        targets: &targets,
        depressions: &[16.0, 17.0, 18.0],
        azimuth: (0.0, 360.0, 0.5),
        paradigm,
        extra: "",
    };
    let cfg = ProductionConfig::from_toml_str(&setup.toml(), dir).unwrap();
    let plan = plan_production(&cfg).unwrap();
    let bytes = [0u8, 0, 128, 63, 0, 0, 0, 0, 0, 0, 0, 64, 0, 0, 0, 0];
    let records = plan
        .jobs
        .iter()
        .map(|j| {
            if let Some(root) = root {
                let path = root.join(j.chip_path());
                fs::create_dir_all(path.parent().unwrap()).unwrap();
                fs::write(&path, bytes).unwrap();
                fs::write(path.with_extension("json"), "{}").unwrap();
            }
            ChipRecord {
                label: j.label.clone(),
                azimuth_deg: j.azimuth_deg,
                depression_deg: j.depression_deg,
                paradigm: j.paradigm,
                variant: j.variant,
                seeds: BTreeMap::from([("job".to_string(), j.seed)]),
                sensor: SensorModel::mstar_like(),
                rows: 2,
                cols: 2,
                path: j.chip_path(),
                checksum: checksum(&bytes),
            }
        })
        .collect();
    Manifest {
        records,
        errors: Vec::new(),
    }
}

#[test]
fn union_of_paradigm_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let centers = synthetic(dir.path(), "centers", None);
    let sbr = synthetic(dir.path(), "sbr", None);
    assert_eq!((centers.len(), sbr.len()), (21_600, 21_600));

    let both = combine_datasets(&[centers.clone(), sbr.clone()]).unwrap();
    assert_eq!(both.len(), 43_200);
    assert_eq!(
        both.paradigms().into_iter().collect::<Vec<_>>(),
        vec![Paradigm::Centers, Paradigm::Sbr]
    );
    assert_eq!(both.records[..21_600], centers.records[..]);

    // Round trip through the line format.
    let text = both.to_jsonl();
    assert_eq!(text.lines().count(), 43_200);
    assert_eq!(Manifest::from_jsonl(&text, Path::new("x")).unwrap(), both);

    assert_eq!(
        combine_datasets(&[centers.clone(), Manifest::default()]).unwrap(),
        centers
    );
    let err = combine_datasets(&[centers.clone(), centers.clone()]).unwrap_err();
    assert!(
        matches!(err, ProdError::Collision(ref p) if *p == centers.records[0].path),
        "{err}"
    );
}

#[test]
fn malformed_manifest_names_the_line() {
    let err = Manifest::from_jsonl("\n{\"status\":\"ok\"}\n", Path::new("m.jsonl")).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn rebasing_keeps_files_reachable() {
    let dir = tempfile::tempdir().unwrap();
    let m = Manifest {
        records: vec![ChipRecord {
            label: "a".into(),
            azimuth_deg: 0.0,
            depression_deg: 17.0,
            paradigm: Paradigm::Sbr,
            variant: 0,
            seeds: BTreeMap::new(),
            sensor: SensorModel::mstar_like(),
            rows: 1,
            cols: 1,
            path: "a/sbr/x.f32".into(),
            checksum: checksum(&[0; 4]),
        }],
        errors: Vec::new(),
    };
    let from = dir.path().join("runs/one");
    let to = dir.path().join("merged");
    let moved = m.rebased(&from, &to).unwrap();
    assert_eq!(moved.records[0].path, "../runs/one/a/sbr/x.f32");
    assert_eq!(moved.rebased(&to, &from).unwrap(), m);
}

#[test]
fn complete_dataset_has_no_gaps_and_one_deleted_chip_has_one() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("data");
    let manifest = synthetic(dir.path(), "centers", Some(&root));

    let report = summarize(&manifest, &root).unwrap();
    assert!(report.gaps.is_empty());
    assert!(report.invalid.is_empty());
    let per_paradigm: usize = report.by_paradigm.values().flat_map(|m| m.values()).sum();
    let per_depression: usize = report.by_depression.values().flat_map(|m| m.values()).sum();
    assert_eq!(
        (report.records, per_paradigm, per_depression),
        (21_600, 21_600, 21_600)
    );
    assert_eq!(report.by_depression["class3"]["17"], 720);
    // Chips hold magnitudes {1, 0, 2, 0}: peak 20·log10(2), median power 1.
    let peak = report.peak_db.unwrap();
    assert!((peak.max - 20.0 * 2f64.log10()).abs() < 1e-12);
    assert!(report.floor_db.unwrap().mean.abs() < 1e-12);

    let victim = &manifest.records[12_345];
    fs::remove_file(root.join(&victim.path)).unwrap();
    let report = summarize(&manifest, &root).unwrap();
    assert_eq!(report.records, 21_600);
    assert_eq!(report.invalid, vec![victim.path.clone()]);
    assert_eq!(report.gaps.len(), 1);
    let gap = &report.gaps[0];
    assert_eq!(
        (
            gap.label.as_str(),
            gap.paradigm,
            gap.azimuth_deg,
            gap.depression_deg
        ),
        (
            victim.label.as_str(),
            victim.paradigm,
            victim.azimuth_deg,
            victim.depression_deg
        )
    );
}

#[test]
fn similarity_conventions() {
    let mags: Vec<f32> = (0..64).map(|i| ((i * 37 % 64) as f32).sqrt()).collect();
    let same = compare_chips(&mags, 8, 8, &mags, 8, 8).unwrap();
    assert_eq!(same.ncc, 1.0);
    assert!(!same.degenerate);
    assert_eq!(same.shift, (0, 0));
    assert_eq!(same.quadrant_delta_db, [Some(0.0); 4]);

    let zero = vec![0.0f32; 64];
    let z = compare_chips(&mags, 8, 8, &zero, 8, 8).unwrap();
    assert_eq!(z.ncc, 0.0);
    assert!(z.degenerate);
    assert_eq!(z.quadrant_delta_db, [None; 4]);

    assert!(matches!(
        compare_chips(&mags, 8, 8, &mags, 4, 16),
        Err(ProdError::DimensionMismatch(8, 8, 4, 16))
    ));

    // A translated point pattern realigns onto the original.
    let mut a = vec![0.0f32; 100];
    let mut b = vec![0.0f32; 100];
    for (r, c, v) in [(4, 4, 3.0), (5, 6, 1.0), (2, 3, 0.5)] {
        a[r * 10 + c] = v;
        b[(r + 2) * 10 + c - 1] = v;
    }
    let moved = compare_chips(&a, 10, 10, &b, 10, 10).unwrap();
    assert_eq!(moved.shift, (-2, 1));
    assert_eq!(moved.ncc, 1.0);

    // Anti-correlated content stays within [-1, 1].
    let inv: Vec<f32> = mags.iter().map(|m| 10.0 - m).collect();
    let s = compare_chips(&mags, 8, 8, &inv, 8, 8).unwrap();
    assert!((-1.0..=1.0).contains(&s.ncc));
}

#[test]
fn paradigms_differ_on_the_same_target() {
    let dir = tempfile::tempdir().unwrap();
    write_fixtures(dir.path());
    let setup = Setup {
        output: "out",
        targets: &[("dihedral", "dihedral.obj")],
        depressions: &[30.0],
        azimuth: (0.0, 0.0, 1.0),
        paradigm: "both",
        extra: "",
    };
    let cfg = ProductionConfig::load(setup.write(dir.path(), "c.toml")).unwrap();
    run_production(&cfg, &RunOptions::default()).unwrap();
    let out = dir.path().join("out");
    let m = Manifest::read(out.join(MANIFEST_NAME)).unwrap();
    let [c, s] = [Paradigm::Centers, Paradigm::Sbr]
        .map(|p| m.records.iter().find(|r| r.paradigm == p).unwrap());
    let sim = compare_files(out.join(&c.path), out.join(&s.path)).unwrap();
    println!(
        "centers vs sbr ncc = {:.4}, quadrants {:?}",
        sim.ncc, sim.quadrant_delta_db
    );
    assert!(!sim.degenerate);
    assert!(sim.ncc < 1.0);
    assert!(sim.ncc > -1.0);
    assert_eq!(
        compare_files(out.join(&c.path), out.join(&c.path))
            .unwrap()
            .ncc,
        1.0
    );
}
