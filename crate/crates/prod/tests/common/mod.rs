//! Fixtures shared by the production tests.
#![allow(dead_code)]

use std::fs;
use std::path::Path;

use sarsim_core::scene::{shapes, write_obj, MaterialId, Vec3};

pub const MATERIALS: &str = "[materials.steel]\nkind = \"pec\"\nsigma0_db = -15.0\n";

/// Writes `materials.toml` and three small PEC targets (`dihedral.obj`,
/// `trihedral.obj`, `box.obj`) into `dir`.
pub fn write_fixtures(dir: &Path) {
    fs::write(dir.join("materials.toml"), MATERIALS).unwrap();
    let m = MaterialId(0);
    write_obj(&shapes::dihedral(0.6, 0.4, m), dir.join("dihedral.obj")).unwrap();
    write_obj(&shapes::trihedral(0.4, m), dir.join("trihedral.obj")).unwrap();
    write_obj(
        &shapes::cuboid(Vec3::new(0.8, 0.5, 0.4), m),
        dir.join("box.obj"),
    )
    .unwrap();
}

pub struct Setup<'a> {
    pub output: &'a str,
    pub targets: &'a [(&'a str, &'a str)],
    pub depressions: &'a [f64],
    pub azimuth: (f64, f64, f64),
    pub paradigm: &'a str,
    /// Appended verbatim before the target tables.
    pub extra: &'a str,
}

impl Setup<'_> {
    pub fn toml(&self) -> String {
        let deps: Vec<String> = self.depressions.iter().map(|d| format!("{d:?}")).collect();
        let mut s = format!(
            "output_dir = \"{}\"\nmaster_seed = 7\nparadigm = \"{}\"\ndepressions_deg = [{}]\n{}\n",
            self.output,
            self.paradigm,
            deps.join(", "),
            self.extra
        );
        // Coarse rays keep the tests quick.
        s.push_str("[sbr]\nray_area_m2 = 1e-4\nmax_bounces = 3\n\n");
        let (a, b, c) = self.azimuth;
        s.push_str(&format!(
            "[azimuth]\nstart_deg = {a:?}\nstop_deg = {b:?}\nstep_deg = {c:?}\n"
        ));
        for (label, mesh) in self.targets {
            s.push_str(&format!(
                "\n[[targets]]\nlabel = \"{label}\"\nmesh = \"{mesh}\"\nmaterials = \"materials.toml\"\nmaterial = \"steel\"\n"
            ));
        }
        s
    }

    /// Writes the config into `dir` and returns its path.
    pub fn write(&self, dir: &Path, name: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        fs::write(&path, self.toml()).unwrap();
        path
    }
}

/// Sorted relative paths and contents of every file under `dir`.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}
