//! Production runs.
//!
//! Jobs that share a simulation (same target, geometry and paradigm, all
//! variants) run as one work unit: the M3D or the traced paths are built
//! once and every variant is rendered from them. Work units run on a rayon
//! pool; each finished chip is appended to a journal next to the manifest,
//! and the manifest itself is written once at the end, in plan order.
//! A rerun trusts every journal or manifest record whose chip still
//! matches its checksum and only executes the rest.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use sarsim_core::augment::{augment_chip, ChipInputs, RandomizationPolicy};
use sarsim_core::centers::assemble_m3d;
use sarsim_core::imaging::{
    chip_bytes, render_chip, save_preview, to_preview, write_chip, ChipLayout, RadarChip,
    SensorModel,
};
use sarsim_core::sbr::{launch_grid, trace_grid};
use sarsim_core::scene::{load_mesh, AccelIndex, MaterialTable, TargetMesh};

use crate::config::{ErrorPolicy, Paradigm, ProductionConfig};
use crate::manifest::{ChipRecord, ErrorRecord, Manifest};
use crate::plan::{plan_production, Job};
use crate::{checksum, ProdError, Result, MANIFEST_NAME};

const JOURNAL_NAME: &str = "manifest.journal.jsonl";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config hint and the environment.
    pub workers: Option<usize>,
    /// Stop after this many pending jobs without writing the manifest, as
    /// an interrupted run would.
    pub max_jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub planned: usize,
    pub executed: usize,
    pub skipped: usize,
    pub failed: usize,
    /// `None` when the run stopped early.
    pub manifest: Option<PathBuf>,
}

impl RunSummary {
    /// 0 on full success, 2 when jobs failed under the continue policy.
    pub fn exit_code(&self) -> i32 {
        if self.failed > 0 {
            2
        } else {
            0
        }
    }
}

struct Target {
    mesh: TargetMesh,
    materials: MaterialTable,
    index: Option<AccelIndex>,
}

fn load_target(
    cfg: &ProductionConfig,
    i: usize,
    need_index: bool,
) -> std::result::Result<Target, String> {
    let t = &cfg.targets[i];
    let materials = MaterialTable::load(cfg.resolve(&t.materials)).map_err(|e| e.to_string())?;
    let binding = t.binding().map_err(|e| e.to_string())?;
    let mesh = load_mesh(cfg.resolve(&t.mesh), t.unit_scale, &binding, &materials)
        .map_err(|e| e.to_string())?;
    let index = need_index
        .then(|| AccelIndex::new(mesh.clone()))
        .transpose()
        .map_err(|e| e.to_string())?;
    Ok(Target {
        mesh,
        materials,
        index,
    })
}

struct Context<'a> {
    cfg: &'a ProductionConfig,
    sensor: SensorModel,
    layout: ChipLayout,
    policy: Option<RandomizationPolicy>,
    out: PathBuf,
    journal: Mutex<File>,
}

impl Context<'_> {
    fn render(&self, inputs: ChipInputs<'_>, job: &Job) -> sarsim_core::Result<RadarChip> {
        let geom = self
            .cfg
            .geometry(job.azimuth_deg, job.depression_deg)
            .map_err(to_core)?;
        let mut chip = match &self.policy {
            Some(policy) => {
                augment_chip(inputs, &geom, &self.sensor, &self.layout, policy, job.seed)?
            }
            None => render_chip(
                &inputs.returns(&geom, None)?,
                &self.layout,
                &self.sensor,
                job.depression_deg,
                None,
                Some(job.seed),
            )?,
        };
        let meta = &mut chip.metadata;
        meta.label = job.label.clone();
        meta.paradigm = job.paradigm.tag().into();
        meta.geometry = Some(geom);
        meta.seeds.insert("job".into(), job.seed);
        meta.seeds.insert("geometry".into(), job.geometry_seed);
        meta.notes.insert("variant".into(), job.variant.to_string());
        Ok(chip)
    }

    fn store(&self, chip: &RadarChip, job: &Job) -> std::result::Result<ChipRecord, String> {
        let stem = self.out.join(job.stem());
        if let Some(dir) = stem.parent() {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        }
        write_chip(chip, &stem).map_err(|e| e.to_string())?;
        if self.cfg.previews {
            let img =
                to_preview(chip, self.cfg.preview_range_db, None).map_err(|e| e.to_string())?;
            save_preview(&img, self.out.join(job.chip_path().replace(".f32", ".png")))
                .map_err(|e| e.to_string())?;
        }
        let record = ChipRecord {
            label: job.label.clone(),
            azimuth_deg: job.azimuth_deg,
            depression_deg: job.depression_deg,
            paradigm: job.paradigm,
            variant: job.variant,
            seeds: chip.metadata.seeds.clone(),
            sensor: chip.metadata.sensor.unwrap_or(self.sensor),
            rows: chip.rows,
            cols: chip.cols,
            path: job.chip_path(),
            checksum: checksum(&chip_bytes(chip)),
        };
        let mut line = Manifest::record_line(&record);
        line.push('\n');
        let mut journal = self.journal.lock().expect("journal lock");
        journal
            .write_all(line.as_bytes())
            .and_then(|_| journal.flush())
            .map_err(|e| format!("journal: {e}"))?;
        Ok(record)
    }

    fn run_unit(
        &self,
        target: &std::result::Result<Target, String>,
        jobs: &[&Job],
    ) -> Vec<(usize, std::result::Result<ChipRecord, String>)> {
        let fail_all = |msg: String| jobs.iter().map(|j| (j.index, Err(msg.clone()))).collect();
        let target = match target {
            Ok(t) => t,
            Err(e) => return fail_all(e.clone()),
        };
        let first = jobs[0];
        let geom = match self.cfg.geometry(first.azimuth_deg, first.depression_deg) {
            Ok(g) => g,
            Err(e) => return fail_all(e.to_string()),
        };
        let sbr_paths;
        let m3d;
        let inputs = match first.paradigm {
            Paradigm::Centers => {
                match assemble_m3d(
                    &target.mesh,
                    &geom,
                    &target.materials,
                    &self.cfg.detection,
                    first.geometry_seed,
                ) {
                    Ok(m) => m3d = m,
                    Err(e) => return fail_all(e.to_string()),
                }
                ChipInputs::M3d(&m3d)
            }
            Paradigm::Sbr => {
                let index = target.index.as_ref().expect("index built for sbr targets");
                let grid = match launch_grid(index, &geom, &self.cfg.sbr) {
                    Ok(g) => g,
                    Err(e) => return fail_all(e.to_string()),
                };
                sbr_paths = trace_grid(index, &target.materials, &geom, &self.cfg.sbr, &grid);
                ChipInputs::Contributions {
                    paths: &sbr_paths,
                    plane_distance: grid.plane_distance,
                }
            }
        };
        jobs.iter()
            .map(|job| {
                let result = self
                    .render(inputs, job)
                    .map_err(|e| e.to_string())
                    .and_then(|chip| self.store(&chip, job));
                (job.index, result)
            })
            .collect()
    }
}

fn to_core(e: ProdError) -> sarsim_core::Error {
    match e {
        ProdError::Core(c) => c,
        other => sarsim_core::Error::InvalidParameter(other.to_string()),
    }
}

/// Records of earlier runs under `out` whose chips still validate.
fn completed_records(out: &Path) -> HashMap<String, ChipRecord> {
    let mut done = HashMap::new();
    for name in [MANIFEST_NAME, JOURNAL_NAME] {
        let Ok(text) = fs::read_to_string(out.join(name)) else {
            continue;
        };
        // A torn last journal line is simply not trusted.
        for line in text.lines() {
            if let Ok(m) = Manifest::from_jsonl(line, Path::new(name)) {
                for r in m.records {
                    if r.verify(out) {
                        done.insert(r.path.clone(), r);
                    }
                }
            }
        }
    }
    done
}

pub fn run_production(cfg: &ProductionConfig, opts: &RunOptions) -> Result<RunSummary> {
    let plan = plan_production(cfg)?;
    let sensor = cfg.sensor_model()?;
    let out = cfg.output_path();
    fs::create_dir_all(&out).map_err(|e| ProdError::io(&out, e))?;

    let done = completed_records(&out);
    let mut pending: Vec<&Job> = plan
        .jobs
        .iter()
        .filter(|j| !done.contains_key(&j.chip_path()))
        .collect();
    let skipped = plan.len() - pending.len();
    let interrupted = opts.max_jobs.is_some_and(|n| n < pending.len());
    if let Some(n) = opts.max_jobs {
        pending.truncate(n);
    }

    // Work units in plan order.
    let mut units: Vec<Vec<&Job>> = Vec::new();
    let mut unit_of = HashMap::new();
    for job in &pending {
        let slot = *unit_of.entry(job.simulation_key()).or_insert_with(|| {
            units.push(Vec::new());
            units.len() - 1
        });
        units[slot].push(*job);
    }

    let mut needed: BTreeMap<usize, bool> = BTreeMap::new();
    for job in &pending {
        *needed.entry(job.target).or_default() |= job.paradigm == Paradigm::Sbr;
    }
    let targets: HashMap<usize, std::result::Result<Target, String>> = needed
        .into_iter()
        .map(|(i, sbr)| (i, load_target(cfg, i, sbr)))
        .collect();

    let journal_path = out.join(JOURNAL_NAME);
    let journal = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&journal_path)
        .map_err(|e| ProdError::io(&journal_path, e))?;
    let ctx = Context {
        cfg,
        sensor,
        layout: cfg.chip,
        policy: cfg.policy(),
        out: out.clone(),
        journal: Mutex::new(journal),
    };

    let workers = opts.workers.unwrap_or_else(|| cfg.worker_count()).max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ProdError::Config(format!("worker pool: {e}")))?;
    let abort = AtomicBool::new(false);
    let fail_fast = cfg.on_error == ErrorPolicy::FailFast;
    let outcomes: Vec<(usize, std::result::Result<ChipRecord, String>)> = pool.install(|| {
        units
            .par_iter()
            .flat_map_iter(|unit| {
                if abort.load(Ordering::Relaxed) {
                    return Vec::new();
                }
                let results = ctx.run_unit(&targets[&unit[0].target], unit);
                if fail_fast && results.iter().any(|(_, r)| r.is_err()) {
                    abort.store(true, Ordering::Relaxed);
                }
                results
            })
            .collect()
    });

    let executed = outcomes.len();
    let mut records: BTreeMap<usize, ChipRecord> = BTreeMap::new();
    let mut errors: BTreeMap<usize, ErrorRecord> = BTreeMap::new();
    for (index, result) in outcomes {
        let job = &plan.jobs[index];
        match result {
            Ok(r) => {
                records.insert(index, r);
            }
            Err(error) => {
                errors.insert(
                    index,
                    ErrorRecord {
                        label: job.label.clone(),
                        azimuth_deg: job.azimuth_deg,
                        depression_deg: job.depression_deg,
                        paradigm: job.paradigm,
                        variant: job.variant,
                        path: job.chip_path(),
                        error,
                    },
                );
            }
        }
    }
    let failed = errors.len();
    let first_error = errors
        .values()
        .next()
        .map(|e| (e.path.clone(), e.error.clone()));

    if interrupted {
        return Ok(RunSummary {
            planned: plan.len(),
            executed,
            skipped,
            failed,
            manifest: None,
        });
    }

    for job in &plan.jobs {
        if let Some(r) = done.get(&job.chip_path()) {
            records.insert(job.index, r.clone());
        }
    }
    let manifest = Manifest {
        records: records.into_values().collect(),
        errors: errors.into_values().collect(),
    };
    let manifest_path = out.join(MANIFEST_NAME);
    manifest.write_atomic(&manifest_path)?;
    drop(ctx);
    fs::remove_file(&journal_path).map_err(|e| ProdError::io(&journal_path, e))?;

    if fail_fast {
        if let Some((job, reason)) = first_error {
            return Err(ProdError::JobFailed { job, reason });
        }
    }
    Ok(RunSummary {
        planned: plan.len(),
        executed,
        skipped,
        failed,
        manifest: Some(manifest_path),
    })
}
