use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sarsim_core::centers::assemble_m3d;
use sarsim_core::imaging::{read_chip, save_preview, to_preview, RadarChip};
use sarsim_core::sbr::sweep_rcs;
use sarsim_core::scene::{load_mesh, AccelIndex, MaterialTable};
use sarsim_core::{to_db, Complex64};
use sarsim_prod::{
    azimuths, combine_datasets, compare_files, plan_production, run_production, summarize,
    Manifest, Paradigm, ParadigmSelection, ProdError, ProductionConfig, Result, RunOptions,
    MANIFEST_NAME,
};

/// SAR target-signature dataset production.
#[derive(Parser)]
#[command(name = "sarsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a config and print the job counts.
    Plan {
        config: PathBuf,
        #[arg(long)]
        paradigm: Option<ParadigmSelection>,
    },
    /// Render every job of a config; reruns resume.
    Produce {
        config: PathBuf,
        #[arg(long)]
        paradigm: Option<ParadigmSelection>,
        #[arg(long)]
        workers: Option<usize>,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Merge manifests into one, with paths relative to the new manifest.
    Combine {
        #[arg(long, short)]
        output: PathBuf,
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
    /// Peak-aligned correlation of two chips (paths with or without `.f32`).
    Compare { a: PathBuf, b: PathBuf },
    /// Coverage, gaps and level statistics of a dataset.
    Summarize {
        /// A manifest file or a directory containing one.
        manifest: PathBuf,
    },
    /// 8-bit PNG of a chip.
    Preview {
        chip: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        range_db: f64,
    },
    /// RCS over the config's azimuths for one target (CSV on stdout). The
    /// centers paradigm reports the coherent RCS of the assembled M3D.
    Rcs {
        config: PathBuf,
        #[arg(long, default_value = "sbr")]
        paradigm: Paradigm,
        #[arg(long)]
        target: String,
        /// Defaults to the first configured depression.
        #[arg(long)]
        depression: Option<f64>,
    },
}

fn load_config(path: &Path, paradigm: Option<ParadigmSelection>) -> Result<ProductionConfig> {
    let mut cfg = ProductionConfig::load(path)?;
    if let Some(p) = paradigm {
        cfg.paradigm = p;
    }
    Ok(cfg)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ProdError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Plan { config, paradigm } => {
            let cfg = load_config(&config, paradigm)?;
            let plan = plan_production(&cfg)?;
            println!("jobs: {}", plan.len());
            println!("targets: {}", cfg.targets.len());
            println!("depressions: {}", cfg.depressions_deg.len());
            println!("azimuths: {}", plan.azimuths_deg.len());
            let tags: Vec<_> = plan.paradigms.iter().map(|p| p.tag()).collect();
            println!("paradigms: {}", tags.join(","));
            println!("variants: {}", cfg.variants);
            Ok(0)
        }
        Command::Produce {
            config,
            paradigm,
            workers,
            output,
        } => {
            let mut cfg = load_config(&config, paradigm)?;
            if let Some(out) = output {
                cfg.output_dir = std::env::current_dir()
                    .map_err(|e| ProdError::Io {
                        path: ".".into(),
                        source: e,
                    })?
                    .join(out);
            }
            let summary = run_production(
                &cfg,
                &RunOptions {
                    workers,
                    max_jobs: None,
                },
            )?;
            println!(
                "planned {} executed {} skipped {} failed {}",
                summary.planned, summary.executed, summary.skipped, summary.failed
            );
            Ok(summary.exit_code())
        }
        Command::Combine { output, manifests } => {
            let out_dir = output.parent().map(Path::to_path_buf).unwrap_or_default();
            let parts = manifests
                .iter()
                .map(|p| {
                    let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                    Manifest::read(p)?.rebased(&dir, &out_dir)
                })
                .collect::<Result<Vec<_>>>()?;
            let combined = combine_datasets(&parts)?;
            combined.write_atomic(&output)?;
            println!(
                "{} records, {} errors",
                combined.len(),
                combined.errors.len()
            );
            Ok(0)
        }
        Command::Compare { a, b } => {
            print_json(&compare_files(a, b)?)?;
            Ok(0)
        }
        Command::Summarize { manifest } => {
            let path = if manifest.is_dir() {
                manifest.join(MANIFEST_NAME)
            } else {
                manifest
            };
            let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let report = summarize(&Manifest::read(&path)?, &root)?;
            println!("{}", report.to_json()?);
            Ok(0)
        }
        Command::Preview {
            chip,
            output,
            range_db,
        } => {
            let (header, mags) = read_chip(&chip)?;
            let chip = RadarChip {
                rows: header.rows,
                cols: header.cols,
                range_spacing_m: header.range_spacing_m,
                cross_spacing_m: header.cross_spacing_m,
                origin: header.origin,
                data: mags
                    .iter()
                    .map(|&m| Complex64::new(f64::from(m), 0.0))
                    .collect(),
                metadata: header.metadata,
            };
            save_preview(&to_preview(&chip, range_db, None)?, &output)?;
            Ok(0)
        }
        Command::Rcs {
            config,
            paradigm,
            target,
            depression,
        } => {
            let cfg = load_config(&config, None)?;
            let entry = cfg
                .targets
                .iter()
                .find(|t| t.label == target)
                .ok_or_else(|| ProdError::Config(format!("no target `{target}`")))?;
            let materials = MaterialTable::load(cfg.resolve(&entry.materials))?;
            let mesh = load_mesh(
                cfg.resolve(&entry.mesh),
                entry.unit_scale,
                &entry.binding()?,
                &materials,
            )?;
            let dep = depression.unwrap_or(cfg.depressions_deg[0]);
            let azs = azimuths(&cfg.azimuth);
            let samples: Vec<(f64, f64)> = match paradigm {
                Paradigm::Sbr => {
                    let index = AccelIndex::new(mesh)?;
                    sweep_rcs(&index, &materials, &cfg.geometry(0.0, dep)?, &azs, &cfg.sbr)?
                        .into_iter()
                        .map(|s| (s.azimuth_deg, s.rcs_m2))
                        .collect()
                }
                Paradigm::Centers => azs
                    .iter()
                    .map(|&az| {
                        let m3d = assemble_m3d(
                            &mesh,
                            &cfg.geometry(az, dep)?,
                            &materials,
                            &cfg.detection,
                            0,
                        )?;
                        Ok((az, m3d.coherent_rcs()?))
                    })
                    .collect::<Result<_>>()?,
            };
            println!("azimuth_deg,rcs_dbsm");
            for (az, rcs) in samples {
                println!("{az},{:.4}", to_db(rcs));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
