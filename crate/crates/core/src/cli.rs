//! Command-line entry point.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::ablation::{self, AblationSpec, DatasetProvenance, Ops};
use crate::dataset;
use crate::error::{Error, Result};
use crate::eval;
use crate::profile::{self, FactorSet};
use crate::report;
use crate::synth::{self, GeneratorConfig, Style};
use crate::textures;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "objectness",
    version,
    about = "Profile, ablate and evaluate instance-segmentation datasets"
)]
pub struct Cli {
    /// Seed for generation and texture assignment.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Generate {
        #[arg(long)]
        style: Style,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drop objects outside a pixel-count range and scenes left with too few
    /// or too many objects.
    Curate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_pixels: usize,
        #[arg(long, default_value_t = usize::MAX)]
        max_pixels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute factor tables.
    Profile {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "all")]
        factors: FactorSet,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply C/S/T/U ablations.
    Ablate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated subset of C,S,T,U; always applied as S, U, T, C.
        #[arg(long)]
        ops: Ops,
        /// Pixels, or one of ycb, scannet, coco. Defaults to the dataset's mean
        /// bbox diagonal.
        #[arg(long)]
        target_diagonal: Option<String>,
        /// Directory of PNG textures; defaults to the bundled bank.
        #[arg(long)]
        textures: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted soft masks against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize factor tables, optionally against a second set.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        svg: PathBuf,
    },
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        log::LevelFilter::Info
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    let result = validate(&cli).and_then(|()| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = cli.jobs {
            pool = pool.num_threads(jobs);
        }
        let pool = pool
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| execute(&cli))
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

/// Flag checks that need no I/O.
fn validate(cli: &Cli) -> Result<()> {
    if cli.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    match &cli.command {
        Command::Generate { count: 0, .. } => Err(Error::Config("--count must be positive".into())),
        Command::Curate {
            min_pixels,
            max_pixels,
            ..
        } if min_pixels > max_pixels => Err(Error::Config(format!(
            "--min-pixels {min_pixels} exceeds --max-pixels {max_pixels}"
        ))),
        Command::Ablate {
            target_diagonal: Some(t),
            ..
        } => parse_target(t).map(|_| ()),
        Command::Evaluate { iou, .. } if !(*iou > 0.0 && *iou < 1.0) => Err(Error::Config(
            format!("--iou must lie in (0, 1), got {iou}"),
        )),
        _ => Ok(()),
    }
}

fn parse_target(text: &str) -> Result<f64> {
    if let Some(d) = ablation::target_preset(text) {
        return Ok(d);
    }
    match text.parse::<f64>() {
        Ok(d) if d.is_finite() && d > 0.0 => Ok(d),
        _ => Err(Error::Config(format!(
            "--target-diagonal must be a positive number or ycb/scannet/coco, got {text:?}"
        ))),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate { style, count, out } => {
            let scenes = synth::generate(&GeneratorConfig {
                style: *style,
                count: *count,
                seed: cli.seed,
            })?;
            dataset::save_dataset(out, &scenes)?;
            log::info!("wrote {} {style} scenes to {}", scenes.len(), out.display());
        }
        Command::Curate {
            input,
            min_pixels,
            max_pixels,
            out,
        } => {
            let scenes = dataset::load_dataset(input)?;
            let before = scenes.len();
            let kept = synth::curate(scenes, *min_pixels, *max_pixels);
            dataset::save_dataset(out, &kept)?;
            log::info!(
                "kept {} of {before} scenes in {}",
                kept.len(),
                out.display()
            );
        }
        Command::Profile {
            input,
            factors,
            out,
        } => {
            let scenes = dataset::load_dataset(input)?;
            let p = profile::profile_scenes(&scenes, *factors)?;
            profile::write_profile(out, &p)?;
            log::info!(
                "profiled {} scenes, {} objects into {}",
                p.scenes.len(),
                p.objects.len(),
                out.display()
            );
        }
        Command::Ablate {
            input,
            ops,
            target_diagonal,
            textures: texture_dir,
            out,
        } => {
            let scenes = dataset::load_dataset(input)?;
            let target = match target_diagonal {
                Some(t) => Some(parse_target(t)?),
                None if ops.u => Some(ablation::mean_bbox_diagonal(&scenes).ok_or_else(|| {
                    Error::structural(format!(
                        "{}: no objects to derive a target diagonal from",
                        input.display()
                    ))
                })?),
                None => None,
            };
            let bank = match texture_dir {
                Some(dir) if ops.t => textures::load_dir(dir)?,
                _ => textures::bundled(),
            };
            let spec = AblationSpec {
                ops: *ops,
                textures: bank,
                target_diagonal: target.filter(|_| ops.u),
                seed: cli.seed,
            };
            let ablated = ablation::ablate_dataset(&scenes, &spec)?;
            let provenance = DatasetProvenance {
                ops: ops.canonical(),
                seed: cli.seed,
                target_diagonal: spec.target_diagonal,
                scenes: ablated.iter().map(|a| a.provenance.clone()).collect(),
            };
            let scenes: Vec<_> = ablated.into_iter().map(|a| a.scene).collect();
            dataset::save_dataset(out, &scenes)?;
            dataset::write_json(&out.join("provenance.json"), &provenance)?;
            log::info!(
                "ablated {} scenes with {ops} into {}",
                scenes.len(),
                out.display()
            );
        }
        Command::Evaluate { pred, gt, iou, out } => {
            let result = eval::evaluate(pred, gt, *iou)?;
            dataset::write_json(out, &result)?;
            log::info!(
                "AP {:.4} PQ {:.4} precision {:.4} recall {:.4}",
                result.ap,
                result.pq,
                result.precision,
                result.recall
            );
        }
        Command::Report {
            input,
            compare,
            svg,
        } => {
            let a = load_report(input)?;
            std::fs::create_dir_all(svg).map_err(|e| Error::io(svg, e))?;
            dataset::write_json(&svg.join("report.json"), &a)?;
            write_text(&svg.join("report.svg"), &report::render_report_svg(&a))?;
            if let Some(other) = compare {
                let b = load_report(other)?;
                let c = report::compare(&a, &b)?;
                dataset::write_json(&svg.join("compare_report.json"), &b)?;
                dataset::write_json(&svg.join("comparison.json"), &c)?;
                write_text(
                    &svg.join("comparison.svg"),
                    &report::render_comparison_svg(&a, &b, &c),
                )?;
            }
            log::info!("wrote report to {}", svg.display());
        }
    }
    Ok(())
}

fn load_report(dir: &Path) -> Result<report::FactorReport> {
    let p = profile::read_profile(dir)?;
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(report::build_report(&id, &p))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
