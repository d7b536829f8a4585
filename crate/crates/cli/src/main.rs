//! `topview`: synthesize depth sequences, run the audience-measurement
//! pipeline on a frames directory, and regenerate the reference histograms.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use topview_core::detection::{DepthHistogram, ReferenceHistograms};
use topview_core::export::{write_detections_csv, write_heatmap_png, write_json, write_trajectories_csv};
use topview_core::synthetic::dataset::{GROUND_TRUTH_FILE, SCENARIO_FILE};
use topview_core::synthetic::{default_scripts, ground_truth, load_script, read_gt_rows, reference_histograms, write_dataset};
use topview_core::{evaluate, load_config, run_directory, Config, Error, Evaluation, RunOutput};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "topview", version, about = "Audience measurement from a top-view depth camera")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scripted scene (or the default set) into frames directories.
    Synth(SynthArgs),
    /// Detect, track and score attention over a frames directory.
    Run(RunArgs),
    /// Write the reference head histograms.
    Refhist(RefhistArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Scenario script (config sections plus a `[scenario]` table).
    #[arg(long, conflicts_with = "defaults", required_unless_present = "defaults")]
    script: Option<PathBuf>,
    /// Render the default scenario set, one directory per script.
    #[arg(long)]
    defaults: bool,
    /// Config for the default set; scripts carry their own.
    #[arg(long, requires = "defaults")]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the noise seed of every rendered script.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Defaults to the frames directory's scenario file, then built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    frames: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Recorded in the summary; the pipeline itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Detections only, no tracking or attention outputs.
    #[arg(long)]
    no_track: bool,
    #[arg(long, default_value_t = 4)]
    heatmap_px_per_sample: u32,
}

#[derive(Args)]
struct RefhistArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RunSummary {
    frames: usize,
    detections: usize,
    confirmed_tracks: usize,
    seed: u64,
    false_negatives: Option<usize>,
    false_positives: Option<usize>,
    angle_mae_deg: Option<f64>,
    wall_clock_s: f64,
    effective_fps: f64,
}

impl RunSummary {
    fn new(run: &RunOutput, seed: u64, ev: Option<&Evaluation>) -> Self {
        Self {
            frames: run.frames,
            detections: run.detections.iter().map(|(_, d)| d.len()).sum(),
            confirmed_tracks: run.tracks.len(),
            seed,
            false_negatives: ev.map(|e| e.false_negatives),
            false_positives: ev.map(|e| e.false_positives),
            angle_mae_deg: ev.and_then(|e| e.angle_mae_deg),
            wall_clock_s: run.wall_clock_s,
            effective_fps: run.effective_fps(),
        }
    }
}

fn config_or_default(path: Option<&Path>) -> anyhow::Result<Config> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => Config::default(),
    })
}

fn references(cfg: &Config) -> anyhow::Result<Vec<DepthHistogram>> {
    Ok(match &cfg.pipeline.reference_histograms {
        Some(path) => ReferenceHistograms::load(path)?.hists,
        None => reference_histograms(cfg)?,
    })
}

fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let jobs = match &args.script {
        Some(path) => {
            let (cfg, script) = load_script(path)?;
            vec![(args.out.clone(), cfg, script)]
        }
        None => {
            let cfg = config_or_default(args.config.as_deref())?;
            default_scripts()
                .into_iter()
                .map(|s| (args.out.join(&s.name), cfg.clone(), s))
                .collect()
        }
    };
    for (dir, cfg, mut script) in jobs {
        if let Some(seed) = args.seed {
            script.seed = seed;
        }
        let data = write_dataset(&script, &cfg, &dir)?;
        println!("{}: {} frames -> {}", script.name, data.frames.len(), dir.display());
    }
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let scenario = args.frames.join(SCENARIO_FILE);
    let cfg = match &args.config {
        Some(p) => load_config(p)?,
        None if scenario.is_file() => load_config(&scenario)?,
        None => Config::default(),
    };
    let refs = references(&cfg)?;
    let output = run_directory(&args.frames, &cfg, &refs, !args.no_track)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let gt_path = args.frames.join(GROUND_TRUTH_FILE);
    let evaluation = if gt_path.is_file() {
        let rows = read_gt_rows(&gt_path)?;
        let truth = if scenario.is_file() {
            let (_, script) = load_script(&scenario)?;
            Some(ground_truth(&script, &cfg)?)
        } else {
            None
        };
        Some(evaluate(&output, &rows, truth.as_ref()))
    } else {
        None
    };

    if args.no_track {
        write_detections_csv(&output.detections, &args.out.join("detections.csv"))?;
    } else {
        write_trajectories_csv(&output.trajectories, &args.out.join("trajectories.csv"))?;
        if let Some(map) = &output.map {
            write_heatmap_png(map, args.heatmap_px_per_sample, &args.out.join("heatmap.png"))?;
        }
        if let Some(report) = &output.report {
            write_json(report, &args.out.join("report.json"))?;
        }
    }
    if let Some(ev) = &evaluation {
        write_json(ev, &args.out.join("comparison.json"))?;
    }
    let summary = RunSummary::new(&output, args.seed, evaluation.as_ref());
    write_json(&summary, &args.out.join("summary.json"))?;
    println!(
        "{} frames, {} detections, {} confirmed tracks, {:.1} fps",
        summary.frames, summary.detections, summary.confirmed_tracks, summary.effective_fps
    );
    if let Some(ranking) = output.report.as_ref().map(|r| r.ranking()) {
        println!("sign ranking: {}", ranking.join(" > "));
    }
    Ok(())
}

fn refhist(args: RefhistArgs) -> anyhow::Result<()> {
    let cfg = config_or_default(args.config.as_deref())?;
    let refs = ReferenceHistograms {
        hists: reference_histograms(&cfg)?,
    };
    refs.save(&args.out)?;
    println!("{} reference histograms -> {}", refs.hists.len(), args.out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Data { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidDepth,
        ) => EXIT_DATA,
        Some(_) => EXIT_INVARIANT,
        None => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Refhist(a) => refhist(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
