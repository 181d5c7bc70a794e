use std::path::PathBuf;

use adaudit_annotate_server::ServeOptions;
use adaudit_cli::clients::Clients;
use adaudit_cli::rundir::{RunDir, Stage};
use adaudit_cli::settings::{self, Overrides};
use adaudit_cli::stages::{run_stage, seed_live_store, LIVE_STORE_DIR, STORE_DIR};
use adaudit_cli::{annotation_results, fixture, full_run, StageOutcome};
use anyhow::Context;
use clap::{Parser, Subcommand};

/// Audit pipeline for ad moderation: ingest captured ads, measure removal,
/// score explicitness, cluster violating ads, audit URLs and report.
#[derive(Parser)]
#[command(name = "audit", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "audit.toml")]
    config: PathBuf,
    /// Replay service responses from this cassette directory, never going online.
    #[arg(long, global = true)]
    cassette: Option<PathBuf>,
    /// Parent directory for run directories; overrides `run.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    Ingest,
    Rehydrate,
    Score,
    Calibrate,
    Cluster,
    Urls,
    AnnotateExport,
    Report,
    /// Run every stage in order, skipping stages whose receipts are current.
    FullRun,
    /// Serve the annotation API over the exported sessions.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Static annotator UI bundle to serve at `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Print progress, agreement and blind accuracy of the live sessions.
    Results,
    /// Write the offline desk fixture (inputs, labels, cassettes, config).
    Fixture {
        /// Target directory.
        dir: PathBuf,
    },
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::Ingest => Stage::Ingest,
            Command::Rehydrate => Stage::Rehydrate,
            Command::Score => Stage::Score,
            Command::Calibrate => Stage::Calibrate,
            Command::Cluster => Stage::Cluster,
            Command::Urls => Stage::Urls,
            Command::AnnotateExport => Stage::AnnotateExport,
            Command::Report => Stage::Report,
            _ => return None,
        })
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Command::Fixture { dir } = &cli.command {
        let summary = fixture::generate(dir)?;
        println!("{}", serde_json::to_string_pretty(&summary)?);
        println!("config: {}", dir.join(fixture::CONFIG_FILE).display());
        return Ok(());
    }
    let overrides = Overrides {
        cassette: cli.cassette.clone(),
        out_dir: cli.out.clone(),
    };
    let cfg = settings::load(&cli.config, &overrides)?;
    let run = RunDir::open(&cfg)?;
    match &cli.command {
        Command::FullRun => {
            for (stage, outcome) in full_run(&cfg, &run)? {
                let note = match outcome {
                    StageOutcome::Ran => "ran",
                    StageOutcome::Current => "current",
                };
                println!("{stage:<16} {note}");
            }
        }
        Command::Serve { bind, ui } => {
            run.verify(Stage::AnnotateExport, Stage::AnnotateExport)?;
            let live = run.root.join(LIVE_STORE_DIR);
            let export = run.stage_dir(Stage::AnnotateExport).join(STORE_DIR);
            let copied = seed_live_store(&export, &live)?;
            log::info!("seeded {copied} new sessions into {}", live.display());
            let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
            runtime.block_on(adaudit_annotate_server::serve(ServeOptions {
                store_root: live,
                bind: bind.clone(),
                ui_dir: ui.clone(),
            }))?;
        }
        Command::Results => {
            let results = annotation_results(&run.root.join(LIVE_STORE_DIR), &run)?;
            println!("{}", serde_json::to_string_pretty(&results)?);
        }
        command => {
            let stage = command.stage().expect("every other command is a stage");
            let receipt = run_stage(stage, &cfg, &run, &Clients::new(&cfg))?;
            println!("{stage}: {:?}", receipt.rows);
        }
    }
    println!("run directory: {}", run.root.display());
    Ok(())
}
