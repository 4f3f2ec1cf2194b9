use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opencrowd::ConflictPolicy;
use opencrowd_bench::commands::{self, ClusterArgs, CountArgs, FixtureName};
use opencrowd_bench::config::ExperimentConfig;
use opencrowd_bench::experiment::{run_experiment, write_csv};
use opencrowd_bench::io::{emit, to_json, write_atomic};
use opencrowd_bench::report::report_dir;
use opencrowd_bench::CliError;

#[derive(Parser)]
#[command(name = "opencrowd", version, about = "Simulated crowd counting and clustering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Conflicts {
    Fail,
    Vote,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| format!("bad seed {t:?}: {e}")))
        .collect()
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured sweep over seeds.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds; override the config's list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Generate a synthetic image.
    GenImage {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate items with ground-truth hierarchies.
    GenItems {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a built-in scenario as input files.
    Fixture {
        #[arg(value_enum)]
        name: FixtureName,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drill-down count on one image.
    Count {
        #[arg(long)]
        image: PathBuf,
        /// Explicit tree; a midpoint tree is built when absent.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        fanout: u32,
        #[arg(long, default_value_t = 4800)]
        leaf_area: u64,
        #[arg(long, default_value_t = 20)]
        k: u64,
        #[arg(long, default_value_t = 3)]
        answers: usize,
        /// Worker parameters (JSON).
        #[arg(long)]
        workers: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Aggregate clusterings into a consensus hierarchy.
    Cluster {
        /// Worker clusterings (JSON list).
        #[arg(long)]
        answers: Option<PathBuf>,
        /// Item set to simulate workers on.
        #[arg(long)]
        items: Option<PathBuf>,
        #[arg(long)]
        workers: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        workers_per_batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Merge per-batch consensus hierarchies that share a kernel.
    Merge {
        #[arg(long)]
        batches: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, value_enum, default_value = "fail")]
        conflicts: Conflicts,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Recompute a run's summary from its seed reports.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            parallel,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seeds {
                cfg.seeds = s;
            }
            let dir = out
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| CliError::Config("no output directory: pass --out or set \"out\"".into()))?;
            let summary = run_experiment(&cfg, &dir, parallel)?;
            println!(
                "{} seeds, {} failed; summary in {}",
                summary.seeds,
                summary.failed.len(),
                dir.join("summary.json").display()
            );
            if !summary.failed.is_empty() {
                return Ok(ExitCode::from(3));
            }
        }
        Command::GenImage { spec, seed, out } => commands::gen_image(spec.as_deref(), seed, out.as_deref())?,
        Command::GenItems { spec, seed, out } => commands::gen_items(spec.as_deref(), seed, out.as_deref())?,
        Command::Fixture { name, out } => {
            for p in commands::fixture(name, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Count {
            image,
            tree,
            fanout,
            leaf_area,
            k,
            answers,
            workers,
            seed,
            out,
            dot,
        } => {
            commands::count(&CountArgs {
                image: &image,
                tree: tree.as_deref(),
                fanout,
                leaf_area,
                k,
                answers,
                workers: workers.as_deref(),
                seed,
                out: out.as_deref(),
                dot: dot.as_deref(),
            })?;
        }
        Command::Cluster {
            answers,
            items,
            workers,
            workers_per_batch,
            seed,
            out,
            dot,
        } => {
            commands::cluster(&ClusterArgs {
                answers: answers.as_deref(),
                items: items.as_deref(),
                workers: workers.as_deref(),
                workers_per_batch,
                seed,
                out: out.as_deref(),
                dot: dot.as_deref(),
            })?;
        }
        Command::Merge {
            batches,
            plan,
            conflicts,
            out,
            dot,
        } => {
            let policy = match conflicts {
                Conflicts::Fail => ConflictPolicy::Fail,
                Conflicts::Vote => ConflictPolicy::Vote,
            };
            commands::merge(&batches, &plan, policy, out.as_deref(), dot.as_deref())?;
        }
        Command::Report { dir, out, csv } => {
            let (rows, summary) = report_dir(&dir)?;
            if let Some(csv) = csv {
                write_atomic(&csv, &write_csv(&rows)?)?;
            }
            emit(out.as_deref(), &to_json(&summary))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
