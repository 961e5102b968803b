//! `sen` — signed ego network pipeline.
//!
//! Seven file-based stages: ingest, filter, sign, egonet, triads, metrics,
//! report. Each stage reads artifacts produced by earlier stages, writes
//! its own artifacts plus a manifest with input/output hashes, and is
//! byte-deterministic for fixed inputs, configuration and seed.

mod manifest;
mod stages;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use sen_core::egonet::ClusterOptions;
use sen_core::ingest::FilterRules;
use sen_core::signing::GOLDEN_RATIO_PERCENT;
use sen_core::triads::{CollapseRule, DEFAULT_SHUFFLES};

use stages::StageError;

#[derive(Parser)]
#[command(
    name = "sen",
    version,
    about = "Build and analyse signed ego networks from directed interaction logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse JSON Lines interaction logs into per-ego timelines.
    Ingest {
        /// Input log file; repeatable.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Drop egos that tweet too little, too briefly or too irregularly.
    Filter {
        #[arg(long)]
        timelines: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Minimum total tweets per ego.
        #[arg(long, default_value_t = 2000)]
        min_tweets: u64,
        /// Minimum timeline span in months.
        #[arg(long, default_value_t = 6)]
        min_span_months: u32,
        /// A month is regular when it holds one tweet per this many days.
        #[arg(long, default_value_t = 3)]
        interval_days: u32,
        /// Strict fraction of months that must be regular.
        #[arg(long, default_value_t = 0.5)]
        month_fraction: f64,
    },
    /// Label interaction sentiment and sign directed relationships.
    Sign {
        #[arg(long)]
        timelines: PathBuf,
        /// Valence lexicon TSV (entries, #boosters, #negators sections).
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Negative-interaction percentage above which a relationship is
        /// negative (golden interaction ratio).
        #[arg(long, default_value_t = GOLDEN_RATIO_PERCENT)]
        threshold: u64,
    },
    /// Cluster contact frequencies into concentric circles per ego.
    Egonet {
        #[arg(long)]
        timelines: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Fixed mean-shift bandwidth; estimated per ego when omitted.
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Pairwise-distance quantile used to estimate the bandwidth.
        #[arg(long, default_value_t = 0.30)]
        bandwidth_quantile: f64,
        /// Cluster raw frequencies instead of their logarithms.
        #[arg(long)]
        linear_space: bool,
        /// Minimum interactions per year for an alter to count as active.
        #[arg(long, default_value_t = 1.0)]
        min_active_freq: f64,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Triad census with the sign-shuffled null model and surprise.
    Triads {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Directed-to-undirected sign collapse: any-negative or
        /// both-negative.
        #[arg(long, default_value = "any-negative")]
        collapse: CollapseRule,
        #[arg(long, default_value_t = DEFAULT_SHUFFLES)]
        shuffles: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = GOLDEN_RATIO_PERCENT)]
        threshold: u64,
    },
    /// Per-ego negativity vectors (l1, l2, l3) over active networks.
    Metrics {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        egonets: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = GOLDEN_RATIO_PERCENT)]
        threshold: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Dataset-level tables: negativity, circles, composition, bins,
    /// correlations.
    Report {
        #[arg(long)]
        timelines: PathBuf,
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long)]
        egonets: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated table list, or `all` (skips tables the data
        /// cannot support).
        #[arg(long, default_value = "all")]
        tables: String,
        #[arg(long, default_value_t = GOLDEN_RATIO_PERCENT)]
        threshold: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

fn run(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Ingest { input, out_dir } => stages::run_ingest(&input, &out_dir),
        Command::Filter {
            timelines,
            out_dir,
            min_tweets,
            min_span_months,
            interval_days,
            month_fraction,
        } => stages::run_filter(
            &timelines,
            &out_dir,
            FilterRules {
                min_tweets,
                min_span_months,
                regularity_interval_days: interval_days,
                regularity_month_fraction: month_fraction,
            },
        ),
        Command::Sign { timelines, lexicon, out_dir, threshold } => {
            stages::run_sign(&timelines, &lexicon, &out_dir, threshold)
        }
        Command::Egonet {
            timelines,
            profiles,
            out_dir,
            bandwidth,
            bandwidth_quantile,
            linear_space,
            min_active_freq,
            jobs,
        } => stages::run_egonet(
            &timelines,
            &profiles,
            &out_dir,
            ClusterOptions { bandwidth, bandwidth_quantile, log_space: !linear_space },
            min_active_freq,
            jobs,
        ),
        Command::Triads { profiles, out_dir, collapse, shuffles, seed, threshold } => {
            stages::run_triads(&profiles, &out_dir, collapse, shuffles, seed, threshold)
        }
        Command::Metrics { profiles, egonets, out_dir, threshold, jobs } => {
            stages::run_metrics(&profiles, &egonets, &out_dir, threshold, jobs)
        }
        Command::Report { timelines, profiles, egonets, out_dir, tables, threshold, jobs } => {
            stages::run_report(&timelines, &profiles, &egonets, &out_dir, &tables, threshold, jobs)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not configuration errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("sen: {e}");
        std::process::exit(e.exit_code());
    }
}
