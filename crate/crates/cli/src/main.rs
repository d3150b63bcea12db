//! `radpp`: fit and apply radiomics-guided post-processing policies to
//! multi-label tumor segmentations.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use radpp_core::metrics::Region;
use radpp_core::policy::Task;

use commands::CorpusDirs;
use config::RunConfig;
use error::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "radpp", version, about = "Radiomics-guided post-processing of tumor segmentations")]
struct Cli {
    /// Worker threads; never changes any output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Task deciding the evaluated regions: gli-pre, gli-post or ssa.
    #[arg(long, global = true)]
    task: Option<Task>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Corpus root holding images/, predictions/ and labels/.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl CorpusArgs {
    fn dirs(&self) -> Result<CorpusDirs> {
        CorpusDirs::resolve(
            self.corpus.as_deref(),
            self.images.clone(),
            self.predictions.clone(),
            self.labels.clone(),
        )
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded synthetic corpus with an error inventory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cases: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Index of the first generated case.
        #[arg(long, default_value_t = 0)]
        first_index: usize,
        /// Cubic grid edge in voxels.
        #[arg(long)]
        grid: Option<usize>,
        /// Write predictions equal to the ground truth.
        #[arg(long)]
        perfect: bool,
    },
    /// Compute the radiomic signature of every predicted whole tumor.
    ExtractFeatures {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long)]
        bin_count: Option<usize>,
    },
    /// Fit a post-processing policy on predictions with ground truth.
    FitPolicy {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Output directory for the policy and fitting report.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Reuse a feature CSV instead of extracting.
        #[arg(long)]
        features: Option<PathBuf>,
        /// Candidate minimum component sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        pcc_grid: Option<Vec<usize>>,
        /// Candidate relabel cutoffs, comma separated.
        #[arg(long, value_delimiter = ',')]
        cutoff_grid: Option<Vec<f64>>,
    },
    /// Post-process predictions with a fitted policy.
    Apply {
        #[arg(long)]
        policy: PathBuf,
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lesion-wise Dice and NSD of predictions against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', value_parser = parse_region)]
        regions: Option<Vec<Region>>,
        /// NSD tolerances in mm, comma separated.
        #[arg(long, value_delimiter = ',')]
        tolerances: Option<Vec<f64>>,
        /// Dilation steps merging nearby ground-truth components into one lesion.
        #[arg(long)]
        dilation: Option<usize>,
    },
    /// Rank candidates from their metrics CSVs; lower scores are better.
    Rank {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true, num_args = 2..)]
        metrics: Vec<PathBuf>,
    },
}

fn parse_region(s: &str) -> std::result::Result<Region, String> {
    Region::ALL
        .into_iter()
        .find(|r| r.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| format!("unknown region {s:?}"))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(t) = cli.task {
        cfg.task = t;
    }
    match cli.command {
        Command::Synth {
            out,
            cases,
            seed,
            first_index,
            grid,
            perfect,
        } => {
            if let Some(s) = seed {
                cfg.synth.seed = s;
            }
            if let Some(g) = grid {
                cfg.synth.dims = [g; 3];
            }
            if perfect {
                cfg.synth = cfg.synth.without_corruption();
            }
            cfg.validate()?;
            commands::synth(
                &cfg,
                &commands::SynthArgs {
                    out,
                    cases,
                    first_index,
                },
            )
        }
        Command::ExtractFeatures {
            corpus,
            out,
            bin_width,
            bin_count,
        } => {
            if let Some(w) = bin_width {
                cfg.features.bin_width = w;
            }
            if let Some(n) = bin_count {
                cfg.features.bin_count = n;
            }
            cfg.validate()?;
            commands::extract_features(&cfg, &corpus.dirs()?, &out)
        }
        Command::FitPolicy {
            corpus,
            out,
            seed,
            features,
            pcc_grid,
            cutoff_grid,
        } => {
            if let Some(s) = seed {
                cfg.fit.clustering.kmeans.seed = s;
            }
            if let Some(g) = pcc_grid {
                cfg.fit.pcc_grid = g;
            }
            if let Some(g) = cutoff_grid {
                cfg.fit.cutoff_grid = g;
            }
            cfg.validate()?;
            commands::fit(&cfg, &corpus.dirs()?, features.as_deref(), &out)
        }
        Command::Apply { policy, corpus, out } => {
            cfg.validate()?;
            commands::apply(&cfg, &policy, &corpus.dirs()?, &out)
        }
        Command::Evaluate {
            pred,
            gt,
            out,
            regions,
            tolerances,
            dilation,
        } => {
            if regions.is_some() {
                cfg.metrics.regions = regions;
            }
            if let Some(t) = tolerances {
                cfg.metrics.tolerances = t;
            }
            if let Some(d) = dilation {
                cfg.metrics.dilation_iters = d;
            }
            cfg.validate()?;
            commands::evaluate(&cfg, &pred, &gt, &out)
        }
        Command::Rank { out, metrics } => {
            cfg.validate()?;
            commands::rank(&cfg, &metrics, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(error::Kind::Config.exit_code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind.exit_code())
        }
    }
}
