use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridminer::patterns::PairMode;
use gridminer::pipeline::{
    cmd_concord, cmd_cooc, cmd_diachrony, cmd_ingest, cmd_report, cmd_run, cmd_sim_only, ExecMode,
    PipelineError, RunConfig,
};
use gridminer::terms::{FilterConfig, Period};

/// Pattern mining over sharded annotated corpora on a simulated grid.
#[derive(Debug, Parser)]
#[command(name = "gridminer", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Frequency filter knobs shared by `run` and `report`.
#[derive(Debug, Args)]
struct FilterArgs {
    /// Keep heads with at least this many noun occurrences
    #[arg(long = "min-freq", default_value_t = 5)]
    min_freq: u64,
    /// Keep single-modifier heads whose pair count reaches this
    #[arg(long, default_value_t = 2)]
    exception_min_pair: u64,
    /// Pair-to-noun ratio above which a pair counts as a multiword
    #[arg(long, default_value_t = 0.5)]
    mwe_ratio: f64,
    /// Report only the most frequent heads
    #[arg(long)]
    top_k: Option<usize>,
}

impl FilterArgs {
    fn to_config(&self) -> FilterConfig {
        FilterConfig {
            min_noun_freq: self.min_freq,
            exception_min_pair: self.exception_min_pair,
            mwe_ratio: self.mwe_ratio,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse corpora and write sharded files plus a manifest
    Ingest {
        /// Vertical-format corpus files, or directories of .vrt files
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        /// Target shard count per domain
        #[arg(long, default_value_t = 1)]
        shards: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Full pipeline: shard, schedule extraction jobs, merge, filter, report
    Run {
        /// Vertical-format corpus files, or directories of .vrt files
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        /// Grid description (nodes, organizations, bandwidth, failures)
        #[arg(long)]
        config: PathBuf,
        /// Run seed, recorded for reproducibility
        #[arg(long)]
        seed: u64,
        /// Target shard count per domain
        #[arg(long, default_value_t = 1)]
        shards: usize,
        /// Replicas per shard
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Execute under the simulated clock or on host threads
        #[arg(long, default_value = "sim")]
        mode: ExecMode,
        /// Built-in pair extraction: NA (noun-adjective) or NN (noun-noun)
        #[arg(long, default_value = "NA")]
        pairs: PairMode,
        /// Match rules from this pattern file instead of extracting pairs
        #[arg(long)]
        pattern: Option<PathBuf>,
        #[command(flatten)]
        filter: FilterArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-filter a saved pair table and render the report
    Report {
        /// pairs.tsv from an earlier run
        pairs: PathBuf,
        #[command(flatten)]
        filter: FilterArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Keyword-in-context lines for a lemma over a sharded corpus
    Concord {
        /// Shard manifest from `ingest`
        manifest: PathBuf,
        /// Lemma to look up (case-insensitive)
        lemma: String,
        /// Context tokens on each side
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Positional neighbour co-occurrence counts for a lemma
    Cooc {
        /// Shard manifest from `ingest`
        manifest: PathBuf,
        /// Lemma to look up (case-insensitive)
        lemma: String,
        /// Neighbour window on each side
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Time series of one head-modifier pair over document dates
    Diachrony {
        /// Shard manifest from `ingest`
        manifest: PathBuf,
        /// Head noun lemma
        head: String,
        /// Modifier lemma
        modifier: String,
        /// Bucket size
        #[arg(long, default_value = "month")]
        period: Period,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Schedule jobs over existing shards and write only events.tsv/jobs.tsv
    SimOnly {
        /// Shard manifest from `ingest`
        manifest: PathBuf,
        /// Grid description (nodes, organizations, bandwidth, failures)
        #[arg(long)]
        config: PathBuf,
        /// Replicas per shard
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Ingest { corpus, shards, out } => {
            let summary = cmd_ingest(&corpus, shards, &out)?;
            println!(
                "{} documents, {} tokens, {} shards",
                summary.document_count, summary.token_count, summary.shard_count
            );
            println!("wrote {}", summary.manifest.display());
        }
        Command::Run {
            corpus,
            config,
            seed,
            shards,
            replicas,
            mode,
            pairs,
            pattern,
            filter,
            out,
        } => {
            let run_config = RunConfig {
                corpus_paths: corpus,
                grid_config: config,
                out_dir: out,
                seed,
                shards_per_domain: shards,
                replication: replicas,
                mode,
                pair_mode: pairs,
                pattern_file: pattern,
                filter: filter.to_config(),
                top_k: filter.top_k,
            };
            let summary = cmd_run(&run_config)?;
            println!(
                "{} jobs over {} shards, {} retries, {:.2?}",
                summary.job_count, summary.shard_count, summary.total_retries, summary.elapsed
            );
            if let Some(makespan) = &summary.makespan {
                println!("simulated makespan {makespan}");
            }
            for path in &summary.outputs {
                println!("wrote {}", path.display());
            }
        }
        Command::Report { pairs, filter, out } => {
            for path in cmd_report(&pairs, &filter.to_config(), filter.top_k, &out)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Concord {
            manifest,
            lemma,
            window,
            out,
        } => {
            let path = cmd_concord(&manifest, &lemma, window, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Cooc {
            manifest,
            lemma,
            window,
            out,
        } => {
            let path = cmd_cooc(&manifest, &lemma, window, &out)?;
            println!("wrote {}", path.display());
        }
        Command::Diachrony {
            manifest,
            head,
            modifier,
            period,
            out,
        } => {
            let path = cmd_diachrony(&manifest, &head, &modifier, period, &out)?;
            println!("wrote {}", path.display());
        }
        Command::SimOnly {
            manifest,
            config,
            replicas,
            out,
        } => {
            let summary = cmd_sim_only(&manifest, &config, replicas, &out)?;
            println!(
                "{}/{} jobs completed, {} retries, makespan {}",
                summary.completed, summary.job_count, summary.total_retries, summary.makespan
            );
            for path in &summary.outputs {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(u8::try_from(err.exit_code()).unwrap_or(1))
        }
    }
}
