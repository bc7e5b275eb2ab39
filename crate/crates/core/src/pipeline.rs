//! End-to-end runs: corpus files in, report and schedule files out.
//!
//! Each command here is a pure function of its input files and arguments;
//! everything it produces lands under an output directory, so repeating a
//! command with the same inputs rewrites identical bytes. The command-line
//! front end is a thin argument parser over this module.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::aggregate::{
    merge_tables, read_pairs_tsv, render_report, write_pairs_tsv, ReportError,
};
use crate::corpus::{
    load_manifest, parse_vertical, shard_corpus_named, write_shards, AnnotatedToken, CorpusError,
    Document, Shard, VerticalError,
};
use crate::gridsim::{
    events_tsv, jobs_tsv, parse_grid_config, place_replicas, run_parallel, run_simulation,
    Certificate, ExtractionOp, Grid, GridError, Job, JobOutput, JobStatus, SimTime,
};
use crate::patterns::{
    concordance_from, cooccurrences_from, parse_pattern_file, Concordance, PairMode, PairTable,
    PatternError, PatternRule,
};
use crate::terms::{
    diachronic_series, filter_terms, flag_mwe, write_candidates_tsv, write_series_tsv,
    FilterConfig, Period, TermCandidate, TermsError,
};

/// The user all pipeline jobs run as.
const OPERATOR: &str = "operator";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: no such file or directory", path.display())]
    MissingInput { path: PathBuf },
    #[error("{}: {source}", path.display())]
    CorpusFile {
        path: PathBuf,
        #[source]
        source: VerticalError,
    },
    #[error("duplicate document id {doc_id:?} across corpus files")]
    DuplicateDocId { doc_id: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{}: {source}", path.display())]
    GridConfig {
        path: PathBuf,
        #[source]
        source: GridError,
    },
    #[error("{}: {source}", path.display())]
    PatternFile {
        path: PathBuf,
        #[source]
        source: PatternError,
    },
    #[error("{}: {source}", path.display())]
    PairsFile {
        path: PathBuf,
        #[source]
        source: ReportError,
    },
    #[error("no virtual organization is both served by a node and open to the operator")]
    NoServedVo,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Terms(#[from] TermsError),
    #[error("{failed} of {total} jobs did not complete ({statuses}); see jobs.tsv")]
    JobsFailed {
        failed: usize,
        total: usize,
        statuses: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit code: 2 for unusable input (bad flags, missing or
    /// malformed files), 1 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_)
            | PipelineError::MissingInput { .. }
            | PipelineError::CorpusFile { .. }
            | PipelineError::DuplicateDocId { .. }
            | PipelineError::GridConfig { .. }
            | PipelineError::PatternFile { .. }
            | PipelineError::PairsFile { .. }
            | PipelineError::NoServedVo => 2,
            PipelineError::Corpus(source) => match source {
                CorpusError::Io(_) => 1,
                _ => 2,
            },
            PipelineError::Grid(source) => match source {
                GridError::Config { .. } | GridError::ZeroReplication => 2,
                _ => 1,
            },
            PipelineError::Terms(source) => match source {
                TermsError::BadConfig(_) => 2,
                TermsError::NoDatedDocuments => 1,
            },
            PipelineError::JobsFailed { .. } | PipelineError::Io { .. } => 1,
        }
    }
}

/// How extraction jobs execute: under the simulated grid clock, or
/// genuinely concurrent on host threads. Outputs are identical; only
/// sim mode produces a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sim,
    Parallel,
}

impl FromStr for ExecMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sim" => Ok(ExecMode::Sim),
            "parallel" => Ok(ExecMode::Parallel),
            other => Err(format!("unknown mode {other:?}, expected sim or parallel")),
        }
    }
}

/// Everything a full run needs.
///
/// `seed` is recorded for reproducibility bookkeeping: scheduling and
/// extraction are already deterministic, so the seed only matters to
/// callers layering seeded inputs (synthetic corpora, random failure
/// plans) on top.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus_paths: Vec<PathBuf>,
    pub grid_config: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Target shard count per domain group.
    pub shards_per_domain: usize,
    pub replication: usize,
    pub mode: ExecMode,
    /// Built-in extraction when no pattern file is given.
    pub pair_mode: PairMode,
    /// Switches the run to pattern matching: one job per (shard, rule),
    /// output lands in matches.tsv instead of the report files.
    pub pattern_file: Option<PathBuf>,
    pub filter: FilterConfig,
    pub top_k: Option<usize>,
}

impl RunConfig {
    fn validate(&self) -> Result<(), PipelineError> {
        if self.shards_per_domain == 0 {
            return Err(PipelineError::Usage("--shards must be at least 1".into()));
        }
        if self.replication == 0 {
            return Err(PipelineError::Usage("--replicas must be at least 1".into()));
        }
        if self.top_k == Some(0) {
            return Err(PipelineError::Usage("--top-k must be at least 1".into()));
        }
        self.filter.validate()?;
        Ok(())
    }
}

/// What a run produced, for human-readable summaries.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub shard_count: usize,
    pub job_count: usize,
    /// Simulated makespan; absent in parallel mode where time is real.
    pub makespan: Option<SimTime>,
    pub total_retries: u64,
    pub elapsed: Duration,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct IngestSummary {
    pub manifest: PathBuf,
    pub shard_count: usize,
    pub document_count: usize,
    pub token_count: u64,
}

#[derive(Debug, Clone)]
pub struct SimOnlySummary {
    pub makespan: SimTime,
    pub completed: usize,
    pub job_count: usize,
    pub total_retries: u64,
    pub outputs: Vec<PathBuf>,
}

fn read_input(path: &Path) -> Result<String, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::MissingInput {
            path: path.to_path_buf(),
        });
    }
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, PipelineError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

/// Expand corpus arguments: directories contribute their `.vrt` files in
/// name order, plain files pass through.
fn expand_corpus_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found = Vec::new();
            for entry in fs::read_dir(path).map_err(io_err(path))? {
                let candidate = entry.map_err(io_err(path))?.path();
                if candidate.is_file() && candidate.extension().is_some_and(|e| e == "vrt") {
                    found.push(candidate);
                }
            }
            found.sort();
            files.extend(found);
        } else if path.is_file() {
            files.push(path.clone());
        } else {
            return Err(PipelineError::MissingInput { path: path.clone() });
        }
    }
    if files.is_empty() {
        return Err(PipelineError::Usage("no corpus files found".into()));
    }
    Ok(files)
}

/// Parse every corpus file, enforcing document-id uniqueness across files
/// (each file already enforces it internally).
fn load_documents(paths: &[PathBuf]) -> Result<Vec<Document>, PipelineError> {
    let mut docs = Vec::new();
    let mut seen_ids = BTreeSet::new();
    for path in expand_corpus_paths(paths)? {
        let text = read_input(&path)?;
        let parsed = parse_vertical(&text).map_err(|source| PipelineError::CorpusFile {
            path: path.clone(),
            source,
        })?;
        for doc in parsed {
            if !seen_ids.insert(doc.id().to_string()) {
                return Err(PipelineError::DuplicateDocId {
                    doc_id: doc.id().to_string(),
                });
            }
            docs.push(doc);
        }
    }
    Ok(docs)
}

/// Group documents by domain and shard each group separately, so every
/// shard is domain-labeled (the shard id prefix is the domain name).
fn shard_by_domain(docs: Vec<Document>, per_domain: usize) -> Result<Vec<Shard>, PipelineError> {
    let mut groups: BTreeMap<String, Vec<Document>> = BTreeMap::new();
    for doc in docs {
        groups.entry(doc.domain().to_string()).or_default().push(doc);
    }
    let mut shards = Vec::new();
    for (domain, group) in groups {
        shards.extend(shard_corpus_named(group, per_domain, &domain)?);
    }
    Ok(shards)
}

fn load_shards(manifest: &Path) -> Result<Vec<Shard>, PipelineError> {
    if !manifest.exists() {
        return Err(PipelineError::MissingInput {
            path: manifest.to_path_buf(),
        });
    }
    Ok(load_manifest(manifest)?)
}

fn load_grid(path: &Path) -> Result<Grid, PipelineError> {
    let text = read_input(path)?;
    parse_grid_config(&text).map_err(|source| PipelineError::GridConfig {
        path: path.to_path_buf(),
        source,
    })
}

/// Certificate for the standard pipeline user: the alphabetically first
/// organization that some node serves and that admits the operator.
fn operator_certificate(grid: &Grid) -> Result<Certificate, PipelineError> {
    let served: BTreeSet<&str> = grid
        .nodes
        .values()
        .flat_map(|n| n.vos.iter().map(String::as_str))
        .collect();
    let vo = grid
        .vos
        .values()
        .find(|org| served.contains(org.name.as_str()) && org.admits(OPERATOR))
        .map(|org| org.name.clone())
        .ok_or(PipelineError::NoServedVo)?;
    Ok(Certificate {
        user: OPERATOR.to_string(),
        vo,
        valid: true,
    })
}

fn build_jobs(
    shards: &[Shard],
    vo: &str,
    pair_mode: PairMode,
    rules: Option<&[PatternRule]>,
) -> Vec<Job> {
    let mut jobs = Vec::new();
    for shard in shards {
        match rules {
            None => jobs.push(Job {
                job_id: format!("job-{}", shard.shard_id()),
                shard_id: shard.shard_id().to_string(),
                vo: vo.to_string(),
                op: ExtractionOp::Pairs(pair_mode),
            }),
            Some(rules) => {
                for (i, rule) in rules.iter().enumerate() {
                    jobs.push(Job {
                        job_id: format!("job-{}-p{i:02}", shard.shard_id()),
                        shard_id: shard.shard_id().to_string(),
                        vo: vo.to_string(),
                        op: ExtractionOp::Pattern(rule.clone()),
                    });
                }
            }
        }
    }
    jobs
}

/// Rebuild a pair table containing only the filtered candidates, for
/// rendering the post-filter report.
fn table_from_candidates(candidates: &[TermCandidate]) -> PairTable {
    let mut table = PairTable::new();
    let mut seen = BTreeSet::new();
    for c in candidates {
        if seen.insert(c.head.as_str()) {
            table.add_noun_count(&c.head, c.noun_total);
        }
        table.add_pair_count(&c.head, &c.modifier, c.pair_count);
    }
    table
}

/// Parse, shard and write a corpus; returns the manifest location.
pub fn cmd_ingest(
    corpus_paths: &[PathBuf],
    shards_per_domain: usize,
    out_dir: &Path,
) -> Result<IngestSummary, PipelineError> {
    if shards_per_domain == 0 {
        return Err(PipelineError::Usage("--shards must be at least 1".into()));
    }
    let docs = load_documents(corpus_paths)?;
    let document_count = docs.len();
    let shards = shard_by_domain(docs, shards_per_domain)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let manifest = write_shards(&shards, out_dir)?;
    Ok(IngestSummary {
        manifest,
        shard_count: shards.len(),
        document_count,
        token_count: shards.iter().map(Shard::token_count).sum(),
    })
}

/// The full pipeline: shard, place replicas, schedule extraction jobs,
/// merge, filter, report.
///
/// Writes into the output directory: `pairs.tsv`, `candidates.tsv` and
/// `report.txt` for pair runs, `matches.tsv` for pattern runs, plus
/// `events.tsv` and `jobs.tsv` in sim mode.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary, PipelineError> {
    let started = Instant::now();
    config.validate()?;
    let docs = load_documents(&config.corpus_paths)?;
    let shards = shard_by_domain(docs, config.shards_per_domain)?;
    let grid = load_grid(&config.grid_config)?;
    let cert = operator_certificate(&grid)?;
    let placement = place_replicas(&shards, &grid, config.replication)?;
    let rules = match &config.pattern_file {
        Some(path) => {
            let parsed = parse_pattern_file(&read_input(path)?).map_err(|source| {
                PipelineError::PatternFile {
                    path: path.clone(),
                    source,
                }
            })?;
            if parsed.is_empty() {
                return Err(PipelineError::Usage(format!(
                    "{}: pattern file contains no rules",
                    path.display()
                )));
            }
            Some(parsed)
        }
        None => None,
    };
    let jobs = build_jobs(&shards, &cert.vo, config.pair_mode, rules.as_deref());
    let shard_map: BTreeMap<String, Shard> = shards
        .iter()
        .map(|s| (s.shard_id().to_string(), s.clone()))
        .collect();
    fs::create_dir_all(&config.out_dir).map_err(io_err(&config.out_dir))?;

    let mut outputs = Vec::new();
    let (job_outputs, makespan, total_retries) = match config.mode {
        ExecMode::Sim => {
            let (report, outs) = run_simulation(&jobs, &grid, &placement, &shard_map, &cert)?;
            outputs.push(write_output(&config.out_dir, "events.tsv", &events_tsv(&report))?);
            outputs.push(write_output(&config.out_dir, "jobs.tsv", &jobs_tsv(&report))?);
            if !report.all_completed() {
                let failed: Vec<&crate::gridsim::JobRecord> = report
                    .jobs
                    .iter()
                    .filter(|j| j.status != JobStatus::Completed)
                    .collect();
                let statuses: BTreeSet<&str> =
                    failed.iter().map(|j| j.status.as_str()).collect();
                return Err(PipelineError::JobsFailed {
                    failed: failed.len(),
                    total: report.jobs.len(),
                    statuses: statuses.into_iter().collect::<Vec<_>>().join(", "),
                });
            }
            (outs, Some(report.makespan.clone()), report.total_retries)
        }
        ExecMode::Parallel => (run_parallel(&jobs, &shard_map)?, None, 0),
    };

    let by_id: BTreeMap<&str, &Job> = jobs.iter().map(|j| (j.job_id.as_str(), j)).collect();
    let mut tables = Vec::new();
    let mut match_lines = String::new();
    for (job_id, output) in &job_outputs {
        match output {
            JobOutput::Pairs(table) => tables.push(table),
            JobOutput::Matches(spans) => {
                let job = by_id[job_id.as_str()];
                let rule_name = match &job.op {
                    ExtractionOp::Pattern(rule) => rule.name(),
                    ExtractionOp::Pairs(mode) => mode.as_str(),
                };
                for span in spans {
                    writeln!(
                        match_lines,
                        "{}\t{}\t{}\t{}\t{}\t{}",
                        rule_name,
                        span.doc_id,
                        span.sentence_index,
                        span.token_start,
                        span.token_end,
                        span.lemmas.join(" ")
                    )
                    .expect("string write");
                }
            }
        }
    }

    if rules.is_some() {
        outputs.push(write_output(&config.out_dir, "matches.tsv", &match_lines)?);
    } else {
        let merged = merge_tables(tables.into_iter());
        outputs.push(write_output(&config.out_dir, "pairs.tsv", &write_pairs_tsv(&merged))?);
        let mut candidates = filter_terms(&merged, &config.filter)?;
        flag_mwe(&mut candidates, config.filter.mwe_ratio);
        outputs.push(write_output(
            &config.out_dir,
            "candidates.tsv",
            &write_candidates_tsv(&candidates),
        )?);
        let retained = table_from_candidates(&candidates);
        outputs.push(write_output(
            &config.out_dir,
            "report.txt",
            &render_report(&retained, config.top_k),
        )?);
    }

    Ok(RunSummary {
        shard_count: shards.len(),
        job_count: jobs.len(),
        makespan,
        total_retries,
        elapsed: started.elapsed(),
        outputs,
    })
}

/// Re-filter and re-render a report from a saved `pairs.tsv` table.
pub fn cmd_report(
    pairs_path: &Path,
    filter: &FilterConfig,
    top_k: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    if top_k == Some(0) {
        return Err(PipelineError::Usage("--top-k must be at least 1".into()));
    }
    let table =
        read_pairs_tsv(&read_input(pairs_path)?).map_err(|source| PipelineError::PairsFile {
            path: pairs_path.to_path_buf(),
            source,
        })?;
    let mut candidates = filter_terms(&table, filter)?;
    flag_mwe(&mut candidates, filter.mwe_ratio);
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let retained = table_from_candidates(&candidates);
    Ok(vec![
        write_output(out_dir, "candidates.tsv", &write_candidates_tsv(&candidates))?,
        write_output(out_dir, "report.txt", &render_report(&retained, top_k))?,
    ])
}

/// Concordance of a lemma over every shard in a manifest, in manifest
/// order.
pub fn concordance_over(shards: &[Shard], lemma: &str, window: usize) -> Concordance {
    Concordance {
        keyword: lemma.to_lowercase(),
        window,
        lines: concordance_from(
            shards.iter().flat_map(|s| s.sentence_contexts()),
            lemma,
            window,
        ),
    }
}

fn surfaces(tokens: &[AnnotatedToken]) -> String {
    tokens
        .iter()
        .map(AnnotatedToken::surface)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One line per occurrence:
/// `doc<TAB>sentence<TAB>offset<TAB>left<TAB>keyword<TAB>right`.
pub fn concordance_tsv(conc: &Concordance) -> String {
    let mut out = String::new();
    for line in &conc.lines {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            line.doc_id,
            line.sentence_index,
            line.token_offset,
            surfaces(&line.left),
            line.matched.surface(),
            surfaces(&line.right)
        )
        .expect("string write");
    }
    out
}

/// `relative_position<TAB>lemma<TAB>count` lines in key order.
pub fn cooccurrence_tsv(counts: &BTreeMap<(i64, String), u64>) -> String {
    let mut out = String::new();
    for ((rel, lemma), count) in counts {
        writeln!(out, "{rel}\t{lemma}\t{count}").expect("string write");
    }
    out
}

/// Write `concordance.tsv` for a lemma over a sharded corpus.
pub fn cmd_concord(
    manifest: &Path,
    lemma: &str,
    window: usize,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    if window == 0 {
        return Err(PipelineError::Usage("--window must be at least 1".into()));
    }
    let shards = load_shards(manifest)?;
    let conc = concordance_over(&shards, lemma, window);
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_output(out_dir, "concordance.tsv", &concordance_tsv(&conc))
}

/// Write `cooccurrences.tsv` for a lemma over a sharded corpus.
pub fn cmd_cooc(
    manifest: &Path,
    lemma: &str,
    window: usize,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    if window == 0 {
        return Err(PipelineError::Usage("--window must be at least 1".into()));
    }
    let shards = load_shards(manifest)?;
    let counts = cooccurrences_from(
        shards.iter().flat_map(|s| s.sentence_contexts()),
        lemma,
        window,
    );
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_output(out_dir, "cooccurrences.tsv", &cooccurrence_tsv(&counts))
}

/// Write `series.tsv`: bucketed counts of one pair over document dates.
pub fn cmd_diachrony(
    manifest: &Path,
    head: &str,
    modifier: &str,
    period: Period,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    let shards = load_shards(manifest)?;
    let series = diachronic_series(&shards, head, modifier, period)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_output(out_dir, "series.tsv", &write_series_tsv(&series))
}

/// Schedule pair-extraction jobs over an already-sharded corpus and write
/// only the schedule (`events.tsv`, `jobs.tsv`), no linguistic outputs.
/// Unschedulable jobs show up in the files, not as an error.
pub fn cmd_sim_only(
    manifest: &Path,
    grid_config: &Path,
    replication: usize,
    out_dir: &Path,
) -> Result<SimOnlySummary, PipelineError> {
    if replication == 0 {
        return Err(PipelineError::Usage("--replicas must be at least 1".into()));
    }
    let shards = load_shards(manifest)?;
    let grid = load_grid(grid_config)?;
    let cert = operator_certificate(&grid)?;
    let placement = place_replicas(&shards, &grid, replication)?;
    let jobs = build_jobs(&shards, &cert.vo, PairMode::NounAdj, None);
    let shard_map: BTreeMap<String, Shard> = shards
        .iter()
        .map(|s| (s.shard_id().to_string(), s.clone()))
        .collect();
    let (report, _) = run_simulation(&jobs, &grid, &placement, &shard_map, &cert)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let outputs = vec![
        write_output(out_dir, "events.tsv", &events_tsv(&report))?,
        write_output(out_dir, "jobs.tsv", &jobs_tsv(&report))?,
    ];
    Ok(SimOnlySummary {
        makespan: report.makespan.clone(),
        completed: report
            .jobs
            .iter()
            .filter(|j| j.status == JobStatus::Completed)
            .count(),
        job_count: report.jobs.len(),
        total_retries: report.total_retries,
        outputs,
    })
}
