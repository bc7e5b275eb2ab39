//! Python extension module: the corpus, extraction, aggregation, and grid
//! simulation APIs, importable as `gridminer_py`.
//!
//! The wrappers hold owned copies of the core types, so Python objects are
//! independent values: sharding a corpus or merging tables never aliases
//! Rust-side state across objects.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gridminer::aggregate::{merge_into, read_pairs_tsv, render_report, write_pairs_tsv};
use gridminer::corpus::{
    generate_corpus, parse_vertical, shard_corpus, shard_corpus_named, write_vertical,
};
use gridminer::corpus::{Document, GeneratorConfig, Shard};
use gridminer::gridsim::{
    parse_grid_config, place_replicas, run_simulation, Certificate, ExtractionOp, Job, JobOutput,
};
use gridminer::patterns::{
    concordance, cooccurrences, extract_pairs, match_pattern, parse_pattern, MatchSpan, PairMode,
    PairTable,
};
use gridminer::terms::{diachronic_series, filter_terms, flag_mwe, FilterConfig, Period};

/// (doc_id, sentence_index, token_start, token_end, lemmas)
type MatchTuple = (String, usize, usize, usize, Vec<String>);
/// (head, modifier, pair_count, noun_total, comma-joined flags)
type CandidateTuple = (String, String, u64, u64, String);

fn value_err(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

fn parse_mode(mode: &str) -> PyResult<PairMode> {
    mode.parse::<PairMode>().map_err(PyValueError::new_err)
}

fn span_tuple(span: &MatchSpan) -> MatchTuple {
    (
        span.doc_id.clone(),
        span.sentence_index,
        span.token_start,
        span.token_end,
        span.lemmas.clone(),
    )
}

fn surfaces(tokens: &[gridminer::corpus::AnnotatedToken]) -> String {
    tokens
        .iter()
        .map(|t| t.surface())
        .collect::<Vec<_>>()
        .join(" ")
}

/// An annotated corpus: an ordered list of documents.
#[pyclass(name = "Corpus")]
struct PyCorpus {
    documents: Vec<Document>,
}

#[pymethods]
impl PyCorpus {
    /// Parse the vertical text format (`#doc` headers, one
    /// `surface<TAB>lemma<TAB>POS` line per token, blank line between
    /// sentences).
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let documents = parse_vertical(text).map_err(value_err)?;
        Ok(PyCorpus { documents })
    }

    #[getter]
    fn doc_count(&self) -> usize {
        self.documents.len()
    }

    #[getter]
    fn token_count(&self) -> u64 {
        self.documents.iter().map(Document::token_count).sum()
    }

    /// Serialize back to the vertical text format.
    fn to_vertical(&self) -> String {
        write_vertical(&self.documents)
    }

    /// Split into at most `count` shards balanced by token count,
    /// ignoring domains (mixed shards are labeled `mixed`).
    fn shard(&self, count: usize) -> PyResult<Vec<PyShard>> {
        let shards = shard_corpus(self.documents.clone(), count).map_err(value_err)?;
        Ok(shards.into_iter().map(|inner| PyShard { inner }).collect())
    }

    /// Group documents by domain and shard each group separately (the
    /// pipeline's sharding): every shard is domain-pure and its id is
    /// prefixed with the domain name.
    #[pyo3(signature = (per_domain = 1))]
    fn shard_by_domain(&self, per_domain: usize) -> PyResult<Vec<PyShard>> {
        let mut groups: BTreeMap<String, Vec<Document>> = BTreeMap::new();
        for doc in &self.documents {
            groups
                .entry(doc.domain().to_string())
                .or_default()
                .push(doc.clone());
        }
        let mut shards = Vec::new();
        for (domain, group) in groups {
            let named = shard_corpus_named(group, per_domain, &domain).map_err(value_err)?;
            shards.extend(named.into_iter().map(|inner| PyShard { inner }));
        }
        Ok(shards)
    }

    fn __len__(&self) -> usize {
        self.documents.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus({} docs, {} tokens)",
            self.documents.len(),
            self.token_count()
        )
    }
}

/// One shard: a domain-pure slice of the corpus, the unit of replica
/// placement and job scheduling.
#[pyclass(name = "Shard")]
struct PyShard {
    inner: Shard,
}

#[pymethods]
impl PyShard {
    #[getter]
    fn shard_id(&self) -> &str {
        self.inner.shard_id()
    }

    #[getter]
    fn domain(&self) -> &str {
        self.inner.domain()
    }

    #[getter]
    fn token_count(&self) -> u64 {
        self.inner.token_count()
    }

    #[getter]
    fn byte_size(&self) -> u64 {
        self.inner.byte_size()
    }

    /// Count nouns and adjacent pairs; `mode` is "NA" (noun-adjective)
    /// or "NN" (noun-noun).
    #[pyo3(signature = (mode = "NA"))]
    fn extract_pairs(&self, mode: &str) -> PyResult<PyPairTable> {
        Ok(PyPairTable {
            inner: extract_pairs(&self.inner, parse_mode(mode)?),
        })
    }

    /// Run one pattern rule (e.g. `"NOUN GAP{0,2} ADJ"`) and return every
    /// span as `(doc_id, sentence_index, token_start, token_end, lemmas)`.
    fn match_pattern(&self, rule: &str) -> PyResult<Vec<MatchTuple>> {
        let rule = parse_pattern(rule).map_err(value_err)?;
        Ok(match_pattern(&self.inner, &rule)
            .iter()
            .map(span_tuple)
            .collect())
    }

    /// Keyword-in-context lines for a lemma, as `(doc_id, sentence_index,
    /// token_offset, left, keyword, right)` with space-joined context
    /// clipped at sentence boundaries.
    #[pyo3(signature = (lemma, window = 5))]
    fn concordance(
        &self,
        lemma: &str,
        window: usize,
    ) -> Vec<(String, usize, usize, String, String, String)> {
        concordance(&self.inner, lemma, window)
            .lines
            .iter()
            .map(|line| {
                (
                    line.doc_id.clone(),
                    line.sentence_index,
                    line.token_offset,
                    surfaces(&line.left),
                    line.matched.surface().to_string(),
                    surfaces(&line.right),
                )
            })
            .collect()
    }

    /// Positional co-occurrence profile around a lemma, as
    /// `(relative_position, lemma, count)` triples sorted by position
    /// then lemma.
    #[pyo3(signature = (lemma, window = 5))]
    fn cooccurrences(&self, lemma: &str, window: usize) -> Vec<(i64, String, u64)> {
        cooccurrences(&self.inner, lemma, window)
            .into_iter()
            .map(|((rel, lemma), count)| (rel, lemma, count))
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Shard({:?}, {} tokens)",
            self.inner.shard_id(),
            self.inner.token_count()
        )
    }
}

/// Head-noun totals and adjacent-pair counts; merging tables is
/// order-insensitive, so per-shard tables combine into the whole-corpus
/// result.
#[pyclass(name = "PairTable")]
struct PyPairTable {
    inner: PairTable,
}

#[pymethods]
impl PyPairTable {
    #[new]
    fn new() -> Self {
        PyPairTable {
            inner: PairTable::new(),
        }
    }

    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        Ok(PyPairTable {
            inner: read_pairs_tsv(text).map_err(value_err)?,
        })
    }

    #[pyo3(signature = (lemma, count = 1))]
    fn add_noun(&mut self, lemma: &str, count: u64) {
        self.inner.add_noun_count(lemma, count);
    }

    #[pyo3(signature = (head, modifier, count = 1))]
    fn add_pair(&mut self, head: &str, modifier: &str, count: u64) {
        self.inner.add_pair_count(head, modifier, count);
    }

    /// Total occurrences of a head noun (0 when absent).
    fn noun_total(&self, head: &str) -> u64 {
        self.inner.get(head).map_or(0, |e| e.noun_total())
    }

    /// Count of one adjacent pair (0 when absent).
    fn pair_count(&self, head: &str, modifier: &str) -> u64 {
        self.inner
            .get(head)
            .and_then(|e| e.modifiers().get(modifier).copied())
            .unwrap_or(0)
    }

    /// Head lemmas in ascending order.
    fn heads(&self) -> Vec<String> {
        self.inner.iter().map(|(head, _)| head.to_string()).collect()
    }

    /// `(modifier, count)` pairs of one head in ascending modifier order.
    fn modifiers(&self, head: &str) -> Vec<(String, u64)> {
        self.inner.get(head).map_or_else(Vec::new, |entry| {
            entry
                .modifiers()
                .iter()
                .map(|(m, c)| (m.clone(), *c))
                .collect()
        })
    }

    /// Add another table's counts into this one.
    fn merge(&mut self, other: PyRef<'_, PyPairTable>) {
        merge_into(&mut self.inner, &other.inner);
    }

    /// Render the frequency report: one line per head, noun totals
    /// descending, `NNNNN<TAB>[HEAD]<TAB>MOD c, ...`; `top_k` keeps only
    /// the most frequent heads.
    #[pyo3(signature = (top_k = None))]
    fn render_report(&self, top_k: Option<usize>) -> String {
        render_report(&self.inner, top_k)
    }

    fn to_tsv(&self) -> String {
        write_pairs_tsv(&self.inner)
    }

    /// Apply the frequency filter and multiword flagging; returns
    /// `(head, modifier, pair_count, noun_total, flags)` tuples in
    /// retention order, flags comma-joined (e.g. `"MWE,EXCEPTION_KEPT"`).
    #[pyo3(signature = (min_noun_freq = 5, exception_min_pair = 2, mwe_ratio = 0.5))]
    fn filter(
        &self,
        min_noun_freq: u64,
        exception_min_pair: u64,
        mwe_ratio: f64,
    ) -> PyResult<Vec<CandidateTuple>> {
        let config = FilterConfig {
            min_noun_freq,
            exception_min_pair,
            mwe_ratio,
        };
        let mut candidates = filter_terms(&self.inner, &config).map_err(value_err)?;
        flag_mwe(&mut candidates, config.mwe_ratio);
        Ok(candidates
            .into_iter()
            .map(|c| {
                let flags = c.flags_string();
                (c.head, c.modifier, c.pair_count, c.noun_total, flags)
            })
            .collect())
    }

    #[getter]
    fn total_nouns(&self) -> u64 {
        self.inner.total_nouns()
    }

    #[getter]
    fn total_pairs(&self) -> u64 {
        self.inner.total_pairs()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "PairTable({} heads, {} pairs)",
            self.inner.len(),
            self.inner.total_pairs()
        )
    }
}

/// Outcome of a simulated grid run: the schedule's event log and, for
/// pair jobs, the merged table.
#[pyclass(name = "SimResult")]
struct PySimResult {
    makespan: String,
    completed: bool,
    total_retries: u64,
    violations: u64,
    events: Vec<(String, u64, String, String)>,
    jobs: Vec<(String, String, String, Option<String>, u64, bool)>,
    table: Option<PairTable>,
    matches: Vec<MatchTuple>,
}

#[pymethods]
impl PySimResult {
    /// Exact simulated makespan as a rational string, e.g. `"46/15"`.
    #[getter]
    fn makespan(&self) -> &str {
        &self.makespan
    }

    #[getter]
    fn completed(&self) -> bool {
        self.completed
    }

    #[getter]
    fn total_retries(&self) -> u64 {
        self.total_retries
    }

    #[getter]
    fn violations(&self) -> u64 {
        self.violations
    }

    /// Event log as `(time, seq, kind, details)` tuples in clock order.
    #[getter]
    fn events(&self) -> Vec<(String, u64, String, String)> {
        self.events.clone()
    }

    /// Per-job records as `(job_id, shard_id, status, node, retries,
    /// transferred)` in submission order.
    #[getter]
    fn jobs(&self) -> Vec<(String, String, String, Option<String>, u64, bool)> {
        self.jobs.clone()
    }

    /// Merged pair table (None for pattern runs).
    fn pair_table(&self) -> Option<PyPairTable> {
        self.table.as_ref().map(|inner| PyPairTable {
            inner: inner.clone(),
        })
    }

    /// Merged pattern matches (empty for pair runs).
    fn matches(&self) -> Vec<MatchTuple> {
        self.matches.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SimResult(makespan={}, completed={}, retries={}, violations={})",
            self.makespan, self.completed, self.total_retries, self.violations
        )
    }
}

/// Generate a corpus with planted pairs; returns
/// `(corpus, planted_noun_adj, planted_noun_noun)` where the planted
/// tables are the exact ground truth extraction must reproduce.
#[pyfunction]
#[pyo3(signature = (seed, documents = 8, domains = None, start_date = None))]
fn generate(
    seed: u64,
    documents: usize,
    domains: Option<Vec<String>>,
    start_date: Option<&str>,
) -> PyResult<(PyCorpus, PyPairTable, PyPairTable)> {
    let mut config = GeneratorConfig {
        documents,
        ..GeneratorConfig::default()
    };
    if let Some(domains) = domains {
        config.domains = domains;
    }
    if let Some(text) = start_date {
        let date = chrono::NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(value_err)?;
        config.start_date = Some(date);
    }
    let generated = generate_corpus(seed, &config).map_err(value_err)?;
    Ok((
        PyCorpus {
            documents: generated.documents,
        },
        PyPairTable {
            inner: generated.planted_na,
        },
        PyPairTable {
            inner: generated.planted_nn,
        },
    ))
}

/// Frequency of one adjacent pair over time, bucketed by `"month"` or
/// `"year"`; returns `(bucket_start, count)` with ISO dates, spanning the
/// full dated range with zeros.
#[pyfunction]
#[pyo3(signature = (shards, head, modifier, period = "month"))]
fn series(
    shards: Vec<PyRef<'_, PyShard>>,
    head: &str,
    modifier: &str,
    period: &str,
) -> PyResult<Vec<(String, u64)>> {
    let period = period.parse::<Period>().map_err(PyValueError::new_err)?;
    let shards: Vec<Shard> = shards.iter().map(|s| s.inner.clone()).collect();
    let series = diachronic_series(&shards, head, modifier, period).map_err(value_err)?;
    Ok(series
        .into_iter()
        .map(|(date, count)| (date.format("%Y-%m-%d").to_string(), count))
        .collect())
}

/// Schedule one extraction job per shard on a simulated grid and merge
/// the outputs.
///
/// `grid_config` is the textual grid description (`vo`/`node`/`bandwidth`/
/// `fail` lines). Jobs run under `user`'s certificate for `vo` (default:
/// the grid's first organization). With `pattern` set the jobs run that
/// rule instead of pair extraction.
#[pyfunction]
#[pyo3(signature = (shards, grid_config, replicas = 1, mode = "NA", pattern = None, user = "operator", vo = None))]
fn run_grid(
    shards: Vec<PyRef<'_, PyShard>>,
    grid_config: &str,
    replicas: usize,
    mode: &str,
    pattern: Option<&str>,
    user: &str,
    vo: Option<&str>,
) -> PyResult<PySimResult> {
    let grid = parse_grid_config(grid_config).map_err(value_err)?;
    let vo = match vo {
        Some(name) => name.to_string(),
        None => grid
            .vos
            .keys()
            .next()
            .ok_or_else(|| PyValueError::new_err("grid config declares no organization"))?
            .clone(),
    };
    let op = match pattern {
        Some(rule) => ExtractionOp::Pattern(parse_pattern(rule).map_err(value_err)?),
        None => ExtractionOp::Pairs(parse_mode(mode)?),
    };

    let shards: Vec<Shard> = shards.iter().map(|s| s.inner.clone()).collect();
    let placement = place_replicas(&shards, &grid, replicas).map_err(value_err)?;
    let jobs: Vec<Job> = shards
        .iter()
        .map(|shard| Job {
            job_id: format!("job-{}", shard.shard_id()),
            shard_id: shard.shard_id().to_string(),
            vo: vo.clone(),
            op: op.clone(),
        })
        .collect();
    let shard_map: BTreeMap<String, Shard> = shards
        .iter()
        .map(|s| (s.shard_id().to_string(), s.clone()))
        .collect();
    let cert = Certificate {
        user: user.to_string(),
        vo,
        valid: true,
    };

    let (report, outputs) =
        run_simulation(&jobs, &grid, &placement, &shard_map, &cert).map_err(value_err)?;

    let mut table: Option<PairTable> = None;
    let mut matches: Vec<MatchTuple> = Vec::new();
    for (_, output) in &outputs {
        match output {
            JobOutput::Pairs(partial) => {
                merge_into(table.get_or_insert_with(PairTable::new), partial);
            }
            JobOutput::Matches(spans) => matches.extend(spans.iter().map(span_tuple)),
        }
    }

    Ok(PySimResult {
        makespan: report.makespan.to_string(),
        completed: report.all_completed(),
        total_retries: report.total_retries,
        violations: report.violations,
        events: report
            .events
            .iter()
            .map(|e| {
                (
                    e.time.to_string(),
                    e.seq,
                    e.kind.as_str().to_string(),
                    e.details.clone(),
                )
            })
            .collect(),
        jobs: report
            .jobs
            .iter()
            .map(|j| {
                (
                    j.job_id.clone(),
                    j.shard_id.clone(),
                    j.status.as_str().to_string(),
                    j.node.clone(),
                    j.retries,
                    j.transferred,
                )
            })
            .collect(),
        table,
        matches,
    })
}

#[pymodule]
fn gridminer_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyShard>()?;
    m.add_class::<PyPairTable>()?;
    m.add_class::<PySimResult>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(series, m)?)?;
    m.add_function(wrap_pyfunction!(run_grid, m)?)?;
    Ok(())
}
