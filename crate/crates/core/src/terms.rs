//! Turning raw pair tables into term candidates: frequency filtering with
//! a single-modifier exception, multiword-expression flagging, and
//! diachronic frequency series for a chosen pair.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::{Datelike, Months, NaiveDate};
use thiserror::Error;

use crate::corpus::{PosTag, Shard};
use crate::patterns::PairTable;

#[derive(Debug, Error)]
pub enum TermsError {
    #[error("no dated documents in the corpus")]
    NoDatedDocuments,
    #[error("filter config: {0}")]
    BadConfig(String),
}

/// Thresholds for candidate selection.
///
/// A head noun is retained when its total frequency reaches
/// `min_noun_freq`, or by exception when it has exactly one distinct
/// modifier whose pair count reaches `exception_min_pair` (a rare noun
/// that almost always occurs with the same modifier is evidence of a
/// fixed expression, not noise). `mwe_ratio` is the pair-to-total ratio
/// at which a pair is flagged as a multiword expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub min_noun_freq: u64,
    pub exception_min_pair: u64,
    pub mwe_ratio: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_noun_freq: 5,
            exception_min_pair: 2,
            mwe_ratio: 0.5,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), TermsError> {
        if self.min_noun_freq < 1 {
            return Err(TermsError::BadConfig(
                "min_noun_freq must be at least 1".into(),
            ));
        }
        if self.exception_min_pair < 1 {
            return Err(TermsError::BadConfig(
                "exception_min_pair must be at least 1".into(),
            ));
        }
        if !self.mwe_ratio.is_finite() || self.mwe_ratio <= 0.0 || self.mwe_ratio > 1.0 {
            return Err(TermsError::BadConfig(format!(
                "mwe_ratio must lie in (0, 1], got {}",
                self.mwe_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermFlag {
    Mwe,
    HyponymOfHead,
    ExceptionKept,
}

impl TermFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            TermFlag::Mwe => "MWE",
            TermFlag::HyponymOfHead => "HYPONYM_OF_HEAD",
            TermFlag::ExceptionKept => "EXCEPTION_KEPT",
        }
    }
}

/// One retained head-modifier pair with its counts and flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermCandidate {
    pub head: String,
    pub modifier: String,
    pub pair_count: u64,
    pub noun_total: u64,
    pub flags: BTreeSet<TermFlag>,
}

impl TermCandidate {
    pub fn flags_string(&self) -> String {
        self.flags
            .iter()
            .map(|f| f.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }
}

fn exception_applies(entry: &crate::patterns::HeadEntry, exception_min_pair: u64) -> bool {
    entry.modifiers().len() == 1 && entry.pair_total() >= exception_min_pair
}

/// Select candidates from a pair table.
///
/// A head survives when `noun_total >= min_noun_freq`, or when the
/// single-modifier exception applies. Every modifier of a surviving head
/// becomes one candidate. Candidates of exception heads carry
/// `EXCEPTION_KEPT`; the flag depends only on the exception condition,
/// never on `min_noun_freq`, so lowering the threshold adds candidates
/// without re-labeling existing ones.
///
/// Raising `min_noun_freq` can only shrink the result: retention is a
/// disjunction whose threshold arm is monotone in the threshold and
/// whose exception arm ignores it.
///
/// Output order: `noun_total` descending, then `pair_count` descending,
/// then (head, modifier) ascending.
pub fn filter_terms(table: &PairTable, config: &FilterConfig) -> Result<Vec<TermCandidate>, TermsError> {
    config.validate()?;
    let mut out = Vec::new();
    for (head, entry) in table.iter() {
        if entry.modifiers().is_empty() {
            continue;
        }
        let exception = exception_applies(entry, config.exception_min_pair);
        let retained = entry.noun_total() >= config.min_noun_freq || exception;
        if !retained {
            continue;
        }
        for (modifier, count) in entry.modifiers() {
            let mut flags = BTreeSet::new();
            if exception {
                flags.insert(TermFlag::ExceptionKept);
            }
            out.push(TermCandidate {
                head: head.to_string(),
                modifier: modifier.clone(),
                pair_count: *count,
                noun_total: entry.noun_total(),
                flags,
            });
        }
    }
    out.sort_by(|a, b| {
        b.noun_total
            .cmp(&a.noun_total)
            .then_with(|| b.pair_count.cmp(&a.pair_count))
            .then_with(|| (a.head.as_str(), a.modifier.as_str()).cmp(&(b.head.as_str(), b.modifier.as_str())))
    });
    Ok(out)
}

/// Flag multiword expressions in place: a candidate whose pair count is
/// at least `mwe_ratio * noun_total` is a fixed expression (`MWE`), and a
/// fixed noun-modifier expression denotes a subkind of its head, so it
/// also gets `HYPONYM_OF_HEAD`.
pub fn flag_mwe(candidates: &mut [TermCandidate], mwe_ratio: f64) {
    for candidate in candidates {
        if candidate.pair_count as f64 >= mwe_ratio * candidate.noun_total as f64 {
            candidate.flags.insert(TermFlag::Mwe);
            candidate.flags.insert(TermFlag::HyponymOfHead);
        }
    }
}

/// Serialize candidates as one tab-separated line each:
/// `head  modifier  pair_count  noun_total  flags` with flags
/// comma-joined in canonical order (MWE, HYPONYM_OF_HEAD,
/// EXCEPTION_KEPT) and an empty field when none apply.
pub fn write_candidates_tsv(candidates: &[TermCandidate]) -> String {
    let mut out = String::new();
    for c in candidates {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            c.head,
            c.modifier,
            c.pair_count,
            c.noun_total,
            c.flags_string()
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    Month,
    Year,
}

impl std::str::FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "month" => Ok(Period::Month),
            "year" => Ok(Period::Year),
            other => Err(format!("unknown period {other:?}, expected month or year")),
        }
    }
}

fn bucket_of(date: NaiveDate, period: Period) -> NaiveDate {
    match period {
        Period::Month => NaiveDate::from_ymd_opt(date.year(), date.month(), 1),
        Period::Year => NaiveDate::from_ymd_opt(date.year(), 1, 1),
    }
    .expect("first of an existing month")
}

fn next_bucket(bucket: NaiveDate, period: Period) -> NaiveDate {
    let step = match period {
        Period::Month => Months::new(1),
        Period::Year => Months::new(12),
    };
    bucket
        .checked_add_months(step)
        .expect("bucket range stays in NaiveDate bounds")
}

/// Frequency of one adjacent pair over time.
///
/// Documents without a date are ignored; if no document carries a date
/// the series is undefined and an error is returned. The series covers
/// every bucket from the earliest to the latest dated document, including
/// empty ones, so gaps are visible as zeros.
pub fn diachronic_series(
    shards: &[Shard],
    head: &str,
    modifier: &str,
    period: Period,
) -> Result<Vec<(NaiveDate, u64)>, TermsError> {
    let head = head.to_lowercase();
    let modifier = modifier.to_lowercase();
    let mut counts: std::collections::BTreeMap<NaiveDate, u64> = std::collections::BTreeMap::new();
    let mut span: Option<(NaiveDate, NaiveDate)> = None;
    for shard in shards {
        for ctx in shard.sentence_contexts() {
            let Some(date) = ctx.date else { continue };
            let bucket = bucket_of(date, period);
            span = Some(match span {
                None => (bucket, bucket),
                Some((lo, hi)) => (lo.min(bucket), hi.max(bucket)),
            });
            let tokens = ctx.sentence.tokens();
            for (i, token) in tokens.iter().enumerate() {
                if token.pos() != PosTag::Noun || token.lemma() != head {
                    continue;
                }
                // a pair occurrence in either mode: the head noun directly
                // followed by the modifier lemma as adjective or noun
                if let Some(next) = tokens.get(i + 1) {
                    if (next.pos() == PosTag::Adj || next.pos() == PosTag::Noun)
                        && next.lemma() == modifier
                    {
                        *counts.entry(bucket).or_insert(0) += 1;
                    }
                }
            }
        }
    }
    let (lo, hi) = span.ok_or(TermsError::NoDatedDocuments)?;
    let mut series = Vec::new();
    let mut bucket = lo;
    loop {
        series.push((bucket, counts.get(&bucket).copied().unwrap_or(0)));
        if bucket == hi {
            break;
        }
        bucket = next_bucket(bucket, period);
    }
    Ok(series)
}

/// Serialize a series as `YYYY-MM-DD<TAB>count` lines.
pub fn write_series_tsv(series: &[(NaiveDate, u64)]) -> String {
    let mut out = String::new();
    for (bucket, count) in series {
        writeln!(out, "{}\t{}", bucket.format("%Y-%m-%d"), count).expect("string write");
    }
    out
}
