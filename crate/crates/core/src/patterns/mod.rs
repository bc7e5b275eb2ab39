//! Pattern matching and the extraction operations built on it: adjacent
//! pair counting, KWIC concordances and positional co-occurrence counts.
//!
//! Every operation exists in two forms: a convenience form over a whole
//! shard and a `_from` form over a sentence stream. The stream forms are
//! what jobs run, because a job may read its input exactly once; each
//! consumes the stream in a single pass.

mod dsl;

pub use dsl::{
    match_pattern, match_pattern_from, match_sentence, parse_pattern, parse_pattern_file,
    LocalMatch, PatternElement, PatternError, PatternErrorKind, PatternRule, TokenConstraint,
    GAP_MAX,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::corpus::{AnnotatedToken, PosTag, SentenceCtx, Shard};

/// Which adjacent pair an extraction collects: a noun followed by an
/// adjective, or a noun followed by a noun.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairMode {
    NounAdj,
    NounNoun,
}

impl PairMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairMode::NounAdj => "NA",
            PairMode::NounNoun => "NN",
        }
    }

    fn modifier_pos(&self) -> PosTag {
        match self {
            PairMode::NounAdj => PosTag::Adj,
            PairMode::NounNoun => PosTag::Noun,
        }
    }
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NA" => Ok(PairMode::NounAdj),
            "NN" => Ok(PairMode::NounNoun),
            other => Err(format!("unknown pair mode {other:?} (expected NA or NN)")),
        }
    }
}

/// Counts for one head noun: how often the noun occurs at all, and how
/// often each modifier follows it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HeadEntry {
    noun_total: u64,
    modifiers: BTreeMap<String, u64>,
}

impl HeadEntry {
    /// Occurrences of the head noun anywhere, paired or not.
    pub fn noun_total(&self) -> u64 {
        self.noun_total
    }

    pub fn modifiers(&self) -> &BTreeMap<String, u64> {
        &self.modifiers
    }

    pub fn pair_total(&self) -> u64 {
        self.modifiers.values().sum()
    }
}

/// Frequency table keyed by head noun lemma. Every noun lemma seen gets an
/// entry, with or without modifiers, so merged tables carry the same
/// totals a single pass over the concatenated input would.
///
/// Tables form a commutative monoid under [`crate::aggregate::merge_tables`]
/// with the empty table as identity.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairTable {
    heads: BTreeMap<String, HeadEntry>,
}

impl PairTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Count one occurrence of a noun lemma.
    pub fn add_noun(&mut self, lemma: &str) {
        self.add_noun_count(lemma, 1);
    }

    pub fn add_noun_count(&mut self, lemma: &str, count: u64) {
        self.heads.entry(lemma.to_string()).or_default().noun_total += count;
    }

    /// Count one adjacent pair. The head entry is created if the noun has
    /// not been seen yet; its `noun_total` is left for [`add_noun`] calls.
    pub fn add_pair(&mut self, head: &str, modifier: &str) {
        self.add_pair_count(head, modifier, 1);
    }

    pub fn add_pair_count(&mut self, head: &str, modifier: &str, count: u64) {
        *self
            .heads
            .entry(head.to_string())
            .or_default()
            .modifiers
            .entry(modifier.to_string())
            .or_insert(0) += count;
    }

    pub fn get(&self, head: &str) -> Option<&HeadEntry> {
        self.heads.get(head)
    }

    /// Heads in ascending lemma order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &HeadEntry)> {
        self.heads.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn total_nouns(&self) -> u64 {
        self.heads.values().map(|e| e.noun_total).sum()
    }

    pub fn total_pairs(&self) -> u64 {
        self.heads.values().map(HeadEntry::pair_total).sum()
    }
}

/// Count nouns and adjacent pairs in one pass over a sentence stream.
///
/// For every NOUN token the head total is incremented; when the directly
/// following token in the same sentence carries the mode's modifier POS,
/// the pair count is incremented too. Pairing never crosses a sentence
/// boundary. Because each token contributes independently of anything
/// outside its sentence, extraction distributes over any split of the
/// corpus into shards: merging per-shard tables equals one pass over the
/// whole corpus.
pub fn extract_pairs_from<'a>(
    sentences: impl Iterator<Item = SentenceCtx<'a>>,
    mode: PairMode,
) -> PairTable {
    let mut table = PairTable::new();
    let modifier_pos = mode.modifier_pos();
    for ctx in sentences {
        let tokens = ctx.sentence.tokens();
        for (i, token) in tokens.iter().enumerate() {
            if token.pos() != PosTag::Noun {
                continue;
            }
            table.add_noun(token.lemma());
            if let Some(next) = tokens.get(i + 1) {
                if next.pos() == modifier_pos {
                    table.add_pair(token.lemma(), next.lemma());
                }
            }
        }
    }
    table
}

/// [`extract_pairs_from`] over a whole shard.
pub fn extract_pairs(shard: &Shard, mode: PairMode) -> PairTable {
    extract_pairs_from(shard.sentence_contexts(), mode)
}

/// A pattern match located in its document. Token positions are
/// document-level offsets; `token_end` is exclusive; `lemmas` holds the
/// lemma bound at each constraint position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MatchSpan {
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub lemmas: Vec<String>,
}

/// One keyword-in-context line: a keyword occurrence with up to `window`
/// tokens of context on each side, clipped at sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcordanceLine {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Document-level token offset of the matched token.
    pub token_offset: usize,
    pub left: Vec<AnnotatedToken>,
    pub matched: AnnotatedToken,
    pub right: Vec<AnnotatedToken>,
}

/// A KWIC concordance: every occurrence of a keyword lemma in corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concordance {
    pub keyword: String,
    pub window: usize,
    pub lines: Vec<ConcordanceLine>,
}

/// Concordance lines for every token whose lemma equals `lemma` (any part
/// of speech), in stream order. An absent lemma simply yields no lines.
pub fn concordance_from<'a>(
    sentences: impl Iterator<Item = SentenceCtx<'a>>,
    lemma: &str,
    window: usize,
) -> Vec<ConcordanceLine> {
    let lemma = lemma.to_lowercase();
    let mut lines = Vec::new();
    for ctx in sentences {
        let tokens = ctx.sentence.tokens();
        for (i, token) in tokens.iter().enumerate() {
            if token.lemma() != lemma {
                continue;
            }
            let left_start = i.saturating_sub(window);
            let right_end = (i + 1 + window).min(tokens.len());
            lines.push(ConcordanceLine {
                doc_id: ctx.doc_id.to_string(),
                sentence_index: ctx.sentence_index,
                token_offset: ctx.token_offset + i,
                left: tokens[left_start..i].to_vec(),
                matched: token.clone(),
                right: tokens[i + 1..right_end].to_vec(),
            });
        }
    }
    lines
}

/// [`concordance_from`] over a whole shard.
pub fn concordance(shard: &Shard, lemma: &str, window: usize) -> Concordance {
    Concordance {
        keyword: lemma.to_lowercase(),
        window,
        lines: concordance_from(shard.sentence_contexts(), lemma, window),
    }
}

/// Co-occurrence counts around a target lemma: for every occurrence of
/// `target` and every sentence position within `window` of it, count the
/// (relative position, lemma) combination. Relative positions run from
/// `-window` to `window`, excluding 0; windows never cross sentence
/// boundaries.
pub fn cooccurrences_from<'a>(
    sentences: impl Iterator<Item = SentenceCtx<'a>>,
    target: &str,
    window: usize,
) -> BTreeMap<(i64, String), u64> {
    let target = target.to_lowercase();
    let mut counts: BTreeMap<(i64, String), u64> = BTreeMap::new();
    for ctx in sentences {
        let tokens = ctx.sentence.tokens();
        for (i, token) in tokens.iter().enumerate() {
            if token.lemma() != target {
                continue;
            }
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(tokens.len().saturating_sub(1));
            for j in lo..=hi {
                if j == i {
                    continue;
                }
                let rel = j as i64 - i as i64;
                *counts
                    .entry((rel, tokens[j].lemma().to_string()))
                    .or_insert(0) += 1;
            }
        }
    }
    counts
}

/// [`cooccurrences_from`] over a whole shard.
pub fn cooccurrences(
    shard: &Shard,
    target: &str,
    window: usize,
) -> BTreeMap<(i64, String), u64> {
    cooccurrences_from(shard.sentence_contexts(), target, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_vertical, Shard};

    fn shard(vertical: &str) -> Shard {
        Shard::new("s0", "test", parse_vertical(vertical).unwrap()).unwrap()
    }

    const COWS: &str = "#doc d1 farming\n\
La\tla\tDET\n\
mucca\tmucca\tNOUN\n\
pazza\tpazzo\tADJ\n\
mangia\tmangiare\tVERB\n\
.\t.\tPUNCT\n\
\n\
Mucca\tmucca\tNOUN\n\
pazza\tpazzo\tADJ\n\
\n\
#doc d2 farming\n\
Latte\tlatte\tNOUN\n\
mucca\tmucca\tNOUN\n\
sano\tsano\tADJ\n\
\n";

    #[test]
    fn pair_extraction_counts_nouns_and_adjacent_pairs() {
        let table = extract_pairs(&shard(COWS), PairMode::NounAdj);
        let mucca = table.get("mucca").unwrap();
        assert_eq!(mucca.noun_total(), 3);
        assert_eq!(mucca.modifiers().get("pazzo"), Some(&2));
        assert_eq!(mucca.modifiers().get("sano"), Some(&1));
        let latte = table.get("latte").unwrap();
        assert_eq!(latte.noun_total(), 1);
        assert!(latte.modifiers().is_empty());
        assert!(table.get("pazzo").is_none());
    }

    #[test]
    fn noun_noun_mode_counts_nominal_pairs() {
        let table = extract_pairs(&shard(COWS), PairMode::NounNoun);
        assert_eq!(table.get("latte").unwrap().modifiers().get("mucca"), Some(&1));
        assert!(table.get("mucca").unwrap().modifiers().is_empty());
        // totals are identical across modes
        let na = extract_pairs(&shard(COWS), PairMode::NounAdj);
        assert_eq!(table.get("mucca").unwrap().noun_total(), na.get("mucca").unwrap().noun_total());
    }

    #[test]
    fn pairing_does_not_cross_sentence_boundaries() {
        let v = "#doc d1 t\nmucca\tmucca\tNOUN\n\npazza\tpazzo\tADJ\n\n";
        let table = extract_pairs(&shard(v), PairMode::NounAdj);
        assert!(table.get("mucca").unwrap().modifiers().is_empty());
    }

    #[test]
    fn every_noun_gets_an_entry_even_without_modifiers() {
        let v = "#doc d1 t\nmucca\tmucca\tNOUN\n\n";
        let table = extract_pairs(&shard(v), PairMode::NounAdj);
        assert_eq!(table.len(), 1);
        assert_eq!(table.get("mucca").unwrap().noun_total(), 1);
        assert_eq!(table.get("mucca").unwrap().pair_total(), 0);
    }

    #[test]
    fn concordance_clips_at_sentence_edges() {
        let conc = concordance(&shard(COWS), "mucca", 2);
        assert_eq!(conc.keyword, "mucca");
        assert_eq!(conc.lines.len(), 3);
        // d1 sentence 0: one DET to the left, two tokens to the right
        let l0 = &conc.lines[0];
        assert_eq!(l0.doc_id, "d1");
        assert_eq!(l0.sentence_index, 0);
        assert_eq!(l0.token_offset, 1);
        assert_eq!(l0.left.len(), 1);
        assert_eq!(l0.matched.surface(), "mucca");
        assert_eq!(l0.right.len(), 2);
        // d1 sentence 1 starts with the keyword: empty left, short right
        let l1 = &conc.lines[1];
        assert_eq!(l1.sentence_index, 1);
        assert_eq!(l1.token_offset, 5);
        assert!(l1.left.is_empty());
        assert_eq!(l1.right.len(), 1);
        // d2: "latte" to the left
        let l2 = &conc.lines[2];
        assert_eq!(l2.doc_id, "d2");
        assert_eq!(l2.token_offset, 1);
        assert_eq!(l2.left.len(), 1);
    }

    #[test]
    fn concordance_is_lemma_keyed_and_case_insensitive() {
        // "pazza" surfaces under lemma pazzo, any part of speech counts
        let conc = concordance(&shard(COWS), "PAZZO", 1);
        assert_eq!(conc.keyword, "pazzo");
        assert_eq!(conc.lines.len(), 2);
        assert!(conc.lines.iter().all(|l| l.matched.surface() == "pazza"));
        assert!(concordance(&shard(COWS), "assente", 3).lines.is_empty());
    }

    #[test]
    fn cooccurrence_counts_by_relative_position() {
        let counts = cooccurrences(&shard(COWS), "mucca", 1);
        // occurrences: d1 s0 pos 1 (la left, pazzo right), d1 s1 pos 0
        // (pazzo right), d2 s0 pos 1 (latte left, sano right)
        assert_eq!(counts.get(&(-1, "la".to_string())), Some(&1));
        assert_eq!(counts.get(&(1, "pazzo".to_string())), Some(&2));
        assert_eq!(counts.get(&(-1, "latte".to_string())), Some(&1));
        assert_eq!(counts.get(&(1, "sano".to_string())), Some(&1));
        assert_eq!(counts.values().sum::<u64>(), 5);
    }

    #[test]
    fn cooccurrence_window_respects_sentence_bounds() {
        let counts = cooccurrences(&shard(COWS), "mucca", 5);
        // widest left context anywhere is one token, so a window of 5
        // never reaches past a sentence start
        assert!(!counts.keys().any(|(rel, _)| *rel < -1));
        assert_eq!(counts.get(&(3, ".".to_string())), Some(&1));
        assert_eq!(counts.get(&(2, "mangiare".to_string())), Some(&1));
    }

    #[test]
    fn table_accessors_sum_consistently() {
        let table = extract_pairs(&shard(COWS), PairMode::NounAdj);
        assert_eq!(table.total_nouns(), 4);
        assert_eq!(table.total_pairs(), 3);
    }
}
