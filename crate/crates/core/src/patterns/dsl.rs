//! Pattern language over annotated tokens.
//!
//! A pattern is a whitespace-separated sequence of elements:
//!
//! ```text
//! element := <POS> | <POS>:<lemma> | *:<lemma> | GAP{min,max}
//! ```
//!
//! `NOUN:malattia` constrains POS and lemma, `*:malattia` only the lemma,
//! `GAP{0,2}` skips between 0 and 2 arbitrary tokens. Gaps may not open or
//! close a pattern and their bounds satisfy 0 <= min <= max <= 5. Lines
//! whose first non-blank character is `#` are comments.
//!
//! Matching is sentence-local. At each start position the matcher commits
//! to the lexicographically smallest gap assignment (tried depth-first in
//! ascending order) and reports at most one span per start position;
//! spans from different starts may overlap.

use std::fmt;

use thiserror::Error;

use super::MatchSpan;
use crate::corpus::{AnnotatedToken, PosTag, Sentence, SentenceCtx, Shard};

pub const GAP_MAX: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternErrorKind {
    EmptyPattern,
    LeadingGap,
    TrailingGap,
    GapBounds { min: u8, max: u8 },
    BadElement(String),
    UnknownPos(String),
    EmptyLemma,
}

impl fmt::Display for PatternErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternErrorKind::EmptyPattern => write!(f, "pattern has no elements"),
            PatternErrorKind::LeadingGap => write!(f, "pattern must not start with a gap"),
            PatternErrorKind::TrailingGap => write!(f, "pattern must not end with a gap"),
            PatternErrorKind::GapBounds { min, max } => write!(
                f,
                "gap bounds must satisfy 0 <= min <= max <= {GAP_MAX}, got {{{min},{max}}}"
            ),
            PatternErrorKind::BadElement(text) => write!(f, "unrecognized element {text:?}"),
            PatternErrorKind::UnknownPos(tag) => write!(f, "unknown POS tag {tag:?}"),
            PatternErrorKind::EmptyLemma => write!(f, "lemma after ':' must be non-empty"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct PatternError {
    pub line: usize,
    pub column: usize,
    pub kind: PatternErrorKind,
}

impl PatternError {
    fn at(line: usize, column: usize, kind: PatternErrorKind) -> Self {
        PatternError { line, column, kind }
    }
}

/// Constraint on a single token: POS, lemma, or both. At least one side is
/// always set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenConstraint {
    pub pos: Option<PosTag>,
    pub lemma: Option<String>,
}

impl TokenConstraint {
    pub fn matches(&self, token: &AnnotatedToken) -> bool {
        if let Some(pos) = self.pos {
            if token.pos() != pos {
                return false;
            }
        }
        if let Some(lemma) = &self.lemma {
            if token.lemma() != lemma {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for TokenConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.pos, &self.lemma) {
            (Some(pos), Some(lemma)) => write!(f, "{pos}:{lemma}"),
            (Some(pos), None) => write!(f, "{pos}"),
            (None, Some(lemma)) => write!(f, "*:{lemma}"),
            (None, None) => unreachable!("constraint always has a side"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternElement {
    Constraint(TokenConstraint),
    Gap { min: u8, max: u8 },
}

impl fmt::Display for PatternElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternElement::Constraint(c) => write!(f, "{c}"),
            PatternElement::Gap { min, max } => write!(f, "GAP{{{min},{max}}}"),
        }
    }
}

/// A validated pattern. Its name is the canonical printed form, so parsing
/// a rule's display output reproduces the rule exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternRule {
    name: String,
    elements: Vec<PatternElement>,
}

impl PatternRule {
    pub fn new(elements: Vec<PatternElement>) -> Result<Self, PatternError> {
        validate_shape(&elements, None)?;
        let name = elements
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        Ok(PatternRule { name, elements })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn elements(&self) -> &[PatternElement] {
        &self.elements
    }

    pub fn constraint_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e, PatternElement::Constraint(_)))
            .count()
    }
}

impl fmt::Display for PatternRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn validate_shape(
    elements: &[PatternElement],
    positions: Option<(usize, &[usize])>,
) -> Result<(), PatternError> {
    if elements.is_empty() {
        let line = positions.map_or(0, |(line, _)| line);
        return Err(PatternError::at(line, 1, PatternErrorKind::EmptyPattern));
    }
    let col = |i: usize| -> (usize, usize) {
        match positions {
            Some((line, cols)) => (line, cols[i]),
            None => (0, 0),
        }
    };
    if matches!(elements.first(), Some(PatternElement::Gap { .. })) {
        let (line, column) = col(0);
        return Err(PatternError::at(line, column, PatternErrorKind::LeadingGap));
    }
    if matches!(elements.last(), Some(PatternElement::Gap { .. })) {
        let (line, column) = col(elements.len() - 1);
        return Err(PatternError::at(
            line,
            column,
            PatternErrorKind::TrailingGap,
        ));
    }
    for (i, element) in elements.iter().enumerate() {
        if let PatternElement::Gap { min, max } = element {
            if min > max || *max > GAP_MAX {
                let (line, column) = col(i);
                return Err(PatternError::at(
                    line,
                    column,
                    PatternErrorKind::GapBounds {
                        min: *min,
                        max: *max,
                    },
                ));
            }
        }
    }
    Ok(())
}

fn parse_element(word: &str) -> Result<PatternElement, PatternErrorKind> {
    if let Some(rest) = word.strip_prefix("GAP{") {
        let inner = rest
            .strip_suffix('}')
            .ok_or_else(|| PatternErrorKind::BadElement(word.to_string()))?;
        let (min_s, max_s) = inner
            .split_once(',')
            .ok_or_else(|| PatternErrorKind::BadElement(word.to_string()))?;
        let min: u8 = min_s
            .trim()
            .parse()
            .map_err(|_| PatternErrorKind::BadElement(word.to_string()))?;
        let max: u8 = max_s
            .trim()
            .parse()
            .map_err(|_| PatternErrorKind::BadElement(word.to_string()))?;
        return Ok(PatternElement::Gap { min, max });
    }
    match word.split_once(':') {
        Some((pos_part, lemma)) => {
            if lemma.is_empty() {
                return Err(PatternErrorKind::EmptyLemma);
            }
            let pos = if pos_part == "*" {
                None
            } else {
                Some(
                    pos_part
                        .parse::<PosTag>()
                        .map_err(|e| PatternErrorKind::UnknownPos(e.0))?,
                )
            };
            Ok(PatternElement::Constraint(TokenConstraint {
                pos,
                lemma: Some(lemma.to_lowercase()),
            }))
        }
        None => {
            let pos = word
                .parse::<PosTag>()
                .map_err(|_| PatternErrorKind::BadElement(word.to_string()))?;
            Ok(PatternElement::Constraint(TokenConstraint {
                pos: Some(pos),
                lemma: None,
            }))
        }
    }
}

fn parse_line(line_no: usize, line: &str) -> Result<PatternRule, PatternError> {
    let mut elements = Vec::new();
    let mut columns = Vec::new();
    let mut byte = 0;
    for word in line.split_whitespace() {
        let start = line[byte..]
            .find(word)
            .map(|off| byte + off)
            .expect("word came from this line");
        byte = start + word.len();
        let column = start + 1;
        let element =
            parse_element(word).map_err(|kind| PatternError::at(line_no, column, kind))?;
        columns.push(column);
        elements.push(element);
    }
    if elements.is_empty() {
        return Err(PatternError::at(line_no, 1, PatternErrorKind::EmptyPattern));
    }
    validate_shape(&elements, Some((line_no, &columns)))?;
    PatternRule::new(elements).map_err(|mut e| {
        e.line = line_no;
        e
    })
}

/// Parse a single pattern line. Errors carry 1-based line and column.
pub fn parse_pattern(line: &str) -> Result<PatternRule, PatternError> {
    parse_line(1, line)
}

/// Parse a pattern file: one rule per line, blank lines and `#` comment
/// lines ignored.
pub fn parse_pattern_file(text: &str) -> Result<Vec<PatternRule>, PatternError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        rules.push(parse_line(idx + 1, raw)?);
    }
    Ok(rules)
}

/// A sentence-local match: token indices relative to the sentence plus the
/// lemmas bound at constraint positions (gap tokens are not captured).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMatch {
    pub token_start: usize,
    pub token_end: usize,
    pub lemmas: Vec<String>,
}

fn match_at(tokens: &[AnnotatedToken], elements: &[PatternElement], start: usize) -> Option<LocalMatch> {
    fn go(
        tokens: &[AnnotatedToken],
        elements: &[PatternElement],
        ei: usize,
        ti: usize,
        lemmas: &mut Vec<String>,
    ) -> Option<usize> {
        let Some(element) = elements.get(ei) else {
            return Some(ti);
        };
        match element {
            PatternElement::Constraint(c) => {
                let token = tokens.get(ti)?;
                if !c.matches(token) {
                    return None;
                }
                lemmas.push(token.lemma().to_string());
                match go(tokens, elements, ei + 1, ti + 1, lemmas) {
                    Some(end) => Some(end),
                    None => {
                        lemmas.pop();
                        None
                    }
                }
            }
            PatternElement::Gap { min, max } => {
                for g in *min..=*max {
                    let next = ti + g as usize;
                    if next > tokens.len() {
                        break;
                    }
                    if let Some(end) = go(tokens, elements, ei + 1, next, lemmas) {
                        return Some(end);
                    }
                }
                None
            }
        }
    }

    let mut lemmas = Vec::new();
    go(tokens, elements, 0, start, &mut lemmas).map(|end| LocalMatch {
        token_start: start,
        token_end: end,
        lemmas,
    })
}

/// All matches of `rule` inside one sentence, at most one per start
/// position, in start order.
pub fn match_sentence(sentence: &Sentence, rule: &PatternRule) -> Vec<LocalMatch> {
    let tokens = sentence.tokens();
    (0..tokens.len())
        .filter_map(|start| match_at(tokens, rule.elements(), start))
        .collect()
}

/// Matches over a sentence stream, in stream order.
pub fn match_pattern_from<'a>(
    sentences: impl Iterator<Item = SentenceCtx<'a>>,
    rule: &PatternRule,
) -> Vec<MatchSpan> {
    let mut spans = Vec::new();
    for ctx in sentences {
        for m in match_sentence(ctx.sentence, rule) {
            spans.push(MatchSpan {
                doc_id: ctx.doc_id.to_string(),
                sentence_index: ctx.sentence_index,
                token_start: ctx.token_offset + m.token_start,
                token_end: ctx.token_offset + m.token_end,
                lemmas: m.lemmas,
            });
        }
    }
    spans
}

/// All matches of `rule` in a shard, in corpus order. Token positions are
/// document-level offsets.
pub fn match_pattern(shard: &Shard, rule: &PatternRule) -> Vec<MatchSpan> {
    match_pattern_from(shard.sentence_contexts(), rule)
}
