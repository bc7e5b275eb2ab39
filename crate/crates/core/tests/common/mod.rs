//! Helpers shared by the integration suites. The `brute_*` functions are
//! deliberately naive re-implementations of library behavior, written as
//! generate-and-test scans so they can disagree with the real code paths.

#![allow(dead_code)]

use std::collections::BTreeMap;

use gridminer::corpus::{AnnotatedToken, Document, PosTag, Shard};
use gridminer::gridsim::{parse_grid_config, Certificate, ExtractionOp, Grid, Job};
use gridminer::patterns::{MatchSpan, PairMode, PairTable, PatternElement, PatternRule};

/// Adjacent-pair scan over plain token slices.
pub fn brute_pairs(docs: &[Document], mode: PairMode) -> PairTable {
    let follower = match mode {
        PairMode::NounAdj => PosTag::Adj,
        PairMode::NounNoun => PosTag::Noun,
    };
    let mut table = PairTable::new();
    for doc in docs {
        for sentence in doc.sentences() {
            let tokens = sentence.tokens();
            for i in 0..tokens.len() {
                if tokens[i].pos() != PosTag::Noun {
                    continue;
                }
                table.add_noun(tokens[i].lemma());
                if let Some(next) = tokens.get(i + 1) {
                    if next.pos() == follower {
                        table.add_pair(tokens[i].lemma(), next.lemma());
                    }
                }
            }
        }
    }
    table
}

fn constraint_ok(pos: Option<PosTag>, lemma: Option<&str>, token: &AnnotatedToken) -> bool {
    pos.is_none_or(|p| token.pos() == p) && lemma.is_none_or(|l| token.lemma() == l)
}

/// Test one fully spelled-out gap assignment, left to right.
fn assignment_matches(
    tokens: &[AnnotatedToken],
    elements: &[PatternElement],
    start: usize,
    gaps: &[u8],
) -> Option<(usize, Vec<String>)> {
    let mut at = start;
    let mut gap_index = 0;
    let mut lemmas = Vec::new();
    for element in elements {
        match element {
            PatternElement::Constraint(c) => {
                let token = tokens.get(at)?;
                if !constraint_ok(c.pos, c.lemma.as_deref(), token) {
                    return None;
                }
                lemmas.push(token.lemma().to_string());
                at += 1;
            }
            PatternElement::Gap { .. } => {
                at += gaps[gap_index] as usize;
                gap_index += 1;
                if at > tokens.len() {
                    return None;
                }
            }
        }
    }
    Some((at, lemmas))
}

/// Enumerate gap vectors in lexicographic order (earlier gaps most
/// significant) and keep the first assignment that matches: the smallest
/// total stretch wins, exactly the advertised tie-break.
fn brute_match_at(
    tokens: &[AnnotatedToken],
    elements: &[PatternElement],
    start: usize,
) -> Option<(usize, Vec<String>)> {
    let ranges: Vec<(u8, u8)> = elements
        .iter()
        .filter_map(|e| match e {
            PatternElement::Gap { min, max } => Some((*min, *max)),
            PatternElement::Constraint(_) => None,
        })
        .collect();
    let mut wheels: Vec<u8> = ranges.iter().map(|(min, _)| *min).collect();
    loop {
        if let Some(found) = assignment_matches(tokens, elements, start, &wheels) {
            return Some(found);
        }
        let mut i = wheels.len();
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if wheels[i] < ranges[i].1 {
                wheels[i] += 1;
                for j in i + 1..wheels.len() {
                    wheels[j] = ranges[j].0;
                }
                break;
            }
        }
    }
}

/// Every match of `rule` over `docs`, one per start position, with
/// document-level token offsets.
pub fn brute_matches(docs: &[Document], rule: &PatternRule) -> Vec<MatchSpan> {
    let mut spans = Vec::new();
    for doc in docs {
        let mut offset = 0;
        for (sentence_index, sentence) in doc.sentences().iter().enumerate() {
            let tokens = sentence.tokens();
            for start in 0..tokens.len() {
                if let Some((end, lemmas)) = brute_match_at(tokens, rule.elements(), start) {
                    spans.push(MatchSpan {
                        doc_id: doc.id().to_string(),
                        sentence_index,
                        token_start: offset + start,
                        token_end: offset + end,
                        lemmas,
                    });
                }
            }
            offset += tokens.len();
        }
    }
    spans
}

/// `count` identical nodes in one open organization, unit bandwidth.
pub fn uniform_grid(count: usize, power: i64, storage: u64) -> Grid {
    let mut text = String::from("vo science\n");
    for i in 0..count {
        text.push_str(&format!(
            "node n{i} power={power} storage={storage} vos=science\n"
        ));
    }
    parse_grid_config(&text).expect("well-formed grid")
}

pub fn operator_cert() -> Certificate {
    Certificate {
        user: "operator".to_string(),
        vo: "science".to_string(),
        valid: true,
    }
}

/// One pair-extraction job per shard, in shard order.
pub fn pair_jobs(shards: &[Shard], mode: PairMode) -> Vec<Job> {
    shards
        .iter()
        .map(|shard| Job {
            job_id: format!("job-{}", shard.shard_id()),
            shard_id: shard.shard_id().to_string(),
            vo: "science".to_string(),
            op: ExtractionOp::Pairs(mode),
        })
        .collect()
}

pub fn shard_map(shards: &[Shard]) -> BTreeMap<String, Shard> {
    shards
        .iter()
        .map(|s| (s.shard_id().to_string(), s.clone()))
        .collect()
}
