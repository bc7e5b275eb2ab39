//! Seeded synthetic-corpus generator.
//!
//! Documents are built from planted blocks separated by filler tokens:
//! a noun-adjective block, a noun-noun block, or a solitary noun. Fillers
//! never carry NOUN or ADJ tags and at least one filler sits between
//! consecutive blocks, so pair extraction over the generated corpus
//! recovers exactly the planted tables and nothing else. The same seed
//! always yields the same corpus.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnnotatedToken, CorpusError, Document, PosTag, Sentence};
use crate::patterns::PairTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantedKind {
    NounAdj,
    NounNoun,
    Solitary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedPair {
    pub kind: PlantedKind,
    pub head: String,
    pub modifier: Option<String>,
}

/// Where a planted block starts in the generated corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_index: usize,
    pub pair: PlantedPair,
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub documents: usize,
    /// Inclusive range of sentences per document.
    pub sentences_per_doc: (usize, usize),
    /// Inclusive range of planted blocks per sentence.
    pub blocks_per_sentence: (usize, usize),
    pub noun_vocab: usize,
    pub adj_vocab: usize,
    pub filler_vocab: usize,
    pub domains: Vec<String>,
    /// When set, document `i` is dated `start_date + i * date_step_days`.
    pub start_date: Option<NaiveDate>,
    pub date_step_days: u64,
    /// Relative weights for picking the next block kind.
    pub weight_noun_adj: u32,
    pub weight_noun_noun: u32,
    pub weight_solitary: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            documents: 8,
            sentences_per_doc: (3, 8),
            blocks_per_sentence: (1, 4),
            noun_vocab: 20,
            adj_vocab: 12,
            filler_vocab: 24,
            domains: vec!["medicine".to_string(), "farming".to_string()],
            start_date: None,
            date_step_days: 30,
            weight_noun_adj: 5,
            weight_noun_noun: 2,
            weight_solitary: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedCorpus {
    pub documents: Vec<Document>,
    /// Noun-adjective pairs planted, with totals over all planted nouns.
    pub planted_na: PairTable,
    /// Noun-noun pairs planted, with the same totals.
    pub planted_nn: PairTable,
    pub placements: Vec<Placement>,
}

const FILLER_POS: [PosTag; 4] = [PosTag::Verb, PosTag::Det, PosTag::Adp, PosTag::Other];

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

fn validate(config: &GeneratorConfig) -> Result<(), CorpusError> {
    let check = |ok: bool, msg: &str| {
        if ok {
            Ok(())
        } else {
            Err(CorpusError::GeneratorConfig(msg.to_string()))
        }
    };
    check(config.documents >= 1, "documents must be at least 1")?;
    check(
        config.sentences_per_doc.0 >= 1 && config.sentences_per_doc.0 <= config.sentences_per_doc.1,
        "sentences_per_doc must be a non-empty range starting at 1 or more",
    )?;
    check(
        config.blocks_per_sentence.0 <= config.blocks_per_sentence.1,
        "blocks_per_sentence range is inverted",
    )?;
    check(config.noun_vocab >= 1, "noun_vocab must be at least 1")?;
    check(config.adj_vocab >= 1, "adj_vocab must be at least 1")?;
    check(config.filler_vocab >= 1, "filler_vocab must be at least 1")?;
    check(!config.domains.is_empty(), "domains must be non-empty")?;
    check(
        config.weight_noun_adj + config.weight_noun_noun + config.weight_solitary > 0,
        "block kind weights must not all be zero",
    )?;
    Ok(())
}

/// Generate a corpus from `seed`. The returned planted tables are exactly
/// what pair extraction produces for the matching mode: every planted noun
/// occurrence counts toward `noun_total` in both tables, while pairs land
/// only in the table of their block kind.
pub fn generate_corpus(seed: u64, config: &GeneratorConfig) -> Result<GeneratedCorpus, CorpusError> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut planted_na = PairTable::new();
    let mut planted_nn = PairTable::new();
    let mut placements = Vec::new();
    let mut documents = Vec::new();

    let noun = |i: usize| format!("noun{i:02}");
    let adj = |i: usize| format!("adj{i:02}");

    let add_noun_both = |lemma: &str, na: &mut PairTable, nn: &mut PairTable| {
        na.add_noun(lemma);
        nn.add_noun(lemma);
    };

    for d in 0..config.documents {
        let doc_id = format!("doc-{d:04}");
        let domain = config.domains[d % config.domains.len()].clone();
        let date = match config.start_date {
            Some(start) => Some(
                start
                    .checked_add_days(Days::new(d as u64 * config.date_step_days))
                    .ok_or_else(|| {
                        CorpusError::GeneratorConfig("date overflow".to_string())
                    })?,
            ),
            None => None,
        };
        let n_sentences =
            rng.random_range(config.sentences_per_doc.0..=config.sentences_per_doc.1);
        let mut sentences = Vec::new();
        for s in 0..n_sentences {
            let n_blocks =
                rng.random_range(config.blocks_per_sentence.0..=config.blocks_per_sentence.1);
            let mut tokens: Vec<AnnotatedToken> = Vec::new();
            let push_filler =
                |tokens: &mut Vec<AnnotatedToken>, rng: &mut ChaCha8Rng| -> Result<(), CorpusError> {
                    let j = rng.random_range(0..config.filler_vocab);
                    let lemma = format!("fill{j:02}");
                    tokens.push(AnnotatedToken::new(
                        lemma.clone(),
                        lemma,
                        FILLER_POS[j % FILLER_POS.len()],
                    )?);
                    Ok(())
                };
            for _ in 0..rng.random_range(0..=2usize) {
                push_filler(&mut tokens, &mut rng)?;
            }
            for b in 0..n_blocks {
                let token_index = tokens.len();
                let total =
                    config.weight_noun_adj + config.weight_noun_noun + config.weight_solitary;
                let roll = rng.random_range(0..total);
                let pair = if roll < config.weight_noun_adj {
                    let h = noun(rng.random_range(0..config.noun_vocab));
                    let m = adj(rng.random_range(0..config.adj_vocab));
                    tokens.push(AnnotatedToken::new(h.clone(), h.clone(), PosTag::Noun)?);
                    tokens.push(AnnotatedToken::new(m.clone(), m.clone(), PosTag::Adj)?);
                    add_noun_both(&h, &mut planted_na, &mut planted_nn);
                    planted_na.add_pair(&h, &m);
                    PlantedPair {
                        kind: PlantedKind::NounAdj,
                        head: h,
                        modifier: Some(m),
                    }
                } else if roll < config.weight_noun_adj + config.weight_noun_noun {
                    let a = noun(rng.random_range(0..config.noun_vocab));
                    let b2 = noun(rng.random_range(0..config.noun_vocab));
                    tokens.push(AnnotatedToken::new(a.clone(), a.clone(), PosTag::Noun)?);
                    tokens.push(AnnotatedToken::new(b2.clone(), b2.clone(), PosTag::Noun)?);
                    add_noun_both(&a, &mut planted_na, &mut planted_nn);
                    add_noun_both(&b2, &mut planted_na, &mut planted_nn);
                    planted_nn.add_pair(&a, &b2);
                    PlantedPair {
                        kind: PlantedKind::NounNoun,
                        head: a,
                        modifier: Some(b2),
                    }
                } else {
                    let h = noun(rng.random_range(0..config.noun_vocab));
                    tokens.push(AnnotatedToken::new(h.clone(), h.clone(), PosTag::Noun)?);
                    add_noun_both(&h, &mut planted_na, &mut planted_nn);
                    PlantedPair {
                        kind: PlantedKind::Solitary,
                        head: h,
                        modifier: None,
                    }
                };
                placements.push(Placement {
                    doc_id: doc_id.clone(),
                    sentence_index: s,
                    token_index,
                    pair,
                });
                // at least one filler between blocks so adjacent blocks
                // cannot fuse into unplanned pairs
                if b + 1 < n_blocks {
                    for _ in 0..rng.random_range(1..=3usize) {
                        push_filler(&mut tokens, &mut rng)?;
                    }
                }
            }
            tokens.push(AnnotatedToken::new(".", ".", PosTag::Punct)?);
            let first = &tokens[0];
            tokens[0] = AnnotatedToken::new(
                capitalize(first.surface()),
                first.lemma(),
                first.pos(),
            )?;
            sentences.push(Sentence::new(tokens).expect("sentence ends with PUNCT"));
        }
        documents.push(Document::new(doc_id, domain, date, sentences)?);
    }
    Ok(GeneratedCorpus {
        documents,
        planted_na,
        planted_nn,
        placements,
    })
}
