//! Annotated-corpus data model: tokens, sentences, documents and shards,
//! plus the vertical file format, a toy annotator and a synthetic-corpus
//! generator for fixtures.
//!
//! Everything here is immutable after construction and safe to read from
//! any number of workers. Lemmas are lowercased at the single entry point
//! ([`AnnotatedToken::new`]); report renderers uppercase them on the way out.

mod annotate;
mod generate;
mod vertical;

pub use annotate::{annotate_toy, Lexicon};
pub use generate::{
    generate_corpus, GeneratedCorpus, GeneratorConfig, Placement, PlantedKind, PlantedPair,
};
pub use vertical::{
    load_manifest, parse_vertical, write_manifest, write_shards, write_vertical, VerticalError,
};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

/// Coarse part-of-speech tagset. The set is closed: parsing any other tag
/// string is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PosTag {
    Noun,
    Adj,
    Verb,
    Det,
    Adp,
    Punct,
    Other,
}

impl PosTag {
    pub const ALL: [PosTag; 7] = [
        PosTag::Noun,
        PosTag::Adj,
        PosTag::Verb,
        PosTag::Det,
        PosTag::Adp,
        PosTag::Punct,
        PosTag::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Adj => "ADJ",
            PosTag::Verb => "VERB",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Punct => "PUNCT",
            PosTag::Other => "OTHER",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown POS tag {0:?}")]
pub struct PosTagError(pub String);

impl FromStr for PosTag {
    type Err = PosTagError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NOUN" => Ok(PosTag::Noun),
            "ADJ" => Ok(PosTag::Adj),
            "VERB" => Ok(PosTag::Verb),
            "DET" => Ok(PosTag::Det),
            "ADP" => Ok(PosTag::Adp),
            "PUNCT" => Ok(PosTag::Punct),
            "OTHER" => Ok(PosTag::Other),
            other => Err(PosTagError(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("token surface must be non-empty")]
    EmptySurface,
    #[error("token lemma must be non-empty")]
    EmptyLemma,
    #[error("{field} contains a tab or newline: {value:?}")]
    IllegalChar { field: &'static str, value: String },
    #[error("sentence must contain at least one token")]
    EmptySentence,
    #[error("{field} must be non-empty and free of whitespace: {value:?}")]
    BadIdentifier { field: &'static str, value: String },
    #[error("target shard count must be at least 1")]
    ZeroShardTarget,
    #[error("generator config: {0}")]
    GeneratorConfig(String),
    #[error("shard {shard_id}: manifest records {recorded} tokens but the data holds {actual}")]
    TokenCountMismatch {
        shard_id: String,
        recorded: u64,
        actual: u64,
    },
    #[error("manifest line {line}: expected 4 tab-separated fields: {text:?}")]
    ManifestLine { line: usize, text: String },
    #[error("{path}: {source}")]
    ShardFile {
        path: String,
        #[source]
        source: Box<VerticalError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One corpus token: surface form, lemma and POS tag.
///
/// The lemma is lowercased on construction; neither field may contain a tab
/// or newline (they would break the vertical format).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AnnotatedToken {
    surface: String,
    lemma: String,
    pos: PosTag,
}

impl AnnotatedToken {
    pub fn new(
        surface: impl Into<String>,
        lemma: impl Into<String>,
        pos: PosTag,
    ) -> Result<Self, CorpusError> {
        let surface = surface.into();
        let lemma = lemma.into().to_lowercase();
        if surface.is_empty() {
            return Err(CorpusError::EmptySurface);
        }
        if lemma.is_empty() {
            return Err(CorpusError::EmptyLemma);
        }
        for (field, value) in [("surface", &surface), ("lemma", &lemma)] {
            if value.contains('\t') || value.contains('\n') || value.contains('\r') {
                return Err(CorpusError::IllegalChar {
                    field,
                    value: value.clone(),
                });
            }
        }
        Ok(AnnotatedToken {
            surface,
            lemma,
            pos,
        })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn pos(&self) -> PosTag {
        self.pos
    }
}

/// A non-empty run of tokens. Pattern matches never cross sentence
/// boundaries, so the sentence is the unit every matcher works on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<AnnotatedToken>,
}

impl Sentence {
    pub fn new(tokens: Vec<AnnotatedToken>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySentence);
        }
        Ok(Sentence { tokens })
    }

    pub fn tokens(&self) -> &[AnnotatedToken] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn check_identifier(field: &'static str, value: &str) -> Result<(), CorpusError> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(CorpusError::BadIdentifier {
            field,
            value: value.to_string(),
        });
    }
    Ok(())
}

/// A domain-labeled document: the atomic unit of sharding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    id: String,
    domain: String,
    date: Option<NaiveDate>,
    sentences: Vec<Sentence>,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        domain: impl Into<String>,
        date: Option<NaiveDate>,
        sentences: Vec<Sentence>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let domain = domain.into();
        check_identifier("document id", &id)?;
        check_identifier("domain", &domain)?;
        Ok(Document {
            id,
            domain,
            date,
            sentences,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn date(&self) -> Option<NaiveDate> {
        self.date
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn token_count(&self) -> u64 {
        self.sentences.iter().map(|s| s.len() as u64).sum()
    }
}

/// A sentence paired with where it sits in its shard: the item type every
/// single-pass operation consumes.
#[derive(Debug, Clone, Copy)]
pub struct SentenceCtx<'a> {
    pub doc_id: &'a str,
    pub date: Option<NaiveDate>,
    /// Index of the sentence within its document.
    pub sentence_index: usize,
    /// Document-level token offset of the first token of this sentence.
    pub token_offset: usize,
    pub sentence: &'a Sentence,
}

/// An immutable, domain-labeled slice of a corpus: the unit of distribution
/// and replication. `token_count` and `byte_size` are fixed at construction;
/// `byte_size` is the length of the shard's vertical serialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    shard_id: String,
    domain: String,
    documents: Vec<Document>,
    token_count: u64,
    byte_size: u64,
}

impl Shard {
    pub fn new(
        shard_id: impl Into<String>,
        domain: impl Into<String>,
        documents: Vec<Document>,
    ) -> Result<Self, CorpusError> {
        let shard_id = shard_id.into();
        let domain = domain.into();
        check_identifier("shard id", &shard_id)?;
        check_identifier("domain", &domain)?;
        let token_count = documents.iter().map(Document::token_count).sum();
        let byte_size = write_vertical(&documents).len() as u64;
        Ok(Shard {
            shard_id,
            domain,
            documents,
            token_count,
            byte_size,
        })
    }

    pub fn shard_id(&self) -> &str {
        &self.shard_id
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn token_count(&self) -> u64 {
        self.token_count
    }

    pub fn byte_size(&self) -> u64 {
        self.byte_size
    }

    /// Iterate every sentence of the shard exactly once, in corpus order,
    /// with its document id, date and token offset attached.
    pub fn sentence_contexts(&self) -> impl Iterator<Item = SentenceCtx<'_>> + '_ {
        self.documents.iter().flat_map(|doc| {
            let mut offset = 0usize;
            doc.sentences.iter().enumerate().map(move |(i, sentence)| {
                let ctx = SentenceCtx {
                    doc_id: &doc.id,
                    date: doc.date,
                    sentence_index: i,
                    token_offset: offset,
                    sentence,
                };
                offset += sentence.len();
                ctx
            })
        })
    }
}

/// Greedily partition `docs` into at most `target_shards` shards balanced by
/// token count: each document goes to the currently lightest shard
/// (ties broken by lowest shard index). Documents are never split and keep
/// their input order inside each shard. Empty shards are dropped.
///
/// Shard ids are `<prefix>-NNN`, numbered after empties are removed; a
/// shard whose documents all share one domain inherits it, otherwise it is
/// labeled `mixed`.
pub fn shard_corpus_named(
    docs: Vec<Document>,
    target_shards: usize,
    prefix: &str,
) -> Result<Vec<Shard>, CorpusError> {
    if target_shards == 0 {
        return Err(CorpusError::ZeroShardTarget);
    }
    check_identifier("shard id prefix", prefix)?;
    let mut bins: Vec<(u64, Vec<Document>)> = (0..target_shards).map(|_| (0, Vec::new())).collect();
    for doc in docs {
        let tokens = doc.token_count();
        let lightest = bins
            .iter()
            .enumerate()
            .min_by_key(|(idx, (load, _))| (*load, *idx))
            .map(|(idx, _)| idx)
            .expect("at least one bin");
        bins[lightest].0 += tokens;
        bins[lightest].1.push(doc);
    }
    let mut shards = Vec::new();
    for (_, docs) in bins.into_iter().filter(|(_, docs)| !docs.is_empty()) {
        let domains: BTreeSet<&str> = docs.iter().map(|d| d.domain.as_str()).collect();
        let domain = if domains.len() == 1 {
            domains.into_iter().next().unwrap().to_string()
        } else {
            "mixed".to_string()
        };
        let id = format!("{prefix}-{:03}", shards.len());
        shards.push(Shard::new(id, domain, docs)?);
    }
    Ok(shards)
}

/// [`shard_corpus_named`] with the default `shard` id prefix.
pub fn shard_corpus(docs: Vec<Document>, target_shards: usize) -> Result<Vec<Shard>, CorpusError> {
    shard_corpus_named(docs, target_shards, "shard")
}
