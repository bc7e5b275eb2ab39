//! Vertical corpus format and shard manifests.
//!
//! A vertical file is UTF-8 with LF line endings. A document starts with
//! `#doc <id> <domain> [<ISO-date>]`; every following non-blank line is
//! `surface<TAB>lemma<TAB>POS`; a blank line closes the current sentence;
//! the document runs to the next `#doc` or end of input. Serialization is
//! canonical, so parse(write(docs)) == docs and a shard's byte size is the
//! length of its serialization.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use thiserror::Error;

use super::{AnnotatedToken, CorpusError, Document, Sentence, Shard};

#[derive(Debug, Error)]
pub enum VerticalError {
    #[error("line {line}: malformed document header: {text:?}")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: expected 3 tab-separated fields, found {found}: {text:?}")]
    FieldCount {
        line: usize,
        found: usize,
        text: String,
    },
    #[error("line {line}: unknown POS tag {tag:?}")]
    UnknownPos { line: usize, tag: String },
    #[error("line {line}: token line outside any document")]
    TokenOutsideDocument { line: usize },
    #[error("line {line}: bad date {text:?} (expected YYYY-MM-DD)")]
    BadDate { line: usize, text: String },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateDocId { line: usize, id: String },
    #[error("line {line}: {source}")]
    Token {
        line: usize,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Parse a vertical file into documents. Blank lines are sentence
/// boundaries; an unterminated sentence at a document boundary or at end of
/// input is flushed implicitly.
pub fn parse_vertical(input: &str) -> Result<Vec<Document>, VerticalError> {
    let mut docs: Vec<Document> = Vec::new();
    let mut seen_ids: BTreeSet<String> = BTreeSet::new();

    struct OpenDoc {
        id: String,
        domain: String,
        date: Option<NaiveDate>,
        sentences: Vec<Sentence>,
        tokens: Vec<AnnotatedToken>,
    }

    impl OpenDoc {
        fn flush_sentence(&mut self) {
            if !self.tokens.is_empty() {
                let tokens = std::mem::take(&mut self.tokens);
                self.sentences
                    .push(Sentence::new(tokens).expect("non-empty by construction"));
            }
        }

        fn close(mut self) -> Result<Document, CorpusError> {
            self.flush_sentence();
            Document::new(self.id, self.domain, self.date, self.sentences)
        }
    }

    let mut open: Option<OpenDoc> = None;

    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        if let Some(header) = raw.strip_prefix("#doc") {
            if !header.starts_with(' ') && !header.is_empty() {
                // e.g. "#document": not a header we recognize, not a token line either
                return Err(VerticalError::MalformedHeader {
                    line,
                    text: raw.to_string(),
                });
            }
            let fields: Vec<&str> = header.split_whitespace().collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(VerticalError::MalformedHeader {
                    line,
                    text: raw.to_string(),
                });
            }
            let id = fields[0].to_string();
            let domain = fields[1].to_string();
            let date = match fields.get(2) {
                Some(text) => Some(NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| {
                    VerticalError::BadDate {
                        line,
                        text: text.to_string(),
                    }
                })?),
                None => None,
            };
            if !seen_ids.insert(id.clone()) {
                return Err(VerticalError::DuplicateDocId { line, id });
            }
            if let Some(prev) = open.take() {
                docs.push(prev.close()?);
            }
            open = Some(OpenDoc {
                id,
                domain,
                date,
                sentences: Vec::new(),
                tokens: Vec::new(),
            });
            continue;
        }
        if raw.trim().is_empty() {
            if let Some(doc) = open.as_mut() {
                doc.flush_sentence();
            }
            continue;
        }
        let doc = open
            .as_mut()
            .ok_or(VerticalError::TokenOutsideDocument { line })?;
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(VerticalError::FieldCount {
                line,
                found: fields.len(),
                text: raw.to_string(),
            });
        }
        let pos = fields[2]
            .parse()
            .map_err(|_| VerticalError::UnknownPos {
                line,
                tag: fields[2].to_string(),
            })?;
        let token = AnnotatedToken::new(fields[0], fields[1], pos)
            .map_err(|source| VerticalError::Token { line, source })?;
        doc.tokens.push(token);
    }
    if let Some(prev) = open.take() {
        docs.push(prev.close()?);
    }
    Ok(docs)
}

/// Serialize documents to the canonical vertical form: one header line per
/// document, one line per token, a blank line after every sentence.
pub fn write_vertical(docs: &[Document]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str("#doc ");
        out.push_str(doc.id());
        out.push(' ');
        out.push_str(doc.domain());
        if let Some(date) = doc.date() {
            out.push(' ');
            out.push_str(&date.format("%Y-%m-%d").to_string());
        }
        out.push('\n');
        for sentence in doc.sentences() {
            for token in sentence.tokens() {
                out.push_str(token.surface());
                out.push('\t');
                out.push_str(token.lemma());
                out.push('\t');
                out.push_str(token.pos().as_str());
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

/// Write each shard to `<dir>/<shard_id>.vrt` and a `manifest.tsv` beside
/// them with lines `<shard_id>\t<domain>\t<token_count>\t<path>`. Data
/// paths are recorded relative to the manifest, so the directory can be
/// moved or loaded from any working directory. Returns the manifest path.
pub fn write_shards(shards: &[Shard], dir: &Path) -> Result<PathBuf, CorpusError> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for shard in shards {
        let file = format!("{}.vrt", shard.shard_id());
        fs::write(dir.join(&file), write_vertical(shard.documents()))?;
        manifest.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            shard.shard_id(),
            shard.domain(),
            shard.token_count(),
            file
        ));
    }
    let manifest_path = dir.join("manifest.tsv");
    fs::write(&manifest_path, manifest)?;
    Ok(manifest_path)
}

/// Serialize manifest lines for shards whose data files already live at
/// `paths[i]`.
pub fn write_manifest(shards: &[Shard], paths: &[PathBuf]) -> String {
    let mut out = String::new();
    for (shard, path) in shards.iter().zip(paths) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            shard.shard_id(),
            shard.domain(),
            shard.token_count(),
            path.display()
        ));
    }
    out
}

/// Load shards listed in a manifest file. Relative data paths are resolved
/// against the manifest's directory. Every shard's recorded token count is
/// checked against the parsed data.
pub fn load_manifest(manifest_path: &Path) -> Result<Vec<Shard>, CorpusError> {
    let text = fs::read_to_string(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    let mut shards = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 {
            return Err(CorpusError::ManifestLine {
                line,
                text: raw.to_string(),
            });
        }
        let recorded: u64 = fields[2].parse().map_err(|_| CorpusError::ManifestLine {
            line,
            text: raw.to_string(),
        })?;
        let path = {
            let p = Path::new(fields[3]);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let data = fs::read_to_string(&path)?;
        let docs = parse_vertical(&data).map_err(|source| CorpusError::ShardFile {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        let shard = Shard::new(fields[0], fields[1], docs)?;
        if shard.token_count() != recorded {
            return Err(CorpusError::TokenCountMismatch {
                shard_id: shard.shard_id().to_string(),
                recorded,
                actual: shard.token_count(),
            });
        }
        shards.push(shard);
    }
    Ok(shards)
}
