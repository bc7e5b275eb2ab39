//! Toy annotator for turning small plain-text fixtures into annotated
//! documents. It is a test and demo device, not a linguistic tool: words
//! are alphanumeric runs looked up case-insensitively in a hand-written
//! lexicon, everything else is punctuation, and `.` `!` `?` close a
//! sentence.

use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::{AnnotatedToken, CorpusError, Document, PosTag, Sentence};

/// Word form (lowercased) to (lemma, POS). Forms missing from the lexicon
/// come out as OTHER with the lowercased surface as lemma.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: BTreeMap<String, (String, PosTag)>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, form: &str, lemma: &str, pos: PosTag) -> &mut Self {
        self.entries
            .insert(form.to_lowercase(), (lemma.to_lowercase(), pos));
        self
    }

    pub fn lookup(&self, form: &str) -> Option<(&str, PosTag)> {
        self.entries
            .get(&form.to_lowercase())
            .map(|(lemma, pos)| (lemma.as_str(), *pos))
    }
}

/// Annotate plain text with the toy rules. Sentences are closed after
/// `.` `!` `?`; a trailing unterminated sentence is kept.
pub fn annotate_toy(
    id: &str,
    domain: &str,
    date: Option<NaiveDate>,
    text: &str,
    lexicon: &Lexicon,
) -> Result<Document, CorpusError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<AnnotatedToken> = Vec::new();

    let flush = |tokens: &mut Vec<AnnotatedToken>, sentences: &mut Vec<Sentence>| {
        if !tokens.is_empty() {
            sentences.push(Sentence::new(std::mem::take(tokens)).expect("non-empty"));
        }
    };

    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_alphanumeric() {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_alphanumeric() {
                    word.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            let token = match lexicon.lookup(&word) {
                Some((lemma, pos)) => AnnotatedToken::new(word.clone(), lemma, pos)?,
                None => AnnotatedToken::new(word.clone(), word.to_lowercase(), PosTag::Other)?,
            };
            tokens.push(token);
        } else if c.is_whitespace() {
            chars.next();
        } else {
            chars.next();
            let s = c.to_string();
            tokens.push(AnnotatedToken::new(s.clone(), s, PosTag::Punct)?);
            if matches!(c, '.' | '!' | '?') {
                flush(&mut tokens, &mut sentences);
            }
        }
    }
    flush(&mut tokens, &mut sentences);
    Document::new(id, domain, date, sentences)
}
