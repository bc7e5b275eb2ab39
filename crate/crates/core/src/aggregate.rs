//! Combining partial extraction results and rendering the pair report.
//!
//! Merging is a pointwise sum, so tables form a commutative monoid with
//! the empty table as identity. That is the property the whole
//! distribution story rests on: however a corpus is split, merging the
//! per-shard tables gives the table of the unsplit corpus, and the
//! rendered report comes out byte-identical.

use std::fmt::Write as _;

use thiserror::Error;

use crate::patterns::PairTable;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> ReportError {
    ReportError::Malformed {
        line,
        msg: msg.into(),
    }
}

/// Sum any number of tables. Order of the inputs never affects the result.
pub fn merge_tables<'a>(tables: impl IntoIterator<Item = &'a PairTable>) -> PairTable {
    let mut out = PairTable::new();
    for table in tables {
        merge_into(&mut out, table);
    }
    out
}

/// Add `other` into `acc` pointwise.
pub fn merge_into(acc: &mut PairTable, other: &PairTable) {
    for (head, entry) in other.iter() {
        // a zero count still creates the entry, so merge loses no keys
        acc.add_noun_count(head, entry.noun_total());
        for (modifier, count) in entry.modifiers() {
            acc.add_pair_count(head, modifier, *count);
        }
    }
}

/// Render the pair report.
///
/// One line per head noun that has at least one modifier:
///
/// ```text
/// NNNNN<TAB>[HEAD]<TAB>MOD1 c1, MOD2 c2, ...
/// ```
///
/// `NNNNN` is the head's total noun frequency zero-padded to width 5,
/// heads are ordered by that total descending (ties by head ascending),
/// modifiers alphabetically ascending, lemmas uppercased. `top_k` keeps
/// only the first `k` lines.
pub fn render_report(table: &PairTable, top_k: Option<usize>) -> String {
    let mut heads: Vec<_> = table
        .iter()
        .filter(|(_, entry)| !entry.modifiers().is_empty())
        .collect();
    heads.sort_by(|(ah, ae), (bh, be)| {
        be.noun_total()
            .cmp(&ae.noun_total())
            .then_with(|| ah.cmp(bh))
    });
    if let Some(k) = top_k {
        heads.truncate(k);
    }
    let mut out = String::new();
    for (head, entry) in heads {
        let mods = entry
            .modifiers()
            .iter()
            .map(|(m, c)| format!("{} {}", m.to_uppercase(), c))
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(
            out,
            "{:05}\t[{}]\t{}",
            entry.noun_total(),
            head.to_uppercase(),
            mods
        )
        .expect("string write");
    }
    out
}

/// Parse a rendered report back into a table. Tolerates ragged spacing
/// around the modifier commas and a trailing comma; rejects duplicate
/// heads and malformed fields. Heads that never appeared in the report
/// (nouns without modifiers) are gone for good, so this inverts
/// [`render_report`] only on the rendered subset.
pub fn parse_report(text: &str) -> Result<PairTable, ReportError> {
    let mut table = PairTable::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 3 {
            return Err(malformed(
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let total: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| malformed(line, format!("bad frequency field {:?}", fields[0])))?;
        let head = fields[1]
            .trim()
            .strip_prefix('[')
            .and_then(|h| h.strip_suffix(']'))
            .ok_or_else(|| malformed(line, format!("head must be bracketed, got {:?}", fields[1])))?
            .to_lowercase();
        if head.is_empty() {
            return Err(malformed(line, "empty head"));
        }
        if table.get(&head).is_some() {
            return Err(malformed(line, format!("duplicate head {head:?}")));
        }
        table.add_noun_count(&head, total);
        for entry in fields[2].split(',') {
            let entry = entry.trim();
            if entry.is_empty() {
                continue;
            }
            let (lemma, count) = entry
                .rsplit_once(' ')
                .ok_or_else(|| malformed(line, format!("bad modifier entry {entry:?}")))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|_| malformed(line, format!("bad modifier count in {entry:?}")))?;
            table.add_pair_count(&head, &lemma.trim().to_lowercase(), count);
        }
        if table.get(&head).map(|e| e.modifiers().is_empty()) == Some(true) {
            return Err(malformed(line, "report line lists no modifiers"));
        }
    }
    Ok(table)
}

/// Serialize a table losslessly: a `total` line per head (ascending),
/// then one `pair` line per modifier (ascending).
///
/// ```text
/// total<TAB><head><TAB><noun_total>
/// pair<TAB><head><TAB><modifier><TAB><count>
/// ```
pub fn write_pairs_tsv(table: &PairTable) -> String {
    let mut out = String::new();
    for (head, entry) in table.iter() {
        writeln!(out, "total\t{}\t{}", head, entry.noun_total()).expect("string write");
        for (modifier, count) in entry.modifiers() {
            writeln!(out, "pair\t{head}\t{modifier}\t{count}").expect("string write");
        }
    }
    out
}

/// Parse [`write_pairs_tsv`] output. A `pair` line may name a head without
/// a preceding `total` line; duplicate `total` lines for one head are
/// rejected.
pub fn read_pairs_tsv(text: &str) -> Result<PairTable, ReportError> {
    let mut table = PairTable::new();
    let mut seen_totals = std::collections::BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        match fields.as_slice() {
            ["total", head, total] => {
                if !seen_totals.insert(head.to_string()) {
                    return Err(malformed(line, format!("duplicate total for {head:?}")));
                }
                let total: u64 = total
                    .parse()
                    .map_err(|_| malformed(line, format!("bad total {total:?}")))?;
                table.add_noun_count(head, total);
            }
            ["pair", head, modifier, count] => {
                let count: u64 = count
                    .parse()
                    .map_err(|_| malformed(line, format!("bad count {count:?}")))?;
                table.add_pair_count(head, modifier, count);
            }
            _ => {
                return Err(malformed(line, format!("unrecognized line {raw:?}")));
            }
        }
    }
    Ok(table)
}
