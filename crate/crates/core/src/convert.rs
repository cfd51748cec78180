//! Conversion from a simple tab-separated tagged format to the corpus model.
//!
//! Each line is `pair_id<TAB>candidate<TAB>reference[<TAB>reference...]`.
//! A sentence is space-separated `token/TAG` items, where `TAG` is one or
//! more labels joined by `|`. Plain labels become `POS:` features, BIO
//! labels (`B-LOC`, `I-LOC`) become multi-token `NER:` spans, `O` is
//! ignored and labels containing `:` are used as given. Items without a
//! tag are untagged tokens.

use std::collections::{BTreeMap, HashSet};

use crate::corpus::{AnnotatedSentence, CorpusError, ParallelCorpus, SentenceError, SentencePair};
use crate::masking::is_reserved;

fn is_tag(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| {
            c.is_ascii_uppercase() || c.is_ascii_digit() || matches!(c, '-' | ':' | '|' | '_')
        })
}

/// Splits `token/TAG` at the last slash when the suffix looks like a tag.
fn split_item(item: &str) -> (&str, Vec<&str>) {
    match item.rsplit_once('/') {
        Some((token, tag)) if !token.is_empty() && is_tag(tag) => {
            (token, tag.split('|').filter(|l| !l.is_empty()).collect())
        }
        _ => (item, Vec::new()),
    }
}

fn parse_sentence(text: &str) -> Result<AnnotatedSentence, SentenceError> {
    let mut tokens = Vec::new();
    let mut spans: Vec<(usize, usize, String)> = Vec::new();
    // Open BIO span per entity type: (start, type).
    let mut open: BTreeMap<String, usize> = BTreeMap::new();
    for (i, item) in text.split_whitespace().enumerate() {
        let (token, labels) = split_item(item);
        tokens.push(token.to_string());
        let mut continued = HashSet::new();
        for label in labels {
            if label == "O" {
                continue;
            }
            if let Some(kind) = label.strip_prefix("I-") {
                if open.contains_key(kind) {
                    continued.insert(kind.to_string());
                } else {
                    open.insert(kind.to_string(), i);
                    continued.insert(kind.to_string());
                }
            } else if let Some(kind) = label.strip_prefix("B-") {
                if let Some(start) = open.remove(kind) {
                    spans.push((start, i, format!("NER:{kind}")));
                }
                open.insert(kind.to_string(), i);
                continued.insert(kind.to_string());
            } else if label.contains(':') {
                spans.push((i, i + 1, label.to_string()));
            } else {
                spans.push((i, i + 1, format!("POS:{label}")));
            }
        }
        let closed: Vec<String> = open
            .keys()
            .filter(|k| !continued.contains(*k))
            .cloned()
            .collect();
        for kind in closed {
            let start = open.remove(&kind).expect("key present");
            spans.push((start, i, format!("NER:{kind}")));
        }
    }
    let end = tokens.len();
    for (kind, start) in open {
        spans.push((start, end, format!("NER:{kind}")));
    }
    spans.sort();
    AnnotatedSentence::new(tokens, spans)
}

/// Parses the tagged format into a corpus with the given metadata.
pub fn parse_tagged(
    text: &str,
    metadata: BTreeMap<String, String>,
) -> Result<ParallelCorpus, CorpusError> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(CorpusError::Malformed {
                line: line_no,
                message: "expected pair_id, candidate and at least one reference".into(),
            });
        }
        let pair_id = cols[0].trim().to_string();
        if !seen.insert(pair_id.clone()) {
            return Err(CorpusError::DuplicatePairId {
                line: line_no,
                pair_id,
            });
        }
        let sentence = |text: &str| {
            parse_sentence(text).map_err(|source| match source {
                SentenceError::Overlap(feature) => CorpusError::OverlappingSpans {
                    line: line_no,
                    pair_id: pair_id.clone(),
                    feature,
                },
                source => CorpusError::Sentence {
                    line: line_no,
                    pair_id: pair_id.clone(),
                    source,
                },
            })
        };
        let candidate = sentence(cols[1])?;
        let references = cols[2..]
            .iter()
            .map(|c| sentence(c))
            .collect::<Result<Vec<_>, _>>()?;
        let reserved = references
            .iter()
            .chain(std::iter::once(&candidate))
            .flat_map(|s| s.tokens())
            .find(|t| is_reserved(&t.surface));
        if let Some(t) = reserved {
            return Err(CorpusError::ReservedToken {
                line: line_no,
                pair_id,
                token: t.surface.clone(),
            });
        }
        pairs.push(SentencePair::new(pair_id, references, candidate));
    }
    ParallelCorpus::new(pairs, metadata)
}
