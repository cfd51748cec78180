//! Annotated parallel corpora: tokens, feature spans, and the JSONL
//! ingestion format.
//!
//! A corpus file holds one [`SentencePair`] per line:
//!
//! ```text
//! {"pair_id": "p1", "refs": [{"tokens": [...], "spans": [{"start": 2, "end": 3, "feature": "POS:NOUN"}]}], "cand": {...}, "meta": {...}}
//! ```
//!
//! Tokenization happens upstream. The engine never re-tokenizes, so span
//! indices stay stable from ingestion through masking and scoring.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::is_reserved;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SentenceError {
    #[error("token {0} is empty")]
    EmptyToken(usize),
    #[error("token {0} contains whitespace")]
    WhitespaceToken(usize),
    #[error("span [{start}, {end}) is out of bounds for a sentence of {len} tokens")]
    SpanOutOfBounds {
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("span feature id is empty")]
    EmptyFeature,
    #[error("overlapping spans for feature {0}")]
    Overlap(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    Empty,
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: overlapping spans in {pair_id} (feature {feature})")]
    OverlappingSpans {
        line: usize,
        pair_id: String,
        feature: String,
    },
    #[error("line {line}: invalid sentence in {pair_id}: {source}")]
    Sentence {
        line: usize,
        pair_id: String,
        source: SentenceError,
    },
    #[error("line {line}: duplicate pair_id {pair_id}")]
    DuplicatePairId { line: usize, pair_id: String },
    #[error("line {line}: pair {pair_id} has no references")]
    NoReferences { line: usize, pair_id: String },
    #[error("line {line}: reserved mask token {token:?} in {pair_id}")]
    ReservedToken {
        line: usize,
        pair_id: String,
        token: String,
    },
    #[error("metadata file {path}: {message}")]
    Metadata { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] std::io::Error),
}

/// A single whitespace-free token and its position in the sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

/// A half-open token range `[start, end)` carrying one feature label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub feature_id: String,
    /// Covered tokens, lowercased and joined by single spaces.
    pub surface_form: String,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// A tokenized sentence plus its feature spans.
///
/// Spans sharing a feature id never overlap; spans of different features may.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSentence {
    tokens: Vec<Token>,
    lowered: Vec<String>,
    spans: Vec<Span>,
    raw: Option<String>,
}

impl AnnotatedSentence {
    /// Builds a sentence from surface tokens and `(start, end, feature_id)`
    /// triples, checking every token and span invariant.
    pub fn new<S, F>(tokens: Vec<S>, spans: Vec<(usize, usize, F)>) -> Result<Self, SentenceError>
    where
        S: Into<String>,
        F: Into<String>,
    {
        let tokens: Vec<Token> = tokens
            .into_iter()
            .enumerate()
            .map(|(index, s)| Token {
                surface: s.into(),
                index,
            })
            .collect();
        for token in &tokens {
            if token.surface.is_empty() {
                return Err(SentenceError::EmptyToken(token.index));
            }
            if token.surface.chars().any(char::is_whitespace) {
                return Err(SentenceError::WhitespaceToken(token.index));
            }
        }
        let lowered: Vec<String> = tokens.iter().map(|t| t.surface.to_lowercase()).collect();
        let len = tokens.len();

        let mut built = Vec::with_capacity(spans.len());
        for (start, end, feature) in spans {
            let feature_id: String = feature.into();
            if feature_id.is_empty() {
                return Err(SentenceError::EmptyFeature);
            }
            if start >= end || end > len {
                return Err(SentenceError::SpanOutOfBounds { start, end, len });
            }
            built.push(Span {
                start,
                end,
                surface_form: lowered[start..end].join(" "),
                feature_id,
            });
        }

        let mut by_feature: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
        for span in &built {
            by_feature
                .entry(span.feature_id.as_str())
                .or_default()
                .push((span.start, span.end));
        }
        for (feature, mut ranges) in by_feature {
            ranges.sort_unstable();
            if ranges.windows(2).any(|w| w[1].0 < w[0].1) {
                return Err(SentenceError::Overlap(feature.to_string()));
            }
        }

        Ok(Self {
            tokens,
            lowered,
            spans: built,
            raw: None,
        })
    }

    pub fn with_raw(mut self, raw: impl Into<String>) -> Self {
        self.raw = Some(raw.into());
        self
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn raw(&self) -> Option<&str> {
        self.raw.as_deref()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    /// Lowercased surfaces, index-aligned with [`tokens`](Self::tokens).
    pub fn lowered(&self) -> &[String] {
        &self.lowered
    }
}

/// A candidate and its references. `references[0]` is the primary reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub pair_id: String,
    pub references: Vec<AnnotatedSentence>,
    pub candidate: AnnotatedSentence,
    pub meta: BTreeMap<String, String>,
}

impl SentencePair {
    pub fn new(
        pair_id: impl Into<String>,
        references: Vec<AnnotatedSentence>,
        candidate: AnnotatedSentence,
    ) -> Self {
        Self {
            pair_id: pair_id.into(),
            references,
            candidate,
            meta: BTreeMap::new(),
        }
    }

    pub fn reference(&self) -> &AnnotatedSentence {
        &self.references[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
    pub metadata: BTreeMap<String, String>,
}

impl ParallelCorpus {
    /// Checks the structural invariants: at least one pair, every pair has a
    /// reference, and pair ids are unique.
    pub fn new(
        pairs: Vec<SentencePair>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self, CorpusError> {
        if pairs.is_empty() {
            return Err(CorpusError::Empty);
        }
        let mut seen = HashSet::new();
        for (i, pair) in pairs.iter().enumerate() {
            if pair.references.is_empty() {
                return Err(CorpusError::NoReferences {
                    line: i + 1,
                    pair_id: pair.pair_id.clone(),
                });
            }
            if !seen.insert(pair.pair_id.as_str()) {
                return Err(CorpusError::DuplicatePairId {
                    line: i + 1,
                    pair_id: pair.pair_id.clone(),
                });
            }
        }
        Ok(Self { pairs, metadata })
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Writes the pairs as corpus JSONL. Corpus-level metadata goes to the
    /// sidecar file instead, see [`write_metadata`].
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for pair in &self.pairs {
            let record = Record::from(pair);
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordSpan {
    start: usize,
    end: usize,
    feature: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordSentence {
    tokens: Vec<String>,
    #[serde(default)]
    spans: Vec<RecordSpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    raw: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    pair_id: String,
    refs: Vec<RecordSentence>,
    cand: RecordSentence,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
}

impl From<&AnnotatedSentence> for RecordSentence {
    fn from(s: &AnnotatedSentence) -> Self {
        Self {
            tokens: s.tokens.iter().map(|t| t.surface.clone()).collect(),
            spans: s
                .spans
                .iter()
                .map(|sp| RecordSpan {
                    start: sp.start,
                    end: sp.end,
                    feature: sp.feature_id.clone(),
                })
                .collect(),
            raw: s.raw.clone(),
        }
    }
}

impl From<&SentencePair> for Record {
    fn from(p: &SentencePair) -> Self {
        Self {
            pair_id: p.pair_id.clone(),
            refs: p.references.iter().map(RecordSentence::from).collect(),
            cand: RecordSentence::from(&p.candidate),
            meta: p.meta.clone(),
        }
    }
}

fn build_sentence(
    record: RecordSentence,
    line: usize,
    pair_id: &str,
) -> Result<AnnotatedSentence, CorpusError> {
    if let Some(token) = record.tokens.iter().find(|t| is_reserved(t)) {
        return Err(CorpusError::ReservedToken {
            line,
            pair_id: pair_id.to_string(),
            token: token.clone(),
        });
    }
    let spans = record
        .spans
        .into_iter()
        .map(|s| (s.start, s.end, s.feature))
        .collect();
    let sentence = AnnotatedSentence::new(record.tokens, spans).map_err(|e| match e {
        SentenceError::Overlap(feature) => CorpusError::OverlappingSpans {
            line,
            pair_id: pair_id.to_string(),
            feature,
        },
        source => CorpusError::Sentence {
            line,
            pair_id: pair_id.to_string(),
            source,
        },
    })?;
    Ok(match record.raw {
        Some(raw) => sentence.with_raw(raw),
        None => sentence,
    })
}

/// Parses corpus JSONL, preserving line order. Blank lines are skipped.
///
/// Tokens containing the reserved mask brackets are rejected here: a
/// collision would silently corrupt oracle scores.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<ParallelCorpus, CorpusError> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.refs.is_empty() {
            return Err(CorpusError::NoReferences {
                line: line_no,
                pair_id: record.pair_id,
            });
        }
        if !seen.insert(record.pair_id.clone()) {
            return Err(CorpusError::DuplicatePairId {
                line: line_no,
                pair_id: record.pair_id,
            });
        }
        let pair_id = record.pair_id;
        let references = record
            .refs
            .into_iter()
            .map(|r| build_sentence(r, line_no, &pair_id))
            .collect::<Result<Vec<_>, _>>()?;
        let candidate = build_sentence(record.cand, line_no, &pair_id)?;
        pairs.push(SentencePair {
            pair_id,
            references,
            candidate,
            meta: record.meta,
        });
    }
    ParallelCorpus::new(pairs, BTreeMap::new())
}

pub fn parse_corpus_str(text: &str) -> Result<ParallelCorpus, CorpusError> {
    parse_corpus(text.as_bytes())
}

/// Default sidecar location: `<corpus>.meta.json`.
pub fn sidecar_path(corpus_path: &Path) -> PathBuf {
    let mut name = corpus_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn read_metadata(path: &Path) -> Result<BTreeMap<String, String>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Metadata {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_metadata(path: &Path, metadata: &BTreeMap<String, String>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(metadata)?;
    std::fs::write(path, text + "\n")
}

/// Loads a corpus file. Metadata comes from `meta_path` when given, else
/// from the default sidecar if one exists.
pub fn load_corpus(path: &Path, meta_path: Option<&Path>) -> Result<ParallelCorpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut corpus = parse_corpus(BufReader::new(file))?;
    let sidecar = sidecar_path(path);
    match meta_path {
        Some(p) => corpus.metadata = read_metadata(p)?,
        None if sidecar.is_file() => corpus.metadata = read_metadata(&sidecar)?,
        None => {}
    }
    Ok(corpus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub pair_id: String,
    pub message: String,
}

/// Reports reserved mask tokens (errors) and empty candidates (warnings).
/// Type invariants are enforced at construction, so a corpus returned by
/// [`parse_corpus`] never yields an error here.
pub fn validate_corpus(corpus: &ParallelCorpus) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for pair in corpus.pairs() {
        let reserved = pair
            .references
            .iter()
            .chain(std::iter::once(&pair.candidate))
            .flat_map(|s| s.tokens())
            .any(|t| is_reserved(&t.surface));
        if reserved {
            out.push(Diagnostic {
                severity: Severity::Error,
                pair_id: pair.pair_id.clone(),
                message: format!("reserved mask token in {}", pair.pair_id),
            });
        }
        if pair.candidate.is_empty() {
            out.push(Diagnostic {
                severity: Severity::Warning,
                pair_id: pair.pair_id.clone(),
                message: format!("empty candidate in {}", pair.pair_id),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"{"pair_id":"p1","refs":[{"tokens":["John","likes","apples"],"spans":[{"start":2,"end":3,"feature":"POS:NOUN"}]}],"cand":{"tokens":["John","loves","apples"],"spans":[{"start":2,"end":3,"feature":"POS:NOUN"}]}}"#;

    fn sentence(tokens: &[&str]) -> AnnotatedSentence {
        AnnotatedSentence::new(tokens.to_vec(), Vec::<(usize, usize, String)>::new()).unwrap()
    }

    #[test]
    fn parses_single_record() {
        let corpus = parse_corpus_str(ONE).unwrap();
        assert_eq!(corpus.len(), 1);
        let pair = &corpus.pairs()[0];
        assert_eq!(pair.pair_id, "p1");
        assert_eq!(pair.references.len(), 1);
        assert_eq!(pair.reference().spans()[0].surface_form, "apples");
        assert_eq!(pair.candidate.surfaces(), vec!["John", "loves", "apples"]);
    }

    #[test]
    fn empty_stream_is_rejected() {
        let err = parse_corpus_str("").unwrap_err();
        assert_eq!(err.to_string(), "empty corpus");
        assert!(matches!(parse_corpus_str("\n\n"), Err(CorpusError::Empty)));
    }

    #[test]
    fn overlapping_spans_name_pair() {
        let line = r#"{"pair_id":"p1","refs":[{"tokens":["a","b","c","d"],"spans":[{"start":1,"end":3,"feature":"POS:NOUN"},{"start":2,"end":4,"feature":"POS:NOUN"}]}],"cand":{"tokens":["a"]}}"#;
        let err = parse_corpus_str(line).unwrap_err();
        assert!(err.to_string().contains("overlapping spans in p1"), "{err}");
        assert!(err.to_string().contains("POS:NOUN"));
    }

    #[test]
    fn overlap_across_features_is_fine() {
        let s = AnnotatedSentence::new(
            vec!["Northern", "Lapland"],
            vec![(0, 2, "NER:LOC"), (1, 2, "POS:PROPN")],
        );
        assert!(s.is_ok());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{ONE}\nnot json\n");
        match parse_corpus_str(&text).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_pair_id_is_rejected() {
        let text = format!("{ONE}\n{ONE}\n");
        assert!(matches!(
            parse_corpus_str(&text),
            Err(CorpusError::DuplicatePairId { line: 2, .. })
        ));
    }

    #[test]
    fn bad_spans_and_tokens() {
        assert_eq!(
            AnnotatedSentence::new(vec!["a"], vec![(0, 2, "X")]).unwrap_err(),
            SentenceError::SpanOutOfBounds {
                start: 0,
                end: 2,
                len: 1
            }
        );
        assert_eq!(
            AnnotatedSentence::new(vec!["a"], vec![(0, 0, "X")]).unwrap_err(),
            SentenceError::SpanOutOfBounds {
                start: 0,
                end: 0,
                len: 1
            }
        );
        assert_eq!(
            AnnotatedSentence::new(vec!["a b"], Vec::<(usize, usize, String)>::new()).unwrap_err(),
            SentenceError::WhitespaceToken(0)
        );
        assert_eq!(
            AnnotatedSentence::new(vec![""], Vec::<(usize, usize, String)>::new()).unwrap_err(),
            SentenceError::EmptyToken(0)
        );
    }

    #[test]
    fn reserved_token_rejected_at_ingestion() {
        let line = r#"{"pair_id":"p1","refs":[{"tokens":["a"]}],"cand":{"tokens":["⟦POS:NOUN⟧"]}}"#;
        assert!(matches!(
            parse_corpus_str(line),
            Err(CorpusError::ReservedToken { .. })
        ));
    }

    #[test]
    fn validate_well_formed_corpus_is_clean() {
        let pairs = vec![
            SentencePair::new("p1", vec![sentence(&["a", "b"])], sentence(&["a", "b"])),
            SentencePair::new("p2", vec![sentence(&["c"])], sentence(&["d"])),
        ];
        let corpus = ParallelCorpus::new(pairs, BTreeMap::new()).unwrap();
        assert!(validate_corpus(&corpus).is_empty());
    }

    #[test]
    fn validate_flags_reserved_token() {
        let pairs = vec![SentencePair::new(
            "p1",
            vec![sentence(&["apples"])],
            sentence(&["⟦POS:NOUN⟧"]),
        )];
        let corpus = ParallelCorpus::new(pairs, BTreeMap::new()).unwrap();
        let diags = validate_corpus(&corpus);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Error);
        assert_eq!(diags[0].message, "reserved mask token in p1");
    }

    #[test]
    fn validate_warns_on_empty_candidate() {
        let pairs = vec![SentencePair::new(
            "p1",
            vec![sentence(&["a"])],
            sentence(&[]),
        )];
        let corpus = ParallelCorpus::new(pairs, BTreeMap::new()).unwrap();
        let diags = validate_corpus(&corpus);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].severity, Severity::Warning);
    }

    #[test]
    fn metadata_sidecar_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(&path, ONE).unwrap();
        let meta: BTreeMap<String, String> =
            [("system", "s1"), ("langs", "de-en"), ("year", "2019")]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
        write_metadata(&sidecar_path(&path), &meta).unwrap();
        let corpus = load_corpus(&path, None).unwrap();
        assert_eq!(corpus.metadata, meta);
    }
}
