//! Word-score lexicons used as sentence scorers, and the mean
//! reference-minus-candidate gap over a corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ParallelCorpus;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("lexicon {0} has no entries")]
    Empty(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Words that flip the sign of a following sentiment word.
pub const DEFAULT_NEGATIONS: [&str; 12] = [
    "not", "no", "never", "n't", "nor", "none", "nobody", "nothing", "neither", "nowhere",
    "cannot", "without",
];

pub const DEFAULT_NEGATION_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicon {
    pub name: String,
    entries: BTreeMap<String, f64>,
    /// Empty for lexicons without negation handling.
    pub negation_words: BTreeSet<String>,
    pub negation_window: usize,
}

impl Lexicon {
    pub fn new(
        name: impl Into<String>,
        entries: BTreeMap<String, f64>,
    ) -> Result<Self, LexiconError> {
        let name = name.into();
        if entries.is_empty() {
            return Err(LexiconError::Empty(name));
        }
        if let Some((w, v)) = entries.iter().find(|(_, v)| !v.is_finite()) {
            return Err(LexiconError::Line {
                line: 0,
                message: format!("non-finite score {v} for {w:?}"),
            });
        }
        let entries = entries
            .into_iter()
            .map(|(w, v)| (w.to_lowercase(), v))
            .collect();
        Ok(Self {
            name,
            entries,
            negation_words: BTreeSet::new(),
            negation_window: DEFAULT_NEGATION_WINDOW,
        })
    }

    /// Enables sign flipping after any of `words` within `window` tokens.
    pub fn with_negation<I, S>(mut self, words: I, window: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.negation_words = words.into_iter().map(|w| w.into().to_lowercase()).collect();
        self.negation_window = window;
        self
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn handles_negation(&self) -> bool {
        !self.negation_words.is_empty()
    }

    /// Short description of how sentence scores are combined.
    pub fn rule_fingerprint(&self) -> String {
        if self.handles_negation() {
            format!(
                "mean;negation_flip(window={},words={})",
                self.negation_window,
                self.negation_words
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(",")
            )
        } else {
            "mean".to_string()
        }
    }
}

fn looks_like_header(field: &str) -> bool {
    let f = field.to_lowercase();
    !f.is_empty()
        && !matches!(f.as_str(), "nan" | "inf" | "-inf" | "+inf" | "infinity")
        && f.chars().next().is_some_and(char::is_alphabetic)
}

/// Parses `word<TAB>score` lines. A first line whose score column is a word
/// is taken as a header. Extra columns are ignored. Returns the lexicon and
/// one warning per duplicated word (the last value wins).
pub fn parse_lexicon_with_warnings(
    name: &str,
    text: &str,
) -> Result<(Lexicon, Vec<String>), LexiconError> {
    let mut entries = BTreeMap::new();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let word = cols.next().unwrap_or("").trim();
        let Some(score) = cols.next().map(str::trim) else {
            return Err(LexiconError::Line {
                line: line_no,
                message: "expected word<TAB>score".into(),
            });
        };
        if line_no == 1 && looks_like_header(score) {
            continue;
        }
        if word.is_empty() {
            return Err(LexiconError::Line {
                line: line_no,
                message: "empty word".into(),
            });
        }
        let value: f64 = score.parse().map_err(|_| LexiconError::Line {
            line: line_no,
            message: format!("unparseable score {score:?}"),
        })?;
        if !value.is_finite() {
            return Err(LexiconError::Line {
                line: line_no,
                message: format!("non-finite score {score:?}"),
            });
        }
        if entries.insert(word.to_lowercase(), value).is_some() {
            warnings.push(format!(
                "line {line_no}: duplicate word {word:?}, keeping last value"
            ));
        }
    }
    let mut lexicon = Lexicon::new(name, entries)?;
    if name.to_lowercase().contains("sentiment") {
        lexicon = lexicon.with_negation(DEFAULT_NEGATIONS, DEFAULT_NEGATION_WINDOW);
    }
    Ok((lexicon, warnings))
}

/// Parses a lexicon, logging duplicate-word warnings. Lexicons whose name
/// contains "sentiment" get the default negation rule.
pub fn parse_lexicon(name: &str, text: &str) -> Result<Lexicon, LexiconError> {
    let (lexicon, warnings) = parse_lexicon_with_warnings(name, text)?;
    for w in warnings {
        log::warn!("lexicon {name}: {w}");
    }
    Ok(lexicon)
}

pub fn load_lexicon(name: &str, path: &Path) -> Result<Lexicon, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lexicon(name, &text)
}

/// Mean lexicon score of the in-lexicon tokens, or `None` if there are
/// none. With negation enabled a word's score is negated when a negation
/// word appears within the preceding window.
pub fn score_sentence<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Option<f64> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.as_ref().to_lowercase()).collect();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, word) in lowered.iter().enumerate() {
        let Some(mut v) = lexicon.get(word) else {
            continue;
        };
        if lexicon.handles_negation() {
            let from = i.saturating_sub(lexicon.negation_window);
            if lowered[from..i]
                .iter()
                .any(|w| lexicon.negation_words.contains(w))
            {
                v = -v;
            }
        }
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerGap {
    pub scorer_name: String,
    /// `None` when no pair had a score on both sides.
    pub gap: Option<f64>,
    pub covered_pairs: usize,
}

/// Mean of `score(reference) - score(candidate)` over pairs where both
/// sides have at least one lexicon word.
pub fn scorer_gap(corpus: &ParallelCorpus, lexicon: &Lexicon) -> ScorerGap {
    let mut sum = 0.0;
    let mut covered = 0usize;
    for pair in corpus.pairs() {
        let r = score_sentence(&pair.reference().surfaces(), lexicon);
        let c = score_sentence(&pair.candidate.surfaces(), lexicon);
        if let (Some(r), Some(c)) = (r, c) {
            sum += r - c;
            covered += 1;
        }
    }
    ScorerGap {
        scorer_name: lexicon.name.clone(),
        gap: (covered > 0).then(|| sum / covered as f64),
        covered_pairs: covered,
    }
}
