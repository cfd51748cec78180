//! Reference-based sentence metrics and their corpus mean.

mod bleu;
mod rouge;
mod similarity;

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bleu::{corpus_bleu, sentence_bleu, NgramStats};
pub use rouge::rouge;
pub use similarity::{masked_sim_score, SimMode, SimilarityMatrix};

pub(crate) use bleu::bleu_normalized;
pub(crate) use rouge::rouge_normalized;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty index set")]
    EmptyIndexSet,
    #[error("{0} cannot score token sequences directly")]
    Unsupported(MetricKind),
    #[error("bleu_max_n must be at least 1")]
    BadMaxN,
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("similarity matrix has a zero dimension")]
    EmptyMatrix,
    #[error("similarity matrix: {0}")]
    Matrix(String),
    #[error("no similarity matrix for pair {0}")]
    MissingMatrix(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    #[serde(rename = "BLEU")]
    Bleu,
    #[serde(rename = "ROUGE1")]
    Rouge1,
    #[serde(rename = "ROUGE2")]
    Rouge2,
    #[serde(rename = "ROUGE_L")]
    RougeL,
    #[serde(rename = "MASKED_SIM")]
    MaskedSim,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Bleu => "BLEU",
            MetricKind::Rouge1 => "ROUGE1",
            MetricKind::Rouge2 => "ROUGE2",
            MetricKind::RougeL => "ROUGE_L",
            MetricKind::MaskedSim => "MASKED_SIM",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_'))
            .collect::<String>()
            .to_lowercase();
        match key.as_str() {
            "bleu" => Ok(MetricKind::Bleu),
            "rouge1" => Ok(MetricKind::Rouge1),
            "rouge2" => Ok(MetricKind::Rouge2),
            "rougel" => Ok(MetricKind::RougeL),
            "maskedsim" => Ok(MetricKind::MaskedSim),
            _ => Err(MetricError::UnknownMetric(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Smoothing {
    /// A zero precision `0/t` becomes `1/(t+1)`.
    Add1OnZero,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub kind: MetricKind,
    pub bleu_max_n: usize,
    pub bleu_smoothing: Smoothing,
    pub case_fold: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            kind: MetricKind::Bleu,
            bleu_max_n: 4,
            bleu_smoothing: Smoothing::Add1OnZero,
            case_fold: true,
        }
    }
}

impl MetricConfig {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if self.bleu_max_n == 0 {
            return Err(MetricError::BadMaxN);
        }
        Ok(())
    }
}

/// A sentence-level metric over token sequences. Implementors see tokens
/// that are already lowercased when [`SentenceMetric::case_fold`] is true.
pub trait SentenceMetric: Sync {
    fn case_fold(&self) -> bool {
        false
    }

    fn score_normalized(&self, refs: &[&[&str]], cand: &[&str]) -> Result<f64, MetricError>;

    /// Stable description of the metric and its settings, for reports.
    fn fingerprint(&self) -> String;

    fn score<R: AsRef<str>, C: AsRef<str>>(
        &self,
        references: &[Vec<R>],
        candidate: &[C],
    ) -> Result<f64, MetricError>
    where
        Self: Sized,
    {
        let refs = fold_all(references, self.case_fold());
        let ref_views: Vec<Vec<&str>> = refs
            .iter()
            .map(|r| r.iter().map(|s| s.as_ref()).collect())
            .collect();
        let ref_slices: Vec<&[&str]> = ref_views.iter().map(Vec::as_slice).collect();
        let cand = fold(candidate, self.case_fold());
        let cand_view: Vec<&str> = cand.iter().map(|s| s.as_ref()).collect();
        self.score_normalized(&ref_slices, &cand_view)
    }
}

impl SentenceMetric for MetricConfig {
    fn case_fold(&self) -> bool {
        self.case_fold
    }

    fn score_normalized(&self, refs: &[&[&str]], cand: &[&str]) -> Result<f64, MetricError> {
        match self.kind {
            MetricKind::Bleu => {
                self.validate()?;
                Ok(bleu_normalized(
                    refs,
                    cand,
                    self.bleu_max_n,
                    self.bleu_smoothing,
                ))
            }
            MetricKind::MaskedSim => Err(MetricError::Unsupported(self.kind)),
            kind => {
                let reference = refs.first().copied().unwrap_or(&[]);
                rouge_normalized(kind, reference, cand)
            }
        }
    }

    fn fingerprint(&self) -> String {
        match self.kind {
            MetricKind::Bleu => format!(
                "BLEU(max_n={},smoothing={},case_fold={})",
                self.bleu_max_n,
                match self.bleu_smoothing {
                    Smoothing::Add1OnZero => "ADD1_ON_ZERO",
                    Smoothing::None => "NONE",
                },
                self.case_fold
            ),
            kind => format!("{kind}(case_fold={})", self.case_fold),
        }
    }
}

pub(crate) fn fold<S: AsRef<str>>(tokens: &[S], case_fold: bool) -> Vec<Cow<'_, str>> {
    tokens
        .iter()
        .map(|t| {
            if case_fold {
                Cow::Owned(t.as_ref().to_lowercase())
            } else {
                Cow::Borrowed(t.as_ref())
            }
        })
        .collect()
}

pub(crate) fn fold_all<S: AsRef<str>>(seqs: &[Vec<S>], case_fold: bool) -> Vec<Vec<Cow<'_, str>>> {
    seqs.iter().map(|s| fold(s, case_fold)).collect()
}

/// Mean of `scores` summed front to back, so the result does not depend on
/// how the scores were computed.
pub(crate) fn ordered_mean(scores: &[f64]) -> Result<f64, MetricError> {
    if scores.is_empty() {
        return Err(MetricError::EmptyIndexSet);
    }
    let mut sum = 0.0;
    for s in scores {
        sum += s;
    }
    Ok(sum / scores.len() as f64)
}

/// Arithmetic mean of per-pair sentence scores. Pairs are scored in
/// parallel and summed in pair order.
pub fn corpus_mean<M, R, C>(pairs: &[(Vec<Vec<R>>, Vec<C>)], metric: &M) -> Result<f64, MetricError>
where
    M: SentenceMetric,
    R: AsRef<str> + Sync,
    C: AsRef<str> + Sync,
{
    let scores = pairs
        .par_iter()
        .map(|(refs, cand)| metric.score(refs, cand))
        .collect::<Result<Vec<f64>, _>>()?;
    ordered_mean(&scores)
}
