//! Per-feature decomposition of reference-based text generation metrics.
//!
//! A feature (a POS tag, a named-entity type, gendered pronouns, ...) is
//! masked in both the reference and the candidate, once with a shared token
//! (the best case for the feature) and once with two distinct tokens (the
//! worst case). Where the unmasked score sits between the two tells how much
//! of the metric's remaining headroom is lost on that feature:
//!
//! ```text
//! muler = (max - base) / (max - min)
//! ```
//!
//! Lower is better: 0 means the feature is handled as well as a perfect
//! system would, 1 means as badly as a system that always gets it wrong.

pub mod analysis;
pub mod cli;
pub mod convert;
pub mod corpus;
pub mod features;
pub mod lexicon;
pub mod masking;
pub mod metrics;
pub mod scoring;
pub mod validation;

use thiserror::Error;

pub use corpus::{AnnotatedSentence, ParallelCorpus, SentencePair, Span, Token};
pub use features::{FeatureSpec, FeatureStats, SplitSpec};
pub use masking::{MaskStrategy, MaskedPair};
pub use metrics::{MetricConfig, MetricKind, SentenceMetric};
pub use scoring::{MulerEntry, MulerReport};

/// Any error the library can return, split by whether the input or the
/// computation was at fault.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Feature(#[from] features::FeatureError),
    #[error(transparent)]
    Lexicon(#[from] lexicon::LexiconError),
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
    #[error(transparent)]
    Mask(#[from] masking::MaskError),
    #[error(transparent)]
    Metric(#[from] metrics::MetricError),
    #[error(transparent)]
    Scoring(#[from] scoring::ScoringError),
    #[error("{0}")]
    Usage(String),
    #[error("writing {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for failed computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Corpus(_)
            | Error::Feature(_)
            | Error::Lexicon(_)
            | Error::Analysis(_)
            | Error::Usage(_) => 2,
            Error::Metric(metrics::MetricError::Io { .. })
            | Error::Metric(metrics::MetricError::Matrix(_))
            | Error::Metric(metrics::MetricError::UnknownMetric(_)) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Corpus(_) => "corpus",
            Error::Feature(_) => "feature",
            Error::Lexicon(_) => "lexicon",
            Error::Analysis(_) => "analysis",
            Error::Mask(_) => "masking",
            Error::Metric(_) => "metric",
            Error::Scoring(_) => "scoring",
            Error::Usage(_) => "usage",
            Error::Output { .. } => "output",
        }
    }
}
