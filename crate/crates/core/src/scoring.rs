//! Index sets, oracle and anti-oracle extremes, MuLER scores, the
//! discrepancy breakdown and per-feature reports.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{ParallelCorpus, SentencePair};
use crate::features::{feature_stats, FeatureSpec, Matcher, Side, GENDER_PRONOUNS};
use crate::lexicon::{scorer_gap, Lexicon};
use crate::masking::{mask_view, MaskError, MaskStrategy, MaskTokens, PairSide};
use crate::metrics::{
    corpus_bleu, masked_sim_score, ordered_mean, MetricConfig, MetricError, MetricKind,
    SentenceMetric, SimMode, SimilarityMatrix,
};

/// Width below which `max - min` counts as a degenerate interval.
pub const DEGENERATE_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("feature absent from aligned pairs: {0}")]
    FeatureAbsent(String),
    #[error("{0} masking is not defined for similarity matrices")]
    UnsupportedStrategy(&'static str),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("pair {pair_id}: {source}")]
    Mask {
        pair_id: String,
        #[source]
        source: MaskError,
    },
}

/// Positions of pairs whose primary reference and candidate both contain
/// the feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    pub feature_id: String,
    pub indices: Vec<usize>,
}

impl IndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn select_indices(corpus: &ParallelCorpus, feature: &FeatureSpec) -> IndexSet {
    let indices = corpus
        .pairs()
        .iter()
        .enumerate()
        .filter(|(_, p)| feature.is_present(p.reference()) && feature.is_present(&p.candidate))
        .map(|(i, _)| i)
        .collect();
    IndexSet {
        feature_id: feature.feature_id.clone(),
        indices,
    }
}

/// What scores a pair: a token-level metric, or precomputed similarity
/// matrices keyed by pair id.
#[derive(Clone, Copy)]
pub enum Scorer<'a> {
    Tokens(&'a dyn SentenceMetric),
    Matrices(&'a BTreeMap<String, SimilarityMatrix>),
}

impl std::fmt::Debug for Scorer<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scorer::Tokens(m) => write!(f, "Tokens({})", m.fingerprint()),
            Scorer::Matrices(m) => write!(f, "Matrices({} pairs)", m.len()),
        }
    }
}

impl Scorer<'_> {
    pub fn fingerprint(&self) -> String {
        match self {
            Scorer::Tokens(m) => m.fingerprint(),
            Scorer::Matrices(_) => "MASKED_SIM(greedy_f1)".to_string(),
        }
    }
}

/// Token views of one pair, lowercased when the metric folds case.
struct PairView<'c> {
    refs: Vec<Vec<&'c str>>,
    cand: Vec<&'c str>,
}

/// A corpus bound to a scorer, with the unmasked per-pair scores cached.
pub struct Evaluation<'a> {
    corpus: &'a ParallelCorpus,
    scorer: Scorer<'a>,
    views: Vec<PairView<'a>>,
    base: Vec<f64>,
}

fn view_of(sentence: &crate::corpus::AnnotatedSentence, fold: bool) -> Vec<&str> {
    if fold {
        sentence.lowered().iter().map(String::as_str).collect()
    } else {
        sentence
            .tokens()
            .iter()
            .map(|t| t.surface.as_str())
            .collect()
    }
}

/// Mask flags for a matrix: per covered token when the matrix is sized to
/// the sentence tokens, otherwise the flags stored with the matrix.
fn matrix_for<'m>(
    pair: &SentencePair,
    feature: &FeatureSpec,
    matrix: &'m SimilarityMatrix,
) -> Result<std::borrow::Cow<'m, SimilarityMatrix>, MetricError> {
    let (r, c) = (pair.reference(), &pair.candidate);
    if matrix.rows() != r.len() || matrix.cols() != c.len() {
        return Ok(std::borrow::Cow::Borrowed(matrix));
    }
    let flags = |s: &crate::corpus::AnnotatedSentence| {
        let mut f = vec![false; s.len()];
        for (start, end) in feature.ranges(s) {
            f[start..end].iter_mut().for_each(|x| *x = true);
        }
        f
    };
    Ok(std::borrow::Cow::Owned(
        matrix.with_flags(flags(r), flags(c))?,
    ))
}

impl<'a> Evaluation<'a> {
    pub fn new(corpus: &'a ParallelCorpus, scorer: Scorer<'a>) -> Result<Self, ScoringError> {
        let fold = match scorer {
            Scorer::Tokens(m) => m.case_fold(),
            Scorer::Matrices(_) => false,
        };
        let views: Vec<PairView> = corpus
            .pairs()
            .iter()
            .map(|p| PairView {
                refs: p.references.iter().map(|r| view_of(r, fold)).collect(),
                cand: view_of(&p.candidate, fold),
            })
            .collect();
        let mut eval = Self {
            corpus,
            scorer,
            views,
            base: Vec::new(),
        };
        eval.base = (0..corpus.len())
            .into_par_iter()
            .map(|i| eval.unmasked_score(i))
            .collect::<Result<_, _>>()?;
        Ok(eval)
    }

    pub fn corpus(&self) -> &ParallelCorpus {
        self.corpus
    }

    pub fn scorer(&self) -> Scorer<'a> {
        self.scorer
    }

    /// Unmasked sentence scores of every pair, in corpus order.
    pub fn pair_scores(&self) -> &[f64] {
        &self.base
    }

    fn matrix(&self, i: usize) -> Result<&SimilarityMatrix, MetricError> {
        let Scorer::Matrices(m) = self.scorer else {
            unreachable!("matrix lookup on a token scorer")
        };
        let id = &self.corpus.pairs()[i].pair_id;
        m.get(id)
            .ok_or_else(|| MetricError::MissingMatrix(id.clone()))
    }

    fn unmasked_score(&self, i: usize) -> Result<f64, ScoringError> {
        match self.scorer {
            Scorer::Tokens(metric) => {
                let v = &self.views[i];
                let refs: Vec<&[&str]> = v.refs.iter().map(Vec::as_slice).collect();
                Ok(metric.score_normalized(&refs, &v.cand)?)
            }
            Scorer::Matrices(_) => Ok(masked_sim_score(self.matrix(i)?, SimMode::Plain)?),
        }
    }

    /// Sentence score of pair `i` after masking `feature` with `strategy`.
    pub fn masked_score(
        &self,
        i: usize,
        feature: &FeatureSpec,
        strategy: &MaskStrategy,
    ) -> Result<f64, ScoringError> {
        let pair = &self.corpus.pairs()[i];
        match self.scorer {
            Scorer::Tokens(metric) => {
                let masks = MaskTokens::for_feature(&feature.feature_id);
                let view = &self.views[i];
                let mask_err = |source| ScoringError::Mask {
                    pair_id: pair.pair_id.clone(),
                    source,
                };
                let refs = pair
                    .references
                    .iter()
                    .zip(&view.refs)
                    .map(|(s, toks)| {
                        mask_view(
                            toks,
                            s.lowered(),
                            &feature.ranges(s),
                            strategy,
                            PairSide::Reference,
                            &masks,
                            None,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(mask_err)?;
                let cand = mask_view(
                    &view.cand,
                    pair.candidate.lowered(),
                    &feature.ranges(&pair.candidate),
                    strategy,
                    PairSide::Candidate,
                    &masks,
                    None,
                )
                .map_err(mask_err)?;
                let ref_slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
                Ok(metric.score_normalized(&ref_slices, &cand)?)
            }
            Scorer::Matrices(_) => {
                let mode = match strategy {
                    MaskStrategy::Oracle => SimMode::Oracle,
                    MaskStrategy::AntiOracle => SimMode::AntiOracle,
                    MaskStrategy::Hybrid(_) => {
                        return Err(ScoringError::UnsupportedStrategy("hybrid"))
                    }
                    MaskStrategy::Partial(_) => {
                        return Err(ScoringError::UnsupportedStrategy("partial"))
                    }
                };
                let matrix = matrix_for(pair, feature, self.matrix(i)?)?;
                Ok(masked_sim_score(&matrix, mode)?)
            }
        }
    }

    /// Mean unmasked score over `indices`.
    pub fn base_mean(&self, indices: &[usize]) -> Result<f64, ScoringError> {
        let scores: Vec<f64> = indices.iter().map(|&i| self.base[i]).collect();
        Ok(ordered_mean(&scores)?)
    }

    /// Mean unmasked score over the whole corpus.
    pub fn overall(&self) -> f64 {
        ordered_mean(&self.base).unwrap_or(0.0)
    }

    /// Mean masked score over `indices`, summed in index order.
    pub fn strategy_mean(
        &self,
        feature: &FeatureSpec,
        strategy: &MaskStrategy,
        indices: &[usize],
    ) -> Result<f64, ScoringError> {
        let scores = indices
            .par_iter()
            .map(|&i| self.masked_score(i, feature, strategy))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(ordered_mean(&scores)?)
    }

    pub fn extremes(&self, feature: &FeatureSpec) -> Result<Extremes, ScoringError> {
        let index_set = select_indices(self.corpus, feature);
        self.extremes_over(feature, &index_set)
    }

    pub fn extremes_over(
        &self,
        feature: &FeatureSpec,
        index_set: &IndexSet,
    ) -> Result<Extremes, ScoringError> {
        if index_set.is_empty() {
            return Err(ScoringError::FeatureAbsent(feature.feature_id.clone()));
        }
        let idx = &index_set.indices;
        Ok(Extremes {
            base: self.base_mean(idx)?,
            max: self.strategy_mean(feature, &MaskStrategy::Oracle, idx)?,
            min: self.strategy_mean(feature, &MaskStrategy::AntiOracle, idx)?,
            n_indices: idx.len(),
        })
    }
}

/// Unmasked, oracle and anti-oracle means over a feature's index set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub base: f64,
    pub max: f64,
    pub min: f64,
    pub n_indices: usize,
}

/// Extremes of `feature` under a token metric.
pub fn compute_extremes<M: SentenceMetric>(
    corpus: &ParallelCorpus,
    feature: &FeatureSpec,
    metric: &M,
) -> Result<Extremes, ScoringError> {
    Evaluation::new(corpus, Scorer::Tokens(metric))?.extremes(feature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MulerFlag {
    /// The unmasked score exceeds the oracle score.
    NegativeNumerator,
    /// `max - min` is too small to divide by.
    DegenerateInterval,
    /// The unmasked score is below the anti-oracle score.
    BaseBelowMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulerScore {
    /// `None` when the interval is degenerate.
    pub value: Option<f64>,
    pub flags: BTreeSet<MulerFlag>,
}

/// `(max - base) / (max - min)`, reported raw (negative or above 1 when the
/// base falls outside the interval) with flags describing why.
pub fn muler_score(base: f64, max: f64, min: f64) -> MulerScore {
    let mut flags = BTreeSet::new();
    if max < base {
        flags.insert(MulerFlag::NegativeNumerator);
    }
    if base < min {
        flags.insert(MulerFlag::BaseBelowMin);
    }
    let width = max - min;
    let value = if width.abs() < DEGENERATE_EPS {
        flags.insert(MulerFlag::DegenerateInterval);
        None
    } else {
        Some((max - base) / width)
    };
    MulerScore { value, flags }
}

/// Discrepancy breakdown: per pair, whether the reference has more spans of
/// the feature than the candidate (`add`), fewer (`hit`), or the same
/// number (`miss`). The names follow the original definition even though
/// `add` counts candidates that drop occurrences.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct Eta {
    pub add: usize,
    pub hit: usize,
    pub miss: usize,
}

impl From<[usize; 3]> for Eta {
    fn from([add, hit, miss]: [usize; 3]) -> Self {
        Self { add, hit, miss }
    }
}

impl From<Eta> for [usize; 3] {
    fn from(e: Eta) -> Self {
        [e.add, e.hit, e.miss]
    }
}

impl Eta {
    pub fn total(&self) -> usize {
        self.add + self.hit + self.miss
    }
}

/// Counts over every pair of the corpus, not just the index set.
pub fn discrepancy_breakdown(corpus: &ParallelCorpus, feature: &FeatureSpec) -> Eta {
    let mut eta = Eta::default();
    for pair in corpus.pairs() {
        let n_r = feature.count(pair.reference());
        let n_c = feature.count(&pair.candidate);
        match n_r.cmp(&n_c) {
            std::cmp::Ordering::Greater => eta.add += 1,
            std::cmp::Ordering::Less => eta.hit += 1,
            std::cmp::Ordering::Equal => eta.miss += 1,
        }
    }
    eta
}

/// One feature's row in a report. Score fields are `None` when the feature
/// never occurs on both sides of a pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulerEntry {
    #[serde(rename = "feature")]
    pub feature_id: String,
    pub base: Option<f64>,
    pub max: Option<f64>,
    pub min: Option<f64>,
    pub muler: Option<f64>,
    #[serde(rename = "abl")]
    pub abl_muler: Option<f64>,
    #[serde(rename = "n_indices")]
    pub index_count: usize,
    pub eta: Eta,
    pub freq: f64,
    pub uniq: f64,
    pub occurrences: usize,
    pub unique_forms: usize,
    pub flags: BTreeSet<MulerFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulerReport {
    pub meta: BTreeMap<String, Value>,
    /// Mean unmasked sentence score over all pairs.
    pub overall: f64,
    /// Corpus-level BLEU beside the averaged sentence score, when the
    /// metric is BLEU.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_corpus_bleu: Option<f64>,
    pub entries: Vec<MulerEntry>,
    pub scorer_gaps: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub scorer_coverage: BTreeMap<String, usize>,
}

impl MulerReport {
    pub fn entry(&self, feature_id: &str) -> Option<&MulerEntry> {
        self.entries.iter().find(|e| e.feature_id == feature_id)
    }
}

/// Builds one feature's entry from a prepared evaluation.
pub fn feature_entry(eval: &Evaluation, feature: &FeatureSpec) -> Result<MulerEntry, ScoringError> {
    let corpus = eval.corpus();
    let stats = feature_stats(corpus, feature, Side::Both);
    let eta = discrepancy_breakdown(corpus, feature);
    let index_set = select_indices(corpus, feature);
    let mut entry = MulerEntry {
        feature_id: feature.feature_id.clone(),
        base: None,
        max: None,
        min: None,
        muler: None,
        abl_muler: None,
        index_count: index_set.len(),
        eta,
        freq: stats.frequency,
        uniq: stats.uniqueness,
        occurrences: stats.total_occurrences,
        unique_forms: stats.unique_surface_forms,
        flags: BTreeSet::new(),
    };
    if index_set.is_empty() {
        return Ok(entry);
    }
    let ex = eval.extremes_over(feature, &index_set)?;
    let score = muler_score(ex.base, ex.max, ex.min);
    entry.base = Some(ex.base);
    entry.max = Some(ex.max);
    entry.min = Some(ex.min);
    entry.muler = score.value;
    entry.abl_muler = Some(ex.max - ex.base);
    entry.flags = score.flags;
    Ok(entry)
}

fn uses_default_gender(features: &[FeatureSpec]) -> bool {
    features.iter().any(|f| {
        f.feature_id == "MORPH:GENDER"
            && matches!(&f.matcher, Matcher::WordSet(w) if w.iter().map(String::as_str).eq(sorted_pronouns()))
    })
}

fn sorted_pronouns() -> impl Iterator<Item = &'static str> {
    let mut p = GENDER_PRONOUNS;
    p.sort_unstable();
    p.into_iter()
}

/// Report metadata: corpus metadata plus the scorer settings and the
/// conventions the numbers depend on.
fn report_meta(
    corpus: &ParallelCorpus,
    scorer: &Scorer,
    features: &[FeatureSpec],
    lexicons: &[Lexicon],
) -> BTreeMap<String, Value> {
    let mut meta: BTreeMap<String, Value> = corpus
        .metadata
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    meta.insert("metric".into(), Value::String(scorer.fingerprint()));
    meta.insert("pairs".into(), Value::from(corpus.len()));
    meta.insert(
        "muler_form".into(),
        Value::String("raw (max - base) / (max - min)".into()),
    );
    meta.insert("base_scope".into(), Value::String("index set".into()));
    if uses_default_gender(features) {
        meta.insert(
            "gender_pronouns".into(),
            Value::String(format!("default: {}", GENDER_PRONOUNS.join(","))),
        );
    }
    if !lexicons.is_empty() {
        let rules: serde_json::Map<String, Value> = lexicons
            .iter()
            .map(|l| (l.name.clone(), Value::String(l.rule_fingerprint())))
            .collect();
        meta.insert("scorer_rules".into(), Value::Object(rules));
    }
    meta
}

/// Scores every feature and lexicon against a corpus.
pub fn report_with(
    eval: &Evaluation,
    features: &[FeatureSpec],
    lexicons: &[Lexicon],
) -> Result<MulerReport, ScoringError> {
    let corpus = eval.corpus();
    let entries = features
        .iter()
        .map(|f| feature_entry(eval, f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut scorer_gaps = BTreeMap::new();
    let mut scorer_coverage = BTreeMap::new();
    for lexicon in lexicons {
        let g = scorer_gap(corpus, lexicon);
        scorer_gaps.insert(g.scorer_name.clone(), g.gap);
        scorer_coverage.insert(g.scorer_name, g.covered_pairs);
    }
    Ok(MulerReport {
        meta: report_meta(corpus, &eval.scorer(), features, lexicons),
        overall: eval.overall(),
        overall_corpus_bleu: None,
        entries,
        scorer_gaps,
        scorer_coverage,
    })
}

fn corpus_bleu_of(corpus: &ParallelCorpus, metric: &MetricConfig) -> f64 {
    let pairs: Vec<(Vec<Vec<&str>>, Vec<&str>)> = corpus
        .pairs()
        .iter()
        .map(|p| {
            (
                p.references.iter().map(|r| r.surfaces()).collect(),
                p.candidate.surfaces(),
            )
        })
        .collect();
    corpus_bleu(&pairs, metric)
}

/// The standard report for a token metric: one entry per feature, the
/// overall score, and one gap per lexicon. For BLEU the corpus-level score
/// is reported too; for any ROUGE variant all three variants' overall
/// means are recorded in the metadata.
pub fn feature_report(
    corpus: &ParallelCorpus,
    features: &[FeatureSpec],
    metric: &MetricConfig,
    lexicons: &[Lexicon],
) -> Result<MulerReport, ScoringError> {
    metric.validate()?;
    let eval = Evaluation::new(corpus, Scorer::Tokens(metric))?;
    let mut report = report_with(&eval, features, lexicons)?;
    match metric.kind {
        MetricKind::Bleu => report.overall_corpus_bleu = Some(corpus_bleu_of(corpus, metric)),
        MetricKind::Rouge1 | MetricKind::Rouge2 | MetricKind::RougeL => {
            let mut variants = serde_json::Map::new();
            for kind in [MetricKind::Rouge1, MetricKind::Rouge2, MetricKind::RougeL] {
                let cfg = MetricConfig {
                    kind,
                    ..metric.clone()
                };
                let overall = Evaluation::new(corpus, Scorer::Tokens(&cfg))?.overall();
                variants.insert(kind.name().to_string(), Value::from(overall));
            }
            report
                .meta
                .insert("rouge_overall".into(), Value::Object(variants));
        }
        MetricKind::MaskedSim => return Err(MetricError::Unsupported(metric.kind).into()),
    }
    Ok(report)
}

/// The standard report over precomputed similarity matrices.
pub fn feature_report_matrices(
    corpus: &ParallelCorpus,
    features: &[FeatureSpec],
    matrices: &BTreeMap<String, SimilarityMatrix>,
    lexicons: &[Lexicon],
) -> Result<MulerReport, ScoringError> {
    let eval = Evaluation::new(corpus, Scorer::Matrices(matrices))?;
    report_with(&eval, features, lexicons)
}
