//! Synthetic experiments checking that scores behave: hybrid masking spans
//! the oracle interval, random features score alike, and restricting a
//! feature's vocabulary changes MuLER less than its numerator.

pub mod synth;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{
    alphabet_split, build_vocabulary, corpus_words, feature_stats, partition_words, FeatureError,
    FeatureSpec, Side,
};
use crate::masking::MaskStrategy;
use crate::scoring::{muler_score, select_indices, Evaluation, MulerFlag, ScoringError};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("alphas must lie in [0, 1], got {0}")]
    AlphaRange(f64),
    #[error("frequency alphas must be strictly increasing in (0, 1]")]
    FrequencyAlphas,
    #[error("need at least one repeat")]
    NoRepeats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridPoint {
    pub alpha: f64,
    pub boundary_letter: Option<char>,
    pub score: f64,
    /// `(score - min) / (max - min)`; `None` on a degenerate interval.
    pub position: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridCurve {
    pub feature_id: String,
    pub points: Vec<HybridPoint>,
    pub max: f64,
    pub min: f64,
    pub n_indices: usize,
}

impl HybridCurve {
    pub fn scores(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.score).collect()
    }
}

/// For each alpha, masks the alphabet-split head anti-oracle style and the
/// rest oracle style, scoring the mean over the feature's index set.
pub fn run_hybrid(
    eval: &Evaluation,
    feature: &FeatureSpec,
    alphas: &[f64],
) -> Result<HybridCurve, ValidationError> {
    if let Some(&a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(ValidationError::AlphaRange(a));
    }
    let index_set = select_indices(eval.corpus(), feature);
    let ex = eval.extremes_over(feature, &index_set)?;
    let vocab = build_vocabulary(eval.corpus(), feature, Side::Both);
    let points = alphas
        .iter()
        .map(|&alpha| {
            let split = alphabet_split(&vocab, alpha)?;
            let boundary_letter = split.boundary_letter;
            let score =
                eval.strategy_mean(feature, &MaskStrategy::Hybrid(split), &index_set.indices)?;
            let width = ex.max - ex.min;
            let position =
                (width.abs() >= crate::scoring::DEGENERATE_EPS).then(|| (score - ex.min) / width);
            Ok(HybridPoint {
                alpha,
                boundary_letter,
                score,
                position,
            })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    Ok(HybridCurve {
        feature_id: feature.feature_id.clone(),
        points,
        max: ex.max,
        min: ex.min,
        n_indices: ex.n_indices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecificityResult {
    pub p: usize,
    pub repeats: usize,
    pub seed: u64,
    pub sampled_scores: Vec<f64>,
    pub mean: f64,
    /// Population variance of the sampled scores.
    pub variance: f64,
    pub std: f64,
    pub mean_ref_proportion: f64,
    pub mean_cand_proportion: f64,
    /// Repeats where no group had a defined score.
    pub undefined_repeats: usize,
}

/// One repeat: its sampled score (if any group had one) and the mean
/// reference and candidate proportions over its groups.
fn specificity_repeat(
    eval: &Evaluation,
    words: &BTreeSet<String>,
    p: usize,
    cell_seed: u64,
) -> Result<(Option<f64>, f64, f64), ValidationError> {
    let groups = partition_words(words, p, cell_seed)?;
    let (mut ref_prop, mut cand_prop) = (0.0, 0.0);
    for g in &groups {
        ref_prop += feature_stats(eval.corpus(), g, Side::Ref).frequency;
        cand_prop += feature_stats(eval.corpus(), g, Side::Cand).frequency;
    }
    // Uniform over the groups with a defined score: walk a random order and
    // keep the first group that has one.
    let mut choice = ChaCha8Rng::seed_from_u64(cell_seed);
    choice.set_stream(1);
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut choice);
    let mut sampled = None;
    for k in order {
        let feature = &groups[k];
        let index_set = select_indices(eval.corpus(), feature);
        if index_set.is_empty() {
            continue;
        }
        let ex = eval.extremes_over(feature, &index_set)?;
        if let Some(v) = muler_score(ex.base, ex.max, ex.min).value {
            sampled = Some(v);
            break;
        }
    }
    Ok((sampled, ref_prop / p as f64, cand_prop / p as f64))
}

/// Splits the corpus vocabulary into `p` random word-set features per
/// repeat (partition seed `seed + j`) and samples one group's MuLER.
pub fn run_specificity(
    eval: &Evaluation,
    p: usize,
    repeats: usize,
    seed: u64,
) -> Result<SpecificityResult, ValidationError> {
    if repeats == 0 {
        return Err(ValidationError::NoRepeats);
    }
    let words = corpus_words(eval.corpus());
    let cells = (0..repeats)
        .into_par_iter()
        .map(|j| specificity_repeat(eval, &words, p, seed.wrapping_add(j as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    let sampled_scores: Vec<f64> = cells.iter().filter_map(|c| c.0).collect();
    let undefined_repeats = repeats - sampled_scores.len();
    let n = sampled_scores.len().max(1) as f64;
    let mean = sampled_scores.iter().sum::<f64>() / n;
    let variance = sampled_scores
        .iter()
        .map(|s| (s - mean).powi(2))
        .sum::<f64>()
        / n;
    let r = repeats as f64;
    Ok(SpecificityResult {
        p,
        repeats,
        seed,
        mean,
        variance,
        std: variance.sqrt(),
        mean_ref_proportion: cells.iter().map(|c| c.1).sum::<f64>() / r,
        mean_cand_proportion: cells.iter().map(|c| c.2).sum::<f64>() / r,
        sampled_scores,
        undefined_repeats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub alpha: f64,
    pub boundary_letter: Option<char>,
    pub head_size: usize,
    pub n_indices: usize,
    pub muler: Option<f64>,
    pub abl_muler: Option<f64>,
    pub flags: BTreeSet<MulerFlag>,
    /// Set when the restricted feature never occurs on both sides.
    pub empty_index_set: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResult {
    pub feature_id: String,
    pub vocabulary_size: usize,
    pub rows: Vec<FrequencyRow>,
}

/// For each alpha, keeps only the feature occurrences whose word is in the
/// alphabet-split head and recomputes MuLER and its numerator.
pub fn run_frequency(
    eval: &Evaluation,
    feature: &FeatureSpec,
    alphas: &[f64],
) -> Result<FrequencyResult, ValidationError> {
    let increasing = alphas.windows(2).all(|w| w[0] < w[1]);
    if alphas.is_empty() || !increasing || alphas[0] <= 0.0 || alphas[alphas.len() - 1] > 1.0 {
        return Err(ValidationError::FrequencyAlphas);
    }
    let vocab = build_vocabulary(eval.corpus(), feature, Side::Both);
    let rows = alphas
        .iter()
        .map(|&alpha| {
            let split = alphabet_split(&vocab, alpha)?;
            let reduced = feature.restricted(split.head.clone());
            let index_set = select_indices(eval.corpus(), &reduced);
            let mut row = FrequencyRow {
                alpha,
                boundary_letter: split.boundary_letter,
                head_size: split.head.len(),
                n_indices: index_set.len(),
                muler: None,
                abl_muler: None,
                flags: BTreeSet::new(),
                empty_index_set: index_set.is_empty(),
            };
            if !index_set.is_empty() {
                let ex = eval.extremes_over(&reduced, &index_set)?;
                let score = muler_score(ex.base, ex.max, ex.min);
                row.muler = score.value;
                row.abl_muler = Some(ex.max - ex.base);
                row.flags = score.flags;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;
    Ok(FrequencyResult {
        feature_id: feature.feature_id.clone(),
        vocabulary_size: vocab.len(),
        rows,
    })
}

/// Everything `validate` produces, with the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationBundle {
    pub config: serde_json::Value,
    pub hybrid: Vec<HybridCurve>,
    pub specificity: BTreeMap<usize, SpecificityResult>,
    pub frequency: Vec<FrequencyResult>,
    /// How `position` in hybrid points is defined.
    pub position_definition: String,
}

pub const POSITION_DEFINITION: &str =
    "normalized position (score - min) / (max - min) of the hybrid score in the oracle interval";
