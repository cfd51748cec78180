//! ROUGE-1, ROUGE-2 and ROUGE-L F1.

use std::collections::HashMap;
use std::hash::Hash;

use super::{fold, MetricConfig, MetricError, MetricKind};

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Clipped n-gram overlap F1. When neither side is long enough to have an
/// n-gram, identical sequences score 1 and anything else 0.
pub(crate) fn rouge_n<T: Eq + Hash>(reference: &[T], candidate: &[T], n: usize) -> f64 {
    let ref_total = (reference.len() + 1).saturating_sub(n);
    let cand_total = (candidate.len() + 1).saturating_sub(n);
    if ref_total == 0 && cand_total == 0 {
        return if reference == candidate && !reference.is_empty() {
            1.0
        } else {
            0.0
        };
    }
    if ref_total == 0 || cand_total == 0 {
        return 0.0;
    }
    let mut counts: HashMap<&[T], (usize, usize)> = HashMap::new();
    for g in reference.windows(n) {
        counts.entry(g).or_default().0 += 1;
    }
    for g in candidate.windows(n) {
        counts.entry(g).or_default().1 += 1;
    }
    let overlap: usize = counts.values().map(|&(r, c)| r.min(c)).sum();
    f1(
        overlap as f64 / cand_total as f64,
        overlap as f64 / ref_total as f64,
    )
}

pub(crate) fn lcs_len<T: Eq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F1 with beta = 1.
pub(crate) fn rouge_l<T: Eq>(reference: &[T], candidate: &[T]) -> f64 {
    if reference.is_empty() || candidate.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(reference, candidate) as f64;
    f1(lcs / candidate.len() as f64, lcs / reference.len() as f64)
}

pub(crate) fn rouge_normalized<T: Eq + Hash>(
    kind: MetricKind,
    reference: &[T],
    candidate: &[T],
) -> Result<f64, MetricError> {
    if reference.is_empty() || candidate.is_empty() {
        log::warn!("ROUGE on an empty sentence; scoring 0");
        return Ok(0.0);
    }
    match kind {
        MetricKind::Rouge1 => Ok(rouge_n(reference, candidate, 1)),
        MetricKind::Rouge2 => Ok(rouge_n(reference, candidate, 2)),
        MetricKind::RougeL => Ok(rouge_l(reference, candidate)),
        other => Err(MetricError::Unsupported(other)),
    }
}

/// ROUGE F1 of one candidate against one reference, using `config.kind`
/// (one of the ROUGE variants).
pub fn rouge<R: AsRef<str>, C: AsRef<str>>(
    reference: &[R],
    candidate: &[C],
    config: &MetricConfig,
) -> Result<f64, MetricError> {
    let r = fold(reference, config.case_fold);
    let c = fold(candidate, config.case_fold);
    rouge_normalized(config.kind, &r, &c)
}
