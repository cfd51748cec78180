//! Sentence- and corpus-level BLEU over pre-tokenized text.

use std::collections::HashMap;
use std::hash::Hash;

use super::{fold_all, MetricConfig, Smoothing};

/// Clipped n-gram match counts for one candidate, plus the lengths the
/// brevity penalty needs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub cand_len: usize,
    pub ref_len: usize,
}

impl NgramStats {
    fn accumulate(&mut self, other: &NgramStats) {
        if self.matches.is_empty() {
            self.matches = vec![0; other.matches.len()];
            self.totals = vec![0; other.totals.len()];
        }
        for (a, b) in self.matches.iter_mut().zip(&other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
        self.cand_len += other.cand_len;
        self.ref_len += other.ref_len;
    }
}

/// Reference length closest to `cand_len`; ties go to the shorter one.
fn closest_ref_len(ref_lens: impl Iterator<Item = usize>, cand_len: usize) -> usize {
    ref_lens
        .min_by_key(|&r| (r.abs_diff(cand_len), r))
        .unwrap_or(0)
}

pub(crate) fn ngram_stats<T: Eq + Hash>(refs: &[&[T]], cand: &[T], max_n: usize) -> NgramStats {
    let mut stats = NgramStats {
        matches: vec![0; max_n],
        totals: vec![0; max_n],
        cand_len: cand.len(),
        ref_len: closest_ref_len(refs.iter().map(|r| r.len()), cand.len()),
    };
    // (count in candidate, max count in any reference, count in current reference)
    let mut counts: HashMap<&[T], (usize, usize, usize)> = HashMap::new();
    for n in 1..=max_n {
        if cand.len() < n {
            break;
        }
        counts.clear();
        for gram in cand.windows(n) {
            counts.entry(gram).or_default().0 += 1;
        }
        for r in refs.iter().filter(|r| r.len() >= n) {
            for gram in r.windows(n) {
                if let Some(c) = counts.get_mut(gram) {
                    c.2 += 1;
                }
            }
            for c in counts.values_mut() {
                c.1 = c.1.max(c.2);
                c.2 = 0;
            }
        }
        stats.totals[n - 1] = cand.len() + 1 - n;
        stats.matches[n - 1] = counts.values().map(|&(c, r, _)| c.min(r)).sum();
    }
    stats
}

/// Geometric mean of the n-gram precisions times the brevity penalty.
pub(crate) fn bleu_from_stats(stats: &NgramStats, smoothing: Smoothing) -> f64 {
    if stats.cand_len == 0 {
        return 0.0;
    }
    let max_n = stats.matches.len();
    let mut log_sum = 0.0;
    for (&m, &t) in stats.matches.iter().zip(&stats.totals) {
        let p = if m == 0 {
            match smoothing {
                Smoothing::Add1OnZero => 1.0 / (t as f64 + 1.0),
                Smoothing::None => return 0.0,
            }
        } else {
            m as f64 / t as f64
        };
        log_sum += p.ln();
    }
    let c = stats.cand_len as f64;
    let r = stats.ref_len as f64;
    let brevity = (1.0 - r / c).min(0.0).exp();
    brevity * (log_sum / max_n as f64).exp()
}

/// BLEU over tokens that are already normalized.
pub(crate) fn bleu_normalized<T: Eq + Hash>(
    refs: &[&[T]],
    cand: &[T],
    max_n: usize,
    smoothing: Smoothing,
) -> f64 {
    if cand.is_empty() || refs.iter().all(|r| r.is_empty()) {
        log::warn!("sentence BLEU on an empty candidate or reference; scoring 0");
        return 0.0;
    }
    bleu_from_stats(&ngram_stats(refs, cand, max_n), smoothing)
}

/// Sentence BLEU of `candidate` against one or more references.
///
/// Modified precisions for n = 1..`bleu_max_n` are clipped by the largest
/// count in any single reference. With [`Smoothing::Add1OnZero`] a zero
/// precision `0/t` becomes `1/(t+1)`. The brevity penalty uses the
/// reference length closest to the candidate's. An empty candidate scores 0.
pub fn sentence_bleu<R: AsRef<str>, C: AsRef<str>>(
    references: &[Vec<R>],
    candidate: &[C],
    config: &MetricConfig,
) -> f64 {
    let refs = fold_all(references, config.case_fold);
    let ref_views: Vec<Vec<&str>> = refs
        .iter()
        .map(|r| r.iter().map(|s| s.as_ref()).collect())
        .collect();
    let ref_slices: Vec<&[&str]> = ref_views.iter().map(Vec::as_slice).collect();
    let cand = super::fold(candidate, config.case_fold);
    let cand_view: Vec<&str> = cand.iter().map(|s| s.as_ref()).collect();
    bleu_normalized(
        &ref_slices,
        &cand_view,
        config.bleu_max_n,
        config.bleu_smoothing,
    )
}

/// Corpus-level BLEU: n-gram matches and lengths are summed over all pairs
/// before the precisions and brevity penalty are taken.
pub fn corpus_bleu<R: AsRef<str>, C: AsRef<str>>(
    pairs: &[(Vec<Vec<R>>, Vec<C>)],
    config: &MetricConfig,
) -> f64 {
    let mut total = NgramStats::default();
    for (references, candidate) in pairs {
        let refs = fold_all(references, config.case_fold);
        let ref_views: Vec<Vec<&str>> = refs
            .iter()
            .map(|r| r.iter().map(|s| s.as_ref()).collect())
            .collect();
        let ref_slices: Vec<&[&str]> = ref_views.iter().map(Vec::as_slice).collect();
        let cand = super::fold(candidate, config.case_fold);
        let cand_view: Vec<&str> = cand.iter().map(|s| s.as_ref()).collect();
        total.accumulate(&ngram_stats(&ref_slices, &cand_view, config.bleu_max_n));
    }
    bleu_from_stats(&total, config.bleu_smoothing)
}
