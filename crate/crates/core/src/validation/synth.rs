//! Seeded generator of tagged synthetic corpora with controllable
//! per-class corruption.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, ParallelCorpus, SentencePair};

/// The 50-word vocabulary: ten words per class, first letters spread over
/// the alphabet so alphabet splits have fine granularity.
pub const CLASSES: [(&str, [&str; 10]); 5] = [
    (
        "NOUN",
        [
            "apple", "bridge", "castle", "dragon", "engine", "forest", "garden", "harbor",
            "island", "jungle",
        ],
    ),
    (
        "VERB",
        [
            "argue", "build", "carry", "dance", "enter", "follow", "gather", "hold", "invite",
            "jump",
        ],
    ),
    (
        "ADJ",
        [
            "kind", "large", "merry", "narrow", "old", "pale", "quiet", "rapid", "soft", "tall",
        ],
    ),
    (
        "DET",
        [
            "the", "a", "an", "this", "that", "these", "those", "every", "some", "each",
        ],
    ),
    (
        "PROPN",
        [
            "paris", "berlin", "tokyo", "lima", "oslo", "rome", "cairo", "delhi", "quito", "vienna",
        ],
    ),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub pairs: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Range of the fraction of tokens that are nouns, drawn per sentence.
    pub noun_density: (f64, f64),
    /// Probability that a candidate token is replaced by another word of
    /// its class, per class; classes not listed use `default_corruption`.
    pub corruption: BTreeMap<String, f64>,
    pub default_corruption: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            pairs: 1000,
            min_len: 3,
            max_len: 25,
            noun_density: (0.1, 0.3),
            corruption: BTreeMap::new(),
            default_corruption: 0.3,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Every word corrupted with the same probability.
    pub fn uniform(pairs: usize, rate: f64, seed: u64) -> Self {
        Self {
            pairs,
            default_corruption: rate,
            seed,
            ..Self::default()
        }
    }

    fn rate(&self, class: &str) -> f64 {
        self.corruption
            .get(class)
            .copied()
            .unwrap_or(self.default_corruption)
    }
}

fn class_words(class: &str) -> &'static [&'static str; 10] {
    &CLASSES
        .iter()
        .find(|(c, _)| *c == class)
        .expect("known class")
        .1
}

/// Generates `config.pairs` pairs. Every token carries a single-token span
/// `POS:<CLASS>`; candidates keep the reference's tags and replace each
/// word with probability given by its class's corruption rate.
pub fn generate(config: &SynthConfig) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let other_classes: Vec<&str> = CLASSES
        .iter()
        .map(|(c, _)| *c)
        .filter(|c| *c != "NOUN")
        .collect();
    let mut pairs = Vec::with_capacity(config.pairs);
    for i in 0..config.pairs {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let (lo, hi) = config.noun_density;
        let density = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let nouns = ((density * len as f64).round() as usize).clamp(1, len);
        let mut classes: Vec<&str> = (0..len)
            .map(|k| {
                if k < nouns {
                    "NOUN"
                } else {
                    other_classes[rng.gen_range(0..other_classes.len())]
                }
            })
            .collect();
        classes.shuffle(&mut rng);

        let reference: Vec<&str> = classes
            .iter()
            .map(|c| *class_words(c).choose(&mut rng).expect("non-empty class"))
            .collect();
        let candidate: Vec<&str> = reference
            .iter()
            .zip(&classes)
            .map(|(&w, c)| {
                if rng.gen_bool(config.rate(c)) {
                    let words = class_words(c);
                    let mut alt = w;
                    while alt == w {
                        alt = words[rng.gen_range(0..words.len())];
                    }
                    alt
                } else {
                    w
                }
            })
            .collect();

        let spans: Vec<(usize, usize, String)> = classes
            .iter()
            .enumerate()
            .map(|(k, c)| (k, k + 1, format!("POS:{c}")))
            .collect();
        let r =
            AnnotatedSentence::new(reference, spans.clone()).expect("generated sentence is valid");
        let c = AnnotatedSentence::new(candidate, spans).expect("generated sentence is valid");
        pairs.push(SentencePair::new(format!("s{i}"), vec![r], c));
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("system".to_string(), "synthetic".to_string());
    metadata.insert("seed".to_string(), config.seed.to_string());
    ParallelCorpus::new(pairs, metadata).expect("generated corpus is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_within_bounds() {
        let cfg = SynthConfig {
            pairs: 50,
            ..SynthConfig::default()
        };
        let a = generate(&cfg);
        assert_eq!(a, generate(&cfg));
        for p in a.pairs() {
            let n = p.reference().len();
            assert!((3..=25).contains(&n));
            assert_eq!(p.candidate.len(), n);
            let nouns = p
                .reference()
                .spans()
                .iter()
                .filter(|s| s.feature_id == "POS:NOUN")
                .count();
            assert!(nouns >= 1);
        }
    }

    #[test]
    fn zero_corruption_copies_reference() {
        let c = generate(&SynthConfig::uniform(20, 0.0, 1));
        assert!(c
            .pairs()
            .iter()
            .all(|p| p.reference().surfaces() == p.candidate.surfaces()));
    }

    #[test]
    fn vocabulary_has_fifty_distinct_words() {
        let mut all: Vec<&str> = CLASSES
            .iter()
            .flat_map(|(_, w)| w.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 50);
    }
}
