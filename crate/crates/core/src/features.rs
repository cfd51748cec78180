//! Feature definitions, span extraction, vocabularies, and the partitions
//! used by the validation experiments.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotatedSentence, ParallelCorpus, Span};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("feature id is empty")]
    EmptyId,
    #[error("word-set entry {0:?} must be lowercase and whitespace-free")]
    BadWord(String),
    #[error("cannot split an empty vocabulary")]
    EmptyVocabulary,
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("need at least 2 groups, got {0}")]
    TooFewGroups(usize),
    #[error("{words} unique words cannot fill {groups} groups")]
    TooFewWords { words: usize, groups: usize },
    #[error("feature file: {0}")]
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FeatureCategory {
    Pos,
    Ner,
    Morph,
    Synthetic,
    Custom,
}

impl FeatureCategory {
    /// Infers the category from the namespace prefix of a feature id.
    pub fn from_feature_id(id: &str) -> Self {
        match id.split_once(':').map(|(ns, _)| ns) {
            Some("POS") => Self::Pos,
            Some("NER") => Self::Ner,
            Some("MORPH") => Self::Morph,
            Some("SYNTHETIC") => Self::Synthetic,
            _ => Self::Custom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Matcher {
    /// Spans whose label equals the feature id.
    Label,
    /// Every token whose lowercased surface is in the set, as a one-token span.
    WordSet(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub feature_id: String,
    pub category: FeatureCategory,
    pub matcher: Matcher,
    /// When set, only spans whose first covered token (lowercased) is in
    /// this set count as occurrences.
    pub restrict_to: Option<BTreeSet<String>>,
}

/// Pronoun inventory behind the built-in `MORPH:GENDER` feature.
pub const GENDER_PRONOUNS: [&str; 6] = ["he", "she", "his", "her", "him", "hers"];

pub const POS_TAGS: [&str; 16] = [
    "NOUN", "VERB", "PUNCT", "PROPN", "INTJ", "NUM", "PRON", "SYM", "SCONJ", "ADJ", "ADP", "ADV",
    "AUX", "X", "CCONJ", "DET",
];

pub const NER_TYPES: [&str; 18] = [
    "TIME",
    "WORK_OF_ART",
    "PERSON",
    "NORP",
    "CARDINAL",
    "MONEY",
    "EVENT",
    "ORDINAL",
    "DATE",
    "FAC",
    "ORG",
    "LAW",
    "PRODUCT",
    "PERCENT",
    "QUANTITY",
    "LANGUAGE",
    "GPE",
    "LOC",
];

pub const MORPH_FEATURES: [&str; 3] = ["GENDER", "DEFINITE", "NUMBER"];

fn check_words(words: &BTreeSet<String>) -> Result<(), FeatureError> {
    match words
        .iter()
        .find(|w| w.is_empty() || w.chars().any(char::is_whitespace) || w.to_lowercase() != **w)
    {
        Some(bad) => Err(FeatureError::BadWord(bad.clone())),
        None => Ok(()),
    }
}

impl FeatureSpec {
    /// A span-label feature; the category comes from the id's namespace.
    pub fn label(feature_id: impl Into<String>) -> Self {
        let feature_id = feature_id.into();
        Self {
            category: FeatureCategory::from_feature_id(&feature_id),
            feature_id,
            matcher: Matcher::Label,
            restrict_to: None,
        }
    }

    pub fn word_set<I, S>(
        feature_id: impl Into<String>,
        category: FeatureCategory,
        words: I,
    ) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let feature_id = feature_id.into();
        if feature_id.is_empty() {
            return Err(FeatureError::EmptyId);
        }
        let words: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        check_words(&words)?;
        Ok(Self {
            feature_id,
            category,
            matcher: Matcher::WordSet(words),
            restrict_to: None,
        })
    }

    /// The same feature with occurrences limited to spans whose membership
    /// word is in `words`.
    pub fn restricted(&self, words: BTreeSet<String>) -> Self {
        Self {
            restrict_to: Some(words),
            ..self.clone()
        }
    }

    /// Token ranges of this feature in `sentence`, sorted by start.
    pub fn ranges(&self, sentence: &AnnotatedSentence) -> Vec<(usize, usize)> {
        let lowered = sentence.lowered();
        let mut out: Vec<(usize, usize)> = match &self.matcher {
            Matcher::Label => sentence
                .spans()
                .iter()
                .filter(|s| s.feature_id == self.feature_id)
                .map(|s| (s.start, s.end))
                .collect(),
            Matcher::WordSet(words) => lowered
                .iter()
                .enumerate()
                .filter(|(_, w)| words.contains(w.as_str()))
                .map(|(i, _)| (i, i + 1))
                .collect(),
        };
        if let Some(keep) = &self.restrict_to {
            out.retain(|&(start, _)| keep.contains(&lowered[start]));
        }
        out.sort_unstable();
        out
    }

    pub fn count(&self, sentence: &AnnotatedSentence) -> usize {
        self.ranges(sentence).len()
    }

    pub fn is_present(&self, sentence: &AnnotatedSentence) -> bool {
        !self.ranges(sentence).is_empty()
    }
}

/// The spans of `feature` in `sentence`, non-overlapping and sorted by start.
pub fn extract_spans(sentence: &AnnotatedSentence, feature: &FeatureSpec) -> Vec<Span> {
    let lowered = sentence.lowered();
    feature
        .ranges(sentence)
        .into_iter()
        .map(|(start, end)| Span {
            start,
            end,
            feature_id: feature.feature_id.clone(),
            surface_form: lowered[start..end].join(" "),
        })
        .collect()
}

/// The full built-in inventory: 16 POS tags, 18 NER types, and the three
/// morphological features. `MORPH:GENDER` is a word-set feature over
/// [`GENDER_PRONOUNS`]; the others match span labels.
pub fn builtin_features() -> Vec<FeatureSpec> {
    let mut out: Vec<FeatureSpec> = POS_TAGS
        .iter()
        .map(|t| FeatureSpec::label(format!("POS:{t}")))
        .chain(
            NER_TYPES
                .iter()
                .map(|t| FeatureSpec::label(format!("NER:{t}"))),
        )
        .collect();
    for m in MORPH_FEATURES {
        out.push(builtin_feature(&format!("MORPH:{m}")));
    }
    out
}

/// Resolves a feature id. `MORPH:GENDER` maps to the pronoun word set,
/// anything else to a label matcher.
pub fn builtin_feature(feature_id: &str) -> FeatureSpec {
    if feature_id == "MORPH:GENDER" {
        FeatureSpec::word_set(feature_id, FeatureCategory::Morph, GENDER_PRONOUNS)
            .expect("pronouns are lowercase words")
    } else {
        FeatureSpec::label(feature_id)
    }
}

#[derive(Debug, Deserialize)]
struct FeatureFileEntry {
    feature_id: String,
    category: Option<FeatureCategory>,
    words: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FeatureFile {
    One(FeatureFileEntry),
    Many(Vec<FeatureFileEntry>),
}

/// Parses a feature file: one `{"feature_id", "category", "words"?}` object
/// or an array of them.
pub fn parse_feature_file(text: &str) -> Result<Vec<FeatureSpec>, FeatureError> {
    let file: FeatureFile =
        serde_json::from_str(text).map_err(|e| FeatureError::File(e.to_string()))?;
    let entries = match file {
        FeatureFile::One(e) => vec![e],
        FeatureFile::Many(v) => v,
    };
    entries
        .into_iter()
        .map(|e| {
            if e.feature_id.is_empty() {
                return Err(FeatureError::EmptyId);
            }
            let category = e
                .category
                .unwrap_or_else(|| FeatureCategory::from_feature_id(&e.feature_id));
            match e.words {
                Some(words) => FeatureSpec::word_set(
                    e.feature_id,
                    category,
                    words.into_iter().map(|w| w.to_lowercase()),
                ),
                None => Ok(FeatureSpec {
                    category,
                    ..FeatureSpec::label(e.feature_id)
                }),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Ref,
    Cand,
    #[default]
    Both,
}

impl Side {
    /// The sentences of one pair on this side: the primary reference, the
    /// candidate, or both.
    pub fn sentences(
        self,
        pair: &crate::corpus::SentencePair,
    ) -> impl Iterator<Item = &AnnotatedSentence> {
        let r = matches!(self, Side::Ref | Side::Both).then(|| pair.reference());
        let c = matches!(self, Side::Cand | Side::Both).then_some(&pair.candidate);
        r.into_iter().chain(c)
    }
}

/// The set of lowercased words tagged with a feature across a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocabulary {
    pub feature_id: String,
    /// Sorted by code point.
    pub words: BTreeSet<String>,
}

impl FeatureVocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Every token covered by `feature` on the given side; multi-token spans
/// contribute each covered token.
pub fn build_vocabulary(
    corpus: &ParallelCorpus,
    feature: &FeatureSpec,
    side: Side,
) -> FeatureVocabulary {
    let mut words = BTreeSet::new();
    for pair in corpus.pairs() {
        for sentence in side.sentences(pair) {
            let lowered = sentence.lowered();
            for (start, end) in feature.ranges(sentence) {
                words.extend(lowered[start..end].iter().cloned());
            }
        }
    }
    FeatureVocabulary {
        feature_id: feature.feature_id.clone(),
        words,
    }
}

/// A vocabulary split into a head of whole first-letter groups and the
/// remaining tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub alpha: f64,
    /// Largest first letter in the head; `None` when the head is empty.
    pub boundary_letter: Option<char>,
    pub head: BTreeSet<String>,
    pub tail: BTreeSet<String>,
}

fn first_char(word: &str) -> Option<char> {
    word.chars().next()
}

impl SplitSpec {
    /// Whether a (lowercased) word falls in the head, by its first letter.
    /// For vocabulary words this agrees with `head.contains(word)`.
    pub fn in_head(&self, word: &str) -> bool {
        match (self.boundary_letter, first_char(word)) {
            (Some(boundary), Some(c)) => c <= boundary,
            _ => false,
        }
    }
}

/// Splits a vocabulary by sorted first letter: the head is the smallest
/// letter-prefix group (`a`, `a..b`, ...) holding at least `alpha` of the
/// words. Letters order by Unicode code point.
pub fn alphabet_split(vocab: &FeatureVocabulary, alpha: f64) -> Result<SplitSpec, FeatureError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(FeatureError::AlphaOutOfRange(alpha));
    }
    if vocab.is_empty() {
        return Err(FeatureError::EmptyVocabulary);
    }
    // Tolerance keeps e.g. 0.3 * 10 from demanding 4 words.
    let needed = alpha * vocab.len() as f64 - 1e-9;
    let letters: BTreeSet<char> = vocab.words.iter().filter_map(|w| first_char(w)).collect();

    let mut boundary = None;
    if needed > 0.0 {
        let mut covered = 0usize;
        for letter in letters {
            covered += vocab
                .words
                .iter()
                .filter(|w| first_char(w) == Some(letter))
                .count();
            if covered as f64 >= needed {
                boundary = Some(letter);
                break;
            }
        }
    }
    let (head, tail): (BTreeSet<String>, BTreeSet<String>) =
        vocab
            .words
            .iter()
            .cloned()
            .partition(|w| match (boundary, first_char(w)) {
                (Some(b), Some(c)) => c <= b,
                _ => false,
            });
    Ok(SplitSpec {
        alpha,
        boundary_letter: boundary,
        head,
        tail,
    })
}

/// Unique lowercased words over primary references and candidates.
pub fn corpus_words(corpus: &ParallelCorpus) -> BTreeSet<String> {
    corpus
        .pairs()
        .iter()
        .flat_map(|p| Side::Both.sentences(p))
        .flat_map(|s| s.lowered().iter().cloned())
        .collect()
}

/// Shuffles the corpus word list with a seeded RNG and deals it into `p`
/// equal groups; the `|U| mod p` leftover words belong to no group.
pub fn synthetic_partition(
    corpus: &ParallelCorpus,
    p: usize,
    seed: u64,
) -> Result<Vec<FeatureSpec>, FeatureError> {
    partition_words(&corpus_words(corpus), p, seed)
}

pub(crate) fn partition_words(
    words: &BTreeSet<String>,
    p: usize,
    seed: u64,
) -> Result<Vec<FeatureSpec>, FeatureError> {
    if p < 2 {
        return Err(FeatureError::TooFewGroups(p));
    }
    if words.len() < p {
        return Err(FeatureError::TooFewWords {
            words: words.len(),
            groups: p,
        });
    }
    let mut shuffled: Vec<&String> = words.iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let size = words.len() / p;
    Ok(shuffled
        .chunks_exact(size)
        .take(p)
        .enumerate()
        .map(|(k, chunk)| FeatureSpec {
            feature_id: format!("SYNTHETIC:{k}"),
            category: FeatureCategory::Synthetic,
            matcher: Matcher::WordSet(chunk.iter().map(|w| (*w).clone()).collect()),
            restrict_to: None,
        })
        .collect())
}

/// Frequency and uniqueness of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub feature_id: String,
    /// Mean per-sentence share of tokens covered by the feature.
    pub frequency: f64,
    /// Distinct surface forms over occurrences; 0 when there are none.
    pub uniqueness: f64,
    pub total_occurrences: usize,
    pub unique_surface_forms: usize,
}

pub fn feature_stats(corpus: &ParallelCorpus, feature: &FeatureSpec, side: Side) -> FeatureStats {
    let mut proportion_sum = 0.0;
    let mut sentences = 0usize;
    let mut total = 0usize;
    let mut forms = BTreeSet::new();
    for pair in corpus.pairs() {
        for sentence in side.sentences(pair) {
            let ranges = feature.ranges(sentence);
            total += ranges.len();
            for &(start, end) in &ranges {
                forms.insert(sentence.lowered()[start..end].join(" "));
            }
            if sentence.is_empty() {
                continue;
            }
            let covered: usize = ranges.iter().map(|(s, e)| e - s).sum();
            proportion_sum += covered as f64 / sentence.len() as f64;
            sentences += 1;
        }
    }
    FeatureStats {
        feature_id: feature.feature_id.clone(),
        frequency: if sentences == 0 {
            0.0
        } else {
            proportion_sum / sentences as f64
        },
        uniqueness: if total == 0 {
            0.0
        } else {
            forms.len() as f64 / total as f64
        },
        total_occurrences: total,
        unique_surface_forms: forms.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_corpus_str, SentencePair};
    use std::collections::BTreeMap;

    fn sent(tokens: &[&str], spans: &[(usize, usize, &str)]) -> AnnotatedSentence {
        AnnotatedSentence::new(tokens.to_vec(), spans.to_vec()).unwrap()
    }

    fn john_corpus() -> ParallelCorpus {
        let r = sent(
            &["John", "likes", "apples", "and", "oranges", "."],
            &[(2, 3, "POS:NOUN"), (4, 5, "POS:NOUN"), (0, 1, "POS:PROPN")],
        );
        let c = sent(
            &["John", "loves", "bananas", "and", "apples", "."],
            &[(2, 3, "POS:NOUN"), (4, 5, "POS:NOUN"), (0, 1, "POS:PROPN")],
        );
        ParallelCorpus::new(vec![SentencePair::new("p1", vec![r], c)], BTreeMap::new()).unwrap()
    }

    fn vocab(words: &[&str]) -> FeatureVocabulary {
        FeatureVocabulary {
            feature_id: "X".into(),
            words: words.iter().map(|w| w.to_string()).collect(),
        }
    }

    #[test]
    fn extract_label_spans() {
        let s = sent(
            &["John", "likes", "apples", "and", "oranges"],
            &[(4, 5, "POS:NOUN"), (2, 3, "POS:NOUN")],
        );
        let spans = extract_spans(&s, &FeatureSpec::label("POS:NOUN"));
        let ranges: Vec<_> = spans.iter().map(|s| (s.start, s.end)).collect();
        assert_eq!(ranges, vec![(2, 3), (4, 5)]);
        assert!(extract_spans(&s, &FeatureSpec::label("NER:LOC")).is_empty());
    }

    #[test]
    fn extract_word_set_spans() {
        let s = sent(&["John", "likes", "Apples", "and", "oranges"], &[]);
        let f = FeatureSpec::word_set("CUSTOM:fruit", FeatureCategory::Custom, ["apples"]).unwrap();
        let spans = extract_spans(&s, &f);
        assert_eq!(spans.len(), 1);
        assert_eq!((spans[0].start, spans[0].end), (2, 3));
        assert_eq!(spans[0].surface_form, "apples");
    }

    #[test]
    fn word_set_rejects_uppercase() {
        assert!(FeatureSpec::word_set("X", FeatureCategory::Custom, ["Apple"]).is_err());
        assert!(FeatureSpec::word_set("", FeatureCategory::Custom, ["a"]).is_err());
    }

    #[test]
    fn vocabulary_by_side() {
        let c = john_corpus();
        let noun = FeatureSpec::label("POS:NOUN");
        let both: Vec<_> = build_vocabulary(&c, &noun, Side::Both)
            .words
            .into_iter()
            .collect();
        assert_eq!(both, vec!["apples", "bananas", "oranges"]);
        let refs: Vec<_> = build_vocabulary(&c, &noun, Side::Ref)
            .words
            .into_iter()
            .collect();
        assert_eq!(refs, vec!["apples", "oranges"]);
    }

    #[test]
    fn split_half() {
        let s = alphabet_split(&vocab(&["apple", "banana", "cat", "dog"]), 0.5).unwrap();
        assert_eq!(s.boundary_letter, Some('b'));
        assert_eq!(s.head.iter().collect::<Vec<_>>(), vec!["apple", "banana"]);
        assert_eq!(s.tail.iter().collect::<Vec<_>>(), vec!["cat", "dog"]);
    }

    #[test]
    fn split_endpoints() {
        let v = vocab(&["apple", "banana", "cat", "dog"]);
        let zero = alphabet_split(&v, 0.0).unwrap();
        assert!(zero.head.is_empty());
        assert_eq!(zero.boundary_letter, None);
        assert_eq!(zero.tail, v.words);
        let one = alphabet_split(&v, 1.0).unwrap();
        assert_eq!(one.head, v.words);
        assert!(one.tail.is_empty());
    }

    #[test]
    fn split_errors() {
        assert_eq!(
            alphabet_split(&vocab(&[]), 0.5).unwrap_err(),
            FeatureError::EmptyVocabulary
        );
        assert!(alphabet_split(&vocab(&["a"]), 1.5).is_err());
    }

    #[test]
    fn split_does_not_overshoot_on_rounding() {
        // 0.3 * 10 is 3.0000000000000004 in floating point.
        let words: Vec<String> = "abcdefghij".chars().map(|c| format!("{c}x")).collect();
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let s = alphabet_split(&vocab(&refs), 0.3).unwrap();
        assert_eq!(s.head.len(), 3);
    }

    #[test]
    fn partition_john_corpus() {
        let c = john_corpus();
        assert_eq!(corpus_words(&c).len(), 8);
        let parts = synthetic_partition(&c, 2, 1).unwrap();
        assert_eq!(parts.len(), 2);
        for p in &parts {
            match &p.matcher {
                Matcher::WordSet(w) => assert_eq!(w.len(), 4),
                Matcher::Label => panic!("expected word set"),
            }
        }
    }

    #[test]
    fn partition_floor_and_determinism() {
        let words: BTreeSet<String> = (0..10).map(|i| format!("w{i}")).collect();
        let a = partition_words(&words, 3, 9).unwrap();
        let b = partition_words(&words, 3, 9).unwrap();
        assert_eq!(a, b);
        let sizes: Vec<usize> = a
            .iter()
            .map(|f| match &f.matcher {
                Matcher::WordSet(w) => w.len(),
                Matcher::Label => 0,
            })
            .collect();
        assert_eq!(sizes, vec![3, 3, 3]);
        assert!(matches!(
            partition_words(&words, 11, 0),
            Err(FeatureError::TooFewWords { .. })
        ));
        assert!(matches!(
            partition_words(&words, 1, 0),
            Err(FeatureError::TooFewGroups(1))
        ));
    }

    #[test]
    fn stats_frequency_and_uniqueness() {
        let line = r#"{"pair_id":"p1","refs":[{"tokens":["John","likes","apples","and","oranges"],"spans":[{"start":2,"end":3,"feature":"POS:NOUN"},{"start":4,"end":5,"feature":"POS:NOUN"}]}],"cand":{"tokens":["x"]}}"#;
        let c = parse_corpus_str(line).unwrap();
        let noun = FeatureSpec::label("POS:NOUN");
        let st = feature_stats(&c, &noun, Side::Ref);
        assert!((st.frequency - 0.4).abs() < 1e-15);
        assert_eq!(st.total_occurrences, 2);

        let absent = feature_stats(&c, &FeatureSpec::label("NER:LOC"), Side::Ref);
        assert_eq!(absent.frequency, 0.0);
        assert_eq!(absent.uniqueness, 0.0);
        assert_eq!(absent.total_occurrences, 0);

        let apples = (0..4)
            .map(|i| {
                format!(
                    r#"{{"pair_id":"p{i}","refs":[{{"tokens":["apples"],"spans":[{{"start":0,"end":1,"feature":"POS:NOUN"}}]}}],"cand":{{"tokens":["x"]}}}}"#
                )
            })
            .collect::<Vec<_>>()
            .join("\n");
        let c = parse_corpus_str(&apples).unwrap();
        let st = feature_stats(&c, &noun, Side::Ref);
        assert_eq!(st.total_occurrences, 4);
        assert!((st.uniqueness - 0.25).abs() < 1e-15);
    }

    #[test]
    fn builtin_inventory_size() {
        let all = builtin_features();
        assert_eq!(all.len(), 16 + 18 + 3);
        let gender = all.iter().find(|f| f.feature_id == "MORPH:GENDER").unwrap();
        assert!(matches!(gender.matcher, Matcher::WordSet(_)));
        assert_eq!(gender.category, FeatureCategory::Morph);
    }

    #[test]
    fn feature_file_forms() {
        let one = parse_feature_file(
            r#"{"feature_id":"CUSTOM:fruit","category":"CUSTOM","words":["Apple"]}"#,
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert!(matches!(&one[0].matcher, Matcher::WordSet(w) if w.contains("apple")));
        let many = parse_feature_file(
            r#"[{"feature_id":"POS:NOUN"},{"feature_id":"NER:LOC","category":"NER"}]"#,
        )
        .unwrap();
        assert_eq!(many[0].category, FeatureCategory::Pos);
        assert_eq!(many[1].matcher, Matcher::Label);
        assert!(parse_feature_file("{}").is_err());
    }

    #[test]
    fn restriction_filters_by_first_token() {
        let c = john_corpus();
        let noun = FeatureSpec::label("POS:NOUN");
        let only_apples = noun.restricted(["apples".to_string()].into_iter().collect());
        let pair = &c.pairs()[0];
        assert_eq!(only_apples.ranges(pair.reference()), vec![(2, 3)]);
        assert_eq!(only_apples.ranges(&pair.candidate), vec![(4, 5)]);
    }
}
