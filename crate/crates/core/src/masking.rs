//! Span masking: each feature span collapses to a single mask token.
//!
//! Oracle masking gives the reference and the candidate the same token
//! `⟦feature⟧`; anti-oracle masking gives the candidate the distinct token
//! `⟦feature⟧'` so masked spans can never match. Hybrid and partial masking
//! choose per span using a [`SplitSpec`] over the feature vocabulary.

use thiserror::Error;

use crate::corpus::{AnnotatedSentence, SentencePair, Span};
use crate::features::{FeatureSpec, SplitSpec};

pub const MASK_OPEN: char = '⟦';
pub const MASK_CLOSE: char = '⟧';

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaskError {
    #[error("mask token {token:?} already occurs unmasked at position {position}")]
    Collision { token: String, position: usize },
    #[error("span [{start}, {end}) is invalid or overlaps another span")]
    BadSpan { start: usize, end: usize },
}

/// True when a surface contains either mask bracket.
pub fn is_reserved(surface: &str) -> bool {
    surface.contains(MASK_OPEN) || surface.contains(MASK_CLOSE)
}

pub fn oracle_token(feature_id: &str) -> String {
    format!("{MASK_OPEN}{feature_id}{MASK_CLOSE}")
}

pub fn anti_oracle_token(feature_id: &str) -> String {
    format!("{MASK_OPEN}{feature_id}{MASK_CLOSE}'")
}

/// The two mask tokens of one feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskTokens {
    pub oracle: String,
    pub anti: String,
}

impl MaskTokens {
    pub fn for_feature(feature_id: &str) -> Self {
        Self {
            oracle: oracle_token(feature_id),
            anti: anti_oracle_token(feature_id),
        }
    }

    pub fn lowercased(&self) -> Self {
        Self {
            oracle: self.oracle.to_lowercase(),
            anti: self.anti.to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskStrategy {
    Oracle,
    AntiOracle,
    /// Head spans masked anti-oracle style, tail spans oracle style.
    Hybrid(SplitSpec),
    /// Head spans masked oracle style, tail spans left as they are.
    Partial(SplitSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum PairSide {
    Reference,
    Candidate,
}

impl MaskStrategy {
    /// The token a span gets, or `None` to leave it unmasked.
    fn token_for<'m>(&self, side: PairSide, word: &str, masks: &'m MaskTokens) -> Option<&'m str> {
        let anti_style = match side {
            PairSide::Reference => masks.oracle.as_str(),
            PairSide::Candidate => masks.anti.as_str(),
        };
        match self {
            MaskStrategy::Oracle => Some(&masks.oracle),
            MaskStrategy::AntiOracle => Some(anti_style),
            MaskStrategy::Hybrid(split) if split.in_head(word) => Some(anti_style),
            MaskStrategy::Hybrid(_) => Some(&masks.oracle),
            MaskStrategy::Partial(split) if split.in_head(word) => Some(&masks.oracle),
            MaskStrategy::Partial(_) => None,
        }
    }
}

/// A masked token sequence and which positions hold mask tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedSentence {
    pub tokens: Vec<String>,
    pub flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedPair {
    pub references: Vec<MaskedSentence>,
    pub candidate: MaskedSentence,
}

impl MaskedPair {
    pub fn masked_reference(&self) -> &[String] {
        &self.references[0].tokens
    }

    pub fn masked_candidate(&self) -> &[String] {
        &self.candidate.tokens
    }

    pub fn ref_mask_flags(&self) -> &[bool] {
        &self.references[0].flags
    }

    pub fn cand_mask_flags(&self) -> &[bool] {
        &self.candidate.flags
    }
}

/// Replaces each `(start, end, mask)` range with its mask token. Ranges must
/// be sorted and disjoint. An unmasked token equal to any mask in use is a
/// collision.
pub(crate) fn collapse<'a>(
    tokens: &[&'a str],
    spans: &[(usize, usize, &'a str)],
    mut flags: Option<&mut Vec<bool>>,
) -> Result<Vec<&'a str>, MaskError> {
    let removed: usize = spans.iter().map(|(s, e, _)| e.saturating_sub(*s + 1)).sum();
    let mut out = Vec::with_capacity(tokens.len().saturating_sub(removed));
    let mut pos = 0;
    let mut next = spans.iter().peekable();
    while pos < tokens.len() {
        if let Some(&&(start, end, mask)) = next.peek() {
            if start == pos {
                if end <= start || end > tokens.len() {
                    return Err(MaskError::BadSpan { start, end });
                }
                out.push(mask);
                if let Some(f) = flags.as_deref_mut() {
                    f.push(true);
                }
                pos = end;
                next.next();
                continue;
            }
            if start < pos {
                return Err(MaskError::BadSpan { start, end });
            }
        }
        let token = tokens[pos];
        if token.starts_with(MASK_OPEN) && spans.iter().any(|(_, _, m)| *m == token) {
            return Err(MaskError::Collision {
                token: token.to_string(),
                position: pos,
            });
        }
        out.push(token);
        if let Some(f) = flags.as_deref_mut() {
            f.push(false);
        }
        pos += 1;
    }
    if let Some(&(start, end, _)) = next.next() {
        return Err(MaskError::BadSpan { start, end });
    }
    Ok(out)
}

/// Masks one side of a pair over an arbitrary token view (surfaces or
/// lowercased surfaces). `lowered` decides span membership for split-based
/// strategies.
pub(crate) fn mask_view<'a>(
    tokens: &[&'a str],
    lowered: &[String],
    ranges: &[(usize, usize)],
    strategy: &MaskStrategy,
    side: PairSide,
    masks: &'a MaskTokens,
    flags: Option<&mut Vec<bool>>,
) -> Result<Vec<&'a str>, MaskError> {
    let plan: Vec<(usize, usize, &'a str)> = ranges
        .iter()
        .filter_map(|&(start, end)| {
            strategy
                .token_for(side, &lowered[start], masks)
                .map(|m| (start, end, m))
        })
        .collect();
    if plan.is_empty() {
        if let Some(f) = flags {
            f.extend(std::iter::repeat_n(false, tokens.len()));
        }
        return Ok(tokens.to_vec());
    }
    collapse(tokens, &plan, flags)
}

/// Collapses every span to one `mask_token`; tokens outside spans are kept.
pub fn mask_sentence(
    sentence: &AnnotatedSentence,
    spans: &[Span],
    mask_token: &str,
) -> Result<MaskedSentence, MaskError> {
    let mut ranges: Vec<(usize, usize, &str)> =
        spans.iter().map(|s| (s.start, s.end, mask_token)).collect();
    ranges.sort_unstable_by_key(|r| (r.0, r.1));
    let surfaces = sentence.surfaces();
    let mut flags = Vec::new();
    let tokens = collapse(&surfaces, &ranges, Some(&mut flags))?;
    Ok(MaskedSentence {
        tokens: tokens.into_iter().map(str::to_string).collect(),
        flags,
    })
}

fn mask_side(
    sentence: &AnnotatedSentence,
    feature: &FeatureSpec,
    strategy: &MaskStrategy,
    side: PairSide,
    masks: &MaskTokens,
) -> Result<MaskedSentence, MaskError> {
    let surfaces = sentence.surfaces();
    let ranges = feature.ranges(sentence);
    let mut flags = Vec::new();
    let tokens = mask_view(
        &surfaces,
        sentence.lowered(),
        &ranges,
        strategy,
        side,
        masks,
        Some(&mut flags),
    )?;
    Ok(MaskedSentence {
        tokens: tokens.into_iter().map(str::to_string).collect(),
        flags,
    })
}

/// Masks every reference and the candidate of `pair` for `feature`.
/// Each side's spans are masked independently, so span counts may differ.
pub fn apply_strategy(
    pair: &SentencePair,
    feature: &FeatureSpec,
    strategy: &MaskStrategy,
) -> Result<MaskedPair, MaskError> {
    let masks = MaskTokens::for_feature(&feature.feature_id);
    let references = pair
        .references
        .iter()
        .map(|r| mask_side(r, feature, strategy, PairSide::Reference, &masks))
        .collect::<Result<Vec<_>, _>>()?;
    let candidate = mask_side(
        &pair.candidate,
        feature,
        strategy,
        PairSide::Candidate,
        &masks,
    )?;
    Ok(MaskedPair {
        references,
        candidate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{alphabet_split, extract_spans, FeatureVocabulary};

    fn sent(tokens: &[&str], spans: &[(usize, usize, &str)]) -> AnnotatedSentence {
        AnnotatedSentence::new(tokens.to_vec(), spans.to_vec()).unwrap()
    }

    fn john_pair() -> SentencePair {
        let r = sent(
            &["John", "likes", "apples", "and", "oranges"],
            &[(2, 3, "NOUN"), (4, 5, "NOUN")],
        );
        let c = sent(
            &["John", "loves", "bananas", "and", "apples"],
            &[(2, 3, "NOUN"), (4, 5, "NOUN")],
        );
        SentencePair::new("p1", vec![r], c)
    }

    #[test]
    fn masks_nouns() {
        let pair = john_pair();
        let spans = extract_spans(pair.reference(), &FeatureSpec::label("NOUN"));
        let m = mask_sentence(pair.reference(), &spans, "⟦NOUN⟧").unwrap();
        assert_eq!(m.tokens.join(" "), "John likes ⟦NOUN⟧ and ⟦NOUN⟧");
        assert_eq!(m.flags, vec![false, false, true, false, true]);
    }

    #[test]
    fn empty_span_list_is_identity() {
        let s = sent(&["a", "b"], &[]);
        let m = mask_sentence(&s, &[], "⟦X⟧").unwrap();
        assert_eq!(m.tokens, vec!["a", "b"]);
        assert_eq!(m.flags, vec![false, false]);
    }

    #[test]
    fn full_cover_collapses_to_one_token() {
        let s = sent(&["New", "York", "City"], &[(0, 3, "NOUN")]);
        let m = mask_sentence(&s, s.spans(), "⟦NOUN⟧").unwrap();
        assert_eq!(m.tokens, vec!["⟦NOUN⟧"]);
        assert_eq!(m.flags, vec![true]);
    }

    #[test]
    fn collision_is_an_error() {
        let s = sent(&["⟦NOUN⟧", "apples"], &[(1, 2, "NOUN")]);
        let err = mask_sentence(&s, s.spans(), "⟦NOUN⟧").unwrap_err();
        assert_eq!(
            err,
            MaskError::Collision {
                token: "⟦NOUN⟧".into(),
                position: 0
            }
        );
    }

    #[test]
    fn oracle_and_anti_oracle() {
        let pair = john_pair();
        let f = FeatureSpec::label("NOUN");
        let o = apply_strategy(&pair, &f, &MaskStrategy::Oracle).unwrap();
        assert_eq!(
            o.masked_reference().join(" "),
            "John likes ⟦NOUN⟧ and ⟦NOUN⟧"
        );
        assert_eq!(
            o.masked_candidate().join(" "),
            "John loves ⟦NOUN⟧ and ⟦NOUN⟧"
        );
        let ao = apply_strategy(&pair, &f, &MaskStrategy::AntiOracle).unwrap();
        assert_eq!(ao.masked_reference(), o.masked_reference());
        assert_eq!(
            ao.masked_candidate().join(" "),
            "John loves ⟦NOUN⟧' and ⟦NOUN⟧'"
        );
        assert_eq!(ao.cand_mask_flags(), &[false, false, true, false, true]);
    }

    #[test]
    fn hybrid_endpoints_match_pure_strategies() {
        let pair = john_pair();
        let f = FeatureSpec::label("NOUN");
        let vocab = FeatureVocabulary {
            feature_id: "NOUN".into(),
            words: ["apples", "bananas", "oranges"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        };
        let full = alphabet_split(&vocab, 1.0).unwrap();
        let empty = alphabet_split(&vocab, 0.0).unwrap();
        assert_eq!(
            apply_strategy(&pair, &f, &MaskStrategy::Hybrid(full.clone())).unwrap(),
            apply_strategy(&pair, &f, &MaskStrategy::AntiOracle).unwrap()
        );
        assert_eq!(
            apply_strategy(&pair, &f, &MaskStrategy::Hybrid(empty.clone())).unwrap(),
            apply_strategy(&pair, &f, &MaskStrategy::Oracle).unwrap()
        );
        assert_eq!(
            apply_strategy(&pair, &f, &MaskStrategy::Partial(full)).unwrap(),
            apply_strategy(&pair, &f, &MaskStrategy::Oracle).unwrap()
        );
        let untouched = apply_strategy(&pair, &f, &MaskStrategy::Partial(empty)).unwrap();
        assert_eq!(
            untouched.masked_reference().join(" "),
            "John likes apples and oranges"
        );
        assert!(untouched.cand_mask_flags().iter().all(|f| !f));
    }

    #[test]
    fn hybrid_half_split() {
        let pair = john_pair();
        let f = FeatureSpec::label("NOUN");
        let vocab = FeatureVocabulary {
            feature_id: "NOUN".into(),
            words: ["apples", "bananas", "oranges"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        };
        // head = {apples}: a-words are anti-oracle, the rest oracle.
        let split = alphabet_split(&vocab, 0.3).unwrap();
        assert_eq!(split.boundary_letter, Some('a'));
        let m = apply_strategy(&pair, &f, &MaskStrategy::Hybrid(split.clone())).unwrap();
        assert_eq!(
            m.masked_reference().join(" "),
            "John likes ⟦NOUN⟧ and ⟦NOUN⟧"
        );
        assert_eq!(
            m.masked_candidate().join(" "),
            "John loves ⟦NOUN⟧ and ⟦NOUN⟧'"
        );
        let p = apply_strategy(&pair, &f, &MaskStrategy::Partial(split)).unwrap();
        assert_eq!(
            p.masked_reference().join(" "),
            "John likes ⟦NOUN⟧ and oranges"
        );
        assert_eq!(
            p.masked_candidate().join(" "),
            "John loves bananas and ⟦NOUN⟧"
        );
    }

    #[test]
    fn oracle_is_idempotent() {
        let pair = john_pair();
        let f = FeatureSpec::label("NOUN");
        let once = apply_strategy(&pair, &f, &MaskStrategy::Oracle).unwrap();
        // Rebuild the masked sentences; the mask positions become spans of f.
        let rebuild = |m: &MaskedSentence| {
            let spans: Vec<(usize, usize, &str)> = m
                .flags
                .iter()
                .enumerate()
                .filter(|(_, f)| **f)
                .map(|(i, _)| (i, i + 1, "NOUN"))
                .collect();
            AnnotatedSentence::new(m.tokens.clone(), spans).unwrap()
        };
        let again_pair = SentencePair::new(
            "p1",
            vec![rebuild(&once.references[0])],
            rebuild(&once.candidate),
        );
        let twice = apply_strategy(&again_pair, &f, &MaskStrategy::Oracle).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn multi_reference_masks_each_reference() {
        let r1 = sent(&["a", "cat"], &[(1, 2, "NOUN")]);
        let r2 = sent(&["the", "dog", "."], &[(1, 2, "NOUN")]);
        let c = sent(&["a", "dog"], &[(1, 2, "NOUN")]);
        let pair = SentencePair::new("p", vec![r1, r2], c);
        let m = apply_strategy(&pair, &FeatureSpec::label("NOUN"), &MaskStrategy::Oracle).unwrap();
        assert_eq!(m.references[1].tokens, vec!["the", "⟦NOUN⟧", "."]);
    }
}
