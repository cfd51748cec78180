//! Brute-force reference implementations used as test oracles. They share
//! no code with the library and favour obviousness over speed.

#![allow(dead_code)]

use muler::corpus::{AnnotatedSentence, ParallelCorpus, SentencePair};

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn lower(xs: &[String]) -> Vec<String> {
    xs.iter().map(|x| x.to_lowercase()).collect()
}

fn ngrams(xs: &[String], n: usize) -> Vec<Vec<String>> {
    if xs.len() < n {
        return Vec::new();
    }
    (0..=xs.len() - n).map(|i| xs[i..i + n].to_vec()).collect()
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

/// Sentence BLEU by enumerating n-grams and counting with linear scans.
/// Zero precisions become 1/(total+1) when `add1` is set.
pub fn oracle_bleu(
    refs: &[Vec<String>],
    cand: &[String],
    max_n: usize,
    add1: bool,
    fold: bool,
) -> f64 {
    let (refs, cand): (Vec<Vec<String>>, Vec<String>) = if fold {
        (refs.iter().map(|r| lower(r)).collect(), lower(cand))
    } else {
        (refs.to_vec(), cand.to_vec())
    };
    if cand.is_empty() {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 1..=max_n {
        let cg = ngrams(&cand, n);
        let rgs: Vec<Vec<Vec<String>>> = refs.iter().map(|r| ngrams(r, n)).collect();
        let mut seen: Vec<Vec<String>> = Vec::new();
        let mut matched = 0usize;
        for g in &cg {
            if seen.contains(g) {
                continue;
            }
            seen.push(g.clone());
            let in_cand = count(&cg, g);
            let in_ref = rgs.iter().map(|rg| count(rg, g)).max().unwrap_or(0);
            matched += in_cand.min(in_ref);
        }
        let total = cg.len();
        let p = if matched == 0 {
            if add1 {
                1.0 / (total as f64 + 1.0)
            } else {
                return 0.0;
            }
        } else {
            matched as f64 / total as f64
        };
        product *= p;
    }
    let c = cand.len();
    let mut r = refs[0].len();
    for x in refs.iter().map(Vec::len) {
        let (dx, dr) = (x.abs_diff(c), r.abs_diff(c));
        if dx < dr || (dx == dr && x < r) {
            r = x;
        }
    }
    let bp = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    bp * product.powf(1.0 / max_n as f64)
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Clipped n-gram overlap F1.
pub fn oracle_rouge_n(reference: &[String], cand: &[String], n: usize) -> f64 {
    let (reference, cand) = (lower(reference), lower(cand));
    let rg = ngrams(&reference, n);
    let cg = ngrams(&cand, n);
    if rg.is_empty() && cg.is_empty() {
        return if !reference.is_empty() && reference == cand {
            1.0
        } else {
            0.0
        };
    }
    if rg.is_empty() || cg.is_empty() {
        return 0.0;
    }
    let mut seen: Vec<Vec<String>> = Vec::new();
    let mut overlap = 0;
    for g in &cg {
        if !seen.contains(g) {
            seen.push(g.clone());
            overlap += count(&cg, g).min(count(&rg, g));
        }
    }
    f1(
        overlap as f64 / cg.len() as f64,
        overlap as f64 / rg.len() as f64,
    )
}

/// LCS length by memoised recursion over suffixes.
pub fn oracle_lcs(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut Vec<Vec<Option<usize>>>,
    ) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len()]; a.len()];
    go(a, b, 0, 0, &mut memo)
}

pub fn oracle_rouge_l(reference: &[String], cand: &[String]) -> f64 {
    let (reference, cand) = (lower(reference), lower(cand));
    if reference.is_empty() || cand.is_empty() {
        return 0.0;
    }
    let l = oracle_lcs(&reference, &cand) as f64;
    f1(l / cand.len() as f64, l / reference.len() as f64)
}

/// Greedy-matching F1 over an explicitly edited copy of the matrix.
/// `mode`: 0 plain, 1 oracle, 2 anti-oracle.
pub fn oracle_sim(m: &[Vec<f64>], rf: &[bool], cf: &[bool], mode: u8) -> f64 {
    let mut e: Vec<Vec<f64>> = m.to_vec();
    for i in 0..e.len() {
        for j in 0..e[i].len() {
            if mode == 1 && rf[i] && cf[j] {
                e[i][j] = 1.0;
            }
            if mode == 2 && (rf[i] || cf[j]) {
                e[i][j] = 0.0;
            }
        }
    }
    let rows = e.len() as f64;
    let cols = e[0].len() as f64;
    let recall: f64 = e
        .iter()
        .map(|row| row.iter().cloned().fold(f64::MIN, f64::max))
        .sum::<f64>()
        / rows;
    let precision: f64 = (0..e[0].len())
        .map(|j| e.iter().map(|row| row[j]).fold(f64::MIN, f64::max))
        .sum::<f64>()
        / cols;
    f1(precision, recall)
}

pub fn sentence(tokens: &[&str], spans: &[(usize, usize, &str)]) -> AnnotatedSentence {
    AnnotatedSentence::new(tokens.to_vec(), spans.to_vec()).unwrap()
}

/// The two-sentence example pair used throughout the docs.
pub fn john_corpus() -> ParallelCorpus {
    let r = sentence(
        &["John", "likes", "apples", "and", "oranges", "."],
        &[(0, 1, "POS:PROPN"), (2, 3, "POS:NOUN"), (4, 5, "POS:NOUN")],
    );
    let c = sentence(
        &["John", "loves", "bananas", "and", "apples", "."],
        &[(0, 1, "POS:PROPN"), (2, 3, "POS:NOUN"), (4, 5, "POS:NOUN")],
    );
    ParallelCorpus::new(
        vec![SentencePair::new("p1", vec![r], c)],
        Default::default(),
    )
    .unwrap()
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}
