//! String similarity measures shared by candidate retrieval, relation
//! scoring and the stub model backends.

use std::collections::HashMap;

/// Pluggable relation/entity similarity. Implementations must be symmetric
/// and return 1.0 for identical inputs.
pub trait SimilarityScorer: Send + Sync {
    fn score(&self, a: &str, b: &str) -> f64;
}

/// Character-bigram Dice coefficient over the raw strings.
#[derive(Debug, Clone, Copy, Default)]
pub struct BigramDice;

impl SimilarityScorer for BigramDice {
    fn score(&self, a: &str, b: &str) -> f64 {
        sim_score(a, b)
    }
}

/// Character bigrams of `s`, in order, repeats kept.
pub fn bigrams(s: &str) -> Vec<(char, char)> {
    let chars: Vec<char> = s.chars().collect();
    chars.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `2 |A ∩ B| / (|A| + |B|)` over bigram multisets.
///
/// Identical strings score 1 even when they are too short to have bigrams;
/// otherwise a string without bigrams scores 0 against everything.
pub fn sim_score(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let ba = bigrams(a);
    let bb = bigrams(b);
    if ba.is_empty() || bb.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<(char, char), usize> = HashMap::with_capacity(ba.len());
    for g in &ba {
        *counts.entry(*g).or_default() += 1;
    }
    let mut shared = 0usize;
    for g in &bb {
        if let Some(c) = counts.get_mut(g) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    2.0 * shared as f64 / (ba.len() + bb.len()) as f64
}

/// Whether the two strings have at least one character bigram in common.
pub fn shares_bigram(a: &str, b: &str) -> bool {
    let ga = bigrams(a);
    if ga.is_empty() {
        return false;
    }
    let gb = bigrams(b);
    gb.iter().any(|g| ga.contains(g))
}

/// Levenshtein distance in characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lev(a, b) / max(|a|, |b|)`; two empty strings are identical.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / longest as f64
}

/// Strips a trailing bracketed qualifier: `"Jackie Chan [Hong Kong actor]"`
/// becomes `"Jackie Chan"`. Names without a qualifier are returned trimmed.
pub fn base_name(name: &str) -> &str {
    let trimmed = name.trim_end();
    if let Some(stripped) = trimmed.strip_suffix(']') {
        if let Some(open) = stripped.rfind('[') {
            let base = stripped[..open].trim_end();
            if !base.is_empty() {
                return base;
            }
        }
    }
    name.trim()
}
