//! BLEU with clipped n-gram precision up to order 4 and a brevity penalty.
//!
//! Orders 2..=4 with no matches are add-one smoothed; a zero unigram match
//! count still yields 0 so disjoint outputs score 0.

use std::collections::HashMap;
use std::hash::Hash;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::igt::{parse_line, MorphStructure};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Morpheme,
    Word,
    Char,
}

/// Sufficient statistics for corpus BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl AddAssign for BleuStats {
    fn add_assign(&mut self, rhs: BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += rhs.matches[n];
            self.totals[n] += rhs.totals[n];
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

/// Maps tokens of both sides to dense ids so n-grams can be packed into a
/// single integer (32 bits per position, so up to order 4 fits in a u128).
fn intern<'a, T: Eq + Hash>(reference: &'a [T], hypothesis: &'a [T]) -> (Vec<u32>, Vec<u32>) {
    let mut ids: HashMap<&'a T, u32> = HashMap::new();
    let mut id_of = |t: &'a T| {
        let next = ids.len() as u32;
        *ids.entry(t).or_insert(next)
    };
    let r = reference.iter().map(&mut id_of).collect();
    let h = hypothesis.iter().map(&mut id_of).collect();
    (r, h)
}

fn sorted_ngrams(ids: &[u32], n: usize) -> Vec<u128> {
    let mut grams: Vec<u128> = ids
        .windows(n)
        .map(|w| w.iter().fold(0u128, |acc, &id| (acc << 32) | u128::from(id)))
        .collect();
    grams.sort_unstable();
    grams
}

/// Clipped match count: sum over distinct n-grams of min(hyp count, ref count).
fn clipped_matches(reference: &[u128], hypothesis: &[u128]) -> u64 {
    let (mut i, mut j, mut matches) = (0, 0, 0);
    while i < reference.len() && j < hypothesis.len() {
        match reference[i].cmp(&hypothesis[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                matches += 1;
                i += 1;
                j += 1;
            }
        }
    }
    matches
}

impl BleuStats {
    pub fn from_tokens<T: Eq + Hash>(reference: &[T], hypothesis: &[T]) -> Self {
        let mut stats = BleuStats {
            hyp_len: hypothesis.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        let (r, h) = intern(reference, hypothesis);
        for n in 1..=MAX_ORDER {
            stats.totals[n - 1] = hypothesis.len().saturating_sub(n - 1) as u64;
            if h.len() >= n && r.len() >= n {
                stats.matches[n - 1] = clipped_matches(&sorted_ngrams(&r, n), &sorted_ngrams(&h, n));
            }
        }
        stats
    }

    pub fn score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            let p = if n > 0 && self.matches[n] == 0 {
                1.0 / (self.totals[n] as f64 + 1.0)
            } else {
                self.matches[n] as f64 / self.totals[n] as f64
            };
            log_sum += p.ln();
        }
        let brevity = if self.hyp_len >= self.ref_len {
            1.0
        } else {
            (1.0 - self.ref_len as f64 / self.hyp_len as f64).exp()
        };
        brevity * (log_sum / MAX_ORDER as f64).exp()
    }
}

/// Units compared at each granularity: flattened morphemes (no separators),
/// whitespace words, or characters of the whitespace-normalized line.
pub fn units(line: &str, granularity: Granularity) -> Vec<String> {
    match granularity {
        Granularity::Morpheme => parse_line(line).morphemes().map(|m| m.text.clone()).collect(),
        Granularity::Word => parse_line(line).words.iter().map(|w| w.render()).collect(),
        Granularity::Char => parse_line(line).to_string().chars().map(String::from).collect(),
    }
}

pub fn bleu_stats(gold: &str, pred: &str, granularity: Granularity) -> BleuStats {
    bleu_structures(&parse_line(gold), &parse_line(pred), granularity)
}

pub(crate) fn bleu_structures(gold: &MorphStructure, pred: &MorphStructure, granularity: Granularity) -> BleuStats {
    match granularity {
        Granularity::Morpheme => {
            let g: Vec<&str> = gold.morphemes().map(|m| m.text.as_str()).collect();
            let p: Vec<&str> = pred.morphemes().map(|m| m.text.as_str()).collect();
            BleuStats::from_tokens(&g, &p)
        }
        Granularity::Word => {
            let words = |ms: &MorphStructure| ms.words.iter().map(|w| w.render()).collect::<Vec<_>>();
            BleuStats::from_tokens(&words(gold), &words(pred))
        }
        Granularity::Char => {
            let chars = |ms: &MorphStructure| ms.to_string().chars().collect::<Vec<char>>();
            BleuStats::from_tokens(&chars(gold), &chars(pred))
        }
    }
}

/// Sentence-level BLEU in `[0, 1]`.
pub fn bleu(gold: &str, pred: &str, granularity: Granularity) -> f64 {
    bleu_stats(gold, pred, granularity).score()
}
