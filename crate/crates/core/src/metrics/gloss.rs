//! Glossing error rates and accuracies.

use crate::igt::{nfc, normalize_whitespace, parse_line, MorphStructure};

use super::distance::edit_distance;
use super::report::Ratio;
use super::MetricError;

/// Morpheme-level token with an out-of-band word separator, so no gloss
/// string can collide with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlossToken<'a> {
    Morpheme(&'a str),
    Sep,
}

/// Flattens morphemes with one [`GlossToken::Sep`] between consecutive words.
pub fn gloss_tokens(ms: &MorphStructure) -> Vec<GlossToken<'_>> {
    let mut out = Vec::with_capacity(ms.morpheme_count() + ms.word_count());
    for (i, word) in ms.words.iter().enumerate() {
        if i > 0 {
            out.push(GlossToken::Sep);
        }
        out.extend(word.texts().map(GlossToken::Morpheme));
    }
    out
}

fn non_empty(gold: &str) -> Result<(), MetricError> {
    if gold.trim().is_empty() {
        Err(MetricError::EmptyGold)
    } else {
        Ok(())
    }
}

pub fn mer_counts(gold: &str, pred: &str) -> Result<Ratio, MetricError> {
    non_empty(gold)?;
    Ok(mer_structures(&parse_line(gold), &parse_line(pred)))
}

pub(crate) fn mer_structures(gold: &MorphStructure, pred: &MorphStructure) -> Ratio {
    let (gt, pt) = (gloss_tokens(gold), gloss_tokens(pred));
    Ratio::new(edit_distance(&gt, &pt) as u64, gt.len() as u64)
}

/// Morpheme error rate. Separator tokens count in both the distance and the
/// gold length. May exceed 1.
pub fn mer(gold: &str, pred: &str) -> Result<f64, MetricError> {
    Ok(mer_counts(gold, pred)?.value().unwrap_or(0.0))
}

pub fn wer_counts(gold: &str, pred: &str) -> Result<Ratio, MetricError> {
    non_empty(gold)?;
    let (g, p) = (nfc(gold), nfc(pred));
    let gt: Vec<&str> = g.split_whitespace().collect();
    let pt: Vec<&str> = p.split_whitespace().collect();
    Ok(Ratio::new(edit_distance(&gt, &pt) as u64, gt.len() as u64))
}

pub fn wer(gold: &str, pred: &str) -> Result<f64, MetricError> {
    Ok(wer_counts(gold, pred)?.value().unwrap_or(0.0))
}

/// Character error rate over NFC scalar values of the whitespace-normalized lines.
pub fn cer_counts(gold: &str, pred: &str) -> Result<Ratio, MetricError> {
    non_empty(gold)?;
    Ok(cer_unchecked(gold, pred))
}

pub(crate) fn cer_unchecked(gold: &str, pred: &str) -> Ratio {
    let g: Vec<char> = normalize_whitespace(&nfc(gold)).chars().collect();
    let p: Vec<char> = normalize_whitespace(&nfc(pred)).chars().collect();
    Ratio::new(edit_distance(&g, &p) as u64, g.len() as u64)
}

pub fn cer(gold: &str, pred: &str) -> Result<f64, MetricError> {
    Ok(cer_counts(gold, pred)?.value().unwrap_or(0.0))
}

/// Position-wise morpheme matches within word-aligned groups over the gold
/// morpheme count.
pub fn morpheme_accuracy_counts(gold: &str, pred: &str) -> Result<Ratio, MetricError> {
    non_empty(gold)?;
    Ok(morpheme_accuracy_structures(&parse_line(gold), &parse_line(pred)))
}

pub(crate) fn morpheme_accuracy_structures(gold: &MorphStructure, pred: &MorphStructure) -> Ratio {
    let mut hits = 0u64;
    for (gw, pw) in gold.words.iter().zip(&pred.words) {
        hits += gw.texts().zip(pw.texts()).filter(|(a, b)| a == b).count() as u64;
    }
    Ratio::new(hits, gold.morpheme_count() as u64)
}

pub fn morpheme_accuracy(gold: &str, pred: &str) -> Result<f64, MetricError> {
    Ok(morpheme_accuracy_counts(gold, pred)?.value().unwrap_or(0.0))
}

/// Fraction of gold words whose predicted word at the same position is identical.
pub fn word_accuracy_counts(gold: &str, pred: &str) -> Result<Ratio, MetricError> {
    non_empty(gold)?;
    Ok(word_accuracy_structures(&parse_line(gold), &parse_line(pred)))
}

/// Identical words at the same position over the gold word count.
pub(crate) fn word_accuracy_structures(gold: &MorphStructure, pred: &MorphStructure) -> Ratio {
    let hits = gold.words.iter().zip(&pred.words).filter(|(a, b)| a == b).count();
    Ratio::new(hits as u64, gold.word_count() as u64)
}

pub fn word_accuracy(gold: &str, pred: &str) -> Result<f64, MetricError> {
    Ok(word_accuracy_counts(gold, pred)?.value().unwrap_or(0.0))
}
