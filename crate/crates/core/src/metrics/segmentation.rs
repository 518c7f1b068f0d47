//! Segmentation metrics: multiset morpheme F1, character error rate and
//! whole-word accuracy.

use std::collections::HashMap;

use crate::igt::{parse_line, MorphStructure};

use super::gloss::{cer_unchecked, word_accuracy_structures};
use super::report::{F1Counts, Ratio, SegmentationCounts};
use super::MetricError;

/// Multiset overlap of morpheme strings (boundaries excluded).
pub fn seg_f1_counts(gold: &str, pred: &str) -> F1Counts {
    seg_f1_structures(&parse_line(gold), &parse_line(pred))
}

pub(crate) fn seg_f1_structures(g: &MorphStructure, p: &MorphStructure) -> F1Counts {
    let mut gold_bag: HashMap<&str, u64> = HashMap::new();
    for m in g.morphemes() {
        *gold_bag.entry(m.text.as_str()).or_insert(0) += 1;
    }
    let mut overlap = 0;
    for m in p.morphemes() {
        if let Some(c) = gold_bag.get_mut(m.text.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    F1Counts {
        overlap,
        predicted: p.morpheme_count() as u64,
        gold: g.morpheme_count() as u64,
    }
}

pub fn seg_f1(gold: &str, pred: &str) -> f64 {
    seg_f1_counts(gold, pred).f1()
}

/// Fraction of gold words whose positional prediction is identical,
/// boundaries included.
pub fn seg_word_accuracy_counts(gold: &str, pred: &str) -> Result<Ratio, MetricError> {
    if gold.trim().is_empty() {
        return Err(MetricError::EmptyGold);
    }
    Ok(word_accuracy_structures(&parse_line(gold), &parse_line(pred)))
}

pub fn seg_word_accuracy(gold: &str, pred: &str) -> Result<f64, MetricError> {
    Ok(seg_word_accuracy_counts(gold, pred)?.value().unwrap_or(0.0))
}

pub fn segmentation_counts(gold: &str, pred: &str) -> Result<SegmentationCounts, MetricError> {
    if gold.trim().is_empty() {
        return Err(MetricError::EmptyGold);
    }
    Ok(segmentation_structures(
        gold,
        pred,
        &parse_line(gold),
        &parse_line(pred),
    ))
}

/// Takes the raw lines (for CER) alongside their parsed structures.
pub(crate) fn segmentation_structures(
    gold: &str,
    pred: &str,
    g: &MorphStructure,
    p: &MorphStructure,
) -> SegmentationCounts {
    SegmentationCounts {
        f1: seg_f1_structures(g, p),
        cer: cer_unchecked(gold, pred),
        word_accuracy: word_accuracy_structures(g, p),
    }
}
