//! Metric counts and their micro-averaged aggregation.
//!
//! Every reported ratio is backed by integer numerators and denominators so
//! corpus-level scores are recomputed from sums rather than averaged.

use std::collections::BTreeMap;
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::bleu::BleuStats;
use super::MetricError;

/// A ratio stored as its raw integer parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    /// `num / den`; `None` when the denominator is zero.
    pub fn value(&self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }
}

impl AddAssign for Ratio {
    fn add_assign(&mut self, rhs: Ratio) {
        self.num += rhs.num;
        self.den += rhs.den;
    }
}

/// Multiset overlap between predicted and gold morphemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct F1Counts {
    pub overlap: u64,
    pub predicted: u64,
    pub gold: u64,
}

impl F1Counts {
    pub fn precision(&self) -> f64 {
        match (self.predicted, self.gold) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (p, _) => self.overlap as f64 / p as f64,
        }
    }

    pub fn recall(&self) -> f64 {
        match (self.predicted, self.gold) {
            (0, 0) => 1.0,
            (_, 0) => 0.0,
            (_, g) => self.overlap as f64 / g as f64,
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

impl AddAssign for F1Counts {
    fn add_assign(&mut self, rhs: F1Counts) {
        self.overlap += rhs.overlap;
        self.predicted += rhs.predicted;
        self.gold += rhs.gold;
    }
}

/// Character edit distance between two abstractions and the longer length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub distance: u64,
    pub max_len: u64,
}

impl AlignmentCounts {
    /// `1 - distance / max_len`; 1.0 for two empty abstractions.
    pub fn score(&self) -> f64 {
        if self.max_len == 0 {
            1.0
        } else {
            1.0 - self.distance as f64 / self.max_len as f64
        }
    }
}

impl AddAssign for AlignmentCounts {
    fn add_assign(&mut self, rhs: AlignmentCounts) {
        self.distance += rhs.distance;
        self.max_len += rhs.max_len;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GlossCounts {
    pub mer: Ratio,
    pub wer: Ratio,
    pub cer: Ratio,
    pub morpheme_accuracy: Ratio,
    pub word_accuracy: Ratio,
    pub bleu_morpheme: BleuStats,
    pub bleu_word: BleuStats,
    pub bleu_char: BleuStats,
}

impl AddAssign for GlossCounts {
    fn add_assign(&mut self, rhs: GlossCounts) {
        self.mer += rhs.mer;
        self.wer += rhs.wer;
        self.cer += rhs.cer;
        self.morpheme_accuracy += rhs.morpheme_accuracy;
        self.word_accuracy += rhs.word_accuracy;
        self.bleu_morpheme += rhs.bleu_morpheme;
        self.bleu_word += rhs.bleu_word;
        self.bleu_char += rhs.bleu_char;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegmentationCounts {
    pub f1: F1Counts,
    pub cer: Ratio,
    pub word_accuracy: Ratio,
}

impl AddAssign for SegmentationCounts {
    fn add_assign(&mut self, rhs: SegmentationCounts) {
        self.f1 += rhs.f1;
        self.cer += rhs.cer;
        self.word_accuracy += rhs.word_accuracy;
    }
}

/// Raw counts for one example or an aggregate of many.
///
/// Segmentation metrics are present only when both gold and predicted
/// segmentations exist; alignment only when the prediction carries both lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub examples: u64,
    pub gloss: GlossCounts,
    pub segmentation: Option<SegmentationCounts>,
    pub alignment: Option<AlignmentCounts>,
}

fn add_opt<T: AddAssign + Copy>(acc: &mut Option<T>, rhs: Option<T>) {
    match (acc.as_mut(), rhs) {
        (Some(a), Some(r)) => *a += r,
        (None, Some(r)) => *acc = Some(r),
        _ => {}
    }
}

impl AddAssign<&MetricReport> for MetricReport {
    fn add_assign(&mut self, rhs: &MetricReport) {
        self.examples += rhs.examples;
        self.gloss += rhs.gloss;
        add_opt(&mut self.segmentation, rhs.segmentation);
        add_opt(&mut self.alignment, rhs.alignment);
    }
}

/// Flat view of a report: ratio values plus the counts behind them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub examples: u64,
    pub mer: Option<f64>,
    pub wer: Option<f64>,
    pub cer: Option<f64>,
    pub morpheme_accuracy: Option<f64>,
    pub word_accuracy: Option<f64>,
    pub bleu_morpheme: f64,
    pub bleu_word: f64,
    pub bleu_char: f64,
    pub seg_precision: Option<f64>,
    pub seg_recall: Option<f64>,
    pub seg_f1: Option<f64>,
    pub seg_cer: Option<f64>,
    pub seg_word_accuracy: Option<f64>,
    pub alignment: Option<f64>,
    pub counts: MetricReport,
}

impl MetricReport {
    pub fn mer(&self) -> Option<f64> {
        self.gloss.mer.value()
    }

    pub fn seg_f1(&self) -> Option<f64> {
        self.segmentation.map(|s| s.f1.f1())
    }

    pub fn alignment_score(&self) -> Option<f64> {
        self.alignment.map(|a| a.score())
    }

    pub fn summary(&self) -> ReportSummary {
        let seg = self.segmentation;
        ReportSummary {
            examples: self.examples,
            mer: self.gloss.mer.value(),
            wer: self.gloss.wer.value(),
            cer: self.gloss.cer.value(),
            morpheme_accuracy: self.gloss.morpheme_accuracy.value(),
            word_accuracy: self.gloss.word_accuracy.value(),
            bleu_morpheme: self.gloss.bleu_morpheme.score(),
            bleu_word: self.gloss.bleu_word.score(),
            bleu_char: self.gloss.bleu_char.score(),
            seg_precision: seg.map(|s| s.f1.precision()),
            seg_recall: seg.map(|s| s.f1.recall()),
            seg_f1: seg.map(|s| s.f1.f1()),
            seg_cer: seg.and_then(|s| s.cer.value()),
            seg_word_accuracy: seg.and_then(|s| s.word_accuracy.value()),
            alignment: self.alignment_score(),
            counts: *self,
        }
    }
}

/// Micro-average: sums every numerator and denominator.
pub fn aggregate<'a, I>(reports: I) -> Result<MetricReport, MetricError>
where
    I: IntoIterator<Item = &'a MetricReport>,
{
    let mut iter = reports.into_iter();
    let mut acc = *iter.next().ok_or(MetricError::EmptyAggregate)?;
    for r in iter {
        acc += r;
    }
    Ok(acc)
}

/// Incremental per-key aggregation, e.g. keyed by glottocode.
#[derive(Debug, Clone, Default)]
pub struct GroupedAggregate<K: Ord> {
    groups: BTreeMap<K, MetricReport>,
}

impl<K: Ord> GroupedAggregate<K> {
    pub fn new() -> Self {
        GroupedAggregate {
            groups: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, key: K, report: &MetricReport) {
        *self.groups.entry(key).or_default() += report;
    }

    pub fn groups(&self) -> &BTreeMap<K, MetricReport> {
        &self.groups
    }

    pub fn into_groups(self) -> BTreeMap<K, MetricReport> {
        self.groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_mer(num: u64, den: u64) -> MetricReport {
        MetricReport {
            examples: 1,
            gloss: GlossCounts {
                mer: Ratio::new(num, den),
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn aggregate_of_empty_is_error() {
        assert_eq!(aggregate(&[]), Err(MetricError::EmptyAggregate));
    }

    #[test]
    fn singleton_aggregate_is_identity() {
        let r = with_mer(1, 2);
        assert_eq!(aggregate(&[r]).unwrap(), r);
    }

    #[test]
    fn identical_reports_keep_ratios() {
        let r = with_mer(1, 3);
        let agg = aggregate(&[r, r]).unwrap();
        assert_eq!(agg.mer(), r.mer());
        assert_eq!(agg.examples, 2);
    }

    #[test]
    fn micro_average_sums_parts() {
        let agg = aggregate(&[with_mer(1, 2), with_mer(2, 2)]).unwrap();
        assert_eq!(agg.gloss.mer, Ratio::new(3, 4));
        assert!((agg.mer().unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn optional_parts_aggregate_when_present() {
        let mut a = with_mer(0, 1);
        a.alignment = Some(AlignmentCounts {
            distance: 2,
            max_len: 9,
        });
        let b = with_mer(0, 1);
        let agg = aggregate(&[a, b]).unwrap();
        assert_eq!(agg.alignment, a.alignment);
        assert!(agg.segmentation.is_none());
    }

    #[test]
    fn f1_edge_cases() {
        let both_empty = F1Counts::default();
        assert_eq!(both_empty.f1(), 1.0);
        let pred_empty = F1Counts {
            overlap: 0,
            predicted: 0,
            gold: 3,
        };
        assert_eq!(pred_empty.f1(), 0.0);
        let gold_empty = F1Counts {
            overlap: 0,
            predicted: 3,
            gold: 0,
        };
        assert_eq!(gold_empty.f1(), 0.0);
    }

    #[test]
    fn grouped_by_key() {
        let mut g = GroupedAggregate::new();
        g.add("ddo", &with_mer(1, 2));
        g.add("arp", &with_mer(0, 5));
        g.add("ddo", &with_mer(2, 2));
        let groups = g.into_groups();
        assert_eq!(groups.keys().copied().collect::<Vec<_>>(), vec!["arp", "ddo"]);
        assert_eq!(groups["ddo"].gloss.mer, Ratio::new(3, 4));
    }
}
