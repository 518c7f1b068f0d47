//! Evaluation metrics for glossing, segmentation and gloss/segmentation
//! alignment.

pub mod alignment;
pub mod bleu;
pub mod distance;
pub mod gloss;
pub mod report;
pub mod segmentation;

use thiserror::Error;

use crate::igt::parse_line;

pub use alignment::{abstract_line, abstract_structure, alignment_counts, alignment_score, AbstractSequence};
pub use bleu::{bleu, bleu_stats, BleuStats, Granularity};
pub use distance::{char_edit_distance, edit_distance};
pub use gloss::{cer, mer, morpheme_accuracy, wer, word_accuracy};
pub use report::{aggregate, GroupedAggregate, MetricReport, Ratio, ReportSummary};
pub use segmentation::{seg_f1, seg_word_accuracy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("gold line is empty")]
    EmptyGold,
    #[error("cannot aggregate an empty list of reports")]
    EmptyAggregate,
}

/// Full report for one example.
///
/// Segmentation metrics need both `gold_seg` and `pred_seg`; the alignment
/// score needs `pred_seg`.
pub fn score_example(
    gold_gloss: &str,
    pred_gloss: &str,
    gold_seg: Option<&str>,
    pred_seg: Option<&str>,
) -> Result<MetricReport, MetricError> {
    let (g, p) = (parse_line(gold_gloss), parse_line(pred_gloss));
    let gloss = report::GlossCounts {
        mer: gloss::mer_structures(&g, &p),
        wer: gloss::wer_counts(gold_gloss, pred_gloss)?,
        cer: gloss::cer_unchecked(gold_gloss, pred_gloss),
        morpheme_accuracy: gloss::morpheme_accuracy_structures(&g, &p),
        word_accuracy: gloss::word_accuracy_structures(&g, &p),
        bleu_morpheme: bleu::bleu_structures(&g, &p, Granularity::Morpheme),
        bleu_word: bleu::bleu_structures(&g, &p, Granularity::Word),
        bleu_char: bleu::bleu_structures(&g, &p, Granularity::Char),
    };
    let pred_seg_ms = pred_seg.map(parse_line);
    let segmentation = match (gold_seg, pred_seg, &pred_seg_ms) {
        (Some(gs), Some(ps), Some(pm)) if !gs.trim().is_empty() => {
            Some(segmentation::segmentation_structures(gs, ps, &parse_line(gs), pm))
        }
        _ => None,
    };
    Ok(MetricReport {
        examples: 1,
        gloss,
        segmentation,
        alignment: pred_seg_ms.as_ref().map(|s| alignment::alignment_structures(&p, s)),
    })
}
