//! Structure-only alignment between a gloss line and a segmentation line.
//!
//! Each line is reduced to an abstract sequence where every morpheme becomes
//! `x`, boundaries are kept and standalone punctuation is dropped. The score
//! is one minus the character edit distance over the longer length, and needs
//! no gold reference.

use std::fmt;

use crate::igt::{parse_line, MorphStructure};

use super::distance::char_edit_distance;
use super::report::AlignmentCounts;

/// String over `{x, -, =, ' '}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AbstractSequence(String);

impl AbstractSequence {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for AbstractSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn abstract_structure(ms: &MorphStructure) -> AbstractSequence {
    let mut out = String::new();
    for word in ms.content_words() {
        if !out.is_empty() {
            out.push(' ');
        }
        for m in &word.morphemes {
            out.push_str(m.boundary.as_str());
            out.push('x');
        }
    }
    AbstractSequence(out)
}

pub fn abstract_line(line: &str) -> AbstractSequence {
    abstract_structure(&parse_line(line))
}

pub fn alignment_counts(gloss_line: &str, seg_line: &str) -> AlignmentCounts {
    alignment_structures(&parse_line(gloss_line), &parse_line(seg_line))
}

pub(crate) fn alignment_structures(gloss: &MorphStructure, seg: &MorphStructure) -> AlignmentCounts {
    let (a, b) = (abstract_structure(gloss), abstract_structure(seg));
    // ASCII-only, so byte length is character length
    AlignmentCounts {
        distance: char_edit_distance(a.as_str(), b.as_str()) as u64,
        max_len: a.len().max(b.len()) as u64,
    }
}

pub fn alignment_score(gloss_line: &str, seg_line: &str) -> f64 {
    alignment_counts(gloss_line, seg_line).score()
}
