//! Tools for interlinear glossed text: parsing, corpus cleanup and auditing,
//! glossing/segmentation/alignment metrics, prompt codecs, a lookup-based
//! fallback glosser and perplexity-based gating.

pub mod analytics;
pub mod baseline;
pub mod cli;
pub mod codecs;
pub mod corpus;
pub mod igt;
pub mod metrics;

pub use igt::{
    detokenize, is_punctuation_token, parse_line, Boundary, IgtRecord, MorphStructure, Morpheme, Split, Word,
};
