//! Frequency-lexicon fallback glosser.
//!
//! Learns, per language, which segmentation and gloss each training word and
//! morpheme most often receives, then predicts by lookup:
//!
//! 1. known word segmentation: use it and gloss each morpheme by its most
//!    frequent gloss (`???` when unseen);
//! 2. known whole-word gloss only: keep the word unsegmented;
//! 3. otherwise `???`.
//!
//! Ties go to the lexicographically smallest candidate. Output lines are
//! aligned by construction.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codecs::DecodedPrediction;
use crate::corpus::{detect_misalignment, Misalignment, UNDETERMINED};
use crate::igt::{nfc, parse_line, IgtRecord, Morpheme, Split, Word, UNKNOWN_GLOSS};

/// Candidate → count.
pub type Frequencies = BTreeMap<String, u64>;

/// Language → key → candidate frequencies.
pub type Table = BTreeMap<String, BTreeMap<String, Frequencies>>;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("invalid lexicon file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlossLexicon {
    pub morpheme_to_gloss: Table,
    pub word_to_seg: Table,
    pub word_to_gloss: Table,
}

fn bump(table: &mut Table, lang: &str, key: &str, candidate: String) {
    *table
        .entry(lang.to_string())
        .or_default()
        .entry(key.to_string())
        .or_default()
        .entry(candidate)
        .or_insert(0) += 1;
}

/// Highest count wins; ties go to the smallest candidate.
pub fn best_candidate(freqs: &Frequencies) -> Option<&str> {
    // BTreeMap iterates in ascending key order, so keep the first maximum.
    let mut best: Option<(&str, u64)> = None;
    for (cand, &count) in freqs {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((cand, count));
        }
    }
    best.map(|(c, _)| c)
}

fn lang_key(glottocode: Option<&str>) -> &str {
    glottocode
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or(UNDETERMINED)
}

fn content_tokens(line: &str) -> Vec<String> {
    parse_line(line).content_words().map(Word::render).collect()
}

impl GlossLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one record. Only train-split records contribute; segmentation
    /// tables come from aligned records, whole-word glosses also from records
    /// without segmentation when transcription and gloss word counts agree.
    pub fn observe(&mut self, rec: &IgtRecord) {
        if rec.split != Split::Train {
            return;
        }
        let lang = lang_key(rec.glottocode.as_deref());
        let surface = content_tokens(&rec.transcription);
        let gloss = parse_line(&rec.glosses);
        let gloss_words: Vec<&Word> = gloss.content_words().collect();
        match detect_misalignment(rec) {
            Misalignment::Aligned => {
                let seg = parse_line(rec.segmentation.as_deref().unwrap_or_default());
                let seg_words: Vec<&Word> = seg.content_words().collect();
                let use_surface = surface.len() == seg_words.len();
                for (i, (sw, gw)) in seg_words.iter().zip(&gloss_words).enumerate() {
                    let key = if use_surface {
                        surface[i].clone()
                    } else {
                        sw.texts().collect::<String>()
                    };
                    bump(&mut self.word_to_seg, lang, &key, sw.render());
                    bump(&mut self.word_to_gloss, lang, &key, gw.render());
                    for (sm, gm) in sw.morphemes.iter().zip(&gw.morphemes) {
                        bump(&mut self.morpheme_to_gloss, lang, &sm.text, gm.text.clone());
                    }
                }
            }
            Misalignment::NoSegmentation if surface.len() == gloss_words.len() => {
                for (key, gw) in surface.iter().zip(&gloss_words) {
                    bump(&mut self.word_to_gloss, lang, key, gw.render());
                }
            }
            _ => {}
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LexiconError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    fn lookup<'a>(table: &'a Table, lang: &str, key: &str) -> Option<&'a str> {
        table.get(lang)?.get(key).and_then(best_candidate)
    }

    fn gloss_morpheme(&self, lang: &str, morpheme: &str) -> String {
        Self::lookup(&self.morpheme_to_gloss, lang, morpheme)
            .unwrap_or(UNKNOWN_GLOSS)
            .to_string()
    }

    fn predict_word(&self, lang: &str, token: &str) -> (Word, Word) {
        let surface = parse_line(token).words.pop().unwrap_or_default();
        if surface.is_punctuation() {
            return (surface.clone(), surface);
        }
        let (seg, gloss) = if let Some(seg) = Self::lookup(&self.word_to_seg, lang, token) {
            let seg = parse_line(seg).words.pop().unwrap_or_default();
            let gloss = mirror(&seg, |m| self.gloss_morpheme(lang, &m.text));
            (seg, gloss)
        } else if let Some(group) = Self::lookup(&self.word_to_gloss, lang, token) {
            let group = parse_line(group).words.pop().unwrap_or_default();
            let gloss = if surface.len() == group.len() {
                let mut texts = group.morphemes.iter();
                mirror(&surface, |_| texts.next().map(|m| m.text.clone()).unwrap_or_default())
            } else if surface.len() == 1 {
                // fuse the group into one label so the unsegmented word stays aligned
                let fused = group.texts().collect::<Vec<_>>().join(".");
                mirror(&surface, |_| fused.clone())
            } else {
                unknown(&surface)
            };
            (surface, gloss)
        } else {
            let gloss = unknown(&surface);
            (surface, gloss)
        };
        match (seg.is_punctuation(), gloss.is_punctuation()) {
            (true, false) => (seg.clone(), seg),
            (false, true) => {
                let gloss = unknown(&seg);
                (seg, gloss)
            }
            _ => (seg, gloss),
        }
    }

    /// Predicts segmentation and glosses for a transcription.
    pub fn predict(&self, glottocode: Option<&str>, transcription: &str) -> DecodedPrediction {
        let lang = lang_key(glottocode);
        let text = nfc(transcription);
        let (seg, gloss): (Vec<String>, Vec<String>) = text
            .split_whitespace()
            .map(|tok| {
                let (s, g) = self.predict_word(lang, tok);
                (s.render(), g.render())
            })
            .unzip();
        DecodedPrediction {
            segmentation: Some(seg.join(" ")),
            glosses: gloss.join(" "),
            well_formed: true,
            diagnostics: Vec::new(),
        }
    }
}

/// Gloss word with the template's shape; empty labels become `???` so the
/// word cannot vanish from the rendered line.
fn mirror(template: &Word, mut label: impl FnMut(&Morpheme) -> String) -> Word {
    Word {
        morphemes: template
            .morphemes
            .iter()
            .map(|m| {
                let text = label(m);
                let text = if text.is_empty() {
                    UNKNOWN_GLOSS.to_string()
                } else {
                    text
                };
                Morpheme::new(text, m.boundary)
            })
            .collect(),
    }
}

fn unknown(template: &Word) -> Word {
    mirror(template, |_| UNKNOWN_GLOSS.to_string())
}

pub fn build_lexicon<'a>(records: impl IntoIterator<Item = &'a IgtRecord>) -> GlossLexicon {
    let mut lex = GlossLexicon::new();
    for r in records {
        lex.observe(r);
    }
    lex
}

pub fn predict(lex: &GlossLexicon, glottocode: Option<&str>, transcription: &str) -> DecodedPrediction {
    lex.predict(glottocode, transcription)
}
