//! Core IGT domain types and the line parser.
//!
//! A gloss or segmentation line is a whitespace-separated sequence of words,
//! each word a sequence of morphemes joined by `-` (affix) or `=` (clitic).
//! A `.` inside a token joins fused categories (`run.SG`) and is never a
//! boundary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::{is_nfc_quick, IsNormalized, UnicodeNormalization};

/// Placeholder gloss emitted for morphemes the baseline has never seen.
pub const UNKNOWN_GLOSS: &str = "???";

/// The null morpheme.
pub const NULL_MORPHEME: &str = "0";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Eval, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// One interlinear glossed example.
///
/// Field names and nullability follow the canonical JSONL corpus layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IgtRecord {
    pub id: String,
    pub transcription: String,
    pub segmentation: Option<String>,
    pub glosses: String,
    pub translation: Option<String>,
    pub glottocode: Option<String>,
    pub metalang_glottocode: Option<String>,
    pub language_name: Option<String>,
    pub source: String,
    pub split: Split,
}

impl IgtRecord {
    /// Minimal record with only the required lines set. Handy in tests and fixtures.
    pub fn new(id: impl Into<String>, transcription: impl Into<String>, glosses: impl Into<String>) -> Self {
        IgtRecord {
            id: id.into(),
            transcription: transcription.into(),
            segmentation: None,
            glosses: glosses.into(),
            translation: None,
            glottocode: None,
            metalang_glottocode: None,
            language_name: None,
            source: String::new(),
            split: Split::Train,
        }
    }

    pub fn with_segmentation(mut self, seg: impl Into<String>) -> Self {
        self.segmentation = Some(seg.into());
        self
    }

    pub fn with_translation(mut self, translation: impl Into<String>) -> Self {
        self.translation = Some(translation.into());
        self
    }

    pub fn with_glottocode(mut self, code: impl Into<String>) -> Self {
        self.glottocode = Some(code.into());
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// Checks the record-level invariants: transcription and glosses are
    /// non-empty after trimming.
    pub fn validate(&self) -> Result<(), String> {
        if self.transcription.trim().is_empty() {
            return Err("transcription is empty".into());
        }
        if self.glosses.trim().is_empty() {
            return Err("glosses is empty".into());
        }
        Ok(())
    }
}

/// Boundary that precedes a morpheme inside a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    None,
    Affix,
    Clitic,
}

impl Boundary {
    pub fn from_char(c: char) -> Option<Boundary> {
        match c {
            '-' => Some(Boundary::Affix),
            '=' => Some(Boundary::Clitic),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::None => "",
            Boundary::Affix => "-",
            Boundary::Clitic => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Morpheme {
    pub text: String,
    pub boundary: Boundary,
}

impl Morpheme {
    pub fn new(text: impl Into<String>, boundary: Boundary) -> Self {
        Morpheme {
            text: text.into(),
            boundary,
        }
    }
}

/// A word: its first morpheme always has [`Boundary::None`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    pub morphemes: Vec<Morpheme>,
}

impl Word {
    pub fn len(&self) -> usize {
        self.morphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphemes.is_empty()
    }

    pub fn boundaries(&self) -> impl Iterator<Item = Boundary> + '_ {
        self.morphemes.iter().map(|m| m.boundary)
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> + '_ {
        self.morphemes.iter().map(|m| m.text.as_str())
    }

    /// Surface form of the word with boundary markers.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.morphemes {
            out.push_str(m.boundary.as_str());
            out.push_str(&m.text);
        }
        out
    }

    /// True when the whole word is a standalone punctuation token.
    pub fn is_punctuation(&self) -> bool {
        is_punctuation_token(&self.render())
    }

    pub fn has_empty_morpheme(&self) -> bool {
        self.morphemes.iter().any(|m| m.text.is_empty())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.morphemes {
            f.write_str(m.boundary.as_str())?;
            f.write_str(&m.text)?;
        }
        Ok(())
    }
}

/// A parsed gloss or segmentation line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MorphStructure {
    pub words: Vec<Word>,
}

impl MorphStructure {
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn morpheme_count(&self) -> usize {
        self.words.iter().map(Word::len).sum()
    }

    /// All morphemes in reading order, ignoring word structure.
    pub fn morphemes(&self) -> impl Iterator<Item = &Morpheme> + '_ {
        self.words.iter().flat_map(|w| w.morphemes.iter())
    }

    /// Words that are not standalone punctuation.
    pub fn content_words(&self) -> impl Iterator<Item = &Word> + '_ {
        self.words.iter().filter(|w| !w.is_punctuation())
    }

    pub fn has_boundaries(&self) -> bool {
        self.words.iter().any(|w| w.len() > 1)
    }

    pub fn has_empty_morpheme(&self) -> bool {
        self.words.iter().any(Word::has_empty_morpheme)
    }

    /// Same word count, per-word morpheme count and boundary kinds.
    pub fn same_shape(&self, other: &MorphStructure) -> bool {
        self.words.len() == other.words.len()
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a.len() == b.len() && a.boundaries().eq(b.boundaries()))
    }
}

impl fmt::Display for MorphStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// NFC-normalize a string.
pub fn nfc(s: &str) -> String {
    match is_nfc_quick(s.chars()) {
        IsNormalized::Yes => s.to_owned(),
        _ => s.nfc().collect(),
    }
}

/// Collapse whitespace runs to single spaces and trim.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_word(token: &str) -> Word {
    let mut morphemes = Vec::new();
    let mut current = String::new();
    let mut boundary = Boundary::None;
    for c in token.chars() {
        match Boundary::from_char(c) {
            Some(next) => {
                morphemes.push(Morpheme::new(std::mem::take(&mut current), boundary));
                boundary = next;
            }
            None => current.push(c),
        }
    }
    morphemes.push(Morpheme::new(current, boundary));
    Word { morphemes }
}

/// Parse a gloss or segmentation line. Total: malformed words (e.g. `a--b`)
/// produce empty morpheme tokens rather than errors.
pub fn parse_line(line: &str) -> MorphStructure {
    let line = nfc(line);
    MorphStructure {
        words: line.split_whitespace().map(parse_word).collect(),
    }
}

/// Inverse of [`parse_line`] up to whitespace normalization.
pub fn detokenize(ms: &MorphStructure) -> String {
    ms.to_string()
}

fn is_punct_char(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// True iff every character is Unicode punctuation (P*), excluding the bare
/// boundary markers, the null morpheme and anything carrying the
/// [`UNKNOWN_GLOSS`] placeholder as a morpheme.
pub fn is_punctuation_token(tok: &str) -> bool {
    if tok.is_empty() || tok == "-" || tok == "=" || tok == NULL_MORPHEME {
        return false;
    }
    if !tok.chars().all(is_punct_char) {
        return false;
    }
    !tok.split(['-', '=']).any(|m| m == UNKNOWN_GLOSS)
}
