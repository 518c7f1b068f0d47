//! Prompt/target encodings for joint segmentation and glossing, and decoders
//! that turn (untrusted) model output back into segmentation and gloss lines.
//!
//! The interleaved format writes each gloss immediately followed by its
//! morpheme in parentheses, e.g. `INTERJ(o) you.know(wōlē)-ZERO(0)=ART(n)`.
//! Literal `(`, `)` and `\` inside glosses or morphemes are backslash-escaped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{compare_structures, Misalignment};
use crate::igt::{is_punctuation_token, normalize_whitespace, parse_line, IgtRecord, MorphStructure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFormat {
    MultitaskGloss,
    MultitaskSeg,
    Concatenated,
    Interleaved,
}

impl TaskFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskFormat::MultitaskGloss => "multitask_gloss",
            TaskFormat::MultitaskSeg => "multitask_seg",
            TaskFormat::Concatenated => "concatenated",
            TaskFormat::Interleaved => "interleaved",
        }
    }

    fn instruction(self) -> &'static str {
        match self {
            TaskFormat::MultitaskGloss => "Predict the glosses",
            TaskFormat::MultitaskSeg => "Predict the segmentation",
            TaskFormat::Concatenated => "Predict the morphological segmentation and glosses",
            TaskFormat::Interleaved => "Predict the glosses and morphological segmentation (in parentheses)",
        }
    }
}

impl fmt::Display for TaskFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multitask_gloss" | "multitask-gloss" => Ok(TaskFormat::MultitaskGloss),
            "multitask_seg" | "multitask-seg" => Ok(TaskFormat::MultitaskSeg),
            "concatenated" | "concat" => Ok(TaskFormat::Concatenated),
            "interleaved" => Ok(TaskFormat::Interleaved),
            other => Err(format!("unknown task format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("record has no segmentation")]
    MissingSegmentation,
    #[error("segmentation and glosses are misaligned at word {word}")]
    Misaligned { word: usize },
}

/// Prompt and training target; `prompt + target` is the full template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncodedExample {
    pub prompt: String,
    pub target: String,
}

impl EncodedExample {
    pub fn full(&self) -> String {
        format!("{}{}", self.prompt, self.target)
    }
}

/// Display names for common metalanguage glottocodes.
fn metalanguage_name(code: &str) -> Option<&'static str> {
    Some(match code {
        "stan1293" => "English",
        "stan1288" => "Spanish",
        "stan1290" => "French",
        "stan1295" => "German",
        "port1283" => "Portuguese",
        "russ1263" => "Russian",
        "mand1415" => "Mandarin Chinese",
        "indo1316" => "Indonesian",
        "nucl1301" => "Turkish",
        "japa1256" => "Japanese",
        "ital1282" => "Italian",
        "dutc1256" => "Dutch",
        _ => return None,
    })
}

fn language_label(rec: &IgtRecord) -> String {
    rec.language_name
        .as_deref()
        .or(rec.glottocode.as_deref())
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .unwrap_or("an unknown language")
        .to_string()
}

fn metalanguage_label(rec: &IgtRecord) -> String {
    match rec.metalang_glottocode.as_deref().map(str::trim) {
        Some(code) if !code.is_empty() => metalanguage_name(code).map_or_else(|| code.to_string(), str::to_string),
        _ => "English".to_string(),
    }
}

fn first_mismatch(seg: &MorphStructure, gloss: &MorphStructure) -> usize {
    seg.words
        .iter()
        .zip(&gloss.words)
        .position(|(s, g)| s.len() != g.len() || !s.boundaries().eq(g.boundaries()))
        .unwrap_or_else(|| seg.word_count().min(gloss.word_count()))
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        if matches!(c, '(' | ')' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
}

fn strip_punctuation(ms: &MorphStructure) -> MorphStructure {
    MorphStructure {
        words: ms.content_words().cloned().collect(),
    }
}

/// Pairs glosses with morphemes as `GLOSS(morpheme)` units.
///
/// Structures must agree in word count, per-word morpheme count and boundary
/// kinds. If they only disagree on standalone punctuation, punctuation words
/// are dropped from both sides first.
pub fn encode_interleaved_body(seg: &MorphStructure, gloss: &MorphStructure) -> Result<String, EncodeError> {
    let (seg, gloss) = if seg.same_shape(gloss) {
        (seg.clone(), gloss.clone())
    } else {
        let (s, g) = (strip_punctuation(seg), strip_punctuation(gloss));
        if !s.same_shape(&g) {
            return Err(EncodeError::Misaligned {
                word: first_mismatch(seg, gloss),
            });
        }
        (s, g)
    };
    let mut out = String::new();
    for (i, (sw, gw)) in seg.words.iter().zip(&gloss.words).enumerate() {
        if i > 0 {
            out.push(' ');
        }
        for (sm, gm) in sw.morphemes.iter().zip(&gw.morphemes) {
            out.push_str(gm.boundary.as_str());
            escape_into(&mut out, &gm.text);
            out.push('(');
            escape_into(&mut out, &sm.text);
            out.push(')');
        }
    }
    Ok(out)
}

fn aligned_lines(rec: &IgtRecord) -> Result<(MorphStructure, MorphStructure), EncodeError> {
    let seg = rec
        .segmentation
        .as_deref()
        .filter(|s| !s.trim().is_empty())
        .ok_or(EncodeError::MissingSegmentation)?;
    let (seg, gloss) = (parse_line(seg), parse_line(&rec.glosses));
    if compare_structures(&seg, &gloss) != Misalignment::Aligned {
        return Err(EncodeError::Misaligned {
            word: first_mismatch(&strip_punctuation(&seg), &strip_punctuation(&gloss)),
        });
    }
    Ok((seg, gloss))
}

/// Renders a record in one of the task templates, split at the output label.
///
/// For the concatenated format the target starts at the `Segmentation:` line
/// so both output lines are generated; for the other formats the prompt ends
/// with `<Label>: ` and the target is the bare value.
pub fn encode_example(rec: &IgtRecord, fmt: TaskFormat) -> Result<EncodedExample, EncodeError> {
    let lang = language_label(rec);
    let mut prompt = format!(
        "{} for the following text in {lang}.\nText in {lang}: {}\n",
        fmt.instruction(),
        normalize_whitespace(&rec.transcription)
    );
    if let Some(tr) = rec.translation.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
        prompt.push_str(&format!("Translation in {}: {tr}\n", metalanguage_label(rec)));
    }
    let glosses = normalize_whitespace(&rec.glosses);
    let target = match fmt {
        TaskFormat::MultitaskGloss => {
            prompt.push_str("Glosses: ");
            glosses
        }
        TaskFormat::MultitaskSeg => {
            let seg = rec
                .segmentation
                .as_deref()
                .map(normalize_whitespace)
                .filter(|s| !s.is_empty())
                .ok_or(EncodeError::MissingSegmentation)?;
            prompt.push_str("Segmentation: ");
            seg
        }
        TaskFormat::Concatenated => {
            aligned_lines(rec)?;
            let seg = normalize_whitespace(rec.segmentation.as_deref().unwrap_or_default());
            format!("Segmentation: {seg}\nGlosses: {glosses}")
        }
        TaskFormat::Interleaved => {
            let (seg, gloss) = aligned_lines(rec)?;
            prompt.push_str("Output: ");
            encode_interleaved_body(&seg, &gloss)?
        }
    };
    Ok(EncodedExample { prompt, target })
}

/// Full template string for a record.
pub fn encode(rec: &IgtRecord, fmt: TaskFormat) -> Result<String, EncodeError> {
    encode_example(rec, fmt).map(|e| e.full())
}

/// Decoded model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedPrediction {
    pub segmentation: Option<String>,
    pub glosses: String,
    pub well_formed: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed output: {}", diagnostics.join("; "))]
pub struct DecodeError {
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Keep whatever parses and report the rest in diagnostics.
    #[default]
    Lenient,
    /// Any diagnostic is an error.
    Strict,
}

fn finish(pred: DecodedPrediction, mode: DecodeMode) -> Result<DecodedPrediction, DecodeError> {
    if mode == DecodeMode::Strict && !pred.well_formed {
        Err(DecodeError {
            diagnostics: pred.diagnostics,
        })
    } else {
        Ok(pred)
    }
}

struct Unit {
    gloss: String,
    morpheme: String,
    boundary: char,
}

/// Parses one whitespace-delimited word into units. Returns the units parsed
/// before the first error, plus that error.
fn parse_interleaved_word(word: &str) -> (Vec<Unit>, Option<String>) {
    let mut units = Vec::new();
    let mut chars = word.chars().peekable();
    let mut boundary = '\0';
    loop {
        let mut gloss = String::new();
        let mut opened = false;
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some(e) => gloss.push(e),
                    None => return (units, Some("dangling escape".into())),
                },
                '(' => {
                    opened = true;
                    break;
                }
                ')' | '-' | '=' => return (units, Some(format!("unexpected {c:?} in gloss"))),
                _ => gloss.push(c),
            }
        }
        if !opened {
            return (units, Some(format!("gloss {gloss:?} has no parenthesized morpheme")));
        }
        if gloss.is_empty() {
            return (units, Some("empty gloss".into()));
        }
        let mut morpheme = String::new();
        let mut closed = false;
        while let Some(c) = chars.next() {
            match c {
                '\\' => match chars.next() {
                    Some(e) => morpheme.push(e),
                    None => return (units, Some("dangling escape".into())),
                },
                ')' => {
                    closed = true;
                    break;
                }
                _ => morpheme.push(c),
            }
        }
        if !closed {
            return (units, Some("unbalanced parenthesis".into()));
        }
        if morpheme.is_empty() {
            return (units, Some(format!("empty morpheme for gloss {gloss:?}")));
        }
        units.push(Unit {
            gloss,
            morpheme,
            boundary,
        });
        match chars.next() {
            None => return (units, None),
            Some(c @ ('-' | '=')) => boundary = c,
            Some(c) => return (units, Some(format!("unexpected {c:?} after unit"))),
        }
    }
}

fn render_units(units: &[Unit], pick: impl Fn(&Unit) -> &str) -> String {
    let mut out = String::new();
    for u in units {
        if u.boundary != '\0' {
            out.push(u.boundary);
        }
        out.push_str(pick(u));
    }
    out
}

/// Decodes an interleaved body. A leading `Output:` label is tolerated.
pub fn decode_interleaved_with(output: &str, mode: DecodeMode) -> Result<DecodedPrediction, DecodeError> {
    let body = output.trim();
    let body = body.strip_prefix("Output:").unwrap_or(body);
    let mut diagnostics = Vec::new();
    let mut seg_words = Vec::new();
    let mut gloss_words = Vec::new();
    for (i, word) in body.split_whitespace().enumerate() {
        let (units, err) = parse_interleaved_word(word);
        if let Some(e) = err {
            diagnostics.push(format!("word {i} ({word:?}): {e}"));
        }
        if units.is_empty() {
            continue;
        }
        let seg = render_units(&units, |u| &u.morpheme);
        let gloss = render_units(&units, |u| &u.gloss);
        if is_punctuation_token(&seg) != is_punctuation_token(&gloss) {
            diagnostics.push(format!(
                "word {i} ({word:?}): punctuation paired with a non-punctuation token"
            ));
        }
        seg_words.push(seg);
        gloss_words.push(gloss);
    }
    if seg_words.is_empty() && diagnostics.is_empty() {
        diagnostics.push("empty output".into());
    }
    let pred = DecodedPrediction {
        segmentation: Some(seg_words.join(" ")),
        glosses: gloss_words.join(" "),
        well_formed: diagnostics.is_empty(),
        diagnostics,
    };
    finish(pred, mode)
}

/// Lenient interleaved decoding; never fails.
pub fn decode_interleaved(output: &str) -> DecodedPrediction {
    decode_interleaved_with(output, DecodeMode::Lenient).expect("lenient decoding is total")
}

fn labeled<'a>(line: &'a str, label: &str) -> Option<&'a str> {
    line.trim().strip_prefix(label).map(str::trim)
}

/// Finds a `Segmentation:` line followed by a `Glosses:` line.
pub fn decode_concatenated_with(output: &str, mode: DecodeMode) -> Result<DecodedPrediction, DecodeError> {
    let lines: Vec<&str> = output.lines().collect();
    let seg_at = lines.iter().position(|l| labeled(l, "Segmentation:").is_some());
    let gloss_from = seg_at.map_or(0, |i| i + 1);
    let glosses = lines[gloss_from.min(lines.len())..]
        .iter()
        .find_map(|l| labeled(l, "Glosses:"))
        .map(normalize_whitespace)
        .filter(|g| !g.is_empty());
    let segmentation = seg_at
        .and_then(|i| labeled(lines[i], "Segmentation:"))
        .map(normalize_whitespace)
        .filter(|s| !s.is_empty());
    let mut diagnostics = Vec::new();
    if segmentation.is_none() {
        diagnostics.push("missing Segmentation: line".to_string());
    }
    if glosses.is_none() {
        diagnostics.push("missing Glosses: line".to_string());
    }
    let pred = DecodedPrediction {
        segmentation,
        glosses: glosses.unwrap_or_default(),
        well_formed: diagnostics.is_empty(),
        diagnostics,
    };
    finish(pred, mode)
}

pub fn decode_concatenated(output: &str) -> DecodedPrediction {
    decode_concatenated_with(output, DecodeMode::Lenient).expect("lenient decoding is total")
}
