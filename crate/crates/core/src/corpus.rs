//! Corpus ingestion and cleanup: JSONL loading, punctuation normalization,
//! misalignment detection and repair, deduplication and audit statistics.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::igt::{is_punctuation_token, nfc, normalize_whitespace, parse_line, IgtRecord, MorphStructure, Split};

/// Language key used when a record has no glottocode.
pub const UNDETERMINED: &str = "und";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: invalid UTF-8")]
    Utf8 { line: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: invalid record: {message}")]
    Invalid { line: usize, message: String },
}

/// Reads one JSON object per line and yields validated records.
/// Blank lines are skipped.
pub struct RecordReader<R> {
    inner: R,
    line: usize,
    buf: Vec<u8>,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(inner: R) -> Self {
        RecordReader {
            inner,
            line: 0,
            buf: Vec::new(),
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<IgtRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let line = self.line;
            let text = match std::str::from_utf8(&self.buf) {
                Ok(t) => t.trim(),
                Err(_) => return Some(Err(CorpusError::Utf8 { line })),
            };
            if text.is_empty() {
                continue;
            }
            return Some(parse_record(text, line));
        }
    }
}

fn parse_record(text: &str, line: usize) -> Result<IgtRecord, CorpusError> {
    let rec: IgtRecord = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        line,
        message: e.to_string(),
    })?;
    rec.validate()
        .map_err(|message| CorpusError::Invalid { line, message })?;
    Ok(rec)
}

pub fn read_records<R: BufRead>(reader: R) -> RecordReader<R> {
    RecordReader::new(reader)
}

pub fn open_records(path: impl AsRef<Path>) -> Result<RecordReader<BufReader<File>>, CorpusError> {
    Ok(RecordReader::new(BufReader::new(File::open(path)?)))
}

/// Loads a whole corpus file in order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<IgtRecord>, CorpusError> {
    open_records(path)?.collect()
}

pub fn write_record<W: Write>(mut out: W, rec: &IgtRecord) -> io::Result<()> {
    serde_json::to_writer(&mut out, rec)?;
    out.write_all(b"\n")
}

fn is_terminal_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | '!' | '?' | ';' | ':' | '…' | '。' | '、' | '！' | '？' | '؟' | '।' | '॥'
    )
}

/// Detaches a trailing run of sentence-ending punctuation from the last word
/// of a line. Token-internal punctuation is untouched.
pub fn normalize_line(line: &str) -> String {
    let mut tokens: Vec<&str> = line.split_whitespace().collect();
    let mut tail = None;
    if let Some(last) = tokens.last().copied() {
        let stem = last.trim_end_matches(is_terminal_punct);
        if !stem.is_empty() && stem.len() < last.len() && !is_punctuation_token(stem) {
            tokens.pop();
            tokens.push(stem);
            tail = Some(&last[stem.len()..]);
        }
    }
    tokens.extend(tail);
    tokens.join(" ")
}

/// Applies [`normalize_line`] to the transcription, segmentation and gloss lines.
pub fn normalize_punctuation(rec: &IgtRecord) -> IgtRecord {
    let mut out = rec.clone();
    out.transcription = normalize_line(&rec.transcription);
    out.glosses = normalize_line(&rec.glosses);
    out.segmentation = rec.segmentation.as_deref().map(normalize_line);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Misalignment {
    Aligned,
    WordCountMismatch,
    SegmentCountMismatch,
    NoSegmentation,
}

impl Misalignment {
    pub fn is_misaligned(self) -> bool {
        matches!(
            self,
            Misalignment::WordCountMismatch | Misalignment::SegmentCountMismatch
        )
    }
}

/// Compares two parsed lines, ignoring standalone punctuation. A boundary
/// kind disagreement (`-` vs `=`) counts as a segment mismatch.
pub fn compare_structures(seg: &MorphStructure, gloss: &MorphStructure) -> Misalignment {
    let seg_words: Vec<_> = seg.content_words().collect();
    let gloss_words: Vec<_> = gloss.content_words().collect();
    if seg_words.len() != gloss_words.len() {
        return Misalignment::WordCountMismatch;
    }
    let consistent = seg_words
        .iter()
        .zip(&gloss_words)
        .all(|(s, g)| s.len() == g.len() && s.boundaries().eq(g.boundaries()));
    if consistent {
        Misalignment::Aligned
    } else {
        Misalignment::SegmentCountMismatch
    }
}

pub fn detect_misalignment(rec: &IgtRecord) -> Misalignment {
    match rec.segmentation.as_deref() {
        Some(seg) if !seg.trim().is_empty() => compare_structures(&parse_line(seg), &parse_line(&rec.glosses)),
        _ => Misalignment::NoSegmentation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairAction {
    Kept,
    BlankedSegmentation,
    ForcedToTrain,
}

fn has_marker(line: &str) -> bool {
    line.contains(['-', '='])
}

/// Blanks marker-free misaligned segmentations; otherwise keeps the
/// segmentation and moves the record into the train split.
pub fn repair(rec: &IgtRecord) -> (IgtRecord, RepairAction) {
    if !detect_misalignment(rec).is_misaligned() {
        return (rec.clone(), RepairAction::Kept);
    }
    let seg = rec.segmentation.as_deref().unwrap_or_default();
    let mut out = rec.clone();
    if !has_marker(seg) && has_marker(&rec.glosses) {
        out.segmentation = None;
        (out, RepairAction::BlankedSegmentation)
    } else {
        out.split = Split::Train;
        (out, RepairAction::ForcedToTrain)
    }
}

type DedupKey = (String, String, Option<String>);

fn dedup_key(rec: &IgtRecord) -> DedupKey {
    (
        normalize_whitespace(&nfc(&rec.transcription)),
        normalize_whitespace(&nfc(&rec.glosses)),
        rec.glottocode.clone(),
    )
}

/// Streaming first-occurrence filter keyed on normalized transcription,
/// gloss line and glottocode.
#[derive(Debug, Default)]
pub struct Deduplicator {
    seen: HashSet<DedupKey>,
}

impl Deduplicator {
    pub fn new() -> Self {
        Self::default()
    }

    /// True the first time a key is seen.
    pub fn admit(&mut self, rec: &IgtRecord) -> bool {
        self.seen.insert(dedup_key(rec))
    }
}

pub fn dedup(records: &[IgtRecord]) -> Vec<IgtRecord> {
    let mut d = Deduplicator::new();
    records.iter().filter(|r| d.admit(r)).cloned().collect()
}

/// Gloss line is empty or consists only of punctuation tokens.
pub fn is_low_quality(rec: &IgtRecord) -> bool {
    rec.glosses.split_whitespace().all(is_punctuation_token)
}

/// User-supplied literal substitution applied to gloss lines before
/// normalization (source-specific fixes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlossReplacement {
    pub find: String,
    pub replace: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub input: u64,
    pub output: u64,
    pub dropped_low_quality: u64,
    pub blanked_segmentation: u64,
    /// Misaligned records moved out of eval/test.
    pub forced_to_train: u64,
    pub duplicates_removed: u64,
}

/// Streaming cleanup: replace → normalize → low-quality filter → repair → dedup.
#[derive(Debug, Default)]
pub struct Pipeline {
    replacements: Vec<GlossReplacement>,
    dedup: Deduplicator,
    summary: PipelineSummary,
}

impl Pipeline {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_replacements(replacements: Vec<GlossReplacement>) -> Self {
        Pipeline {
            replacements,
            ..Default::default()
        }
    }

    /// Returns the cleaned record, or `None` if it was filtered out.
    pub fn process(&mut self, rec: &IgtRecord) -> Option<IgtRecord> {
        self.summary.input += 1;
        let mut rec = rec.clone();
        for r in &self.replacements {
            if !r.find.is_empty() {
                rec.glosses = rec.glosses.replace(&r.find, &r.replace);
            }
        }
        let rec = normalize_punctuation(&rec);
        if is_low_quality(&rec) {
            self.summary.dropped_low_quality += 1;
            return None;
        }
        let before = rec.split;
        let (rec, action) = repair(&rec);
        match action {
            RepairAction::BlankedSegmentation => self.summary.blanked_segmentation += 1,
            RepairAction::ForcedToTrain if before != rec.split => self.summary.forced_to_train += 1,
            _ => {}
        }
        if !self.dedup.admit(&rec) {
            self.summary.duplicates_removed += 1;
            return None;
        }
        self.summary.output += 1;
        Some(rec)
    }

    pub fn summary(&self) -> PipelineSummary {
        self.summary
    }
}

/// Runs the full cleanup pipeline over an in-memory corpus.
pub fn run_pipeline(records: &[IgtRecord]) -> (Vec<IgtRecord>, PipelineSummary) {
    let mut p = Pipeline::new();
    let out = records.iter().filter_map(|r| p.process(r)).collect();
    (out, p.summary())
}

fn split_map() -> BTreeMap<Split, u64> {
    Split::ALL.iter().map(|&s| (s, 0)).collect()
}

/// Corpus statistics.
///
/// `repaired_blanked_segmentation` and `duplicates_removed` count records that
/// [`repair`] would blank and that [`dedup`] would drop, so a clean corpus
/// reports zero for both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub total_examples: u64,
    pub unique_languages: u64,
    pub per_split_counts: BTreeMap<Split, u64>,
    pub no_glottocode: u64,
    pub no_metalang_glottocode: u64,
    pub no_segmentation: u64,
    pub no_translation: u64,
    pub misaligned: u64,
    pub repaired_blanked_segmentation: u64,
    pub duplicates_removed: u64,
}

impl Default for AuditReport {
    fn default() -> Self {
        AuditReport {
            total_examples: 0,
            unique_languages: 0,
            per_split_counts: split_map(),
            no_glottocode: 0,
            no_metalang_glottocode: 0,
            no_segmentation: 0,
            no_translation: 0,
            misaligned: 0,
            repaired_blanked_segmentation: 0,
            duplicates_removed: 0,
        }
    }
}

fn is_blank(field: &Option<String>) -> bool {
    field.as_deref().is_none_or(|s| s.trim().is_empty())
}

/// Streaming accumulator behind [`audit`].
#[derive(Debug, Default)]
pub struct Auditor {
    report: AuditReport,
    languages: HashSet<String>,
    dedup: Deduplicator,
}

impl Auditor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rec: &IgtRecord) {
        let r = &mut self.report;
        r.total_examples += 1;
        *r.per_split_counts.entry(rec.split).or_insert(0) += 1;
        match rec.glottocode.as_deref().map(str::trim) {
            Some(code) if !code.is_empty() => {
                self.languages.insert(code.to_string());
            }
            _ => r.no_glottocode += 1,
        }
        r.no_metalang_glottocode += u64::from(is_blank(&rec.metalang_glottocode));
        r.no_translation += u64::from(is_blank(&rec.translation));
        match detect_misalignment(rec) {
            Misalignment::NoSegmentation => r.no_segmentation += 1,
            m if m.is_misaligned() => {
                r.misaligned += 1;
                if repair(rec).1 == RepairAction::BlankedSegmentation {
                    r.repaired_blanked_segmentation += 1;
                }
            }
            _ => {}
        }
        if !self.dedup.admit(rec) {
            r.duplicates_removed += 1;
        }
    }

    pub fn finish(mut self) -> AuditReport {
        self.report.unique_languages = self.languages.len() as u64;
        self.report
    }
}

pub fn audit(records: &[IgtRecord]) -> AuditReport {
    let mut a = Auditor::new();
    records.iter().for_each(|r| a.add(r));
    a.finish()
}

/// Per-language split counts, keyed by glottocode ([`UNDETERMINED`] when absent).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LanguageSplits {
    pub languages: BTreeMap<String, BTreeMap<Split, u64>>,
}

impl LanguageSplits {
    pub fn add(&mut self, rec: &IgtRecord) {
        let key = rec.glottocode.clone().unwrap_or_else(|| UNDETERMINED.to_string());
        *self
            .languages
            .entry(key)
            .or_insert_with(split_map)
            .entry(rec.split)
            .or_insert(0) += 1;
    }

    /// Tab-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("language\ttrain\teval\ttest\n");
        for (lang, counts) in &self.languages {
            out.push_str(lang);
            for s in Split::ALL {
                out.push('\t');
                out.push_str(&counts.get(&s).copied().unwrap_or(0).to_string());
            }
            out.push('\n');
        }
        out
    }
}
