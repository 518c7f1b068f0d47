//! The `igt` command-line interface.
//!
//! Every subcommand streams its input line by line and writes data to stdout
//! (or the given output file); diagnostics go to stderr. Exit codes: 0 on
//! success, 1 on input errors, 2 on invariant violations in strict modes.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, GateDecision, RegressionFit};
use crate::baseline::GlossLexicon;
use crate::codecs::{self, DecodeMode, DecodedPrediction, TaskFormat};
use crate::corpus::{self, Auditor, GlossReplacement, LanguageSplits, Pipeline, UNDETERMINED};
use crate::metrics::{score_example, GroupedAggregate, MetricReport, ReportSummary};

#[derive(Debug, Parser)]
#[command(name = "igt", version, about = "Interlinear glossed text toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodeFormat {
    MultitaskGloss,
    MultitaskSeg,
    Concat,
    Interleaved,
}

impl From<EncodeFormat> for TaskFormat {
    fn from(f: EncodeFormat) -> Self {
        match f {
            EncodeFormat::MultitaskGloss => TaskFormat::MultitaskGloss,
            EncodeFormat::MultitaskSeg => TaskFormat::MultitaskSeg,
            EncodeFormat::Concat => TaskFormat::Concatenated,
            EncodeFormat::Interleaved => TaskFormat::Interleaved,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Concat,
    Interleaved,
}

impl From<OutputFormat> for TaskFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Concat => TaskFormat::Concatenated,
            OutputFormat::Interleaved => TaskFormat::Interleaved,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum GroupBy {
    #[default]
    Corpus,
    Language,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print corpus statistics as one JSON object.
    Audit { input: PathBuf },
    /// Normalize punctuation, repair misaligned records, drop duplicates.
    Normalize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Literal find/replace applied to gloss lines first (repeatable).
        #[arg(long, num_args = 2, value_names = ["FIND", "REPLACE"])]
        replace: Vec<String>,
    },
    /// Per-language train/eval/test counts as a tab-separated table.
    Stats { input: PathBuf },
    /// Render records as prompt/target pairs.
    Encode {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: EncodeFormat,
        /// Fail (exit 2) on records that cannot be encoded instead of skipping them.
        #[arg(long)]
        strict: bool,
    },
    /// Decode model outputs ({"id","output"} lines) into predictions.
    Decode {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: OutputFormat,
        #[arg(long)]
        strict: bool,
    },
    /// Score predictions against a gold corpus.
    Score {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long, value_enum, default_value_t = GroupBy::Corpus)]
        group_by: GroupBy,
    },
    /// Build a frequency lexicon or gloss a corpus with one.
    Gloss {
        #[arg(long, conflicts_with = "build_lexicon", required_unless_present = "build_lexicon")]
        lexicon: Option<PathBuf>,
        #[arg(long, value_name = "TRAIN", requires = "output")]
        build_lexicon: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(required_unless_present = "build_lexicon")]
        input: Option<PathBuf>,
    },
    /// Fit error rate against perplexity from a two-column CSV.
    Regress {
        input: PathBuf,
        /// Regress on natural-log perplexity.
        #[arg(long)]
        log_x: bool,
        /// Perplexity of a language to gate (requires --threshold).
        #[arg(long, requires = "threshold")]
        perplexity: Option<f64>,
        /// Acceptable error rate for gating.
        #[arg(long, requires = "perplexity")]
        threshold: Option<f64>,
    },
    /// Alignment-score reward for model outputs ({"output"} lines).
    Reward {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: OutputFormat,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Input(anyhow::Error),
    Invariant(String),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Input(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.into())
    }
}

type CliResult = Result<(), CliError>;

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Strict-UTF-8 JSON lines with 1-based line numbers; blank lines skipped.
fn json_lines<T: DeserializeOwned>(path: &Path) -> anyhow::Result<impl Iterator<Item = anyhow::Result<T>>> {
    let mut reader = open(path)?;
    let name = path.display().to_string();
    let mut line_no = 0usize;
    let mut buf = Vec::new();
    Ok(std::iter::from_fn(move || loop {
        buf.clear();
        match reader.read_until(b'\n', &mut buf) {
            Ok(0) => return None,
            Ok(_) => {}
            Err(e) => return Some(Err(e.into())),
        }
        line_no += 1;
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t.trim(),
            Err(_) => return Some(Err(anyhow!("{name}:{line_no}: invalid UTF-8"))),
        };
        if text.is_empty() {
            continue;
        }
        return Some(serde_json::from_str(text).with_context(|| format!("{name}:{line_no}: invalid JSON line")));
    }))
}

fn records(path: &Path) -> anyhow::Result<impl Iterator<Item = anyhow::Result<crate::IgtRecord>>> {
    let name = path.display().to_string();
    Ok(corpus::open_records(path)
        .with_context(|| format!("cannot open {name}"))?
        .map(move |r| r.with_context(|| name.clone())))
}

fn write_json<W: Write, T: Serialize + ?Sized>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    out.write_all(b"\n")
}

#[derive(Serialize)]
struct IdPrediction<'a> {
    id: &'a str,
    #[serde(flatten)]
    prediction: &'a DecodedPrediction,
}

#[derive(Serialize)]
struct EncodedLine<'a> {
    id: &'a str,
    format: TaskFormat,
    prompt: &'a str,
    target: &'a str,
}

#[derive(Deserialize)]
struct OutputLine {
    #[serde(default)]
    id: Option<String>,
    output: String,
}

#[derive(Deserialize)]
struct PredictionLine {
    id: String,
    glosses: String,
    #[serde(default)]
    segmentation: Option<String>,
}

#[derive(Serialize)]
struct ExampleScore<'a> {
    id: &'a str,
    glottocode: Option<&'a str>,
    #[serde(flatten)]
    summary: ReportSummary,
}

#[derive(Serialize)]
struct AggregateScore<'a> {
    aggregate: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    glottocode: Option<&'a str>,
    #[serde(flatten)]
    summary: ReportSummary,
}

#[derive(Serialize)]
struct GatedFit {
    fit: RegressionFit,
    perplexity: f64,
    threshold: f64,
    expected: f64,
    decision: GateDecision,
}

#[derive(Serialize)]
struct RewardLine<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<&'a str>,
    reward: f64,
}

fn audit(input: &Path, out: &mut impl Write) -> CliResult {
    let mut auditor = Auditor::new();
    for rec in records(input)? {
        auditor.add(&rec?);
    }
    write_json(out, &auditor.finish())?;
    Ok(())
}

fn normalize(input: &Path, output: &Path, replace: &[String]) -> CliResult {
    let replacements = replace
        .chunks(2)
        .map(|pair| GlossReplacement {
            find: pair[0].clone(),
            replace: pair[1].clone(),
        })
        .collect();
    let mut pipeline = Pipeline::with_replacements(replacements);
    let source = records(input)?;
    let mut out = create(output)?;
    for rec in source {
        if let Some(clean) = pipeline.process(&rec?) {
            corpus::write_record(&mut out, &clean)?;
        }
    }
    out.flush()?;
    eprintln!("{}", serde_json::to_string(&pipeline.summary())?);
    Ok(())
}

fn stats(input: &Path, out: &mut impl Write) -> CliResult {
    let mut splits = LanguageSplits::default();
    for rec in records(input)? {
        splits.add(&rec?);
    }
    out.write_all(splits.to_table().as_bytes())?;
    Ok(())
}

fn encode(input: &Path, format: TaskFormat, strict: bool, out: &mut impl Write) -> CliResult {
    for rec in records(input)? {
        let rec = rec?;
        match codecs::encode_example(&rec, format) {
            Ok(ex) => write_json(
                out,
                &EncodedLine {
                    id: &rec.id,
                    format,
                    prompt: &ex.prompt,
                    target: &ex.target,
                },
            )?,
            Err(e) if strict => return Err(CliError::Invariant(format!("record {}: {e}", rec.id))),
            Err(e) => eprintln!("skipping record {}: {e}", rec.id),
        }
    }
    Ok(())
}

fn decode(input: &Path, format: TaskFormat, strict: bool, out: &mut impl Write) -> CliResult {
    let mode = if strict {
        DecodeMode::Strict
    } else {
        DecodeMode::Lenient
    };
    for (i, line) in json_lines::<OutputLine>(input)?.enumerate() {
        let line = line?;
        let id = line.id.unwrap_or_else(|| i.to_string());
        let decoded = match format {
            TaskFormat::Interleaved => codecs::decode_interleaved_with(&line.output, mode),
            _ => codecs::decode_concatenated_with(&line.output, mode),
        };
        match decoded {
            Ok(pred) => {
                for d in &pred.diagnostics {
                    eprintln!("{id}: {d}");
                }
                write_json(
                    out,
                    &IdPrediction {
                        id: &id,
                        prediction: &pred,
                    },
                )?
            }
            Err(e) => return Err(CliError::Invariant(format!("{id}: {e}"))),
        }
    }
    Ok(())
}

fn score(gold: &Path, pred: &Path, group_by: GroupBy, out: &mut impl Write) -> CliResult {
    let mut golds = records(gold)?;
    let mut preds = json_lines::<PredictionLine>(pred)?;
    let mut total = MetricReport::default();
    let mut groups = GroupedAggregate::new();
    loop {
        let (g, p) = match (golds.next(), preds.next()) {
            (None, None) => break,
            (Some(g), Some(p)) => (g?, p?),
            (Some(_), None) => return Err(anyhow!("{} has fewer lines than {}", pred.display(), gold.display()).into()),
            (None, Some(_)) => return Err(anyhow!("{} has more lines than {}", pred.display(), gold.display()).into()),
        };
        if g.id != p.id {
            return Err(anyhow!("id mismatch: gold {:?} vs prediction {:?}", g.id, p.id).into());
        }
        let report = score_example(
            &g.glosses,
            &p.glosses,
            g.segmentation.as_deref(),
            p.segmentation.as_deref(),
        )
        .with_context(|| format!("record {}", g.id))?;
        write_json(
            out,
            &ExampleScore {
                id: &g.id,
                glottocode: g.glottocode.as_deref(),
                summary: report.summary(),
            },
        )?;
        total += &report;
        if group_by == GroupBy::Language {
            groups.add(g.glottocode.unwrap_or_else(|| UNDETERMINED.to_string()), &report);
        }
    }
    for (code, report) in groups.groups() {
        write_json(
            out,
            &AggregateScore {
                aggregate: "language",
                glottocode: Some(code),
                summary: report.summary(),
            },
        )?;
    }
    write_json(
        out,
        &AggregateScore {
            aggregate: "corpus",
            glottocode: None,
            summary: total.summary(),
        },
    )?;
    Ok(())
}

fn gloss(lexicon: &Path, input: &Path, out: &mut impl Write) -> CliResult {
    let lex = GlossLexicon::load(lexicon).map_err(|e| anyhow!("{}: {e}", lexicon.display()))?;
    for rec in records(input)? {
        let rec = rec?;
        let pred = lex.predict(rec.glottocode.as_deref(), &rec.transcription);
        write_json(
            out,
            &IdPrediction {
                id: &rec.id,
                prediction: &pred,
            },
        )?;
    }
    Ok(())
}

fn build_lexicon(train: &Path, output: &Path) -> CliResult {
    let mut lex = GlossLexicon::new();
    for rec in records(train)? {
        lex.observe(&rec?);
    }
    lex.save(output).map_err(|e| anyhow!("{}: {e}", output.display()))?;
    Ok(())
}

fn regress(input: &Path, log_x: bool, gating: Option<(f64, f64)>, out: &mut impl Write) -> CliResult {
    let points = analytics::read_points(open(input)?).map_err(anyhow::Error::from)?;
    let fit = if log_x {
        analytics::fit_log(&points)
    } else {
        analytics::fit(&points)
    }
    .map_err(anyhow::Error::from)?;
    match gating {
        Some((perplexity, threshold)) => write_json(
            out,
            &GatedFit {
                fit,
                perplexity,
                threshold,
                expected: fit.expected(perplexity),
                decision: analytics::gate(&fit, perplexity, threshold),
            },
        )?,
        None => write_json(out, &fit)?,
    }
    Ok(())
}

fn reward(input: &Path, format: TaskFormat, out: &mut impl Write) -> CliResult {
    for line in json_lines::<OutputLine>(input)? {
        let line = line?;
        let reward = analytics::reward(&line.output, format).map_err(anyhow::Error::from)?;
        write_json(
            out,
            &RewardLine {
                id: line.id.as_deref(),
                reward,
            },
        )?;
    }
    Ok(())
}

/// Runs one subcommand, writing data to `out`.
pub fn execute(command: &Command, out: &mut impl Write) -> CliResult {
    match command {
        Command::Audit { input } => audit(input, out),
        Command::Normalize { input, output, replace } => normalize(input, output, replace),
        Command::Stats { input } => stats(input, out),
        Command::Encode { input, format, strict } => encode(input, (*format).into(), *strict, out),
        Command::Decode { input, format, strict } => decode(input, (*format).into(), *strict, out),
        Command::Score { gold, pred, group_by } => score(gold, pred, *group_by, out),
        Command::Gloss {
            lexicon,
            build_lexicon: train,
            output,
            input,
        } => match (train, lexicon, input) {
            (Some(train), _, _) => build_lexicon(train, output.as_deref().expect("clap requires --output")),
            (None, Some(lex), Some(input)) => gloss(lex, input, out),
            _ => Err(CliError::Input(anyhow!("gloss needs --lexicon and an input corpus"))),
        },
        Command::Regress {
            input,
            log_x,
            perplexity,
            threshold,
        } => regress(input, *log_x, perplexity.zip(*threshold), out),
        Command::Reward { input, format } => reward(input, (*format).into(), out),
    }
}

/// Entry point used by the binary.
pub fn run(cli: Cli) -> ExitCode {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = execute(&cli.command, &mut out).and_then(|()| out.flush().map_err(CliError::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(e)) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CliError::Invariant(msg)) => {
            let _ = out.flush();
            eprintln!("invariant violation: {msg}");
            ExitCode::from(2)
        }
    }
}
