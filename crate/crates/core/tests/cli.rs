use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn igt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igt"))
        .args(args)
        .output()
        .expect("spawn igt")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn write(dir: &TempDir, name: &str, lines: &[Value]) -> PathBuf {
    let path = dir.path().join(name);
    let body: String = lines.iter().map(|v| format!("{v}\n")).collect();
    fs::write(&path, body).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn record(id: &str, split: &str, code: Option<&str>, transcription: &str, seg: Option<&str>, glosses: &str) -> Value {
    json!({
        "id": id,
        "transcription": transcription,
        "segmentation": seg,
        "glosses": glosses,
        "translation": "a translation",
        "glottocode": code,
        "metalang_glottocode": "stan1293",
        "language_name": null,
        "source": "test",
        "split": split,
    })
}

fn vera_a() -> Value {
    json!({
        "id": "vra-1",
        "transcription": "o wōlēn 'ēqēk",
        "segmentation": "o wōlē-0=n 'ēqē-k",
        "glosses": "INTERJ you.know-ZERO=ART garden-1SG",
        "translation": null,
        "glottocode": "vera1241",
        "metalang_glottocode": "stan1293",
        "language_name": "Vera'a",
        "source": "test",
        "split": "train",
    })
}

fn small_corpus() -> Vec<Value> {
    vec![
        vera_a(),
        record(
            "d1",
            "train",
            Some("dido1241"),
            "žedaa kidqor.",
            Some("žeda-a kid-qor."),
            "DEM-ERG girl-POSS.",
        ),
        record("d2", "test", Some("dido1241"), "kidqor", Some("kid-qor"), "girl-POSS"),
        record(
            "d2-copy",
            "test",
            Some("dido1241"),
            "kidqor",
            Some("kid-qor"),
            "girl-POSS",
        ),
        record(
            "n1",
            "test",
            Some("nyan1302"),
            "enu budzyuɖí",
            Some("e-nu bu"),
            "3SG-be CM-strength",
        ),
        record("a1", "eval", Some("arap1274"), "nihbee", Some("nihbee"), "3S-see"),
    ]
}

#[test]
fn audit_reports_hand_counted_fields() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.jsonl", &small_corpus());
    let report: Value = serde_json::from_str(&stdout(&igt(&["audit", p(&input)]))).unwrap();
    assert_eq!(report["total_examples"], 6);
    assert_eq!(report["unique_languages"], 4);
    assert_eq!(report["per_split_counts"], json!({"train": 2, "eval": 1, "test": 3}));
    assert_eq!(report["no_translation"], 1);
    assert_eq!(report["misaligned"], 2);
    assert_eq!(report["repaired_blanked_segmentation"], 1);
    assert_eq!(report["duplicates_removed"], 1);
}

#[test]
fn normalize_then_audit_is_clean_and_stable() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.jsonl", &small_corpus());
    let (once, twice) = (dir.path().join("once.jsonl"), dir.path().join("twice.jsonl"));

    let out = igt(&["normalize", p(&input), "-o", p(&once)]);
    stdout(&out);
    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(
        summary,
        json!({"input": 6, "output": 5, "dropped_low_quality": 0, "blanked_segmentation": 1,
               "forced_to_train": 1, "duplicates_removed": 1})
    );

    let cleaned = json_lines(&fs::read_to_string(&once).unwrap());
    let d1 = cleaned.iter().find(|r| r["id"] == "d1").unwrap();
    assert_eq!(d1["transcription"], "žedaa kidqor .");
    assert_eq!(d1["segmentation"], "žeda-a kid-qor .");
    let n1 = cleaned.iter().find(|r| r["id"] == "n1").unwrap();
    assert_eq!(n1["split"], "train");
    let a1 = cleaned.iter().find(|r| r["id"] == "a1").unwrap();
    assert_eq!(a1["segmentation"], Value::Null);

    let report: Value = serde_json::from_str(&stdout(&igt(&["audit", p(&once)]))).unwrap();
    assert_eq!(report["duplicates_removed"], 0);
    assert_eq!(report["repaired_blanked_segmentation"], 0);

    stdout(&igt(&["normalize", p(&once), "-o", p(&twice)]));
    assert_eq!(fs::read(&once).unwrap(), fs::read(&twice).unwrap());
}

#[test]
fn normalize_applies_gloss_replacements() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "c.jsonl",
        &[record(
            "x",
            "train",
            Some("dido1241"),
            "kidqor",
            Some("kid-qor"),
            "girl-POSS",
        )],
    );
    let out = dir.path().join("o.jsonl");
    stdout(&igt(&[
        "normalize",
        p(&input),
        "-o",
        p(&out),
        "--replace",
        "POSS",
        "GEN",
    ]));
    let rec = &json_lines(&fs::read_to_string(&out).unwrap())[0];
    assert_eq!(rec["glosses"], "girl-GEN");
}

#[test]
fn stats_prints_language_table() {
    let dir = TempDir::new().unwrap();
    let mut corpus = small_corpus();
    corpus.push(record("u", "train", None, "ab", Some("a-b"), "X-Y"));
    let input = write(&dir, "c.jsonl", &corpus);
    let table = stdout(&igt(&["stats", p(&input)]));
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "language\ttrain\teval\ttest");
    assert!(rows.contains(&"dido1241\t1\t0\t2"), "{table}");
    assert!(rows.contains(&"und\t1\t0\t0"), "{table}");
}

#[test]
fn encode_reproduces_templates() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "v.jsonl", &[vera_a()]);
    let line = &json_lines(&stdout(&igt(&["encode", p(&input), "--format", "interleaved"])))[0];
    assert_eq!(line["id"], "vra-1");
    assert_eq!(line["format"], "interleaved");
    assert_eq!(
        line["prompt"],
        "Predict the glosses and morphological segmentation (in parentheses) for the following text in Vera'a.\n\
         Text in Vera'a: o wōlēn 'ēqēk\nOutput: "
    );
    assert_eq!(
        line["target"],
        "INTERJ(o) you.know(wōlē)-ZERO(0)=ART(n) garden('ēqē)-1SG(k)"
    );

    let line = &json_lines(&stdout(&igt(&["encode", p(&input), "--format", "concat"])))[0];
    assert_eq!(
        line["target"],
        "Segmentation: o wōlē-0=n 'ēqē-k\nGlosses: INTERJ you.know-ZERO=ART garden-1SG"
    );

    let line = &json_lines(&stdout(&igt(&["encode", p(&input), "--format", "multitask-gloss"])))[0];
    assert!(line["prompt"]
        .as_str()
        .unwrap()
        .starts_with("Predict the glosses for the following text in Vera'a.\n"));
    assert_eq!(line["target"], "INTERJ you.know-ZERO=ART garden-1SG");
}

#[test]
fn encode_misaligned_skips_or_fails() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "c.jsonl", &small_corpus());
    let out = igt(&["encode", p(&input), "--format", "interleaved"]);
    let lines = json_lines(&stdout(&out));
    assert!(lines.iter().all(|l| l["id"] != "n1" && l["id"] != "a1"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n1"));

    let out = igt(&["encode", p(&input), "--format", "interleaved", "--strict"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decode_both_formats() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "o.jsonl",
        &[json!({"id": "v", "output": "Output: INTERJ(o) you.know(wōlē)-ZERO(0)=ART(n) garden('ēqē)-1SG(k)"})],
    );
    let d = &json_lines(&stdout(&igt(&["decode", p(&input), "--format", "interleaved"])))[0];
    assert_eq!(d["id"], "v");
    assert_eq!(d["segmentation"], "o wōlē-0=n 'ēqē-k");
    assert_eq!(d["glosses"], "INTERJ you.know-ZERO=ART garden-1SG");
    assert_eq!(d["well_formed"], true);

    let input = write(&dir, "c.jsonl", &[json!({"id": "c", "output": "Glosses: X-Y"})]);
    let d = &json_lines(&stdout(&igt(&["decode", p(&input), "--format", "concat"])))[0];
    assert_eq!(d["well_formed"], false);
    assert_eq!(d["glosses"], "X-Y");
    assert_eq!(
        igt(&["decode", p(&input), "--format", "concat", "--strict"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn score_groups_by_language_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let gold = write(
        &dir,
        "gold.jsonl",
        &[
            record(
                "a",
                "test",
                Some("dido1241"),
                "žedaa kidqor",
                Some("žeda-a kid-qor"),
                "DEM-ERG girl-POSS",
            ),
            record("b", "test", Some("dido1241"), "kidqor", Some("kid-qor"), "girl-POSS"),
            record("c", "test", None, "ab", Some("a-b"), "X-Y"),
        ],
    );
    let pred = write(
        &dir,
        "pred.jsonl",
        &[
            json!({"id": "a", "segmentation": "žeda kid-qor", "glosses": "DEM girl-POSS"}),
            json!({"id": "b", "segmentation": "kid-qor", "glosses": "girl-POSS"}),
            json!({"id": "c", "segmentation": null, "glosses": "X-Y"}),
        ],
    );
    let args = [
        "score",
        "--gold",
        p(&gold),
        "--pred",
        p(&pred),
        "--group-by",
        "language",
    ];
    let first = stdout(&igt(&args));
    assert_eq!(first, stdout(&igt(&args)), "reruns must be byte-identical");
    let lines = json_lines(&first);
    assert_eq!(lines.len(), 3 + 2 + 1);
    assert!((lines[0]["seg_f1"].as_f64().unwrap() - 6.0 / 7.0).abs() < 1e-12);
    assert_eq!(lines[2]["alignment"], Value::Null);
    assert_eq!(lines[3]["aggregate"], "language");
    assert_eq!(lines[3]["glottocode"], "dido1241");
    // micro-averaged: (1 deletion + 0) over (5 + 2) tokens
    assert!((lines[3]["mer"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12);
    assert_eq!(lines[4]["glottocode"], "und");
    let total = &lines[5];
    assert_eq!(total["aggregate"], "corpus");
    assert_eq!(total["examples"], 3);
    assert!((total["mer"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-12);
}

#[test]
fn score_rejects_mismatched_ids() {
    let dir = TempDir::new().unwrap();
    let gold = write(&dir, "g.jsonl", &[record("a", "test", None, "ab", Some("a-b"), "X-Y")]);
    let pred = write(
        &dir,
        "p.jsonl",
        &[json!({"id": "z", "segmentation": "a-b", "glosses": "X-Y"})],
    );
    let out = igt(&["score", "--gold", p(&gold), "--pred", p(&pred)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("id mismatch"));
}

#[test]
fn gloss_builds_lexicon_and_predicts_aligned_output() {
    let dir = TempDir::new().unwrap();
    let train = write(
        &dir,
        "train.jsonl",
        &[
            vera_a(),
            record("t2", "train", Some("vera1241"), "o", Some("o"), "INTERJ"),
            record(
                "t3",
                "test",
                Some("vera1241"),
                "wōlēn",
                Some("wōlē-0=n"),
                "WRONG-ZERO=ART",
            ),
        ],
    );
    let lexicon = dir.path().join("lex.json");
    stdout(&igt(&["gloss", "--build-lexicon", p(&train), "-o", p(&lexicon)]));
    let test = write(
        &dir,
        "test.jsonl",
        &[record("q", "test", Some("vera1241"), "o wōlēn zzz .", None, "x")],
    );
    let pred = &json_lines(&stdout(&igt(&["gloss", "--lexicon", p(&lexicon), p(&test)])))[0];
    assert_eq!(pred["id"], "q");
    assert_eq!(pred["segmentation"], "o wōlē-0=n zzz .");
    assert_eq!(pred["glosses"], "INTERJ you.know-ZERO=ART ??? .");
    assert_eq!(pred["well_formed"], true);
}

#[test]
fn regress_fits_and_gates() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("ppl.csv");
    fs::write(&csv, "perplexity,mer\n2,0.2\n4,0.3\n6,0.4\n").unwrap();
    let f: Value = serde_json::from_str(&stdout(&igt(&["regress", p(&csv)]))).unwrap();
    assert!((f["slope"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert!((f["r2"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let gated = |threshold: &str| -> Value {
        serde_json::from_str(&stdout(&igt(&[
            "regress",
            p(&csv),
            "--perplexity",
            "5",
            "--threshold",
            threshold,
        ])))
        .unwrap()
    };
    assert_eq!(gated("0.4")["decision"], "predict");
    assert_eq!(gated("0.3")["decision"], "fallback");

    fs::write(&csv, "perplexity,mer\n3,0.2\n3,0.3\n").unwrap();
    assert_eq!(igt(&["regress", p(&csv)]).status.code(), Some(1));
}

#[test]
fn reward_scores_outputs() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "o.jsonl",
        &[
            json!({"id": "ok", "output": "A(a)-B(b) C(c)"}),
            json!({"id": "bad", "output": "((("}),
        ],
    );
    let lines = json_lines(&stdout(&igt(&["reward", p(&input), "--format", "interleaved"])));
    assert_eq!(
        lines,
        vec![json!({"id": "ok", "reward": 1.0}), json!({"id": "bad", "reward": 0.0})]
    );
}

#[test]
fn bad_input_exits_one_with_line_number() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.jsonl");
    let mut bytes = format!("{}\n", vera_a()).into_bytes();
    bytes.extend_from_slice(b"{\"id\": \"\xff\"}\n");
    fs::write(&path, bytes).unwrap();
    let out = igt(&["audit", p(&path)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("line 2"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let path = write(&dir, "extra.jsonl", &[json!({"id": "x", "bogus": 1})]);
    assert_eq!(igt(&["audit", p(&path)]).status.code(), Some(1));
    assert_eq!(igt(&["audit", "/nonexistent/file.jsonl"]).status.code(), Some(1));
}
