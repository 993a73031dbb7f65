//! Drives the command line through ingest, build, stats, dist, maskgen,
//! assemble and score in a scratch directory.

use std::fs;

use masklen::cli::run;
use masklen::dataset::SpanExample;
use masklen::jsonl::{read_all, JsonlWriter};
use masklen::metrics::SpanPrediction;
use masklen::synthetic::{self, CorpusShape};

fn main() {
    let dir = tempfile::TempDir::new().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let mut w = JsonlWriter::create(dir.path().join("raw.jsonl").as_path()).unwrap();
    for d in synthetic::documents(1, CorpusShape::default()) {
        w.write(&d).unwrap();
    }
    w.finish().unwrap();
    let mut w = JsonlWriter::create(dir.path().join("candidates.jsonl").as_path()).unwrap();
    for s in synthetic::span_candidates(1, 1000, (2, 10)) {
        w.write(&s).unwrap();
    }
    w.finish().unwrap();
    fs::write(p("vocab.txt"), synthetic::vocab_lines().join("\n")).unwrap();

    let steps: Vec<Vec<String>> = vec![
        vec!["ingest", "--in", &p("raw.jsonl"), "--out", &p("paras.jsonl")],
        vec!["build-cloze", "--in", &p("paras.jsonl"), "--bucket", "short-cloze", "--seed", "7", "--out-dir", &p("cloze")],
        vec!["build-span", "--in", &p("candidates.jsonl"), "--bucket", "short-span", "--seed", "7", "--out-dir", &p("span")],
        vec!["stats", "--task", "span", "--in", &format!("train={}", p("span/train.jsonl")), "--in", &format!("test={}", p("span/test.jsonl"))],
        vec!["dist", "--in", &p("span/train.jsonl"), "--task", "span", "--out", &p("short.dist.json")],
        vec![
            "maskgen", "--in", &p("paras.jsonl"), "--vocab", &p("vocab.txt"), "--dist-from", &p("short.dist.json"),
            "--seed", "7", "--out", &p("mlm.jsonl"),
        ],
        vec!["assemble", "--task", "cloze", "--in", &p("cloze/test.jsonl"), "--vocab", &p("vocab.txt"), "--out", &p("cloze-inputs.jsonl")],
        vec!["validate", "--in", &p("cloze/train.jsonl"), "--bucket", "short-cloze", "--sources", &p("paras.jsonl"), "--out", &p("validate.json")],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();

    for args in &steps {
        println!("$ masklen {}", args[0]);
        let code = run(std::iter::once("masklen".to_string()).chain(args.iter().cloned()));
        assert_eq!(code, 0, "{} failed", args[0]);
    }

    // Score a copy of the span test split with every other answer truncated.
    let gold: Vec<SpanExample> = read_all(dir.path().join("span/test.jsonl").as_path()).unwrap();
    let mut w = JsonlWriter::create(dir.path().join("pred.jsonl").as_path()).unwrap();
    for (i, g) in gold.iter().enumerate() {
        let text: String = g.answer.text.chars().skip(i % 2).collect();
        w.write(&SpanPrediction { id: g.id.clone(), prediction_text: text }).unwrap();
    }
    w.finish().unwrap();
    let code = run([
        "masklen", "score", "--task", "span", "--gold", &p("span/test.jsonl"), "--pred", &p("pred.jsonl"),
        "--format", "table", "--reference", "short-span",
    ]);
    println!("score exit {code}");
    println!("manifest for maskgen:\n{}", fs::read_to_string(p("mlm.jsonl.manifest.toml")).unwrap());
}
