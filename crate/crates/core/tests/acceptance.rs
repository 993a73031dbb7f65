//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fail.

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use masklen::assembly::{assemble_cloze_input, assemble_span_input, WindowingPolicy};
use masklen::corpus::{split_paragraphs, split_sentences, Paragraph};
use masklen::dataset::{build_cloze_example, validate_dataset, Bucket, ClozeOutcome, OPTION_LETTERS};
use masklen::jsonl::JsonlWriter;
use masklen::masking::{MaskedRecord, MaskingConfig, MaskingEngine, SpanAction};
use masklen::metrics::{max_common_span, span_scores};
use masklen::seed::rng_for;
use masklen::stats::{to_probabilities, LengthDistribution};
use masklen::synthetic::{self, CorpusShape};
use masklen::tokenizer::Vocabulary;
use rand::Rng as _;
use rayon::prelude::*;

fn short_span_train() -> LengthDistribution {
    LengthDistribution::from_counts([(4, 16171), (5, 8566), (6, 6653)]).unwrap()
}

fn long_cloze_train() -> LengthDistribution {
    LengthDistribution::from_counts([
        (17, 5209),
        (18, 4919),
        (19, 4367),
        (20, 3983),
        (21, 3637),
        (22, 3187),
        (23, 2980),
        (24, 2627),
        (25, 2275),
        (26, 2162),
        (27, 1885),
        (28, 1776),
        (29, 1493),
    ])
    .unwrap()
}

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(name: &'static str, pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        name,
        pass,
        detail: detail.into(),
    }
}

fn distribution_reproduction() -> Outcome {
    let t = Instant::now();
    let probs = to_probabilities(&short_span_train()).unwrap();
    let rendered: Vec<&str> = probs.iter().map(|p| p.percent.as_str()).collect();
    let total = short_span_train().total();
    let elapsed = t.elapsed();
    report(
        "distribution-reproduction",
        rendered == ["51.52", "27.29", "21.19"] && total == 31390 && elapsed < Duration::from_secs(1),
        format!("{} total {} in {:?}", rendered.join("/"), total, elapsed),
    )
}

/// Masks duplicates `0..dupes` of every sequence.
fn mask_all(dist: LengthDistribution, seqs: &[Vec<u32>], vocab: &Vocabulary, seed: u64, dupes: usize) -> Vec<MaskedRecord> {
    let engine = MaskingEngine::new(MaskingConfig::new(dist, seed)).unwrap();
    seqs.par_iter()
        .enumerate()
        .flat_map_iter(|(i, ids)| (0..dupes).map(move |d| (i, ids, d)))
        .map(|(i, ids, d)| engine.mask_once(ids, &format!("s{i}"), d, vocab).unwrap())
        .collect()
}

fn budget_stats(records: &[MaskedRecord], maskable: usize, budget: usize) -> (f64, usize) {
    let masked: usize = records.iter().map(|r| r.spans.iter().map(|s| s.1).sum::<usize>()).sum();
    let overshoot = records
        .iter()
        .map(|r| r.spans.iter().map(|s| s.1).sum::<usize>() - budget)
        .max()
        .unwrap_or(0);
    (masked as f64 / (maskable * records.len()) as f64, overshoot)
}

struct Masked {
    short: Vec<MaskedRecord>,
    long: Vec<MaskedRecord>,
    seqs: Vec<Vec<u32>>,
}

fn masking_budget(vocab: &Vocabulary, m: &mut Option<Masked>) -> Vec<Outcome> {
    let t = Instant::now();
    let seqs = synthetic::packed_sequences(2024, 10_000, 512, vocab);
    let short = mask_all(short_span_train(), &seqs, vocab, 7, 1);
    let elapsed = t.elapsed();
    let budget = masklen::masking::budget_tokens(0.15, 510);
    let (frac, overshoot) = budget_stats(&short, 510, budget);
    let max_len = short_span_train().max_len().unwrap();
    let out = report(
        "masking-budget",
        (0.145..=0.16).contains(&frac) && overshoot < max_len && elapsed < Duration::from_secs(30),
        format!(
            "short-span dist: fraction {frac:.4} over 10000x510 maskable, max overshoot {overshoot} < {max_len}, {elapsed:?}"
        ),
    );
    let long = mask_all(long_cloze_train(), &seqs, vocab, 7, 3);
    let (lfrac, lover) = budget_stats(&long, 510, budget);
    println!(
        "INFO  masking-budget (long-cloze dist)  fraction {lfrac:.4}, max overshoot {lover} < {}",
        long_cloze_train().max_len().unwrap()
    );
    *m = Some(Masked { short, long, seqs });
    vec![out]
}

fn length_fidelity(m: &Masked) -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, records, target) in [
        ("short-span", &m.short, short_span_train()),
        ("long-cloze", &m.long, long_cloze_train()),
    ] {
        let observed = LengthDistribution::from_lengths(records.iter().flat_map(|r| r.spans.iter().map(|s| s.1)));
        let l1 = observed.l1_distance(&target);
        pass &= l1 < 0.02 && observed.total() >= 10_000;
        details.push(format!("{name} L1 {l1:.4} over {} spans", observed.total()));
    }
    report("masking-length-fidelity", pass, details.join("; "))
}

fn replacement_ratios(m: &Masked, vocab: &Vocabulary) -> Outcome {
    let (mut counts, mut mixed, mut total) = ([0usize; 3], 0usize, 0usize);
    for (rec, orig) in m.short.iter().zip(&m.seqs) {
        for &(start, len, action) in &rec.spans {
            total += 1;
            let slot = match action {
                SpanAction::Masked => 0,
                SpanAction::Random => 1,
                SpanAction::Kept => 2,
            };
            counts[slot] += 1;
            let got = &rec.input_ids[start..start + len];
            let was = &orig[start..start + len];
            let consistent = match action {
                SpanAction::Masked => got.iter().all(|&id| id == vocab.mask_id()),
                SpanAction::Random => got.iter().all(|&id| !vocab.is_reserved(id)),
                SpanAction::Kept => got == was,
            };
            mixed += !consistent as usize;
        }
    }
    let f = |c: usize| c as f64 / total as f64;
    let (pm, pr, pk) = (f(counts[0]), f(counts[1]), f(counts[2]));
    let pass = total >= 10_000
        && (pm - 0.8).abs() <= 0.015
        && (pr - 0.1).abs() <= 0.015
        && (pk - 0.1).abs() <= 0.015
        && mixed == 0;
    report(
        "replacement-ratios",
        pass,
        format!("{pm:.4}/{pr:.4}/{pk:.4} over {total} spans, {mixed} mixed spans"),
    )
}

fn dynamic_masking(m: &Masked, vocab: &Vocabulary) -> Outcome {
    let engine = MaskingEngine::new(MaskingConfig::new(short_span_train(), 11)).unwrap();
    let seqs = &m.seqs[..2000];
    let results: Vec<(usize, usize)> = seqs
        .par_iter()
        .enumerate()
        .map(|(i, ids)| {
            let dupes = engine.generate_pretraining_examples(ids, &format!("s{i}"), vocab).unwrap();
            let plans: HashSet<Vec<(usize, usize)>> =
                dupes.iter().map(|d| d.spans.iter().map(|s| (s.0, s.1)).collect()).collect();
            (dupes.len(), plans.len())
        })
        .collect();
    let all_ten = results.iter().all(|&(n, _)| n == 10);
    let varied = results.iter().filter(|&&(_, p)| p >= 2).count() as f64 / results.len() as f64;
    report(
        "dynamic-masking",
        all_ten && varied >= 0.99,
        format!("10 plans per sequence: {all_ten}; {:.2}% of {} sequences have >=2 distinct plans", varied * 100.0, results.len()),
    )
}

fn brute_force_mcs(a: &[u8], b: &[u8]) -> usize {
    let mut best = 0;
    for i in 0..a.len() {
        for j in i + 1..=a.len() {
            let sub = &a[i..j];
            if sub.len() > best && b.windows(sub.len()).any(|w| w == sub) {
                best = sub.len();
            }
        }
    }
    best
}

fn scorer_oracle() -> Outcome {
    let mut rng = rng_for(99, "mcs-oracle", 0);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let la = rng.random_range(0..=12);
        let lb = rng.random_range(0..=12);
        let alphabet = rng.random_range(1..=5u8);
        let a: Vec<u8> = (0..la).map(|_| rng.random_range(0..alphabet)).collect();
        let b: Vec<u8> = (0..lb).map(|_| rng.random_range(0..alphabet)).collect();
        mismatches += (max_common_span(&a, &b) != brute_force_mcs(&a, &b)) as usize;
    }
    let small: Vec<Vec<u8>> = (0..=6usize)
        .flat_map(|len| (0..1u32 << len).map(move |bits| (0..len).map(|i| ((bits >> i) & 1) as u8).collect()))
        .collect();
    let mut exhaustive = 0;
    for a in &small {
        for b in &small {
            exhaustive += 1;
            mismatches += (max_common_span(a, b) != brute_force_mcs(a, b)) as usize;
        }
    }
    let gold: Vec<char> = "流行病学".chars().collect();
    let pred: Vec<char> = "病学领域".chars().collect();
    let tp = max_common_span(&gold, &pred);
    let s = span_scores(&gold, &pred).unwrap();
    let hand = tp == 2 && s.precision == 0.5 && s.recall == 0.5 && s.f1 == 0.5;
    report(
        "scorer-oracle",
        mismatches == 0 && hand,
        format!("10000 random + {exhaustive} exhaustive pairs, {mismatches} mismatches; TP={tp} P/R/F1={}/{}/{}", s.precision, s.recall, s.f1),
    )
}

fn cloze_integrity(dir: &Path) -> Outcome {
    let shape = CorpusShape {
        documents: 400,
        paragraphs_per_doc: 4,
        sentences_per_paragraph: 40,
        sentence_len: (5, 30),
        noisy: true,
    };
    let paragraphs: Vec<Paragraph> =
        synthetic::documents(3, shape).iter().flat_map(split_paragraphs).collect();
    let mut details = Vec::new();
    let mut pass = true;
    for bucket in [Bucket::ShortCloze, Bucket::LongCloze] {
        let cfg = bucket.config();
        let sources = dir.join(format!("{}-paras.jsonl", bucket.name()));
        let data = dir.join(format!("{}.jsonl", bucket.name()));
        let mut src_w = JsonlWriter::create(&sources).unwrap();
        let mut w = JsonlWriter::create(&data).unwrap();
        let (mut built, mut direct_ok) = (0usize, 0usize);
        for p in &paragraphs {
            if built == 1000 {
                break;
            }
            if let ClozeOutcome::Built(ex) = build_cloze_example(p, &split_sentences(p), &cfg, 17).unwrap() {
                built += 1;
                let mut key = ex.answers.clone();
                key.sort();
                let ok = ex.reconstruct().as_deref() == Some(p.text.as_str())
                    && ex.options.len() == 9
                    && key == OPTION_LETTERS
                    && ex.options.values().all(|o| cfg.admits(o.chars().count()));
                direct_ok += ok as usize;
                src_w.write(p).unwrap();
                w.write(&ex).unwrap();
            }
        }
        src_w.finish().unwrap();
        w.finish().unwrap();
        let v = validate_dataset(&data, &cfg, Some(&sources)).unwrap();
        pass &= built == 1000 && direct_ok == built && v.is_clean() && v.records == built;
        details.push(format!(
            "{}: {direct_ok}/{built} intact, validate {} violations",
            bucket.name(),
            v.total_violations()
        ));
    }
    report("cloze-integrity", pass, details.join("; "))
}

fn assembly_examples(vocab: &Vocabulary) -> Outcome {
    let pad = vocab.pad_id();
    let seven = assemble_span_input(&[20, 21], &[22, 23], &WindowingPolicy::new(10, 0), vocab, "a").unwrap();
    let pads = seven[0].ids.iter().filter(|&&i| i == pad).count();
    let ctx: Vec<u32> = (0..40).map(|i| 20 + i % 30).collect();
    let windows = assemble_span_input(&[20, 21], &ctx, &WindowingPolicy::new(15, 0), vocab, "b").unwrap();
    let blank = vocab.blank_id(1).unwrap();
    let cloze = assemble_cloze_input(&[20, 21, 22], &[23, blank, 24], &WindowingPolicy::new(10, 0), vocab, "c").unwrap();
    let cloze_pads = cloze[0].ids.iter().filter(|&&i| i == pad).count();
    report(
        "assembly",
        seven[0].content_len() == 7 && pads == 3 && windows.len() == 4 && cloze_pads == 1,
        format!(
            "7 content / max 10 -> {pads} [PAD]; 40-token context at capacity 10 -> {} windows; cloze 9 content -> {cloze_pads} [PAD]",
            windows.len()
        ),
    )
}

fn cli(args: &[&str]) -> i32 {
    masklen::cli::run(std::iter::once("masklen").chain(args.iter().copied()))
}

fn pipeline(dir: &Path, tag: &str, workers: &str) -> Vec<Vec<u8>> {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let paras = p(&format!("paras{tag}.jsonl"));
    let cloze = p(&format!("cloze{tag}"));
    let span = p(&format!("span{tag}"));
    let mlm = p(&format!("mlm{tag}.jsonl"));
    let codes = [
        cli(&["--workers", workers, "ingest", "--in", &p("raw.jsonl"), "--out", &paras]),
        cli(&["--workers", workers, "build-cloze", "--in", &paras, "--bucket", "long-cloze", "--seed", "42", "--out-dir", &cloze]),
        cli(&["--workers", workers, "build-span", "--in", &p("cands.jsonl"), "--bucket", "short-span", "--seed", "42", "--out-dir", &span]),
        cli(&[
            "--workers", workers, "maskgen", "--in", &paras, "--vocab", &p("vocab.txt"), "--dist-from", &p("dist.json"),
            "--seed", "42", "--out", &mlm,
        ]),
    ];
    assert!(codes.iter().all(|&c| c == 0), "pipeline exit codes {codes:?}");
    let mut files = vec![paras, mlm];
    for d in [&cloze, &span] {
        // Manifests record the output paths, which differ per run here.
        let mut names: Vec<_> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        names.sort();
        files.extend(names.into_iter().map(|n| n.to_string_lossy().into_owned()));
    }
    files.iter().map(|f| fs::read(f).unwrap()).collect()
}

fn determinism(dir: &Path) -> Outcome {
    let mut w = JsonlWriter::create(&dir.join("raw.jsonl")).unwrap();
    for d in synthetic::documents(5, CorpusShape { documents: 150, ..Default::default() }) {
        w.write(&d).unwrap();
    }
    w.finish().unwrap();
    let mut w = JsonlWriter::create(&dir.join("cands.jsonl")).unwrap();
    for s in synthetic::span_candidates(5, 3000, (2, 10)) {
        w.write(&s).unwrap();
    }
    w.finish().unwrap();
    fs::write(dir.join("vocab.txt"), synthetic::vocab_lines().join("\n") + "\n").unwrap();
    fs::write(dir.join("dist.json"), serde_json::to_string(&short_span_train()).unwrap()).unwrap();

    let a = pipeline(dir, "-a", "1");
    let b = pipeline(dir, "-b", "1");
    let c = pipeline(dir, "-c", "8");
    let bytes: usize = a.iter().map(Vec::len).sum();
    report(
        "determinism",
        a == b && a == c,
        format!(
            "{} output files, {bytes} bytes; same seed rerun identical: {}; workers 1 vs 8 identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

fn main() {
    let vocab = synthetic::vocabulary();
    let tmp = tempfile::TempDir::new().unwrap();
    let mut masked = None;
    let mut outcomes = vec![distribution_reproduction()];
    outcomes.extend(masking_budget(&vocab, &mut masked));
    let masked = masked.expect("masking run");
    outcomes.push(length_fidelity(&masked));
    outcomes.push(replacement_ratios(&masked, &vocab));
    outcomes.push(dynamic_masking(&masked, &vocab));
    outcomes.push(scorer_oracle());
    outcomes.push(cloze_integrity(tmp.path()));
    outcomes.push(assembly_examples(&vocab));
    outcomes.push(determinism(tmp.path()));

    for o in &outcomes {
        println!("{}  {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
