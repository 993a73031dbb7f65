use masklen::dataset::{Bucket, SpanAnswer, SpanExample};
use masklen::metrics::{cloze_scores, score_span, span_scores, ClozePrediction, ScoreOptions, SpanPrediction};
use masklen::dataset::ClozeExample;
use masklen::tokenizer::basic_tokens;

fn main() {
    let gold = basic_tokens("流行病学");
    let pred = basic_tokens("病学领域");
    println!("{:?}", span_scores(&gold, &pred).unwrap());

    let golds: Vec<SpanExample> = ["流行病学", "疾病分布", "公共卫生"]
        .iter()
        .enumerate()
        .map(|(i, a)| SpanExample {
            id: format!("q{i}"),
            title: None,
            context: a.to_string(),
            question: "？".into(),
            answer: SpanAnswer { text: a.to_string(), answer_start: 0 },
        })
        .collect();
    let preds = vec![
        SpanPrediction { id: "q0".into(), prediction_text: "流行病学".into() },
        SpanPrediction { id: "q1".into(), prediction_text: "疾病".into() },
    ];
    let opts = ScoreOptions { reference: Some(Bucket::ShortSpan), ..Default::default() };
    let report = score_span(&golds, &preds, &opts).unwrap();
    print!("{}", report.render_table());
    println!("missing: {:?}", report.missing);

    let key: Vec<String> = "GIHFCDBEA".chars().map(String::from).collect();
    let gold = ClozeExample { id: "c0".into(), passage: String::new(), options: Default::default(), answers: key.clone() };
    let mut guess = key.clone();
    guess.swap(0, 1);
    let (qac, pac) = cloze_scores(&[gold], &[ClozePrediction { id: "c0".into(), answers: guess }]).unwrap();
    println!("QAC {qac:.4} PAC {pac:.4}");
}
