use masklen::dataset::ClozeSummaryBuilder;
use masklen::stats::{stats_report, to_probabilities, DatasetStats, DatasetSummary, LengthDistribution, ReportFormat, SpanStats};

fn main() {
    let train = LengthDistribution::from_counts([(4, 16171), (5, 8566), (6, 6653)]).unwrap();
    for p in to_probabilities(&train).unwrap() {
        println!("{:>2} chars: {:>6}  {}%", p.length, p.count, p.percent);
    }

    let summary = DatasetSummary {
        name: "train".into(),
        stats: DatasetStats::Span(SpanStats {
            paragraphs: 600,
            questions: train.total(),
            min_answer_tokens: 4,
            max_answer_tokens: 6,
            ..Default::default()
        }),
        distribution: train,
    };
    print!("{}", stats_report(&[summary], ReportFormat::Markdown).unwrap());

    // Distributions can also be collected straight from cloze records.
    let empty = ClozeSummaryBuilder::default().finish("none");
    println!("empty cloze summary has {} lengths", empty.distribution.counts().len());
}
