use masklen::dataset::{bucket_span_examples, Bucket, Split, SplitRatios};
use masklen::synthetic;

fn main() {
    let candidates = synthetic::span_candidates(1, 2000, (2, 12));
    for bucket in [Bucket::ShortSpan, Bucket::LongSpan] {
        let cfg = bucket.config();
        let out = bucket_span_examples(candidates.iter().cloned().map(Ok), &cfg);
        let mut per_split = [0usize; 3];
        for ex in &out.kept {
            let split = SplitRatios::SPAN.assign(42, ex.group_key());
            per_split[Split::ALL.iter().position(|s| *s == split).unwrap()] += 1;
        }
        println!(
            "{:<11} [{}, {}]: kept {:>4}, rejected {:>4}, train/dev/test {:?}",
            bucket.name(),
            cfg.min_len,
            cfg.max_len,
            out.kept.len(),
            out.rejected.len(),
            per_split
        );
    }
}
