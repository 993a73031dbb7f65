use masklen::masking::{MaskingConfig, MaskingEngine};
use masklen::stats::LengthDistribution;
use masklen::synthetic;

fn main() {
    let vocab = synthetic::vocabulary();
    let dist = LengthDistribution::from_counts([(4, 16171), (5, 8566), (6, 6653)]).unwrap();
    let engine = MaskingEngine::new(MaskingConfig::new(dist, 7)).unwrap();

    let ids = &synthetic::packed_sequences(1, 1, 64, &vocab)[0];
    for rec in engine.generate_pretraining_examples(ids, "demo-w0", &vocab).unwrap().iter().take(3) {
        let masked: usize = rec.spans.iter().map(|s| s.1).sum();
        println!("dupe {} masks {masked}/62 tokens in spans {:?}", rec.dupe_index, rec.spans);
        let shown: String = rec
            .input_ids
            .iter()
            .map(|&id| if id == vocab.mask_id() { "_".to_string() } else { vocab.token(id).unwrap().to_string() })
            .collect();
        println!("  {shown}");
    }
}
