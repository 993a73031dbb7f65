use masklen::corpus::{split_paragraphs, split_sentences};
use masklen::dataset::{build_cloze_example, cloze_violations, Bucket, ClozeOutcome};
use masklen::synthetic::{self, CorpusShape};

fn main() {
    let cfg = Bucket::LongCloze.config();
    let docs = synthetic::documents(7, CorpusShape { documents: 3, ..Default::default() });
    let (mut built, mut skipped) = (0, 0);
    for p in docs.iter().flat_map(split_paragraphs) {
        match build_cloze_example(&p, &split_sentences(&p), &cfg, 7).unwrap() {
            ClozeOutcome::Built(ex) => {
                assert_eq!(ex.reconstruct().as_deref(), Some(p.text.as_str()));
                assert!(cloze_violations(&ex, &cfg, Some(&p.text)).is_empty());
                if built == 0 {
                    println!("{}", serde_json::to_string_pretty(&ex).unwrap());
                }
                built += 1;
            }
            ClozeOutcome::Skip(reason) => {
                println!("skip {}: {reason:?}", p.key());
                skipped += 1;
            }
        }
    }
    println!("built {built}, skipped {skipped}");
}
