use masklen::assembly::{assemble_span_example, pack_pretraining_sequences, WindowingPolicy};
use masklen::dataset::{SpanAnswer, SpanExample};
use masklen::synthetic;
use masklen::tokenizer::{encode, tokenize};

fn main() {
    let vocab = synthetic::vocabulary();
    let ex = SpanExample {
        id: "q1".into(),
        title: None,
        context: "研究表明这种方法可以有效提高学生的学习能力和理解能力。".into(),
        question: "什么方法？".into(),
        answer: SpanAnswer { text: "学习能力".into(), answer_start: 16 },
    };
    for stride in [0, 4] {
        let policy = WindowingPolicy::new(20, stride);
        println!("max_len 20, stride {stride}:");
        for seq in assemble_span_example(&ex, &policy, &vocab).unwrap() {
            println!(
                "  window {} answer_in_window={:?} pads={} segments={:?}",
                seq.window_index,
                seq.answer_in_window.unwrap(),
                seq.ids.len() - seq.content_len(),
                seq.segment_ids
            );
        }
    }

    let ids = encode(&tokenize(&ex.context.repeat(40), &vocab));
    let packed = pack_pretraining_sequences(&ids, 512, &vocab, "p0").unwrap();
    let sizes: Vec<usize> = packed.iter().map(|s| s.content_len()).collect();
    println!("{} tokens packed into {} sequences of content {:?}", ids.len(), packed.len(), sizes);
}
