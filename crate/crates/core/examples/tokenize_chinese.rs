use masklen::tokenizer::{decode, encode, tokenize, tokenize_with_blanks, Vocabulary};

fn main() {
    let vocab = Vocabulary::from_tokens(
        [
            "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[BLANK1]", "流", "行", "病", "学", "是", "研", "究",
            "，", "。", "bert", "##ing", "token", "##ize",
        ]
        .map(String::from),
    )
    .expect("valid vocabulary");

    for text in ["流行病学是研究", "tokenize bert。", "流行病学，[CLS] 火星"] {
        let tokens = tokenize(text, &vocab);
        let ids = encode(&tokens);
        let pieces: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
        println!("{text:?}");
        println!("  pieces: {pieces:?}");
        println!("  ids:    {ids:?}");
        println!("  decode: {:?}", decode(&ids, &vocab).unwrap());
    }

    // Blank markers only become reserved ids through the cloze-aware entry point.
    let blanked = tokenize_with_blanks("流行[BLANK1]学", &vocab).unwrap();
    println!("blanked ids: {:?}", encode(&blanked));
}
