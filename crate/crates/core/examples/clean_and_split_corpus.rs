use masklen::corpus::{clean_text, split_paragraphs, split_sentences, RawDocument, SourceDomain};

fn main() {
    println!("{:?}", clean_text("<p>你好&nbsp;&nbsp;世界</p>[图片]\n\n"));

    let doc = RawDocument {
        id: "news-001".into(),
        source_domain: SourceDomain::News,
        text: "<p>今天下雨，我在家。你呢？</p>\n\n<div>流行病学是研究疾病分布的学科；<img src=\"a.png\">它很重要！</div>".into(),
    };
    for p in split_paragraphs(&doc) {
        println!("[{}] {}", p.key(), p.text);
        for s in split_sentences(&p) {
            println!("    {:>3}..{:<3} ({:>2} chars) {}", s.start, s.end, s.char_len, s.text);
        }
    }
}
