//! Tokenizes a passage, splits it into sentences and tags word classes.
//!
//! cargo run --example segment_and_tag -- [file]

use cbt::corpus::{segment_sentences, tag_word_classes, Lexicon, SegmentConfig};

const SAMPLE: &str = "Mr. Toad drove off in the motor-car. \"Where is Ratty?\" asked Mole, \
peering into the hole under the hedge.\n\nThe river ran on past the willows.";

fn main() -> anyhow::Result<()> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let sentences = segment_sentences(&text, &SegmentConfig::default());
    for sentence in tag_word_classes(&sentences, &Lexicon::default()) {
        let line: Vec<String> = sentence
            .iter()
            .map(|t| format!("{}/{}", t.token.surface, t.class))
            .collect();
        println!("{}", line.join(" "));
    }
    Ok(())
}
