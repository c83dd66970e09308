//! Segmentation and tagging checked against a hand-segmented, hand-tagged
//! excerpt, plus property tests for the tokenizer and tagger.

use cbt::corpus::{segment_sentences, tag_word_classes, tokenize, Lexicon, SegmentConfig, WordClass};
use proptest::prelude::*;

/// Thirty sentences in book layout, with their hand-assigned class counts
/// (named entities, common nouns, verbs, prepositions). Conventions: titles
/// such as "Mr." are not entities; forms of be/have/do and modals are not
/// verbs; verb particles ("stood up") are not prepositions.
const EXCERPT: &[(&str, [usize; 4])] = &[
    ("Mr. Brown lived in a small house near the river.", [1, 2, 1, 2]),
    ("Every morning he walked to the market with his dog, Toby.", [1, 3, 1, 2]),
    ("\"Good day, Mrs. Green!\" he called.", [1, 1, 1, 0]),
    ("Mrs. Green waved from her garden.", [1, 1, 1, 1]),
    ("She was picking apples for a pie.", [0, 2, 1, 1]),
    ("\"Would you like one?\" she asked.", [0, 0, 2, 0]),
    ("Toby barked at a crow on the fence.", [1, 2, 1, 2]),
    ("The crow flew over the trees and into the wood.", [0, 3, 1, 2]),
    ("Later that day, Dr. Hale came down the lane in his cart.", [1, 3, 1, 2]),
    ("He had come from the town of Millbrook.", [1, 1, 1, 2]),
    ("\"Is anyone ill?\" he asked Mr. Brown.", [1, 0, 1, 0]),
    ("\"Nobody at all,\" said Mr. Brown, \"but the cow is very tired.\"", [1, 1, 1, 1]),
    ("The doctor laughed and looked at the cow.", [0, 2, 2, 1]),
    ("She was lying under an apple tree behind the barn.", [0, 3, 1, 2]),
    ("\"She needs rest and fresh grass,\" said Dr. Hale.", [1, 2, 2, 0]),
    ("Then he drove back to Millbrook before dark.", [1, 1, 1, 2]),
    ("That evening Anna came home from school.", [1, 2, 1, 1]),
    ("Anna was Mr. Brown's niece.", [2, 1, 0, 0]),
    ("She ran to the barn with a lamp.", [0, 2, 1, 2]),
    ("The cow lifted her head and looked at Anna.", [1, 2, 2, 1]),
    ("\"Poor old girl,\" Anna whispered.", [1, 1, 1, 0]),
    ("She sat beside the cow until the moon rose over the hill.", [0, 3, 2, 3]),
    ("In the morning the cow stood up and ate her breakfast.", [0, 3, 2, 1]),
    ("Mr. Brown shouted for joy.", [1, 1, 1, 1]),
    ("He told the whole story to Mrs. Green across the hedge.", [1, 2, 1, 2]),
    ("Mrs. Green smiled and gave Anna a basket of apples.", [2, 2, 2, 1]),
    ("\"Take these to the doctor,\" she said.", [0, 1, 2, 1]),
    ("So Anna walked all the way to Millbrook.", [2, 1, 1, 1]),
    ("Dr. Hale thanked her and ate three apples at once.", [1, 1, 2, 1]),
    ("Then he gave Toby the last one!", [1, 0, 1, 0]),
];

/// Paragraphs of the excerpt: sentence index ranges, with one sentence
/// wrapped across a line break in each paragraph.
const PARAGRAPHS: &[(usize, usize)] = &[(0, 8), (8, 16), (16, 23), (23, 30)];

fn excerpt_text() -> String {
    PARAGRAPHS
        .iter()
        .map(|&(a, b)| {
            let body: Vec<&str> = EXCERPT[a..b].iter().map(|(s, _)| *s).collect();
            let text = body.join(" ");
            // Wrap after the first word of the second sentence.
            let second = body[0].len() + 1;
            let cut = second + text[second..].find(' ').unwrap_or(0);
            format!("{}\n{}", &text[..cut], &text[cut + 1..])
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[test]
fn excerpt_sentence_count_matches_hand_count() {
    let sentences = segment_sentences(&excerpt_text(), &SegmentConfig::default());
    assert_eq!(sentences.len(), EXCERPT.len());
    for (got, (want, _)) in sentences.iter().zip(EXCERPT) {
        let n = tokenize(want, &SegmentConfig::default()).len();
        assert_eq!(got.len(), n, "{want}");
    }
}

#[test]
fn tag_profile_is_within_fifteen_percent_of_hand_tags() {
    let sentences = segment_sentences(&excerpt_text(), &SegmentConfig::default());
    let tagged = tag_word_classes(&sentences, &Lexicon::default());
    let mut got = [0usize; 4];
    for t in tagged.iter().flatten() {
        if let Some(i) = WordClass::QUESTION_CLASSES.iter().position(|c| *c == t.class) {
            got[i] += 1;
        }
    }
    let mut want = [0usize; 4];
    for (_, c) in EXCERPT {
        for i in 0..4 {
            want[i] += c[i];
        }
    }
    assert_eq!(want, [24, 49, 38, 35]);
    for i in 0..4 {
        let rel = (got[i] as f64 - want[i] as f64).abs() / want[i] as f64;
        assert!(
            rel <= 0.15,
            "{}: tagger {} vs hand {} ({:.0}% off)",
            WordClass::QUESTION_CLASSES[i],
            got[i],
            want[i],
            rel * 100.0
        );
    }
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,8}",
        "[A-Z][a-z]{1,6}",
        "[a-z]{1,5}[.!?]{1,2}",
        "\"[A-Za-z]{1,5}",
        "[a-z]{1,5}[,;]",
        "[a-z]{1,4}'[a-z]{1,2}",
        Just("Mr.".to_string()),
        Just("\n\n".to_string()),
    ]
}

proptest! {
    #[test]
    fn tokens_cover_all_non_whitespace_input(words in prop::collection::vec(word(), 0..60)) {
        let text = words.join(" ");
        let cfg = SegmentConfig::default();
        let sentences = segment_sentences(&text, &cfg);
        let joined: String = sentences.iter().flatten().map(|t| t.surface.as_str()).collect();
        let expected: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(joined, expected);
        for s in &sentences {
            prop_assert!(!s.is_empty());
            for (i, t) in s.iter().enumerate() {
                prop_assert!(!t.surface.is_empty());
                prop_assert_eq!(&t.lower, &t.surface.to_lowercase());
                prop_assert_eq!(t.index_in_sentence, i);
            }
        }
    }

    #[test]
    fn tagging_keeps_tokens_and_is_deterministic(words in prop::collection::vec(word(), 0..60)) {
        let text = words.join(" ");
        let cfg = SegmentConfig::default();
        let lex = Lexicon::default();
        let sentences = segment_sentences(&text, &cfg);
        prop_assert_eq!(&sentences, &segment_sentences(&text, &cfg));
        let tagged = tag_word_classes(&sentences, &lex);
        prop_assert_eq!(tagged.len(), sentences.len());
        for (t, s) in tagged.iter().zip(&sentences) {
            prop_assert_eq!(t.len(), s.len());
            for (a, b) in t.iter().zip(s) {
                prop_assert_eq!(&a.token, b);
            }
        }
        prop_assert_eq!(tagged, tag_word_classes(&sentences, &lex));
    }
}
