use super::Token;

/// Abbreviations that do not end a sentence, lowercased and without the dot.
pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "capt", "col", "gen", "lt", "rev", "mt",
    "messrs",
];

#[derive(Debug, Clone)]
pub struct SegmentConfig {
    pub abbreviations: Vec<String>,
    /// Treat a blank line as a hard sentence boundary.
    pub paragraph_breaks: bool,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            paragraph_breaks: true,
        }
    }
}

impl SegmentConfig {
    fn is_abbreviation(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        self.abbreviations.iter().any(|a| *a == lower)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Leading,
    Core,
    Trailing,
}

#[derive(Debug, Clone)]
struct RawToken {
    text: String,
    role: Role,
    paragraph_start: bool,
}

fn is_edge_punct(c: char) -> bool {
    !c.is_alphanumeric()
}

fn is_terminal(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| matches!(c, '.' | '!' | '?'))
}

fn is_closing(tok: &str) -> bool {
    matches!(tok, "\"" | "'" | "”" | "’" | "''" | ")" | "]" | "»")
}

/// Splits one whitespace-delimited chunk. Leading and trailing punctuation
/// become separate tokens (runs of `.`, `!`, `?` stay together); internal
/// apostrophes and hyphens stay in the word.
fn split_chunk(chunk: &str, cfg: &SegmentConfig, out: &mut Vec<RawToken>, paragraph_start: bool) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut start = 0;
    while start < chars.len() && is_edge_punct(chars[start]) {
        start += 1;
    }
    if start == chars.len() {
        push_punct_run(&chars, Role::Core, out, paragraph_start);
        return;
    }
    let mut end = chars.len();
    while end > start && is_edge_punct(chars[end - 1]) {
        end -= 1;
    }
    let mut first = paragraph_start;
    if start > 0 {
        push_punct_run(&chars[..start], Role::Leading, out, first);
        first = false;
    }
    let core: String = chars[start..end].iter().collect();
    let mut trailing = &chars[end..];
    // "Mr." keeps its dot.
    if trailing.first() == Some(&'.') && cfg.is_abbreviation(&core) {
        out.push(RawToken {
            text: format!("{core}."),
            role: Role::Core,
            paragraph_start: first,
        });
        trailing = &trailing[1..];
    } else {
        out.push(RawToken {
            text: core,
            role: Role::Core,
            paragraph_start: first,
        });
    }
    if !trailing.is_empty() {
        push_punct_run(trailing, Role::Trailing, out, false);
    }
}

fn push_punct_run(chars: &[char], role: Role, out: &mut Vec<RawToken>, mut paragraph_start: bool) {
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let mut j = i + 1;
        let groups = |x: char| matches!(x, '.' | '!' | '?');
        if groups(c) {
            while j < chars.len() && groups(chars[j]) {
                j += 1;
            }
        } else if c == '`' || c == '\'' {
            // `` and '' are conventional double quotes
            if j < chars.len() && chars[j] == c {
                j += 1;
            }
        }
        out.push(RawToken {
            text: chars[i..j].iter().collect(),
            role,
            paragraph_start,
        });
        paragraph_start = false;
        i = j;
    }
}

fn raw_tokens(text: &str, cfg: &SegmentConfig) -> Vec<RawToken> {
    let mut out = Vec::new();
    let mut newline_run = 0usize;
    let mut chunk = String::new();
    let mut pending_paragraph = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if !chunk.is_empty() {
                split_chunk(&chunk, cfg, &mut out, pending_paragraph);
                pending_paragraph = false;
                chunk.clear();
                newline_run = 0;
            }
            if c == '\n' {
                newline_run += 1;
                if newline_run >= 2 {
                    pending_paragraph = true;
                }
            }
        } else {
            chunk.push(c);
        }
    }
    if !chunk.is_empty() {
        split_chunk(&chunk, cfg, &mut out, pending_paragraph);
    }
    out
}

/// Whitespace tokenization with punctuation detached; no sentence structure.
pub fn tokenize(text: &str, cfg: &SegmentConfig) -> Vec<String> {
    raw_tokens(text, cfg).into_iter().map(|t| t.text).collect()
}

/// Splits raw book text into tokenized sentences.
///
/// A sentence ends after a token made only of `.`, `!` or `?`, together with
/// any closing quotes attached to it, unless the next token starts with a
/// lowercase letter (`"Stop!" she cried.` stays whole). Abbreviations keep
/// their dot and never end a sentence. Blank lines end a sentence when
/// `paragraph_breaks` is set.
pub fn segment_sentences(text: &str, cfg: &SegmentConfig) -> Vec<Vec<Token>> {
    let toks = raw_tokens(text, cfg);
    let mut sentences: Vec<Vec<Token>> = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if cfg.paragraph_breaks && toks[i].paragraph_start && !current.is_empty() {
            sentences.push(std::mem::take(&mut current));
        }
        let tok = &toks[i];
        current.push(Token::new(tok.text.clone(), current.len()));
        i += 1;
        if is_terminal(&tok.text) {
            while i < toks.len()
                && toks[i].role == Role::Trailing
                && is_closing(&toks[i].text)
                && !toks[i].paragraph_start
            {
                current.push(Token::new(toks[i].text.clone(), current.len()));
                i += 1;
            }
            let next_lower = toks
                .get(i)
                .and_then(|t| t.text.chars().next())
                .is_some_and(char::is_lowercase);
            if !next_lower {
                sentences.push(std::mem::take(&mut current));
            }
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}
