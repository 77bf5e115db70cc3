//! Script-agnostic tokenization shared by BM25 and the paragraph chunker.
//!
//! A token is a maximal run of alphanumeric characters (any script), where
//! combining marks and zero-width joiners directly following a word character
//! stay attached to it. This keeps Devanagari words such as "बाढ़" whole
//! (the nukta and vowel signs are marks). Surfaces are lowercased; everything
//! else (punctuation, symbols, emoji, whitespace) separates tokens and is
//! dropped.

use unicode_normalization::char::is_combining_mark;

/// A case-folded token with its byte span in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn byte_span(&self) -> (usize, usize) {
        (self.start, self.end)
    }
}

#[inline]
fn starts_word(c: char) -> bool {
    c.is_alphanumeric()
}

#[inline]
fn continues_word(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c) || c == '\u{200C}' || c == '\u{200D}'
}

/// Byte spans of every token in `text`, without allocating surfaces.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in text.char_indices() {
        match start {
            Some(s) if !continues_word(c) => {
                spans.push((s, i));
                start = if starts_word(c) { Some(i) } else { None };
            }
            None if starts_word(c) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

pub fn tokenize(text: &str) -> Vec<Token> {
    token_spans(text)
        .into_iter()
        .map(|(start, end)| Token {
            surface: text[start..end].to_lowercase(),
            start,
            end,
        })
        .collect()
}

/// Case-folded surfaces only.
pub fn terms(text: &str) -> Vec<String> {
    token_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_lowercase())
        .collect()
}

pub fn token_count(text: &str) -> usize {
    token_spans(text).len()
}

/// Longest prefix of `text` holding at most `max_tokens` tokens, cut right
/// after the last kept token. Returns `text` unchanged when it already fits.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let spans = token_spans(text);
    if spans.len() <= max_tokens {
        return text;
    }
    if max_tokens == 0 {
        return "";
    }
    &text[..spans[max_tokens - 1].1]
}
