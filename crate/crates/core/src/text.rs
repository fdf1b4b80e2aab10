//! Tokenization shared by relevance filtering and lexicon scoring.
//!
//! Tokens are Unicode words (UAX #29 boundaries), lowercased. Diacritics are
//! kept, so "huracán" and "huracan" are distinct tokens.

use unicode_segmentation::UnicodeSegmentation;

/// Split `text` into lowercase word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Number of word tokens in `text`.
pub fn token_count(text: &str) -> usize {
    text.unicode_words().count()
}

/// Lowercased hashtags appearing in `text`, without the leading '#'.
pub fn extract_hashtags(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let mut rest = text;
    while let Some(pos) = rest.find('#') {
        rest = &rest[pos + 1..];
        let end = rest
            .char_indices()
            .find(|(_, c)| !(c.is_alphanumeric() || *c == '_'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if end > 0 {
            tags.push(rest[..end].to_lowercase());
        }
        rest = &rest[end..];
    }
    tags
}

/// Normalize a hashtag as stored on a message: lowercase, no leading '#'.
pub fn normalize_hashtag(tag: &str) -> String {
    tag.trim().trim_start_matches('#').to_lowercase()
}
