//! Tokenization shared by similarity, BM25 and the rule-based labeler.

/// Lowercased alphanumeric word tokens. No stemming.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
