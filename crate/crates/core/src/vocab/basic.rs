//! BERT-style basic tokenization.

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

use super::CasingMode;

/// Punctuation for tokenization purposes: every code point in the Unicode
/// `P*` (punctuation) or `S*` (symbol) general categories.
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

fn is_control(c: char) -> bool {
    if c == '\t' || c == '\n' || c == '\r' {
        return false;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::Control | GeneralCategory::Format
    )
}

/// NFD-decomposes `text`, drops nonspacing combining marks and lowercases
/// the remainder.
///
/// This is the normalization applied by uncased vocabularies. Note that it
/// conflates Finnish `ä`/`a` and `ö`/`o`.
pub fn strip_accents_lower(text: &str) -> String {
    text.nfd()
        .filter(|&c| get_general_category(c) != GeneralCategory::NonspacingMark)
        .flat_map(char::to_lowercase)
        .collect()
}

/// Splits `text` on whitespace and then isolates every punctuation code point
/// as its own token. Control and format characters, U+0000 and U+FFFD are
/// dropped. In uncased mode the text is first passed through
/// [`strip_accents_lower`].
pub fn basic_tokenize(text: &str, mode: CasingMode) -> Vec<String> {
    let normalized;
    let text = match mode {
        CasingMode::Cased => text,
        CasingMode::Uncased => {
            normalized = strip_accents_lower(text);
            normalized.as_str()
        }
    };

    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c == '\0' || c == '\u{fffd}' || is_control(c) {
            continue;
        }
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Number of basic tokens in `text` in cased mode, without allocating them.
pub fn count_basic_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut in_word = false;
    for c in text.chars() {
        if c == '\0' || c == '\u{fffd}' || is_control(c) {
            continue;
        }
        if c.is_whitespace() {
            in_word = false;
        } else if is_punctuation(c) {
            count += 1;
            in_word = false;
        } else if !in_word {
            count += 1;
            in_word = true;
        }
    }
    count
}
