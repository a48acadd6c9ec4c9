use super::{Vocab, CONTINUATION_PREFIX, UNK};

/// Tokens longer than this many code points are encoded as `[UNK]`.
pub const MAX_WORD_CHARS: usize = 100;

/// Greedy longest-prefix WordPiece segmentation of one basic token.
///
/// If some position of the token cannot be matched by any piece, the whole
/// token becomes a single `[UNK]`.
pub fn wordpiece_encode(token: &str, vocab: &Vocab) -> Vec<String> {
    let chars: Vec<(usize, char)> = token.char_indices().collect();
    if chars.is_empty() {
        return Vec::new();
    }
    if chars.len() > MAX_WORD_CHARS {
        return vec![UNK.to_string()];
    }

    let mut pieces = Vec::new();
    let mut start = 0;
    let mut candidate = String::with_capacity(token.len() + CONTINUATION_PREFIX.len());
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while end > start {
            candidate.clear();
            if start > 0 {
                candidate.push_str(CONTINUATION_PREFIX);
            }
            let from = chars[start].0;
            let to = chars.get(end).map_or(token.len(), |&(i, _)| i);
            candidate.push_str(&token[from..to]);
            if vocab.contains(&candidate) {
                found = Some(candidate.clone());
                break;
            }
            end -= 1;
        }
        match found {
            Some(piece) => {
                pieces.push(piece);
                start = end;
            }
            None => return vec![UNK.to_string()],
        }
    }
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::CasingMode;

    fn vocab(pieces: &[&str]) -> Vocab {
        Vocab::with_specials(pieces.iter().copied(), CasingMode::Cased).unwrap()
    }

    #[test]
    fn longest_match() {
        let v = vocab(&["valtio", "valtiovarain", "##ministeri", "##minister", "##i"]);
        assert_eq!(
            wordpiece_encode("valtiovarainministeri", &v),
            vec!["valtiovarain", "##ministeri"]
        );
    }

    #[test]
    fn whole_token_in_vocab() {
        let v = vocab(&["aikana"]);
        assert_eq!(wordpiece_encode("aikana", &v), vec!["aikana"]);
    }

    #[test]
    fn unknown_code_point_gives_single_unk() {
        let v = vocab(&["a", "##b"]);
        assert_eq!(wordpiece_encode("abä", &v), vec![UNK]);
        assert_eq!(wordpiece_encode("ba", &v), vec![UNK]);
    }

    #[test]
    fn long_word_is_unk() {
        let v = vocab(&["a", "##a"]);
        assert_eq!(wordpiece_encode(&"a".repeat(MAX_WORD_CHARS + 1), &v), vec![UNK]);
        assert_eq!(wordpiece_encode(&"a".repeat(MAX_WORD_CHARS), &v).len(), MAX_WORD_CHARS);
    }

    #[test]
    fn literal_hash_tokens() {
        let v = vocab(&["#", "###"]);
        assert_eq!(wordpiece_encode("##", &v), vec!["#", "###"]);
    }
}
