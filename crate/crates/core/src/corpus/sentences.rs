use std::collections::HashSet;

/// Abbreviations that never end a sentence, lowercased with their period.
pub const FINNISH_ABBREVIATIONS: &[&str] = &[
    "esim.", "mm.", "n.", "ns.", "ks.", "vrt.", "ym.", "ts.", "huom.", "prof.", "tri.", "s.",
    "v.", "klo.", "kpl.", "milj.", "mrd.", "nk.", "yl.", "os.", "p.", "puh.", "kok.", "dos.",
];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | '»' | ')' | ']')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '«' | '„' | '(' | '[' | '–' | '-')
}

/// Rule-based sentence splitter.
///
/// A boundary is placed after a run of terminators (`. ! ? …`, optionally
/// followed by closing quotes or brackets) when whitespace follows and the
/// next word starts (after any opening quotes or dashes) with an uppercase
/// letter or a digit, unless the word ending in the period is a known
/// abbreviation. A blank line always ends a sentence.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(FINNISH_ABBREVIATIONS.iter().copied())
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations<I, S>(abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        SentenceSplitter {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn split<'t>(&self, text: &'t str) -> Vec<&'t str> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            if c == '\n' {
                // blank line: newline, optional horizontal space, newline
                let mut j = i + 1;
                while j < chars.len() && chars[j].1.is_whitespace() && chars[j].1 != '\n' {
                    j += 1;
                }
                if j < chars.len() && chars[j].1 == '\n' {
                    push_trimmed(&mut sentences, &text[start..chars[i].0]);
                    start = chars[j].0;
                    i = j;
                    continue;
                }
            }
            if !is_terminator(c) {
                i += 1;
                continue;
            }

            let run_start = i;
            let mut end = i;
            while end < chars.len() && is_terminator(chars[end].1) {
                end += 1;
            }
            while end < chars.len() && is_closer(chars[end].1) {
                end += 1;
            }
            let mut next = end;
            while next < chars.len() && chars[next].1.is_whitespace() {
                next += 1;
            }
            let has_space = next > end;
            let mut first = next;
            while first < chars.len() && is_opener(chars[first].1) {
                first += 1;
            }
            let opens_sentence = first < chars.len() && {
                let n = chars[first].1;
                n.is_uppercase() || n.is_numeric()
            };
            let byte_end = chars.get(end).map_or(text.len(), |&(b, _)| b);
            if has_space && opens_sentence && !self.ends_with_abbreviation(text, start, &chars, run_start, end) {
                push_trimmed(&mut sentences, &text[start..byte_end]);
                start = byte_end;
            }
            i = end.max(i + 1);
        }
        push_trimmed(&mut sentences, &text[start..]);
        sentences
    }

    fn ends_with_abbreviation(
        &self,
        text: &str,
        start: usize,
        chars: &[(usize, char)],
        run_start: usize,
        run_end: usize,
    ) -> bool {
        // only a single period can close an abbreviation
        if chars[run_start].1 != '.' || run_end != run_start + 1 {
            return false;
        }
        let period_end = chars.get(run_end).map_or(text.len(), |&(b, _)| b);
        let word_start = text[start..chars[run_start].0]
            .rfind(char::is_whitespace)
            .map_or(start, |p| {
                let ws = text[start + p..].chars().next().map_or(1, char::len_utf8);
                start + p + ws
            });
        let word = text[word_start..period_end].to_lowercase();
        let word = word.trim_start_matches(['(', '"', '\'', '“', '«']);
        self.abbreviations.contains(word)
    }
}

fn push_trimmed<'t>(out: &mut Vec<&'t str>, s: &'t str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s);
    }
}

/// Splits `text` with the default Finnish abbreviation list.
pub fn split_sentences(text: &str) -> Vec<String> {
    SentenceSplitter::default()
        .split(text)
        .into_iter()
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_sentences() {
        assert_eq!(split_sentences("Hei. Moi."), vec!["Hei.", "Moi."]);
    }

    #[test]
    fn empty() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n ").is_empty());
    }

    #[test]
    fn abbreviation_is_not_a_boundary() {
        assert_eq!(
            split_sentences("Hän tuli esim. eilen. Hyvä."),
            vec!["Hän tuli esim. eilen.", "Hyvä."]
        );
        // abbreviation followed by a capitalized name
        assert_eq!(
            split_sentences("Paikalla oli mm. Virtanen. Hyvä."),
            vec!["Paikalla oli mm. Virtanen.", "Hyvä."]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(split_sentences("Se maksaa 5 e. jos"), vec!["Se maksaa 5 e. jos"]);
    }

    #[test]
    fn terminator_runs_and_quotes() {
        assert_eq!(
            split_sentences("Mitä?! \"Ei mitään.\" 3 kertaa…  Niin."),
            vec!["Mitä?!", "\"Ei mitään.\"", "3 kertaa…", "Niin."]
        );
    }

    #[test]
    fn decimal_point_is_not_a_boundary() {
        assert_eq!(split_sentences("Arvo on 3.5 prosenttia."), vec!["Arvo on 3.5 prosenttia."]);
    }

    #[test]
    fn blank_line_ends_sentence() {
        assert_eq!(
            split_sentences("Otsikko ilman pistettä\n\nTeksti alkaa tästä."),
            vec!["Otsikko ilman pistettä", "Teksti alkaa tästä."]
        );
    }

    #[test]
    fn custom_abbreviations() {
        let s = SentenceSplitter::with_abbreviations(["Dr."]);
        assert_eq!(s.split("Dr. Smith came. He left."), vec!["Dr. Smith came.", "He left."]);
    }

    proptest! {
        #[test]
        fn preserves_non_whitespace(text in "[a-zA-Zä0-9 .!?\n\"]{0,80}") {
            let sentences = split_sentences(&text);
            prop_assert!(sentences.iter().all(|s| !s.is_empty()));
            let joined: String = sentences.concat().chars().filter(|c| !c.is_whitespace()).collect();
            let original: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(joined, original);
        }
    }
}
