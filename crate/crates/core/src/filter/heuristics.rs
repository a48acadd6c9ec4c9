use serde::{Deserialize, Serialize};

use super::{FilterError, FilterVerdict, Reason, Thresholds};
use crate::corpus::{Document, SentenceSplitter};
use crate::vocab::count_basic_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharClassRatios {
    /// Digits over non-whitespace code points.
    pub digit: f64,
    /// Uppercase letters over non-whitespace code points.
    pub upper: f64,
    /// Letters outside the Finnish alphabet over all letters; 0 when the
    /// text has no letters.
    pub nontarget_alpha: f64,
}

fn is_target_alpha(c: char) -> bool {
    c.is_ascii_alphabetic() || matches!(c, 'å' | 'ä' | 'ö' | 'Å' | 'Ä' | 'Ö')
}

pub fn char_class_ratios(text: &str) -> Result<CharClassRatios, FilterError> {
    let (mut total, mut digits, mut upper, mut alpha, mut foreign) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if c.is_numeric() {
            digits += 1;
        }
        if c.is_uppercase() {
            upper += 1;
        }
        if c.is_alphabetic() {
            alpha += 1;
            if !is_target_alpha(c) {
                foreign += 1;
            }
        }
    }
    if total == 0 {
        return Err(FilterError::EmptyText);
    }
    let total = total as f64;
    Ok(CharClassRatios {
        digit: digits as f64 / total,
        upper: upper as f64 / total,
        nontarget_alpha: if alpha == 0 {
            0.0
        } else {
            foreign as f64 / alpha as f64
        },
    })
}

/// Basic-token length of each sentence of `text`.
pub fn sentence_lengths(text: &str, splitter: &SentenceSplitter) -> Vec<usize> {
    splitter
        .split(text)
        .into_iter()
        .map(count_basic_tokens)
        .collect()
}

/// Applies the rules in order digit, uppercase, non-target letters, average
/// sentence length, and rejects on the first one violated. The verdict
/// carries the offending value as its score.
pub fn heuristic_filter(doc: &Document, t: &Thresholds, sentence_lengths: &[usize]) -> FilterVerdict {
    let ratios = match char_class_ratios(&doc.text) {
        Ok(r) => r,
        Err(_) => return FilterVerdict::reject(Reason::ShortSentences, 0.0),
    };
    if ratios.digit > t.max_digit_ratio {
        return FilterVerdict::reject(Reason::DigitRatio, ratios.digit);
    }
    if ratios.upper > t.max_upper_ratio {
        return FilterVerdict::reject(Reason::UpperRatio, ratios.upper);
    }
    if ratios.nontarget_alpha > t.max_nontarget_alpha_ratio {
        return FilterVerdict::reject(Reason::NontargetAlpha, ratios.nontarget_alpha);
    }
    let avg = if sentence_lengths.is_empty() {
        0.0
    } else {
        sentence_lengths.iter().sum::<usize>() as f64 / sentence_lengths.len() as f64
    };
    if avg < t.min_avg_sentence_len {
        return FilterVerdict::reject(Reason::ShortSentences, avg);
    }
    FilterVerdict::keep(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use proptest::prelude::*;

    #[test]
    fn ratios() {
        assert_eq!(char_class_ratios("abc123").unwrap().digit, 0.5);
        assert_eq!(char_class_ratios("ABC").unwrap().upper, 1.0);
        assert_eq!(char_class_ratios("абв abc").unwrap().nontarget_alpha, 0.5);
        assert_eq!(char_class_ratios("Äiti söi åttan").unwrap().nontarget_alpha, 0.0);
        assert_eq!(char_class_ratios("123").unwrap().nontarget_alpha, 0.0);
        assert!(matches!(char_class_ratios(" \n\t"), Err(FilterError::EmptyText)));
    }

    fn run(text: &str, t: &Thresholds) -> FilterVerdict {
        let doc = Document::new("d", Source::Crawl, text);
        heuristic_filter(&doc, t, &sentence_lengths(text, &SentenceSplitter::default()))
    }

    #[test]
    fn digit_rule_fires_first() {
        let t = Thresholds {
            max_digit_ratio: 0.3,
            ..Thresholds::default()
        };
        let v = run("AB12", &t);
        assert_eq!(v.reason, Reason::DigitRatio);
        assert_eq!(v.score, Some(0.5));
        assert!(!v.kept);
    }

    #[test]
    fn clean_prose_kept() {
        let v = run(
            "Tämä on aivan tavallinen suomenkielinen virke. Toinen virke on myös melko pitkä.",
            &Thresholds::default(),
        );
        assert_eq!(v, FilterVerdict::keep(None));
    }

    #[test]
    fn short_sentences() {
        let doc = Document::new("d", Source::Crawl, "Moi moi");
        let v = heuristic_filter(&doc, &Thresholds::default(), &[2, 2]);
        assert_eq!(v.reason, Reason::ShortSentences);
        assert_eq!(v.score, Some(2.0));
    }

    #[test]
    fn empty_document() {
        let v = run("   ", &Thresholds::default());
        assert_eq!(v.reason, Reason::ShortSentences);
        assert!(!v.kept);
    }

    #[test]
    fn threshold_validation() {
        assert!(Thresholds::default().validate().is_ok());
        let bad = Thresholds {
            max_upper_ratio: 1.5,
            ..Thresholds::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn ratios_bounded_and_stable(text in "\\PC{1,60}") {
            prop_assume!(text.chars().any(|c| !c.is_whitespace()));
            let r = char_class_ratios(&text).unwrap();
            for v in [r.digit, r.upper, r.nontarget_alpha] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let doubled = char_class_ratios(&format!("{text}{text}")).unwrap();
            let reversed = char_class_ratios(&text.chars().rev().collect::<String>()).unwrap();
            prop_assert_eq!(r, doubled);
            prop_assert_eq!(r, reversed);
        }

        #[test]
        fn loosening_never_rejects(text in "[a-zA-Zä0-9 .]{1,60}", d in 0.0f64..1.0, u in 0.0f64..1.0,
                                   n in 0.0f64..1.0, l in 0.0f64..10.0, slack in 0.0f64..0.5) {
            let tight = Thresholds { max_digit_ratio: d, max_upper_ratio: u,
                max_nontarget_alpha_ratio: n, min_avg_sentence_len: l, min_lang_score: 0.5 };
            let loose = Thresholds { max_digit_ratio: (d + slack).min(1.0),
                max_upper_ratio: (u + slack).min(1.0),
                max_nontarget_alpha_ratio: (n + slack).min(1.0),
                min_avg_sentence_len: (l - slack * 10.0).max(0.0), min_lang_score: 0.5 };
            if run(&text, &tight).kept {
                prop_assert!(run(&text, &loose).kept);
            }
        }
    }
}
