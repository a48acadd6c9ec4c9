use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Document, SentenceSplitter, Source};
use crate::vocab::count_basic_tokens;

/// Document, sentence, basic-token and code point counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub docs: u64,
    pub sentences: u64,
    pub tokens: u64,
    /// Unicode code points of the raw text, whitespace included.
    pub chars: u64,
}

impl CorpusStats {
    pub fn of_document(doc: &Document, splitter: &SentenceSplitter) -> CorpusStats {
        CorpusStats {
            docs: 1,
            sentences: splitter.split(&doc.text).len() as u64,
            tokens: count_basic_tokens(&doc.text) as u64,
            chars: doc.text.chars().count() as u64,
        }
    }
}

impl Add for CorpusStats {
    type Output = CorpusStats;

    fn add(self, rhs: CorpusStats) -> CorpusStats {
        CorpusStats {
            docs: self.docs + rhs.docs,
            sentences: self.sentences + rhs.sentences,
            tokens: self.tokens + rhs.tokens,
            chars: self.chars + rhs.chars,
        }
    }
}

impl AddAssign for CorpusStats {
    fn add_assign(&mut self, rhs: CorpusStats) {
        *self = *self + rhs;
    }
}

/// Per-source rows plus their total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub sources: BTreeMap<String, CorpusStats>,
    pub total: CorpusStats,
}

impl Default for StatsReport {
    fn default() -> Self {
        StatsReport {
            sources: Source::ALL
                .iter()
                .map(|s| (s.as_str().to_string(), CorpusStats::default()))
                .collect(),
            total: CorpusStats::default(),
        }
    }
}

impl StatsReport {
    pub fn add(&mut self, source: Source, stats: CorpusStats) {
        *self.sources.entry(source.as_str().to_string()).or_default() += stats;
        self.total += stats;
    }

    pub fn source(&self, source: Source) -> CorpusStats {
        self.sources.get(source.as_str()).copied().unwrap_or_default()
    }

    /// Aligned plain-text table with Docs/Sents/Tokens/Chars columns. With
    /// `human`, counts are abbreviated (`4M`, `0.9B`).
    pub fn render_table(&self, human: bool) -> String {
        let fmt = |n: u64| if human { humanize(n) } else { n.to_string() };
        let mut rows = vec![[
            String::new(),
            "Docs".to_string(),
            "Sents".to_string(),
            "Tokens".to_string(),
            "Chars".to_string(),
        ]];
        let row = |name: &str, s: &CorpusStats| {
            [
                name.to_string(),
                fmt(s.docs),
                fmt(s.sentences),
                fmt(s.tokens),
                fmt(s.chars),
            ]
        };
        for source in Source::ALL {
            rows.push(row(&title_case(source.as_str()), &self.source(source)));
        }
        rows.push(row("Total", &self.total));

        let mut widths = [0usize; 5];
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        for (i, r) in rows.iter().enumerate() {
            if i == rows.len() - 1 {
                let rule = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                out.push_str(&"-".repeat(rule));
                out.push('\n');
            }
            let _ = write!(out, "{:<w$}", r[0], w = widths[0]);
            for (cell, w) in r.iter().zip(widths).skip(1) {
                let _ = write!(out, "  {cell:>w$}");
            }
            out.push('\n');
        }
        out
    }
}

fn title_case(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Abbreviates a count the way corpus tables usually do: `950`, `12K`,
/// `68M`, `0.9B`, `1.7B`, `24B`.
pub fn humanize(n: u64) -> String {
    let one_decimal = |v: f64| {
        let s = format!("{v:.1}");
        s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
    };
    let v = n as f64;
    if v >= 1e10 {
        format!("{}B", (v / 1e9).round())
    } else if v >= 5e8 {
        format!("{}B", one_decimal(v / 1e9))
    } else if v >= 1e6 {
        format!("{}M", (v / 1e6).round())
    } else if v >= 1e3 {
        format!("{}K", (v / 1e3).round())
    } else {
        n.to_string()
    }
}

/// Statistics per source and in total. Tokens are cased basic tokens.
pub fn corpus_stats(docs: &[Document]) -> StatsReport {
    let splitter = SentenceSplitter::default();
    let per_doc: Vec<(Source, CorpusStats)> = docs
        .par_iter()
        .map(|d| (d.source, CorpusStats::of_document(d, &splitter)))
        .collect();
    let mut report = StatsReport::default();
    for (source, stats) in per_doc {
        report.add(source, stats);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_news_document() {
        let report = corpus_stats(&[Document::new("d1", Source::News, "Hei maailma.")]);
        assert_eq!(
            report.source(Source::News),
            CorpusStats {
                docs: 1,
                sentences: 1,
                tokens: 3,
                chars: 12
            }
        );
        assert_eq!(report.total, report.source(Source::News));
    }

    #[test]
    fn empty_corpus() {
        let report = corpus_stats(&[]);
        assert_eq!(report.total, CorpusStats::default());
        assert!(report.sources.values().all(|s| *s == CorpusStats::default()));
    }

    #[test]
    fn rows_sum_to_total() {
        let docs = vec![
            Document::new("a", Source::News, "Yksi. Kaksi."),
            Document::new("b", Source::Crawl, "Kolme neljä viisi!"),
            Document::new("c", Source::Discussion, "kuusi"),
            Document::new("d", Source::Crawl, ""),
        ];
        let report = corpus_stats(&docs);
        let sum = report
            .sources
            .values()
            .fold(CorpusStats::default(), |acc, s| acc + *s);
        assert_eq!(sum, report.total);
        assert_eq!(report.source(Source::Crawl).docs, 2);
    }

    #[test]
    fn humanized_counts() {
        assert_eq!(humanize(950), "950");
        assert_eq!(humanize(4_000_000), "4M");
        assert_eq!(humanize(68_400_000), "68M");
        assert_eq!(humanize(900_000_000), "0.9B");
        assert_eq!(humanize(24_000_000_000), "24B");
        assert_eq!(humanize(12_300), "12K");
        assert_eq!(humanize(1_700_000_000), "1.7B");
        assert_eq!(humanize(4_000_000_000), "4B");
    }

    #[test]
    fn table_layout() {
        let report = corpus_stats(&[Document::new("d1", Source::News, "Hei maailma.")]);
        let table = report.render_table(false);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0].split_whitespace().collect::<Vec<_>>(), ["Docs", "Sents", "Tokens", "Chars"]);
        assert_eq!(lines[1].split_whitespace().collect::<Vec<_>>(), ["News", "1", "1", "3", "12"]);
        assert!(lines[5].starts_with('-'));
        assert!(lines[6].starts_with("Total"));
        let widths: Vec<usize> = lines.iter().map(|l| l.chars().count()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{table}");
    }
}
