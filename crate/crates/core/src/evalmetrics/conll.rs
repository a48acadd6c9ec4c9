use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{DepGraph, EvalError, TaggedSentence};

fn parse_err(line: usize, message: impl Into<String>) -> EvalError {
    EvalError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Pending {
    tokens: Vec<String>,
    tags: Vec<String>,
    heads: Vec<(usize, usize)>,
    deprels: Vec<String>,
}

impl Pending {
    fn finish(&mut self) -> Result<Option<(TaggedSentence, DepGraph)>, EvalError> {
        if self.tokens.is_empty() {
            return Ok(None);
        }
        let n = self.tokens.len();
        for (i, &(head, line)) in self.heads.iter().enumerate() {
            if head > n {
                return Err(parse_err(line, format!("head {head} outside sentence of {n} tokens")));
            }
            if head == i + 1 {
                return Err(parse_err(line, format!("token {} is its own head", i + 1)));
            }
        }
        let p = std::mem::take(self);
        Ok(Some((
            TaggedSentence {
                tokens: p.tokens,
                tags: p.tags,
            },
            DepGraph {
                heads: p.heads.into_iter().map(|(h, _)| h).collect(),
                deprels: p.deprels,
            },
        )))
    }
}

/// Reads 10-column CoNLL-U. Comment lines, multiword token ranges and
/// empty nodes are skipped; each sentence yields its forms with UPOS tags
/// and its dependency graph.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<(TaggedSentence, DepGraph)>, EvalError> {
    let mut out = Vec::new();
    let mut cur = Pending::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            out.extend(cur.finish()?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(parse_err(lineno, format!("expected 10 columns, found {}", cols.len())));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid token id {:?}", cols[0])))?;
        if id != cur.tokens.len() + 1 {
            return Err(parse_err(
                lineno,
                format!("expected token id {}, found {id}", cur.tokens.len() + 1),
            ));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| parse_err(lineno, format!("non-integer head {:?}", cols[6])))?;
        cur.tokens.push(cols[1].to_string());
        cur.tags.push(cols[3].to_string());
        cur.heads.push((head, lineno));
        cur.deprels.push(cols[7].to_string());
    }
    out.extend(cur.finish()?);
    Ok(out)
}

pub fn read_conllu(path: &Path) -> Result<Vec<(TaggedSentence, DepGraph)>, EvalError> {
    parse_conllu(BufReader::new(File::open(path)?))
}

/// Reads whitespace-separated CoNLL-style files: the token is the first
/// column and the tag the last, sentences are separated by blank lines and
/// `-DOCSTART-` lines are ignored.
pub fn parse_conll_tags<R: BufRead>(reader: R) -> Result<Vec<TaggedSentence>, EvalError> {
    let mut out = Vec::new();
    let mut cur = TaggedSentence::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if cols[0] == "-DOCSTART-" {
            continue;
        }
        if cols.len() < 2 {
            return Err(parse_err(i + 1, "expected at least 2 columns"));
        }
        cur.tokens.push(cols[0].to_string());
        cur.tags.push(cols[cols.len() - 1].to_string());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn read_conll_tags(path: &Path) -> Result<Vec<TaggedSentence>, EvalError> {
    parse_conll_tags(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# sent_id = 1\n# text = Kissa nukkuu.\n\
1\tKissa\tkissa\tNOUN\t_\t_\t2\tnsubj\t_\t_\n\
2\tnukkuu\tnukkua\tVERB\t_\t_\t0\troot\t_\tSpaceAfter=No\n\
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n";

    #[test]
    fn reads_sentence() {
        let parsed = parse_conllu(SAMPLE.as_bytes()).unwrap();
        assert_eq!(parsed.len(), 1);
        let (s, g) = &parsed[0];
        assert_eq!(s.tokens, ["Kissa", "nukkuu", "."]);
        assert_eq!(s.tags, ["NOUN", "VERB", "PUNCT"]);
        assert_eq!(g.heads, [2, 0, 2]);
        assert_eq!(g.deprels, ["nsubj", "root", "punct"]);
    }

    #[test]
    fn skips_ranges_and_empty_nodes() {
        let text = "1-2\tettei\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tettä\tettä\tSCONJ\t_\t_\t2\tmark\t_\t_\n\
2\tei\tei\tAUX\t_\t_\t0\troot\t_\t_\n\
2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n";
        let parsed = parse_conllu(text.as_bytes()).unwrap();
        assert_eq!(parsed[0].0.tokens, ["että", "ei"]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let nine = "1\ta\ta\tX\t_\t_\t0\troot\t_\n";
        let err = parse_conllu(nine.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "line 1: expected 10 columns, found 9");
        let bad_head = "# c\n1\ta\ta\tX\t_\t_\tx\troot\t_\t_\n";
        assert!(matches!(parse_conllu(bad_head.as_bytes()), Err(EvalError::Parse { line: 2, .. })));
        let self_head = "1\ta\ta\tX\t_\t_\t1\troot\t_\t_\n";
        assert!(parse_conllu(self_head.as_bytes()).is_err());
        let out_of_range = "1\ta\ta\tX\t_\t_\t5\troot\t_\t_\n";
        assert!(parse_conllu(out_of_range.as_bytes()).is_err());
    }

    #[test]
    fn two_column_reader() {
        let text = "-DOCSTART- -X- O O\n\nHelsinki B-LOC\non O\n\nMatti\tB-PER\n";
        let s = parse_conll_tags(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].tags, ["B-LOC", "O"]);
        assert_eq!(s[1].tokens, ["Matti"]);
        assert!(parse_conll_tags("lonely\n".as_bytes()).is_err());
    }
}
