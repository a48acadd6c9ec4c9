use std::fmt;

use serde::{Deserialize, Serialize};

/// One entity tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IobTag {
    Outside,
    Begin(String),
    Inside(String),
}

impl IobTag {
    /// Parses `O`, `B-T` or `I-T`; anything else is `None`.
    pub fn parse(tag: &str) -> Option<IobTag> {
        if tag == "O" {
            return Some(IobTag::Outside);
        }
        let (prefix, kind) = tag.split_once('-')?;
        if kind.is_empty() {
            return None;
        }
        match prefix {
            "B" => Some(IobTag::Begin(kind.to_string())),
            "I" => Some(IobTag::Inside(kind.to_string())),
            _ => None,
        }
    }

    pub fn kind(&self) -> Option<&str> {
        match self {
            IobTag::Outside => None,
            IobTag::Begin(t) | IobTag::Inside(t) => Some(t),
        }
    }
}

impl fmt::Display for IobTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IobTag::Outside => f.write_str("O"),
            IobTag::Begin(t) => write!(f, "B-{t}"),
            IobTag::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

/// An entity span with an inclusive end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    #[serde(rename = "type")]
    pub kind: String,
}

impl Mention {
    pub fn new(start: usize, end: usize, kind: impl Into<String>) -> Self {
        Mention {
            start,
            end,
            kind: kind.into(),
        }
    }
}

/// Maximal mentions with the lenient reading of the conlleval script: `B-T`
/// always opens a mention, `I-T` extends an open mention of type `T` and
/// otherwise opens a new one. Tags that do not parse count as `O`.
pub fn extract_mentions<S: AsRef<str>>(tags: &[S]) -> Vec<Mention> {
    let mut out = Vec::new();
    let mut open: Option<Mention> = None;
    for (i, tag) in tags.iter().enumerate() {
        let tag = IobTag::parse(tag.as_ref()).unwrap_or(IobTag::Outside);
        let extends = matches!((&tag, &open), (IobTag::Inside(t), Some(m)) if *t == m.kind);
        if extends {
            if let Some(m) = open.as_mut() {
                m.end = i;
            }
            continue;
        }
        out.extend(open.take());
        if let Some(kind) = tag.kind() {
            open = Some(Mention::new(i, i, kind));
        }
    }
    out.extend(open);
    out
}

/// Which IOB encoding a tag set appears to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IobScheme {
    /// Some mention starts with `I-`.
    Iob1,
    /// Every mention starts with `B-`.
    Iob2,
    /// No mentions to judge from.
    Unknown,
}

impl fmt::Display for IobScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IobScheme::Iob1 => "IOB1",
            IobScheme::Iob2 => "IOB2",
            IobScheme::Unknown => "unknown",
        })
    }
}

pub fn detect_scheme<'a, I, S>(sentences: I) -> IobScheme
where
    I: IntoIterator<Item = &'a [S]>,
    S: AsRef<str> + 'a,
{
    let mut seen = false;
    for tags in sentences {
        for m in extract_mentions(tags) {
            seen = true;
            if tags[m.start].as_ref().starts_with("I-") {
                return IobScheme::Iob1;
            }
        }
    }
    if seen {
        IobScheme::Iob2
    } else {
        IobScheme::Unknown
    }
}
