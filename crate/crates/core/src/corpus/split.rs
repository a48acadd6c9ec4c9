use std::collections::{HashMap, HashSet};

use chrono::NaiveDateTime;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Document};

/// Per-class sizes of a balanced train/dev/test split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub dev_per_class: usize,
    pub test_per_class: usize,
    pub classes: Vec<String>,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.train_per_class == 0 || self.dev_per_class == 0 || self.test_per_class == 0 {
            return Err(CorpusError::InvalidSplitSpec(
                "per-class counts must be positive".into(),
            ));
        }
        if self.classes.is_empty() {
            return Err(CorpusError::InvalidSplitSpec("no classes".into()));
        }
        let mut seen = HashSet::new();
        for class in &self.classes {
            if !seen.insert(class) {
                return Err(CorpusError::InvalidSplitSpec(format!(
                    "duplicate class {class:?}"
                )));
            }
        }
        Ok(())
    }

    fn per_class(&self) -> usize {
        self.train_per_class + self.dev_per_class + self.test_per_class
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<Document>,
    pub dev: Vec<Document>,
    pub test: Vec<Document>,
}

/// Balanced chronological split: per class, training documents are the
/// oldest, test documents the newest and development documents lie between.
///
/// Each class's documents are ordered by (timestamp, id) and cut into three
/// contiguous zones sized in proportion to the requested counts; the
/// requested number of documents is then drawn uniformly from each zone with
/// a generator seeded by `seed` and the class position. When a class has
/// exactly the requested number of documents no sampling happens. Outputs
/// list classes in `spec.classes` order, each chronologically.
pub fn balanced_chronological_split(
    docs: &[Document],
    spec: &SplitSpec,
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    spec.validate()?;
    let class_index: HashMap<&str, usize> = spec
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let mut by_class: Vec<Vec<(NaiveDateTime, &Document)>> = vec![Vec::new(); spec.classes.len()];
    for doc in docs {
        let Some(label) = doc.label.as_deref() else {
            return Err(CorpusError::InvalidDocument {
                id: doc.id.clone(),
                message: "missing label".into(),
            });
        };
        let Some(&class) = class_index.get(label) else {
            return Err(CorpusError::InvalidDocument {
                id: doc.id.clone(),
                message: format!("label {label:?} is not a split class"),
            });
        };
        let Some(ts) = doc.parsed_timestamp()? else {
            return Err(CorpusError::InvalidDocument {
                id: doc.id.clone(),
                message: "missing timestamp".into(),
            });
        };
        by_class[class].push((ts, doc));
    }

    let total = spec.per_class();
    let mut out = DatasetSplit::default();
    for (class_pos, (class, mut members)) in spec.classes.iter().zip(by_class).enumerate() {
        if members.len() < total {
            return Err(CorpusError::InsufficientClass {
                class: class.clone(),
                needed: total,
                found: members.len(),
            });
        }
        members.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));

        let n = members.len();
        let b1 = n * spec.train_per_class / total;
        let b2 = n * (spec.train_per_class + spec.dev_per_class) / total;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class_pos as u64);
        let mut draw = |zone: &[(NaiveDateTime, &Document)], k: usize, dest: &mut Vec<Document>| {
            let mut picked: Vec<usize> = if zone.len() == k {
                (0..k).collect()
            } else {
                sample(&mut rng, zone.len(), k).into_vec()
            };
            picked.sort_unstable();
            dest.extend(picked.into_iter().map(|i| zone[i].1.clone()));
        };
        draw(&members[..b1], spec.train_per_class, &mut out.train);
        draw(&members[b1..b2], spec.dev_per_class, &mut out.dev);
        draw(&members[b2..], spec.test_per_class, &mut out.test);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;

    fn doc(id: usize, class: &str, day: usize) -> Document {
        let date = chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap()
            + chrono::Duration::days(day as i64);
        Document::new(format!("{class}{id:03}"), Source::News, "x")
            .with_label(class)
            .with_timestamp(date.format("%Y-%m-%d").to_string())
    }

    fn spec(train: usize, dev: usize, test: usize, classes: &[&str]) -> SplitSpec {
        SplitSpec {
            train_per_class: train,
            dev_per_class: dev,
            test_per_class: test,
            classes: classes.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn exact_counts_follow_time() {
        // shuffled input order
        let docs: Vec<Document> = (0..30).rev().map(|i| doc(i, "X", i)).collect();
        let split = balanced_chronological_split(&docs, &spec(10, 10, 10, &["X"]), 1).unwrap();
        let ids = |v: &[Document]| v.iter().map(|d| d.id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&split.train), (0..10).map(|i| format!("X{i:03}")).collect::<Vec<_>>());
        assert_eq!(ids(&split.test), (20..30).map(|i| format!("X{i:03}")).collect::<Vec<_>>());
    }

    #[test]
    fn insufficient_class() {
        let docs: Vec<Document> = (0..5).map(|i| doc(i, "X", i)).collect();
        let err = balanced_chronological_split(&docs, &spec(10, 1, 1, &["X"]), 0).unwrap_err();
        assert!(matches!(err, CorpusError::InsufficientClass { ref class, .. } if class == "X"));
        assert!(err.to_string().contains("insufficient class \"X\""));
    }

    #[test]
    fn balanced_and_ordered() {
        let mut docs = Vec::new();
        for i in 0..40 {
            docs.push(doc(i, "a", i * 3 % 40));
            docs.push(doc(i, "b", i));
        }
        let split = balanced_chronological_split(&docs, &spec(10, 5, 5, &["a", "b"]), 9).unwrap();
        for part in [&split.train, &split.dev, &split.test] {
            let a = part.iter().filter(|d| d.label.as_deref() == Some("a")).count();
            let b = part.len() - a;
            assert_eq!(a, b);
        }
        for class in ["a", "b"] {
            let latest = |v: &[Document]| {
                v.iter()
                    .filter(|d| d.label.as_deref() == Some(class))
                    .map(|d| d.parsed_timestamp().unwrap().unwrap())
                    .collect::<Vec<_>>()
            };
            let (tr, dv, te) = (latest(&split.train), latest(&split.dev), latest(&split.test));
            assert!(tr.iter().max() <= dv.iter().min());
            assert!(dv.iter().max() <= te.iter().min());
        }
    }

    #[test]
    fn seed_changes_sample_not_validity() {
        let docs: Vec<Document> = (0..100).map(|i| doc(i, "X", i)).collect();
        let s = spec(10, 5, 5, &["X"]);
        let a = balanced_chronological_split(&docs, &s, 1).unwrap();
        let b = balanced_chronological_split(&docs, &s, 1).unwrap();
        let c = balanced_chronological_split(&docs, &s, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_unlabeled_and_bad_specs() {
        let mut d = doc(0, "X", 0);
        d.label = None;
        assert!(balanced_chronological_split(&[d], &spec(1, 1, 1, &["X"]), 0).is_err());
        assert!(balanced_chronological_split(&[], &spec(0, 1, 1, &["X"]), 0).is_err());
        assert!(balanced_chronological_split(&[], &spec(1, 1, 1, &["X", "X"]), 0).is_err());
    }
}
