//! Linear hinge-loss classifier trained with Pegasos-style stochastic
//! subgradient descent.
//!
//! The bias is learned as the weight of an implicit constant feature and is
//! regularized together with the other weights. Step size at update `t` is
//! `1 / (lambda * t)`, followed by projection onto the ball of radius
//! `1 / sqrt(lambda)`.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FilterError;
use crate::hash::fnv1a64;
use crate::vocab::{basic_tokenize, CasingMode};

/// Number of hash buckets for lexical features.
pub const LEXICAL_BUCKETS: u32 = 1 << 20;

/// Sparse feature vector with ids in increasing order and no duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector(Vec<(u32, f64)>);

impl SparseVector {
    /// Sums values of repeated ids.
    pub fn from_pairs<I: IntoIterator<Item = (u32, f64)>>(pairs: I) -> Self {
        let mut map: BTreeMap<u32, f64> = BTreeMap::new();
        for (id, v) in pairs {
            *map.entry(id).or_insert(0.0) += v;
        }
        SparseVector(map.into_iter().collect())
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSpace {
    /// Hashed lowercased token unigrams.
    #[default]
    Lexical,
    /// Externally supplied feature vectors.
    Delexicalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: BTreeMap<u32, f64>,
    pub bias: f64,
    pub feature_space: FeatureSpace,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    feature_space: FeatureSpace,
    bias: f64,
    weights: Vec<(u32, f64)>,
}

impl LinearModel {
    pub fn zero(feature_space: FeatureSpace) -> Self {
        LinearModel {
            weights: BTreeMap::new(),
            bias: 0.0,
            feature_space,
        }
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), FilterError> {
        let file = ModelFile {
            feature_space: self.feature_space,
            bias: self.bias,
            weights: self.weights.iter().map(|(&k, &v)| (k, v)).collect(),
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Self, FilterError> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        if !file.bias.is_finite() || file.weights.iter().any(|(_, w)| !w.is_finite()) {
            return Err(FilterError::NonFinite);
        }
        Ok(LinearModel {
            weights: file.weights.into_iter().collect(),
            bias: file.bias,
            feature_space: file.feature_space,
        })
    }
}

/// `w · x + b`; features without a weight contribute nothing.
pub fn score_linear(model: &LinearModel, features: &SparseVector) -> f64 {
    features
        .entries()
        .iter()
        .filter_map(|(id, x)| model.weights.get(id).map(|w| w * x))
        .sum::<f64>()
        + model.bias
}

/// L2-normalized counts of lowercased basic tokens hashed into
/// [`LEXICAL_BUCKETS`] buckets.
pub fn lexical_features(text: &str) -> SparseVector {
    let raw = SparseVector::from_pairs(basic_tokenize(text, CasingMode::Cased).into_iter().map(|t| {
        let bucket = (fnv1a64(t.to_lowercase().as_bytes()) % LEXICAL_BUCKETS as u64) as u32;
        (bucket, 1.0)
    }));
    let norm = raw.0.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return raw;
    }
    SparseVector(raw.0.into_iter().map(|(k, v)| (k, v / norm)).collect())
}

/// Regularized hinge loss `lambda/2 * (|w|^2 + b^2) + mean(max(0, 1 - y f(x)))`.
pub fn svm_objective(model: &LinearModel, examples: &[(i8, SparseVector)], lambda: f64) -> f64 {
    let sq = model.weights.values().map(|w| w * w).sum::<f64>() + model.bias * model.bias;
    let hinge: f64 = examples
        .iter()
        .map(|(y, x)| (1.0 - *y as f64 * score_linear(model, x)).max(0.0))
        .sum();
    0.5 * lambda * sq + hinge / examples.len().max(1) as f64
}

/// Weights stored as `scale * v` so the per-step shrink is O(1).
struct ScaledWeights {
    v: HashMap<u32, f64>,
    bias: f64,
    scale: f64,
    sq_norm: f64,
}

impl ScaledWeights {
    fn dot(&self, x: &SparseVector) -> f64 {
        let raw: f64 = x
            .entries()
            .iter()
            .filter_map(|(id, val)| self.v.get(id).map(|w| w * val))
            .sum();
        self.scale * (raw + self.bias)
    }

    fn shrink(&mut self, factor: f64) {
        if factor <= 0.0 {
            self.v.clear();
            self.bias = 0.0;
            self.scale = 1.0;
            self.sq_norm = 0.0;
            return;
        }
        self.scale *= factor;
        self.sq_norm *= factor * factor;
        if self.scale < 1e-9 {
            let s = self.scale;
            self.v.values_mut().for_each(|w| *w *= s);
            self.bias *= s;
            self.scale = 1.0;
        }
    }

    fn add(&mut self, x: &SparseVector, coef: f64) {
        let c = coef / self.scale;
        for &(id, val) in x.entries() {
            let w = self.v.entry(id).or_insert(0.0);
            let old = *w;
            *w += c * val;
            self.sq_norm += self.scale * self.scale * (*w * *w - old * old);
        }
        let old = self.bias;
        self.bias += c;
        self.sq_norm += self.scale * self.scale * (self.bias * self.bias - old * old);
    }
}

/// Trains on `(label, features)` pairs with labels in {+1, -1}.
///
/// Each epoch visits every example once, in an order shuffled by a
/// generator seeded from `seed`. Zero epochs yield the zero model.
pub fn train_linear_svm(
    examples: &[(i8, SparseVector)],
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearModel, FilterError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(FilterError::InvalidLambda(lambda));
    }
    if let Some((y, _)) = examples.iter().find(|(y, _)| *y != 1 && *y != -1) {
        return Err(FilterError::InvalidLabel(*y as i32));
    }
    if !examples.iter().any(|(y, _)| *y == 1) || !examples.iter().any(|(y, _)| *y == -1) {
        return Err(FilterError::SingleClass);
    }

    let radius = 1.0 / lambda.sqrt();
    let mut w = ScaledWeights {
        v: HashMap::new(),
        bias: 0.0,
        scale: 1.0,
        sq_norm: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut t = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let (y, x) = &examples[i];
            let y = *y as f64;
            let eta = 1.0 / (lambda * t as f64);
            let margin = y * w.dot(x);
            w.shrink(1.0 - eta * lambda);
            if margin < 1.0 {
                w.add(x, eta * y);
            }
            let norm = w.sq_norm.max(0.0).sqrt();
            if norm > radius {
                w.shrink(radius / norm);
            }
        }
    }

    let weights: BTreeMap<u32, f64> = w
        .v
        .iter()
        .map(|(&k, &v)| (k, v * w.scale))
        .filter(|(_, v)| *v != 0.0)
        .collect();
    let bias = w.bias * w.scale;
    if !bias.is_finite() || weights.values().any(|v| !v.is_finite()) {
        return Err(FilterError::NonFinite);
    }
    Ok(LinearModel {
        weights,
        bias,
        feature_space: FeatureSpace::Lexical,
    })
}
