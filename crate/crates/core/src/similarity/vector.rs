//! Embedding-based cluster membership.
//!
//! Each cluster gets a one-vs-all scorer: Gaussian-process regression with an
//! RBF kernel over the question's reference answer vectors, labels 1 for the
//! cluster's members and 0 elsewhere. Every scorer of a question shares the
//! same training inputs, so the kernel system is factored once.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;
use thiserror::Error;

use crate::model::QuestionRecord;
use crate::text::normalize;

pub const DEFAULT_NOISE_VARIANCE: f64 = 0.01;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const JITTER_LADDER: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("embedding file has no dimension header")]
    MissingHeader,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("question {question:?}: no embedding for answer {answer:?}")]
    MissingVector { question: String, answer: String },
    #[error("question {0:?}: kernel system is not positive definite after maximum jitter")]
    NotPositiveDefinite(String),
    #[error("question {0:?}: no reference vectors")]
    NoReferences(String),
}

/// Vectors keyed by `(question id, answer string)`.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    dimension: usize,
    vectors: HashMap<(String, String), Vec<f64>>,
    normalized: HashMap<(String, String), (String, String)>,
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            ..Self::default()
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, question: &str, answer: &str, vector: Vec<f64>) -> Result<(), String> {
        if vector.len() != self.dimension {
            return Err(format!(
                "vector has {} components, expected {}",
                vector.len(),
                self.dimension
            ));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err("non-finite component".into());
        }
        let key = (question.to_string(), answer.to_string());
        if let Some(existing) = self.vectors.get(&key) {
            if existing != &vector {
                return Err(format!("conflicting vectors for answer {answer:?}"));
            }
            return Ok(());
        }
        self.normalized
            .entry((question.to_string(), normalize(answer)))
            .or_insert_with(|| key.clone());
        self.vectors.insert(key, vector);
        Ok(())
    }

    /// Exact string lookup first, then by normalized answer.
    pub fn get(&self, question: &str, answer: &str) -> Option<&[f64]> {
        let key = (question.to_string(), answer.to_string());
        if let Some(v) = self.vectors.get(&key) {
            return Some(v);
        }
        let key = self.normalized.get(&(question.to_string(), normalize(answer)))?;
        self.vectors.get(key).map(Vec::as_slice)
    }

    /// Reads the embedding file: `#` comment lines, a dimension header, then
    /// `question id TAB answer TAB floats` records.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, EmbeddingError> {
        let mut store: Option<EmbeddingStore> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let malformed = |message: String| EmbeddingError::Malformed {
                line: line_no,
                message,
            };
            let Some(store) = store.as_mut() else {
                let dim: usize = line
                    .trim()
                    .parse()
                    .map_err(|_| malformed(format!("expected dimension header, got {line:?}")))?;
                if dim == 0 {
                    return Err(malformed("dimension must be positive".into()));
                }
                store = Some(EmbeddingStore::new(dim));
                continue;
            };
            let mut fields = line.splitn(3, '\t');
            let (Some(qid), Some(answer), Some(floats)) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(malformed("expected three tab-separated fields".into()));
            };
            let vector = floats
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| malformed(format!("bad float: {e}")))?;
            store.insert(qid, answer, vector).map_err(malformed)?;
        }
        store.ok_or(EmbeddingError::MissingHeader)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpOptions {
    /// `None` selects the median pairwise distance of the reference vectors.
    pub lengthscale: Option<f64>,
    pub noise_variance: f64,
    pub threshold: f64,
}

impl Default for GpOptions {
    fn default() -> Self {
        Self {
            lengthscale: None,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf(a: &[f64], b: &[f64], lengthscale: f64) -> f64 {
    (-squared_distance(a, b) / (2.0 * lengthscale * lengthscale)).exp()
}

/// Median of all pairwise Euclidean distances; 1.0 when undefined or zero.
pub fn median_lengthscale(points: &[Vec<f64>]) -> f64 {
    let mut d: Vec<f64> = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            d.push(squared_distance(&points[i], &points[j]).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len().is_multiple_of(2) {
        (d[mid - 1] + d[mid]) / 2.0
    } else {
        d[mid]
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Factored kernel system shared by all scorers of one question.
#[derive(Debug)]
pub struct KernelSystem {
    inputs: Vec<Vec<f64>>,
    lengthscale: f64,
    noise_variance: f64,
    jitter: f64,
    factor: Cholesky<f64, Dyn>,
}

impl KernelSystem {
    pub fn fit(
        inputs: Vec<Vec<f64>>,
        lengthscale: f64,
        noise_variance: f64,
    ) -> Option<KernelSystem> {
        assert!(lengthscale > 0.0 && noise_variance > 0.0);
        let n = inputs.len();
        let kernel = DMatrix::from_fn(n, n, |i, j| {
            let k = rbf(&inputs[i], &inputs[j], lengthscale);
            if i == j {
                k + noise_variance
            } else {
                k
            }
        });
        let mut jitter = 0.0;
        let mut ladder = JITTER_LADDER.iter();
        loop {
            let mut k = kernel.clone();
            for i in 0..n {
                k[(i, i)] += jitter;
            }
            if let Some(factor) = Cholesky::new(k) {
                return Some(KernelSystem {
                    inputs,
                    lengthscale,
                    noise_variance,
                    jitter,
                    factor,
                });
            }
            jitter = *ladder.next()?;
        }
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn weights(&self, labels: &[f64]) -> DVector<f64> {
        self.factor.solve(&DVector::from_column_slice(labels))
    }

    fn cross_kernel(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|p| rbf(p, x, self.lengthscale)),
        )
    }
}

/// One-vs-all membership scorer for a single cluster.
#[derive(Debug, Clone)]
pub struct ClusterClassifier {
    pub cluster_id: String,
    pub labels: Vec<f64>,
    system: Arc<KernelSystem>,
    weights: DVector<f64>,
}

impl ClusterClassifier {
    /// Unclamped posterior mean at `x`.
    pub fn posterior_mean(&self, x: &[f64]) -> f64 {
        self.system.cross_kernel(x).dot(&self.weights)
    }

    /// Posterior mean clamped to [0, 1].
    pub fn score(&self, x: &[f64]) -> f64 {
        self.posterior_mean(x).clamp(0.0, 1.0)
    }

    pub fn system(&self) -> &KernelSystem {
        &self.system
    }
}

/// Fits one classifier per cluster on every reference answer of the question.
pub fn fit_cluster_classifiers(
    question: &QuestionRecord,
    store: &EmbeddingStore,
    options: &GpOptions,
) -> Result<Vec<ClusterClassifier>, VectorError> {
    let mut inputs = Vec::new();
    let mut owner = Vec::new();
    for (ci, cluster) in question.clusters.iter().enumerate() {
        for answer in &cluster.answers {
            let v = store
                .get(&question.id, answer)
                .ok_or_else(|| VectorError::MissingVector {
                    question: question.id.clone(),
                    answer: answer.clone(),
                })?;
            inputs.push(v.to_vec());
            owner.push(ci);
        }
    }
    if inputs.is_empty() {
        return Err(VectorError::NoReferences(question.id.clone()));
    }
    let lengthscale = options
        .lengthscale
        .unwrap_or_else(|| median_lengthscale(&inputs));
    let system = KernelSystem::fit(inputs, lengthscale, options.noise_variance)
        .ok_or_else(|| VectorError::NotPositiveDefinite(question.id.clone()))?;
    let system = Arc::new(system);
    Ok(question
        .clusters
        .iter()
        .enumerate()
        .map(|(ci, cluster)| {
            let labels: Vec<f64> = owner.iter().map(|&o| if o == ci { 1.0 } else { 0.0 }).collect();
            ClusterClassifier {
                cluster_id: cluster.cluster_id.clone(),
                weights: system.weights(&labels),
                labels,
                system: Arc::clone(&system),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorAssignment {
    pub cluster_index: usize,
    pub cluster_id: String,
    pub score: f64,
}

/// Best-scoring cluster for a vector, if its score reaches the threshold.
/// Exact ties prefer the larger cluster, then the earlier one.
pub fn assign_vector(
    vector: &[f64],
    question: &QuestionRecord,
    classifiers: &[ClusterClassifier],
    threshold: f64,
) -> Option<VectorAssignment> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in classifiers.iter().enumerate() {
        let s = c.score(vector);
        let better = match best {
            None => true,
            Some((bi, bs)) => {
                s > bs || (s == bs && question.clusters[i].count > question.clusters[bi].count)
            }
        };
        if better {
            best = Some((i, s));
        }
    }
    let (i, score) = best?;
    (score >= threshold).then(|| VectorAssignment {
        cluster_index: i,
        cluster_id: classifiers[i].cluster_id.clone(),
        score,
    })
}

/// Looks up the answer's vector and assigns it to a cluster.
pub fn vector_match(
    answer: &str,
    question: &QuestionRecord,
    classifiers: &[ClusterClassifier],
    store: &EmbeddingStore,
    threshold: f64,
) -> Result<Option<VectorAssignment>, VectorError> {
    let v = store
        .get(&question.id, answer)
        .ok_or_else(|| VectorError::MissingVector {
            question: question.id.clone(),
            answer: answer.to_string(),
        })?;
    Ok(assign_vector(v, question, classifiers, threshold))
}
