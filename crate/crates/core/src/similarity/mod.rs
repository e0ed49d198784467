//! Answer ↔ cluster matching channels: exact string match, WordNet synonym
//! match and embedding-based cluster classifiers.

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicon;
use crate::model::{AnswerCluster, QuestionRecord};
use crate::text::normalize;

pub mod vector;
pub mod wordnet;

pub use vector::{
    assign_vector, fit_cluster_classifiers, vector_match, ClusterClassifier, EmbeddingError,
    EmbeddingStore, GpOptions, VectorAssignment, VectorError,
};
pub use wordnet::{
    wordnet_answer_score, wordnet_answer_score_with, wordnet_match, wordnet_match_with,
    wordnet_token_score, WordNetOptions,
};

/// Scores at or above this value count as a hard match.
pub const ROUNDING_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchScore {
    pub value: f64,
    pub hard: bool,
}

impl MatchScore {
    pub fn rounded(value: f64) -> Self {
        Self {
            value,
            hard: value >= ROUNDING_THRESHOLD,
        }
    }
}

pub fn exact_match(answer: &str, cluster: &AnswerCluster) -> MatchScore {
    let a = normalize(answer);
    let hit = !a.is_empty() && cluster.answers.iter().any(|m| normalize(m) == a);
    MatchScore::rounded(if hit { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityKind {
    Exact,
    Wordnet,
    Vector,
}

impl SimilarityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityKind::Exact => "exact",
            SimilarityKind::Wordnet => "wordnet",
            SimilarityKind::Vector => "vector",
        }
    }
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A configured matching channel with its loaded resources.
#[derive(Debug, Clone, Copy)]
pub enum Channel<'a> {
    Exact,
    WordNet(&'a Lexicon, WordNetOptions),
    Vector(&'a EmbeddingStore, GpOptions),
}

impl<'a> Channel<'a> {
    pub fn kind(&self) -> SimilarityKind {
        match self {
            Channel::Exact => SimilarityKind::Exact,
            Channel::WordNet(..) => SimilarityKind::Wordnet,
            Channel::Vector(..) => SimilarityKind::Vector,
        }
    }

    /// Prepares per-question state; fits the cluster classifiers for the
    /// vector channel.
    pub fn prepare<'q>(
        &self,
        question: &'q QuestionRecord,
    ) -> Result<QuestionMatcher<'q, 'a>, VectorError> {
        let prepared = match *self {
            Channel::Exact => Prepared::Exact,
            Channel::WordNet(lex, opts) => Prepared::WordNet(lex, opts),
            Channel::Vector(store, opts) => Prepared::Vector {
                store,
                threshold: opts.threshold,
                classifiers: fit_cluster_classifiers(question, store, &opts)?,
            },
        };
        Ok(QuestionMatcher { question, prepared })
    }
}

#[derive(Debug)]
enum Prepared<'a> {
    Exact,
    WordNet(&'a Lexicon, WordNetOptions),
    Vector {
        store: &'a EmbeddingStore,
        threshold: f64,
        classifiers: Vec<ClusterClassifier>,
    },
}

/// Hard-match decisions of answers against one question's clusters.
#[derive(Debug)]
pub struct QuestionMatcher<'q, 'a> {
    question: &'q QuestionRecord,
    prepared: Prepared<'a>,
}

impl<'q> QuestionMatcher<'q, '_> {
    pub fn question(&self) -> &'q QuestionRecord {
        self.question
    }

    /// One flag per cluster, in cluster order.
    pub fn hard_matches(&self, answer: &str) -> Result<Vec<bool>, VectorError> {
        let clusters = &self.question.clusters;
        Ok(match &self.prepared {
            Prepared::Exact => clusters.iter().map(|c| exact_match(answer, c).hard).collect(),
            Prepared::WordNet(lex, opts) => clusters
                .iter()
                .map(|c| wordnet_match_with(answer, c, lex, *opts).hard)
                .collect(),
            Prepared::Vector {
                store,
                threshold,
                classifiers,
            } => {
                let hit = vector_match(answer, self.question, classifiers, store, *threshold)?;
                let mut row = vec![false; clusters.len()];
                if let Some(h) = hit {
                    row[h.cluster_index] = true;
                }
                row
            }
        })
    }
}
