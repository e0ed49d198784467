//! Scoring of ranked free-text answer lists against weighted clusters of
//! reference answers.
//!
//! Each answer is matched to clusters by one of three channels (exact string,
//! WordNet synonyms, embedding classifiers), answers and clusters are paired
//! by an optimal one-to-one assignment over cluster-size rewards, and the
//! result is normalized by the best reachable score under the same budget.

pub mod agreement;
pub mod analysis;
pub mod assignment;
pub mod cli;
pub mod lexicon;
pub mod metrics;
pub mod model;
pub mod similarity;
pub mod text;

pub use assignment::{optimal_assignment, Assignment, RewardMatrix};
pub use lexicon::{Lexicon, LexiconOptions};
pub use metrics::{evaluate, EvalConfig, EvalReport, Metric, QuestionScore};
pub use model::{AnswerCluster, PredictionSet, QuestionRecord, Source};
pub use similarity::{Channel, EmbeddingStore, SimilarityKind};
