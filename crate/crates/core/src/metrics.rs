//! Max Answers@k and Max Incorrect@k, normalized by the best score
//! reachable under the same budget, plus dataset-level evaluation.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{optimal_assignment, RewardMatrix};
use crate::model::{PredictionSet, QuestionRecord};
use crate::text::normalize;
use crate::similarity::{Channel, GpOptions, QuestionMatcher, SimilarityKind, VectorError, WordNetOptions};

pub const DEFAULT_MAX_ANSWERS_KS: [usize; 4] = [1, 3, 5, 10];
pub const DEFAULT_MAX_INCORRECT_KS: [usize; 3] = [1, 3, 5];
pub const DEFAULT_ANSWER_LIST_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MaxAnswers,
    MaxIncorrect,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::MaxAnswers => "max_answers",
            Metric::MaxIncorrect => "max_incorrect",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Metric::MaxAnswers => "Max Answers",
            Metric::MaxIncorrect => "Max Incorrect",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{0} k list is empty")]
    EmptyKs(&'static str),
    #[error("{0} k list must hold strictly increasing positive integers")]
    BadKs(&'static str),
    #[error("answer list cap must be positive")]
    ZeroCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub similarity: SimilarityKind,
    pub max_answers_ks: Vec<usize>,
    pub max_incorrect_ks: Vec<usize>,
    pub wordnet: WordNetOptions,
    pub vector: GpOptions,
    pub answer_list_cap: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            similarity: SimilarityKind::Exact,
            max_answers_ks: DEFAULT_MAX_ANSWERS_KS.to_vec(),
            max_incorrect_ks: DEFAULT_MAX_INCORRECT_KS.to_vec(),
            wordnet: WordNetOptions::default(),
            vector: GpOptions::default(),
            answer_list_cap: DEFAULT_ANSWER_LIST_CAP,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, ks) in [
            ("max answers", &self.max_answers_ks),
            ("max incorrect", &self.max_incorrect_ks),
        ] {
            if ks.is_empty() {
                return Err(ConfigError::EmptyKs(name));
            }
            if ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ConfigError::BadKs(name));
            }
        }
        if self.answer_list_cap == 0 {
            return Err(ConfigError::ZeroCap);
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(Metric, usize)> {
        self.max_answers_ks
            .iter()
            .map(|&k| (Metric::MaxAnswers, k))
            .chain(self.max_incorrect_ks.iter().map(|&k| (Metric::MaxIncorrect, k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    /// 1-based position in the ranked list.
    pub rank: usize,
    pub answer: String,
    pub cluster_id: String,
    pub reward: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub metric: Metric,
    pub k: usize,
    pub raw_reward: u64,
    pub oracle_reward: u64,
    pub normalized: f64,
    pub matched: Vec<MatchedPair>,
}

/// Sum of the `k` largest cluster counts.
pub fn oracle_max_answers(question: &QuestionRecord, k: usize) -> u64 {
    question.sorted_counts().into_iter().take(k).sum()
}

/// Sum of every cluster count.
pub fn oracle_max_incorrect(question: &QuestionRecord) -> u64 {
    question.total_count()
}

/// Reward matrix from per-answer hard-match flags.
pub fn reward_matrix_from_flags(question: &QuestionRecord, flags: &[Vec<bool>]) -> RewardMatrix {
    let mut m = RewardMatrix::zeros(flags.len(), question.clusters.len());
    for (i, row) in flags.iter().enumerate() {
        for (j, &hit) in row.iter().enumerate() {
            if hit {
                m.set(i, j, question.clusters[j].count);
            }
        }
    }
    m
}

/// Clears the rows of answers whose normalized text already appeared
/// earlier in the list, so a repeated answer can never claim a second
/// cluster.
pub fn zero_repeated_answers<S: AsRef<str>>(matrix: &mut RewardMatrix, answers: &[S]) {
    let mut seen = HashSet::new();
    for (i, a) in answers.iter().enumerate() {
        if !seen.insert(normalize(a.as_ref())) {
            for j in 0..matrix.cols() {
                matrix.set(i, j, 0);
            }
        }
    }
}

/// Match flags for every answer; a failed lookup yields an all-false row and
/// is reported alongside.
pub fn match_flags<S: AsRef<str>>(
    answers: &[S],
    matcher: &QuestionMatcher<'_, '_>,
) -> (Vec<Vec<bool>>, Vec<VectorError>) {
    let width = matcher.question().clusters.len();
    let mut errors = Vec::new();
    let flags = answers
        .iter()
        .map(|a| {
            matcher.hard_matches(a.as_ref()).unwrap_or_else(|e| {
                errors.push(e);
                vec![false; width]
            })
        })
        .collect();
    (flags, errors)
}

pub fn build_reward_matrix<S: AsRef<str>>(
    answers: &[S],
    matcher: &QuestionMatcher<'_, '_>,
) -> (RewardMatrix, Vec<VectorError>) {
    let (flags, errors) = match_flags(answers, matcher);
    let mut matrix = reward_matrix_from_flags(matcher.question(), &flags);
    zero_repeated_answers(&mut matrix, answers);
    (matrix, errors)
}

fn score_prefix<S: AsRef<str>>(
    question: &QuestionRecord,
    answers: &[S],
    flags: &[Vec<bool>],
    metric: Metric,
    k: usize,
    oracle: u64,
) -> QuestionScore {
    let mut matrix = reward_matrix_from_flags(question, flags);
    zero_repeated_answers(&mut matrix, answers);
    let assignment = optimal_assignment(&matrix);
    let matched = assignment
        .pairs
        .iter()
        .map(|&(i, j)| MatchedPair {
            rank: i + 1,
            answer: answers[i].as_ref().to_string(),
            cluster_id: question.clusters[j].cluster_id.clone(),
            reward: matrix.get(i, j),
        })
        .collect();
    QuestionScore {
        question_id: question.id.clone(),
        metric,
        k,
        raw_reward: assignment.total_reward,
        oracle_reward: oracle,
        normalized: if oracle == 0 {
            0.0
        } else {
            assignment.total_reward as f64 / oracle as f64
        },
        matched,
    }
}

/// Scores the first `k` answers from precomputed match flags.
pub fn max_answers_from_flags<S: AsRef<str>>(
    question: &QuestionRecord,
    answers: &[S],
    flags: &[Vec<bool>],
    k: usize,
) -> QuestionScore {
    let n = answers.len().min(k);
    score_prefix(
        question,
        &answers[..n],
        &flags[..n],
        Metric::MaxAnswers,
        k,
        oracle_max_answers(question, k),
    )
}

/// Length of the ranked prefix ending at the `k`-th unmatched answer.
pub fn incorrect_budget_prefix(flags: &[Vec<bool>], k: usize) -> usize {
    let mut misses = 0;
    for (i, row) in flags.iter().enumerate() {
        if !row.iter().any(|&h| h) {
            misses += 1;
            if misses == k {
                return i + 1;
            }
        }
    }
    flags.len()
}

pub fn max_incorrect_from_flags<S: AsRef<str>>(
    question: &QuestionRecord,
    answers: &[S],
    flags: &[Vec<bool>],
    k: usize,
) -> QuestionScore {
    let n = incorrect_budget_prefix(flags, k);
    score_prefix(
        question,
        &answers[..n],
        &flags[..n],
        Metric::MaxIncorrect,
        k,
        oracle_max_incorrect(question),
    )
}

pub fn max_answers_at_k<S: AsRef<str>>(
    answers: &[S],
    matcher: &QuestionMatcher<'_, '_>,
    k: usize,
) -> QuestionScore {
    let answers = &answers[..answers.len().min(k)];
    let (flags, _) = match_flags(answers, matcher);
    max_answers_from_flags(matcher.question(), answers, &flags, k)
}

pub fn max_incorrect_at_k<S: AsRef<str>>(
    answers: &[S],
    matcher: &QuestionMatcher<'_, '_>,
    k: usize,
) -> QuestionScore {
    let (flags, _) = match_flags(answers, matcher);
    max_incorrect_from_flags(matcher.question(), answers, &flags, k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionResult {
    pub id: String,
    pub answers_scored: usize,
    pub unmatched_answers: usize,
    pub scores: Vec<QuestionScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateCell {
    pub similarity: SimilarityKind,
    pub metric: Metric,
    pub k: usize,
    /// Mean normalized score; `None` when no question was evaluated.
    pub mean: Option<f64>,
    pub questions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingEmbedding {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedQuestion {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Dataset questions with no prediction line.
    pub missing_predictions: Vec<String>,
    /// Prediction lines whose id is not in the dataset.
    pub unknown_predictions: Vec<String>,
    /// Questions whose channel resources could not be prepared.
    pub skipped_missing_resources: Vec<SkippedQuestion>,
    pub missing_embeddings: Vec<MissingEmbedding>,
    pub unmatched_answers: usize,
    /// Questions whose ranked list exceeded the answer cap.
    pub truncated_lists: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub similarity: SimilarityKind,
    pub question_count: usize,
    pub aggregate: Vec<AggregateCell>,
    pub questions: Vec<QuestionResult>,
    pub diagnostics: Diagnostics,
}

impl EvalReport {
    pub fn mean(&self, metric: Metric, k: usize) -> Option<f64> {
        self.aggregate
            .iter()
            .find(|c| c.metric == metric && c.k == k)
            .and_then(|c| c.mean)
    }

    /// Number of dataset questions that were not scored.
    pub fn skipped(&self) -> usize {
        self.diagnostics.missing_predictions.len() + self.diagnostics.skipped_missing_resources.len()
    }
}

enum Outcome {
    Scored(QuestionResult, Vec<MissingEmbedding>, bool),
    Skipped(SkippedQuestion),
}

fn evaluate_question(
    question: &QuestionRecord,
    answers: &[String],
    channel: &Channel<'_>,
    config: &EvalConfig,
) -> Outcome {
    let matcher = match channel.prepare(question) {
        Ok(m) => m,
        Err(e) => {
            return Outcome::Skipped(SkippedQuestion {
                id: question.id.clone(),
                reason: e.to_string(),
            })
        }
    };
    let truncated = answers.len() > config.answer_list_cap;
    let answers = &answers[..answers.len().min(config.answer_list_cap)];
    let (flags, errors) = match_flags(answers, &matcher);
    let missing = errors
        .into_iter()
        .filter_map(|e| match e {
            VectorError::MissingVector { question, answer } => Some(MissingEmbedding { question, answer }),
            _ => None,
        })
        .collect();
    let scores = config
        .cells()
        .into_iter()
        .map(|(metric, k)| match metric {
            Metric::MaxAnswers => max_answers_from_flags(question, answers, &flags, k),
            Metric::MaxIncorrect => max_incorrect_from_flags(question, answers, &flags, k),
        })
        .collect();
    Outcome::Scored(
        QuestionResult {
            id: question.id.clone(),
            answers_scored: answers.len(),
            unmatched_answers: flags.iter().filter(|r| !r.iter().any(|&h| h)).count(),
            scores,
        },
        missing,
        truncated,
    )
}

/// Scores every question present in both the dataset and the predictions.
///
/// Questions run on the current rayon pool; the report is ordered by
/// question id, so the thread count never changes the output.
pub fn evaluate(
    dataset: &[QuestionRecord],
    predictions: &PredictionSet,
    channel: &Channel<'_>,
    config: &EvalConfig,
) -> Result<EvalReport, ConfigError> {
    config.validate()?;
    let mut diagnostics = Diagnostics::default();
    let known: BTreeSet<&str> = dataset.iter().map(|q| q.id.as_str()).collect();
    diagnostics.unknown_predictions = predictions
        .entries
        .keys()
        .filter(|id| !known.contains(id.as_str()))
        .cloned()
        .collect();

    let mut work: Vec<(&QuestionRecord, &[String])> = Vec::new();
    for q in dataset {
        match predictions.get(&q.id) {
            Some(answers) => work.push((q, answers)),
            None => diagnostics.missing_predictions.push(q.id.clone()),
        }
    }
    work.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    diagnostics.missing_predictions.sort();

    let outcomes: Vec<Outcome> = work
        .par_iter()
        .map(|(q, answers)| evaluate_question(q, answers, channel, config))
        .collect();

    let mut questions = Vec::new();
    for outcome in outcomes {
        match outcome {
            Outcome::Scored(result, missing, truncated) => {
                diagnostics.unmatched_answers += result.unmatched_answers;
                diagnostics.missing_embeddings.extend(missing);
                if truncated {
                    diagnostics.truncated_lists.push(result.id.clone());
                }
                questions.push(result);
            }
            Outcome::Skipped(s) => diagnostics.skipped_missing_resources.push(s),
        }
    }

    let aggregate = config
        .cells()
        .into_iter()
        .enumerate()
        .map(|(cell, (metric, k))| {
            let n = questions.len();
            let sum: f64 = questions.iter().map(|q| q.scores[cell].normalized).sum();
            AggregateCell {
                similarity: channel.kind(),
                metric,
                k,
                mean: (n > 0).then(|| sum / n as f64),
                questions: n,
            }
        })
        .collect();

    Ok(EvalReport {
        similarity: channel.kind(),
        question_count: questions.len(),
        aggregate,
        questions,
        diagnostics,
    })
}

/// Percentages with one decimal: one row per (metric, k), one column per
/// report's similarity channel.
pub fn render_table(reports: &[&EvalReport]) -> String {
    let mut rows: Vec<(Metric, usize)> = Vec::new();
    for r in reports {
        for c in &r.aggregate {
            if !rows.contains(&(c.metric, c.k)) {
                rows.push((c.metric, c.k));
            }
        }
    }
    rows.sort();
    let mut out = String::new();
    let _ = write!(out, "{:<14} {:>3}", "Metric", "k");
    for r in reports {
        let _ = write!(out, " {:>8}", r.similarity.as_str());
    }
    out.push('\n');
    let mut last = None;
    for (metric, k) in rows {
        let label = if last == Some(metric) { "" } else { metric.title() };
        last = Some(metric);
        let _ = write!(out, "{label:<14} {k:>3}");
        for r in reports {
            match r.mean(metric, k) {
                Some(m) => {
                    let _ = write!(out, " {:>8.1}", m * 100.0);
                }
                None => {
                    let _ = write!(out, " {:>8}", "-");
                }
            }
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "questions evaluated: {}",
        reports.first().map_or(0, |r| r.question_count)
    );
    out
}
