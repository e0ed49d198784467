//! Questions, answer clusters, prediction sets and the JSON-lines files
//! that carry them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::normalize;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate question id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: question {id:?}: {reason}")]
    Invalid {
        line: usize,
        id: String,
        reason: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Scraped,
    Crowdsourced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerCluster {
    #[serde(rename = "id")]
    pub cluster_id: String,
    pub count: u64,
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionRecord {
    pub id: String,
    pub question_original: String,
    pub question_normalized: String,
    pub clusters: Vec<AnswerCluster>,
    pub invalid_answers: Vec<String>,
    pub source: Source,
}

/// Lowercase, collapse whitespace, strip one trailing `.`, `?` or `!`.
pub fn normalize_question(original: &str) -> String {
    let collapsed = original.split_whitespace().collect::<Vec<_>>().join(" ");
    let lower = collapsed.to_lowercase();
    let stripped = lower
        .strip_suffix(['.', '?', '!'])
        .unwrap_or(&lower);
    stripped.trim_end().to_string()
}

impl QuestionRecord {
    /// Builds a record, deriving the normalized question text, and checks
    /// every record invariant.
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        source: Source,
        clusters: Vec<AnswerCluster>,
        invalid_answers: Vec<String>,
    ) -> Result<Self, String> {
        let question_original = question.into();
        let record = Self {
            id: id.into(),
            question_normalized: normalize_question(&question_original),
            question_original,
            clusters,
            invalid_answers,
            source,
        };
        record.check()?;
        Ok(record)
    }

    fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty question id".into());
        }
        if self.clusters.is_empty() {
            return Err("no answer clusters".into());
        }
        let mut seen = HashSet::new();
        for c in &self.clusters {
            if !seen.insert(c.cluster_id.as_str()) {
                return Err(format!("duplicate cluster id {:?}", c.cluster_id));
            }
            if c.count == 0 {
                return Err(format!("cluster {:?} has count 0", c.cluster_id));
            }
            if c.answers.is_empty() {
                return Err(format!("cluster {:?} has no answers", c.cluster_id));
            }
            if let Some(a) = c.answers.iter().find(|a| normalize(a).is_empty()) {
                return Err(format!(
                    "cluster {:?} has an answer that is empty after normalization: {a:?}",
                    c.cluster_id
                ));
            }
            match self.source {
                Source::Crowdsourced if c.count != c.answers.len() as u64 => {
                    return Err(format!(
                        "crowdsourced cluster {:?} has count {} but {} answers",
                        c.cluster_id,
                        c.count,
                        c.answers.len()
                    ));
                }
                Source::Scraped if c.count < c.answers.len() as u64 => {
                    return Err(format!(
                        "cluster {:?} has count {} below its {} answers",
                        c.cluster_id,
                        c.count,
                        c.answers.len()
                    ));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn total_count(&self) -> u64 {
        self.clusters.iter().map(|c| c.count).sum()
    }

    /// Cluster counts, largest first.
    pub fn sorted_counts(&self) -> Vec<u64> {
        let mut counts: Vec<u64> = self.clusters.iter().map(|c| c.count).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        counts
    }
}

#[derive(Serialize, Deserialize)]
struct QuestionText {
    original: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetLine {
    id: String,
    question: QuestionText,
    source: Source,
    clusters: Vec<AnswerCluster>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    invalid: Vec<String>,
}

fn data_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()))
}

/// Reads one question record per line, in file order.
pub fn parse_dataset<R: BufRead>(reader: R) -> Result<Vec<QuestionRecord>, DatasetError> {
    let mut records = Vec::new();
    let mut ids = HashSet::new();
    for (line, text) in data_lines(reader) {
        let text = text?;
        let raw: DatasetLine = serde_json::from_str(&text).map_err(|e| DatasetError::Malformed {
            line,
            message: e.to_string(),
        })?;
        if !ids.insert(raw.id.clone()) {
            return Err(DatasetError::DuplicateId { line, id: raw.id });
        }
        let id = raw.id.clone();
        let record = QuestionRecord::new(
            raw.id,
            raw.question.original,
            raw.source,
            raw.clusters,
            raw.invalid,
        )
        .map_err(|reason| DatasetError::Invalid { line, id, reason })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the canonical line format read by [`parse_dataset`].
pub fn write_dataset<W: Write>(records: &[QuestionRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        let line = DatasetLine {
            id: r.id.clone(),
            question: QuestionText {
                original: r.question_original.clone(),
            },
            source: r.source,
            clusters: r.clusters.clone(),
            invalid: r.invalid_answers.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Ranked answer lists keyed by question id. Rank 1 comes first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    pub entries: BTreeMap<String, Vec<String>>,
}

impl PredictionSet {
    pub fn get(&self, id: &str) -> Option<&[String]> {
        self.entries.get(id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionLine {
    id: String,
    ranked_answers: Vec<String>,
}

pub fn parse_predictions<R: BufRead>(reader: R) -> Result<PredictionSet, DatasetError> {
    let mut set = PredictionSet::default();
    for (line, text) in data_lines(reader) {
        let text = text?;
        let raw: PredictionLine =
            serde_json::from_str(&text).map_err(|e| DatasetError::Malformed {
                line,
                message: e.to_string(),
            })?;
        if raw.id.is_empty() {
            return Err(DatasetError::Malformed {
                line,
                message: "empty question id".into(),
            });
        }
        if let Some(a) = raw.ranked_answers.iter().find(|a| normalize(a).is_empty()) {
            return Err(DatasetError::Invalid {
                line,
                id: raw.id,
                reason: format!("answer {a:?} is empty after normalization"),
            });
        }
        if set.entries.contains_key(&raw.id) {
            return Err(DatasetError::DuplicateId { line, id: raw.id });
        }
        set.entries.insert(raw.id, raw.ranked_answers);
    }
    Ok(set)
}

pub fn write_predictions<W: Write>(set: &PredictionSet, mut out: W) -> std::io::Result<()> {
    for (id, answers) in &set.entries {
        let line = PredictionLine {
            id: id.clone(),
            ranked_answers: answers.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub const TOP_CLUSTERS: usize = 8;
pub const REQUIRED_COVERAGE: u64 = 85;
pub const SURVEY_SIZE: u64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub id: String,
    pub pass: bool,
    /// Summed counts of the eight largest clusters.
    pub top8_coverage: u64,
    /// Cluster counts plus invalid answers.
    pub total_collected: u64,
    pub reasons: Vec<String>,
}

/// Checks that a crowdsourced question's eight largest clusters cover at
/// least 85 of its 100 survey responses.
///
/// When fewer than 100 responses were collected the rule is read as "at most
/// 15 responses fall outside the top eight clusters", which keeps the verdict
/// monotone in the cluster counts.
pub fn validate_question(record: &QuestionRecord) -> Verdict {
    let top8: u64 = record.sorted_counts().iter().take(TOP_CLUSTERS).sum();
    let total = record.total_count() + record.invalid_answers.len() as u64;
    let mut reasons = Vec::new();
    if record.source == Source::Crowdsourced {
        let shortfall = SURVEY_SIZE.saturating_sub(total);
        if top8 + shortfall < REQUIRED_COVERAGE {
            reasons.push(format!(
                "top {TOP_CLUSTERS} clusters cover {top8} of {total} responses (need {REQUIRED_COVERAGE} of {SURVEY_SIZE})"
            ));
        }
    }
    Verdict {
        id: record.id.clone(),
        pass: reasons.is_empty(),
        top8_coverage: top8,
        total_collected: total,
        reasons,
    }
}

/// Groups sampled answers by normalized form and ranks groups by frequency,
/// ties broken by first occurrence. Each group is represented by its first
/// surface form.
pub fn rank_sampled_answers<S: AsRef<str>>(samples: &[S], cap: usize) -> Vec<String> {
    let mut groups: Vec<(String, usize)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for s in samples {
        let raw = s.as_ref();
        let key = normalize(raw);
        if key.is_empty() {
            continue;
        }
        match index.get(&key) {
            Some(&i) => groups[i].1 += 1,
            None => {
                index.insert(key, groups.len());
                groups.push((raw.trim().to_string(), 1));
            }
        }
    }
    // stable sort keeps first-occurrence order among equal counts
    groups.sort_by_key(|g| std::cmp::Reverse(g.1));
    groups.into_iter().take(cap).map(|(s, _)| s).collect()
}
