//! Knowledge-base keyword coverage of answer clusters, and rewriting of
//! survey questions into completion prompts.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;

use serde::Serialize;
use thiserror::Error;

use crate::model::{AnswerCluster, QuestionRecord};
use crate::text::tokenize_content;

#[derive(Debug, Error)]
pub enum TripleError {
    #[error("line {line}: expected head<TAB>relation<TAB>tail, found {fields} field(s)")]
    Malformed { line: usize, fields: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

/// Keyword sets of a phrase: its content tokens.
pub fn keywords(phrase: &str) -> BTreeSet<String> {
    tokenize_content(phrase).into_tokens().into_iter().collect()
}

#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    head_keywords: Vec<BTreeSet<String>>,
    tail_keywords: Vec<BTreeSet<String>>,
    head_index: HashMap<String, Vec<usize>>,
    tail_index: HashMap<String, Vec<usize>>,
}

impl TripleStore {
    pub fn new(triples: Vec<Triple>) -> Self {
        let mut store = TripleStore::default();
        for t in triples {
            store.push(t);
        }
        store
    }

    fn push(&mut self, triple: Triple) {
        let i = self.triples.len();
        let heads = keywords(&triple.head);
        let tails = keywords(&triple.tail);
        for k in &heads {
            self.head_index.entry(k.clone()).or_default().push(i);
        }
        for k in &tails {
            self.tail_index.entry(k.clone()).or_default().push(i);
        }
        self.head_keywords.push(heads);
        self.tail_keywords.push(tails);
        self.triples.push(triple);
    }

    /// Reads `head TAB relation TAB tail` lines. Blank lines are skipped.
    pub fn load<R: BufRead>(reader: R) -> Result<Self, TripleError> {
        let mut store = TripleStore::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(TripleError::Malformed {
                    line: i + 1,
                    fields: fields.len(),
                });
            }
            store.push(Triple {
                head: fields[0].trim().to_string(),
                relation: fields[1].trim().to_string(),
                tail: fields[2].trim().to_string(),
            });
        }
        Ok(store)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn head_keywords(&self, i: usize) -> &BTreeSet<String> {
        &self.head_keywords[i]
    }

    pub fn tail_keywords(&self, i: usize) -> &BTreeSet<String> {
        &self.tail_keywords[i]
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Some triple has a `from` keyword in one end and a `to` keyword in the
    /// other, in either direction.
    pub fn links(&self, from: &BTreeSet<String>, to: &BTreeSet<String>) -> bool {
        let hit = |index: &HashMap<String, Vec<usize>>, other: &[BTreeSet<String>], probe: &BTreeSet<String>, want: &BTreeSet<String>| {
            probe.iter().any(|k| {
                index
                    .get(k)
                    .is_some_and(|ids| ids.iter().any(|&t| !other[t].is_disjoint(want)))
            })
        };
        hit(&self.head_index, &self.tail_keywords, from, to)
            || hit(&self.head_index, &self.tail_keywords, to, from)
    }
}

/// Whether a question keyword and a cluster keyword co-occur at opposite
/// ends of some triple. Cluster keywords pool all member strings.
pub fn cluster_covered(question: &str, cluster: &AnswerCluster, store: &TripleStore) -> bool {
    let q = keywords(question);
    let c: BTreeSet<String> = cluster.answers.iter().flat_map(|a| keywords(a)).collect();
    store.links(&q, &c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionCoverage {
    pub id: String,
    pub covered: usize,
    pub clusters: usize,
    pub fraction: f64,
    pub covered_clusters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub covered: usize,
    pub clusters: usize,
    pub overall: f64,
    pub questions: Vec<QuestionCoverage>,
}

pub fn coverage_report(dataset: &[QuestionRecord], store: &TripleStore) -> CoverageReport {
    let mut questions = Vec::new();
    let (mut covered, mut total) = (0, 0);
    for q in dataset {
        let covered_clusters: Vec<String> = q
            .clusters
            .iter()
            .filter(|c| cluster_covered(&q.question_original, c, store))
            .map(|c| c.cluster_id.clone())
            .collect();
        covered += covered_clusters.len();
        total += q.clusters.len();
        questions.push(QuestionCoverage {
            id: q.id.clone(),
            covered: covered_clusters.len(),
            clusters: q.clusters.len(),
            fraction: covered_clusters.len() as f64 / q.clusters.len() as f64,
            covered_clusters,
        });
    }
    CoverageReport {
        covered,
        clusters: total,
        overall: if total == 0 { 0.0 } else { covered as f64 / total as f64 },
        questions,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformRule {
    NameSomething,
    TellMeSomething,
    NameA,
    HowCanYouTell,
    GiveMeA,
    /// Input was already a completion prompt.
    AlreadyPrompt,
    /// No rule applied; the fallback form was produced.
    Miss,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Transformed {
    pub prompt: String,
    pub rule: TransformRule,
}

// prefix words (matched case-insensitively as whole tokens), output lead-in
const RULES: &[(&[&str], &str, TransformRule)] = &[
    (&["name", "something"], "One thing", TransformRule::NameSomething),
    (&["tell", "me", "something"], "One thing", TransformRule::TellMeSomething),
    (&["name", "a"], "One", TransformRule::NameA),
    (&["name", "an"], "One", TransformRule::NameA),
    (&["how", "can", "you", "tell"], "One way to tell", TransformRule::HowCanYouTell),
    (&["give", "me", "a"], "One", TransformRule::GiveMeA),
    (&["give", "me", "an"], "One", TransformRule::GiveMeA),
];

fn strip_prefix_words<'a>(text: &'a str, words: &[&str]) -> Option<&'a str> {
    let mut rest = text;
    for w in words {
        rest = rest.trim_start();
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if !rest[..end].eq_ignore_ascii_case(w) {
            return None;
        }
        rest = &rest[end..];
    }
    Some(rest.trim_start())
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Rewrites a question into a sentence prefix for a left-to-right language
/// model, e.g. "Name a vegetable." → "One vegetable is".
pub fn transform_question(question: &str) -> Transformed {
    let trimmed = question.trim();
    let body = trimmed.trim_end_matches(['.', '?', '!']).trim_end();
    for (words, lead, rule) in RULES {
        if let Some(rest) = strip_prefix_words(body, words) {
            let prompt = if rest.is_empty() {
                format!("{lead} is")
            } else {
                format!("{lead} {rest} is")
            };
            return Transformed { prompt, rule: *rule };
        }
    }
    if body.len() == trimmed.len() && (body.ends_with(" is") || body.eq_ignore_ascii_case("is")) {
        return Transformed {
            prompt: capitalize(body),
            rule: TransformRule::AlreadyPrompt,
        };
    }
    Transformed {
        prompt: format!("{} is", capitalize(body)),
        rule: TransformRule::Miss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;
    use proptest::prelude::*;

    fn radio_store() -> TripleStore {
        TripleStore::load("listen to radio\tHasSubevent\thear weather report\n".as_bytes()).unwrap()
    }

    fn cluster(id: &str, answers: &[&str]) -> AnswerCluster {
        AnswerCluster {
            cluster_id: id.into(),
            count: answers.len() as u64,
            answers: answers.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn loads_triples() {
        let s = radio_store();
        assert_eq!(s.len(), 1);
        assert_eq!(s.head_keywords(0), &BTreeSet::from(["listen".to_string(), "radio".to_string()]));
        assert_eq!(s.tail_keywords(0).len(), 3);
        assert!(TripleStore::load("".as_bytes()).unwrap().is_empty());
        assert!(matches!(
            TripleStore::load("a\tb\n".as_bytes()),
            Err(TripleError::Malformed { line: 1, fields: 2 })
        ));
    }

    #[test]
    fn coverage_examples() {
        let s = radio_store();
        let q = "Name something you might hear on a morning radio show.";
        assert!(cluster_covered(q, &cluster("w", &["weather report"]), &s));
        assert!(!cluster_covered(q, &cluster("m", &["music"]), &s));
        assert!(!cluster_covered(q, &cluster("w", &["weather report"]), &TripleStore::default()));
        assert!(!cluster_covered("Name a fruit.", &cluster("w", &["weather"]), &s));
        // reversed direction: answer keyword in the head, question keyword in the tail
        assert!(cluster_covered("What do you hear?", &cluster("r", &["radio"]), &s));
    }

    #[test]
    fn coverage_fraction() {
        let q = QuestionRecord::new(
            "q",
            "Name something you might hear on a morning radio show.",
            Source::Crowdsourced,
            vec![cluster("w", &["weather report"]), cluster("m", &["music"])],
            vec![],
        )
        .unwrap();
        let r = coverage_report(std::slice::from_ref(&q), &radio_store());
        assert_eq!(r.overall, 0.5);
        assert_eq!(r.questions[0].covered_clusters, ["w"]);
        assert_eq!(coverage_report(&[q], &TripleStore::default()).overall, 0.0);
    }

    #[test]
    fn transform_examples() {
        let t = transform_question("Name something people do when they wake up.");
        assert_eq!(t.prompt, "One thing people do when they wake up is");
        assert_eq!(transform_question("Name a vegetable.").prompt, "One vegetable is");
        assert_eq!(transform_question("How can you tell it rained?").prompt, "One way to tell it rained is");
        assert_eq!(transform_question("tell me something you pack").prompt, "One thing you pack is");
        assert_eq!(transform_question("Give me an excuse for being late.").prompt, "One excuse for being late is");
        assert_eq!(transform_question("NAME AN animal!").prompt, "One animal is");
    }

    #[test]
    fn name_another_is_not_name_a() {
        let t = transform_question("Name another word for happy.");
        assert_eq!(t.rule, TransformRule::Miss);
        assert_eq!(t.prompt, "Name another word for happy is");
        let t = transform_question("what do people eat?");
        assert_eq!((t.prompt.as_str(), t.rule), ("What do people eat is", TransformRule::Miss));
    }

    proptest! {
        #[test]
        fn idempotent_on_outputs(q in "(Name something|Name a|Name an|Tell me something|How can you tell|Give me a|Why do|What) [a-z]{1,8}( [a-z]{1,8}){0,4}[.?]?") {
            let once = transform_question(&q);
            let twice = transform_question(&once.prompt);
            prop_assert_eq!(&twice.prompt, &once.prompt);
            prop_assert!(once.prompt.chars().next().unwrap().is_uppercase());
        }

        #[test]
        fn adding_triples_keeps_coverage(extra in proptest::collection::vec(("[a-z]{1,6}( [a-z]{1,6})?", "[a-z]{1,6}( [a-z]{1,6})?"), 0..6)) {
            let q = "Name something you might hear on a morning radio show.";
            let c = cluster("w", &["weather report"]);
            let mut triples = radio_store().triples().to_vec();
            for (h, t) in extra {
                triples.push(Triple { head: h, relation: "RelatedTo".into(), tail: t });
            }
            prop_assert!(cluster_covered(q, &c, &TripleStore::new(triples)));
        }
    }
}
