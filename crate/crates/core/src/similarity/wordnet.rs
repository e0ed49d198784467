//! Synonym-aware answer scoring over WordNet synsets.
//!
//! Two strings are compared token by token after stopword removal. Tokens
//! may be regrouped into contiguous spans so that multiword lemmas such as
//! `chewing gum` can match a single-word lemma. The score of a pair of span
//! partitions is the maximum-weight matching between spans divided by the
//! larger span count; the answer score is the best value over all partition
//! pairs.

use std::collections::HashMap;

use crate::assignment::max_weight_matching;
use crate::lexicon::Lexicon;
use crate::model::AnswerCluster;
use crate::text::{normalize, tokenize_content};

use super::MatchScore;

/// Longest token sequence whose partitions are enumerated exhaustively.
pub const PARTITION_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordNetOptions {
    /// When false only the all-singleton split of each string is scored.
    pub partitions: bool,
    pub partition_cap: usize,
}

impl Default for WordNetOptions {
    fn default() -> Self {
        Self {
            partitions: true,
            partition_cap: PARTITION_CAP,
        }
    }
}

/// 1 when the strings are equal after normalization or share a synset.
pub fn wordnet_token_score(a: &str, b: &str, lex: &Lexicon) -> f64 {
    if normalize(a) == normalize(b) || lex.shares_synset(a, b) {
        1.0
    } else {
        0.0
    }
}

/// A partition as a list of half-open `(start, end)` token spans.
type Partition = Vec<(usize, usize)>;

/// All 2^(n-1) splits of `n` tokens into contiguous spans.
pub(crate) fn contiguous_partitions(n: usize) -> Vec<Partition> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let cuts = n - 1;
    (0u64..1 << cuts)
        .map(|mask| {
            let mut spans = Vec::new();
            let mut start = 0;
            for gap in 0..cuts {
                if mask & (1 << gap) != 0 {
                    spans.push((start, gap + 1));
                    start = gap + 1;
                }
            }
            spans.push((start, n));
            spans
        })
        .collect()
}

fn candidate_partitions(n: usize, options: WordNetOptions) -> Vec<Partition> {
    let singletons: Partition = (0..n).map(|i| (i, i + 1)).collect();
    if !options.partitions {
        return vec![singletons];
    }
    if n > options.partition_cap {
        return vec![vec![(0, n)], singletons];
    }
    contiguous_partitions(n)
}

pub fn wordnet_answer_score(answer: &str, reference: &str, lex: &Lexicon) -> f64 {
    wordnet_answer_score_with(answer, reference, lex, WordNetOptions::default())
}

pub fn wordnet_answer_score_with(
    answer: &str,
    reference: &str,
    lex: &Lexicon,
    options: WordNetOptions,
) -> f64 {
    let a = tokenize_content(answer).into_tokens();
    let b = tokenize_content(reference).into_tokens();
    if a.is_empty() || b.is_empty() {
        return if normalize(answer) == normalize(reference) {
            1.0
        } else {
            0.0
        };
    }

    let mut span_scores: HashMap<((usize, usize), (usize, usize)), f64> = HashMap::new();
    let mut span_score = |sa: (usize, usize), sb: (usize, usize)| -> f64 {
        *span_scores.entry((sa, sb)).or_insert_with(|| {
            wordnet_token_score(&a[sa.0..sa.1].join(" "), &b[sb.0..sb.1].join(" "), lex)
        })
    };

    let parts_a = candidate_partitions(a.len(), options);
    let parts_b = candidate_partitions(b.len(), options);
    let mut best: f64 = 0.0;
    for pa in &parts_a {
        for pb in &parts_b {
            let denom = pa.len().max(pb.len()) as f64;
            // a matching can cover at most min(|pa|, |pb|) spans
            if pa.len().min(pb.len()) as f64 / denom <= best {
                continue;
            }
            let weights: Vec<Vec<f64>> = pa
                .iter()
                .map(|&sa| pb.iter().map(|&sb| span_score(sa, sb)).collect())
                .collect();
            let (_, total) = max_weight_matching(&weights);
            best = best.max(total / denom);
            if best >= 1.0 {
                return 1.0;
            }
        }
    }
    best
}

/// Best score over the cluster's member strings, rounded at 0.5.
pub fn wordnet_match(answer: &str, cluster: &AnswerCluster, lex: &Lexicon) -> MatchScore {
    wordnet_match_with(answer, cluster, lex, WordNetOptions::default())
}

pub fn wordnet_match_with(
    answer: &str,
    cluster: &AnswerCluster,
    lex: &Lexicon,
    options: WordNetOptions,
) -> MatchScore {
    let mut best: f64 = 0.0;
    for member in &cluster.answers {
        best = best.max(wordnet_answer_score_with(answer, member, lex, options));
        if best >= 1.0 {
            break;
        }
    }
    MatchScore::rounded(best)
}
