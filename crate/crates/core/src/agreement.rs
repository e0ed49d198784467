//! BLANC agreement between two clusterings of the same answers.
//!
//! Links are unordered item pairs. A pair is a coreference link when both
//! items carry the same label and a non-coreference link otherwise. BLANC
//! averages the F-scores over the two link types; when neither clustering has
//! any link of one type, only the other type's F-score is reported.
//!
//! Link counts come from the label contingency table rather than from pair
//! enumeration.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Label carried by answers marked invalid during clustering.
pub const INVALID_LABEL: &str = "INVALID";

#[derive(Debug, Error)]
pub enum AgreementError {
    #[error("BLANC is undefined over {0} common item(s); at least 2 are needed")]
    TooFewItems(usize),
    #[error("malformed clustering file: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clustering {
    pub items: BTreeMap<String, String>,
}

impl Clustering {
    pub fn from_labels<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self {
            items: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }

    /// Reads `{"items": {"answer": "label", ...}}`.
    pub fn parse<R: Read>(reader: R) -> Result<Self, AgreementError> {
        serde_json::from_reader(reader).map_err(|e| AgreementError::Malformed(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlancResult {
    pub blanc: f64,
    pub coref_f1: f64,
    pub non_coref_f1: f64,
    pub common_items: usize,
    /// Items present only in the gold clustering; excluded from scoring.
    pub only_gold: Vec<String>,
    /// Items present only in the response clustering; excluded from scoring.
    pub only_response: Vec<String>,
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn f1(right: u64, predicted: u64, actual: u64) -> f64 {
    let p = if predicted == 0 { 0.0 } else { right as f64 / predicted as f64 };
    let r = if actual == 0 { 0.0 } else { right as f64 / actual as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn blanc(gold: &Clustering, response: &Clustering) -> Result<BlancResult, AgreementError> {
    let common: Vec<&String> = gold
        .items
        .keys()
        .filter(|k| response.items.contains_key(*k))
        .collect();
    let n = common.len() as u64;
    if n < 2 {
        return Err(AgreementError::TooFewItems(common.len()));
    }

    let mut gold_sizes: HashMap<&str, u64> = HashMap::new();
    let mut resp_sizes: HashMap<&str, u64> = HashMap::new();
    let mut joint: HashMap<(&str, &str), u64> = HashMap::new();
    for item in &common {
        let g = gold.items[*item].as_str();
        let r = response.items[*item].as_str();
        *gold_sizes.entry(g).or_default() += 1;
        *resp_sizes.entry(r).or_default() += 1;
        *joint.entry((g, r)).or_default() += 1;
    }

    let total = pairs(n);
    let coref_gold: u64 = gold_sizes.values().map(|&s| pairs(s)).sum();
    let coref_resp: u64 = resp_sizes.values().map(|&s| pairs(s)).sum();
    let coref_both: u64 = joint.values().map(|&s| pairs(s)).sum();
    let non_gold = total - coref_gold;
    let non_resp = total - coref_resp;
    // pairs split by both = all - split by either
    let non_both = total - (coref_gold + coref_resp - coref_both);

    let fc = f1(coref_both, coref_resp, coref_gold);
    let fn_ = f1(non_both, non_resp, non_gold);
    let score = if coref_gold == 0 && coref_resp == 0 {
        fn_
    } else if non_gold == 0 && non_resp == 0 {
        fc
    } else {
        (fc + fn_) / 2.0
    };

    Ok(BlancResult {
        blanc: score,
        coref_f1: fc,
        non_coref_f1: fn_,
        common_items: common.len(),
        only_gold: gold
            .items
            .keys()
            .filter(|k| !response.items.contains_key(*k))
            .cloned()
            .collect(),
        only_response: response
            .items
            .keys()
            .filter(|k| !gold.items.contains_key(*k))
            .cloned()
            .collect(),
    })
}
