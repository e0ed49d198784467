//! Phrase → synset lookup backing the WordNet matching channel.
//!
//! Two sources are accepted: a directory holding the WordNet 3.x database
//! index files (`index.noun`, `index.verb`, `index.adj`, `index.adv`, plus the
//! optional `*.exc` exception lists), or a single text file in the simplified
//! format `lemma words: synset synset ...` with `#` comments.
//!
//! Multiword lemmas are stored with `_` joining the words, as WordNet does.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

use crate::text::normalize;

pub const MULTIWORD_SEPARATOR: char = '_';

const POS_FILES: [(&str, &str); 4] = [
    ("noun", "n"),
    ("verb", "v"),
    ("adj", "a"),
    ("adv", "r"),
];

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon source {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed lexicon entry: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("no WordNet index files found in {0}")]
    NoIndexFiles(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LexiconOptions {
    /// Retry failed lookups with WordNet-style suffix detachment.
    pub morphology: bool,
}

/// Interned synset identifier, valid for the lexicon that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SynsetId(u32);

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<SynsetId>>,
    names: Vec<String>,
    name_index: HashMap<String, SynsetId>,
    exceptions: HashMap<String, Vec<String>>,
    morphology: bool,
    version: Option<String>,
}

// (suffix, replacement) in WordNet's detachment order: nouns, verbs, adjectives
const DETACHMENT_RULES: &[(&str, &str)] = &[
    ("s", ""),
    ("ses", "s"),
    ("xes", "x"),
    ("zes", "z"),
    ("ches", "ch"),
    ("shes", "sh"),
    ("men", "man"),
    ("ies", "y"),
    ("es", "e"),
    ("es", ""),
    ("ed", "e"),
    ("ed", ""),
    ("ing", "e"),
    ("ing", ""),
    ("er", ""),
    ("est", ""),
    ("er", "e"),
    ("est", "e"),
];

fn lemma_key(phrase: &str) -> String {
    normalize(phrase).replace(' ', &MULTIWORD_SEPARATOR.to_string())
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Loads a WordNet database directory or a simplified lexicon file.
    pub fn load(path: &Path, options: LexiconOptions) -> Result<Self, LexiconError> {
        let meta = fs::metadata(path).map_err(|source| LexiconError::Unreadable {
            path: path.display().to_string(),
            source,
        })?;
        if meta.is_dir() {
            Self::load_wordnet_dir(path, options)
        } else {
            let file = fs::File::open(path).map_err(|source| LexiconError::Unreadable {
                path: path.display().to_string(),
                source,
            })?;
            Self::from_simplified(
                std::io::BufReader::new(file),
                &path.display().to_string(),
                options,
            )
        }
    }

    pub fn from_simplified<R: BufRead>(
        reader: R,
        name: &str,
        options: LexiconOptions,
    ) -> Result<Self, LexiconError> {
        let mut lex = Self {
            morphology: options.morphology,
            ..Self::default()
        };
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| LexiconError::Unreadable {
                path: name.to_string(),
                source,
            })?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let malformed = |message: &str| LexiconError::Malformed {
                file: name.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            let (lemma, ids) = content
                .split_once(':')
                .ok_or_else(|| malformed("missing ':' separator"))?;
            let key = lemma_key(lemma);
            if key.is_empty() {
                return Err(malformed("empty lemma"));
            }
            let ids: Vec<&str> = ids.split_whitespace().collect();
            if ids.is_empty() {
                return Err(malformed("lemma lists no synsets"));
            }
            for id in ids {
                lex.insert(&key, id);
            }
        }
        lex.finish();
        Ok(lex)
    }

    fn load_wordnet_dir(dir: &Path, options: LexiconOptions) -> Result<Self, LexiconError> {
        let mut lex = Self {
            morphology: options.morphology,
            ..Self::default()
        };
        let mut found = false;
        for (pos_name, pos) in POS_FILES {
            let path = dir.join(format!("index.{pos_name}"));
            if !path.exists() {
                continue;
            }
            found = true;
            let text = fs::read_to_string(&path).map_err(|source| LexiconError::Unreadable {
                path: path.display().to_string(),
                source,
            })?;
            lex.read_index(&text, &path.display().to_string(), pos)?;

            let exc = dir.join(format!("{pos_name}.exc"));
            if let Ok(text) = fs::read_to_string(&exc) {
                for line in text.lines() {
                    let mut words = line.split_whitespace();
                    if let Some(inflected) = words.next() {
                        let bases = lex.exceptions.entry(inflected.to_string()).or_default();
                        bases.extend(words.map(str::to_string));
                    }
                }
            }
        }
        if !found {
            return Err(LexiconError::NoIndexFiles(dir.display().to_string()));
        }
        lex.version = fs::read_to_string(dir.join("LICENSE"))
            .ok()
            .and_then(|l| {
                l.lines()
                    .find_map(|line| line.trim().strip_prefix("WordNet Release ").map(str::to_string))
            });
        lex.finish();
        Ok(lex)
    }

    // index line: lemma pos synset_cnt p_cnt [ptr...] sense_cnt tagsense_cnt offset...
    fn read_index(&mut self, text: &str, file: &str, pos: &str) -> Result<(), LexiconError> {
        for (i, line) in text.lines().enumerate() {
            // license header lines are indented
            if line.starts_with(' ') || line.trim().is_empty() {
                continue;
            }
            let malformed = |message: &str| LexiconError::Malformed {
                file: file.to_string(),
                line: i + 1,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 6 {
                return Err(malformed("too few fields"));
            }
            let number = |s: &str| s.parse::<usize>().map_err(|_| malformed("bad count field"));
            let synset_cnt = number(fields[2])?;
            let ptr_cnt = number(fields[3])?;
            let offsets_at = 4 + ptr_cnt + 2;
            let offsets = fields
                .get(offsets_at..offsets_at + synset_cnt)
                .ok_or_else(|| malformed("truncated synset offsets"))?;
            let key = fields[0].to_lowercase();
            for off in offsets {
                self.insert(&key, &format!("{off}-{pos}"));
            }
        }
        Ok(())
    }

    fn insert(&mut self, key: &str, synset: &str) {
        let id = match self.name_index.get(synset) {
            Some(&id) => id,
            None => {
                let id = SynsetId(self.names.len() as u32);
                self.names.push(synset.to_string());
                self.name_index.insert(synset.to_string(), id);
                id
            }
        };
        self.entries.entry(key.to_string()).or_default().push(id);
    }

    fn finish(&mut self) {
        for ids in self.entries.values_mut() {
            ids.sort_unstable();
            ids.dedup();
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn morphology(&self) -> bool {
        self.morphology
    }

    /// WordNet release read from the database LICENSE file, if any.
    pub fn version(&self) -> Option<&str> {
        self.version.as_deref()
    }

    pub fn synset_name(&self, id: SynsetId) -> &str {
        &self.names[id.0 as usize]
    }

    fn direct(&self, key: &str) -> &[SynsetId] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Synsets of a phrase; spaces map to the multiword separator. Empty
    /// when the phrase is unknown.
    pub fn synsets(&self, phrase: &str) -> BTreeSet<SynsetId> {
        let key = lemma_key(phrase);
        let direct = self.direct(&key);
        if !direct.is_empty() || !self.morphology {
            return direct.iter().copied().collect();
        }
        let mut out = BTreeSet::new();
        for base in self.base_forms(&key) {
            out.extend(self.direct(&base).iter().copied());
        }
        out
    }

    /// Synset identifiers of a phrase as strings.
    pub fn synset_names(&self, phrase: &str) -> BTreeSet<&str> {
        self.synsets(phrase)
            .into_iter()
            .map(|id| self.synset_name(id))
            .collect()
    }

    pub fn shares_synset(&self, a: &str, b: &str) -> bool {
        let sa = self.synsets(a);
        if sa.is_empty() {
            return false;
        }
        self.synsets(b).iter().any(|id| sa.contains(id))
    }

    fn base_forms(&self, key: &str) -> Vec<String> {
        let mut bases: Vec<String> = self.exceptions.get(key).cloned().unwrap_or_default();
        for (suffix, replacement) in DETACHMENT_RULES {
            if let Some(stem) = key.strip_suffix(suffix) {
                if !stem.is_empty() && !stem.ends_with(MULTIWORD_SEPARATOR) {
                    bases.push(format!("{stem}{replacement}"));
                }
            }
        }
        bases
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(morphology: bool) -> Lexicon {
        let text = "# test lexicon\ngum: s1 s2\nchewing gum: s1\nkey: k1\nbox: b1\nrun: r1\n";
        Lexicon::from_simplified(text.as_bytes(), "fixture", LexiconOptions { morphology }).unwrap()
    }

    #[test]
    fn loads_simplified_entries() {
        let lex = fixture(false);
        assert_eq!(lex.synset_names("gum"), BTreeSet::from(["s1", "s2"]));
        assert_eq!(lex.synset_names("Chewing  Gum"), BTreeSet::from(["s1"]));
        assert!(lex.synsets("qwzx").is_empty());
        assert!(lex.shares_synset("gum", "chewing gum"));
    }

    #[test]
    fn empty_file_is_empty_lexicon() {
        let lex = Lexicon::from_simplified("".as_bytes(), "e", LexiconOptions::default()).unwrap();
        assert!(lex.is_empty());
        assert!(lex.synsets("anything").is_empty());
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = Lexicon::from_simplified("gum: s1\nbroken line\n".as_bytes(), "f", LexiconOptions::default())
            .unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 2, .. }));
        let err = Lexicon::from_simplified("gum:\n".as_bytes(), "f", LexiconOptions::default()).unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 1, .. }));
    }

    #[test]
    fn morphology_is_opt_in() {
        assert!(fixture(false).synsets("keys").is_empty());
        let lex = fixture(true);
        assert_eq!(lex.synsets("keys"), lex.synsets("key"));
        assert_eq!(lex.synsets("boxes"), lex.synsets("box"));
        assert_eq!(lex.synsets("running"), BTreeSet::new()); // "runn" is not a lemma
        assert!(lex.synsets("qwzx").is_empty());
    }

    #[test]
    fn index_line_parsing() {
        let mut lex = Lexicon::default();
        let text = "  1 license text\nchewing_gum n 1 3 @ ~ %s 1 0 07599998  \ngum n 2 1 @ 2 0 07599998 05304932  \n";
        lex.read_index(text, "index.noun", "n").unwrap();
        lex.finish();
        assert_eq!(lex.synset_names("chewing gum"), BTreeSet::from(["07599998-n"]));
        assert_eq!(lex.synset_names("gum").len(), 2);
        let err = lex.read_index("bad n 3 0 1 0 123\n", "index.noun", "n").unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 1, .. }));
    }
}
