//! Category lexicons and affect norms.
//!
//! A category lexicon is a plain-text word list, one entry per line. A single
//! trailing `*` turns an entry into a prefix that matches any token starting
//! with it. Lines starting with `#` are comments. The lexicon takes its name
//! from the file stem.
//!
//! Affect norms are a CSV with header `word,valence_mean,arousal_mean`, both
//! ratings on a 1 to 9 scale.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Names of the LIWC 2015 output categories. Shipped as empty templates so a
/// licensed dictionary can be dropped in file by file.
pub const LIWC2015_CATEGORY_NAMES: &[&str] = &[
    "function", "pronoun", "ppron", "i", "we", "you", "shehe", "they", "ipron", "article",
    "prep", "auxverb", "adverb", "conj", "negate", "verb", "adj", "compare", "interrog",
    "number", "quant", "affect", "posemo", "negemo", "anx", "anger", "sad", "social",
    "family", "friend", "female", "male", "cogproc", "insight", "cause", "discrep", "tentat",
    "certain", "differ", "percept", "see", "hear", "feel", "bio", "body", "health", "sexual",
    "ingest", "drives", "affiliation", "achieve", "power", "reward", "risk", "focuspast",
    "focuspresent", "focusfuture", "relativ", "motion", "space", "time", "work", "leisure",
    "home", "money", "relig", "death", "informal", "swear", "netspeak", "assent", "nonflu",
    "filler",
];

const DEMO_LEXICONS: &[(&str, &str)] = &[
    ("achieve", include_str!("../data/lexicons/achieve.txt")),
    ("affect", include_str!("../data/lexicons/affect.txt")),
    ("insight", include_str!("../data/lexicons/insight.txt")),
    ("negemo", include_str!("../data/lexicons/negemo.txt")),
    ("posemo", include_str!("../data/lexicons/posemo.txt")),
    ("social", include_str!("../data/lexicons/social.txt")),
];

const DEMO_AFFECT_NORMS: &str = include_str!("../data/affect_norms.csv");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryLexicon {
    name: String,
    exact: BTreeSet<String>,
    prefixes: BTreeSet<String>,
}

impl CategoryLexicon {
    /// An empty lexicon. Matches nothing; used for category templates.
    pub fn empty(name: impl Into<String>) -> Self {
        CategoryLexicon {
            name: name.into(),
            exact: BTreeSet::new(),
            prefixes: BTreeSet::new(),
        }
    }

    /// Builds a lexicon from entries, normalizing to lowercase. An exact entry
    /// that also appears as a prefix is dropped since the prefix covers it.
    pub fn from_entries<I, S>(name: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let name = name.into();
        let mut lex = CategoryLexicon::empty(name.clone());
        for (i, entry) in entries.into_iter().enumerate() {
            lex.insert(entry.as_ref())
                .map_err(|msg| Error::format(format!("<{name}>"), i + 1, msg))?;
        }
        lex.finish()?;
        Ok(lex)
    }

    pub fn parse(name: impl Into<String>, text: &str, origin: &Path) -> Result<Self> {
        let mut lex = CategoryLexicon::empty(name);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            lex.insert(line)
                .map_err(|msg| Error::format(origin, i + 1, msg))?;
        }
        lex.finish()?;
        Ok(lex)
    }

    fn insert(&mut self, entry: &str) -> std::result::Result<(), String> {
        let entry = entry.trim();
        if entry.is_empty() {
            return Err("empty entry".into());
        }
        if entry.chars().any(char::is_whitespace) {
            return Err(format!("entry {entry:?} contains whitespace"));
        }
        let lower = entry.to_lowercase();
        match lower.find('*') {
            None => {
                self.exact.insert(lower);
            }
            Some(pos) if pos + 1 == lower.len() => {
                let prefix = &lower[..pos];
                if prefix.is_empty() {
                    return Err("bare wildcard".into());
                }
                self.prefixes.insert(prefix.to_string());
            }
            Some(_) => {
                return Err(format!("wildcard must be the final character in {entry:?}"));
            }
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if self.exact.is_empty() && self.prefixes.is_empty() {
            return Err(Error::Validation(format!("lexicon {:?} is empty", self.name)));
        }
        let prefixes = &self.prefixes;
        self.exact.retain(|e| !prefixes.contains(e));
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn exact_entries(&self) -> &BTreeSet<String> {
        &self.exact
    }

    pub fn prefix_entries(&self) -> &BTreeSet<String> {
        &self.prefixes
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.prefixes.is_empty()
    }

    /// True iff `token` is an exact entry or starts with one of the prefixes.
    /// The token is expected to be lowercase already.
    pub fn matches(&self, token: &str) -> bool {
        if self.exact.contains(token) {
            return true;
        }
        if self.prefixes.is_empty() {
            return false;
        }
        token
            .char_indices()
            .skip(1)
            .map(|(i, _)| &token[..i])
            .chain(std::iter::once(token))
            .any(|head| self.prefixes.contains(head))
    }

    /// Serializes back to the line format accepted by [`CategoryLexicon::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.name);
        for e in &self.exact {
            out.push_str(e);
            out.push('\n');
        }
        for p in &self.prefixes {
            out.push_str(p);
            out.push_str("*\n");
        }
        out
    }
}

pub fn load_category_lexicon(path: &Path) -> Result<CategoryLexicon> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::format(path, 0, "lexicon file has no usable stem"))?;
    CategoryLexicon::parse(name, &text, path)
}

/// Loads every `*.txt` file in `dir` as a lexicon, sorted by name.
pub fn load_lexicon_dir(dir: &Path) -> Result<Vec<CategoryLexicon>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("txt") {
            paths.push(path);
        }
    }
    paths.sort();
    let lexicons = paths
        .iter()
        .map(|p| load_category_lexicon(p))
        .collect::<Result<Vec<_>>>()?;
    check_unique_names(&lexicons)?;
    if lexicons.is_empty() {
        return Err(Error::Validation(format!(
            "no lexicon files found in {}",
            dir.display()
        )));
    }
    Ok(lexicons)
}

pub fn check_unique_names(lexicons: &[CategoryLexicon]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for lex in lexicons {
        if !seen.insert(lex.name()) {
            return Err(Error::Validation(format!(
                "duplicate lexicon name {:?}",
                lex.name()
            )));
        }
    }
    Ok(())
}

/// The bundled demonstration lexicons.
pub fn demo_lexicons() -> Vec<CategoryLexicon> {
    DEMO_LEXICONS
        .iter()
        .map(|(name, text)| {
            CategoryLexicon::parse(*name, text, Path::new(name)).expect("bundled lexicon is valid")
        })
        .collect()
}

/// Raw text of the bundled lexicons, keyed by name, for writing to disk.
pub fn demo_lexicon_files() -> impl Iterator<Item = (&'static str, &'static str)> {
    DEMO_LEXICONS.iter().copied()
}

/// One empty template lexicon per LIWC 2015 category name.
pub fn liwc2015_templates() -> Vec<CategoryLexicon> {
    LIWC2015_CATEGORY_NAMES
        .iter()
        .map(|n| CategoryLexicon::empty(*n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffectRating {
    pub valence: f64,
    pub arousal: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffectNorms {
    entries: BTreeMap<String, AffectRating>,
}

#[derive(Debug, Deserialize)]
struct NormRow {
    word: String,
    valence_mean: f64,
    arousal_mean: f64,
}

impl AffectNorms {
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64, f64)>,
    {
        let mut norms = AffectNorms::default();
        for (word, v, a) in entries {
            norms.insert(&word, v, a)?;
        }
        Ok(norms)
    }

    fn insert(&mut self, word: &str, valence: f64, arousal: f64) -> Result<()> {
        let key = word.trim().to_lowercase();
        if key.is_empty() {
            return Err(Error::Validation("empty lemma in affect norms".into()));
        }
        for (label, value) in [("valence", valence), ("arousal", arousal)] {
            if !(1.0..=9.0).contains(&value) {
                return Err(Error::Validation(format!(
                    "{label} rating {value} for {key:?} outside 1..=9"
                )));
            }
        }
        if self.entries.contains_key(&key) {
            return Err(Error::Validation(format!("duplicate lemma {key:?} in affect norms")));
        }
        self.entries.insert(key, AffectRating { valence, arousal });
        Ok(())
    }

    pub fn parse_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["word", "valence_mean", "arousal_mean"];
        if headers.len() < 3 || headers.iter().take(3).ne(expected) {
            return Err(Error::Validation(format!(
                "affect norms header must be {}, got {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut norms = AffectNorms::default();
        for row in rdr.deserialize() {
            let row: NormRow = row?;
            norms.insert(&row.word, row.valence_mean, row.arousal_mean)?;
        }
        Ok(norms)
    }

    pub fn get(&self, token: &str) -> Option<AffectRating> {
        self.entries.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, AffectRating)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn load_affect_norms(path: &Path) -> Result<AffectNorms> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    AffectNorms::parse_csv(file)
}

pub fn demo_affect_norms() -> AffectNorms {
    AffectNorms::parse_csv(DEMO_AFFECT_NORMS.as_bytes()).expect("bundled norms are valid")
}

pub fn demo_affect_norms_csv() -> &'static str {
    DEMO_AFFECT_NORMS
}
