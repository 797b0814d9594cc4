//! Text featurization: tokenization, category percentages, affect statistics
//! and bigram relative frequencies.
//!
//! A user's documents are collated before counting. Category and affect
//! features see the concatenated token stream; bigrams are counted inside
//! each document so no pair ever spans two documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicons::{AffectNorms, CategoryLexicon};

pub const DEFAULT_MIN_WORDS: usize = 400;
pub const DEFAULT_BIGRAM_TOP_K: usize = 50;
pub const DEFAULT_BIGRAM_MIN_USERS: usize = 100;

pub const VALENCE_MEAN: &str = "affect:valence_mean";
pub const VALENCE_SD: &str = "affect:valence_sd";
pub const AROUSAL_MEAN: &str = "affect:arousal_mean";
pub const AROUSAL_SD: &str = "affect:arousal_sd";

pub fn category_feature_name(lexicon: &str) -> String {
    format!("cat:{lexicon}")
}

pub fn bigram_feature_name(bigram: &str) -> String {
    format!("bigram:{bigram}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocumentKind {
    Post,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub author_id: String,
    pub community_id: String,
    pub timestamp: i64,
    pub kind: DocumentKind,
    pub parent_id: Option<String>,
    pub text: String,
}

impl Document {
    pub fn validate(&self) -> Result<()> {
        if self.timestamp <= 0 {
            return Err(Error::Validation(format!(
                "document {} has non-positive timestamp {}",
                self.id, self.timestamp
            )));
        }
        if self.kind == DocumentKind::Comment && self.parent_id.is_none() {
            return Err(Error::Validation(format!(
                "comment {} has no parent_id",
                self.id
            )));
        }
        Ok(())
    }
}

pub fn read_documents_jsonl(path: &Path) -> Result<Vec<Document>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        doc.validate()
            .map_err(|e| Error::format(path, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents_jsonl(path: &Path, docs: &[Document]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
}

impl TokenizedText {
    pub fn word_count(&self) -> usize {
        self.tokens.len()
    }
}

/// Splits on anything that is not a letter, digit or apostrophe, lowercases,
/// and strips apostrophes from token edges.
pub fn tokenize(text: &str) -> TokenizedText {
    let tokens = text
        .split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '\u{2019}'))
        .map(|t| t.trim_matches(|c| c == '\'' || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
        .map(|t| t.replace('\u{2019}', "'").to_lowercase())
        .collect();
    TokenizedText { tokens }
}

/// Named feature values for one user.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: BTreeMap<String, f64>,
    pub word_count: usize,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn extend(&mut self, other: BTreeMap<String, f64>) {
        self.values.extend(other);
    }
}

pub fn category_percentages(
    text: &TokenizedText,
    lexicons: &[CategoryLexicon],
) -> Result<BTreeMap<String, f64>> {
    let n = text.word_count();
    if n == 0 {
        return Err(Error::Degenerate("category percentages of an empty text".into()));
    }
    Ok(lexicons
        .iter()
        .map(|lex| {
            let hits = text.tokens.iter().filter(|t| lex.matches(t)).count();
            (
                category_feature_name(lex.name()),
                100.0 * hits as f64 / n as f64,
            )
        })
        .collect())
}

/// Mean and population standard deviation of valence and arousal over the
/// tokens found in `norms`, counted with multiplicity. Unknown tokens are
/// skipped.
pub fn affect_features(text: &TokenizedText, norms: &AffectNorms) -> Result<BTreeMap<String, f64>> {
    let ratings: Vec<_> = text.tokens.iter().filter_map(|t| norms.get(t)).collect();
    if ratings.len() < 2 {
        return Err(Error::InsufficientCoverage {
            matched: ratings.len(),
        });
    }
    let (v_mean, v_sd) = mean_and_population_sd(ratings.iter().map(|r| r.valence));
    let (a_mean, a_sd) = mean_and_population_sd(ratings.iter().map(|r| r.arousal));
    Ok(BTreeMap::from([
        (VALENCE_MEAN.to_string(), v_mean),
        (VALENCE_SD.to_string(), v_sd),
        (AROUSAL_MEAN.to_string(), a_mean),
        (AROUSAL_SD.to_string(), a_sd),
    ]))
}

fn mean_and_population_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Counts adjacent token pairs inside each document.
pub fn bigram_counts(documents: &[TokenizedText]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for doc in documents {
        for pair in doc.tokens.windows(2) {
            *counts.entry(format!("{} {}", pair[0], pair[1])).or_insert(0) += 1;
        }
    }
    counts
}

/// The `k` most frequent bigrams, ties broken lexicographically.
pub fn user_top_bigrams(documents: &[TokenizedText], k: usize) -> Vec<String> {
    let mut ranked: Vec<_> = bigram_counts(documents).into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(b, _)| b).collect()
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BigramVocabulary {
    /// Sorted by descending support, then lexicographically.
    pub bigrams: Vec<String>,
    pub user_support: BTreeMap<String, usize>,
    /// Distinct bigrams seen across all users' top lists.
    pub candidates: usize,
    pub min_users: usize,
}

/// Keeps the bigrams that appear in the top lists of strictly more than
/// `min_users` users.
pub fn build_bigram_vocabulary(
    per_user_top: &BTreeMap<String, Vec<String>>,
    min_users: usize,
) -> BigramVocabulary {
    let mut support: BTreeMap<String, usize> = BTreeMap::new();
    for list in per_user_top.values() {
        let distinct: BTreeSet<&String> = list.iter().collect();
        for b in distinct {
            *support.entry(b.clone()).or_insert(0) += 1;
        }
    }
    let candidates = support.len();
    let user_support: BTreeMap<String, usize> =
        support.into_iter().filter(|(_, s)| *s > min_users).collect();
    let mut bigrams: Vec<String> = user_support.keys().cloned().collect();
    bigrams.sort_by(|a, b| user_support[b].cmp(&user_support[a]).then_with(|| a.cmp(b)));
    if bigrams.is_empty() {
        warn!(
            "bigram vocabulary is empty: none of {candidates} candidates appear in more than {min_users} users"
        );
    }
    BigramVocabulary {
        bigrams,
        user_support,
        candidates,
        min_users,
    }
}

/// Relative frequency (times 100) of each vocabulary bigram among all of the
/// user's bigrams.
pub fn bigram_features(
    documents: &[TokenizedText],
    vocab: &BigramVocabulary,
) -> Result<BTreeMap<String, f64>> {
    let words: usize = documents.iter().map(TokenizedText::word_count).sum();
    if words <= 1 {
        return Err(Error::Degenerate(format!(
            "bigram features need more than one word, got {words}"
        )));
    }
    let counts = bigram_counts(documents);
    let total: usize = counts.values().sum();
    if total == 0 {
        return Err(Error::Degenerate("no document has two or more words".into()));
    }
    Ok(vocab
        .bigrams
        .iter()
        .map(|b| {
            let c = counts.get(b).copied().unwrap_or(0);
            (bigram_feature_name(b), 100.0 * c as f64 / total as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum ExclusionReason {
    BelowMinWords { words: usize, min_words: usize },
    InsufficientAffectCoverage { matched: usize },
    NoBigrams,
}

impl std::fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExclusionReason::BelowMinWords { words, min_words } => {
                write!(f, "{words} words, below minimum {min_words}")
            }
            ExclusionReason::InsufficientAffectCoverage { matched } => {
                write!(f, "only {matched} tokens found in affect norms")
            }
            ExclusionReason::NoBigrams => f.write_str("no within-document bigrams"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub user_id: String,
    #[serde(flatten)]
    pub reason: ExclusionReason,
}

/// Lexicons, norms and bigram vocabulary bundled with the word threshold.
#[derive(Debug, Clone)]
pub struct Featurizer {
    pub lexicons: Vec<CategoryLexicon>,
    pub norms: AffectNorms,
    pub vocab: BigramVocabulary,
    pub min_words: usize,
}

impl Featurizer {
    /// Feature names in column order: categories, affect, bigrams.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .lexicons
            .iter()
            .map(|l| category_feature_name(l.name()))
            .collect();
        names.extend([VALENCE_MEAN, VALENCE_SD, AROUSAL_MEAN, AROUSAL_SD].map(String::from));
        names.extend(self.vocab.bigrams.iter().map(|b| bigram_feature_name(b)));
        names
    }

    pub fn featurize_user(&self, user_id: &str, documents: &[Document]) -> Result<FeatureVector, Exclusion> {
        let tokenized: Vec<TokenizedText> = documents.iter().map(|d| tokenize(&d.text)).collect();
        self.featurize_tokens(user_id, &tokenized)
    }

    pub fn featurize_tokens(
        &self,
        user_id: &str,
        documents: &[TokenizedText],
    ) -> Result<FeatureVector, Exclusion> {
        let exclude = |reason| Exclusion {
            user_id: user_id.to_string(),
            reason,
        };
        let collated = TokenizedText {
            tokens: documents.iter().flat_map(|d| d.tokens.iter().cloned()).collect(),
        };
        let words = collated.word_count();
        if words < self.min_words || words == 0 {
            return Err(exclude(ExclusionReason::BelowMinWords {
                words,
                min_words: self.min_words,
            }));
        }
        let mut fv = FeatureVector {
            values: BTreeMap::new(),
            word_count: words,
        };
        fv.extend(category_percentages(&collated, &self.lexicons).expect("non-empty text"));
        match affect_features(&collated, &self.norms) {
            Ok(values) => fv.extend(values),
            Err(Error::InsufficientCoverage { matched }) => {
                return Err(exclude(ExclusionReason::InsufficientAffectCoverage { matched }))
            }
            Err(e) => unreachable!("affect features: {e}"),
        }
        match bigram_features(documents, &self.vocab) {
            Ok(values) => fv.extend(values),
            Err(_) => return Err(exclude(ExclusionReason::NoBigrams)),
        }
        Ok(fv)
    }
}

/// Rows of feature values with named columns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub row_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_vectors(names: Vec<String>, vectors: &[(String, FeatureVector)]) -> Result<Self> {
        let mut rows = Vec::with_capacity(vectors.len());
        let mut row_ids = Vec::with_capacity(vectors.len());
        for (id, fv) in vectors {
            let row = names
                .iter()
                .map(|n| {
                    fv.get(n).ok_or_else(|| {
                        Error::Contract(format!("feature {n:?} missing for user {id}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
            row_ids.push(id.clone());
        }
        Ok(FeatureMatrix {
            names,
            row_ids,
            rows,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// A matrix restricted to `names`, in that order.
    pub fn select(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::Contract(format!("unknown feature {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureMatrix {
            names: names.to_vec(),
            row_ids: self.row_ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
        })
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["user_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.row_ids.iter().zip(&self.rows) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature matrix>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.get(0) != Some("user_id") {
            return Err(Error::Validation("feature matrix must start with user_id".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut m = FeatureMatrix {
            names,
            ..Default::default()
        };
        for rec in r.records() {
            let rec = rec?;
            m.row_ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Validation(format!("bad feature value {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            m.rows.push(row);
        }
        Ok(m)
    }
}
