//! Posts, tokenization and sparse bag-of-words features.
//!
//! A [`Vocabulary`] is built once over a collection of posts and then used to
//! turn each post into a [`FeatureVector`] of raw term counts or tf-idf values.
//! Bi-grams are keyed as `left_right`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

impl Polarity {
    /// Logistic target: 1 for positive, 0 for negative.
    pub fn target(self) -> f64 {
        match self {
            Polarity::Positive => 1.0,
            Polarity::Negative => 0.0,
        }
    }
}

/// One forum message.
#[derive(Debug, Clone, PartialEq)]
pub struct Post {
    pub id: String,
    pub stock_id: String,
    pub date: NaiveDate,
    pub tokens: Vec<String>,
    pub label: Option<Polarity>,
}

impl Post {
    pub fn new(
        id: impl Into<String>,
        stock_id: impl Into<String>,
        date: NaiveDate,
        tokens: Vec<String>,
        label: Option<Polarity>,
    ) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::Domain(format!("post {id} has no tokens")));
        }
        Ok(Self {
            id,
            stock_id: stock_id.into(),
            date,
            tokens,
            label,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    #[default]
    Whitespace,
    CharBigram,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NgramPolicy {
    #[default]
    Uni,
    UniAndBi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Tf,
    TfIdf,
}

fn strip_punctuation(word: &str) -> String {
    word.chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Built-in tokenizer for raw text.
///
/// `Whitespace` splits on Unicode whitespace and drops non-alphanumeric
/// characters. `CharBigram` emits overlapping character pairs of each
/// whitespace-separated run; a run of a single character is emitted as is.
pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<String> {
    let words = text
        .split_whitespace()
        .map(strip_punctuation)
        .filter(|w| !w.is_empty());
    match mode {
        TokenizerMode::Whitespace => words.collect(),
        TokenizerMode::CharBigram => {
            let mut out = Vec::new();
            for word in words {
                let chars: Vec<char> = word.chars().collect();
                if chars.len() == 1 {
                    out.push(word);
                    continue;
                }
                out.extend(chars.windows(2).map(|pair| pair.iter().collect::<String>()));
            }
            out
        }
    }
}

/// Expands a token sequence into the terms counted under `ngram`.
pub fn terms_of(tokens: &[String], ngram: NgramPolicy) -> Vec<String> {
    let mut terms = tokens.to_vec();
    if ngram == NgramPolicy::UniAndBi {
        terms.extend(tokens.windows(2).map(|w| format!("{}_{}", w[0], w[1])));
    }
    terms
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    ngram: NgramPolicy,
    corpus_size: usize,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

/// Term index over a corpus, with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "VocabularyRepr", try_from = "VocabularyRepr")]
pub struct Vocabulary {
    ngram: NgramPolicy,
    corpus_size: usize,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    index: HashMap<String, usize>,
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            ngram: v.ngram,
            corpus_size: v.corpus_size,
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl TryFrom<VocabularyRepr> for Vocabulary {
    type Error = String;

    fn try_from(r: VocabularyRepr) -> std::result::Result<Self, String> {
        if r.terms.len() != r.doc_freq.len() {
            return Err("terms and doc_freq differ in length".into());
        }
        if r.doc_freq.iter().any(|&df| df == 0 || df > r.corpus_size) {
            return Err("document frequency outside 1..=corpus_size".into());
        }
        let index: HashMap<String, usize> = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != r.terms.len() {
            return Err("duplicate term in vocabulary".into());
        }
        Ok(Vocabulary {
            ngram: r.ngram,
            corpus_size: r.corpus_size,
            terms: r.terms,
            doc_freq: r.doc_freq,
            index,
        })
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn ngram(&self) -> NgramPolicy {
        self.ngram
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.doc_freq[i])
    }

    /// Stable hex digest of the term list, policy and document counts.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{:?}\n{}\n", self.ngram, self.corpus_size).as_bytes());
        for (term, df) in self.terms.iter().zip(&self.doc_freq) {
            hasher.update(term.as_bytes());
            hasher.update(format!("\t{df}\n").as_bytes());
        }
        hasher
            .finalize()
            .iter()
            .take(16)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Builds a lexicographically ordered vocabulary of every term that occurs in
/// at least `min_df` posts.
pub fn build_vocabulary(posts: &[Post], ngram: NgramPolicy, min_df: usize) -> Result<Vocabulary> {
    if posts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if min_df == 0 {
        return Err(Error::Config("min_df must be at least 1".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for post in posts {
        let distinct: BTreeSet<String> = terms_of(&post.tokens, ngram).into_iter().collect();
        for term in distinct {
            *df.entry(term).or_default() += 1;
        }
    }
    let (terms, doc_freq): (Vec<String>, Vec<usize>) =
        df.into_iter().filter(|&(_, n)| n >= min_df).unzip();
    if terms.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(Vocabulary {
        ngram,
        corpus_size: posts.len(),
        terms,
        doc_freq,
        index,
    })
}

/// Sparse feature vector; entries sorted by index, all values strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Builds a vector from (index, value) pairs. Zero values are dropped and
    /// repeated indices summed.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i + 1,
                });
            }
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("feature value {v} must be finite and >= 0")));
            }
            *acc.entry(i).or_default() += v;
        }
        Ok(Self {
            dim,
            entries: acc.into_iter().filter(|&(_, v)| v > 0.0).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }
}

/// Converts a post's tokens to features against `vocab`. Out-of-vocabulary
/// terms are dropped; tf-idf entries of terms present in every post vanish.
pub fn featurize(tokens: &[String], vocab: &Vocabulary, weighting: Weighting) -> FeatureVector {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for term in terms_of(tokens, vocab.ngram) {
        if let Some(i) = vocab.index_of(&term) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    let entries = counts
        .into_iter()
        .map(|(i, tf)| match weighting {
            Weighting::Tf => (i, tf),
            Weighting::TfIdf => {
                let idf = (vocab.corpus_size as f64 / vocab.doc_freq[i] as f64).ln();
                (i, tf * idf)
            }
        })
        .filter(|&(_, v)| v > 0.0)
        .collect();
    FeatureVector {
        dim: vocab.len(),
        entries,
    }
}
