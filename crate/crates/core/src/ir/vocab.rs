//! The fixed program vocabulary: per-category canonical terms plus synonym
//! maps.
//!
//! On disk a vocabulary is a JSON array with one document per category:
//!
//! ```json
//! [{"category": "Ingredient",
//!   "canonical": ["pepper", "salt"],
//!   "synonyms": {"black pepper": "pepper"}}]
//! ```

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::EntityKind;

/// One vocabulary category as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryDoc {
    pub category: String,
    pub canonical: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub synonyms: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocabulary is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("category {0} appears more than once")]
    DuplicateCategory(EntityKind),
    #[error("category {category}: duplicate canonical term `{term}`")]
    DuplicateCanonical { category: EntityKind, term: String },
    #[error("category {category}: empty term")]
    EmptyTerm { category: EntityKind },
    #[error("category {category}: synonym `{synonym}` maps to unknown canonical `{target}`")]
    UnknownSynonymTarget {
        category: EntityKind,
        synonym: String,
        target: String,
    },
    #[error("category {category}: synonym `{synonym}` collides with a canonical term")]
    SynonymShadowsCanonical {
        category: EntityKind,
        synonym: String,
    },
}

#[derive(Debug, Clone, Default)]
struct Category {
    canonical: Vec<String>,
    /// Exact canonical term -> index (tokenization lookups).
    exact: HashMap<String, usize>,
    /// Normalized canonical term -> index (canonicalization lookups).
    by_norm: HashMap<String, usize>,
    /// Normalized synonym -> canonical index.
    syn_norm: HashMap<String, usize>,
    /// Synonyms as loaded, for re-serialization.
    syn_raw: BTreeMap<String, String>,
}

/// Case- and whitespace-normalized lookup key.
pub(crate) fn normalize_term(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// The full vocabulary across categories.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    cats: BTreeMap<EntityKind, Category>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    /// Install one category. Rejects duplicate categories, duplicate
    /// canonical terms (after case/whitespace normalization), synonyms whose
    /// target is not canonical, and synonyms that collide with a canonical
    /// term of the same category.
    pub fn insert_category(
        &mut self,
        kind: EntityKind,
        canonical: Vec<String>,
        synonyms: BTreeMap<String, String>,
    ) -> Result<(), VocabError> {
        if self.cats.contains_key(&kind) {
            return Err(VocabError::DuplicateCategory(kind));
        }
        let mut cat = Category::default();
        for (i, term) in canonical.iter().enumerate() {
            if term.is_empty() {
                return Err(VocabError::EmptyTerm { category: kind });
            }
            let norm = normalize_term(term);
            if cat.by_norm.insert(norm, i).is_some() {
                return Err(VocabError::DuplicateCanonical {
                    category: kind,
                    term: term.clone(),
                });
            }
            cat.exact.insert(term.clone(), i);
        }
        for (syn, target) in &synonyms {
            if syn.is_empty() || target.is_empty() {
                return Err(VocabError::EmptyTerm { category: kind });
            }
            let syn_key = normalize_term(syn);
            if cat.by_norm.contains_key(&syn_key) {
                return Err(VocabError::SynonymShadowsCanonical {
                    category: kind,
                    synonym: syn.clone(),
                });
            }
            let Some(&idx) = cat.by_norm.get(&normalize_term(target)) else {
                return Err(VocabError::UnknownSynonymTarget {
                    category: kind,
                    synonym: syn.clone(),
                    target: target.clone(),
                });
            };
            cat.syn_norm.insert(syn_key, idx);
        }
        cat.canonical = canonical;
        cat.syn_raw = synonyms;
        self.cats.insert(kind, cat);
        Ok(())
    }

    pub fn from_docs(docs: Vec<CategoryDoc>) -> Result<Self, VocabError> {
        let mut v = Vocabulary::new();
        for doc in docs {
            let kind: EntityKind = doc
                .category
                .parse()
                .map_err(|_| VocabError::UnknownCategory(doc.category.clone()))?;
            v.insert_category(kind, doc.canonical, doc.synonyms)?;
        }
        Ok(v)
    }

    /// Load from JSON text: either an array of category documents or a
    /// single document.
    pub fn from_json_str(text: &str) -> Result<Self, VocabError> {
        let docs: Vec<CategoryDoc> = match serde_json::from_str::<Vec<CategoryDoc>>(text) {
            Ok(docs) => docs,
            Err(_) => vec![serde_json::from_str::<CategoryDoc>(text)?],
        };
        Vocabulary::from_docs(docs)
    }

    pub fn to_docs(&self) -> Vec<CategoryDoc> {
        self.cats
            .iter()
            .map(|(kind, cat)| CategoryDoc {
                category: kind.name().to_string(),
                canonical: cat.canonical.clone(),
                synonyms: cat.syn_raw.clone(),
            })
            .collect()
    }

    /// Exact membership test used by tokenization.
    pub fn contains(&self, kind: EntityKind, value: &str) -> bool {
        self.cats
            .get(&kind)
            .is_some_and(|c| c.exact.contains_key(value))
    }

    pub fn canonical_terms(&self, kind: EntityKind) -> &[String] {
        self.cats
            .get(&kind)
            .map(|c| c.canonical.as_slice())
            .unwrap_or(&[])
    }

    pub fn count(&self, kind: EntityKind) -> usize {
        self.canonical_terms(kind).len()
    }

    /// Canonical counts for all nine categories, in fixed kind order.
    pub fn counts(&self) -> [usize; 9] {
        let mut out = [0usize; 9];
        for (i, kind) in EntityKind::ALL.into_iter().enumerate() {
            out[i] = self.count(kind);
        }
        out
    }

    /// Normalized match against canonical terms; returns the stored form.
    pub fn match_canonical(&self, kind: EntityKind, value: &str) -> Option<&str> {
        let cat = self.cats.get(&kind)?;
        let idx = *cat.by_norm.get(&normalize_term(value))?;
        Some(&cat.canonical[idx])
    }

    /// Normalized match against the synonym map; returns the canonical form.
    pub fn match_synonym(&self, kind: EntityKind, value: &str) -> Option<&str> {
        let cat = self.cats.get(&kind)?;
        let idx = *cat.syn_norm.get(&normalize_term(value))?;
        Some(&cat.canonical[idx])
    }
}
