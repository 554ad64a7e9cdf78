//! Ingestion of word-level tagged recipes: split-and-merge parsing,
//! entity merging, taxonomy canonicalization, and program assembly.
//!
//! The input format is a JSON document
//! `{"recipe_id", "title", "sentences": [{"id", "words": [{"w", "tag"}]}],
//! "connections": [[producer_sentence_id, consumer_sentence_id]]}` where
//! `tag` is one of the nine category names exactly, or absent/null for
//! filler words. Connection endpoints are sentence ids and must be
//! occurrence-level: after splitting, a sentence holds exactly one action,
//! so a sentence id identifies an action occurrence. A connection into a
//! sentence that split into several units is ambiguous and is dropped with
//! a warning.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{ArgRef, Command, Entity, EntityKind, Program, ProgramMeta, Role, Vocabulary};

/// One word of a tagged sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedWord {
    #[serde(rename = "w")]
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<EntityKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub id: u32,
    pub words: Vec<TaggedWord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedRecipe {
    pub recipe_id: String,
    #[serde(default)]
    pub title: String,
    pub sentences: Vec<TaggedSentence>,
    /// (producer sentence id, consumer sentence id) pairs.
    #[serde(default)]
    pub connections: Vec<(u32, u32)>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("tagged recipe is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("sentence {sentence}: word {word} has an empty surface")]
    EmptyWord { sentence: u32, word: usize },
    #[error("duplicate sentence id {0}")]
    DuplicateSentenceId(u32),
}

impl TaggedRecipe {
    /// Parse and validate the JSON ingestion format. Unknown tag names are
    /// load errors (serde rejects them), as are empty words and duplicate
    /// sentence ids.
    pub fn from_json_str(text: &str) -> Result<Self, LoadError> {
        let recipe: TaggedRecipe = serde_json::from_str(text)?;
        let mut seen = std::collections::HashSet::new();
        for s in &recipe.sentences {
            if !seen.insert(s.id) {
                return Err(LoadError::DuplicateSentenceId(s.id));
            }
            for (i, w) in s.words.iter().enumerate() {
                if w.surface.is_empty() {
                    return Err(LoadError::EmptyWord {
                        sentence: s.id,
                        word: i,
                    });
                }
            }
        }
        Ok(recipe)
    }
}

/// Untagged words that may bridge two same-tag runs into one entity.
/// Commas and "and" are not connectors, so list separators break runs.
pub const CONNECTOR_WORDS: [&str; 5] = ["of", "the", "a", "an", "-"];

fn is_connector(word: &str) -> bool {
    CONNECTOR_WORDS.iter().any(|c| c.eq_ignore_ascii_case(word))
}

/// A merged same-tag run of words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRun {
    pub kind: EntityKind,
    /// Index of the run's first word in the sentence.
    pub start: usize,
    pub surface: String,
}

/// Merge maximal runs of same-tag words into entities. Untagged connector
/// words (`of`, `the`, `a`, `an`, `-`) may bridge a run; any other untagged
/// word ends it. Bridging words are kept in the merged surface, so
/// `clove of garlic` stays one ingredient.
pub fn merged_runs(words: &[TaggedWord]) -> Vec<EntityRun> {
    let mut runs: Vec<EntityRun> = Vec::new();
    let mut current: Option<(EntityKind, usize, Vec<&str>)> = None;
    let mut pending: Vec<&str> = Vec::new();

    for (i, w) in words.iter().enumerate() {
        match w.tag {
            Some(kind) => match current.as_mut() {
                Some((k, _, parts)) if *k == kind => {
                    parts.append(&mut pending);
                    parts.push(&w.surface);
                }
                _ => {
                    if let Some((k, start, parts)) = current.take() {
                        runs.push(EntityRun {
                            kind: k,
                            start,
                            surface: parts.join(" "),
                        });
                    }
                    pending.clear();
                    current = Some((kind, i, vec![&w.surface]));
                }
            },
            None => {
                if current.is_some() && is_connector(&w.surface) {
                    pending.push(&w.surface);
                } else {
                    if let Some((k, start, parts)) = current.take() {
                        runs.push(EntityRun {
                            kind: k,
                            start,
                            surface: parts.join(" "),
                        });
                    }
                    pending.clear();
                }
            }
        }
    }
    if let Some((k, start, parts)) = current {
        runs.push(EntityRun {
            kind: k,
            start,
            surface: parts.join(" "),
        });
    }
    runs
}

/// Merge one sentence into `(kind, surface)` entities.
pub fn merge_entities(s: &TaggedSentence) -> Vec<(EntityKind, String)> {
    merged_runs(&s.words)
        .into_iter()
        .map(|r| (r.kind, r.surface))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SplitWarning {
    /// A sentence with no action occurrence was dropped.
    DroppedSentence { sentence_id: u32 },
    /// A connection endpoint referenced a dropped sentence.
    DroppedConnection { producer: u32, consumer: u32 },
    /// A connection endpoint referenced a sentence that split into several
    /// action units, so the intended occurrence is ambiguous.
    AmbiguousConnection { producer: u32, consumer: u32 },
}

impl fmt::Display for SplitWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitWarning::DroppedSentence { sentence_id } => {
                write!(f, "sentence {sentence_id} has no action and was dropped")
            }
            SplitWarning::DroppedConnection { producer, consumer } => write!(
                f,
                "connection ({producer}, {consumer}) references a dropped sentence"
            ),
            SplitWarning::AmbiguousConnection { producer, consumer } => write!(
                f,
                "connection ({producer}, {consumer}) references a sentence that split; occurrence is ambiguous"
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub recipe: TaggedRecipe,
    pub warnings: Vec<SplitWarning>,
}

/// Split every sentence that contains more than one action occurrence so
/// that each output sentence contains exactly one. Boundaries fall
/// immediately before each subsequent action occurrence. Sentences with no
/// action are dropped with a warning. The first unit keeps the sentence id;
/// later units receive fresh ids above the recipe's maximum, in document
/// order, and connection endpoints are remapped accordingly.
pub fn split_sentences(r: &TaggedRecipe) -> SplitOutcome {
    let mut warnings = Vec::new();
    let mut next_id: u32 = r.sentences.iter().map(|s| s.id).max().map_or(0, |m| m + 1);
    let mut sentences: Vec<TaggedSentence> = Vec::new();
    // Sentence id -> how many units it produced.
    let mut unit_count: HashMap<u32, usize> = HashMap::new();
    let mut dropped: Vec<u32> = Vec::new();

    for s in &r.sentences {
        let action_starts: Vec<usize> = merged_runs(&s.words)
            .into_iter()
            .filter(|run| run.kind == EntityKind::Action)
            .map(|run| run.start)
            .collect();
        match action_starts.len() {
            0 => {
                warnings.push(SplitWarning::DroppedSentence { sentence_id: s.id });
                dropped.push(s.id);
            }
            1 => {
                unit_count.insert(s.id, 1);
                sentences.push(s.clone());
            }
            k => {
                unit_count.insert(s.id, k);
                let mut bounds: Vec<usize> = vec![0];
                bounds.extend(action_starts[1..].iter().copied());
                bounds.push(s.words.len());
                for (u, window) in bounds.windows(2).enumerate() {
                    let id = if u == 0 {
                        s.id
                    } else {
                        let id = next_id;
                        next_id += 1;
                        id
                    };
                    sentences.push(TaggedSentence {
                        id,
                        words: s.words[window[0]..window[1]].to_vec(),
                    });
                }
            }
        }
    }

    let mut connections = Vec::new();
    for &(producer, consumer) in &r.connections {
        if dropped.contains(&producer) || dropped.contains(&consumer) {
            warnings.push(SplitWarning::DroppedConnection { producer, consumer });
            continue;
        }
        let ambiguous = |id: u32| unit_count.get(&id).copied().unwrap_or(1) > 1;
        if ambiguous(producer) || ambiguous(consumer) {
            warnings.push(SplitWarning::AmbiguousConnection { producer, consumer });
            continue;
        }
        connections.push((producer, consumer));
    }

    SplitOutcome {
        recipe: TaggedRecipe {
            recipe_id: r.recipe_id.clone(),
            title: r.title.clone(),
            sentences,
            connections,
        },
        warnings,
    }
}

/// How an entity was matched during canonicalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonStatus {
    /// Already a canonical term (up to case/whitespace).
    Canonical,
    /// Replaced through the synonym map.
    Synonym,
    /// Not in the vocabulary; value left unchanged.
    Unmatched,
}

/// Map an entity's value onto the fixed vocabulary: exact canonical match
/// first, then the synonym map, both case/whitespace-normalized. Unknown
/// values are returned unchanged and flagged, never rejected. Idempotent.
pub fn canonicalize(e: &Entity, v: &Vocabulary) -> (Entity, CanonStatus) {
    if let Some(canonical) = v.match_canonical(e.kind, &e.value) {
        return (
            Entity::with_raw(e.kind, canonical, e.raw.clone()),
            CanonStatus::Canonical,
        );
    }
    if let Some(canonical) = v.match_synonym(e.kind, &e.value) {
        return (
            Entity::with_raw(e.kind, canonical, e.raw.clone()),
            CanonStatus::Synonym,
        );
    }
    (e.clone(), CanonStatus::Unmatched)
}

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("sentence {sentence_id} holds {occurrences} action occurrences; run split first")]
    NotSplit {
        sentence_id: u32,
        occurrences: usize,
    },
    #[error("connection ({producer}, {consumer}) references an unknown sentence")]
    UnknownEndpoint { producer: u32, consumer: u32 },
    #[error("connections form a cycle through sentence {0}")]
    CyclicConnections(u32),
    #[error(
        "connection ({producer}, {consumer}) points from a later to an earlier sentence; \
         document order would not be a valid execution order"
    )]
    ForwardConnection { producer: u32, consumer: u32 },
}

/// An entity left uncanonicalized during assembly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UncanonicalizedEntity {
    pub sentence_id: u32,
    pub kind: EntityKind,
    pub value: String,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub program: Program,
    pub uncanonicalized: Vec<UncanonicalizedEntity>,
}

/// Build the final program from an already-split recipe: one command per
/// sentence in document order, entities attached by tag kind, and each
/// connection `(a, b)` realized as command `b` consuming `a`'s output
/// variable. Variable inputs come first in ascending producer order, then
/// ingredient literals in sentence order. Output-tagged entities become
/// command metadata. All entities are canonicalized against `v`; misses are
/// reported, not fatal.
pub fn assemble_program(r: &TaggedRecipe, v: &Vocabulary) -> Result<Assembled, AssembleError> {
    let mut position: HashMap<u32, usize> = HashMap::new();
    for (i, s) in r.sentences.iter().enumerate() {
        position.insert(s.id, i);
    }
    for &(producer, consumer) in &r.connections {
        let (Some(&p), Some(&c)) = (position.get(&producer), position.get(&consumer)) else {
            return Err(AssembleError::UnknownEndpoint { producer, consumer });
        };
        if p == c {
            return Err(AssembleError::CyclicConnections(producer));
        }
        if p > c {
            return Err(AssembleError::ForwardConnection { producer, consumer });
        }
    }

    // Var inputs per consumer position, ascending producer position.
    let mut var_inputs: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(producer, consumer) in &r.connections {
        var_inputs
            .entry(position[&consumer])
            .or_default()
            .push(position[&producer]);
    }
    for producers in var_inputs.values_mut() {
        producers.sort_unstable();
        producers.dedup();
    }

    let mut uncanonicalized = Vec::new();
    let mut commands = Vec::with_capacity(r.sentences.len());
    for (i, s) in r.sentences.iter().enumerate() {
        let runs = merged_runs(&s.words);
        let action_count = runs.iter().filter(|r| r.kind == EntityKind::Action).count();
        if action_count != 1 {
            return Err(AssembleError::NotSplit {
                sentence_id: s.id,
                occurrences: action_count,
            });
        }
        let mut canon = |kind: EntityKind, surface: &str| -> Entity {
            let (entity, status) = canonicalize(&Entity::new(kind, surface), v);
            if status == CanonStatus::Unmatched {
                uncanonicalized.push(UncanonicalizedEntity {
                    sentence_id: s.id,
                    kind,
                    value: surface.to_string(),
                });
            }
            entity
        };

        let action_run = runs
            .iter()
            .find(|r| r.kind == EntityKind::Action)
            .expect("one action occurrence checked above");
        let mut cmd = Command::new(canon(EntityKind::Action, &action_run.surface), Vec::new());
        if let Some(producers) = var_inputs.get(&i) {
            cmd.inputs = producers.iter().map(|&p| ArgRef::Var(p)).collect();
        }
        for run in &runs {
            match run.kind {
                EntityKind::Action => {}
                EntityKind::Ingredient => {
                    let e = canon(EntityKind::Ingredient, &run.surface);
                    cmd.inputs.push(ArgRef::Literal(e));
                }
                EntityKind::Output => {
                    cmd.output_tags
                        .push(canon(EntityKind::Output, &run.surface));
                }
                EntityKind::Tool => {
                    let e = canon(run.kind, &run.surface);
                    cmd.push_param(Role::Tool, ArgRef::Literal(e));
                }
                EntityKind::Quantity => {
                    let e = canon(run.kind, &run.surface);
                    cmd.push_param(Role::Quantity, ArgRef::Literal(e));
                }
                EntityKind::Time => {
                    let e = canon(run.kind, &run.surface);
                    cmd.push_param(Role::Time, ArgRef::Literal(e));
                }
                EntityKind::Temperature => {
                    let e = canon(run.kind, &run.surface);
                    cmd.push_param(Role::Temp, ArgRef::Literal(e));
                }
                EntityKind::How => {
                    let e = canon(run.kind, &run.surface);
                    cmd.push_param(Role::How, ArgRef::Literal(e));
                }
                EntityKind::Why => {
                    let e = canon(run.kind, &run.surface);
                    cmd.push_param(Role::Why, ArgRef::Literal(e));
                }
            }
        }
        commands.push(cmd);
    }

    let program = Program::normalized(commands).with_metadata(ProgramMeta {
        id: Some(r.recipe_id.clone()),
        title: (!r.title.is_empty()).then(|| r.title.clone()),
    });
    Ok(Assembled {
        program,
        uncanonicalized,
    })
}
