//! Deterministic program-to-token-sequence serialization.
//!
//! The symbol table is laid out so that identical vocabularies always yield
//! identical token ids: special tokens first (BOS, EOS, the per-command
//! separator, one marker per role), then canonical terms grouped by category
//! in the fixed [`EntityKind`] order, then variable tokens `h1..hN` and
//! `out`.
//!
//! A command is emitted as
//! `action-term, input args, (role-marker, values)*, output-var` and
//! commands are joined with the separator token, the whole sequence wrapped
//! in BOS/EOS. Detokenization is an exact inverse on sequences produced by
//! [`tokenize_program`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ArgRef, Command, Entity, EntityKind, Program, Role, Vocabulary};

/// Default number of `h` variable tokens in a symbol table.
pub const DEFAULT_MAX_VARS: usize = 64;

/// A tokenized program: integer ids into a [`SymbolTable`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub ids: Vec<u32>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Decoded meaning of a single token id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok<'a> {
    Bos,
    Eos,
    Sep,
    Role(Role),
    Term(EntityKind, &'a str),
    /// Variable token `h{n}` (`n >= 1`).
    Var(usize),
    Out,
}

/// Fixed mapping between program symbols and token ids for one vocabulary.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    terms: Vec<(EntityKind, String)>,
    term_ids: HashMap<(EntityKind, String), u32>,
    term_base: u32,
    var_base: u32,
    max_vars: usize,
}

const BOS: u32 = 0;
const EOS: u32 = 1;
const SEP: u32 = 2;
const ROLE_BASE: u32 = 3;
const NUM_SPECIAL: u32 = ROLE_BASE + Role::ALL.len() as u32;

impl SymbolTable {
    pub fn new(vocab: &Vocabulary, max_vars: usize) -> Self {
        let mut terms = Vec::new();
        let mut term_ids = HashMap::new();
        for kind in EntityKind::ALL {
            for term in vocab.canonical_terms(kind) {
                let id = NUM_SPECIAL + terms.len() as u32;
                term_ids.insert((kind, term.clone()), id);
                terms.push((kind, term.clone()));
            }
        }
        let var_base = NUM_SPECIAL + terms.len() as u32;
        SymbolTable {
            terms,
            term_ids,
            term_base: NUM_SPECIAL,
            var_base,
            max_vars,
        }
    }

    /// Total number of token ids, i.e. the vocabulary size `V` of prediction
    /// matrices scored against sequences from this table.
    pub fn size(&self) -> usize {
        self.var_base as usize + self.max_vars + 1
    }

    pub fn max_vars(&self) -> usize {
        self.max_vars
    }

    pub fn bos(&self) -> u32 {
        BOS
    }

    pub fn eos(&self) -> u32 {
        EOS
    }

    pub fn sep(&self) -> u32 {
        SEP
    }

    pub fn role_id(&self, role: Role) -> u32 {
        ROLE_BASE + Role::ALL.iter().position(|r| *r == role).unwrap() as u32
    }

    pub fn term_id(&self, kind: EntityKind, value: &str) -> Option<u32> {
        self.term_ids.get(&(kind, value.to_string())).copied()
    }

    /// Token id of the variable named `h{n}` (`1 <= n <= max_vars`).
    pub fn var_id(&self, n: usize) -> Option<u32> {
        (n >= 1 && n <= self.max_vars).then(|| self.var_base + (n - 1) as u32)
    }

    pub fn out_id(&self) -> u32 {
        self.var_base + self.max_vars as u32
    }

    pub fn decode(&self, id: u32) -> Option<Tok<'_>> {
        match id {
            BOS => Some(Tok::Bos),
            EOS => Some(Tok::Eos),
            SEP => Some(Tok::Sep),
            _ if id < self.term_base => Some(Tok::Role(Role::ALL[(id - ROLE_BASE) as usize])),
            _ if id < self.var_base => {
                let (kind, term) = &self.terms[(id - self.term_base) as usize];
                Some(Tok::Term(*kind, term))
            }
            _ if id < self.out_id() => Some(Tok::Var((id - self.var_base) as usize + 1)),
            _ if id == self.out_id() => Some(Tok::Out),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenizeError {
    #[error("entity `{value}` ({kind}) is not canonical in the vocabulary")]
    UncanonicalizedEntity { kind: EntityKind, value: String },
    #[error("program needs {needed} variable tokens but the table has {max}")]
    TooManyVariables { needed: usize, max: usize },
    #[error("cannot tokenize an empty program")]
    EmptyProgram,
}

/// The first offending position in a malformed token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed token sequence at position {pos}: {what}")]
pub struct MalformedSequence {
    pub pos: usize,
    pub what: String,
}

fn term_token(table: &SymbolTable, e: &Entity) -> Result<u32, TokenizeError> {
    table
        .term_id(e.kind, &e.value)
        .ok_or_else(|| TokenizeError::UncanonicalizedEntity {
            kind: e.kind,
            value: e.value.clone(),
        })
}

/// Serialize a valid, fully canonicalized program into token ids.
///
/// Variable tokens are positional regardless of stored names, so two
/// structurally equal programs always tokenize identically.
pub fn tokenize_program(p: &Program, table: &SymbolTable) -> Result<TokenSeq, TokenizeError> {
    let len = p.commands.len();
    if len == 0 {
        return Err(TokenizeError::EmptyProgram);
    }
    if len - 1 > table.max_vars() {
        return Err(TokenizeError::TooManyVariables {
            needed: len - 1,
            max: table.max_vars(),
        });
    }
    let arg_token = |arg: &ArgRef| -> Result<u32, TokenizeError> {
        match arg {
            ArgRef::Literal(e) => term_token(table, e),
            // A reference to command j reads the variable it defines, h{j+1}.
            ArgRef::Var(j) => Ok(table.var_id(j + 1).expect("checked against max_vars")),
        }
    };
    let mut ids = vec![table.bos()];
    for (i, cmd) in p.commands.iter().enumerate() {
        if i > 0 {
            ids.push(table.sep());
        }
        ids.push(term_token(table, &cmd.action)?);
        for arg in &cmd.inputs {
            ids.push(arg_token(arg)?);
        }
        for role in Role::ALL {
            if let Some(args) = cmd.params.get(&role) {
                if args.is_empty() {
                    continue;
                }
                ids.push(table.role_id(role));
                for arg in args {
                    ids.push(arg_token(arg)?);
                }
            }
        }
        ids.push(if i == len - 1 {
            table.out_id()
        } else {
            table.var_id(i + 1).expect("checked against max_vars")
        });
    }
    ids.push(table.eos());
    Ok(TokenSeq { ids })
}

/// Exact inverse of [`tokenize_program`].
pub fn detokenize(t: &TokenSeq, table: &SymbolTable) -> Result<Program, MalformedSequence> {
    let err = |pos: usize, what: &str| MalformedSequence {
        pos,
        what: what.to_string(),
    };
    let ids = &t.ids;
    if ids.first() != Some(&table.bos()) {
        return Err(err(0, "sequence must start with BOS"));
    }
    if ids.last() != Some(&table.eos()) || ids.len() < 2 {
        return Err(err(
            ids.len().saturating_sub(1),
            "sequence must end with EOS",
        ));
    }
    let body = &ids[1..ids.len() - 1];
    if body.is_empty() {
        return Err(err(1, "sequence contains no command"));
    }
    if body.contains(&table.eos()) || body.contains(&table.bos()) {
        let pos = 1 + body
            .iter()
            .position(|&id| id == table.eos() || id == table.bos())
            .unwrap();
        return Err(err(pos, "unexpected BOS/EOS inside the sequence"));
    }

    // Split on separators; `offsets[k]` is the absolute index of slice k's
    // first token, for error positions.
    let mut slices: Vec<(usize, &[u32])> = Vec::new();
    let mut start = 0usize;
    for (i, &id) in body.iter().enumerate() {
        if id == table.sep() {
            slices.push((1 + start, &body[start..i]));
            start = i + 1;
        }
    }
    slices.push((1 + start, &body[start..]));

    let n = slices.len();
    let mut commands = Vec::with_capacity(n);
    for (ci, (offset, slice)) in slices.iter().enumerate() {
        if slice.len() < 2 {
            return Err(err(
                *offset,
                "command must have an action and an output variable",
            ));
        }
        let action = match table.decode(slice[0]) {
            Some(Tok::Term(EntityKind::Action, term)) => Entity::new(EntityKind::Action, term),
            _ => return Err(err(*offset, "expected an action term")),
        };
        // Final token of each command is its output variable; verify it is
        // the positional name.
        let out_pos = offset + slice.len() - 1;
        match table.decode(slice[slice.len() - 1]) {
            Some(Tok::Out) if ci == n - 1 => {}
            Some(Tok::Var(m)) if ci < n - 1 && m == ci + 1 => {}
            _ => return Err(err(out_pos, "wrong output variable for this position")),
        }

        let mut cmd = Command::new(action, Vec::new());
        let mut context: Option<Role> = None;
        for (k, &id) in slice[1..slice.len() - 1].iter().enumerate() {
            let pos = offset + 1 + k;
            match table.decode(id) {
                Some(Tok::Role(role)) => {
                    if cmd.params.contains_key(&role) {
                        return Err(err(pos, "duplicate role marker"));
                    }
                    cmd.params.insert(role, Vec::new());
                    context = Some(role);
                }
                Some(Tok::Term(kind, term)) => {
                    let expected = context.map(Role::kind).unwrap_or(EntityKind::Ingredient);
                    if kind != expected {
                        return Err(err(pos, "term kind does not match its slot"));
                    }
                    let arg = ArgRef::Literal(Entity::new(kind, term));
                    match context {
                        None => cmd.inputs.push(arg),
                        Some(role) => cmd.params.get_mut(&role).unwrap().push(arg),
                    }
                }
                Some(Tok::Var(m)) => {
                    let arg = ArgRef::Var(m - 1);
                    match context {
                        None => cmd.inputs.push(arg),
                        Some(role) => cmd.params.get_mut(&role).unwrap().push(arg),
                    }
                }
                Some(Tok::Out) => return Err(err(pos, "`out` used as an argument")),
                _ => return Err(err(pos, "unknown token id")),
            }
        }
        if cmd.params.values().any(|v| v.is_empty()) {
            return Err(err(out_pos, "role marker with no values"));
        }
        commands.push(cmd);
    }
    Ok(Program::normalized(commands))
}
