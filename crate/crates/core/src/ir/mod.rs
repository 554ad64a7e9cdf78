//! The program intermediate representation and its well-formedness rules.
//!
//! Programs are sequences of [`Command`]s. Variable naming is positional:
//! command `i` of an `L`-command program defines `h{i+1}`, except the last
//! command, which defines `out`. [`Program::normalized`] applies that naming;
//! [`Program::new`] preserves whatever names the caller (e.g. the parser)
//! supplies so that naming violations stay observable to [`validate_program`].

mod token;
mod vocab;

pub use token::{
    detokenize, tokenize_program, MalformedSequence, SymbolTable, Tok, TokenSeq, TokenizeError,
    DEFAULT_MAX_VARS,
};
pub use vocab::{CategoryDoc, VocabError, Vocabulary};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The nine entity categories of the program scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Action,
    Ingredient,
    Tool,
    Quantity,
    Temperature,
    Time,
    How,
    Why,
    Output,
}

impl EntityKind {
    /// All kinds in their fixed order (used for token-table layout and
    /// vocabulary iteration).
    pub const ALL: [EntityKind; 9] = [
        EntityKind::Action,
        EntityKind::Ingredient,
        EntityKind::Tool,
        EntityKind::Quantity,
        EntityKind::Temperature,
        EntityKind::Time,
        EntityKind::How,
        EntityKind::Why,
        EntityKind::Output,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Action => "Action",
            EntityKind::Ingredient => "Ingredient",
            EntityKind::Tool => "Tool",
            EntityKind::Quantity => "Quantity",
            EntityKind::Temperature => "Temperature",
            EntityKind::Time => "Time",
            EntityKind::How => "How",
            EntityKind::Why => "Why",
            EntityKind::Output => "Output",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown entity kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for EntityKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// Keyword parameter roles a command accepts, in canonical print order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Tool,
    Quantity,
    Time,
    Temp,
    How,
    Why,
}

impl Role {
    pub const ALL: [Role; 6] = [
        Role::Tool,
        Role::Quantity,
        Role::Time,
        Role::Temp,
        Role::How,
        Role::Why,
    ];

    /// The surface keyword used in the DSL (`tool=...`).
    pub fn keyword(self) -> &'static str {
        match self {
            Role::Tool => "tool",
            Role::Quantity => "quantity",
            Role::Time => "time",
            Role::Temp => "temp",
            Role::How => "how",
            Role::Why => "why",
        }
    }

    /// Entity kind a literal under this role must have.
    pub fn kind(self) -> EntityKind {
        match self {
            Role::Tool => EntityKind::Tool,
            Role::Quantity => EntityKind::Quantity,
            Role::Time => EntityKind::Time,
            Role::Temp => EntityKind::Temperature,
            Role::How => EntityKind::How,
            Role::Why => EntityKind::Why,
        }
    }

    pub fn from_keyword(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.keyword() == s)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A typed entity: a canonical (or still-raw) term plus its original surface
/// text.
///
/// `raw` is provenance only. Structural equality and hashing compare
/// `(kind, value)`, so a canonicalized entity equals a constructed one
/// regardless of the surface form it came from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub value: String,
    pub raw: String,
}

impl Entity {
    /// New entity whose surface text equals its value.
    ///
    /// Panics if `value` is empty.
    pub fn new(kind: EntityKind, value: impl Into<String>) -> Self {
        let value = value.into();
        assert!(!value.is_empty(), "entity value must be non-empty");
        Entity {
            kind,
            raw: value.clone(),
            value,
        }
    }

    pub fn with_raw(kind: EntityKind, value: impl Into<String>, raw: impl Into<String>) -> Self {
        let value = value.into();
        assert!(!value.is_empty(), "entity value must be non-empty");
        Entity {
            kind,
            value,
            raw: raw.into(),
        }
    }
}

impl PartialEq for Entity {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.value == other.value
    }
}

impl Eq for Entity {}

impl Hash for Entity {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.value.hash(state);
    }
}

/// An argument of a command: either an entity literal or a reference to the
/// output of the command at the given 0-based sequence position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgRef {
    Literal(Entity),
    Var(usize),
}

/// One function call: an action applied to inputs under role parameters.
///
/// `output_tags` holds Output-tagged annotation entities naming this
/// command's result (e.g. "dough"); they are metadata and excluded from
/// structural equality, printing, and tokenization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Command {
    pub action: Entity,
    pub inputs: Vec<ArgRef>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<Role, Vec<ArgRef>>,
    pub output_var: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output_tags: Vec<Entity>,
}

impl Command {
    pub fn new(action: Entity, inputs: Vec<ArgRef>) -> Self {
        Command {
            action,
            inputs,
            params: BTreeMap::new(),
            output_var: String::new(),
            output_tags: Vec::new(),
        }
    }

    /// Append a parameter value under `role`.
    pub fn push_param(&mut self, role: Role, arg: ArgRef) {
        self.params.entry(role).or_default().push(arg);
    }

    pub fn with_param(mut self, role: Role, arg: ArgRef) -> Self {
        self.push_param(role, arg);
        self
    }

    pub fn with_output_var(mut self, name: impl Into<String>) -> Self {
        self.output_var = name.into();
        self
    }

    /// All entity literals in inputs and params, in print order.
    pub fn literals(&self) -> impl Iterator<Item = &Entity> {
        let inputs = self.inputs.iter();
        let params = Role::ALL
            .into_iter()
            .filter_map(|r| self.params.get(&r))
            .flatten();
        inputs.chain(params).filter_map(|a| match a {
            ArgRef::Literal(e) => Some(e),
            ArgRef::Var(_) => None,
        })
    }

    /// Distinct producer indices consumed through `Var` references.
    pub fn var_refs(&self) -> Vec<usize> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let args = self.inputs.iter().chain(self.params.values().flatten());
        for arg in args {
            if let ArgRef::Var(j) = arg {
                if seen.insert(*j) {
                    out.push(*j);
                }
            }
        }
        out
    }
}

impl PartialEq for Command {
    fn eq(&self, other: &Self) -> bool {
        self.action == other.action
            && self.inputs == other.inputs
            && self.params == other.params
            && self.output_var == other.output_var
    }
}

impl Eq for Command {}

/// Recipe provenance attached to a program. Excluded from structural
/// equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// An ordered list of commands.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Program {
    pub commands: Vec<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<ProgramMeta>,
}

/// Positional variable name for the command at `index` in a program of
/// `len` commands: `h{index+1}`, or `out` for the last command.
pub fn positional_var_name(index: usize, len: usize) -> String {
    if len > 0 && index == len - 1 {
        "out".to_string()
    } else {
        format!("h{}", index + 1)
    }
}

/// True iff `order` is a permutation of `0..n`.
pub fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("order is not a permutation of 0..{expected_len}")]
pub struct NotAPermutation {
    pub expected_len: usize,
}

impl Program {
    /// A program with the commands exactly as given, names included.
    pub fn new(commands: Vec<Command>) -> Self {
        Program {
            commands,
            metadata: None,
        }
    }

    /// A program with positional variable names applied (`h1..h{L-1}`, `out`).
    pub fn normalized(mut commands: Vec<Command>) -> Self {
        let len = commands.len();
        for (i, cmd) in commands.iter_mut().enumerate() {
            cmd.output_var = positional_var_name(i, len);
        }
        Program {
            commands,
            metadata: None,
        }
    }

    pub fn with_metadata(mut self, meta: ProgramMeta) -> Self {
        self.metadata = Some(meta);
        self
    }

    pub fn len(&self) -> usize {
        self.commands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commands.is_empty()
    }

    /// Reorder commands by `order` (`order[k]` = original index of the
    /// command placed at position `k`), remapping `Var` references and
    /// re-applying positional names. The result is valid iff `order` is a
    /// linear extension of the program's dependency DAG.
    pub fn permuted(&self, order: &[usize]) -> Result<Program, NotAPermutation> {
        let n = self.commands.len();
        if !is_permutation(order, n) {
            return Err(NotAPermutation { expected_len: n });
        }
        let mut new_pos = vec![0usize; n];
        for (pos, &orig) in order.iter().enumerate() {
            new_pos[orig] = pos;
        }
        let remap = |arg: &ArgRef| match arg {
            ArgRef::Literal(e) => ArgRef::Literal(e.clone()),
            ArgRef::Var(j) => ArgRef::Var(new_pos[*j]),
        };
        let commands = order
            .iter()
            .map(|&orig| {
                let src = &self.commands[orig];
                let mut cmd =
                    Command::new(src.action.clone(), src.inputs.iter().map(remap).collect());
                for (role, args) in &src.params {
                    cmd.params.insert(*role, args.iter().map(remap).collect());
                }
                cmd.output_tags = src.output_tags.clone();
                cmd
            })
            .collect();
        let mut p = Program::normalized(commands);
        p.metadata = self.metadata.clone();
        Ok(p)
    }
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.commands == other.commands
    }
}

impl Eq for Program {}

/// Invariant violations reported by [`validate_program`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    UseBeforeDef,
    DuplicateVar,
    MissingOut,
    MisplacedOut,
    KindMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::UseBeforeDef => "use-before-def",
            ViolationKind::DuplicateVar => "duplicate-var",
            ViolationKind::MissingOut => "missing-out",
            ViolationKind::MisplacedOut => "misplaced-out",
            ViolationKind::KindMismatch => "kind-mismatch",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Offending command index; `None` for program-level problems.
    pub command: Option<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.command {
            Some(i) => write!(f, "command {}: {}: {}", i, self.kind, self.detail),
            None => write!(f, "{}: {}", self.kind, self.detail),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.diagnostics.is_empty() {
            return f.write_str("valid");
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Check every program invariant and report all violations.
///
/// A program is accepted iff a single left-to-right execution pass never
/// reads an undefined variable and ends by defining `out`. Kind mismatches
/// (e.g. a Tool literal in the ingredient slot) are diagnostics, not load
/// failures, so noisy annotation data stays inspectable.
pub fn validate_program(p: &Program) -> ValidationReport {
    let mut diags = Vec::new();
    let len = p.commands.len();

    for (i, cmd) in p.commands.iter().enumerate() {
        if cmd.action.kind != EntityKind::Action {
            diags.push(Diagnostic {
                command: Some(i),
                kind: ViolationKind::KindMismatch,
                detail: format!(
                    "action slot holds a {} entity `{}`",
                    cmd.action.kind, cmd.action.value
                ),
            });
        }
        for arg in &cmd.inputs {
            match arg {
                ArgRef::Literal(e) if e.kind != EntityKind::Ingredient => {
                    diags.push(Diagnostic {
                        command: Some(i),
                        kind: ViolationKind::KindMismatch,
                        detail: format!("input literal `{}` has kind {}", e.value, e.kind),
                    });
                }
                ArgRef::Var(j) if *j >= i => {
                    diags.push(Diagnostic {
                        command: Some(i),
                        kind: ViolationKind::UseBeforeDef,
                        detail: format!("consumes the output of command {j} before it is computed"),
                    });
                }
                _ => {}
            }
        }
        for (role, args) in &cmd.params {
            for arg in args {
                match arg {
                    ArgRef::Literal(e) if e.kind != role.kind() => {
                        diags.push(Diagnostic {
                            command: Some(i),
                            kind: ViolationKind::KindMismatch,
                            detail: format!("{role} parameter `{}` has kind {}", e.value, e.kind),
                        });
                    }
                    ArgRef::Var(j) if *j >= i => {
                        diags.push(Diagnostic {
                            command: Some(i),
                            kind: ViolationKind::UseBeforeDef,
                            detail: format!(
                                "consumes the output of command {j} before it is computed"
                            ),
                        });
                    }
                    _ => {}
                }
            }
        }
    }

    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (i, cmd) in p.commands.iter().enumerate() {
        if let Some(&first) = seen.get(cmd.output_var.as_str()) {
            diags.push(Diagnostic {
                command: Some(i),
                kind: ViolationKind::DuplicateVar,
                detail: format!(
                    "output variable `{}` already defined by command {first}",
                    cmd.output_var
                ),
            });
        } else {
            seen.insert(cmd.output_var.as_str(), i);
        }
    }

    let out_positions: Vec<usize> = p
        .commands
        .iter()
        .enumerate()
        .filter(|(_, c)| c.output_var == "out")
        .map(|(i, _)| i)
        .collect();
    if out_positions.is_empty() {
        diags.push(Diagnostic {
            command: None,
            kind: ViolationKind::MissingOut,
            detail: "no command defines `out`".to_string(),
        });
    } else {
        for &i in &out_positions {
            if i != len - 1 {
                diags.push(Diagnostic {
                    command: Some(i),
                    kind: ViolationKind::MisplacedOut,
                    detail: "`out` must be defined by the last command".to_string(),
                });
            }
        }
    }

    ValidationReport { diagnostics: diags }
}
