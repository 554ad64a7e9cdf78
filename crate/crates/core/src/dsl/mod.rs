//! Concrete syntax for cooking programs.
//!
//! Grammar (LL(1), `#` comments run to end of line):
//!
//! ```text
//! program := stmt+
//! stmt    := ident "=" action "(" args? ")" ";"
//! action  := bareword | quoted-string
//! args    := arg ("," arg)*
//! arg     := value | role "=" value
//! value   := bareword | quoted-string
//! ```
//!
//! An unquoted positional or role value that names the output of an earlier
//! statement (or matches the positional patterns `h<digits>` / a defined
//! `out`) is a variable reference; quoted values are always literals.
//! Canonical printing renames variables positionally (`h1..h{L-1}`, `out`),
//! emits one statement per line with roles in the fixed order
//! `tool, quantity, time, temp, how, why`, and single-quotes any value that
//! is not a plain bareword. `parse_program(print_program(p)) == p` for every
//! program built through the positional-name constructors, and printing the
//! parse of canonical text returns the same text.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{positional_var_name, ArgRef, Command, Entity, EntityKind, Program, Role};

/// A 1-based location of a token in source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{span}: {message} (expected {expected})")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: String,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

fn is_bare_start(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_bare_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '%' | '/')
}

fn is_bareword(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if is_bare_start(c) => {}
        _ => return false,
    }
    chars.all(is_bare_continue)
}

/// `h1`, `h2`, ... (no leading zeros, so `h01` is an ordinary bareword).
fn positional_var_index(s: &str) -> Option<usize> {
    let digits = s.strip_prefix('h')?;
    if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<usize>().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Ident,
    Quoted,
    Eq,
    LParen,
    RParen,
    Comma,
    Semi,
    Eof,
}

impl TokKind {
    fn describe(self) -> &'static str {
        match self {
            TokKind::Ident => "identifier",
            TokKind::Quoted => "quoted string",
            TokKind::Eq => "`=`",
            TokKind::LParen => "`(`",
            TokKind::RParen => "`)`",
            TokKind::Comma => "`,`",
            TokKind::Semi => "`;`",
            TokKind::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    /// Unescaped text for `Quoted`, raw text otherwise.
    text: String,
    span: SourceSpan,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
    /// Position of the last consumed character; the EOF token points here
    /// so that every error span stays inside the input text.
    last_pos: (usize, usize),
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
            last_pos: (1, 1),
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.last_pos = (self.line, self.column);
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span_here(&self, length: usize) -> SourceSpan {
        SourceSpan {
            line: self.line,
            column: self.column,
            length: length.max(1),
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut tokens = Vec::new();
        loop {
            match self.chars.peek().copied() {
                None => {
                    tokens.push(Token {
                        kind: TokKind::Eof,
                        text: String::new(),
                        span: SourceSpan {
                            line: self.last_pos.0,
                            column: self.last_pos.1,
                            length: 1,
                        },
                    });
                    return Ok(tokens);
                }
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('#') => {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('\'') => {
                    let span_start = self.span_here(1);
                    self.bump();
                    let mut text = String::new();
                    loop {
                        match self.bump() {
                            None => {
                                return Err(ParseError {
                                    span: span_start,
                                    message: "unterminated quoted value".to_string(),
                                    expected: "closing `'`".to_string(),
                                })
                            }
                            Some('\'') => break,
                            Some('\\') => match self.bump() {
                                Some('\\') => text.push('\\'),
                                Some('\'') => text.push('\''),
                                Some('n') => text.push('\n'),
                                Some('r') => text.push('\r'),
                                Some('t') => text.push('\t'),
                                other => {
                                    return Err(ParseError {
                                        span: self.span_here(1),
                                        message: format!(
                                            "invalid escape `\\{}`",
                                            other.map(String::from).unwrap_or_default()
                                        ),
                                        expected: "one of `\\\\`, `\\'`, `\\n`, `\\r`, `\\t`"
                                            .to_string(),
                                    })
                                }
                            },
                            Some(c) => text.push(c),
                        }
                    }
                    tokens.push(Token {
                        kind: TokKind::Quoted,
                        text,
                        span: span_start,
                    });
                }
                Some(c) if is_bare_start(c) => {
                    let span = self.span_here(1);
                    let mut text = String::new();
                    text.push(c);
                    self.bump();
                    while let Some(&c) = self.chars.peek() {
                        if is_bare_continue(c) {
                            text.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    tokens.push(Token {
                        kind: TokKind::Ident,
                        span: SourceSpan {
                            length: text.chars().count(),
                            ..span
                        },
                        text,
                    });
                }
                Some(c) => {
                    let kind = match c {
                        '=' => TokKind::Eq,
                        '(' => TokKind::LParen,
                        ')' => TokKind::RParen,
                        ',' => TokKind::Comma,
                        ';' => TokKind::Semi,
                        _ => {
                            return Err(ParseError {
                                span: self.span_here(1),
                                message: format!("unexpected character `{c}`"),
                                expected: "a statement token".to_string(),
                            })
                        }
                    };
                    let span = self.span_here(1);
                    self.bump();
                    tokens.push(Token {
                        kind,
                        text: c.to_string(),
                        span,
                    });
                }
            }
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Output variable name -> defining statement index.
    defined: HashMap<String, usize>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek2(&self) -> &Token {
        &self.tokens[(self.pos + 1).min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: TokKind) -> Result<Token, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            let t = self.peek();
            Err(ParseError {
                span: t.span,
                message: format!("unexpected {}", t.kind.describe()),
                expected: kind.describe().to_string(),
            })
        }
    }

    /// Resolve an unquoted value to a variable reference or an entity
    /// literal of `kind`.
    fn resolve_bareword(&self, word: &str, kind: EntityKind) -> ArgRef {
        if let Some(&idx) = self.defined.get(word) {
            return ArgRef::Var(idx);
        }
        if let Some(n) = positional_var_index(word) {
            return ArgRef::Var(n - 1);
        }
        ArgRef::Literal(Entity::new(kind, word))
    }

    fn parse_value(&mut self, kind: EntityKind) -> Result<ArgRef, ParseError> {
        let t = self.peek().clone();
        match t.kind {
            TokKind::Ident => {
                self.advance();
                Ok(self.resolve_bareword(&t.text, kind))
            }
            TokKind::Quoted => {
                self.advance();
                if t.text.is_empty() {
                    return Err(ParseError {
                        span: t.span,
                        message: "empty quoted value".to_string(),
                        expected: "a non-empty value".to_string(),
                    });
                }
                Ok(ArgRef::Literal(Entity::new(kind, t.text)))
            }
            _ => Err(ParseError {
                span: t.span,
                message: format!("unexpected {}", t.kind.describe()),
                expected: "a value".to_string(),
            }),
        }
    }

    fn parse_arg(&mut self, cmd: &mut Command) -> Result<(), ParseError> {
        let t = self.peek().clone();
        if t.kind == TokKind::Ident && self.peek2().kind == TokKind::Eq {
            let Some(role) = Role::from_keyword(&t.text) else {
                return Err(ParseError {
                    span: t.span,
                    message: format!("unknown role keyword `{}`", t.text),
                    expected: "one of tool, quantity, time, temp, how, why".to_string(),
                });
            };
            self.advance();
            self.advance();
            let value = self.parse_value(role.kind())?;
            cmd.push_param(role, value);
        } else {
            let value = self.parse_value(EntityKind::Ingredient)?;
            cmd.inputs.push(value);
        }
        Ok(())
    }

    fn parse_stmt(&mut self, index: usize) -> Result<Command, ParseError> {
        let name = self.expect(TokKind::Ident)?;
        if let Some(&first) = self.defined.get(&name.text) {
            return Err(ParseError {
                span: name.span,
                message: format!(
                    "duplicate variable definition `{}` (first defined by statement {})",
                    name.text, first
                ),
                expected: "a fresh variable name".to_string(),
            });
        }
        self.expect(TokKind::Eq)?;
        let action = {
            let t = self.peek().clone();
            match t.kind {
                TokKind::Ident | TokKind::Quoted => {
                    self.advance();
                    if t.text.is_empty() {
                        return Err(ParseError {
                            span: t.span,
                            message: "empty action name".to_string(),
                            expected: "an action name".to_string(),
                        });
                    }
                    Entity::new(EntityKind::Action, t.text)
                }
                _ => {
                    return Err(ParseError {
                        span: t.span,
                        message: format!("unexpected {}", t.kind.describe()),
                        expected: "an action name".to_string(),
                    })
                }
            }
        };
        self.expect(TokKind::LParen)?;
        let mut cmd = Command::new(action, Vec::new());
        if self.peek().kind != TokKind::RParen {
            loop {
                self.parse_arg(&mut cmd)?;
                match self.peek().kind {
                    TokKind::Comma => {
                        self.advance();
                    }
                    TokKind::RParen => break,
                    _ => {
                        let t = self.peek();
                        return Err(ParseError {
                            span: t.span,
                            message: format!("unexpected {}", t.kind.describe()),
                            expected: "`,` or `)`".to_string(),
                        });
                    }
                }
            }
        }
        self.expect(TokKind::RParen)?;
        self.expect(TokKind::Semi)?;
        cmd.output_var = name.text.clone();
        self.defined.insert(name.text, index);
        Ok(cmd)
    }
}

/// Parse source text into a program. Statement output names are kept as
/// written so that naming violations (a missing or misplaced `out`) remain
/// visible to `validate_program`; parsing itself only rejects syntax errors
/// and duplicate variable definitions.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        defined: HashMap::new(),
    };
    if parser.peek().kind == TokKind::Eof {
        return Err(ParseError {
            span: parser.peek().span,
            message: "empty input".to_string(),
            expected: "at least one statement".to_string(),
        });
    }
    let mut commands = Vec::new();
    while parser.peek().kind != TokKind::Eof {
        let cmd = parser.parse_stmt(commands.len())?;
        commands.push(cmd);
    }
    Ok(Program::new(commands))
}

fn quote_value(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Quote unless the value survives a parse round-trip as a bareword: it must
/// lex as a single bareword and must not capture as a variable reference.
fn format_value(s: &str) -> String {
    if is_bareword(s) && positional_var_index(s).is_none() && s != "out" {
        s.to_string()
    } else {
        quote_value(s)
    }
}

fn format_action(s: &str) -> String {
    if is_bareword(s) {
        s.to_string()
    } else {
        quote_value(s)
    }
}

fn format_arg(arg: &ArgRef) -> String {
    match arg {
        ArgRef::Literal(e) => format_value(&e.value),
        // References always print as h-names; `out` never appears as an
        // argument (a reference to the last command is invalid anyway).
        ArgRef::Var(j) => format!("h{}", j + 1),
    }
}

/// Canonical pretty-printer: one statement per line, positional variable
/// names, fixed role order, multi-word values single-quoted. Does not
/// require validity, only structural completeness.
pub fn print_program(p: &Program) -> String {
    let len = p.commands.len();
    let mut lines = Vec::with_capacity(len);
    for (i, cmd) in p.commands.iter().enumerate() {
        let mut parts: Vec<String> = cmd.inputs.iter().map(format_arg).collect();
        for role in Role::ALL {
            if let Some(args) = cmd.params.get(&role) {
                for arg in args {
                    parts.push(format!("{}={}", role.keyword(), format_arg(arg)));
                }
            }
        }
        lines.push(format!(
            "{} = {}({});",
            positional_var_name(i, len),
            format_action(&cmd.action.value),
            parts.join(", ")
        ));
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::validate_program;

    #[test]
    fn parses_bake_and_serve() {
        let text = "h1 = Bake(chicken, tool=oven, time='10 minutes', temp='400 degrees F');\nout = Serve(h1);";
        let p = parse_program(text).unwrap();
        assert_eq!(p.commands.len(), 2);
        assert_eq!(p.commands[0].action.value, "Bake");
        assert_eq!(
            p.commands[0].params[&Role::Time],
            vec![ArgRef::Literal(Entity::new(EntityKind::Time, "10 minutes"))]
        );
        assert_eq!(p.commands[1].inputs, vec![ArgRef::Var(0)]);
        assert!(validate_program(&p).is_valid());
        assert_eq!(print_program(&p), text);
    }

    #[test]
    fn empty_input_is_an_error() {
        let err = parse_program("").unwrap_err();
        assert_eq!(err.message, "empty input");
        let err = parse_program("  # just a comment\n").unwrap_err();
        assert_eq!(err.message, "empty input");
    }

    #[test]
    fn parser_and_validator_are_separate() {
        let p = parse_program("out = Mix(h1);").unwrap();
        assert_eq!(p.commands[0].inputs, vec![ArgRef::Var(0)]);
        let report = validate_program(&p);
        assert!(!report.is_valid());
    }

    #[test]
    fn unknown_role_keyword() {
        let err = parse_program("out = Bake(chicken, speed=fast);").unwrap_err();
        assert!(err.message.contains("unknown role keyword"));
        assert_eq!(err.span.line, 1);
        assert_eq!(err.span.column, 21);
    }

    #[test]
    fn missing_equals() {
        let err = parse_program("out Bake(chicken);").unwrap_err();
        assert_eq!(err.expected, "`=`");
    }

    #[test]
    fn unbalanced_parens() {
        let err = parse_program("out = Bake(chicken;").unwrap_err();
        assert_eq!(err.expected, "`,` or `)`");
    }

    #[test]
    fn duplicate_definition_is_a_parse_error() {
        let err = parse_program("h1 = Boil(water);\nh1 = Stir(salt);").unwrap_err();
        assert!(err.message.contains("duplicate variable definition"));
        assert_eq!(err.span.line, 2);
    }

    #[test]
    fn unterminated_quote() {
        let err = parse_program("out = Boil('water);").unwrap_err();
        assert!(err.message.contains("unterminated"));
    }

    #[test]
    fn single_command_prints_plainly() {
        let p = parse_program("out = Boil(water);").unwrap();
        assert_eq!(print_program(&p), "out = Boil(water);");
    }

    #[test]
    fn escapes_round_trip() {
        let value = "it's a 'test' \\ with\nnewline";
        let p = Program::normalized(vec![Command::new(
            Entity::new(EntityKind::Action, "Boil"),
            vec![ArgRef::Literal(Entity::new(EntityKind::Ingredient, value))],
        )]);
        let printed = print_program(&p);
        let reparsed = parse_program(&printed).unwrap();
        assert_eq!(reparsed, p);
    }

    #[test]
    fn source_names_resolve_before_position_patterns() {
        // `h3` names statement 0 here, so the reference resolves to index 0.
        let p = parse_program("h3 = Boil(water);\nout = Serve(h3);").unwrap();
        assert_eq!(p.commands[1].inputs, vec![ArgRef::Var(0)]);
        // Unknown h-names fall back to their positional index.
        let q = parse_program("h1 = Boil(water);\nout = Serve(h9);").unwrap();
        assert_eq!(q.commands[1].inputs, vec![ArgRef::Var(8)]);
    }

    #[test]
    fn var_like_literals_are_quoted_when_printed() {
        let p = Program::normalized(vec![Command::new(
            Entity::new(EntityKind::Action, "Boil"),
            vec![ArgRef::Literal(Entity::new(EntityKind::Ingredient, "h1"))],
        )]);
        let printed = print_program(&p);
        assert_eq!(printed, "out = Boil('h1');");
        assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn role_values_can_reference_variables() {
        let p = parse_program("h1 = Boil(water);\nout = Serve(rice, how=h1);").unwrap();
        assert_eq!(p.commands[1].params[&Role::How], vec![ArgRef::Var(0)]);
        assert_eq!(
            print_program(&p),
            "h1 = Boil(water);\nout = Serve(rice, how=h1);"
        );
    }

    #[test]
    fn comments_and_whitespace_are_skipped() {
        let text = "# provenance note\nout   =  Boil( water ) ;  # trailing\n";
        let p = parse_program(text).unwrap();
        assert_eq!(print_program(&p), "out = Boil(water);");
    }

    #[test]
    fn multi_word_actions_round_trip() {
        let p = Program::normalized(vec![Command::new(
            Entity::new(EntityKind::Action, "stir in"),
            vec![ArgRef::Literal(Entity::new(EntityKind::Ingredient, "salt"))],
        )]);
        let printed = print_program(&p);
        assert_eq!(printed, "out = 'stir in'(salt);");
        assert_eq!(parse_program(&printed).unwrap(), p);
    }

    #[test]
    fn roles_print_in_fixed_order() {
        let text = "out = Bake(chicken, why=flavor, time='1 hour', tool=oven);";
        let p = parse_program(text).unwrap();
        assert_eq!(
            print_program(&p),
            "out = Bake(chicken, tool=oven, time='1 hour', why=flavor);"
        );
    }
}
