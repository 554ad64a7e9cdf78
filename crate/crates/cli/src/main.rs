//! `cookir`: command-line access to every stage of the cooking-program
//! pipeline.
//!
//! stdout carries data only (one structured document per invocation, or
//! program text for `fmt`/`assemble`/`canonicalize`); logs and warnings go
//! to stderr. Exit status 0 = success, 1 = domain error (invalid program,
//! cyclic graph, malformed input data), 2 = usage or I/O error.

use std::io::{BufRead, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cookir_core::annotate::{
    assemble_program, canonicalize, split_sentences, CanonStatus, TaggedRecipe,
};
use cookir_core::dsl::{parse_program, print_program};
use cookir_core::graph::{
    count_linear_extensions, function_subgraph, is_valid_sequence, linear_extensions, to_dot,
    to_graph, CookingGraph, FunctionDag, DEFAULT_ENUM_CAP,
};
use cookir_core::ir::{
    tokenize_program, validate_program, ArgRef, Command, EntityKind, Program, SymbolTable,
    Vocabulary, DEFAULT_MAX_VARS,
};
use cookir_core::losses::{
    cross_entropy, min_ce_over_candidates, total_loss, triplet_loss_with, EmbeddingBatch,
    LossWeights, PredictedSequence, TripletFormulation,
};
use cookir_core::matrix::Matrix;
use cookir_core::metrics::{
    graph_edit_distance, node_set_f1, retrieval_metrics, EditCostModel, GedMode, RetrievalReport,
};
use cookir_core::taxonomy::{
    build_vocabulary, iterative_merge_with, kmeans, FeatureTable, MergeProposal,
};

#[derive(Parser)]
#[command(
    name = "cookir",
    version,
    about = "Parse, print, graph, permute, assemble, and score cooking programs"
)]
struct Cli {
    /// Human-readable output instead of compact JSON
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse DSL text into validated IR and report diagnostics
    Parse {
        /// Program file, `-` for stdin; `---` lines separate programs
        file: String,
    },
    /// Reformat DSL text canonically
    Fmt { file: String },
    /// Lower a program to its cooking graph (JSON, or DOT with --dot)
    Graph {
        file: String,
        #[arg(long)]
        dot: bool,
        /// Collapse identical entity nodes in DOT output
        #[arg(long)]
        merge_entities: bool,
    },
    /// Enumerate or count the valid permutations of a program
    Perms {
        file: String,
        /// Only count, using the downset dynamic program
        #[arg(long)]
        count: bool,
        #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
        cap: usize,
    },
    /// Check whether an ordering respects a program's dependencies
    ValidateSeq {
        file: String,
        /// Comma-separated command indices, e.g. 2,0,1
        #[arg(long)]
        order: String,
    },
    /// Assemble a tagged recipe (JSON) into a program
    Assemble {
        file: String,
        #[arg(long)]
        vocab: String,
    },
    /// Canonicalize every entity of a program against a vocabulary
    Canonicalize {
        file: String,
        #[arg(long)]
        vocab: String,
    },
    /// Cluster term features into a vocabulary category
    Cluster {
        #[arg(long)]
        features: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Merge centroid pairs closer than this after clustering
        #[arg(long)]
        merge_threshold: Option<f64>,
        /// Ask per merge on stdin instead of accepting all
        #[arg(long)]
        confirm: bool,
        #[arg(long, value_enum, default_value_t = CategoryArg::Ingredient)]
        kind: CategoryArg,
    },
    /// Graph edit distance between two programs or graph files
    Ged {
        a: String,
        b: String,
        /// Exact best-first search (the default)
        #[arg(long, conflicts_with = "beam")]
        exact: bool,
        /// Beam width; upper bound instead of exact search
        #[arg(long)]
        beam: Option<usize>,
        /// JSON cost model file
        #[arg(long)]
        costs: Option<String>,
        /// Compare only function nodes and their edges
        #[arg(long)]
        function_dag: bool,
    },
    /// Node-set F1 between a predicted and a ground-truth program
    F1 {
        pred: String,
        gt: String,
        #[arg(long, value_enum)]
        kind: F1Kind,
        /// Canonicalize both programs first
        #[arg(long)]
        vocab: Option<String>,
    },
    /// Retrieval medR and recall@K over a similarity matrix
    Retrieval {
        sim: String,
        #[arg(long, default_value_t = 1000)]
        pool: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Comma-separated recall cutoffs
        #[arg(long, default_value = "1,5,10")]
        k: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Direction::I2r)]
        direction: Direction,
    },
    /// Loss kernels
    #[command(subcommand)]
    Loss(LossCmd),
}

#[derive(Subcommand)]
enum LossCmd {
    /// Bidirectional triplet ranking loss over embedding matrices
    Triplet {
        #[arg(long)]
        images: String,
        #[arg(long)]
        texts: String,
        #[arg(long, default_value_t = LossWeights::default().margin)]
        margin: f64,
        #[arg(long, value_enum, default_value_t = FormulationArg::Shared)]
        formulation: FormulationArg,
    },
    /// Cross-entropy of a prediction matrix against a target sequence
    Ce {
        /// T x V probability matrix
        #[arg(long)]
        pred: String,
        /// Target program file (tokenized with --vocab)
        #[arg(long, requires = "vocab", conflicts_with = "tokens")]
        program: Option<String>,
        /// Vocabulary for tokenizing --program
        #[arg(long)]
        vocab: Option<String>,
        /// Raw comma-separated token ids
        #[arg(long)]
        tokens: Option<String>,
        /// Variable-token budget of the symbol table
        #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
        max_vars: usize,
    },
    /// Minimum cross-entropy over all valid permutations of a program
    Mince {
        #[arg(long)]
        pred: String,
        #[arg(long)]
        program: String,
        #[arg(long)]
        vocab: String,
        #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
        cap: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VARS)]
        max_vars: usize,
    },
    /// Weighted total of the three loss components
    Total {
        #[arg(long)]
        ss: f64,
        #[arg(long)]
        pv: f64,
        #[arg(long)]
        pt: f64,
        #[arg(long, default_value_t = LossWeights::default().lambda_ss)]
        lambda_ss: f64,
        #[arg(long, default_value_t = LossWeights::default().lambda_pv)]
        lambda_pv: f64,
        #[arg(long, default_value_t = LossWeights::default().lambda_pt)]
        lambda_pt: f64,
    },
}

#[derive(ValueEnum, Clone, Copy)]
enum F1Kind {
    Ingredient,
    Action,
    Tool,
}

impl F1Kind {
    fn kind(self) -> EntityKind {
        match self {
            F1Kind::Ingredient => EntityKind::Ingredient,
            F1Kind::Action => EntityKind::Action,
            F1Kind::Tool => EntityKind::Tool,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum CategoryArg {
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

impl CategoryArg {
    fn kind(self) -> EntityKind {
        match self {
            CategoryArg::Action => EntityKind::Action,
            CategoryArg::Ingredient => EntityKind::Ingredient,
            CategoryArg::Tool => EntityKind::Tool,
            CategoryArg::Quantity => EntityKind::Quantity,
            CategoryArg::Temperature => EntityKind::Temperature,
            CategoryArg::Time => EntityKind::Time,
            CategoryArg::How => EntityKind::How,
            CategoryArg::Why => EntityKind::Why,
            CategoryArg::Output => EntityKind::Output,
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum Direction {
    /// Image queries against recipe candidates (rows are queries)
    I2r,
    /// Recipe queries against image candidates (transposed)
    R2i,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormulationArg {
    Shared,
    PerDirection,
}

#[derive(Debug)]
enum CliError {
    /// Invalid program, cyclic graph, malformed data: exit 1.
    Domain(String),
    /// Missing files, bad flags: exit 2.
    Usage(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

struct RunOutput {
    stdout: String,
    status: u8,
}

impl RunOutput {
    fn ok(stdout: String) -> Self {
        RunOutput { stdout, status: 0 }
    }
}

fn read_bytes(path: &str) -> Result<Vec<u8>, CliError> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?)
    }
}

fn read_text(path: &str) -> Result<String, CliError> {
    String::from_utf8(read_bytes(path)?)
        .map_err(|_| CliError::Usage(format!("{path} is not UTF-8 text")))
}

fn load_vocab(path: &str) -> Result<Vocabulary, CliError> {
    Vocabulary::from_json_str(&read_text(path)?).map_err(domain)
}

fn load_matrix(path: &str) -> Result<Matrix, CliError> {
    Matrix::from_bytes(&read_bytes(path)?).map_err(domain)
}

/// Split a program file on `---` separator lines.
fn split_documents(text: &str) -> Vec<String> {
    let mut docs = vec![String::new()];
    for line in text.lines() {
        if line.trim() == "---" {
            docs.push(String::new());
        } else {
            let doc = docs.last_mut().unwrap();
            doc.push_str(line);
            doc.push('\n');
        }
    }
    docs.into_iter().filter(|d| !d.trim().is_empty()).collect()
}

fn parse_documents(path: &str) -> Result<Vec<Program>, CliError> {
    let text = read_text(path)?;
    let docs = split_documents(&text);
    if docs.is_empty() {
        return Err(CliError::Domain("empty input".to_string()));
    }
    docs.iter()
        .enumerate()
        .map(|(i, doc)| {
            parse_program(doc).map_err(|e| CliError::Domain(format!("program {}: {e}", i + 1)))
        })
        .collect()
}

/// A graph argument is either a JSON graph document or DSL program text.
/// JSON graphs only need consistent ids and in-range edges; stricter
/// invariants (single sink, entity degrees) are not required for edit
/// distance.
fn load_graph(path: &str) -> Result<CookingGraph, CliError> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        let g: CookingGraph = serde_json::from_str(&text).map_err(domain)?;
        for (i, node) in g.nodes.iter().enumerate() {
            if node.id != i {
                return Err(CliError::Domain(format!(
                    "{path}: node ids must be dense and ordered (node {} at position {i})",
                    node.id
                )));
            }
        }
        if let Some(&(a, b)) = g
            .edges
            .iter()
            .find(|(a, b)| *a >= g.nodes.len() || *b >= g.nodes.len())
        {
            return Err(CliError::Domain(format!(
                "{path}: edge ({a}, {b}) references a missing node"
            )));
        }
        return Ok(g);
    }
    let p = parse_program(&text).map_err(domain)?;
    to_graph(&p).map_err(domain)
}

fn emit(value: serde_json::Value, pretty: bool) -> String {
    let mut text = if pretty {
        serde_json::to_string_pretty(&value).expect("JSON serializes")
    } else {
        serde_json::to_string(&value).expect("JSON serializes")
    };
    text.push('\n');
    text
}

fn seed_or_env(seed: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("COOKIR_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|_| CliError::Usage(format!("COOKIR_SEED is not a u64: `{text}`"))),
        Err(_) => Ok(0),
    }
}

fn parse_index_list(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("`{t}` is not an index")))
        })
        .collect()
}

fn canonicalize_program(p: &Program, vocab: &Vocabulary) -> (Program, Vec<String>) {
    fn canon_arg(arg: &ArgRef, vocab: &Vocabulary, misses: &mut Vec<String>) -> ArgRef {
        match arg {
            ArgRef::Literal(e) => {
                let (e2, status) = canonicalize(e, vocab);
                if status == CanonStatus::Unmatched {
                    misses.push(format!("{} `{}`", e.kind, e.value));
                }
                ArgRef::Literal(e2)
            }
            ArgRef::Var(j) => ArgRef::Var(*j),
        }
    }
    let mut misses = Vec::new();
    let mut commands = Vec::with_capacity(p.commands.len());
    for cmd in &p.commands {
        let (action, status) = canonicalize(&cmd.action, vocab);
        if status == CanonStatus::Unmatched {
            misses.push(format!("{} `{}`", cmd.action.kind, cmd.action.value));
        }
        let inputs = cmd
            .inputs
            .iter()
            .map(|a| canon_arg(a, vocab, &mut misses))
            .collect();
        let mut out = Command::new(action, inputs);
        for (role, args) in &cmd.params {
            let args: Vec<ArgRef> = args
                .iter()
                .map(|a| canon_arg(a, vocab, &mut misses))
                .collect();
            out.params.insert(*role, args);
        }
        out.output_var = cmd.output_var.clone();
        out.output_tags = cmd
            .output_tags
            .iter()
            .map(|t| canonicalize(t, vocab).0)
            .collect();
        commands.push(out);
    }
    let mut q = Program::new(commands);
    q.metadata = p.metadata.clone();
    (q, misses)
}

fn retrieval_table(report: &RetrievalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<10} {:>10}\n", "metric", "value"));
    out.push_str(&format!("{:<10} {:>10.2}\n", "medR", report.med_r));
    for (k, v) in &report.recall_at {
        out.push_str(&format!("{:<10} {:>10.2}\n", format!("R@{k}"), v));
    }
    out.push_str(&format!("{:<10} {:>10}\n", "pool", report.pool));
    out.push_str(&format!("{:<10} {:>10}\n", "trials", report.trials));
    out
}

fn run(cli: Cli) -> Result<RunOutput, CliError> {
    let pretty = cli.pretty;
    match cli.command {
        Cmd::Parse { file } => {
            let programs = parse_documents(&file)?;
            let mut any_invalid = false;
            let docs: Vec<serde_json::Value> = programs
                .iter()
                .map(|p| {
                    let report = validate_program(p);
                    any_invalid |= !report.is_valid();
                    serde_json::json!({
                        "program": p,
                        "valid": report.is_valid(),
                        "diagnostics": report.diagnostics,
                    })
                })
                .collect();
            let out = emit(serde_json::json!({ "programs": docs }), pretty);
            Ok(RunOutput {
                stdout: out,
                status: u8::from(any_invalid),
            })
        }
        Cmd::Fmt { file } => {
            let programs = parse_documents(&file)?;
            let texts: Vec<String> = programs.iter().map(print_program).collect();
            Ok(RunOutput::ok(format!("{}\n", texts.join("\n---\n"))))
        }
        Cmd::Graph {
            file,
            dot,
            merge_entities,
        } => {
            let programs = parse_documents(&file)?;
            if programs.len() != 1 {
                return Err(CliError::Usage(
                    "graph expects exactly one program per file".to_string(),
                ));
            }
            let g = to_graph(&programs[0]).map_err(domain)?;
            if dot {
                Ok(RunOutput::ok(to_dot(&g, merge_entities)))
            } else {
                Ok(RunOutput::ok(emit(
                    serde_json::to_value(&g).expect("graph serializes"),
                    pretty,
                )))
            }
        }
        Cmd::Perms { file, count, cap } => {
            let programs = parse_documents(&file)?;
            if programs.len() != 1 {
                return Err(CliError::Usage(
                    "perms expects exactly one program per file".to_string(),
                ));
            }
            let dag = FunctionDag::from_program(&programs[0]);
            if count {
                let total = count_linear_extensions(&dag).map_err(domain)?;
                return Ok(RunOutput::ok(emit(
                    serde_json::json!({ "count": total }),
                    pretty,
                )));
            }
            if cap == 0 {
                return Err(CliError::Usage("--cap must be at least 1".to_string()));
            }
            let set = linear_extensions(&dag, cap).map_err(domain)?;
            Ok(RunOutput::ok(emit(
                serde_json::json!({
                    "count": set.len(),
                    "beta": set.beta(),
                    "orderings": set.orderings,
                }),
                pretty,
            )))
        }
        Cmd::ValidateSeq { file, order } => {
            let programs = parse_documents(&file)?;
            if programs.len() != 1 {
                return Err(CliError::Usage(
                    "validate-seq expects exactly one program per file".to_string(),
                ));
            }
            let dag = FunctionDag::from_program(&programs[0]);
            let order = parse_index_list(&order)?;
            let valid = is_valid_sequence(&dag, &order).map_err(domain)?;
            Ok(RunOutput::ok(emit(
                serde_json::json!({ "valid": valid }),
                pretty,
            )))
        }
        Cmd::Assemble { file, vocab } => {
            let vocab = load_vocab(&vocab)?;
            let recipe = TaggedRecipe::from_json_str(&read_text(&file)?).map_err(domain)?;
            let split = split_sentences(&recipe);
            for warning in &split.warnings {
                eprintln!("warning: {warning}");
            }
            let assembled = assemble_program(&split.recipe, &vocab).map_err(domain)?;
            for miss in &assembled.uncanonicalized {
                eprintln!(
                    "warning: sentence {}: {} `{}` is not in the vocabulary",
                    miss.sentence_id, miss.kind, miss.value
                );
            }
            Ok(RunOutput::ok(format!(
                "{}\n",
                print_program(&assembled.program)
            )))
        }
        Cmd::Canonicalize { file, vocab } => {
            let vocab = load_vocab(&vocab)?;
            let programs = parse_documents(&file)?;
            let mut texts = Vec::new();
            for p in &programs {
                let (q, misses) = canonicalize_program(p, &vocab);
                for miss in misses {
                    eprintln!("warning: {miss} is not in the vocabulary");
                }
                texts.push(print_program(&q));
            }
            Ok(RunOutput::ok(format!("{}\n", texts.join("\n---\n"))))
        }
        Cmd::Cluster {
            features,
            k,
            seed,
            merge_threshold,
            confirm,
            kind,
        } => {
            let table = FeatureTable::from_bytes(&read_bytes(&features)?).map_err(domain)?;
            let seed = seed_or_env(seed)?;
            let mut clusters = kmeans(&table, k, seed).map_err(domain)?;
            if let Some(threshold) = merge_threshold {
                let stdin = std::io::stdin();
                let mut lines = stdin.lock().lines();
                let ask = |p: &MergeProposal<'_>| -> bool {
                    if !confirm {
                        return true;
                    }
                    eprint!(
                        "merge `{}` ({} terms) with `{}` ({} terms), distance {:.4}? [y/N] ",
                        p.a_name, p.a_size, p.b_name, p.b_size, p.distance
                    );
                    std::io::stderr().flush().ok();
                    matches!(
                        lines.next().and_then(Result::ok).as_deref().map(str::trim),
                        Some("y") | Some("Y") | Some("yes")
                    )
                };
                clusters = iterative_merge_with(&clusters, threshold, ask);
            }
            let doc = build_vocabulary(&clusters, kind.kind());
            Ok(RunOutput::ok(emit(
                serde_json::to_value(&doc).expect("category serializes"),
                pretty,
            )))
        }
        Cmd::Ged {
            a,
            b,
            exact: _,
            beam,
            costs,
            function_dag,
        } => {
            let mut g1 = load_graph(&a)?;
            let mut g2 = load_graph(&b)?;
            if function_dag {
                g1 = function_subgraph(&g1);
                g2 = function_subgraph(&g2);
            }
            let costs = match costs {
                Some(path) => {
                    serde_json::from_str::<EditCostModel>(&read_text(&path)?).map_err(domain)?
                }
                None => EditCostModel::default(),
            };
            let mode = match beam {
                Some(width) => GedMode::Beam(width),
                None => GedMode::Exact,
            };
            let cost = graph_edit_distance(&g1, &g2, &costs, mode).map_err(domain)?;
            Ok(RunOutput::ok(emit(
                serde_json::json!({
                    "cost": cost,
                    "mode": match mode {
                        GedMode::Exact => "exact".to_string(),
                        GedMode::Beam(w) => format!("beam({w})"),
                    },
                }),
                pretty,
            )))
        }
        Cmd::F1 {
            pred,
            gt,
            kind,
            vocab,
        } => {
            let mut p = parse_program(&read_text(&pred)?).map_err(domain)?;
            let mut g = parse_program(&read_text(&gt)?).map_err(domain)?;
            if let Some(path) = vocab {
                let vocab = load_vocab(&path)?;
                p = canonicalize_program(&p, &vocab).0;
                g = canonicalize_program(&g, &vocab).0;
            }
            let prf = node_set_f1(&p, &g, kind.kind());
            Ok(RunOutput::ok(emit(
                serde_json::to_value(prf).expect("PRF serializes"),
                pretty,
            )))
        }
        Cmd::Retrieval {
            sim,
            pool,
            trials,
            k,
            seed,
            direction,
        } => {
            let mut m = load_matrix(&sim)?;
            if matches!(direction, Direction::R2i) {
                m = m.transposed();
            }
            let ks = parse_index_list(&k)?;
            let seed = seed_or_env(seed)?;
            let report = retrieval_metrics(&m, trials, pool, &ks, seed).map_err(domain)?;
            if pretty {
                Ok(RunOutput::ok(retrieval_table(&report)))
            } else {
                Ok(RunOutput::ok(emit(
                    serde_json::to_value(&report).expect("report serializes"),
                    false,
                )))
            }
        }
        Cmd::Loss(loss) => run_loss(loss, pretty),
    }
}

fn run_loss(cmd: LossCmd, pretty: bool) -> Result<RunOutput, CliError> {
    match cmd {
        LossCmd::Triplet {
            images,
            texts,
            margin,
            formulation,
        } => {
            let batch =
                EmbeddingBatch::from_matrices(&load_matrix(&images)?, &load_matrix(&texts)?)
                    .map_err(domain)?;
            let formulation = match formulation {
                FormulationArg::Shared => TripletFormulation::SharedPositive,
                FormulationArg::PerDirection => TripletFormulation::PerDirectionPositive,
            };
            let loss = triplet_loss_with(&batch, margin, formulation).map_err(domain)?;
            Ok(RunOutput::ok(emit(
                serde_json::json!({ "loss": loss }),
                pretty,
            )))
        }
        LossCmd::Ce {
            pred,
            program,
            vocab,
            tokens,
            max_vars,
        } => {
            let pred = PredictedSequence::from_matrix(&load_matrix(&pred)?).map_err(domain)?;
            let tokens = match (&program, &tokens) {
                (Some(path), None) => {
                    let vocab = load_vocab(vocab.as_deref().expect("clap enforces --vocab"))?;
                    let table = SymbolTable::new(&vocab, max_vars);
                    let p = parse_program(&read_text(path)?).map_err(domain)?;
                    tokenize_program(&p, &table).map_err(domain)?
                }
                (None, Some(list)) => cookir_core::ir::TokenSeq {
                    ids: parse_index_list(list)?
                        .into_iter()
                        .map(|i| i as u32)
                        .collect(),
                },
                _ => {
                    return Err(CliError::Usage(
                        "provide exactly one of --program or --tokens".to_string(),
                    ))
                }
            };
            let loss = cross_entropy(&pred, &tokens).map_err(domain)?;
            Ok(RunOutput::ok(emit(
                serde_json::json!({ "loss": loss, "steps": tokens.ids.len() }),
                pretty,
            )))
        }
        LossCmd::Mince {
            pred,
            program,
            vocab,
            cap,
            max_vars,
        } => {
            let pred = PredictedSequence::from_matrix(&load_matrix(&pred)?).map_err(domain)?;
            let vocab = load_vocab(&vocab)?;
            let table = SymbolTable::new(&vocab, max_vars);
            let p = parse_program(&read_text(&program)?).map_err(domain)?;
            let report = validate_program(&p);
            if !report.is_valid() {
                return Err(CliError::Domain(format!("program is invalid:\n{report}")));
            }
            let dag = FunctionDag::from_program(&p);
            if cap == 0 {
                return Err(CliError::Usage("--cap must be at least 1".to_string()));
            }
            let set = linear_extensions(&dag, cap).map_err(domain)?;
            let candidates = set.tokenize_all(&p, &table).map_err(domain)?;
            let (loss, argmin) = min_ce_over_candidates(&pred, &candidates).map_err(domain)?;
            Ok(RunOutput::ok(emit(
                serde_json::json!({
                    "loss": loss,
                    "argmin": argmin,
                    "candidates": candidates.len(),
                }),
                pretty,
            )))
        }
        LossCmd::Total {
            ss,
            pv,
            pt,
            lambda_ss,
            lambda_pv,
            lambda_pt,
        } => {
            let w = LossWeights {
                lambda_ss,
                lambda_pv,
                lambda_pt,
                ..LossWeights::default()
            };
            Ok(RunOutput::ok(emit(
                serde_json::json!({ "loss": total_loss(ss, pv, pt, &w) }),
                pretty,
            )))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::from(out.status)
        }
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
