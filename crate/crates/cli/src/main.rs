use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use fodot_core::check::TypedKB;
use fodot_core::config::Config;
use fodot_core::consult::ConsultSession;
use fodot_core::dmn::{self, InputBound};
use fodot_core::inference::{self, Direction, InferenceError};
use fodot_core::interp::{PartialStructure, Term};
use fodot_core::{compile, Error, Value};
use serde_json::{json, Map};

#[derive(Parser)]
#[command(name = "fodot", version, about = "Reasoning engine for FO(.) knowledge bases")]
struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Solver command line, e.g. "z3 -in".
    #[arg(long, global = true, value_name = "CMD")]
    solver: Option<String>,
    /// Solver timeout per check, in milliseconds.
    #[arg(long, global = true, value_name = "MS")]
    timeout: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Knowledge base files, read in order.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Extra fact, as `term=value`.
    #[arg(long = "assert", value_name = "TERM=VALUE")]
    asserts: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Is there a model?
    Check(Input),
    /// Enumerate models.
    Expand {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 10, value_name = "N")]
        max_models: usize,
    },
    /// Atoms and values that hold in every model.
    Propagate(Input),
    /// Why a literal follows.
    Explain {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        literal: String,
    },
    /// Optimal value of a numeric term.
    Optimize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        term: String,
        #[arg(long)]
        maximize: bool,
    },
    /// Full status table, including irrelevant atoms.
    Relevance(Input),
    /// Decision tables.
    #[command(subcommand)]
    Dmn(DmnCommand),
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Subcommand)]
enum DmnCommand {
    /// Print the table as an inductive definition.
    Translate {
        table: PathBuf,
        #[arg(long, value_name = "FILE")]
        vocab: PathBuf,
    },
    /// Check completeness and uniqueness.
    Check {
        table: PathBuf,
        #[arg(long, value_name = "FILE")]
        vocab: PathBuf,
        /// Range of a numeric input, as `input=lo..hi`.
        #[arg(long = "bound", value_name = "INPUT=LO..HI")]
        bounds: Vec<String>,
    },
}

thread_local! {
    static OUT: std::cell::RefCell<String> = const { std::cell::RefCell::new(String::new()) };
}

/// Buffers a line of standard output; written once the run ends.
macro_rules! say {
    ($($arg:tt)*) => {
        OUT.with(|o| {
            let mut o = o.borrow_mut();
            std::fmt::Write::write_fmt(&mut *o, format_args!($($arg)*)).unwrap();
            o.push('\n');
        })
    };
}

/// Anything that stops a run before the task gives an answer.
struct Failure(String);

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.into().to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = run(cli);
    let text = OUT.with(|o| std::mem::take(&mut *o.borrow_mut()));
    // a closed pipe is not an error
    let _ = std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes());
    match r {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn config(cli: &Cli) -> Result<Config, Failure> {
    let mut c = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    }
    .with_env();
    if let Some(s) = &cli.solver {
        c.solver.command = s.clone();
    }
    if let Some(t) = cli.timeout {
        c.solver.timeout_ms = t;
    }
    Ok(c)
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))
}

/// The compiled knowledge base and its structure with `--assert` facts.
fn load(input: &Input) -> Result<(TypedKB, PartialStructure), Failure> {
    let mut source = String::new();
    for f in &input.files {
        source.push_str(&read(f)?);
        source.push('\n');
    }
    let tkb = compile(&source)?;
    let vocab = tkb
        .main_vocabulary()
        .ok_or_else(|| Failure("the knowledge base has no vocabulary".into()))?
        .to_string();
    let mut s = PartialStructure::initial(&tkb, &vocab)?;
    for a in &input.asserts {
        let (t, v) = a
            .rsplit_once('=')
            .ok_or_else(|| Failure(format!("`{a}` is not of the form term=value")))?;
        let term = s.parse_term(t.trim())?;
        let value = s.parse_value(&term, v)?;
        s = s.assert_fact(term, value)?;
    }
    Ok((tkb, s))
}

fn model_json(m: &[(Term, Value)]) -> serde_json::Value {
    let mut out = Map::new();
    for (t, v) in m {
        out.insert(t.to_string(), json!(v));
    }
    serde_json::Value::Object(out)
}

fn print_json(v: serde_json::Value) {
    say!("{}", serde_json::to_string_pretty(&v).unwrap());
}

fn run(cli: Cli) -> Outcome {
    let cfg = config(&cli)?;
    let json = cli.json;
    match &cli.command {
        Command::Check(input) => {
            let (tkb, s) = load(input)?;
            let sat = inference::model_check(&tkb, &s, &cfg.solver)?;
            if json {
                print_json(json!({ "satisfiable": sat }));
            } else {
                say!("{}", if sat { "satisfiable" } else { "unsatisfiable" });
            }
            Ok(sat)
        }
        Command::Expand { input, max_models } => {
            let (tkb, s) = load(input)?;
            let ms = inference::model_expand(&tkb, &s, *max_models, &cfg.solver)?;
            if json {
                print_json(json!({ "models": ms.iter().map(|m| model_json(m)).collect::<Vec<_>>() }));
            } else if ms.is_empty() {
                say!("no models");
            } else {
                for (i, m) in ms.iter().enumerate() {
                    say!("model {}:", i + 1);
                    for (t, v) in m {
                        say!("  {t} = {v}");
                    }
                }
            }
            Ok(!ms.is_empty())
        }
        Command::Propagate(input) => {
            let (tkb, s) = load(input)?;
            match inference::propagate(&tkb, &s, &cfg.solver) {
                Err(InferenceError::Inconsistent) => {
                    if json {
                        print_json(json!({ "consistent": false }));
                    } else {
                        say!("unsatisfiable");
                    }
                    Ok(false)
                }
                Err(e) => Err(e.into()),
                Ok((gt, c)) => {
                    let atoms: Vec<(&str, bool)> = c
                        .propagated()
                        .map(|(i, b)| (gt.atoms[i].text.as_str(), b))
                        .collect();
                    let values: Vec<(String, &Value)> = gt
                        .terms
                        .iter()
                        .enumerate()
                        .filter(|(_, t)| t.range.is_none() && s.lookup(&t.term).is_none())
                        .filter_map(|(i, t)| c.values[i].as_ref().map(|v| (t.term.to_string(), v)))
                        .collect();
                    if json {
                        print_json(json!({
                            "consistent": true,
                            "atoms": atoms.iter().map(|(a, b)| json!({ "atom": a, "value": b })).collect::<Vec<_>>(),
                            "values": values.iter().map(|(t, v)| json!({ "term": t, "value": v })).collect::<Vec<_>>(),
                        }));
                    } else {
                        for (a, b) in &atoms {
                            say!("{a}: {b}");
                        }
                        for (t, v) in &values {
                            say!("{t} = {v}");
                        }
                    }
                    Ok(true)
                }
            }
        }
        Command::Explain { input, literal } => {
            let (tkb, s) = load(input)?;
            match inference::explain(&tkb, &s, literal, &cfg.solver) {
                Err(InferenceError::NotAConsequence(_)) => {
                    if json {
                        print_json(json!({ "literal": literal, "explanation": null }));
                    } else {
                        say!("{literal} is not a consequence");
                    }
                    Ok(false)
                }
                Err(e) => Err(e.into()),
                Ok(e) => {
                    if json {
                        print_json(json!({ "literal": literal, "explanation": e }));
                    } else {
                        for item in &e.items {
                            say!("{}: {}", item.label, item.source);
                        }
                    }
                    Ok(true)
                }
            }
        }
        Command::Optimize { input, term, maximize } => {
            let (tkb, s) = load(input)?;
            let dir = if *maximize { Direction::Maximize } else { Direction::Minimize };
            match inference::optimize(&tkb, &s, term, dir, &cfg.solver) {
                Err(InferenceError::Inconsistent) => {
                    if json {
                        print_json(json!({ "term": term, "direction": dir, "value": null }));
                    } else {
                        say!("unsatisfiable");
                    }
                    Ok(false)
                }
                Err(e) => Err(e.into()),
                Ok((v, m)) => {
                    if json {
                        print_json(json!({ "term": term, "direction": dir, "value": v, "model": model_json(&m) }));
                    } else {
                        say!("{term} = {v}");
                        for (t, v) in &m {
                            say!("  {t} = {v}");
                        }
                    }
                    Ok(true)
                }
            }
        }
        Command::Relevance(input) => {
            let (tkb, s) = load(input)?;
            let session = match ConsultSession::with_structure(Arc::new(tkb), s, &cfg.solver) {
                Err(fodot_core::consult::ConsultError::InconsistentKB) => {
                    if json {
                        print_json(json!({ "consistent": false }));
                    } else {
                        say!("unsatisfiable");
                    }
                    return Ok(false);
                }
                r => r?,
            };
            let table = session.state();
            if json {
                print_json(json!(table));
            } else {
                for a in &table.atoms {
                    say!("{}: {}", a.atom, json!(a.status).as_str().unwrap_or_default());
                }
            }
            Ok(true)
        }
        Command::Dmn(DmnCommand::Translate { table, vocab }) => {
            let t = dmn::parse_table(&read(table)?)?;
            let tkb = compile(&read(vocab)?)?;
            let voc = vocabulary(&tkb)?;
            let def = t.to_definition(voc)?;
            if json {
                print_json(json!({ "table": t.name, "definition": def }));
            } else {
                say!("{def}");
            }
            Ok(true)
        }
        Command::Dmn(DmnCommand::Check { table, vocab, bounds }) => {
            let t = dmn::parse_table(&read(table)?)?;
            let tkb = compile(&read(vocab)?)?;
            let name = vocabulary(&tkb)?.name.clone();
            let bounds = bounds
                .iter()
                .map(|b| dmn::parse_bound(b).ok_or_else(|| Failure(format!("`{b}` is not of the form input=lo..hi"))))
                .collect::<Result<Vec<InputBound>, _>>()?;
            let r = dmn::check_table(&t, &tkb, &name, &bounds, &cfg.solver)?;
            let witness = |w: &[(String, Value)]| {
                let mut m = Map::new();
                for (k, v) in w {
                    m.insert(k.clone(), json!(v));
                }
                serde_json::Value::Object(m)
            };
            if json {
                print_json(json!({
                    "table": t.name,
                    "complete": r.complete(),
                    "gap": r.gap.as_deref().map(witness),
                    "unique": r.unique(),
                    "overlap": r.overlap.as_ref().map(|(i, j, w)| json!({ "rows": [i + 1, j + 1], "input": witness(w) })),
                }));
            } else {
                let show = |w: &[(String, Value)]| {
                    w.iter().map(|(k, v)| format!("{k} = {v}")).collect::<Vec<_>>().join(", ")
                };
                match &r.gap {
                    None => say!("complete"),
                    Some(w) => say!("incomplete: no row matches {}", show(w)),
                }
                match &r.overlap {
                    None => say!("unique"),
                    Some((i, j, w)) => say!("not unique: rows {} and {} both match {}", i + 1, j + 1, show(w)),
                }
            }
            Ok(r.complete() && r.unique())
        }
        Command::Serve { port, host } => {
            let port = port.unwrap_or(cfg.service.port);
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Failure(format!("bad address {host}:{port}: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure(e.to_string()))?;
            eprintln!("listening on http://{addr}");
            rt.block_on(fodot_service::serve(addr, cfg))
                .map_err(|e| Failure(e.to_string()))?;
            Ok(true)
        }
    }
}

fn vocabulary(tkb: &TypedKB) -> Result<&fodot_core::types::Vocab, Failure> {
    tkb.main_vocabulary()
        .and_then(|v| tkb.vocab(v))
        .ok_or_else(|| Failure("the vocabulary file declares no vocabulary".into()))
}
