//! `fairsim`: batch front end for simulation checks, the inclusion oracle,
//! proof checking and proof search.
//!
//! Exit codes: 0 when the property holds or the proof is accepted, 1 when
//! it is refuted or rejected, 2 on usage or input errors (stdout is then
//! empty).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use fairsim::oracle::{includes, InclusionVerdict, OracleError};
use fairsim::proofkernel::{check_script, search_proof, KernelError, DEFAULT_BUDGET};
use fairsim::simulations::{compute, SimError, UnknownKind};
use fairsim::textio::{export_dot, parse_hoa, parse_native_named, parse_script, serialize_script, TextError};
use fairsim::{corpus, Automaton, SimKind};
use serde_json::json;
use thiserror::Error;

/// File name that resolves to the bundled corpus when no such file exists.
const CORPUS_NAME: &str = "paper.aut";

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("no automaton named `{0}`")]
    UnknownAutomaton(String),
    #[error(transparent)]
    Kind(#[from] UnknownKind),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "fairsim", version, about = "Fairness-preserving simulations for Büchi automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether the initial pairs (or one pair) lie in a simulation.
    Check {
        /// standard, direct, delay, rb, 2delay or rdelay
        kind: String,
        file: String,
        left: String,
        right: String,
        #[arg(long, num_args = 2, value_names = ["S1", "S2"])]
        pair: Option<Vec<String>>,
        /// Print the verdict and the whole relation as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Decide language inclusion exactly.
    Oracle {
        file: String,
        left: String,
        right: String,
        #[arg(long)]
        json: bool,
    },
    /// Check a proof script.
    Prove { script: String, automata: String },
    /// Search for a proof script.
    Search {
        kind: String,
        file: String,
        left: String,
        right: String,
        s1: String,
        s2: String,
        /// Write the script here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Render one automaton as Graphviz DOT.
    Dot { file: String, name: String },
    /// Run the proof-session HTTP service.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Automata to serve; defaults to the bundled corpus.
        #[arg(long)]
        automata: Option<String>,
    },
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

// Bundled proof scripts are found by file name when no such file exists.
fn read_script(path: &str) -> Result<String, CliError> {
    if !Path::new(path).exists() {
        let base = Path::new(path).file_name().and_then(|f| f.to_str());
        if let Some((_, text)) = corpus::SCRIPTS.iter().find(|(f, _)| Some(*f) == base) {
            return Ok(text.to_string());
        }
    }
    read(path)
}

fn load(file: &str) -> Result<Vec<Automaton>, CliError> {
    let is_corpus = Path::new(file).file_name().and_then(|f| f.to_str()) == Some(CORPUS_NAME);
    if is_corpus {
        if let Ok(p) = std::env::var("PAPERCORPUS") {
            return Ok(parse_native_named(&p, &read(&p)?)?);
        }
        if !Path::new(file).exists() {
            return Ok(corpus::automata());
        }
    }
    let text = read(file)?;
    if file.ends_with(".hoa") {
        Ok(vec![parse_hoa(&text)?])
    } else {
        Ok(parse_native_named(file, &text)?)
    }
}

fn pick(all: &[Automaton], name: &str) -> Result<Automaton, CliError> {
    all.iter()
        .find(|a| a.name() == name)
        .cloned()
        .ok_or_else(|| CliError::UnknownAutomaton(name.to_string()))
}

fn kind(s: &str) -> Result<SimKind, CliError> {
    let k: SimKind = s.parse()?;
    if k == SimKind::Wrong {
        return Err(CliError::Usage("the `wrong` relation is test-only".into()));
    }
    Ok(k)
}

fn state(a: &Automaton, name: &str) -> Result<fairsim::StateId, CliError> {
    Ok(a.resolve_state(name).map_err(fairsim::simulations::SimError::from)?)
}

fn code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Check {
            kind: k,
            file,
            left,
            right,
            pair,
            json,
        } => {
            let k = kind(&k)?;
            let all = load(&file)?;
            let (a, b) = (pick(&all, &left)?, pick(&all, &right)?);
            let targets = match pair {
                Some(p) => vec![(state(&a, &p[0])?, state(&b, &p[1])?)],
                None => a
                    .initial()
                    .iter()
                    .flat_map(|&x| b.initial().iter().map(move |&y| (x, y)))
                    .collect(),
            };
            let rel = compute(k, &a, &b)?;
            let holds = targets.iter().all(|&(x, y)| rel.contains(x, y));
            let name = |&(x, y): &(fairsim::StateId, fairsim::StateId)| {
                (a.state_name(x).to_string(), b.state_name(y).to_string())
            };
            if json {
                let out = json!({
                    "kind": k,
                    "left": left,
                    "right": right,
                    "pairs": targets.iter().map(name).collect::<Vec<_>>(),
                    "holds": holds,
                    "relation": rel.named_pairs(&a, &b),
                });
                println!("{out}");
            } else {
                let pairs: Vec<String> = targets
                    .iter()
                    .map(|p| {
                        let (x, y) = name(p);
                        format!("({x},{y})")
                    })
                    .collect();
                let verdict = if holds { "holds" } else { "refuted" };
                println!("{k} {left} ≼ {right} at {}: {verdict}", pairs.join(" "));
            }
            Ok(code(holds))
        }
        Command::Oracle {
            file,
            left,
            right,
            json,
        } => {
            let all = load(&file)?;
            let (a, b) = (pick(&all, &left)?, pick(&all, &right)?);
            let v = includes(&a, &b)?;
            match (&v, json) {
                (InclusionVerdict::Included, false) => println!("included"),
                (InclusionVerdict::Refuted(w), false) => println!("{w}"),
                (InclusionVerdict::Included, true) => println!("{}", json!({"verdict": "included"})),
                (InclusionVerdict::Refuted(w), true) => println!(
                    "{}",
                    json!({"verdict": "refuted", "counterexample": w.to_string()})
                ),
            }
            Ok(code(v.is_included()))
        }
        Command::Prove { script, automata } => {
            let p = parse_script(&read_script(&script)?).map_err(|e| match e {
                TextError::Syntax { mut span, message } => {
                    span.file = script.clone();
                    TextError::Syntax { span, message }
                }
                TextError::UnknownRule { mut span, name } => {
                    span.file = script.clone();
                    TextError::UnknownRule { span, name }
                }
                other => other,
            })?;
            let all = load(&automata)?;
            let (a, b) = (pick(&all, &p.left)?, pick(&all, &p.right)?);
            match check_script(&p, &a, &b) {
                Ok(()) => {
                    println!("accepted");
                    Ok(ExitCode::SUCCESS)
                }
                Err(r) => {
                    println!("rejected");
                    eprintln!("{r} [{}]", r.error.code);
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Search {
            kind: k,
            file,
            left,
            right,
            s1,
            s2,
            out,
            budget,
        } => {
            let k = kind(&k)?;
            let all = load(&file)?;
            let (a, b) = (pick(&all, &left)?, pick(&all, &right)?);
            let (x, y) = (state(&a, &s1)?, state(&b, &s2)?);
            match search_proof(k, &a, &b, x, y, budget)? {
                Some(p) => {
                    let text = serialize_script(&p);
                    match out {
                        Some(path) => fs::write(&path, &text).map_err(|source| CliError::Io {
                            path: path.display().to_string(),
                            source,
                        })?,
                        None => print!("{text}"),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    eprintln!("no {k} proof of ({s1},{s2}) within {budget} rule applications");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Dot { file, name } => {
            let all = load(&file)?;
            print!("{}", export_dot(&pick(&all, &name)?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            host,
            automata,
        } => {
            let all = match automata {
                Some(f) => load(&f)?,
                None => load(CORPUS_NAME)?,
            };
            let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: "tokio runtime".into(),
                source,
            })?;
            rt.block_on(async move {
                let addr = format!("{host}:{port}");
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|source| CliError::Io { path: addr.clone(), source })?;
                let bound = listener.local_addr().map_err(|source| CliError::Io {
                    path: addr.clone(),
                    source,
                })?;
                println!("listening on http://{bound}");
                let _ = std::io::stdout().flush();
                let state = Arc::new(fairsim_service::AppState::new(all));
                fairsim_service::serve(listener, state)
                    .await
                    .map_err(|source| CliError::Io { path: addr, source })?;
                Ok(ExitCode::SUCCESS)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
