//! `stgame`: compliance, agreement and event-structure export for pairs of
//! binary session types.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use session_games::denote::{Parity, DEFAULT_UNROLL_DEPTH};
use session_games::estructure::{EventStructure, Participant};
use session_games::game::{
    compose_session_contracts, contract_of, eager_winning, find_winning_strategy, Contract, GameVerdict,
};
use session_games::harness::{run_corpus, CorpusSpec};
use session_games::lts::{Limits, Lts};
use session_games::opsem::{
    check_compliance, check_compliance_turn, explore_fig1, explore_turn, ComplianceReport, Configuration, Verdict,
    DEFAULT_STATE_LIMIT,
};
use session_games::syntax::{parse, validate, SessionType};

#[derive(Parser)]
#[command(name = "stgame", version, about = "Session types as contracts: compliance and winning strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the first type is compliant with the second.
    Check {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
    },
    /// Decide whether a participant wins the contract of the pair.
    Agree {
        #[command(flatten)]
        pair: Pair,
        #[command(flatten)]
        opts: Common,
        /// Participant whose strategy is examined.
        #[arg(long, default_value = "A")]
        participant: String,
        #[arg(long, value_enum, default_value_t = StrategyMode::Eager)]
        strategy: StrategyMode,
    },
    /// Write the event structure of a type or pair, or one of the
    /// transition systems of a pair.
    Export {
        /// Session type text, or `@file`.
        p: String,
        /// Optional partner type text, or `@file`.
        q: Option<String>,
        #[command(flatten)]
        opts: Common,
        #[arg(long, value_enum, default_value_t = What::Es)]
        what: What,
        /// Write to this file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every cross-check on a random corpus and print a JSON summary.
    Corpus {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
        /// Generate recursive types.
        #[arg(long)]
        recursive: bool,
        #[arg(long, default_value_t = 4)]
        unroll_depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Pair {
    /// Session type text, or `@file`.
    p: String,
    /// Session type text, or `@file`.
    q: String,
}

#[derive(Args)]
struct Common {
    /// Recursion unrolling depth for denotations.
    #[arg(long, default_value_t = DEFAULT_UNROLL_DEPTH)]
    depth: usize,
    /// State limit for explorations.
    #[arg(long, default_value_t = DEFAULT_STATE_LIMIT)]
    limit: usize,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Participant names of the two sides.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"], default_values = ["A", "B"])]
    names: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyMode {
    Eager,
    Search,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Es,
    Ets,
    Ts,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Reads `@path` inputs; anything else is the type text itself.
fn read_type(arg: &str) -> Result<SessionType> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => arg.to_string(),
    };
    let t = parse(text.trim()).with_context(|| format!("parsing `{}`", text.trim()))?;
    let violations = validate(&t);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        bail!("`{t}` is not well formed: {}", list.join("; "));
    }
    Ok(t)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty_json(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { pair, opts } => check(&pair, &opts),
        Command::Agree { pair, opts, participant, strategy } => agree(&pair, &opts, &participant, strategy),
        Command::Export { p, q, opts, what, out } => export(&p, q.as_deref(), &opts, what, out.as_ref()),
        Command::Corpus { seed, count, recursive, unroll_depth, out } => {
            let spec = if recursive {
                CorpusSpec::recursive(seed, count, unroll_depth)
            } else {
                CorpusSpec { seed, count, unroll_depth, ..CorpusSpec::default() }
            };
            let summary = run_corpus(&spec);
            emit(&pretty_json(&summary)?, out.as_ref())?;
            Ok(if summary.failures.is_empty() { 0 } else { 1 })
        }
    }
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Compliant => 0,
        Verdict::NonCompliant => 1,
        Verdict::Indeterminate => 2,
    }
}

fn report_text(out: &mut String, r: &ComplianceReport) {
    let name = serde_json::to_value(r.semantics).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let _ = write!(out, "{name}: {:?} ({} states", r.verdict, r.states);
    if r.truncated {
        out.push_str(", truncated");
    }
    if r.cyclic {
        out.push_str(", cyclic");
    }
    out.push(')');
    if !r.witness.is_empty() {
        let _ = write!(out, "; witness: {}", r.witness.join(" ; "));
    }
    out.push('\n');
}

fn check(pair: &Pair, opts: &Common) -> Result<u8> {
    let p = read_type(&pair.p)?;
    let q = read_type(&pair.q)?;
    let sync = check_compliance(&p, &q, opts.limit)?;
    let turn = check_compliance_turn(&p, &q, opts.limit)?;
    match opts.format.unwrap_or(Format::Text) {
        Format::Json => {
            let v = json!({"p": p.pretty(), "q": q.pretty(), "verdict": sync.verdict, "synchronous": sync, "turn_based": turn});
            print!("{}", pretty_json(&v)?);
        }
        Format::Dot => {
            let ex = explore_fig1(&Configuration::new(p.clone(), q.clone()), Limits::states(opts.limit));
            print!("{}", ex.lts.to_dot("compliance"));
        }
        Format::Text => {
            let mut out = format!("{} is {} with {}\n", p, describe(sync.verdict), q);
            report_text(&mut out, &sync);
            report_text(&mut out, &turn);
            print!("{out}");
        }
    }
    Ok(verdict_code(sync.verdict))
}

fn describe(v: Verdict) -> &'static str {
    match v {
        Verdict::Compliant => "compliant",
        Verdict::NonCompliant => "not compliant",
        Verdict::Indeterminate => "undecided (state limit reached)",
    }
}

fn contract(p: &SessionType, q: &SessionType, opts: &Common) -> Result<Contract> {
    Ok(compose_session_contracts(p, &opts.names[0], q, &opts.names[1], opts.depth)?)
}

fn agree(pair: &Pair, opts: &Common, participant: &str, mode: StrategyMode) -> Result<u8> {
    let p = read_type(&pair.p)?;
    let q = read_type(&pair.q)?;
    let c = contract(&p, &q, opts)?;
    let who = Participant::new(participant);
    let v = match mode {
        StrategyMode::Eager => eager_winning(&c, &who)?,
        StrategyMode::Search => find_winning_strategy(&c, &who)?,
    };
    match opts.format.unwrap_or(Format::Text) {
        Format::Json => print!("{}", pretty_json(&v)?),
        Format::Dot => bail!("agree has no DOT output"),
        Format::Text => print!("{}", verdict_text(&v)),
    }
    Ok(if v.winning { 0 } else { 1 })
}

fn verdict_text(v: &GameVerdict) -> String {
    let kind = serde_json::to_value(v.strategy).ok().and_then(|s| s.as_str().map(String::from)).unwrap_or_default();
    let mut out = match (v.winning, kind.as_str()) {
        (true, "synthesized") => format!("{} has a winning strategy", v.participant),
        (false, "synthesized") => format!("{} has no winning strategy", v.participant),
        (true, _) => format!("the {kind} strategy of {} is winning", v.participant),
        (false, _) => format!("the {kind} strategy of {} is not winning", v.participant),
    };
    if let Some(k) = v.horizon {
        let _ = write!(out, " (bounded at depth {}, plays up to {k} events)", v.bounded_depth.unwrap_or_default());
    }
    out.push('\n');
    if !v.counterexample.is_empty() {
        let ids: Vec<String> = v.counterexample.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "counterexample: {}", ids.join(" "));
    }
    for entry in v.prescriptions.iter().flatten() {
        let prefix: Vec<String> = entry.prefix.iter().map(|e| e.to_string()).collect();
        let moves: Vec<String> = entry.prescribe.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "  after {{{}}} play {}", prefix.join(","), moves.join(","));
    }
    out
}

fn es_text(es: &EventStructure) -> String {
    let mut out = String::new();
    for ev in es.events() {
        let _ = writeln!(out, "event {} {} {}", ev.id, ev.participant, ev.label);
    }
    for (a, b) in es.conflicts() {
        let _ = writeln!(out, "conflict {a} {b}");
    }
    for en in es.enablings() {
        let _ = writeln!(out, "enabling {en}");
    }
    out
}

fn lts_json<L: ToString>(lts: &Lts<L>) -> serde_json::Value {
    let edges: Vec<_> = lts.edges.iter().map(|e| json!({"from": e.from, "label": e.label.to_string(), "to": e.to})).collect();
    json!({"states": lts.names, "initial": lts.initial, "edges": edges, "truncated": lts.truncated})
}

fn lts_text<L: ToString>(lts: &Lts<L>) -> String {
    let mut out = String::new();
    for e in &lts.edges {
        let _ = writeln!(out, "{} --{}--> {}", lts.names[e.from], e.label.to_string(), lts.names[e.to]);
    }
    if lts.truncated {
        out.push_str("(truncated)\n");
    }
    out
}

fn export(p: &str, q: Option<&str>, opts: &Common, what: What, out: Option<&PathBuf>) -> Result<u8> {
    let p = read_type(p)?;
    let q = q.map(read_type).transpose()?;
    let c = match &q {
        Some(q) => contract(&p, q, opts)?,
        None => contract_of(&p, &opts.names[0], Parity::Odd, opts.depth)?,
    };
    let text = match what {
        What::Es => match opts.format.unwrap_or(Format::Json) {
            Format::Json => pretty_json(&c.es.to_json())?,
            Format::Text => es_text(&c.es),
            Format::Dot => bail!("event structures export as json or text; use --what ets for a graph"),
        },
        What::Ets => {
            let ets = c.es.ets(opts.limit);
            match opts.format.unwrap_or(Format::Dot) {
                Format::Dot => c.es.ets_dot(&ets.lts, "ets"),
                Format::Json => pretty_json(&lts_json(&ets.lts))?,
                Format::Text => lts_text(&ets.lts),
            }
        }
        What::Ts => {
            let Some(q) = &q else { bail!("the turn-based system needs two session types") };
            let ts = explore_turn(&Configuration::new(p.clone(), q.clone()), Limits::states(opts.limit));
            match opts.format.unwrap_or(Format::Dot) {
                Format::Dot => ts.lts.to_dot("ts"),
                Format::Json => pretty_json(&lts_json(&ts.lts))?,
                Format::Text => lts_text(&ts.lts),
            }
        }
    };
    emit(&text, out)?;
    Ok(0)
}
