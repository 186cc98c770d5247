use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rq_core::rq::{self, FragmentReport};
use rq_core::solver::{self, Outcome, Trace};
use rq_core::syntax::{parse_program, Program};
use rq_core::theory::{EqTheory, LiaTheory, Theory};
use rq_core::{Answer, Options, ProveOutcome, Verdict};
use serde_json::{json, Value as Json};

const EXIT_SAT: u8 = 0;
const EXIT_UNSAT: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_INPUT: u8 = 3;

/// Satisfiability of formulas with nested restricted quantifiers over finite sets.
#[derive(Parser)]
#[command(name = "rq-solve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the query and print one answer (or more with --all / --max-solutions).
    Solve(SolveArgs),
    /// Print every answer.
    Enumerate(SolveArgs),
    /// Print the fragment of the query, its domain graph and any forall-exists loop.
    Classify(Common),
    /// Prove the query valid by refuting its negation.
    Prove(Common),
    /// Solve while printing every rule application.
    Trace(Common),
}

#[derive(Args)]
struct Common {
    /// Input file, or `-` for standard input.
    file: PathBuf,
    /// Element theory. Defaults to the file's `% theory:` header, else lia.
    #[arg(long, value_enum)]
    theory: Option<TheoryArg>,
    /// Rule applications allowed on a single branch.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Stream the rewrite log to standard error.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    json: bool,
    /// Explore independent branches in parallel.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Print every answer.
    #[arg(long)]
    all: bool,
    /// Print at most N answers.
    #[arg(long, value_name = "N")]
    max_solutions: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryArg {
    Eq,
    Lia,
}

struct Input {
    program: Program,
    opts: Options,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Solve(a) => {
            let max = if a.all { None } else { Some(a.max_solutions.unwrap_or(1)) };
            solve(&a.common, max, false)
        }
        Command::Enumerate(a) => solve(&a.common, a.max_solutions, false),
        Command::Trace(c) => solve(&c, Some(1), true),
        Command::Classify(c) => classify(&c),
        Command::Prove(c) => prove(&c),
    }
}

fn load(c: &Common) -> Result<Input, String> {
    let src = if c.file.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| format!("reading stdin: {e}"))?;
        s
    } else {
        std::fs::read_to_string(&c.file).map_err(|e| format!("{}: {e}", c.file.display()))?
    };
    let program = parse_program(&src).map_err(|e| e.to_string())?;
    let theory: Arc<dyn Theory> = match c.theory.or_else(|| header_theory(&src)) {
        Some(TheoryArg::Eq) => Arc::new(EqTheory),
        Some(TheoryArg::Lia) | None => Arc::new(LiaTheory),
    };
    let opts = Options {
        theory,
        max_steps: c.max_steps,
        max_answers: Some(1),
        parallel: c.parallel,
    };
    Ok(Input { program, opts })
}

/// `% theory: eq` in a leading comment selects the theory.
fn header_theory(src: &str) -> Option<TheoryArg> {
    src.lines()
        .map(str::trim)
        .take_while(|l| l.is_empty() || l.starts_with('%'))
        .filter_map(|l| l.trim_start_matches('%').trim().strip_prefix("theory:"))
        .find_map(|t| match t.trim() {
            "eq" => Some(TheoryArg::Eq),
            "lia" => Some(TheoryArg::Lia),
            _ => None,
        })
}

fn with_trace<T>(enabled: bool, to_stdout: bool, f: impl FnOnce(Trace<'_>) -> T) -> T {
    if !enabled {
        return f(None);
    }
    let mut sink = |line: String| {
        if to_stdout {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    };
    f(Some(&mut sink))
}

fn solve(c: &Common, max: Option<usize>, trace_cmd: bool) -> Result<u8, String> {
    let mut input = load(c)?;
    input.opts.max_answers = max;
    let outcome = with_trace(c.trace || trace_cmd, trace_cmd && !c.json, |t| {
        solver::solve(&input.program, &input.opts, t)
    })
    .map_err(|e| e.to_string())?;
    let out = if c.json {
        json_outcome(&outcome).to_string()
    } else {
        text_outcome(&outcome)
    };
    print(&out);
    Ok(match outcome.verdict {
        Verdict::Sat(_) => EXIT_SAT,
        Verdict::Unsat => EXIT_UNSAT,
        Verdict::Unknown(_) => EXIT_UNKNOWN,
    })
}

fn classify(c: &Common) -> Result<u8, String> {
    let input = load(c)?;
    let report = rq::classify_program(&input.program, false).map_err(|e| e.to_string())?;
    if c.json {
        print(&json_report(&report).to_string());
    } else {
        print(&report.to_string());
    }
    Ok(EXIT_SAT)
}

fn prove(c: &Common) -> Result<u8, String> {
    let input = load(c)?;
    let (result, outcome) =
        with_trace(c.trace, false, |t| solver::prove(&input.program, &input.opts, t)).map_err(|e| e.to_string())?;
    if c.json {
        let mut j = json!({
            "fragment": outcome.report.verdict.name(),
            "steps": outcome.stats.steps,
        });
        match &result {
            ProveOutcome::Proved => j["result"] = json!("proved"),
            ProveOutcome::Counterexample(a) => {
                j["result"] = json!("counterexample");
                j["counterexample"] = json_answer(a);
            }
            ProveOutcome::Unknown(why) => {
                j["result"] = json!("unknown");
                j["reason"] = json!(why);
            }
        }
        print(&j.to_string());
    } else {
        let text = match &result {
            ProveOutcome::Proved => "proved\n".to_string(),
            ProveOutcome::Counterexample(a) => format!("counterexample\n{}", text_answer(a)),
            ProveOutcome::Unknown(why) => format!("unknown: {why}\n"),
        };
        print(&text);
    }
    Ok(match result {
        ProveOutcome::Counterexample(_) => EXIT_SAT,
        ProveOutcome::Proved => EXIT_UNSAT,
        ProveOutcome::Unknown(_) => EXIT_UNKNOWN,
    })
}

fn print(s: &str) {
    let mut out = io::stdout().lock();
    let _ = out.write_all(s.as_bytes());
    if !s.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
}

fn text_answer(a: &Answer) -> String {
    let mut s = format!("  {a}\n");
    for line in a.valuation_text() {
        s.push_str(&format!("    {line}\n"));
    }
    s
}

fn text_outcome(o: &Outcome) -> String {
    match &o.verdict {
        Verdict::Sat(answers) => {
            let mut s = String::from("sat\n");
            for a in answers {
                s.push_str(&text_answer(a));
            }
            s
        }
        Verdict::Unsat => "unsat\n".to_string(),
        Verdict::Unknown(why) => format!("unknown: {why}\n"),
    }
}

fn json_answer(a: &Answer) -> Json {
    let valuation: serde_json::Map<String, Json> = a
        .valuation
        .iter()
        .map(|(v, x)| (v.to_string(), json!(x.to_string())))
        .collect();
    json!({
        "constraints": a.to_string(),
        "valuation": valuation,
    })
}

fn json_outcome(o: &Outcome) -> Json {
    let mut j = json!({
        "verdict": o.verdict.label(),
        "fragment": o.report.verdict.name(),
        "steps": o.stats.steps,
    });
    match &o.verdict {
        Verdict::Sat(answers) => j["answers"] = answers.iter().map(json_answer).collect(),
        Verdict::Unknown(why) => j["reason"] = json!(why),
        Verdict::Unsat => {}
    }
    j
}

fn json_report(r: &FragmentReport) -> Json {
    let branches: Vec<Json> = r
        .branches
        .iter()
        .map(|b| {
            json!({
                "fragment": b.verdict.name(),
                "domain_function": b.nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
                "edges": b.edges.iter().map(|&(x, y)| json!([b.nodes[x].to_string(), b.nodes[y].to_string()])).collect::<Vec<_>>(),
                "loop": b.witness.as_ref().map(|w| w.iter().map(|&n| b.nodes[n].to_string()).collect::<Vec<_>>()),
            })
        })
        .collect();
    json!({
        "fragment": r.verdict.name(),
        "branches": branches,
        "warnings": r.warnings,
    })
}
