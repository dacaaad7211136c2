//! `tempo` — DatalogMTL reasoning from the command line.
//!
//! Subcommands: `rewrite` (magic-set rewriting of a program for a query),
//! `materialize` (bottom-up fixpoint with an optional store dump), `query`
//! (fact entailment, magic route by default), and `bench` (deterministic
//! benchmark instances, optionally comparing the two routes).
//!
//! Exit codes: 0 for a certified answer, 2 when the round cap was exhausted
//! before certification, 1 for usage, parse, or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tempo_core::bench::{
    compare_runs, generate_bench, render_jsonl, render_table, BenchSpec, Generator, QueryPolicy,
};
use tempo_core::engine::{answer_query, EngineConfig, Entailed};
use tempo_core::magic::{magic_rewrite, rewrite_for_entailment};
use tempo_core::materialisation::{materialize, MaterialisationConfig};
use tempo_core::parser::{
    parse_dataset_with, parse_program_with, parse_query_with, ArityTable, ProgramFile,
};
use tempo_core::syntax::{normalize, strip_zero_ops, Dataset, Query};
use tempo_core::temporal::Interval;

const DEFAULT_MAX_ROUNDS: usize = 1000;

#[derive(Parser)]
#[command(
    name = "tempo",
    version,
    about = "DatalogMTL reasoning: magic-set rewriting, materialisation, fact entailment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite a program for a query; prints a re-parseable program file.
    Rewrite {
        /// Program file (rules, optionally embedded facts).
        #[arg(short = 'p', long)]
        program: PathBuf,
        /// Query file: one `Atom@Interval` line.
        #[arg(short = 'q', long)]
        query: PathBuf,
        /// Also swap the unbounded seed into the program (the form whose
        /// materialisation terminates), instead of emitting the seed fact.
        #[arg(long)]
        widen: bool,
    },
    /// Materialise the least model and dump the derived store.
    Materialize {
        #[arg(short = 'p', long)]
        program: PathBuf,
        /// Extra facts beyond those embedded in the program file.
        #[arg(short = 'd', long)]
        dataset: Option<PathBuf>,
        /// Round cap [default: 1000, or TEMPO_MAX_ROUNDS].
        #[arg(long)]
        max_rounds: Option<usize>,
        /// Disable the semi-naive optimisation.
        #[arg(long)]
        naive: bool,
        /// Print per-predicate derivation statistics.
        #[arg(long)]
        stats: bool,
        /// Write the store dump here instead of stdout.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Answer a fact-entailment query (yes / no / unknown).
    Query {
        #[arg(short = 'p', long)]
        program: PathBuf,
        #[arg(short = 'd', long)]
        dataset: Option<PathBuf>,
        #[arg(short = 'q', long)]
        query: PathBuf,
        /// Materialise the original program instead of the rewritten one.
        #[arg(long)]
        no_magic: bool,
        /// Round cap [default: 1000, or TEMPO_MAX_ROUNDS].
        #[arg(long)]
        max_rounds: Option<usize>,
    },
    /// Generate a benchmark instance, optionally comparing both routes.
    Bench {
        #[arg(long, default_value_t = Generator::Chain)]
        generator: Generator,
        #[arg(long)]
        users: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = QueryPolicy::Reachable)]
        policy: QueryPolicy,
        /// Run the query through both routes and report derived-fact counts,
        /// rounds, and timings (table on stderr, JSON lines on stdout).
        #[arg(long)]
        compare: bool,
        /// Round cap [default: 1000, or TEMPO_MAX_ROUNDS].
        #[arg(long)]
        max_rounds: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; genuine usage errors exit 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("tempo: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Rewrite { program, query, widen } => cmd_rewrite(&program, &query, widen),
        Command::Materialize { program, dataset, max_rounds, naive, stats, output } => {
            cmd_materialize(&program, dataset.as_deref(), max_rounds, naive, stats, output)
        }
        Command::Query { program, dataset, query, no_magic, max_rounds } => {
            cmd_query(&program, dataset.as_deref(), &query, no_magic, max_rounds)
        }
        Command::Bench { generator, users, seed, policy, compare, max_rounds } => {
            cmd_bench(generator, users, seed, policy, compare, max_rounds)
        }
    }
}

fn resolve_max_rounds(flag: Option<usize>) -> Result<usize, String> {
    let rounds = match flag {
        Some(n) => n,
        None => match std::env::var("TEMPO_MAX_ROUNDS") {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| format!("TEMPO_MAX_ROUNDS must be a positive integer, got {s:?}"))?,
            Err(_) => DEFAULT_MAX_ROUNDS,
        },
    };
    if rounds == 0 {
        return Err("the round cap must be at least 1".to_string());
    }
    Ok(rounds)
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &Path, arities: &mut ArityTable) -> Result<ProgramFile, String> {
    parse_program_with(&read(path)?, arities).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_query(path: &Path, arities: &mut ArityTable) -> Result<Query, String> {
    parse_query_with(&read(path)?, arities).map_err(|e| format!("{}: {e}", path.display()))
}

/// Facts embedded in the program file plus the optional dataset file.
fn load_facts(
    embedded: &Dataset,
    dataset: Option<&Path>,
    arities: &mut ArityTable,
) -> Result<Dataset, String> {
    let mut data = embedded.clone();
    if let Some(path) = dataset {
        let extra = parse_dataset_with(&read(path)?, arities)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        for fact in extra.facts() {
            data.push(fact.clone());
        }
    }
    Ok(data)
}

fn cmd_rewrite(program: &Path, query: &Path, widen: bool) -> Result<ExitCode, String> {
    let mut arities = ArityTable::new();
    let file = load_program(program, &mut arities)?;
    let q = load_query(query, &mut arities)?;
    if widen {
        let (rewritten, data) =
            rewrite_for_entailment(&file.program, &file.facts, &q).map_err(|e| e.to_string())?;
        print!("{}", ProgramFile { program: rewritten, facts: data });
    } else {
        let (output, extended) =
            magic_rewrite(&file.program, &file.facts, &q).map_err(|e| e.to_string())?;
        print!("{}", ProgramFile { program: strip_zero_ops(&output.program), facts: extended });
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_materialize(
    program: &Path,
    dataset: Option<&Path>,
    max_rounds: Option<usize>,
    naive: bool,
    stats: bool,
    output: Option<PathBuf>,
) -> Result<ExitCode, String> {
    let mut arities = ArityTable::new();
    let file = load_program(program, &mut arities)?;
    let data = load_facts(&file.facts, dataset, &mut arities)?;
    let cfg = MaterialisationConfig {
        max_rounds: resolve_max_rounds(max_rounds)?,
        goal: None,
        collect_stats: stats,
        naive,
    };
    let run = materialize(&normalize(&file.program), &data, &cfg);

    let dump = run.interpretation.to_string();
    match output {
        Some(path) => fs::write(&path, dump).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{dump}"),
    }
    eprintln!(
        "rounds: {}  fixpoint: {}  entries: {}",
        run.rounds,
        run.reached_fixpoint,
        run.interpretation.entry_count()
    );
    if stats {
        for (predicate, s) in &run.stats {
            eprintln!(
                "  {predicate}: derived {} (rounds {}..{})",
                s.derived, s.first_round, s.last_round
            );
        }
    }
    Ok(if run.reached_fixpoint { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_query(
    program: &Path,
    dataset: Option<&Path>,
    query: &Path,
    no_magic: bool,
    max_rounds: Option<usize>,
) -> Result<ExitCode, String> {
    let mut arities = ArityTable::new();
    let file = load_program(program, &mut arities)?;
    let data = load_facts(&file.facts, dataset, &mut arities)?;
    let q = load_query(query, &mut arities)?;
    let cfg = EngineConfig {
        use_magic: !no_magic,
        max_rounds: resolve_max_rounds(max_rounds)?,
        naive: false,
    };
    let answer = answer_query(&file.program, &data, &q, &cfg).map_err(|e| e.to_string())?;

    println!("{}", answer.entailed);
    for (substitution, intervals) in &answer.substitutions {
        if substitution.is_empty() {
            continue;
        }
        let bindings: Vec<String> =
            substitution.iter().map(|(var, value)| format!("{var}={value}")).collect();
        println!("  {} on {intervals}", bindings.join(", "));
    }
    let note = if answer.reached_fixpoint {
        "fixpoint"
    } else if answer.entailed == Entailed::Yes {
        "stopped early at goal"
    } else {
        "round cap exhausted"
    };
    eprintln!("rounds: {}  ({note})", answer.rounds);
    Ok(match answer.entailed {
        Entailed::Yes | Entailed::NoCertified => ExitCode::SUCCESS,
        Entailed::Unknown => ExitCode::from(2),
    })
}

fn cmd_bench(
    generator: Generator,
    users: usize,
    seed: u64,
    policy: QueryPolicy,
    compare: bool,
    max_rounds: Option<usize>,
) -> Result<ExitCode, String> {
    let spec = BenchSpec {
        generator,
        users,
        interaction_span: Interval::closed_int(0, 20),
        seed,
        query_policy: policy,
    };
    let (p, d, q) = generate_bench(&spec).map_err(|e| e.to_string())?;
    if !compare {
        print!("{}", ProgramFile { program: p, facts: d });
        println!("% query: {q}");
        return Ok(ExitCode::SUCCESS);
    }
    let reports = compare_runs(&p, &d, std::slice::from_ref(&q), resolve_max_rounds(max_rounds)?)
        .map_err(|e| e.to_string())?;
    print!("{}", render_jsonl(&reports));
    eprint!("{}", render_table(&reports));
    let certified =
        reports.iter().all(|r| r.magic.entailed != "unknown" && r.baseline.entailed != "unknown");
    Ok(if certified { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
