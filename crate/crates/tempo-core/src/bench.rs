//! Desk-scale benchmark instances for the viral-post scenario, plus the
//! magic-versus-baseline comparison report.
//!
//! Every generator produces the same two-rule program — participation `P`
//! spreads backwards along interactions `I` with a `[0,2]` widening and a
//! `[0,1]` lookback — and differs only in the interaction graph: a chain
//! split into two disconnected components, a binary tree, or a seeded random
//! graph. Interaction times cascade along the path from the participation
//! source so that `reachable` queries genuinely propagate.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::interpretation::Interpretation;
use crate::magic::rewrite_for_entailment;
use crate::materialisation::{materialize, MaterialisationConfig};
use crate::syntax::{
    normalize, Dataset, Fact, Predicate, Program, Query, RelationalAtom, Term, AUX_PREFIX,
};
use crate::temporal::{Interval, TimePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Chain,
    Tree,
    RandomGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryPolicy {
    Reachable,
    Unreachable,
}

impl FromStr for Generator {
    type Err = String;
    fn from_str(s: &str) -> Result<Generator, String> {
        match s {
            "chain" => Ok(Generator::Chain),
            "tree" => Ok(Generator::Tree),
            "random-graph" => Ok(Generator::RandomGraph),
            other => Err(format!("unknown generator {other:?} (chain, tree, random-graph)")),
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Chain => write!(f, "chain"),
            Generator::Tree => write!(f, "tree"),
            Generator::RandomGraph => write!(f, "random-graph"),
        }
    }
}

impl FromStr for QueryPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<QueryPolicy, String> {
        match s {
            "reachable" => Ok(QueryPolicy::Reachable),
            "unreachable" => Ok(QueryPolicy::Unreachable),
            other => Err(format!("unknown query policy {other:?} (reachable, unreachable)")),
        }
    }
}

impl fmt::Display for QueryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryPolicy::Reachable => write!(f, "reachable"),
            QueryPolicy::Unreachable => write!(f, "unreachable"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub generator: Generator,
    pub users: usize,
    pub interaction_span: Interval,
    pub seed: u64,
    pub query_policy: QueryPolicy,
}

impl BenchSpec {
    pub fn new(generator: Generator, users: usize, seed: u64, policy: QueryPolicy) -> BenchSpec {
        BenchSpec {
            generator,
            users,
            interaction_span: Interval::closed_int(0, 20),
            seed,
            query_policy: policy,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("benchmarks need at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("interaction span must have finite integer endpoints")]
    BadSpan,
}

/// The two spreading rules used by every benchmark instance.
pub fn viral_program() -> Program {
    crate::parser::parse_program(
        "boxplus[0,2] P(X) :- I(X,Y), P(Y).\n\
         boxplus[0,1] P(X) :- I(X,Y), diamondminus[0,1] P(Y).",
    )
    .expect("embedded program parses")
    .program
}

fn punctual_fact(name: &str, args: Vec<&str>, t: i64) -> Fact {
    Fact::new(
        RelationalAtom::make(name, args.into_iter().map(Term::constant).collect()),
        Interval::point(TimePoint::integer(t)),
    )
    .expect("constants only")
}

/// Times that cascade from a source so participation provably propagates
/// along the edge sequence. The first step off the punctual source must stay
/// within the `[0,1]` lookback of the second rule; later steps may use the
/// full `[0,2]` widening because derived participation covers an interval.
struct Cascade<'a> {
    rng: &'a mut ChaCha8Rng,
    hi: i64,
    current: i64,
    first: bool,
}

impl Cascade<'_> {
    fn next_time(&mut self) -> i64 {
        let max_step = if self.first { 1 } else { 2 };
        self.first = false;
        self.current = (self.current + self.rng.gen_range(0..=max_step)).min(self.hi);
        self.current
    }
}

struct Builder {
    facts: Vec<Fact>,
    lo: i64,
    hi: i64,
}

impl Builder {
    /// A chain `u0 -> u1 -> ... -> u(n-1)` with the participation source at
    /// the far end; returns the time at which the head provably
    /// participates. Single-user components get just the source fact.
    fn chain_component(&mut self, names: &[String], rng: &mut ChaCha8Rng) -> i64 {
        let start = self.lo + rng.gen_range(0..=2.min(self.hi - self.lo));
        let source = names.last().expect("non-empty component");
        self.facts.push(punctual_fact("P", vec![source], start));
        let mut cascade = Cascade { rng, hi: self.hi, current: start, first: true };
        let mut head_time = start;
        for pair in names.windows(2).rev() {
            head_time = cascade.next_time();
            self.facts.push(punctual_fact("I", vec![&pair[0], &pair[1]], head_time));
        }
        head_time
    }
}

/// Deterministically builds `(program, dataset, query)` from the spec.
///
/// - `chain`: two disconnected chain components (sizes `ceil(n/2)` and
///   `floor(n/2)`), each with its own participation source at the tail; the
///   reachable query asks about the head of the first component.
/// - `tree`: a binary tree with edges from parent to child, source at the
///   last node, coherent times along the path to the root.
/// - `random-graph`: `2n` random edges; the reachable query picks the node
///   farthest from the source along reversed edges.
/// - `unreachable` always adds a two-user component with no participation
///   source and asks about it.
pub fn generate_bench(spec: &BenchSpec) -> Result<(Program, Dataset, Query), BenchError> {
    if spec.users < 2 {
        return Err(BenchError::TooFewUsers(spec.users));
    }
    let lo = spec
        .interaction_span
        .lower()
        .as_rational()
        .and_then(|q| q.ceil().numer().to_i64())
        .ok_or(BenchError::BadSpan)?;
    let hi = spec
        .interaction_span
        .upper()
        .as_rational()
        .and_then(|q| q.floor().numer().to_i64())
        .ok_or(BenchError::BadSpan)?;
    if lo > hi {
        return Err(BenchError::BadSpan);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut builder = Builder { facts: Vec::new(), lo, hi };
    let names: Vec<String> = (0..spec.users).map(|i| format!("u{i}")).collect();

    let (reachable_constant, reachable_time) = match spec.generator {
        Generator::Chain => {
            // Two users make one two-node chain; more split into two
            // disconnected components so baselines derive irrelevant facts.
            let split = if spec.users == 2 { 2 } else { spec.users.div_ceil(2) };
            let head_time = builder.chain_component(&names[..split], &mut rng);
            if split < spec.users {
                builder.chain_component(&names[split..], &mut rng);
            }
            (names[0].clone(), head_time)
        }
        Generator::Tree => {
            let start = lo + rng.gen_range(0..=2.min(hi - lo));
            builder.facts.push(punctual_fact("P", vec![&names[spec.users - 1]], start));
            // The path from the source up to the root cascades; every other
            // edge gets an independent time.
            let mut on_path = vec![false; spec.users];
            let mut node = spec.users - 1;
            on_path[node] = true;
            while node > 0 {
                node = (node - 1) / 2;
                on_path[node] = true;
            }
            let mut cascade = Cascade { rng: &mut rng, hi, current: start, first: true };
            let mut root_time = start;
            // Walk the source path bottom-up so each edge time lands inside
            // the child's derived window.
            let mut child = spec.users - 1;
            let mut path_times: Vec<(usize, usize, i64)> = Vec::new();
            while child > 0 {
                let parent = (child - 1) / 2;
                root_time = cascade.next_time();
                path_times.push((parent, child, root_time));
                child = parent;
            }
            for (parent, child, t) in path_times {
                builder.facts.push(punctual_fact("I", vec![&names[parent], &names[child]], t));
            }
            for parent in 0..spec.users {
                for child in [2 * parent + 1, 2 * parent + 2] {
                    if child < spec.users && !(on_path[child] && on_path[parent]) {
                        let t = rng.gen_range(lo..=hi);
                        builder.facts.push(punctual_fact(
                            "I",
                            vec![&names[parent], &names[child]],
                            t,
                        ));
                    }
                }
            }
            (names[0].clone(), root_time)
        }
        Generator::RandomGraph => {
            let mut edges: Vec<(usize, usize)> = Vec::new();
            let wanted = 2 * spec.users;
            let mut attempts = 0;
            while edges.len() < wanted && attempts < 20 * wanted {
                attempts += 1;
                let a = rng.gen_range(0..spec.users);
                let b = rng.gen_range(0..spec.users);
                if a != b && !edges.contains(&(a, b)) {
                    edges.push((a, b));
                }
            }
            let source = rng.gen_range(0..spec.users);
            let t_source = rng.gen_range(lo..=hi);
            builder.facts.push(punctual_fact("P", vec![&names[source]], t_source));
            for (a, b) in &edges {
                let t = rng.gen_range(lo..=hi);
                builder.facts.push(punctual_fact("I", vec![&names[*a], &names[*b]], t));
            }
            // Farthest node that can reach the source along I-edges.
            let mut dist = vec![usize::MAX; spec.users];
            dist[source] = 0;
            let mut frontier = vec![source];
            while let Some(y) = frontier.pop() {
                for (a, b) in &edges {
                    if *b == y && dist[*a] == usize::MAX {
                        dist[*a] = dist[y] + 1;
                        frontier.push(*a);
                    }
                }
            }
            let far = (0..spec.users)
                .filter(|i| dist[*i] != usize::MAX)
                .max_by_key(|i| dist[*i])
                .unwrap_or(source);
            (names[far].clone(), t_source)
        }
    };

    let (query_constant, query_time) = match spec.query_policy {
        QueryPolicy::Reachable => (reachable_constant, reachable_time),
        QueryPolicy::Unreachable => {
            // A disconnected two-user component with no participation source.
            let mid = lo + (hi - lo) / 2;
            builder.facts.push(punctual_fact("I", vec!["lone0", "lone1"], mid));
            ("lone0".to_string(), mid)
        }
    };

    let query = Query {
        atom: RelationalAtom::make("P", vec![Term::constant(&query_constant)]),
        interval: Interval::point(TimePoint::integer(query_time)),
    };
    Ok((viral_program(), Dataset::new(builder.facts), query))
}

/// Is this a predicate of the input program (not a magic or auxiliary one)?
pub fn is_original_predicate(p: &Predicate) -> bool {
    !p.is_magic() && !p.name().starts_with(AUX_PREFIX)
}

/// Entries over original predicates only.
pub fn original_entry_count(store: &Interpretation) -> usize {
    store
        .atoms()
        .filter(|(atom, _)| is_original_predicate(&atom.predicate))
        .map(|(_, set)| set.len())
        .sum()
}

/// One route's share of a [`QueryReport`].
#[derive(Debug, Clone, Serialize)]
pub struct RouteReport {
    pub entailed: String,
    pub rounds: usize,
    /// `false` flags a cap-exhausted run.
    pub reached_fixpoint: bool,
    pub rewrite_ms: f64,
    pub materialize_ms: f64,
    /// Derived entries over the input program's predicates.
    pub original_facts: usize,
    /// All entries, including magic and auxiliary predicates.
    pub total_facts: usize,
    pub by_predicate: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub query: String,
    pub magic: RouteReport,
    pub baseline: RouteReport,
}

fn run_route(
    p: &Program,
    d: &Dataset,
    q: &Query,
    use_magic: bool,
    max_rounds: usize,
) -> Result<RouteReport, crate::magic::MagicError> {
    let goal = Fact::new(q.atom.clone(), q.interval.clone()).expect("ground bench query");
    let rewrite_start = Instant::now();
    let (program, dataset) =
        if use_magic { rewrite_for_entailment(p, d, q)? } else { (normalize(p), d.clone()) };
    let rewrite_ms = rewrite_start.elapsed().as_secs_f64() * 1e3;

    // Full fixpoint, no goal early-stop: fact counts are only comparable at
    // the fixpoint, and `reached_fixpoint: false` should mean the cap.
    let mat_start = Instant::now();
    let cfg = MaterialisationConfig { max_rounds, ..Default::default() };
    let run = materialize(&program, &dataset, &cfg);
    let materialize_ms = mat_start.elapsed().as_secs_f64() * 1e3;

    let entailed = if run.interpretation.satisfies_fact(&goal) {
        "yes"
    } else if run.reached_fixpoint {
        "no"
    } else {
        "unknown"
    };
    Ok(RouteReport {
        entailed: entailed.to_string(),
        rounds: run.rounds,
        reached_fixpoint: run.reached_fixpoint,
        rewrite_ms,
        materialize_ms,
        original_facts: original_entry_count(&run.interpretation),
        total_facts: run.interpretation.entry_count(),
        by_predicate: run.interpretation.counts_by_predicate(),
    })
}

/// Runs every ground query through both routes and collects the comparison.
pub fn compare_runs(
    p: &Program,
    d: &Dataset,
    queries: &[Query],
    max_rounds: usize,
) -> Result<Vec<QueryReport>, crate::magic::MagicError> {
    queries
        .iter()
        .map(|q| {
            Ok(QueryReport {
                query: q.to_string(),
                magic: run_route(p, d, q, true, max_rounds)?,
                baseline: run_route(p, d, q, false, max_rounds)?,
            })
        })
        .collect()
}

/// One JSON document per line, machine-readable.
pub fn render_jsonl(reports: &[QueryReport]) -> String {
    reports
        .iter()
        .map(|r| serde_json::to_string(r).expect("report serializes"))
        .map(|line| line + "\n")
        .collect()
}

/// A plain-text comparison table.
pub fn render_table(reports: &[QueryReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<28} {:>8} {:>7} {:>9} {:>9} {:>8} {:>7} {:>9} {:>9}\n",
        "query", "m.ans", "m.rnd", "m.facts", "m.ms", "b.ans", "b.rnd", "b.facts", "b.ms",
    ));
    for r in reports {
        let flag = |route: &RouteReport| if route.reached_fixpoint { "" } else { "*" };
        out.push_str(&format!(
            "{:<28} {:>8} {:>7} {:>9} {:>9.2} {:>8} {:>7} {:>9} {:>9.2}\n",
            r.query,
            format!("{}{}", r.magic.entailed, flag(&r.magic)),
            r.magic.rounds,
            r.magic.original_facts,
            r.magic.rewrite_ms + r.magic.materialize_ms,
            format!("{}{}", r.baseline.entailed, flag(&r.baseline)),
            r.baseline.rounds,
            r.baseline.original_facts,
            r.baseline.rewrite_ms + r.baseline.materialize_ms,
        ));
    }
    if reports.iter().any(|r| !r.magic.reached_fixpoint || !r.baseline.reached_fixpoint) {
        out.push_str("* round cap exhausted before a fixpoint\n");
    }
    out
}
