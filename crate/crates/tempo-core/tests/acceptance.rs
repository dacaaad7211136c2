//! The acceptance gate. One test per criterion; each prints a single
//! `criterion N ...: pass` line (visible with `--nocapture`), and the test
//! name doubles as the pass/fail line in the default transcript.
//!
//! Random suites draw from fixed seeds so every run exercises the same
//! instances.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tempo_core::bench::{generate_bench, is_original_predicate, BenchSpec, Generator, QueryPolicy};
use tempo_core::engine::{answer_query, EngineConfig, Entailed};
use tempo_core::interpretation::Interpretation;
use tempo_core::magic::{magic_rewrite, rewrite_for_entailment};
use tempo_core::materialisation::{materialize, materialize_rounds, swap, MaterialisationConfig};
use tempo_core::oracle::oracle_eval_at;
use tempo_core::parser::{parse_dataset, parse_program, parse_query};
use tempo_core::semantics::eval_metric;
use tempo_core::syntax::{
    normalize, strip_zero_ops, Dataset, Fact, MetricAtom, Program, Query, RelationalAtom, Rule,
    Term,
};
use tempo_core::temporal::{Interval, TimePoint};

// ---------------------------------------------------------------------------
// Shared random-instance generation
// ---------------------------------------------------------------------------

const CONSTANTS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];
const EDB: [(&str, usize); 2] = [("I", 2), ("E1", 1)];
const IDB: [(&str, usize); 3] = [("P", 1), ("Q", 1), ("R", 2)];

/// A window with integer endpoints, `0 <= a <= b <= 3`, mostly closed.
fn random_window(rng: &mut ChaCha8Rng) -> Interval {
    let a = rng.gen_range(0..=3i64);
    let b = rng.gen_range(a..=3i64);
    if a == b {
        return Interval::closed_int(a, b);
    }
    let lower_closed = rng.gen_bool(0.8);
    let upper_closed = rng.gen_bool(0.8);
    Interval::new(TimePoint::integer(a), lower_closed, TimePoint::integer(b), upper_closed)
        .expect("a < b is never empty")
}

struct TermPool<'a> {
    constants: &'a [&'static str],
    vars: Vec<String>,
    next_var: usize,
}

impl<'a> TermPool<'a> {
    fn new(constants: &'a [&'static str]) -> TermPool<'a> {
        TermPool { constants, vars: Vec::new(), next_var: 0 }
    }

    fn term(&mut self, rng: &mut ChaCha8Rng) -> Term {
        let roll = rng.gen_range(0..100);
        if roll < 15 {
            Term::constant(self.constants[rng.gen_range(0..self.constants.len())])
        } else if roll < 45 || self.vars.is_empty() {
            let v = format!("X{}", self.next_var);
            self.next_var += 1;
            self.vars.push(v.clone());
            Term::var(&v)
        } else {
            Term::var(&self.vars[rng.gen_range(0..self.vars.len())])
        }
    }

    fn atom(&mut self, rng: &mut ChaCha8Rng, name: &str, arity: usize) -> RelationalAtom {
        RelationalAtom::make(name, (0..arity).map(|_| self.term(rng)).collect())
    }
}

fn any_predicate(rng: &mut ChaCha8Rng) -> (&'static str, usize) {
    let all = [EDB[0], EDB[1], IDB[0], IDB[1], IDB[2]];
    all[rng.gen_range(0..all.len())]
}

/// A body atom over any predicate, any operator, depth at most one.
fn extra_atom(rng: &mut ChaCha8Rng, pool: &mut TermPool) -> MetricAtom {
    let (name, arity) = any_predicate(rng);
    let inner = MetricAtom::rel(pool.atom(rng, name, arity));
    match rng.gen_range(0..8) {
        0 | 1 => inner,
        2 => MetricAtom::box_plus(random_window(rng), inner),
        3 => MetricAtom::box_minus(random_window(rng), inner),
        4 => MetricAtom::diamond_plus(random_window(rng), inner),
        5 => MetricAtom::diamond_minus(random_window(rng), inner),
        kind => {
            let (name2, arity2) = any_predicate(rng);
            let other = MetricAtom::rel(pool.atom(rng, name2, arity2));
            if kind == 6 {
                MetricAtom::until(inner, random_window(rng), other)
            } else {
                MetricAtom::since(inner, random_window(rng), other)
            }
        }
    }
}

/// One random rule. Every body starts with an extensional atom (bare or
/// diamond), which keeps each rule's derivations inside a fixed bounded
/// window of the input facts, so both evaluation routes provably reach a
/// fixpoint (the termination discipline behind criteria 3 and 6).
fn random_rule(rng: &mut ChaCha8Rng, constants: &[&'static str]) -> Rule {
    let mut pool = TermPool::new(constants);

    let (guard_name, guard_arity) = EDB[rng.gen_range(0..EDB.len())];
    let guard_rel = MetricAtom::rel(pool.atom(rng, guard_name, guard_arity));
    let guard = match rng.gen_range(0..4) {
        0 => MetricAtom::diamond_plus(random_window(rng), guard_rel),
        1 => MetricAtom::diamond_minus(random_window(rng), guard_rel),
        _ => guard_rel,
    };
    let mut body = vec![guard];
    for _ in 0..rng.gen_range(0..=2usize) {
        body.push(extra_atom(rng, &mut pool));
    }

    let body_vars: Vec<String> =
        body.iter().flat_map(|m| m.variables()).collect::<BTreeSet<_>>().into_iter().collect();
    let (head_name, head_arity) = IDB[rng.gen_range(0..IDB.len())];
    let head_args: Vec<Term> = (0..head_arity)
        .map(|_| {
            if body_vars.is_empty() || rng.gen_bool(0.25) {
                Term::constant(constants[rng.gen_range(0..constants.len())])
            } else {
                Term::var(&body_vars[rng.gen_range(0..body_vars.len())])
            }
        })
        .collect();
    let head_rel = MetricAtom::rel(RelationalAtom::make(head_name, head_args));
    let head = match rng.gen_range(0..3) {
        0 => head_rel,
        1 => MetricAtom::box_plus(random_window(rng), head_rel),
        _ => MetricAtom::box_minus(random_window(rng), head_rel),
    };
    Rule::new(head, body).expect("head variables drawn from the body")
}

/// Random bounded facts: integer endpoints in `[0,10]`, mostly punctual.
fn random_facts(rng: &mut ChaCha8Rng, constants: &[&'static str]) -> Dataset {
    let mut d = Dataset::default();
    for _ in 0..rng.gen_range(3..=8usize) {
        let (name, arity) = any_predicate(rng);
        let atom = RelationalAtom::make(
            name,
            (0..arity)
                .map(|_| Term::constant(constants[rng.gen_range(0..constants.len())]))
                .collect(),
        );
        let k1 = rng.gen_range(0..=10i64);
        let interval = if rng.gen_bool(0.6) {
            Interval::point(TimePoint::integer(k1))
        } else {
            let k2 = rng.gen_range(k1..=10i64);
            if k1 == k2 {
                Interval::point(TimePoint::integer(k1))
            } else {
                Interval::new(
                    TimePoint::integer(k1),
                    rng.gen_bool(0.85),
                    TimePoint::integer(k2),
                    rng.gen_bool(0.85),
                )
                .expect("k1 < k2")
            }
        };
        d.push(Fact::new(atom, interval).expect("constants only"));
    }
    d
}

/// A random bounded instance for the equivalence suite: 1-5 rules over at
/// most 6 constants, windows within `[0,3]`, fact endpoints within `[0,10]`.
fn random_instance(rng: &mut ChaCha8Rng) -> (Program, Dataset) {
    let n_constants = rng.gen_range(2..=CONSTANTS.len());
    let constants = &CONSTANTS[..n_constants];
    let mut p = Program::default();
    for _ in 0..rng.gen_range(1..=5usize) {
        p.push(random_rule(rng, constants));
    }
    let d = random_facts(rng, constants);
    (p, d)
}

/// Head predicates of the instance, for query selection.
fn head_predicates(p: &Program) -> Vec<(String, usize)> {
    p.idb_predicates().into_iter().map(|pr| (pr.name().to_string(), pr.arity())).collect()
}

fn active_constants(p: &Program, d: &Dataset) -> Vec<String> {
    let mut set = p.constants();
    set.extend(d.constants());
    set.into_iter().collect()
}

/// A ground query over a random head predicate at a random integer point.
fn random_ground_query(rng: &mut ChaCha8Rng, p: &Program, d: &Dataset) -> Query {
    let heads = head_predicates(p);
    let (name, arity) = heads[rng.gen_range(0..heads.len())].clone();
    let constants = active_constants(p, d);
    let atom = RelationalAtom::make(
        &name,
        (0..arity).map(|_| Term::constant(&constants[rng.gen_range(0..constants.len())])).collect(),
    );
    Query { atom, interval: Interval::point(TimePoint::integer(rng.gen_range(0..=10))) }
}

/// An open query over a random head predicate, all positions distinct vars.
fn random_open_query(rng: &mut ChaCha8Rng, p: &Program) -> Query {
    let heads = head_predicates(p);
    let (name, arity) = heads[rng.gen_range(0..heads.len())].clone();
    let atom =
        RelationalAtom::make(&name, (0..arity).map(|i| Term::var(&format!("V{i}"))).collect());
    Query { atom, interval: Interval::point(TimePoint::integer(0)) }
}

/// All ground instantiations of a query atom over the given constants.
fn ground_instances(atom: &RelationalAtom, constants: &[String]) -> Vec<RelationalAtom> {
    let open: Vec<usize> =
        atom.args.iter().enumerate().filter_map(|(i, t)| t.is_variable().then_some(i)).collect();
    if open.is_empty() {
        return vec![atom.clone()];
    }
    let mut out = Vec::new();
    let mut counters = vec![0usize; open.len()];
    loop {
        let mut inst = atom.clone();
        for (slot, &pos) in open.iter().enumerate() {
            inst.args[pos] = Term::constant(&constants[counters[slot]]);
        }
        out.push(inst);
        let mut carry = 0;
        loop {
            counters[carry] += 1;
            if counters[carry] < constants.len() {
                break;
            }
            counters[carry] = 0;
            carry += 1;
            if carry == open.len() {
                return out;
            }
        }
    }
}

fn config(max_rounds: usize) -> MaterialisationConfig {
    MaterialisationConfig { max_rounds, ..Default::default() }
}

/// Probe grid for the equivalence suite: every half-integer in `[-5, 25]`.
fn half_grid() -> Vec<TimePoint> {
    (-10..=50).map(|k| TimePoint::ratio(k, 2)).collect()
}

// ---------------------------------------------------------------------------
// Criterion 1 — golden rewrite of the running example
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_golden_temporal_rewrite() {
    let started = Instant::now();
    let p = parse_program(
        "boxplus[0,2] P(X) :- I(X,Y), P(Y).\n\
         boxplus[0,1] P(X) :- I(X,Y), diamondminus[0,1] P(Y).",
    )
    .expect("running-example rules parse")
    .program;
    let d = parse_dataset("I(arthur,beatrice)@9\nP(beatrice)@9").expect("facts parse");
    let q = parse_query("P(arthur)@10").expect("query parses");

    let (rewrite, extended) = magic_rewrite(&p, &d, &q).expect("bounded input");

    let expected = parse_program(
        "boxplus[0,2] P(X) :- diamondplus[0,2] m_P_b(X), I(X,Y), P(Y).\n\
         boxplus[0,1] P(X) :- diamondplus[0,1] m_P_b(X), I(X,Y), diamondminus[0,1] P(Y).\n\
         m_P_b(Y) :- diamondplus[0,2] m_P_b(X), I(X,Y).\n\
         boxminus[0,1] m_P_b(Y) :- diamondplus[0,1] m_P_b(X), I(X,Y).",
    )
    .expect("expected rules parse")
    .program;

    assert_eq!(rewrite.program.len(), 4, "got:\n{}", rewrite.program);
    assert!(rewrite.program.same_rules(&expected), "got:\n{}", rewrite.program);
    assert_eq!(rewrite.seed_fact.to_string(), "m_P_b(arthur)@10");
    assert!(extended.facts().contains(&rewrite.seed_fact));

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 1 (golden temporal rewrite): pass — 4 rules + seed, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 2 — golden rewrite of the plain Datalog example
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_golden_datalog_rewrite() {
    let started = Instant::now();
    let p = parse_program("P(X) :- I(X,Y), P(Y).").expect("rule parses").program;
    let q = parse_query("P(arthur)@0").expect("query parses");

    let (rewrite, _) = magic_rewrite(&p, &Dataset::default(), &q).expect("bounded input");
    let stripped = strip_zero_ops(&rewrite.program);

    let expected = parse_program(
        "P(X) :- m_P_b(X), I(X,Y), P(Y).\n\
         m_P_b(Y) :- m_P_b(X), I(X,Y).",
    )
    .expect("expected rules parse")
    .program;

    assert_eq!(stripped.len(), 2, "got:\n{stripped}");
    assert!(stripped.same_rules(&expected), "got:\n{stripped}");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("criterion 2 (golden Datalog rewrite): pass — 2 rules, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 3 — baseline and magic routes entail the same punctual instances
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_route_equivalence_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let grid = half_grid();
    let mut instances = 0usize;
    let mut probes = 0usize;

    for case in 0..210 {
        let (p, d) = random_instance(&mut rng);
        let baseline = materialize(&normalize(&p), &d, &config(200));
        assert!(baseline.reached_fixpoint, "case {case}: baseline hit the cap\n{p}{d}");

        let queries = [random_ground_query(&mut rng, &p, &d), random_open_query(&mut rng, &p)];
        for q in &queries {
            let (pm, dm) = rewrite_for_entailment(&p, &d, q).expect("bounded instance");
            let magic = materialize(&pm, &dm, &config(200));
            assert!(magic.reached_fixpoint, "case {case}: magic route hit the cap\n{p}{d}\n{q}");

            let constants = active_constants(&p, &d);
            for atom in ground_instances(&q.atom, &constants) {
                let base_set = baseline.interpretation.get(&atom);
                let magic_set = magic.interpretation.get(&atom);
                for t in &grid {
                    probes += 1;
                    assert_eq!(
                        base_set.contains_point(t),
                        magic_set.contains_point(t),
                        "case {case}: {atom} at {t} differs between routes\n\
                         baseline: {base_set}\nmagic: {magic_set}\n{p}{d}\nquery {q}"
                    );
                }
            }
        }
        instances += 1;
    }

    let elapsed = started.elapsed();
    assert!(instances >= 200);
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "criterion 3 (route equivalence): pass — {instances} instances, \
         {probes} divergence probes, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 4 — evalMetric against the dense pointwise oracle
// ---------------------------------------------------------------------------

/// A random ground store with integer endpoints in `[-2, 12]`.
fn random_store(rng: &mut ChaCha8Rng) -> Interpretation {
    let mut d = Dataset::default();
    for _ in 0..rng.gen_range(3..=8usize) {
        let (name, arity) = [("S", 1), ("T", 2)][rng.gen_range(0..2)];
        let atom = RelationalAtom::make(
            name,
            (0..arity).map(|_| Term::constant(CONSTANTS[rng.gen_range(0..3)])).collect(),
        );
        let k1 = rng.gen_range(-2..=12i64);
        let k2 = rng.gen_range(k1..=12i64);
        let interval = if k1 == k2 {
            Interval::point(TimePoint::integer(k1))
        } else {
            Interval::new(
                TimePoint::integer(k1),
                rng.gen_bool(0.7),
                TimePoint::integer(k2),
                rng.gen_bool(0.7),
            )
            .expect("non-empty")
        };
        d.push(Fact::new(atom, interval).expect("ground"));
    }
    Interpretation::least_model_of(&d)
}

/// An operand that usually hits the store and occasionally misses it.
fn operand(rng: &mut ChaCha8Rng, store_atoms: &[RelationalAtom]) -> MetricAtom {
    if rng.gen_bool(0.8) && !store_atoms.is_empty() {
        MetricAtom::rel(store_atoms[rng.gen_range(0..store_atoms.len())].clone())
    } else {
        MetricAtom::rel(RelationalAtom::make("Z", vec![Term::constant("a")]))
    }
}

#[test]
fn criterion_4_semantics_oracle_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC4);
    let operators =
        ["bare", "boxplus", "boxminus", "diamondplus", "diamondminus", "until", "since"];
    let mut checks = 0usize;

    for (kind, name) in operators.iter().enumerate() {
        for _ in 0..500 {
            let store = random_store(&mut rng);
            let atoms: Vec<RelationalAtom> = store.atoms().map(|(a, _)| a.clone()).collect();
            let left = operand(&mut rng, &atoms);
            let m = match kind {
                0 => left,
                1 => MetricAtom::box_plus(random_window(&mut rng), left),
                2 => MetricAtom::box_minus(random_window(&mut rng), left),
                3 => MetricAtom::diamond_plus(random_window(&mut rng), left),
                4 => MetricAtom::diamond_minus(random_window(&mut rng), left),
                5 => MetricAtom::until(left, random_window(&mut rng), operand(&mut rng, &atoms)),
                _ => MetricAtom::since(left, random_window(&mut rng), operand(&mut rng, &atoms)),
            };

            let truth = eval_metric(&store, &m);

            // Half-integer grid over [-5, 25] plus quarter-offset probes
            // around every store endpoint (radius = a quarter of the
            // minimum endpoint gap, which is 1 on an integer grid).
            let mut quarters: Vec<BigRational> = Vec::new();
            for (_, set) in store.atoms() {
                for iv in set.members() {
                    for endpoint in [iv.lower(), iv.upper()] {
                        let e = endpoint.as_rational().expect("bounded store");
                        let shift = BigRational::new(BigInt::from(1), BigInt::from(4));
                        quarters.push(e - &shift);
                        quarters.push(e + &shift);
                    }
                }
            }
            let probes = (-10..=50)
                .map(|k| BigRational::new(BigInt::from(k), BigInt::from(2)))
                .chain(quarters);

            for r in probes {
                let expected = oracle_eval_at(&store, &m, &r).expect("in oracle scope");
                let got = truth.contains_point(&TimePoint::Finite(r.clone()));
                checks += 1;
                assert_eq!(
                    got, expected,
                    "{name}: {m} at {r} — evalMetric {got}, oracle {expected}\nstore:\n{store}"
                );
            }
        }
    }

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    println!(
        "criterion 4 (semantics oracle): pass — 500 atoms x {} operators, \
         {checks} probes, {elapsed:?}",
        operators.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 5 — the swap shift law, round by round
// ---------------------------------------------------------------------------

/// An instance for the shift law: every rule body starts with the seeded
/// predicate `E` (bare, so nothing can fire before the swapped facts land)
/// followed by a bounded extensional atom (so the run terminates). `E` holds
/// over the whole timeline via seed facts and appears nowhere else.
fn random_shift_instance(rng: &mut ChaCha8Rng) -> (Program, Dataset, Dataset) {
    let n_constants = rng.gen_range(2..=4);
    let constants = &CONSTANTS[..n_constants];
    let mut p = Program::default();
    for _ in 0..rng.gen_range(1..=4usize) {
        let mut pool = TermPool::new(constants);
        let mut body = vec![MetricAtom::rel(pool.atom(rng, "E", 1))];
        let (edb_name, edb_arity) = EDB[rng.gen_range(0..EDB.len())];
        body.push(MetricAtom::rel(pool.atom(rng, edb_name, edb_arity)));
        for _ in 0..rng.gen_range(0..=2usize) {
            body.push(extra_atom(rng, &mut pool));
        }
        let body_vars: Vec<String> =
            body.iter().flat_map(|m| m.variables()).collect::<BTreeSet<_>>().into_iter().collect();
        let (head_name, head_arity) = IDB[rng.gen_range(0..IDB.len())];
        let head_args: Vec<Term> = (0..head_arity)
            .map(|_| {
                if body_vars.is_empty() || rng.gen_bool(0.25) {
                    Term::constant(constants[rng.gen_range(0..constants.len())])
                } else {
                    Term::var(&body_vars[rng.gen_range(0..body_vars.len())])
                }
            })
            .collect();
        let head_rel = MetricAtom::rel(RelationalAtom::make(head_name, head_args));
        let head = match rng.gen_range(0..3) {
            0 => head_rel,
            1 => MetricAtom::box_plus(random_window(rng), head_rel),
            _ => MetricAtom::box_minus(random_window(rng), head_rel),
        };
        p.push(Rule::new(head, body).expect("safe by construction"));
    }
    let mut bounded = random_facts(rng, constants);
    // Extra extensional facts so the guards actually fire in most instances.
    for _ in 0..rng.gen_range(2..=4usize) {
        let (name, arity) = EDB[rng.gen_range(0..EDB.len())];
        let atom = RelationalAtom::make(
            name,
            (0..arity)
                .map(|_| Term::constant(constants[rng.gen_range(0..constants.len())]))
                .collect(),
        );
        let t = rng.gen_range(0..=10i64);
        bounded.push(Fact::new(atom, Interval::point(TimePoint::integer(t))).expect("ground"));
    }
    let mut seeds = Dataset::default();
    for c in constants {
        seeds.push(
            Fact::new(RelationalAtom::make("E", vec![Term::constant(c)]), Interval::unbounded())
                .expect("ground"),
        );
    }
    (p, bounded, seeds)
}

#[test]
fn criterion_5_swap_shift_law() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let mut instances = 0usize;
    let mut rounds_compared = 0usize;

    for case in 0..55 {
        let (p, bounded, seeds) = random_shift_instance(&mut rng);
        let pn = normalize(&p);

        // Unprimed: seeds swapped into rules, only bounded facts as data.
        let mut swapped = pn.clone();
        for rule in normalize(&swap(&seeds)).rules() {
            swapped.push(rule.clone());
        }
        // Primed: the original rules with the seeds left in the dataset.
        let mut with_seeds = bounded.clone();
        for f in seeds.facts() {
            with_seeds.push(f.clone());
        }

        let (unprimed, fix_u) =
            materialize_rounds(&swapped, &bounded, 150).expect("normalized programs");
        let (primed, fix_p) =
            materialize_rounds(&pn, &with_seeds, 150).expect("normalized programs");
        assert!(fix_u && fix_p, "case {case}: no fixpoint within 150 rounds\n{p}");

        for (i, primed_store) in primed.iter().enumerate() {
            let unprimed_store =
                unprimed.get(i + 1).unwrap_or_else(|| unprimed.last().expect("non-empty"));
            assert_eq!(
                primed_store, unprimed_store,
                "case {case}: stores differ at round {i}\n{p}{bounded}"
            );
            rounds_compared += 1;
        }
        instances += 1;
    }

    let elapsed = started.elapsed();
    assert!(instances >= 50);
    println!(
        "criterion 5 (swap shift law): pass — {instances} instances, \
         {rounds_compared} rounds equal, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6 — the rewritten pair of every suite-3 instance terminates
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_rewritten_pairs_terminate() {
    let started = Instant::now();
    // The same generator and seed as criterion 3: the identical instances.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut pairs = 0usize;

    for case in 0..210 {
        let (p, d) = random_instance(&mut rng);
        let queries = [random_ground_query(&mut rng, &p, &d), random_open_query(&mut rng, &p)];
        for q in &queries {
            let (pm, dm) = rewrite_for_entailment(&p, &d, q).expect("bounded instance");
            assert!(dm.is_bounded(), "case {case}: swap left an unbounded fact in the dataset");
            let run = materialize(&pm, &dm, &config(200));
            assert!(
                run.reached_fixpoint,
                "case {case}: rewritten pair hit the cap\n{p}{d}\nquery {q}\nrewritten:\n{pm}"
            );
            pairs += 1;
        }
    }

    let elapsed = started.elapsed();
    assert!(pairs >= 400);
    println!(
        "criterion 6 (rewritten-pair termination): pass — {pairs} rewritten pairs \
         reached fixpoint, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7 — relevance pruning on the two-component chain
// ---------------------------------------------------------------------------

/// Entries over original predicates not already covered by the inputs.
fn derived_entries(store: &Interpretation, inputs: &Interpretation) -> usize {
    store
        .atoms()
        .filter(|(atom, _)| is_original_predicate(&atom.predicate))
        .map(|(atom, set)| set.members().iter().filter(|iv| !inputs.get(atom).covers(iv)).count())
        .sum()
}

fn chain_run(users: usize) -> (usize, usize) {
    let spec = BenchSpec::new(Generator::Chain, users, 2026, QueryPolicy::Reachable);
    let (p, d, q) = generate_bench(&spec).expect("valid spec");
    let inputs = Interpretation::least_model_of(&d);

    let baseline = materialize(&normalize(&p), &d, &config(1000));
    let (pm, dm) = rewrite_for_entailment(&p, &d, &q).expect("bounded");
    let magic = materialize(&pm, &dm, &config(1000));
    assert!(baseline.reached_fixpoint && magic.reached_fixpoint, "users={users} hit the cap");

    // Both must certify "yes" on the reachable query.
    let goal = Fact::new(q.atom.clone(), q.interval.clone()).expect("ground");
    assert!(baseline.interpretation.satisfies_fact(&goal), "baseline misses the goal");
    assert!(magic.interpretation.satisfies_fact(&goal), "magic route misses the goal");

    // Component B (the second half of the users) must be untouched by the
    // magic route: anything mentioning its constants is an input fact.
    let split = users.div_ceil(2);
    let b_constants: BTreeSet<String> = (split..users).map(|i| format!("u{i}")).collect();
    for (atom, set) in magic.interpretation.atoms() {
        let mentions_b = atom.args.iter().any(|t| match t {
            Term::Constant(c) => b_constants.contains(c),
            Term::Variable(_) => false,
        });
        if mentions_b {
            assert!(
                !atom.predicate.is_magic(),
                "users={users}: magic fact {atom} names a component-B constant"
            );
            assert_eq!(
                set,
                inputs.get(atom),
                "users={users}: derived fact about component-B constant {atom}"
            );
        }
    }

    (
        derived_entries(&magic.interpretation, &inputs),
        derived_entries(&baseline.interpretation, &inputs),
    )
}

#[test]
fn criterion_7_relevance_pruning() {
    let started = Instant::now();

    let (magic_100, baseline_100) = chain_run(100);
    assert!(
        2 * magic_100 <= baseline_100,
        "magic derived {magic_100} original-predicate entries, \
         baseline {baseline_100}: more than half"
    );

    // The advantage must not shrink as the instance grows.
    let mut advantages = Vec::new();
    for users in [10usize, 50, 100, 500] {
        let (m, b) = chain_run(users);
        advantages.push((users, b - m));
    }
    for pair in advantages.windows(2) {
        assert!(pair[0].1 <= pair[1].1, "advantage shrank from {:?} to {:?}", pair[0], pair[1]);
    }

    let elapsed = started.elapsed();
    println!(
        "criterion 7 (relevance pruning): pass — 50+50 chain: {magic_100} vs \
         {baseline_100} derived entries; advantages {advantages:?}, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 8 — goal early-stop answers survive full-fixpoint reruns
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_early_stop_soundness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let mut confirmed = 0usize;

    let check = |p: &Program, d: &Dataset, q: &Query| {
        let early = answer_query(p, d, q, &EngineConfig { max_rounds: 200, ..Default::default() })
            .expect("bounded");
        if early.entailed != Entailed::Yes {
            return false;
        }
        let goal = Fact::new(q.atom.clone(), q.interval.clone()).expect("ground query");
        // Full fixpoint on both routes must reproduce the "yes".
        let baseline = materialize(&normalize(p), d, &config(200));
        assert!(
            baseline.reached_fixpoint && baseline.interpretation.satisfies_fact(&goal),
            "early stop said yes, the baseline fixpoint disagrees: {q}\n{p}{d}"
        );
        let (pm, dm) = rewrite_for_entailment(p, d, q).expect("bounded");
        let magic = materialize(&pm, &dm, &config(200));
        assert!(
            magic.reached_fixpoint && magic.interpretation.satisfies_fact(&goal),
            "early stop said yes, the rewritten fixpoint disagrees: {q}\n{p}{d}"
        );
        true
    };

    // Random instances from the suite-3 family (fresh seed).
    for _ in 0..120 {
        let (p, d) = random_instance(&mut rng);
        let q = random_ground_query(&mut rng, &p, &d);
        if check(&p, &d, &q) {
            confirmed += 1;
        }
    }
    // Benchmark chains: reachable queries are "yes" by construction.
    for users in [4usize, 7, 10, 50] {
        let spec = BenchSpec::new(Generator::Chain, users, 11, QueryPolicy::Reachable);
        let (p, d, q) = generate_bench(&spec).expect("valid");
        assert!(check(&p, &d, &q), "chain users={users} should early-stop to yes");
        confirmed += 1;
    }

    let elapsed = started.elapsed();
    assert!(confirmed >= 10, "only {confirmed} early-stop yes answers seen");
    println!(
        "criterion 8 (early-stop soundness): pass — {confirmed} yes answers \
         confirmed at fixpoint, {elapsed:?}"
    );
}
