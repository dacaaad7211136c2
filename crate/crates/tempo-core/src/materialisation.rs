//! The immediate consequence operator `T_Π`, fixpoint materialisation with a
//! round cap and early goal check, and the swap of unbounded facts into
//! `R(t) :- top` rules.
//!
//! Materialisation iterates `T_Π` from the least model of the dataset:
//! `J_0 = J_D`, `J_i = T_Π(J_{i-1})`. Every round evaluates rule bodies
//! against the frozen previous-round store and merges the derived facts in a
//! deterministic (sorted) order, so results do not depend on iteration
//! internals. DatalogMTL programs need not have a finite fixpoint at all, so
//! the cap is part of the contract rather than an error: a "yes" answer to
//! the goal is sound whenever it is given, while "no" is certified only when
//! an actual fixpoint was reached.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::interpretation::Interpretation;
use crate::semantics::{eval_body_at_time, match_substitutions, Substitution};
use crate::syntax::{Dataset, Fact, MetricAtom, Program, RelationalAtom, Rule};
use crate::temporal::Interval;

/// Errors from the swap helpers and from applying `T_Π` to a rule whose head
/// is not in normal form.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MaterialisationError {
    #[error("rule head {0:?} is not normalized (expected exactly one box over a relational atom)")]
    NonNormalizedHead(String),
    #[error("toRule requires the interval (-inf,+inf), got {0}")]
    BoundedFact(String),
}

/// How long to run and what to watch for.
#[derive(Debug, Clone)]
pub struct MaterialisationConfig {
    /// Upper bound on `T_Π` applications; reaching it leaves
    /// `reached_fixpoint` false. At least 1.
    pub max_rounds: usize,
    /// Early-stop target: materialisation halts as soon as the store
    /// satisfies this fact.
    pub goal: Option<Fact>,
    /// Record per-predicate derivation statistics and the store's round log.
    pub collect_stats: bool,
    /// Disable the semi-naive round filter and re-evaluate every candidate
    /// substitution each round (the slow reference mode).
    pub naive: bool,
}

impl Default for MaterialisationConfig {
    fn default() -> MaterialisationConfig {
        MaterialisationConfig { max_rounds: 1000, goal: None, collect_stats: false, naive: false }
    }
}

/// Per-predicate derivation counters (insertions that changed the store).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateStats {
    pub derived: usize,
    pub first_round: usize,
    pub last_round: usize,
}

/// The outcome of a materialisation run.
#[derive(Debug, Clone)]
pub struct MaterialisationResult {
    pub interpretation: Interpretation,
    /// Number of `T_Π` applications performed.
    pub rounds: usize,
    /// True iff the final round changed nothing, i.e. the store is closed
    /// under every rule.
    pub reached_fixpoint: bool,
    /// For a configured goal: `Some(true)` as soon as the goal is satisfied
    /// (always sound), `Some(false)` only on a fixpoint that does not
    /// satisfy it, `None` when the cap ran out first.
    pub goal_entailed: Option<bool>,
    pub stats: BTreeMap<String, PredicateStats>,
}

/// Splits a normalized head into (future?, window, atom): `boxplus[w] R(t)`
/// or `boxminus[w] R(t)`.
fn head_parts(rule: &Rule) -> Result<(bool, &Interval, &RelationalAtom), MaterialisationError> {
    match &rule.head {
        MetricAtom::BoxPlus(w, inner) => match inner.as_ref() {
            MetricAtom::Rel(r) => Ok((true, w, r)),
            _ => Err(MaterialisationError::NonNormalizedHead(rule.head.to_string())),
        },
        MetricAtom::BoxMinus(w, inner) => match inner.as_ref() {
            MetricAtom::Rel(r) => Ok((false, w, r)),
            _ => Err(MaterialisationError::NonNormalizedHead(rule.head.to_string())),
        },
        other => Err(MaterialisationError::NonNormalizedHead(other.to_string())),
    }
}

/// The active domain: every constant of the program or the store.
fn active_domain(p: &Program, store: &Interpretation) -> BTreeSet<String> {
    let mut domain = p.constants();
    domain.extend(store.constants());
    domain
}

/// Evaluates one rule under one substitution and appends what the head
/// derives. `boxplus[w] R(t)` holding throughout `ι` makes `R(t)` hold on
/// the Minkowski sum `ι + w`; `boxminus[w]` mirrors with `ι - w`.
fn fire_rule(
    store: &Interpretation,
    rule: &Rule,
    plus: bool,
    window: &Interval,
    head: &RelationalAtom,
    sub: &Substitution,
    out: &mut Vec<(RelationalAtom, Interval)>,
) {
    let body_holds = eval_body_at_time(store, &rule.body, sub);
    if body_holds.is_empty() {
        return;
    }
    let ground_head = head.substitute(sub);
    for iv in body_holds.members() {
        let derived = if plus { iv.minkowski_sum(window) } else { iv.minkowski_diff(window) };
        out.push((ground_head.clone(), derived));
    }
}

/// One application of `T_Π`: the least store containing `store` and
/// everything the rules derive from it. Requires a normalized program.
pub fn immediate_consequence(
    p: &Program,
    store: &Interpretation,
) -> Result<Interpretation, MaterialisationError> {
    let domain = active_domain(p, store);
    let mut derived = Vec::new();
    for rule in p.rules() {
        let (plus, window, head) = head_parts(rule)?;
        for sub in match_substitutions(store, &rule.body, &domain) {
            fire_rule(store, rule, plus, window, head, &sub, &mut derived);
        }
    }
    derived.sort();
    let mut next = store.clone();
    for (atom, interval) in derived {
        next.add_atom_interval(&atom, interval);
    }
    Ok(next)
}

/// Does the grounded body mention an atom whose intervals changed last
/// round? If not, the body evaluates exactly as it did then, and re-firing
/// the rule cannot add anything new.
fn touches_delta(rule: &Rule, sub: &Substitution, delta: &BTreeSet<RelationalAtom>) -> bool {
    rule.body
        .iter()
        .any(|m| m.relational_atoms().into_iter().any(|r| delta.contains(&r.substitute(sub))))
}

/// Iterates `T_Π` from the least model of `d` until fixpoint, goal, or cap.
///
/// The program must be normalized (see [`crate::syntax::normalize`]);
/// panics otherwise, since every caller in this crate normalizes first.
pub fn materialize(p: &Program, d: &Dataset, cfg: &MaterialisationConfig) -> MaterialisationResult {
    assert!(cfg.max_rounds >= 1, "max_rounds must be at least 1");
    let heads: Vec<(bool, &Interval, &RelationalAtom)> = p
        .rules()
        .iter()
        .map(|r| head_parts(r).expect("materialize requires a normalized program"))
        .collect();

    let mut store = Interpretation::least_model_of(d);
    if cfg.collect_stats {
        store.enable_round_log();
    }
    let domain = active_domain(p, &store);
    let mut stats: BTreeMap<String, PredicateStats> = BTreeMap::new();

    if let Some(goal) = &cfg.goal {
        if store.satisfies_fact(goal) {
            return MaterialisationResult {
                interpretation: store,
                rounds: 0,
                reached_fixpoint: false,
                goal_entailed: Some(true),
                stats,
            };
        }
    }

    // Atoms whose interval sets changed in the previous round. Round one
    // evaluates everything, so the initial contents are never consulted.
    let mut delta: BTreeSet<RelationalAtom> = BTreeSet::new();
    let mut rounds = 0;
    let mut reached_fixpoint = false;

    for round in 1..=cfg.max_rounds {
        store.set_current_round(round);
        let mut derived = Vec::new();
        for (rule, &(plus, window, head)) in p.rules().iter().zip(&heads) {
            for sub in match_substitutions(&store, &rule.body, &domain) {
                if !cfg.naive && round > 1 && !touches_delta(rule, &sub, &delta) {
                    continue;
                }
                fire_rule(&store, rule, plus, window, head, &sub, &mut derived);
            }
        }
        derived.sort();

        let mut new_delta = BTreeSet::new();
        for (atom, interval) in derived {
            if store.add_atom_interval(&atom, interval) {
                let entry =
                    stats.entry(atom.predicate.name().to_string()).or_insert(PredicateStats {
                        derived: 0,
                        first_round: round,
                        last_round: round,
                    });
                entry.derived += 1;
                entry.last_round = round;
                new_delta.insert(atom);
            }
        }
        rounds = round;

        if new_delta.is_empty() {
            reached_fixpoint = true;
            break;
        }
        delta = new_delta;

        if let Some(goal) = &cfg.goal {
            if store.satisfies_fact(goal) {
                return MaterialisationResult {
                    interpretation: store,
                    rounds,
                    reached_fixpoint: false,
                    goal_entailed: Some(true),
                    stats,
                };
            }
        }
    }

    let goal_entailed = cfg.goal.as_ref().and_then(|goal| {
        if store.satisfies_fact(goal) {
            Some(true) // sound even without a fixpoint
        } else if reached_fixpoint {
            Some(false)
        } else {
            None
        }
    });
    MaterialisationResult { interpretation: store, rounds, reached_fixpoint, goal_entailed, stats }
}

/// The sequence `[J_0, J_1, ..., J_n]` of distinct stores, ending either at
/// the fixpoint (`true`: `T_Π(J_n) = J_n`) or at the cap (`false`).
pub fn materialize_rounds(
    p: &Program,
    d: &Dataset,
    max_rounds: usize,
) -> Result<(Vec<Interpretation>, bool), MaterialisationError> {
    let mut sequence = vec![Interpretation::least_model_of(d)];
    for _ in 1..=max_rounds {
        let previous = sequence.last().expect("sequence starts non-empty");
        let next = immediate_consequence(p, previous)?;
        if &next == previous {
            return Ok((sequence, true));
        }
        sequence.push(next);
    }
    Ok((sequence, false))
}

/// The facts of `d` holding over the whole timeline `(-inf,+inf)`.
pub fn unbounded(d: &Dataset) -> Vec<Fact> {
    d.facts().iter().filter(|f| f.interval.is_whole_line()).cloned().collect()
}

/// Turns a whole-timeline fact into the rule `R(t) :- top`, which derives
/// the same atom at every time point.
pub fn to_rule(f: &Fact) -> Result<Rule, MaterialisationError> {
    if !f.interval.is_whole_line() {
        return Err(MaterialisationError::BoundedFact(f.to_string()));
    }
    Ok(Rule::new(MetricAtom::Rel(f.atom.clone()), vec![MetricAtom::Truth])
        .expect("a ground fact atom with a top body is a safe rule"))
}

/// `swap(d)`: one `R(t) :- top` rule per whole-timeline fact.
pub fn swap(d: &Dataset) -> Program {
    Program::new(unbounded(d).iter().map(|f| to_rule(f).expect("unbounded facts swap")).collect())
}

/// Moves every whole-timeline fact of `d` into `p` as a rule: the engine's
/// preprocessing step that keeps materialisation inputs bounded.
pub fn swap_apply(p: &Program, d: &Dataset) -> (Program, Dataset) {
    let mut program = p.clone();
    for rule in swap(d).rules() {
        program.push(rule.clone());
    }
    let dataset =
        Dataset::new(d.facts().iter().filter(|f| !f.interval.is_whole_line()).cloned().collect());
    (program, dataset)
}
