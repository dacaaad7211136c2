//! End-to-end query answering: parse → normalize → (optionally rewrite) →
//! materialize → read answers off the store.
//!
//! Two routes produce the same certified answers. The default route runs
//! the goal-driven rewriting ([`crate::magic::rewrite_for_entailment`]) and
//! materialises the rewritten pair, stopping early once a ground goal is
//! reached; the baseline route materialises the normalized original pair
//! directly. Because the engine cannot detect periodicity, answers are
//! tri-state: a run that hits the round cap without proving the goal
//! reports `Unknown` rather than a wrong "no".

use std::fmt;

use thiserror::Error;

use crate::interpretation::Interpretation;
use crate::magic::{rewrite_for_entailment, MagicError};
use crate::materialisation::{materialize, MaterialisationConfig, MaterialisationResult};
use crate::semantics::{unify, Substitution};
use crate::syntax::{normalize, program_is_bounded, Dataset, Fact, Program, Query};
use crate::temporal::IntervalSet;

/// Outcome of an entailment check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entailed {
    /// The query holds (some answer covers the whole query interval).
    Yes,
    /// A fixpoint was reached and the query does not hold.
    NoCertified,
    /// The round cap was exhausted before either could be certified.
    Unknown,
}

impl fmt::Display for Entailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entailed::Yes => write!(f, "yes"),
            Entailed::NoCertified => write!(f, "no"),
            Entailed::Unknown => write!(f, "unknown"),
        }
    }
}

/// Answers to a query: every substitution with a non-empty slice of the
/// query interval, plus the overall entailment verdict.
///
/// For a ground query the substitution list is empty or the singleton empty
/// substitution. For open queries, `Yes` means some substitution covers the
/// whole query interval.
#[derive(Debug)]
pub struct QueryAnswer {
    pub substitutions: Vec<(Substitution, IntervalSet)>,
    pub entailed: Entailed,
    /// Rounds the materialisation ran.
    pub rounds: usize,
    pub reached_fixpoint: bool,
    /// The store the answer was read from. With goal early-stop this is the
    /// state at the stopping round, not necessarily a fixpoint.
    pub interpretation: Interpretation,
}

/// Knobs for [`answer_query`].
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Rewrite before materialising (the default); `false` is the baseline.
    pub use_magic: bool,
    pub max_rounds: usize,
    /// Disable the semi-naive optimisation.
    pub naive: bool,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig { use_magic: true, max_rounds: 1000, naive: false }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Magic(#[from] MagicError),
}

/// Answers `q` over the bounded pair `(p, d)`.
pub fn answer_query(
    p: &Program,
    d: &Dataset,
    q: &Query,
    cfg: &EngineConfig,
) -> Result<QueryAnswer, EngineError> {
    if !program_is_bounded(p) || !d.is_bounded() {
        return Err(MagicError::UnboundedInput.into());
    }
    let ground = q.atom.variables().next().is_none();
    let goal = if ground {
        Some(Fact::new(q.atom.clone(), q.interval.clone()).expect("ground query atom"))
    } else {
        None
    };
    let (program, dataset) =
        if cfg.use_magic { rewrite_for_entailment(p, d, q)? } else { (normalize(p), d.clone()) };
    let mcfg = MaterialisationConfig {
        max_rounds: cfg.max_rounds,
        goal: goal.clone(),
        collect_stats: false,
        naive: cfg.naive,
    };
    let run = materialize(&program, &dataset, &mcfg);
    Ok(assemble(q, goal.is_some(), run))
}

fn assemble(q: &Query, had_goal: bool, run: MaterialisationResult) -> QueryAnswer {
    let query_set = IntervalSet::singleton(q.interval.clone());
    let mut substitutions = Vec::new();
    for (atom, set) in run.interpretation.atoms_with_predicate(&q.atom.predicate) {
        let Some(sigma) = unify(&q.atom, atom, &Substitution::empty()) else {
            continue;
        };
        let restricted = set.intersection(&query_set);
        if !restricted.is_empty() {
            substitutions.push((sigma, restricted));
        }
    }
    let entailed = if had_goal {
        match run.goal_entailed {
            Some(true) => Entailed::Yes,
            Some(false) => Entailed::NoCertified,
            None => Entailed::Unknown,
        }
    } else if substitutions.iter().any(|(_, set)| set.covers(&q.interval)) {
        Entailed::Yes
    } else if run.reached_fixpoint {
        Entailed::NoCertified
    } else {
        Entailed::Unknown
    };
    QueryAnswer {
        substitutions,
        entailed,
        rounds: run.rounds,
        reached_fixpoint: run.reached_fixpoint,
        interpretation: run.interpretation,
    }
}
