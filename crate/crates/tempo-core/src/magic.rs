//! Goal-driven magic-set rewriting for DatalogMTL: program adornment,
//! bound-term extraction, magic head-atom construction, the rewriting
//! algorithm itself, and the entailment-oriented pipeline entry point that
//! widens the query interval and swaps the unbounded seed into a rule.
//!
//! The rewriting turns a (program, dataset, query) triple into an equivalent
//! pair whose materialisation derives only facts relevant to the query:
//!
//! 1. **Adornment**: starting from the query's bound/free pattern, each
//!    reachable rule is annotated with which argument positions arrive
//!    bound. Adorned predicates are written `R^γ` (e.g. `P^b`, `I^bf`).
//! 2. **Rules of the first type**: each adorned rule is guarded by a new
//!    first body atom `diamondplus[w] m_R_γ(..)` (`diamondminus` for
//!    `boxminus` heads) over a fresh magic predicate, so it can only fire
//!    where some derivation actually needs its head.
//! 3. **Rules of the second type**: for every idb body atom, rules deriving
//!    the magic predicates themselves, with bodies cut down to the atoms to
//!    the left (the part already matched when evaluation reaches the atom).
//! 4. Adornments are stripped from non-magic predicates, and the seed fact
//!    `m_Q_γ0(bound terms)@ρ` is added to the dataset.
//!
//! Two deliberate deviations from the verbatim algorithm, both needed to
//! keep every generated rule safe (head variables bound in the body):
//!
//! - Magic atoms carry the bound *terms* `bt(t,γ)` rather than the bound
//!   variables `bv(t,γ)`. The two coincide unless an atom has a constant at
//!   a bound position, where per-atom `bv` would make the magic predicate's
//!   arity inconsistent across rules and with the seed fact.
//! - The binding condition (iv) propagates across top-level body atoms
//!   only: inside one `since`/`until` atom, the right operand does not bind
//!   variables of the left. Otherwise the left operand's magic rule could
//!   lose its only binder when the rewriting deletes the atom itself. The
//!   coarser adornment prunes less but never changes answers.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::materialisation::swap_apply;
use crate::syntax::{
    normalize, program_is_bounded, Dataset, Fact, MetricAtom, Predicate, Program, Query,
    RelationalAtom, Rule, Term,
};
use crate::temporal::{Interval, TimePoint};

/// An adornment: one letter per argument position, `b` for bound and `f` for
/// free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Adornment {
    bound: Vec<bool>,
}

/// Problems raised while constructing a rewriting.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum MagicError {
    #[error("adornment string must contain only 'b' and 'f', got {0:?}")]
    BadAdornment(String),
    #[error("adornment length {adornment} does not match term count {terms}")]
    LengthMismatch { adornment: usize, terms: usize },
    #[error(
        "cannot rewrite: since/until window {0} has an unbounded right endpoint over an idb operand"
    )]
    UnboundedSinceUntil(String),
    #[error("rewriteForEntailment requires a bounded program and dataset")]
    UnboundedInput,
}

impl Adornment {
    pub fn new(bound: Vec<bool>) -> Adornment {
        Adornment { bound }
    }

    /// Parses a string over {b, f}; the empty string adorns a nullary predicate.
    pub fn parse(s: &str) -> Result<Adornment, MagicError> {
        let mut bound = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                'b' => bound.push(true),
                'f' => bound.push(false),
                _ => return Err(MagicError::BadAdornment(s.to_string())),
            }
        }
        Ok(Adornment { bound })
    }

    pub fn len(&self) -> usize {
        self.bound.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bound.is_empty()
    }

    /// Number of bound (`b`) positions — the arity of the magic predicate.
    pub fn bound_count(&self) -> usize {
        self.bound.iter().filter(|&&b| b).count()
    }

    pub fn is_bound(&self, i: usize) -> bool {
        self.bound[i]
    }

    pub fn letters(&self) -> &[bool] {
        &self.bound
    }
}

impl fmt::Display for Adornment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bound {
            write!(f, "{}", if b { 'b' } else { 'f' })?;
        }
        Ok(())
    }
}

/// The query's adornment: position `i` is bound iff the `i`th query term is
/// a constant.
pub fn query_adornment(q: &Query) -> Adornment {
    Adornment::new(q.atom.args.iter().map(Term::is_constant).collect())
}

/// `bt(t,γ)`: the subsequence of terms at bound positions.
pub fn bt(terms: &[Term], adornment: &Adornment) -> Result<Vec<Term>, MagicError> {
    if terms.len() != adornment.len() {
        return Err(MagicError::LengthMismatch { adornment: adornment.len(), terms: terms.len() });
    }
    Ok(terms
        .iter()
        .enumerate()
        .filter(|(i, _)| adornment.is_bound(*i))
        .map(|(_, t)| t.clone())
        .collect())
}

/// `bv(t,γ)`: the subsequence of variables at bound positions (a
/// subsequence of `bt(t,γ)`).
pub fn bv(terms: &[Term], adornment: &Adornment) -> Result<Vec<Term>, MagicError> {
    Ok(bt(terms, adornment)?.into_iter().filter(Term::is_variable).collect())
}

/// A rule whose relational atoms carry adornments, encoded in the predicate
/// names as `R^γ` (magic predicates never carry one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdornedRule {
    pub rule: Rule,
}

impl fmt::Display for AdornedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rule)
    }
}

fn adorned_name(base: &str, adornment: &Adornment) -> String {
    format!("{base}^{adornment}")
}

/// Splits an `R^γ` name back into (base, γ).
fn split_adorned(name: &str) -> Option<(&str, Adornment)> {
    let (base, letters) = name.split_once('^')?;
    Adornment::parse(letters).ok().map(|a| (base, a))
}

fn adorned_atom(atom: &RelationalAtom, adornment: &Adornment) -> RelationalAtom {
    RelationalAtom {
        predicate: Predicate::new(&adorned_name(atom.predicate.name(), adornment), atom.args.len()),
        args: atom.args.clone(),
    }
}

/// Predicates keyed structurally: (name, arity).
type PredKey = (String, usize);

fn pred_key(p: &Predicate) -> PredKey {
    (p.name().to_string(), p.arity())
}

/// The idb predicates (those occurring in some head) of a normalized program.
fn idb_keys(p: &Program) -> BTreeSet<PredKey> {
    p.idb_predicates().iter().map(pred_key).collect()
}

/// Labels then adorns every relational atom of one top-level body atom,
/// given the variables bound so far. Per condition (ii) constants are
/// always bound; per (iii)/(iv) a variable is bound iff the head binds it
/// or it occurred in an earlier top-level body atom.
fn adorn_body_atom(m: &MetricAtom, bound_vars: &BTreeSet<String>) -> MetricAtom {
    fn go(m: &MetricAtom, bound_vars: &BTreeSet<String>) -> MetricAtom {
        match m {
            MetricAtom::Truth => MetricAtom::Truth,
            MetricAtom::Falsehood => MetricAtom::Falsehood,
            MetricAtom::Rel(r) => {
                let letters = r
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Constant(_) => true,
                        Term::Variable(v) => bound_vars.contains(v),
                    })
                    .collect();
                MetricAtom::Rel(adorned_atom(r, &Adornment::new(letters)))
            }
            MetricAtom::BoxPlus(w, inner) => MetricAtom::box_plus(w.clone(), go(inner, bound_vars)),
            MetricAtom::BoxMinus(w, inner) => {
                MetricAtom::box_minus(w.clone(), go(inner, bound_vars))
            }
            MetricAtom::DiamondPlus(w, inner) => {
                MetricAtom::diamond_plus(w.clone(), go(inner, bound_vars))
            }
            MetricAtom::DiamondMinus(w, inner) => {
                MetricAtom::diamond_minus(w.clone(), go(inner, bound_vars))
            }
            MetricAtom::Until(l, w, r) => {
                MetricAtom::until(go(l, bound_vars), w.clone(), go(r, bound_vars))
            }
            MetricAtom::Since(l, w, r) => {
                MetricAtom::since(go(l, bound_vars), w.clone(), go(r, bound_vars))
            }
        }
    }
    go(m, bound_vars)
}

/// Step 2 for one rule and one head adornment.
fn adorn_rule(rule: &Rule, head_adornment: &Adornment) -> AdornedRule {
    let head_atom = rule.head_atom().expect("normalized rules have a relational head atom");
    // (i)/(iii): variables at the head's bound positions start out bound.
    let mut bound_vars: BTreeSet<String> = head_atom
        .args
        .iter()
        .zip(head_adornment.letters())
        .filter_map(|(t, &b)| match t {
            Term::Variable(v) if b => Some(v.clone()),
            _ => None,
        })
        .collect();

    let mut body = Vec::with_capacity(rule.body.len());
    for m in &rule.body {
        body.push(adorn_body_atom(m, &bound_vars));
        // (iv): from the next top-level atom on, these variables are bound.
        bound_vars.extend(m.variables());
    }

    let adorned_head = match &rule.head {
        MetricAtom::BoxPlus(w, _) => MetricAtom::box_plus(
            w.clone(),
            MetricAtom::Rel(adorned_atom(head_atom, head_adornment)),
        ),
        MetricAtom::BoxMinus(w, _) => MetricAtom::box_minus(
            w.clone(),
            MetricAtom::Rel(adorned_atom(head_atom, head_adornment)),
        ),
        _ => unreachable!("normalized heads are a single box over a relational atom"),
    };
    AdornedRule { rule: Rule { head: adorned_head, body } }
}

/// Step 1 + repeated Step 2: the adorned program Π_a reachable from the
/// query's adornment. Worklist is FIFO; the result is sorted by (input rule
/// index, head adornment) for a stable output order.
pub fn adorn_program(p: &Program, q: &Query) -> Vec<AdornedRule> {
    let idb = idb_keys(p);
    let start = (pred_key(&q.atom.predicate), query_adornment(q));
    let mut seen: BTreeSet<(PredKey, Adornment)> = BTreeSet::new();
    let mut queue: VecDeque<(PredKey, Adornment)> = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);

    let mut adorned: Vec<(usize, Adornment, AdornedRule)> = Vec::new();
    while let Some((key, adornment)) = queue.pop_front() {
        for (index, rule) in p.rules().iter().enumerate() {
            let head = rule.head_atom().expect("normalized rule");
            if pred_key(&head.predicate) != key {
                continue;
            }
            let rule_a = adorn_rule(rule, &adornment);
            // Newly constructed adorned idb predicates enter the worklist once.
            for m in &rule_a.rule.body {
                for r in m.relational_atoms() {
                    let Some((base, gamma)) = split_adorned(r.predicate.name()) else {
                        continue;
                    };
                    let base_key = (base.to_string(), r.args.len());
                    if idb.contains(&base_key) && seen.insert((base_key.clone(), gamma.clone())) {
                        queue.push_back((base_key, gamma));
                    }
                }
            }
            adorned.push((index, adornment.clone(), rule_a));
        }
    }
    adorned.sort_by(|(i1, a1, _), (i2, a2, _)| {
        i1.cmp(i2).then_with(|| a1.to_string().cmp(&a2.to_string()))
    });
    adorned.into_iter().map(|(_, _, r)| r).collect()
}

/// The magic atom for an adorned atom `R^γ(t)`: `m_R_γ(bt(t,γ))`.
fn magic_atom(base: &str, adornment: &Adornment, args: &[Term]) -> RelationalAtom {
    let bound = bt(args, adornment).expect("adornment length matches the atom arity");
    RelationalAtom { predicate: Predicate::magic(base, adornment), args: bound }
}

/// Replaces every adorned idb relational atom in `m` with its magic atom.
/// Returns the rewritten atom and whether any replacement happened in it.
fn replace_idb_with_magic(m: &MetricAtom, idb: &BTreeSet<PredKey>) -> (MetricAtom, bool) {
    match m {
        MetricAtom::Truth => (MetricAtom::Truth, false),
        MetricAtom::Falsehood => (MetricAtom::Falsehood, false),
        MetricAtom::Rel(r) => match split_adorned(r.predicate.name()) {
            Some((base, gamma)) if idb.contains(&(base.to_string(), r.args.len())) => {
                (MetricAtom::Rel(magic_atom(base, &gamma, &r.args)), true)
            }
            _ => (m.clone(), false),
        },
        MetricAtom::BoxPlus(w, inner) => {
            let (i, hit) = replace_idb_with_magic(inner, idb);
            (MetricAtom::box_plus(w.clone(), i), hit)
        }
        MetricAtom::BoxMinus(w, inner) => {
            let (i, hit) = replace_idb_with_magic(inner, idb);
            (MetricAtom::box_minus(w.clone(), i), hit)
        }
        MetricAtom::DiamondPlus(w, inner) => {
            let (i, hit) = replace_idb_with_magic(inner, idb);
            (MetricAtom::diamond_plus(w.clone(), i), hit)
        }
        MetricAtom::DiamondMinus(w, inner) => {
            let (i, hit) = replace_idb_with_magic(inner, idb);
            (MetricAtom::diamond_minus(w.clone(), i), hit)
        }
        MetricAtom::Until(l, w, r) => {
            let (l2, h1) = replace_idb_with_magic(l, idb);
            let (r2, h2) = replace_idb_with_magic(r, idb);
            (MetricAtom::until(l2, w.clone(), r2), h1 || h2)
        }
        MetricAtom::Since(l, w, r) => {
            let (l2, h1) = replace_idb_with_magic(l, idb);
            let (r2, h2) = replace_idb_with_magic(r, idb);
            (MetricAtom::since(l2, w.clone(), r2), h1 || h2)
        }
    }
}

/// `[0, t_max]` where `t_max` is the right endpoint of `w`; errors when the
/// endpoint is not finite (the rewriting is only defined for bounded
/// windows over idb operands).
fn zero_to_tmax(w: &Interval) -> Result<Interval, MagicError> {
    match w.supremum() {
        TimePoint::Finite(_) => {
            Ok(Interval::new(TimePoint::integer(0), true, w.supremum().clone(), true)
                .expect("windows are non-negative, so [0, t_max] is non-empty"))
        }
        _ => Err(MagicError::UnboundedSinceUntil(w.to_string())),
    }
}

/// Head atoms for the magic rules triggered by the body atom `m`.
///
/// After replacing adorned idb atoms with magic atoms: a box atom passes
/// through; `diamondplus[w]` becomes `boxplus[w]` and `diamondminus[w]`
/// becomes `boxminus[w]`; for `M2 since[w] M1` the result contains
/// `boxminus[0,t_max] M2` if `M2` became magic and `boxminus[w] M1` if `M1`
/// did (`until` mirrors with `boxplus`); a bare atom passes through
/// unchanged (the case exercised by every plain relational body atom).
pub fn magic_head_atoms(
    m: &MetricAtom,
    idb: &BTreeSet<PredKey>,
) -> Result<Vec<MetricAtom>, MagicError> {
    match m {
        MetricAtom::Truth | MetricAtom::Falsehood => Ok(Vec::new()),
        MetricAtom::Rel(_) => {
            let (replaced, hit) = replace_idb_with_magic(m, idb);
            Ok(if hit { vec![replaced] } else { Vec::new() })
        }
        MetricAtom::BoxPlus(w, inner) => {
            let (replaced, hit) = replace_idb_with_magic(inner, idb);
            Ok(if hit { vec![MetricAtom::box_plus(w.clone(), replaced)] } else { Vec::new() })
        }
        MetricAtom::BoxMinus(w, inner) => {
            let (replaced, hit) = replace_idb_with_magic(inner, idb);
            Ok(if hit { vec![MetricAtom::box_minus(w.clone(), replaced)] } else { Vec::new() })
        }
        MetricAtom::DiamondPlus(w, inner) => {
            let (replaced, hit) = replace_idb_with_magic(inner, idb);
            Ok(if hit { vec![MetricAtom::box_plus(w.clone(), replaced)] } else { Vec::new() })
        }
        MetricAtom::DiamondMinus(w, inner) => {
            let (replaced, hit) = replace_idb_with_magic(inner, idb);
            Ok(if hit { vec![MetricAtom::box_minus(w.clone(), replaced)] } else { Vec::new() })
        }
        MetricAtom::Since(l, w, r) => {
            let (l2, left_magic) = replace_idb_with_magic(l, idb);
            let (r2, right_magic) = replace_idb_with_magic(r, idb);
            let mut out = Vec::new();
            if left_magic {
                out.push(MetricAtom::box_minus(zero_to_tmax(w)?, l2));
            }
            if right_magic {
                out.push(MetricAtom::box_minus(w.clone(), r2));
            }
            Ok(out)
        }
        MetricAtom::Until(l, w, r) => {
            let (l2, left_magic) = replace_idb_with_magic(l, idb);
            let (r2, right_magic) = replace_idb_with_magic(r, idb);
            let mut out = Vec::new();
            if left_magic {
                out.push(MetricAtom::box_plus(zero_to_tmax(w)?, l2));
            }
            if right_magic {
                out.push(MetricAtom::box_plus(w.clone(), r2));
            }
            Ok(out)
        }
    }
}

/// Removes the `^γ` suffix from every non-magic predicate.
fn strip_adornments_atom(m: &MetricAtom) -> MetricAtom {
    fn strip_rel(r: &RelationalAtom) -> RelationalAtom {
        match split_adorned(r.predicate.name()) {
            Some((base, _)) if !r.predicate.is_magic() => RelationalAtom {
                predicate: Predicate::new(base, r.args.len()),
                args: r.args.clone(),
            },
            _ => r.clone(),
        }
    }
    match m {
        MetricAtom::Truth => MetricAtom::Truth,
        MetricAtom::Falsehood => MetricAtom::Falsehood,
        MetricAtom::Rel(r) => MetricAtom::Rel(strip_rel(r)),
        MetricAtom::BoxPlus(w, i) => MetricAtom::box_plus(w.clone(), strip_adornments_atom(i)),
        MetricAtom::BoxMinus(w, i) => MetricAtom::box_minus(w.clone(), strip_adornments_atom(i)),
        MetricAtom::DiamondPlus(w, i) => {
            MetricAtom::diamond_plus(w.clone(), strip_adornments_atom(i))
        }
        MetricAtom::DiamondMinus(w, i) => {
            MetricAtom::diamond_minus(w.clone(), strip_adornments_atom(i))
        }
        MetricAtom::Until(l, w, r) => {
            MetricAtom::until(strip_adornments_atom(l), w.clone(), strip_adornments_atom(r))
        }
        MetricAtom::Since(l, w, r) => {
            MetricAtom::since(strip_adornments_atom(l), w.clone(), strip_adornments_atom(r))
        }
    }
}

fn strip_adornments_rule(rule: &Rule) -> Rule {
    Rule {
        head: strip_adornments_atom(&rule.head),
        body: rule.body.iter().map(strip_adornments_atom).collect(),
    }
}

/// The rewritten program plus the pieces used to build it.
#[derive(Debug, Clone)]
pub struct RewriteOutput {
    /// Π′ with adornments stripped from non-magic predicates.
    pub program: Program,
    /// The magic seed `m_Q_γ0(bt(t,γ0))@ρ`.
    pub seed_fact: Fact,
    /// Π_a, retained for inspection.
    pub adorned_program: Vec<AdornedRule>,
    /// The guarded original rules (one per adorned rule).
    pub rules_type1: Program,
    /// The magic-predicate derivation rules.
    pub rules_type2: Program,
}

/// The magic-set rewriting: returns the rewrite and `D' = D ∪ {seed}`.
///
/// The query may contain variables; its constants seed the magic predicate.
pub fn magic_rewrite(
    p: &Program,
    d: &Dataset,
    q: &Query,
) -> Result<(RewriteOutput, Dataset), MagicError> {
    // Adornment and guard construction assume the normal form (single-box
    // heads, depth-one bodies); normalizing is idempotent, so callers that
    // already normalized pay nothing.
    let p = &normalize(p);
    let idb = idb_keys(p);
    let gamma0 = query_adornment(q);
    let seed_atom = magic_atom(q.atom.predicate.name(), &gamma0, &q.atom.args);
    let seed_fact =
        Fact::new(seed_atom, q.interval.clone()).expect("bound terms of the query are constants");

    let adorned_program = adorn_program(p, q);

    // Rules of the first type: guard each adorned rule with a magic atom.
    let mut rules_type1 = Program::default();
    for rule_a in &adorned_program {
        let head_atom = rule_a.rule.head_atom().expect("adorned rules keep box heads");
        let (base, gamma) =
            split_adorned(head_atom.predicate.name()).expect("adorned head predicate");
        let guard_atom = MetricAtom::Rel(magic_atom(base, &gamma, &head_atom.args));
        let guard = match &rule_a.rule.head {
            MetricAtom::BoxPlus(w, _) => MetricAtom::diamond_plus(w.clone(), guard_atom),
            MetricAtom::BoxMinus(w, _) => MetricAtom::diamond_minus(w.clone(), guard_atom),
            _ => unreachable!("normalized heads are boxes"),
        };
        let mut body = vec![guard];
        body.extend(rule_a.rule.body.iter().cloned());
        let guarded =
            Rule::new(rule_a.rule.head.clone(), body).expect("guarding a safe rule keeps it safe");
        rules_type1.push(guarded);
    }

    // Rules of the second type: derive the magic predicates from prefixes.
    let mut rules_type2 = Program::default();
    for rule in rules_type1.rules() {
        for (i, m) in rule.body.iter().enumerate() {
            let heads = magic_head_atoms(m, &idb)?;
            for head in heads {
                let body: Vec<MetricAtom> = rule.body[..i].to_vec();
                let magic_rule = Rule::new(head, body).expect(
                    "bound variables of a body atom occur in the head guard or to its left",
                );
                rules_type2.push(magic_rule);
            }
        }
    }

    // Union, then strip adornments from non-magic predicates.
    let rules_type1 = Program::new(rules_type1.rules().iter().map(strip_adornments_rule).collect());
    let rules_type2 = Program::new(rules_type2.rules().iter().map(strip_adornments_rule).collect());
    let mut program = rules_type1.clone();
    for rule in rules_type2.rules() {
        program.push(rule.clone());
    }

    let mut extended = d.clone();
    extended.push(seed_fact.clone());
    Ok((RewriteOutput { program, seed_fact, adorned_program, rules_type1, rules_type2 }, extended))
}

/// The entailment pipeline: rewrite with the query interval widened to
/// `(-inf,+inf)`, then swap the unbounded seed into the rule
/// `m_Q_γ0(bt(t,γ0)) :- top`, leaving a bounded pair whose materialisation
/// terminates and answers entailment over any interval. The returned
/// program is normalized and ready for materialisation.
pub fn rewrite_for_entailment(
    p: &Program,
    d: &Dataset,
    q: &Query,
) -> Result<(Program, Dataset), MagicError> {
    if !program_is_bounded(p) || !d.is_bounded() {
        return Err(MagicError::UnboundedInput);
    }
    let widened = Query { atom: q.atom.clone(), interval: Interval::unbounded() };
    let (rewrite, extended) = magic_rewrite(p, d, &widened)?;
    let (program, dataset) = swap_apply(&rewrite.program, &extended);
    Ok((normalize(&program), dataset))
}
