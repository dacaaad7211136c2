//! Evaluation of ground metric atoms against an interpretation, and
//! enumeration of the substitutions under which a rule body can hold.
//!
//! The evaluator is interval-level: [`eval_metric`] returns the exact set of
//! time points where a ground metric atom holds, as a canonical
//! [`IntervalSet`]. The pointwise semantics it realises is:
//!
//! - `top` holds everywhere, `bot` nowhere;
//! - `R(c)` holds where the store says it does;
//! - `boxplus[w] M` holds at `t` iff `M` holds throughout `t + w`
//!   (`boxminus` mirrors with `t - w`);
//! - `diamondplus[w] M` holds at `t` iff `M` holds somewhere in `t + w`
//!   (`diamondminus` mirrors);
//! - `M2 until[w] M1` holds at `t` iff `M1` holds at some `t1` with
//!   `t1 - t` in `w` and `M2` holds throughout the open interval `(t, t1)`
//!   (`since` mirrors with `t - t1` in `w` and `(t1, t)`).

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::interpretation::Interpretation;
use crate::syntax::{MetricAtom, RelationalAtom, Term};
use crate::temporal::{Interval, IntervalSet, TimePoint};

/// A finite mapping from variable names to constants.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Substitution {
    map: BTreeMap<String, String>,
}

impl Substitution {
    pub fn empty() -> Substitution {
        Substitution::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Substitution {
        Substitution { map: pairs.into_iter().collect() }
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.map.get(var).map(String::as_str)
    }

    pub fn bind(&mut self, var: &str, constant: &str) {
        self.map.insert(var.to_string(), constant.to_string());
    }

    /// Applies the substitution to one term; unmapped variables stay variables.
    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Variable(v) => match self.map.get(v) {
                Some(c) => Term::Constant(c.clone()),
                None => t.clone(),
            },
            Term::Constant(_) => t.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl std::fmt::Display for Substitution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (v, c)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}->{c}")?;
        }
        write!(f, "}}")
    }
}

/// Evaluates a ground metric atom: the exact set of points where it holds.
///
/// Panics if the atom is not ground; grounding is the caller's job (see
/// [`match_substitutions`]).
pub fn eval_metric(store: &Interpretation, atom: &MetricAtom) -> IntervalSet {
    assert!(atom.is_ground(), "eval_metric requires a ground atom");
    eval(store, atom)
}

fn eval(store: &Interpretation, atom: &MetricAtom) -> IntervalSet {
    match atom {
        MetricAtom::Truth => IntervalSet::singleton(Interval::unbounded()),
        MetricAtom::Falsehood => IntervalSet::empty(),
        MetricAtom::Rel(r) => store.get(r).clone(),
        MetricAtom::BoxPlus(w, m) => {
            // t such that t + w sits inside one stored interval of eval(m):
            // a connected window fits in the union iff it fits in a member.
            let inner = eval(store, m);
            IntervalSet::coalesce(inner.members().iter().filter_map(|iv| iv.erode(w)).collect())
        }
        MetricAtom::BoxMinus(w, m) => {
            // t - w ⊆ iv  <=>  t + (-w) ⊆ iv.
            let inner = eval(store, m);
            let neg = w.negated();
            IntervalSet::coalesce(inner.members().iter().filter_map(|iv| iv.erode(&neg)).collect())
        }
        MetricAtom::DiamondPlus(w, m) => {
            // (t + w) meets iv  <=>  t in iv - w (Minkowski difference).
            let inner = eval(store, m);
            IntervalSet::coalesce(inner.members().iter().map(|iv| iv.minkowski_diff(w)).collect())
        }
        MetricAtom::DiamondMinus(w, m) => {
            let inner = eval(store, m);
            IntervalSet::coalesce(inner.members().iter().map(|iv| iv.minkowski_sum(w)).collect())
        }
        MetricAtom::Until(l, w, r) => eval_until(&eval(store, l), &eval(store, r), w),
        MetricAtom::Since(l, w, r) => eval_since(&eval(store, l), &eval(store, r), w),
    }
}

/// Does the window contain the point 0? Operator windows are non-negative,
/// so this is a check on the lower endpoint.
fn window_contains_zero(w: &Interval) -> bool {
    w.lower_closed() && matches!(w.lower(), TimePoint::Finite(q) if q.is_zero())
}

/// The strictly positive part of a window, if non-empty.
fn positive_part(w: &Interval) -> Option<Interval> {
    let open_positives =
        Interval::new(TimePoint::integer(0), false, TimePoint::PosInf, false).unwrap();
    w.intersect(&open_positives)
}

/// `M2 until[w] M1` on interval representations.
///
/// Split by the witness position `t1`:
/// - `t1 = t` (allowed when 0 is in the window): exactly where `M1` holds;
/// - `t1 > t`: pick the member `iv2` of `eval(M2)` that carries the open
///   interval `(t, t1)`. Containment of `(t, t1)` in `iv2` is equivalent to
///   `t >= inf(iv2)` and `t1 <= sup(iv2)`, regardless of `iv2`'s endpoint
///   flags. So per pair (`iv1`, `iv2`): clip `iv1` to `sup(iv2)`, shift by
///   the positive window part, clip to `inf(iv2)`.
fn eval_until(left: &IntervalSet, right: &IntervalSet, w: &Interval) -> IntervalSet {
    let mut out: Vec<Interval> = Vec::new();
    if window_contains_zero(w) {
        out.extend(right.members().iter().cloned());
    }
    if let Some(wpos) = positive_part(w) {
        for iv2 in left.members() {
            let sup_clip = Interval::new(TimePoint::NegInf, false, iv2.supremum().clone(), true);
            let inf_clip = Interval::new(iv2.infimum().clone(), true, TimePoint::PosInf, false);
            let (Some(sup_clip), Some(inf_clip)) = (sup_clip, inf_clip) else {
                continue;
            };
            for iv1 in right.members() {
                if let Some(k) = iv1.intersect(&sup_clip) {
                    let candidates = k.minkowski_diff(&wpos);
                    if let Some(result) = candidates.intersect(&inf_clip) {
                        out.push(result);
                    }
                }
            }
        }
    }
    IntervalSet::coalesce(out)
}

/// `M2 since[w] M1`: the past mirror of [`eval_until`].
fn eval_since(left: &IntervalSet, right: &IntervalSet, w: &Interval) -> IntervalSet {
    let mut out: Vec<Interval> = Vec::new();
    if window_contains_zero(w) {
        out.extend(right.members().iter().cloned());
    }
    if let Some(wpos) = positive_part(w) {
        for iv2 in left.members() {
            let inf_clip = Interval::new(iv2.infimum().clone(), true, TimePoint::PosInf, false);
            let sup_clip = Interval::new(TimePoint::NegInf, false, iv2.supremum().clone(), true);
            let (Some(inf_clip), Some(sup_clip)) = (inf_clip, sup_clip) else {
                continue;
            };
            for iv1 in right.members() {
                if let Some(k) = iv1.intersect(&inf_clip) {
                    let candidates = k.minkowski_sum(&wpos);
                    if let Some(result) = candidates.intersect(&sup_clip) {
                        out.push(result);
                    }
                }
            }
        }
    }
    IntervalSet::coalesce(out)
}

/// Intersection over the body of the per-atom evaluations: the set of points
/// where every atom of the grounded body holds.
pub fn eval_body_at_time(
    store: &Interpretation,
    body: &[MetricAtom],
    sub: &Substitution,
) -> IntervalSet {
    let mut acc = IntervalSet::singleton(Interval::unbounded());
    for atom in body {
        if acc.is_empty() {
            break;
        }
        acc = acc.intersection(&eval_metric(store, &atom.substitute(sub)));
    }
    acc
}

/// Relational atoms that must hold somewhere in the store for `atom` to hold
/// anywhere. The left operand of an `until`/`since` whose window contains 0
/// is exempt: the operator can then hold purely by virtue of its right
/// operand, with the left operand vacuous.
fn required_atoms<'a>(atom: &'a MetricAtom, out: &mut Vec<&'a RelationalAtom>) {
    match atom {
        MetricAtom::Truth | MetricAtom::Falsehood => {}
        MetricAtom::Rel(r) => out.push(r),
        MetricAtom::BoxPlus(_, m)
        | MetricAtom::BoxMinus(_, m)
        | MetricAtom::DiamondPlus(_, m)
        | MetricAtom::DiamondMinus(_, m) => required_atoms(m, out),
        MetricAtom::Until(l, w, r) | MetricAtom::Since(l, w, r) => {
            required_atoms(r, out);
            if !window_contains_zero(w) {
                required_atoms(l, out);
            }
        }
    }
}

/// Extends `sub` so that `atom` becomes the ground store key `key`, or
/// reports a mismatch. `key` must be ground.
pub fn unify(
    atom: &RelationalAtom,
    key: &RelationalAtom,
    sub: &Substitution,
) -> Option<Substitution> {
    let mut out = sub.clone();
    for (pattern, ground) in atom.args.iter().zip(&key.args) {
        let Term::Constant(c) = ground else {
            unreachable!("store keys are ground");
        };
        match pattern {
            Term::Constant(d) => {
                if d != c {
                    return None;
                }
            }
            Term::Variable(v) => match out.get(v) {
                Some(bound) if bound != c.as_str() => return None,
                Some(_) => {}
                None => out.bind(v, c),
            },
        }
    }
    Some(out)
}

/// All substitutions over the body's variables that can make the body hold
/// somewhere, possibly with false positives (the caller re-evaluates each
/// candidate); never with false negatives.
///
/// Variables occurring in some required atom are found by joining those
/// atoms against the store, left to right. Variables occurring only in
/// vacuous positions (the left operand of an `until`/`since` admitting a
/// zero gap) are unconstrained by the store and range over `domain` — the
/// constants of the program and dataset under consideration.
pub fn match_substitutions(
    store: &Interpretation,
    body: &[MetricAtom],
    domain: &BTreeSet<String>,
) -> Vec<Substitution> {
    let mut required: Vec<&RelationalAtom> = Vec::new();
    for atom in body {
        required_atoms(atom, &mut required);
    }

    let mut candidates = vec![Substitution::empty()];
    for atom in &required {
        let mut next = Vec::new();
        for sub in &candidates {
            let grounded = atom.substitute(sub);
            if grounded.is_ground() {
                // Point lookup: the substitution survives iff the key is
                // present (stored sets are never empty).
                if !store.get(&grounded).is_empty() {
                    next.push(sub.clone());
                }
            } else {
                for (key, _) in store.atoms_with_predicate(&atom.predicate) {
                    if let Some(extended) = unify(atom, key, sub) {
                        next.push(extended);
                    }
                }
            }
        }
        candidates = next;
        if candidates.is_empty() {
            return candidates;
        }
    }

    // Fill in the variables no required atom mentions.
    let mut joined_vars: BTreeSet<&str> = BTreeSet::new();
    for atom in &required {
        joined_vars.extend(atom.variables());
    }
    let mut leftover: BTreeSet<String> = BTreeSet::new();
    for atom in body {
        for v in atom.variables() {
            if !joined_vars.contains(v.as_str()) {
                leftover.insert(v);
            }
        }
    }
    for v in &leftover {
        let mut next = Vec::with_capacity(candidates.len() * domain.len());
        for sub in &candidates {
            for c in domain {
                let mut extended = sub.clone();
                extended.bind(v, c);
                next.push(extended);
            }
        }
        candidates = next;
        if candidates.is_empty() {
            // Empty domain: no ground instance of the rule exists.
            return candidates;
        }
    }
    candidates
}
