//! A brute-force, pointwise entailment oracle, independent of the interval
//! algebra used by the engine.
//!
//! For instances whose dataset endpoints and rule windows are all integers,
//! every derivable truth set is a union of intervals with integer endpoints.
//! Such sets are completely described by their value on the *regions* of the
//! integer line: the points `n` and the open unit gaps `(n, n+1)`. The
//! oracle therefore keeps one boolean per ground atom per region and decides
//! the standard metric-operator conditions by quantifying over the regions a
//! window intersects, evaluating operands at region representatives (the
//! half-integers stand in for the gaps). On this fragment the procedure is
//! exact, not an approximation.
//!
//! The least fixpoint is computed naively: all rule instances are applied
//! pointwise (per region) round by round until nothing changes. The line is
//! finite; two safety checks make that sound. If a derivation ever writes
//! outside the line, or any truth appears in the outermost boundary band
//! after the run, the line is widened and the run repeated. A run that
//! finishes clean is exact: truth can only spread by one window reach per
//! round, so escaping the line would first leave a trace in the band.
//! Instances whose derivations genuinely never stop spreading (for example a
//! rule guarded by nothing but `top`) exhaust the widening attempts and are
//! reported as exceeding the oracle's limits.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::interpretation::Interpretation;
use crate::syntax::{Dataset, Fact, MetricAtom, Program, RelationalAtom, Rule};
use crate::temporal::{Interval, TimePoint};

/// Most constants the oracle accepts; beyond this the ground-instance count
/// gets out of hand.
pub const ORACLE_MAX_CONSTANTS: usize = 6;

/// Default round cap for the oracle's naive fixpoint.
pub const ORACLE_DEFAULT_ROUNDS: usize = 400;

const MAX_WIDEN_ATTEMPTS: usize = 8;
const MAX_LINE_SPAN: i64 = 8192;
const MAX_GROUND_INSTANCES: usize = 200_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle requires integer endpoints, got {0}")]
    NonIntegerEndpoint(String),
    #[error("oracle requires bounded windows and intervals, got {0}")]
    Unbounded(String),
    #[error("oracle requires a ground atom, got {0}")]
    NonGround(String),
    #[error("instance exceeds oracle limits: {0}")]
    LimitExceeded(String),
}

fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn half(n: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(2))
}

/// A finite, integer endpoint required of instance intervals.
fn integer_endpoint(t: &TimePoint, what: &str) -> Result<i64, OracleError> {
    let q = t.as_rational().ok_or_else(|| OracleError::Unbounded(what.to_string()))?;
    if !q.denom().is_one() {
        return Err(OracleError::NonIntegerEndpoint(what.to_string()));
    }
    q.numer()
        .to_i64()
        .ok_or_else(|| OracleError::LimitExceeded(format!("endpoint too large in {what}")))
}

fn collect_windows<'a>(m: &'a MetricAtom, out: &mut Vec<&'a Interval>) {
    match m {
        MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => {}
        MetricAtom::BoxPlus(w, i)
        | MetricAtom::BoxMinus(w, i)
        | MetricAtom::DiamondPlus(w, i)
        | MetricAtom::DiamondMinus(w, i) => {
            out.push(w);
            collect_windows(i, out);
        }
        MetricAtom::Until(l, w, r) | MetricAtom::Since(l, w, r) => {
            out.push(w);
            collect_windows(l, out);
            collect_windows(r, out);
        }
    }
}

fn rule_windows(rule: &Rule) -> Vec<&Interval> {
    let mut out = Vec::new();
    collect_windows(&rule.head, &mut out);
    for m in &rule.body {
        collect_windows(m, &mut out);
    }
    out
}

/// The region decomposition of `[lo, hi]`: even indices are the integer
/// points `lo + i/2`, odd indices the open gaps between them.
#[derive(Debug, Clone, Copy)]
struct RegionLine {
    lo: i64,
    hi: i64,
}

impl RegionLine {
    fn count(&self) -> usize {
        (2 * (self.hi - self.lo) + 1) as usize
    }

    /// Canonical representative: the point itself or the gap's midpoint.
    fn rep(&self, i: usize) -> BigRational {
        half(2 * self.lo + i as i64)
    }

    /// The region as an interval: `[n,n]` or `(n, n+1)`.
    fn region_interval(&self, i: usize) -> (BigRational, bool, BigRational, bool) {
        let n = self.lo + (i as i64) / 2;
        if i % 2 == 0 {
            (rational(n), true, rational(n), true)
        } else {
            (rational(n), false, rational(n + 1), false)
        }
    }

    /// Index of the region in double coordinates (`2 * (x - lo)`) that a
    /// boundary at `x` maps to, from the left (`lower = true`) or the right.
    fn boundary_index(&self, x: &BigRational, closed: bool, lower: bool) -> i64 {
        let p = x * BigRational::from_integer(BigInt::from(2)) - rational(2 * self.lo);
        if p.denom().is_one() {
            let e = p.numer().to_i64().unwrap_or(if lower { i64::MIN / 4 } else { i64::MAX / 4 });
            if e.rem_euclid(2) == 0 {
                // At an integer: open boundaries step over the point region.
                match (closed, lower) {
                    (true, _) => e,
                    (false, true) => e + 1,
                    (false, false) => e - 1,
                }
            } else {
                e // interior of a gap; flags are immaterial
            }
        } else {
            // Strictly inside some gap region.
            let k = p.floor().numer().to_i64().unwrap_or(if lower {
                i64::MIN / 4
            } else {
                i64::MAX / 4
            });
            if k.rem_euclid(2) == 1 {
                k
            } else {
                k + 1
            }
        }
    }

    /// Regions intersecting the interval, plus whether part of it lies
    /// outside the line. Empty intervals give `(false, None)`.
    fn span(
        &self,
        lo: &BigRational,
        lo_closed: bool,
        hi: &BigRational,
        hi_closed: bool,
    ) -> (bool, Option<(usize, usize)>) {
        if lo > hi || (lo == hi && !(lo_closed && hi_closed)) {
            return (false, None);
        }
        let start = self.boundary_index(lo, lo_closed, true);
        let end = self.boundary_index(hi, hi_closed, false);
        if start > end {
            // A degenerate open interval like (n, n+0) after flag stepping.
            return (false, None);
        }
        let last_index = self.count() as i64 - 1;
        let oob = start < 0 || end > last_index;
        let first = start.max(0);
        let last = end.min(last_index);
        if first > last {
            (oob, None)
        } else {
            (oob, Some((first as usize, last as usize)))
        }
    }

    fn region_of(&self, t: &BigRational) -> Option<usize> {
        let (oob, span) = self.span(t, true, t, true);
        match (oob, span) {
            (false, Some((i, _))) => Some(i),
            _ => None,
        }
    }
}

/// Truth tables: one boolean per region per ground relational atom.
struct Tables {
    line: RegionLine,
    truth: BTreeMap<RelationalAtom, Vec<bool>>,
}

impl Tables {
    fn new(line: RegionLine) -> Tables {
        Tables { line, truth: BTreeMap::new() }
    }

    fn rel(&self, atom: &RelationalAtom, i: usize) -> bool {
        self.truth.get(atom).is_some_and(|v| v[i])
    }

    /// Marks every region the integer-endpoint interval covers; returns
    /// (changed, wrote out of bounds).
    fn mark(
        &mut self,
        atom: &RelationalAtom,
        iv: (BigRational, bool, BigRational, bool),
    ) -> (bool, bool) {
        let (lo, lc, hi, hc) = iv;
        let (oob, span) = self.line.span(&lo, lc, &hi, hc);
        let Some((first, last)) = span else {
            return (false, oob);
        };
        let count = self.line.count();
        let row = self.truth.entry(atom.clone()).or_insert_with(|| vec![false; count]);
        let mut changed = false;
        for bit in &mut row[first..=last] {
            if !*bit {
                *bit = true;
                changed = true;
            }
        }
        (changed, oob)
    }

    /// The Table 1 condition for `m` at the rational point `t`, decided over
    /// regions. Operands are evaluated at region representatives, which is
    /// exact because truth is constant on each region.
    fn eval_at(&self, m: &MetricAtom, t: &BigRational) -> bool {
        match m {
            MetricAtom::Truth => true,
            MetricAtom::Falsehood => false,
            MetricAtom::Rel(r) => self.line.region_of(t).is_some_and(|i| self.rel(r, i)),
            MetricAtom::BoxPlus(w, inner) => self.for_all(&Self::window_plus(t, w), inner),
            MetricAtom::DiamondPlus(w, inner) => self.exists(&Self::window_plus(t, w), inner),
            MetricAtom::BoxMinus(w, inner) => self.for_all(&Self::window_minus(t, w), inner),
            MetricAtom::DiamondMinus(w, inner) => self.exists(&Self::window_minus(t, w), inner),
            MetricAtom::Until(left, w, right) => self.until_at(left, w, right, t),
            MetricAtom::Since(left, w, right) => self.since_at(left, w, right, t),
        }
    }

    /// `t + w` with `w`'s own flags. Windows are validated finite first.
    fn window_plus(t: &BigRational, w: &Interval) -> (BigRational, bool, BigRational, bool) {
        let a = w.lower().as_rational().expect("validated finite window");
        let b = w.upper().as_rational().expect("validated finite window");
        (t + a, w.lower_closed(), t + b, w.upper_closed())
    }

    /// `t - w`: `[t - sup, t - inf]` with the flags swapped accordingly.
    fn window_minus(t: &BigRational, w: &Interval) -> (BigRational, bool, BigRational, bool) {
        let a = w.lower().as_rational().expect("validated finite window");
        let b = w.upper().as_rational().expect("validated finite window");
        (t - b, w.upper_closed(), t - a, w.lower_closed())
    }

    fn for_all(&self, iv: &(BigRational, bool, BigRational, bool), inner: &MetricAtom) -> bool {
        let (oob, span) = self.line.span(&iv.0, iv.1, &iv.2, iv.3);
        if oob {
            // Part of the window lies where no atom can be true.
            return false;
        }
        span.is_none_or(|(a, b)| (a..=b).all(|i| self.eval_at(inner, &self.line.rep(i))))
    }

    fn exists(&self, iv: &(BigRational, bool, BigRational, bool), inner: &MetricAtom) -> bool {
        let (_, span) = self.line.span(&iv.0, iv.1, &iv.2, iv.3);
        span.is_some_and(|(a, b)| (a..=b).any(|i| self.eval_at(inner, &self.line.rep(i))))
    }

    /// `left until[w] right` at `t`: some witness `t1` in `t + w` satisfies
    /// `right`, with `left` throughout the open `(t, t1)`. Witnesses are
    /// tried region by region; within one region the requirement on `left`
    /// does not depend on the choice of `t1`, so the infimum of the region's
    /// admissible part decides. When that infimum is not attained, the open
    /// interval `(t, t1)` still clips a prefix of the witness region itself,
    /// so the region joins the requirement.
    fn until_at(
        &self,
        left: &MetricAtom,
        w: &Interval,
        right: &MetricAtom,
        t: &BigRational,
    ) -> bool {
        let s = Self::window_plus(t, w);
        let (_, span) = self.line.span(&s.0, s.1, &s.2, s.3);
        let Some((first, last)) = span else {
            return false;
        };
        (first..=last).any(|i| {
            if !self.eval_at(right, &self.line.rep(i)) {
                return false;
            }
            let (rlo, rlc, _, _) = self.line.region_interval(i);
            // Lower bound of region ∩ s: the later (more restrictive) start.
            let (c, attained) = match rlo.cmp(&s.0) {
                std::cmp::Ordering::Greater => (rlo, rlc),
                std::cmp::Ordering::Less => (s.0.clone(), s.1),
                std::cmp::Ordering::Equal => (rlo, rlc && s.1),
            };
            let needed = (t.clone(), false, c, !attained);
            let (oob, need_span) = self.line.span(&needed.0, needed.1, &needed.2, needed.3);
            if oob {
                return false;
            }
            let covered = need_span
                .is_none_or(|(a, b)| (a..=b).all(|j| self.eval_at(left, &self.line.rep(j))));
            covered && (attained || self.eval_at(left, &self.line.rep(i)))
        })
    }

    /// Mirror image of [`Tables::until_at`]: witness in `t - w`, `left`
    /// throughout `(t1, t)`.
    fn since_at(
        &self,
        left: &MetricAtom,
        w: &Interval,
        right: &MetricAtom,
        t: &BigRational,
    ) -> bool {
        let s = Self::window_minus(t, w);
        let (_, span) = self.line.span(&s.0, s.1, &s.2, s.3);
        let Some((first, last)) = span else {
            return false;
        };
        (first..=last).any(|i| {
            if !self.eval_at(right, &self.line.rep(i)) {
                return false;
            }
            let (_, _, rhi, rhc) = self.line.region_interval(i);
            // Upper bound of region ∩ s: the earlier (more restrictive) end.
            let (c, attained) = match rhi.cmp(&s.2) {
                std::cmp::Ordering::Less => (rhi, rhc),
                std::cmp::Ordering::Greater => (s.2.clone(), s.3),
                std::cmp::Ordering::Equal => (rhi, rhc && s.3),
            };
            let needed = (c, !attained, t.clone(), false);
            let (oob, need_span) = self.line.span(&needed.0, needed.1, &needed.2, needed.3);
            if oob {
                return false;
            }
            let covered = need_span
                .is_none_or(|(a, b)| (a..=b).all(|j| self.eval_at(left, &self.line.rep(j))));
            covered && (attained || self.eval_at(left, &self.line.rep(i)))
        })
    }
}

/// A rule instance ground over the active domain, with the head peeled into
/// its box prefix and target atom.
struct GroundInstance {
    body: Vec<MetricAtom>,
    head_boxes: Vec<(bool, Interval)>,
    head_atom: RelationalAtom,
}

fn peel_head(rule: &Rule) -> Option<(Vec<(bool, Interval)>, &RelationalAtom)> {
    let mut boxes = Vec::new();
    let mut cur = &rule.head;
    loop {
        match cur {
            MetricAtom::BoxPlus(w, inner) => {
                boxes.push((true, w.clone()));
                cur = inner;
            }
            MetricAtom::BoxMinus(w, inner) => {
                boxes.push((false, w.clone()));
                cur = inner;
            }
            MetricAtom::Rel(r) => return Some((boxes, r)),
            // A `top` head derives nothing.
            _ => return None,
        }
    }
}

fn ground_instances(p: &Program, domain: &[String]) -> Result<Vec<GroundInstance>, OracleError> {
    use crate::semantics::Substitution;
    let mut out = Vec::new();
    for rule in p.rules() {
        let Some((head_boxes, head_atom)) = peel_head(rule) else {
            continue;
        };
        let vars: Vec<String> = rule.variables().into_iter().collect();
        if domain.is_empty() && !vars.is_empty() {
            continue; // no constants to ground over; the rule cannot fire
        }
        let total = domain.len().checked_pow(vars.len() as u32).unwrap_or(usize::MAX);
        if out.len().saturating_add(total) > MAX_GROUND_INSTANCES {
            return Err(OracleError::LimitExceeded(format!(
                "more than {MAX_GROUND_INSTANCES} ground rule instances"
            )));
        }
        let mut pick = vec![0usize; vars.len()];
        loop {
            let sub = Substitution::from_pairs(
                vars.iter().zip(&pick).map(|(v, &k)| (v.clone(), domain[k].clone())),
            );
            out.push(GroundInstance {
                body: rule.body.iter().map(|m| m.substitute(&sub)).collect(),
                head_boxes: head_boxes.clone(),
                head_atom: head_atom.substitute(&sub),
            });
            // Advance the odometer over the domain.
            let mut j = 0;
            loop {
                if j == pick.len() {
                    break;
                }
                pick[j] += 1;
                if pick[j] < domain.len() {
                    break;
                }
                pick[j] = 0;
                j += 1;
            }
            if j == pick.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Applies the head's box prefix, outside in, to the firing region.
fn derived_interval(
    base: (BigRational, bool, BigRational, bool),
    boxes: &[(bool, Interval)],
) -> (BigRational, bool, BigRational, bool) {
    let mut cur = base;
    for (plus, w) in boxes {
        let a = w.lower().as_rational().expect("validated finite window").clone();
        let b = w.upper().as_rational().expect("validated finite window").clone();
        cur = if *plus {
            (cur.0 + a, cur.1 && w.lower_closed(), cur.2 + b, cur.3 && w.upper_closed())
        } else {
            (cur.0 - b, cur.1 && w.upper_closed(), cur.2 - a, cur.3 && w.lower_closed())
        };
    }
    cur
}

/// One naive fixpoint run on a fixed line. Returns the tables and whether
/// any derivation tried to write outside the line.
fn run_fixpoint(
    instances: &[GroundInstance],
    mut tables: Tables,
    max_rounds: usize,
) -> Result<(Tables, bool), OracleError> {
    let count = tables.line.count();
    let mut wrote_oob = false;
    for _ in 0..max_rounds {
        // Synchronous round: evaluate against the frozen tables, then apply.
        let mut derived: Vec<(RelationalAtom, (BigRational, bool, BigRational, bool))> = Vec::new();
        for inst in instances {
            for i in 0..count {
                let rep = tables.line.rep(i);
                if inst.body.iter().all(|m| tables.eval_at(m, &rep)) {
                    derived.push((
                        inst.head_atom.clone(),
                        derived_interval(tables.line.region_interval(i), &inst.head_boxes),
                    ));
                }
            }
        }
        let mut changed = false;
        for (atom, iv) in derived {
            let (c, oob) = tables.mark(&atom, iv);
            changed |= c;
            wrote_oob |= oob;
        }
        if !changed {
            return Ok((tables, wrote_oob));
        }
    }
    Err(OracleError::LimitExceeded(format!("no fixpoint within {max_rounds} rounds")))
}

fn active_domain(p: &Program, d: &Dataset, extra: &RelationalAtom) -> Vec<String> {
    let mut domain: BTreeSet<String> = p.constants();
    for fact in d.facts() {
        for t in &fact.atom.args {
            if let crate::syntax::Term::Constant(c) = t {
                domain.insert(c.clone());
            }
        }
    }
    for t in &extra.args {
        if let crate::syntax::Term::Constant(c) = t {
            domain.insert(c.clone());
        }
    }
    domain.into_iter().collect()
}

/// Validates the instance and collects the integer data range and maximum
/// window reach.
fn instance_bounds(p: &Program, d: &Dataset) -> Result<(i64, i64, i64), OracleError> {
    let mut reach: i64 = 1;
    for rule in p.rules() {
        for w in rule_windows(rule) {
            let a = integer_endpoint(w.lower(), &format!("window {w}"))?;
            let b = integer_endpoint(w.upper(), &format!("window {w}"))?;
            reach = reach.max(a.abs()).max(b.abs());
        }
    }
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for fact in d.facts() {
        let a = integer_endpoint(fact.interval.lower(), &format!("fact {fact}"))?;
        let b = integer_endpoint(fact.interval.upper(), &format!("fact {fact}"))?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    if d.facts().is_empty() {
        lo = 0;
        hi = 0;
    }
    Ok((lo, hi, reach))
}

/// Seeds the dataset facts into fresh tables for the given line.
fn seed_tables(line: RegionLine, d: &Dataset) -> Tables {
    let mut tables = Tables::new(line);
    for fact in d.facts() {
        let lo = fact.interval.lower().as_rational().expect("validated").clone();
        let hi = fact.interval.upper().as_rational().expect("validated").clone();
        let iv = (lo, fact.interval.lower_closed(), hi, fact.interval.upper_closed());
        tables.mark(&fact.atom, iv);
    }
    tables
}

/// Does any truth sit within `band` integer steps of the line's ends?
fn truth_in_band(tables: &Tables, band: i64) -> bool {
    let count = tables.line.count();
    let b = (2 * band) as usize;
    tables.truth.values().any(|row| {
        row.iter().take(b + 1).any(|&x| x) || row.iter().rev().take((b + 1).min(count)).any(|&x| x)
    })
}

/// Least-fixpoint entailment of `f` under `(p, d)`, decided pointwise.
///
/// Requirements: rule windows and dataset endpoints are finite integers, the
/// probe fact's endpoints are finite halves or integers, and the instance
/// stays within the constant/instance limits. Instances whose derivations
/// spread without bound are reported as exceeding the oracle limits.
pub fn dense_oracle_entails(p: &Program, d: &Dataset, f: &Fact) -> Result<bool, OracleError> {
    dense_oracle_entails_with(p, d, f, ORACLE_DEFAULT_ROUNDS)
}

pub fn dense_oracle_entails_with(
    p: &Program,
    d: &Dataset,
    f: &Fact,
    max_rounds: usize,
) -> Result<bool, OracleError> {
    // The probe's endpoints may be half-integers (gap representatives).
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for (side, t) in [("lower", f.interval.lower()), ("upper", f.interval.upper())] {
        let q = t
            .as_rational()
            .ok_or_else(|| OracleError::Unbounded(format!("query fact {side} endpoint")))?;
        let doubled = q * BigRational::from_integer(BigInt::from(2));
        if !doubled.denom().is_one() {
            return Err(OracleError::NonIntegerEndpoint(format!(
                "query fact endpoint {q} (integers and halves only)"
            )));
        }
        let floor =
            q.floor().numer().to_i64().ok_or_else(|| {
                OracleError::LimitExceeded("query endpoint too large".to_string())
            })?;
        lo = lo.min(floor);
        hi = hi.max(floor + 1);
    }

    let tables = solve(p, d, lo, hi, Some(&f.atom), max_rounds)?;
    let lo_q = f.interval.lower().as_rational().expect("validated").clone();
    let hi_q = f.interval.upper().as_rational().expect("validated").clone();
    let (oob, span) =
        tables.line.span(&lo_q, f.interval.lower_closed(), &hi_q, f.interval.upper_closed());
    debug_assert!(!oob, "query interval fits the initial line by construction");
    Ok(span.is_some_and(|(a, b)| (a..=b).all(|i| tables.rel(&f.atom, i))))
}

/// One fixpoint, many probes: for every derived ground atom, its truth at
/// each grid point `k/2` with `2*lo <= k <= 2*hi`. Atoms never derived are
/// absent (false everywhere).
pub fn dense_oracle_truths(
    p: &Program,
    d: &Dataset,
    lo: i64,
    hi: i64,
    max_rounds: usize,
) -> Result<BTreeMap<RelationalAtom, Vec<bool>>, OracleError> {
    let tables = solve(p, d, lo, hi, None, max_rounds)?;
    let mut out = BTreeMap::new();
    for (atom, row) in &tables.truth {
        let bits: Vec<bool> = (2 * lo..=2 * hi)
            .map(|k| tables.line.region_of(&half(k)).map(|i| row[i]).unwrap_or(false))
            .collect();
        if bits.iter().any(|&b| b) {
            out.insert(atom.clone(), bits);
        }
    }
    Ok(out)
}

/// Validates, grounds, and runs the widening loop; the returned line covers
/// `[extra_lo, extra_hi]` with clearance.
fn solve(
    p: &Program,
    d: &Dataset,
    extra_lo: i64,
    extra_hi: i64,
    extra_atom: Option<&RelationalAtom>,
    max_rounds: usize,
) -> Result<Tables, OracleError> {
    let (mut lo, mut hi, reach) = instance_bounds(p, d)?;
    lo = lo.min(extra_lo);
    hi = hi.max(extra_hi);

    let empty = RelationalAtom { predicate: crate::syntax::Predicate::new("q", 0), args: vec![] };
    let domain = active_domain(p, d, extra_atom.unwrap_or(&empty));
    if domain.len() > ORACLE_MAX_CONSTANTS {
        return Err(OracleError::LimitExceeded(format!(
            "{} constants exceed the oracle cap of {ORACLE_MAX_CONSTANTS}",
            domain.len()
        )));
    }
    let instances = ground_instances(p, &domain)?;

    let band = reach + 1;
    let mut pad = 2 * reach + 2;
    for _ in 0..MAX_WIDEN_ATTEMPTS {
        if (hi - lo) + 2 * pad > MAX_LINE_SPAN {
            return Err(OracleError::LimitExceeded(format!(
                "region line longer than {MAX_LINE_SPAN}"
            )));
        }
        let line = RegionLine { lo: lo - pad, hi: hi + pad };
        let tables = seed_tables(line, d);
        let (tables, wrote_oob) = run_fixpoint(&instances, tables, max_rounds)?;
        if wrote_oob || truth_in_band(&tables, band) {
            pad *= 2;
            continue;
        }
        return Ok(tables);
    }
    Err(OracleError::LimitExceeded(
        "derivations kept spreading past every widened line".to_string(),
    ))
}

/// Pointwise evaluation of one ground metric atom against a fixed store, at
/// an arbitrary rational probe. The store must have integer endpoints; the
/// probe may be any rational (dense-grid and ε-probes included), since the
/// line is padded to cover every window reachable from it.
pub fn oracle_eval_at(
    store: &Interpretation,
    m: &MetricAtom,
    t: &BigRational,
) -> Result<bool, OracleError> {
    if !m.variables().is_empty() {
        return Err(OracleError::NonGround(m.to_string()));
    }
    let mut windows = Vec::new();
    collect_windows(m, &mut windows);
    let mut reach: i64 = 1;
    for w in &windows {
        let a = integer_endpoint(w.lower(), &format!("window {w}"))?;
        let b = integer_endpoint(w.upper(), &format!("window {w}"))?;
        reach = reach.saturating_add(a.abs().max(b.abs()));
    }

    let mut lo = t
        .floor()
        .numer()
        .to_i64()
        .ok_or_else(|| OracleError::LimitExceeded("probe point too large".to_string()))?;
    let mut hi = lo + 1;
    for (atom, set) in store.atoms() {
        for iv in set.members() {
            let a = integer_endpoint(iv.lower(), &format!("store entry {atom}"))?;
            let b = integer_endpoint(iv.upper(), &format!("store entry {atom}"))?;
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    let pad = reach + 2;
    if (hi - lo) + 2 * pad > MAX_LINE_SPAN {
        return Err(OracleError::LimitExceeded(format!("region line longer than {MAX_LINE_SPAN}")));
    }
    let line = RegionLine { lo: lo - pad, hi: hi + pad };
    let mut tables = Tables::new(line);
    for (atom, set) in store.atoms() {
        for iv in set.members() {
            let a = iv.lower().as_rational().expect("validated").clone();
            let b = iv.upper().as_rational().expect("validated").clone();
            tables.mark(atom, (a, iv.lower_closed(), b, iv.upper_closed()));
        }
    }
    Ok(tables.eval_at(m, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materialisation::{materialize, MaterialisationConfig};
    use crate::parser::{parse_dataset, parse_program};
    use crate::syntax::{normalize, Term};

    fn program(text: &str) -> Program {
        parse_program(text).expect("parse").program
    }

    fn dataset(text: &str) -> Dataset {
        parse_dataset(text).expect("parse")
    }

    fn fact(text: &str) -> Fact {
        let d = parse_dataset(text).expect("parse");
        d.facts()[0].clone()
    }

    fn store(text: &str) -> Interpretation {
        Interpretation::least_model_of(&dataset(text))
    }

    #[test]
    fn span_walks_points_and_gaps() {
        let line = RegionLine { lo: 0, hi: 4 };
        assert_eq!(line.count(), 9);
        // [1,2]: point 1, gap (1,2), point 2.
        assert_eq!(line.span(&rational(1), true, &rational(2), true), (false, Some((2, 4))));
        // (1,2): just the gap.
        assert_eq!(line.span(&rational(1), false, &rational(2), false), (false, Some((3, 3))));
        // [1/2, 1]: gap (0,1) then point 1.
        assert_eq!(line.span(&half(1), true, &rational(1), true), (false, Some((1, 2))));
        // (1/2, 3/4): still clips gap (0,1).
        assert_eq!(
            line.span(&half(1), false, &BigRational::new(3.into(), 4.into()), false),
            (false, Some((1, 1)))
        );
        // [-1, 0]: sticks out on the left.
        assert_eq!(line.span(&rational(-1), true, &rational(0), true), (true, Some((0, 0))));
        // Empty and fully outside.
        assert_eq!(line.span(&rational(2), false, &rational(2), true), (false, None));
        assert_eq!(line.span(&rational(7), true, &rational(9), true), (true, None));
    }

    #[test]
    fn eval_matches_the_box_example() {
        // P(a) on [8,12]: boxplus[0,2] P(a) holds exactly on [8,10].
        let st = store("P(a)@[8,12]");
        let atom = parse_program("X(q) :- boxplus[0,2] P(a), X(q).").expect("parse").program;
        let m = atom.rules()[0].body[0].clone();
        for (t, want) in [
            (rational(8), true),
            (rational(10), true),
            (half(21), false),
            (rational(7), false),
            (BigRational::new(31.into(), 4.into()), false),
        ] {
            assert_eq!(oracle_eval_at(&st, &m, &t).expect("valid"), want, "at {t}");
        }
    }

    #[test]
    fn eval_matches_the_until_example() {
        // Q at {5}, P on [0,10]: P until[1,2] Q holds exactly on [3,4].
        let st = store("Q(a)@5\nP(a)@[0,10]");
        let p = parse_program("X(q) :- P(a) until[1,2] Q(a), X(q).").expect("parse").program;
        let m = p.rules()[0].body[0].clone();
        for (t, want) in [
            (rational(3), true),
            (half(7), true),
            (rational(4), true),
            (BigRational::new(11.into(), 4.into()), false),
            (BigRational::new(17.into(), 4.into()), false),
        ] {
            assert_eq!(oracle_eval_at(&st, &m, &t).expect("valid"), want, "at {t}");
        }
    }

    #[test]
    fn until_needs_the_left_operand_up_to_the_witness_region() {
        // M1 on (5,6) only, M2 on (0,5]: no witness works at 4 because the
        // open (t,t1) always clips a prefix of (5,6) where M2 is false.
        let st = store("B(a)@(5,6)\nA(a)@(0,5]");
        let p = parse_program("X(q) :- A(a) until[1,2] B(a), X(q).").expect("parse").program;
        let m = p.rules()[0].body[0].clone();
        assert!(!oracle_eval_at(&st, &m, &rational(4)).expect("valid"));

        // Extending M2 over (0,6) repairs it.
        let st = store("B(a)@(5,6)\nA(a)@(0,6)");
        assert!(oracle_eval_at(&st, &m, &rational(4)).expect("valid"));
    }

    #[test]
    fn since_mirrors_until() {
        let st = store("B(a)@(5,6)\nA(a)@[6,10)");
        let p = parse_program("X(q) :- A(a) since[1,2] B(a), X(q).").expect("parse").program;
        let m = p.rules()[0].body[0].clone();
        assert!(!oracle_eval_at(&st, &m, &rational(7)).expect("valid"));
        let st = store("B(a)@(5,6)\nA(a)@(5,10)");
        assert!(oracle_eval_at(&st, &m, &rational(7)).expect("valid"));
    }

    #[test]
    fn zero_window_until_is_the_right_operand() {
        let st = store("Q(a)@5");
        let p = parse_program("X(q) :- P(a) until[0,2] Q(a), X(q).").expect("parse").program;
        let m = p.rules()[0].body[0].clone();
        // At t=5 the witness can be t itself; no M2 needed.
        assert!(oracle_eval_at(&st, &m, &rational(5)).expect("valid"));
        // At t=4 a witness at 5 needs M2 throughout (4,5).
        assert!(!oracle_eval_at(&st, &m, &rational(4)).expect("valid"));
    }

    #[test]
    fn empty_program_reduces_to_dataset_coverage() {
        let d = dataset("P(a)@[1,3)");
        let p = Program::default();
        assert!(dense_oracle_entails(&p, &d, &fact("P(a)@2")).expect("valid"));
        assert!(dense_oracle_entails(&p, &d, &fact("P(a)@[1,2]")).expect("valid"));
        assert!(!dense_oracle_entails(&p, &d, &fact("P(a)@3")).expect("valid"));
        assert!(!dense_oracle_entails(&p, &d, &fact("P(a)@[2,3]")).expect("valid"));
        assert!(!dense_oracle_entails(&p, &d, &fact("Q(a)@2")).expect("valid"));
    }

    #[test]
    fn reachability_trace_entails_the_goal() {
        let p = program(
            "boxplus[0,2] P(X) :- I(X,Y), P(Y).\n\
             boxplus[0,1] P(X) :- I(X,Y), diamondminus[0,1] P(Y).",
        );
        let d = dataset("I(arthur,beatrice)@8\nP(beatrice)@8");
        assert!(dense_oracle_entails(&p, &d, &fact("P(arthur)@10")).expect("valid"));
        assert!(dense_oracle_entails(&p, &d, &fact("P(arthur)@[8,10]")).expect("valid"));
        assert!(!dense_oracle_entails(&p, &d, &fact("P(arthur)@11")).expect("valid"));
        assert!(!dense_oracle_entails(&p, &d, &fact("P(beatrice)@9")).expect("valid"));
    }

    #[test]
    fn oracle_agrees_with_materialisation_on_handcrafted_instances() {
        let cases = [
            (
                "boxplus[0,2] P(X) :- I(X,Y), P(Y).\n\
                 boxplus[0,1] P(X) :- I(X,Y), diamondminus[0,1] P(Y).",
                "I(a,b)@8\nP(b)@8\nI(c,a)@[9,10]",
            ),
            (
                "boxminus[1,2] Q(X) :- diamondplus[0,2] P(X).\n\
                 boxplus[0,0] R(X) :- Q(X) since[0,1] P(X).",
                "P(a)@[3,5]\nP(b)@4",
            ),
            (
                "boxplus[0,0] S(X,Y) :- I(X,Y), P(X) until[1,3] P(Y).",
                "I(a,b)@[0,10]\nP(a)@[1,4)\nP(b)@[4,6]",
            ),
        ];
        for (ptext, dtext) in cases {
            let p = normalize(&program(ptext));
            let d = dataset(dtext);
            let run = materialize(&p, &d, &MaterialisationConfig::default());
            assert!(run.reached_fixpoint, "fixpoint expected for {ptext}");
            // Compare membership at every probe on the grid.
            for atom in run.interpretation.atoms().map(|(a, _)| a.clone()).collect::<Vec<_>>() {
                for k in -4..=30 {
                    let probe = half(k);
                    let covered = run
                        .interpretation
                        .get(&atom)
                        .contains_point(&TimePoint::Finite(probe.clone()));
                    let lo = TimePoint::Finite(probe.clone());
                    let f = Fact::new(
                        atom.clone(),
                        Interval::new(lo.clone(), true, lo, true).expect("punctual"),
                    )
                    .expect("ground");
                    let oracle = dense_oracle_entails(&p, &d, &f).expect("valid");
                    assert_eq!(oracle, covered, "{atom} at {probe} on {ptext}");
                }
            }
        }
    }

    #[test]
    fn truth_grid_matches_per_probe_entailment() {
        let p = program("boxplus[0,2] P(X) :- I(X,Y), P(Y).");
        let d = dataset("I(a,b)@8\nP(b)@8");
        let truths = dense_oracle_truths(&p, &d, -2, 14, ORACLE_DEFAULT_ROUNDS).expect("valid");
        let pa = RelationalAtom::make("P", vec![Term::constant("a")]);
        let row = truths.get(&pa).expect("derived");
        for (k, &bit) in ((-4)..=28).zip(row) {
            let probe = half(k);
            let lo = TimePoint::Finite(probe.clone());
            let f = Fact::new(pa.clone(), Interval::new(lo.clone(), true, lo, true).expect("ok"))
                .expect("ground");
            assert_eq!(bit, dense_oracle_entails(&p, &d, &f).expect("valid"), "at {probe}");
        }
        assert!(!truths.contains_key(&RelationalAtom::make("P", vec![Term::constant("c")])));
    }

    #[test]
    fn divergent_instances_hit_the_limits() {
        // P spreads right forever: widening never settles.
        let p = normalize(&program("boxplus[1,2] P(X) :- P(X)."));
        let d = dataset("P(a)@0");
        assert!(matches!(
            dense_oracle_entails(&p, &d, &fact("P(a)@0")),
            Err(OracleError::LimitExceeded(_))
        ));
    }

    #[test]
    fn validation_rejects_out_of_scope_instances() {
        let p = normalize(&program("boxplus[0,1/2] P(X) :- P(X)."));
        let d = dataset("P(a)@0");
        assert!(matches!(
            dense_oracle_entails(&p, &d, &fact("P(a)@0")),
            Err(OracleError::NonIntegerEndpoint(_))
        ));

        let p = Program::default();
        let d = dataset("P(a)@[0,+inf)");
        assert!(matches!(
            dense_oracle_entails(&p, &d, &fact("P(a)@1")),
            Err(OracleError::Unbounded(_))
        ));

        let d = dataset("P(a)@0");
        assert!(matches!(
            dense_oracle_entails(&p, &d, &fact("P(a)@1/4")),
            Err(OracleError::NonIntegerEndpoint(_))
        ));

        let m = MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("X")]));
        assert!(matches!(
            oracle_eval_at(&Interpretation::new(), &m, &rational(0)),
            Err(OracleError::NonGround(_))
        ));
    }

    #[test]
    fn seven_constants_exceed_the_cap() {
        let p = Program::default();
        let d = dataset("P(c1)@0\nP(c2)@0\nP(c3)@0\nP(c4)@0\nP(c5)@0\nP(c6)@0\nP(c7)@0");
        assert!(matches!(
            dense_oracle_entails(&p, &d, &fact("P(c1)@0")),
            Err(OracleError::LimitExceeded(_))
        ));
    }
}
