//! Abstract syntax of DatalogMTL: terms, relational and metric atoms, rules,
//! programs, facts, datasets, and queries, together with program
//! normalisation and grounding.
//!
//! Conventions fixed here and relied on by the rest of the crate:
//!
//! - variable names start with an uppercase ASCII letter, constants with a
//!   lowercase letter (or are arbitrary quoted strings);
//! - predicate names beginning with `m_` denote generated magic predicates
//!   and names beginning with `aux_` denote normalisation helpers — both
//!   namespaces are reserved and rejected in user input by the parser;
//! - rule heads may mention only relational atoms, truth, and the two box
//!   operators; bodies may use the full metric-atom grammar;
//! - every operator window is an interval of non-negative time points.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::magic::Adornment;
use crate::semantics::Substitution;
use crate::temporal::{Interval, TimePoint};

/// Reserved prefix for generated magic predicates.
pub const MAGIC_PREFIX: &str = "m_";
/// Reserved prefix for auxiliary predicates introduced by normalisation.
pub const AUX_PREFIX: &str = "aux_";

/// A structural problem with a rule or program.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("rule body must not be empty")]
    EmptyBody,
    #[error("unsafe rule: head variable {0} does not occur in the body")]
    UnsafeRule(String),
    #[error("rule head must not mention bot, diamond operators, since, or until")]
    InvalidHead,
    #[error("operator window {0} has a negative lower endpoint")]
    NegativeWindow(Interval),
    #[error("predicate {name} used with arity {found}, expected {expected}")]
    ArityMismatch { name: String, expected: usize, found: usize },
    #[error("fact atom must be ground, found variable {0}")]
    NonGroundFact(String),
}

/// A term: variable or constant. Namespaces are disjoint by construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Variable(String),
    Constant(String),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Variable(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Constant(name.to_string())
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Term::Constant(_))
    }
}

/// Is `s` a plain identifier: `[A-Za-z][A-Za-z0-9_]*`?
pub fn is_plain_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(v) => write!(f, "{v}"),
            Term::Constant(c) => {
                // Constants that do not read back as constants get quoted.
                let plain = is_plain_identifier(c)
                    && c.chars().next().is_some_and(|ch| ch.is_ascii_lowercase());
                if plain {
                    write!(f, "{c}")
                } else {
                    write!(f, "\"{}\"", c.replace('\\', "\\\\").replace('"', "\\\""))
                }
            }
        }
    }
}

/// A predicate symbol. Generated magic predicates remember the base
/// predicate and adornment they encode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    name: String,
    arity: usize,
    magic_of: Option<(String, Adornment)>,
}

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Predicate {
        Predicate { name: name.to_string(), arity, magic_of: None }
    }

    /// The magic predicate `m_<base>_<adornment>` for a base predicate. Its
    /// arity is the number of bound positions. The encoding splits back
    /// unambiguously at the last underscore, so distinct (base, adornment)
    /// pairs always produce distinct names.
    pub fn magic(base: &str, adornment: &Adornment) -> Predicate {
        Predicate {
            name: format!("{MAGIC_PREFIX}{base}_{adornment}"),
            arity: adornment.bound_count(),
            magic_of: Some((base.to_string(), adornment.clone())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_magic(&self) -> bool {
        self.magic_of.is_some() || self.name.starts_with(MAGIC_PREFIX)
    }

    pub fn magic_of(&self) -> Option<(&str, &Adornment)> {
        self.magic_of.as_ref().map(|(b, a)| (b.as_str(), a))
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// A relational atom `R(t1,...,tn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationalAtom {
    pub predicate: Predicate,
    pub args: Vec<Term>,
}

impl RelationalAtom {
    pub fn new(predicate: Predicate, args: Vec<Term>) -> Result<RelationalAtom, SyntaxError> {
        if predicate.arity() != args.len() {
            return Err(SyntaxError::ArityMismatch {
                name: predicate.name().to_string(),
                expected: predicate.arity(),
                found: args.len(),
            });
        }
        Ok(RelationalAtom { predicate, args })
    }

    /// Convenience constructor: predicate arity taken from the argument list.
    pub fn make(name: &str, args: Vec<Term>) -> RelationalAtom {
        RelationalAtom { predicate: Predicate::new(name, args.len()), args }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_constant)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(v.as_str()),
            Term::Constant(_) => None,
        })
    }

    pub fn substitute(&self, s: &Substitution) -> RelationalAtom {
        RelationalAtom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|t| s.apply(t)).collect(),
        }
    }
}

impl fmt::Display for RelationalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{t}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// A metric atom: the full operator grammar over relational atoms.
///
/// `Until(l, w, r)` is `l until[w] r` — the left operand must hold on the
/// open interval up to a future moment in window `w` where the right operand
/// holds; `Since` is its past mirror.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MetricAtom {
    Truth,
    Falsehood,
    Rel(RelationalAtom),
    BoxPlus(Interval, Box<MetricAtom>),
    BoxMinus(Interval, Box<MetricAtom>),
    DiamondPlus(Interval, Box<MetricAtom>),
    DiamondMinus(Interval, Box<MetricAtom>),
    Until(Box<MetricAtom>, Interval, Box<MetricAtom>),
    Since(Box<MetricAtom>, Interval, Box<MetricAtom>),
}

impl MetricAtom {
    pub fn rel(atom: RelationalAtom) -> MetricAtom {
        MetricAtom::Rel(atom)
    }

    pub fn box_plus(window: Interval, inner: MetricAtom) -> MetricAtom {
        MetricAtom::BoxPlus(window, Box::new(inner))
    }

    pub fn box_minus(window: Interval, inner: MetricAtom) -> MetricAtom {
        MetricAtom::BoxMinus(window, Box::new(inner))
    }

    pub fn diamond_plus(window: Interval, inner: MetricAtom) -> MetricAtom {
        MetricAtom::DiamondPlus(window, Box::new(inner))
    }

    pub fn diamond_minus(window: Interval, inner: MetricAtom) -> MetricAtom {
        MetricAtom::DiamondMinus(window, Box::new(inner))
    }

    pub fn until(left: MetricAtom, window: Interval, right: MetricAtom) -> MetricAtom {
        MetricAtom::Until(Box::new(left), window, Box::new(right))
    }

    pub fn since(left: MetricAtom, window: Interval, right: MetricAtom) -> MetricAtom {
        MetricAtom::Since(Box::new(left), window, Box::new(right))
    }

    /// All relational atoms, in syntactic (left-to-right) order.
    pub fn relational_atoms(&self) -> Vec<&RelationalAtom> {
        let mut out = Vec::new();
        self.collect_relational(&mut out);
        out
    }

    fn collect_relational<'a>(&'a self, out: &mut Vec<&'a RelationalAtom>) {
        match self {
            MetricAtom::Truth | MetricAtom::Falsehood => {}
            MetricAtom::Rel(r) => out.push(r),
            MetricAtom::BoxPlus(_, m)
            | MetricAtom::BoxMinus(_, m)
            | MetricAtom::DiamondPlus(_, m)
            | MetricAtom::DiamondMinus(_, m) => m.collect_relational(out),
            MetricAtom::Until(l, _, r) | MetricAtom::Since(l, _, r) => {
                l.collect_relational(out);
                r.collect_relational(out);
            }
        }
    }

    /// Relational atoms in reasoning order: for `since`/`until` the right
    /// operand precedes the left, everywhere else syntactic order.
    pub fn relational_atoms_reasoning_order(&self) -> Vec<&RelationalAtom> {
        match self {
            MetricAtom::Until(l, _, r) | MetricAtom::Since(l, _, r) => {
                let mut out = r.relational_atoms();
                out.extend(l.relational_atoms());
                out
            }
            _ => self.relational_atoms(),
        }
    }

    pub fn variables(&self) -> BTreeSet<String> {
        self.relational_atoms()
            .into_iter()
            .flat_map(|r| r.variables().map(str::to_string).collect::<Vec<_>>())
            .collect()
    }

    pub fn is_ground(&self) -> bool {
        self.relational_atoms().iter().all(|r| r.is_ground())
    }

    pub fn substitute(&self, s: &Substitution) -> MetricAtom {
        match self {
            MetricAtom::Truth => MetricAtom::Truth,
            MetricAtom::Falsehood => MetricAtom::Falsehood,
            MetricAtom::Rel(r) => MetricAtom::Rel(r.substitute(s)),
            MetricAtom::BoxPlus(w, m) => MetricAtom::BoxPlus(w.clone(), Box::new(m.substitute(s))),
            MetricAtom::BoxMinus(w, m) => {
                MetricAtom::BoxMinus(w.clone(), Box::new(m.substitute(s)))
            }
            MetricAtom::DiamondPlus(w, m) => {
                MetricAtom::DiamondPlus(w.clone(), Box::new(m.substitute(s)))
            }
            MetricAtom::DiamondMinus(w, m) => {
                MetricAtom::DiamondMinus(w.clone(), Box::new(m.substitute(s)))
            }
            MetricAtom::Until(l, w, r) => {
                MetricAtom::Until(Box::new(l.substitute(s)), w.clone(), Box::new(r.substitute(s)))
            }
            MetricAtom::Since(l, w, r) => {
                MetricAtom::Since(Box::new(l.substitute(s)), w.clone(), Box::new(r.substitute(s)))
            }
        }
    }

    /// Nesting depth: 0 for leaves, operators add one to their deepest operand.
    pub fn depth(&self) -> usize {
        match self {
            MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => 0,
            MetricAtom::BoxPlus(_, m)
            | MetricAtom::BoxMinus(_, m)
            | MetricAtom::DiamondPlus(_, m)
            | MetricAtom::DiamondMinus(_, m) => 1 + m.depth(),
            MetricAtom::Until(l, _, r) | MetricAtom::Since(l, _, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// May this atom appear as a rule head? Heads allow relational atoms,
    /// truth, and (possibly nested) boxes — no `bot`, diamonds, or `since`/`until`.
    pub fn valid_head(&self) -> bool {
        match self {
            MetricAtom::Truth | MetricAtom::Rel(_) => true,
            MetricAtom::BoxPlus(_, m) | MetricAtom::BoxMinus(_, m) => m.valid_head(),
            _ => false,
        }
    }

    /// First operator window with a negative lower endpoint, if any.
    fn find_negative_window(&self) -> Option<&Interval> {
        let bad = |w: &Interval| match w.lower() {
            TimePoint::Finite(q) => q.is_negative(),
            TimePoint::NegInf => true,
            TimePoint::PosInf => false,
        };
        match self {
            MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => None,
            MetricAtom::BoxPlus(w, m)
            | MetricAtom::BoxMinus(w, m)
            | MetricAtom::DiamondPlus(w, m)
            | MetricAtom::DiamondMinus(w, m) => {
                if bad(w) {
                    Some(w)
                } else {
                    m.find_negative_window()
                }
            }
            MetricAtom::Until(l, w, r) | MetricAtom::Since(l, w, r) => {
                if bad(w) {
                    Some(w)
                } else {
                    l.find_negative_window().or_else(|| r.find_negative_window())
                }
            }
        }
    }
}

/// Is this window exactly the punctual `[0,0]`?
fn is_zero_window(w: &Interval) -> bool {
    w.is_punctual() && matches!(w.lower(), TimePoint::Finite(q) if q.is_zero())
}

fn fmt_operand(m: &MetricAtom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // `since`/`until` are non-associative: as operands they need parentheses.
    if matches!(m, MetricAtom::Until(..) | MetricAtom::Since(..)) {
        write!(f, "({m})")
    } else {
        write!(f, "{m}")
    }
}

impl fmt::Display for MetricAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricAtom::Truth => write!(f, "top"),
            MetricAtom::Falsehood => write!(f, "bot"),
            MetricAtom::Rel(r) => write!(f, "{r}"),
            MetricAtom::BoxPlus(w, m) => {
                write!(f, "boxplus{w} ")?;
                fmt_operand(m, f)
            }
            MetricAtom::BoxMinus(w, m) => {
                write!(f, "boxminus{w} ")?;
                fmt_operand(m, f)
            }
            MetricAtom::DiamondPlus(w, m) => {
                write!(f, "diamondplus{w} ")?;
                fmt_operand(m, f)
            }
            MetricAtom::DiamondMinus(w, m) => {
                write!(f, "diamondminus{w} ")?;
                fmt_operand(m, f)
            }
            MetricAtom::Until(l, w, r) => {
                fmt_operand(l, f)?;
                write!(f, " until{w} ")?;
                fmt_operand(r, f)
            }
            MetricAtom::Since(l, w, r) => {
                fmt_operand(l, f)?;
                write!(f, " since{w} ")?;
                fmt_operand(r, f)
            }
        }
    }
}

/// A safe rule: `head :- body` with a box-only head and every head variable
/// occurring in the body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: MetricAtom,
    pub body: Vec<MetricAtom>,
}

impl Rule {
    pub fn new(head: MetricAtom, body: Vec<MetricAtom>) -> Result<Rule, SyntaxError> {
        if body.is_empty() {
            return Err(SyntaxError::EmptyBody);
        }
        if !head.valid_head() {
            return Err(SyntaxError::InvalidHead);
        }
        if let Some(w) = head
            .find_negative_window()
            .into_iter()
            .chain(body.iter().filter_map(MetricAtom::find_negative_window))
            .next()
        {
            return Err(SyntaxError::NegativeWindow(w.clone()));
        }
        let body_vars: BTreeSet<String> = body.iter().flat_map(MetricAtom::variables).collect();
        for v in head.variables() {
            if !body_vars.contains(&v) {
                return Err(SyntaxError::UnsafeRule(v));
            }
        }
        Ok(Rule { head, body })
    }

    /// The relational atom in the head (absent only for truth heads).
    pub fn head_atom(&self) -> Option<&RelationalAtom> {
        fn peel(m: &MetricAtom) -> Option<&RelationalAtom> {
            match m {
                MetricAtom::Rel(r) => Some(r),
                MetricAtom::BoxPlus(_, inner) | MetricAtom::BoxMinus(_, inner) => peel(inner),
                _ => None,
            }
        }
        peel(&self.head)
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut vars = self.head.variables();
        for m in &self.body {
            vars.extend(m.variables());
        }
        vars
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut collect = |m: &MetricAtom| {
            for r in m.relational_atoms() {
                for t in &r.args {
                    if let Term::Constant(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
        };
        collect(&self.head);
        for m in &self.body {
            collect(m);
        }
        out
    }

    pub fn substitute(&self, s: &Substitution) -> Rule {
        Rule {
            head: self.head.substitute(s),
            body: self.body.iter().map(|m| m.substitute(s)).collect(),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, m) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ".")
    }
}

/// A finite set of rules, kept in insertion order for deterministic
/// processing. Structural duplicates are skipped on insert.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    rules: Vec<Rule>,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Program {
        let mut p = Program::default();
        for r in rules {
            p.push(r);
        }
        p
    }

    /// Adds a rule unless a structurally equal one is already present.
    pub fn push(&mut self, rule: Rule) -> bool {
        if self.rules.contains(&rule) {
            false
        } else {
            self.rules.push(rule);
            true
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// Set equality: same rules regardless of order.
    pub fn same_rules(&self, other: &Program) -> bool {
        self.rules.len() == other.rules.len() && self.rules.iter().all(|r| other.rules.contains(r))
    }

    /// Predicates occurring in some rule head.
    pub fn idb_predicates(&self) -> BTreeSet<Predicate> {
        self.rules.iter().filter_map(Rule::head_atom).map(|r| r.predicate.clone()).collect()
    }

    /// Predicates mentioned in the program but never in a head.
    pub fn edb_predicates(&self) -> BTreeSet<Predicate> {
        let idb = self.idb_predicates();
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            for m in std::iter::once(&rule.head).chain(rule.body.iter()) {
                for r in m.relational_atoms() {
                    if !idb.contains(&r.predicate) {
                        out.insert(r.predicate.clone());
                    }
                }
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.rules.iter().flat_map(|r| r.constants()).collect()
    }

    /// Largest index over existing `aux_<n>` predicates, to keep fresh names fresh.
    fn max_aux_index(&self) -> usize {
        let mut max = 0;
        for rule in &self.rules {
            for m in std::iter::once(&rule.head).chain(rule.body.iter()) {
                for r in m.relational_atoms() {
                    if let Some(rest) = r.predicate.name().strip_prefix(AUX_PREFIX) {
                        if let Ok(n) = rest.parse::<usize>() {
                            max = max.max(n);
                        }
                    }
                }
            }
        }
        max
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

/// A ground relational atom holding over an interval.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fact {
    pub atom: RelationalAtom,
    pub interval: Interval,
}

impl Fact {
    pub fn new(atom: RelationalAtom, interval: Interval) -> Result<Fact, SyntaxError> {
        if let Some(v) = atom.variables().next() {
            return Err(SyntaxError::NonGroundFact(v.to_string()));
        }
        Ok(Fact { atom, interval })
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.interval.is_punctual() {
            write!(f, "{}@{}", self.atom, self.interval.lower())
        } else {
            write!(f, "{}@{}", self.atom, self.interval)
        }
    }
}

/// A finite set of facts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    facts: Vec<Fact>,
}

impl Dataset {
    pub fn new(facts: Vec<Fact>) -> Dataset {
        let mut d = Dataset::default();
        for f in facts {
            d.push(f);
        }
        d
    }

    pub fn push(&mut self, fact: Fact) -> bool {
        if self.facts.contains(&fact) {
            false
        } else {
            self.facts.push(fact);
            true
        }
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.facts {
            for t in &f.atom.args {
                if let Term::Constant(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    /// Every fact interval bounded?
    pub fn is_bounded(&self) -> bool {
        self.facts.iter().all(|f| f.interval.is_bounded())
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}

/// A query: a possibly non-ground relational atom with an interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub atom: RelationalAtom,
    pub interval: Interval,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.interval.is_punctual() {
            write!(f, "{}@{}", self.atom, self.interval.lower())
        } else {
            write!(f, "{}@{}", self.atom, self.interval)
        }
    }
}

/// Is every interval mentioned by the program bounded? (Operator windows may
/// be unbounded only above; this checks full boundedness as used by the
/// rewriting pipeline's preconditions.)
pub fn program_is_bounded(p: &Program) -> bool {
    fn atom_bounded(m: &MetricAtom) -> bool {
        match m {
            MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => true,
            MetricAtom::BoxPlus(w, inner)
            | MetricAtom::BoxMinus(w, inner)
            | MetricAtom::DiamondPlus(w, inner)
            | MetricAtom::DiamondMinus(w, inner) => w.is_bounded() && atom_bounded(inner),
            MetricAtom::Until(l, w, r) | MetricAtom::Since(l, w, r) => {
                w.is_bounded() && atom_bounded(l) && atom_bounded(r)
            }
        }
    }
    p.rules().iter().all(|r| atom_bounded(&r.head) && r.body.iter().all(atom_bounded))
}

/// Normalisation: flattens nested operators and canonicalises heads.
///
/// After `normalize`:
/// - every head is exactly `boxplus[w] R(t)` or `boxminus[w] R(t)` (a bare
///   head `R(t)` becomes `boxplus[0,0] R(t)`);
/// - every body metric atom has depth at most one, i.e. operators apply
///   directly to relational atoms (or to `top`/`bot`, which stay as leaves
///   of `since`/`until`);
/// - rules with truth heads (which can derive nothing new) are dropped;
/// - operators applied directly to `top`/`bot` are simplified away.
///
/// Fresh subformulas are carried by `aux_<n>` predicates over exactly the
/// variables of the subformula they replace, so entailment over the original
/// predicates is preserved.
pub fn normalize(p: &Program) -> Program {
    let mut counter = p.max_aux_index();
    let mut out = Program::default();
    for rule in p.rules() {
        let mut extras = Vec::new();
        let Some(head) = normalize_head(&rule.head, &mut counter, &mut extras) else {
            continue; // truth head: the rule derives nothing
        };
        let body =
            rule.body.iter().map(|m| normalize_body_atom(m, &mut counter, &mut extras)).collect();
        out.push(Rule { head, body });
        for extra in extras {
            out.push(extra);
        }
    }
    out
}

/// Rewrites a head into the canonical single-box form, emitting helper rules
/// for nested boxes. Returns `None` for truth heads.
fn normalize_head(
    head: &MetricAtom,
    counter: &mut usize,
    extras: &mut Vec<Rule>,
) -> Option<MetricAtom> {
    match head {
        MetricAtom::Truth => None,
        MetricAtom::Rel(r) => Some(MetricAtom::box_plus(zero_window(), MetricAtom::Rel(r.clone()))),
        MetricAtom::BoxPlus(w, inner) | MetricAtom::BoxMinus(w, inner) => {
            let make = |inner_atom: MetricAtom| match head {
                MetricAtom::BoxPlus(..) => MetricAtom::BoxPlus(w.clone(), Box::new(inner_atom)),
                _ => MetricAtom::BoxMinus(w.clone(), Box::new(inner_atom)),
            };
            match inner.as_ref() {
                MetricAtom::Truth => None,
                MetricAtom::Rel(r) => Some(make(MetricAtom::Rel(r.clone()))),
                nested @ (MetricAtom::BoxPlus(..) | MetricAtom::BoxMinus(..)) => {
                    // box[w] (box[w'] R)  ~>  box[w] aux  plus  box[w'] R :- aux.
                    let aux = fresh_aux(nested, counter);
                    let inner_head = normalize_head(nested, counter, extras)?;
                    extras
                        .push(Rule { head: inner_head, body: vec![MetricAtom::Rel(aux.clone())] });
                    Some(make(MetricAtom::Rel(aux)))
                }
                // Falsehood/diamond/until/since heads are rejected by Rule::new.
                _ => unreachable!("invalid head survived rule validation"),
            }
        }
        _ => unreachable!("invalid head survived rule validation"),
    }
}

/// Flattens one body atom to depth <= 1, emitting helper rules for nested
/// subformulas, and simplifies operators applied to `top`/`bot`.
fn normalize_body_atom(m: &MetricAtom, counter: &mut usize, extras: &mut Vec<Rule>) -> MetricAtom {
    match m {
        MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => m.clone(),
        MetricAtom::BoxPlus(w, inner)
        | MetricAtom::BoxMinus(w, inner)
        | MetricAtom::DiamondPlus(w, inner)
        | MetricAtom::DiamondMinus(w, inner) => {
            let rebuild = |leaf: MetricAtom| match m {
                MetricAtom::BoxPlus(..) => MetricAtom::BoxPlus(w.clone(), Box::new(leaf)),
                MetricAtom::BoxMinus(..) => MetricAtom::BoxMinus(w.clone(), Box::new(leaf)),
                MetricAtom::DiamondPlus(..) => MetricAtom::DiamondPlus(w.clone(), Box::new(leaf)),
                _ => MetricAtom::DiamondMinus(w.clone(), Box::new(leaf)),
            };
            match inner.as_ref() {
                // An operator over truth/falsehood is truth/falsehood: the
                // windows are non-empty, so universal and existential
                // quantification over them agree on constants.
                MetricAtom::Truth => MetricAtom::Truth,
                MetricAtom::Falsehood => MetricAtom::Falsehood,
                MetricAtom::Rel(_) => rebuild(inner.as_ref().clone()),
                nested => rebuild(MetricAtom::Rel(extract_aux(nested, counter, extras))),
            }
        }
        MetricAtom::Until(l, w, r) => {
            let l = flatten_operand(l, counter, extras);
            let r = flatten_operand(r, counter, extras);
            match r {
                // nothing to reach: `l until[w] bot` never holds
                MetricAtom::Falsehood => MetricAtom::Falsehood,
                r => MetricAtom::Until(Box::new(l), w.clone(), Box::new(r)),
            }
        }
        MetricAtom::Since(l, w, r) => {
            let l = flatten_operand(l, counter, extras);
            let r = flatten_operand(r, counter, extras);
            match r {
                MetricAtom::Falsehood => MetricAtom::Falsehood,
                r => MetricAtom::Since(Box::new(l), w.clone(), Box::new(r)),
            }
        }
    }
}

/// `since`/`until` operands must be leaves; deeper operands move behind a
/// fresh auxiliary predicate.
fn flatten_operand(
    operand: &MetricAtom,
    counter: &mut usize,
    extras: &mut Vec<Rule>,
) -> MetricAtom {
    match operand {
        MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => operand.clone(),
        nested => MetricAtom::Rel(extract_aux(nested, counter, extras)),
    }
}

/// Replaces a nested subformula with a fresh `aux_<n>(vars)` atom defined by
/// `boxplus[0,0] aux_<n>(vars) :- <subformula>`.
fn extract_aux(nested: &MetricAtom, counter: &mut usize, extras: &mut Vec<Rule>) -> RelationalAtom {
    let aux = fresh_aux(nested, counter);
    let body_atom = normalize_body_atom(nested, counter, extras);
    extras.push(Rule {
        head: MetricAtom::box_plus(zero_window(), MetricAtom::Rel(aux.clone())),
        body: vec![body_atom],
    });
    aux
}

fn fresh_aux(for_atom: &MetricAtom, counter: &mut usize) -> RelationalAtom {
    *counter += 1;
    let vars: Vec<Term> = for_atom.variables().into_iter().map(Term::Variable).collect();
    RelationalAtom::make(&format!("{AUX_PREFIX}{counter}"), vars)
}

/// The punctual window `[0,0]`.
pub fn zero_window() -> Interval {
    Interval::point(TimePoint::integer(0))
}

/// Removes `[0,0]`-window operators everywhere (inverse of the head
/// canonicalisation, used for display and for comparing against Datalog-style
/// golden programs).
pub fn strip_zero_ops(p: &Program) -> Program {
    fn strip(m: &MetricAtom) -> MetricAtom {
        match m {
            MetricAtom::Truth | MetricAtom::Falsehood | MetricAtom::Rel(_) => m.clone(),
            MetricAtom::BoxPlus(w, inner) | MetricAtom::BoxMinus(w, inner) if is_zero_window(w) => {
                strip(inner)
            }
            MetricAtom::DiamondPlus(w, inner) | MetricAtom::DiamondMinus(w, inner)
                if is_zero_window(w) =>
            {
                strip(inner)
            }
            MetricAtom::BoxPlus(w, inner) => MetricAtom::BoxPlus(w.clone(), Box::new(strip(inner))),
            MetricAtom::BoxMinus(w, inner) => {
                MetricAtom::BoxMinus(w.clone(), Box::new(strip(inner)))
            }
            MetricAtom::DiamondPlus(w, inner) => {
                MetricAtom::DiamondPlus(w.clone(), Box::new(strip(inner)))
            }
            MetricAtom::DiamondMinus(w, inner) => {
                MetricAtom::DiamondMinus(w.clone(), Box::new(strip(inner)))
            }
            MetricAtom::Until(l, w, r) => {
                MetricAtom::Until(Box::new(strip(l)), w.clone(), Box::new(strip(r)))
            }
            MetricAtom::Since(l, w, r) => {
                MetricAtom::Since(Box::new(strip(l)), w.clone(), Box::new(strip(r)))
            }
        }
    }
    Program::new(
        p.rules()
            .iter()
            .map(|r| Rule { head: strip(&r.head), body: r.body.iter().map(strip).collect() })
            .collect(),
    )
}

/// All ground instances of a rule over the given constants: one rule per
/// total substitution of the rule's variables.
pub fn ground_instances(rule: &Rule, constants: &BTreeSet<String>) -> Vec<Rule> {
    let vars: Vec<String> = rule.variables().into_iter().collect();
    if vars.is_empty() {
        return vec![rule.clone()];
    }
    let consts: Vec<&String> = constants.iter().collect();
    let mut out = Vec::new();
    let mut assignment = vec![0usize; vars.len()];
    if consts.is_empty() {
        return out;
    }
    loop {
        let sub = Substitution::from_pairs(
            vars.iter().zip(assignment.iter()).map(|(v, &i)| (v.clone(), consts[i].clone())),
        );
        out.push(rule.substitute(&sub));
        // Advance the mixed-radix counter.
        let mut pos = 0;
        loop {
            if pos == vars.len() {
                return out;
            }
            assignment[pos] += 1;
            if assignment[pos] < consts.len() {
                break;
            }
            assignment[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule1() -> Rule {
        // boxplus[0,2] P(X) :- I(X,Y), P(Y).
        Rule::new(
            MetricAtom::box_plus(
                Interval::closed_int(0, 2),
                MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("X")])),
            ),
            vec![
                MetricAtom::Rel(RelationalAtom::make("I", vec![Term::var("X"), Term::var("Y")])),
                MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("Y")])),
            ],
        )
        .unwrap()
    }

    #[test]
    fn idb_edb_partition() {
        let p = Program::new(vec![rule1()]);
        let idb: Vec<String> = p.idb_predicates().iter().map(|q| q.name().to_string()).collect();
        let edb: Vec<String> = p.edb_predicates().iter().map(|q| q.name().to_string()).collect();
        assert_eq!(idb, ["P"]);
        assert_eq!(edb, ["I"]);

        assert!(Program::default().idb_predicates().is_empty());

        // P :- P has idb {P}, edb {}.
        let selfrule = Rule::new(
            MetricAtom::Rel(RelationalAtom::make("P", vec![Term::constant("a")])),
            vec![MetricAtom::Rel(RelationalAtom::make("P", vec![Term::constant("a")]))],
        )
        .unwrap();
        let p = Program::new(vec![selfrule]);
        assert_eq!(p.idb_predicates().len(), 1);
        assert!(p.edb_predicates().is_empty());
    }

    #[test]
    fn safety_is_enforced() {
        let err = Rule::new(
            MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("X")])),
            vec![MetricAtom::Rel(RelationalAtom::make("Q", vec![Term::var("Y")]))],
        )
        .unwrap_err();
        assert_eq!(err, SyntaxError::UnsafeRule("X".into()));
    }

    #[test]
    fn head_shapes_are_checked() {
        let bad = Rule::new(
            MetricAtom::diamond_plus(
                Interval::closed_int(0, 1),
                MetricAtom::Rel(RelationalAtom::make("P", vec![])),
            ),
            vec![MetricAtom::Truth],
        );
        assert_eq!(bad.unwrap_err(), SyntaxError::InvalidHead);
    }

    #[test]
    fn normalize_bare_head_gets_zero_box() {
        let r = Rule::new(
            MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("X")])),
            vec![MetricAtom::Rel(RelationalAtom::make("Q", vec![Term::var("X")]))],
        )
        .unwrap();
        let n = normalize(&Program::new(vec![r]));
        assert_eq!(n.rules().len(), 1);
        assert_eq!(n.rules()[0].to_string(), "boxplus[0,0] P(X) :- Q(X).");
    }

    #[test]
    fn normalize_flat_body_unchanged() {
        let r = Rule::new(
            MetricAtom::box_plus(
                Interval::closed_int(0, 1),
                MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("X")])),
            ),
            vec![MetricAtom::diamond_minus(
                Interval::closed_int(0, 1),
                MetricAtom::Rel(RelationalAtom::make("Q", vec![Term::var("X")])),
            )],
        )
        .unwrap();
        let p = Program::new(vec![r.clone()]);
        assert_eq!(normalize(&p), p);
    }

    #[test]
    fn normalize_flattens_nested_body() {
        // boxplus[0,1] diamondminus[0,2] P(Y) gets an auxiliary.
        let r = Rule::new(
            MetricAtom::box_plus(
                Interval::closed_int(0, 3),
                MetricAtom::Rel(RelationalAtom::make("R", vec![Term::var("Y")])),
            ),
            vec![MetricAtom::box_plus(
                Interval::closed_int(0, 1),
                MetricAtom::diamond_minus(
                    Interval::closed_int(0, 2),
                    MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("Y")])),
                ),
            )],
        )
        .unwrap();
        let n = normalize(&Program::new(vec![r]));
        assert_eq!(n.rules().len(), 2);
        assert_eq!(n.rules()[0].to_string(), "boxplus[0,3] R(Y) :- boxplus[0,1] aux_1(Y).");
        assert_eq!(n.rules()[1].to_string(), "boxplus[0,0] aux_1(Y) :- diamondminus[0,2] P(Y).");
        // Idempotent up to auxiliary naming: already-flat programs are fixed.
        assert_eq!(normalize(&n), n);
    }

    #[test]
    fn normalize_simplifies_constant_operands() {
        let r = Rule::new(
            MetricAtom::Rel(RelationalAtom::make("P", vec![])),
            vec![
                MetricAtom::box_plus(Interval::closed_int(0, 1), MetricAtom::Truth),
                MetricAtom::diamond_minus(Interval::closed_int(0, 1), MetricAtom::Falsehood),
            ],
        )
        .unwrap();
        let n = normalize(&Program::new(vec![r]));
        assert_eq!(n.rules()[0].to_string(), "boxplus[0,0] P :- top, bot.");
    }

    #[test]
    fn ground_instance_counts() {
        let mut constants = BTreeSet::new();
        constants.insert("a".to_string());
        assert_eq!(ground_instances(&rule1(), &constants).len(), 1);
        constants.insert("b".to_string());
        assert_eq!(ground_instances(&rule1(), &constants).len(), 4);

        let ground = Rule::new(
            MetricAtom::Rel(RelationalAtom::make("P", vec![Term::constant("a")])),
            vec![MetricAtom::Rel(RelationalAtom::make("Q", vec![Term::constant("a")]))],
        )
        .unwrap();
        assert_eq!(ground_instances(&ground, &constants), vec![ground]);
    }

    #[test]
    fn strip_zero_ops_inverts_head_boxes() {
        let r = Rule::new(
            MetricAtom::Rel(RelationalAtom::make("P", vec![Term::var("X")])),
            vec![MetricAtom::Rel(RelationalAtom::make("Q", vec![Term::var("X")]))],
        )
        .unwrap();
        let p = Program::new(vec![r]);
        assert_eq!(strip_zero_ops(&normalize(&p)), p);
    }

    #[test]
    fn magic_predicate_naming_is_injective() {
        use crate::magic::Adornment;
        // Bases that collide under naive concatenation stay distinct because
        // the adornment is the suffix after the last underscore.
        let a = Predicate::magic("P_b", &Adornment::parse("f").unwrap());
        let b = Predicate::magic("P", &Adornment::parse("bf").unwrap());
        assert_ne!(a.name(), b.name());
        assert_eq!(a.name(), "m_P_b_f");
        assert_eq!(b.name(), "m_P_bf");
        // Enumerate all adornments up to arity 4 for a few bases: no collisions.
        let mut seen = std::collections::HashSet::new();
        for base in ["P", "P_b", "Q"] {
            for arity in 0..=4usize {
                for bits in 0..(1u32 << arity) {
                    let letters: String =
                        (0..arity).map(|i| if bits >> i & 1 == 1 { 'b' } else { 'f' }).collect();
                    let adornment = Adornment::parse(&letters).unwrap();
                    assert!(seen.insert(Predicate::magic(base, &adornment).name().to_string()));
                }
            }
        }
    }
}
