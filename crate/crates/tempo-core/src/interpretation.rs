//! The materialisation store: a finite interpretation mapping ground
//! relational atoms to the canonical interval sets where they hold.

use std::collections::BTreeMap;
use std::fmt;

use crate::syntax::{Dataset, Fact, Predicate, RelationalAtom, Term};
use crate::temporal::{Interval, IntervalSet};

/// One diagnostic entry: which round first produced an interval of an atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundTag {
    pub atom: RelationalAtom,
    pub interval: Interval,
    pub round: usize,
}

/// A finite representation of an interpretation.
///
/// Invariants: every stored interval set is non-empty and canonical; looking
/// up an absent atom yields the empty set. Equality is structural equality
/// of the canonical tables. The optional round log records, per insertion
/// that changed the store, the materialisation round responsible — pure
/// diagnostics, never consulted by evaluation.
#[derive(Debug, Clone, Default)]
pub struct Interpretation {
    table: BTreeMap<RelationalAtom, IntervalSet>,
    empty: IntervalSet,
    round_log: Option<Vec<RoundTag>>,
    current_round: usize,
}

impl PartialEq for Interpretation {
    fn eq(&self, other: &Self) -> bool {
        self.table == other.table
    }
}

impl Eq for Interpretation {}

impl Interpretation {
    pub fn new() -> Interpretation {
        Interpretation::default()
    }

    /// The unique least interpretation satisfying every fact of the dataset.
    pub fn least_model_of(dataset: &Dataset) -> Interpretation {
        let mut store = Interpretation::new();
        for fact in dataset.facts() {
            store.add_fact(fact);
        }
        store
    }

    /// Switches on the per-insertion round log (used by `--stats` runs).
    pub fn enable_round_log(&mut self) {
        if self.round_log.is_none() {
            self.round_log = Some(Vec::new());
        }
    }

    pub fn round_log(&self) -> Option<&[RoundTag]> {
        self.round_log.as_deref()
    }

    /// Tags subsequent insertions with the given materialisation round.
    pub fn set_current_round(&mut self, round: usize) {
        self.current_round = round;
    }

    /// Where does this ground atom hold? Absent atoms hold nowhere.
    pub fn get(&self, atom: &RelationalAtom) -> &IntervalSet {
        self.table.get(atom).unwrap_or(&self.empty)
    }

    /// Does the store satisfy `fact`, i.e. is its interval fully covered?
    pub fn satisfies_fact(&self, fact: &Fact) -> bool {
        self.get(&fact.atom).covers(&fact.interval)
    }

    /// Extends the store to satisfy `fact`. Returns `false` when the fact
    /// was already satisfied (no change).
    pub fn add_fact(&mut self, fact: &Fact) -> bool {
        self.add_atom_interval(&fact.atom, fact.interval.clone())
    }

    /// As [`Interpretation::add_fact`], without requiring a `Fact` value.
    pub fn add_atom_interval(&mut self, atom: &RelationalAtom, interval: Interval) -> bool {
        let set = self.table.entry(atom.clone()).or_default();
        let changed = set.insert(interval.clone());
        if changed {
            if let Some(log) = &mut self.round_log {
                log.push(RoundTag { atom: atom.clone(), interval, round: self.current_round });
            }
        }
        changed
    }

    /// Containment: does `other` satisfy every fact this store does?
    pub fn contained_in(&self, other: &Interpretation) -> bool {
        self.table.iter().all(|(atom, set)| set.subset_of(other.get(atom)))
    }

    /// Ground atoms with a non-empty interval set, in canonical order.
    pub fn atoms(&self) -> impl Iterator<Item = (&RelationalAtom, &IntervalSet)> {
        self.table.iter()
    }

    /// Stored atoms over one predicate, in canonical order.
    ///
    /// Keys sort by predicate first and variables order before constants, so
    /// an all-variable atom is a lower bound for the predicate's key range.
    pub fn atoms_with_predicate<'a>(
        &'a self,
        predicate: &Predicate,
    ) -> impl Iterator<Item = (&'a RelationalAtom, &'a IntervalSet)> {
        let floor = RelationalAtom {
            predicate: predicate.clone(),
            args: vec![Term::Variable(String::new()); predicate.arity()],
        };
        let predicate = predicate.clone();
        self.table.range(floor..).take_while(move |(atom, _)| atom.predicate == predicate)
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Number of (atom, maximal interval) entries across the table.
    pub fn entry_count(&self) -> usize {
        self.table.values().map(IntervalSet::len).sum()
    }

    /// Entry counts grouped by predicate name.
    pub fn counts_by_predicate(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for (atom, set) in &self.table {
            *out.entry(atom.predicate.name().to_string()).or_insert(0) += set.len();
        }
        out
    }

    /// All constants mentioned by stored atoms.
    pub fn constants(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        for atom in self.table.keys() {
            for t in &atom.args {
                if let crate::syntax::Term::Constant(c) = t {
                    out.insert(c.clone());
                }
            }
        }
        out
    }
}

/// Dump format: one `Atom@Interval` line per maximal interval, atoms in
/// lexicographic order, intervals ascending — identical to the dataset text
/// format, so dumps can be re-loaded.
impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (atom, set) in &self.table {
            for interval in set.members() {
                let fact = Fact { atom: atom.clone(), interval: interval.clone() };
                writeln!(f, "{fact}")?;
            }
        }
        Ok(())
    }
}
