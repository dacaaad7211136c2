//! Exact arithmetic over rational time points and the interval algebra used
//! throughout the engine.
//!
//! The timeline is the rational numbers extended with the two symbolic
//! extremes `-inf` and `+inf`. Intervals carry open/closed flags on both
//! endpoints; empty intervals are unrepresentable (the constructor refuses
//! them), and operations that can produce emptiness return an `Option`.
//! [`IntervalSet`] is the canonical representation of a union of intervals:
//! sorted, pairwise disjoint, and non-mergeable.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

/// A point on the extended rational timeline: `-inf`, a finite rational, or `+inf`.
///
/// Finite values are exact rationals kept in lowest terms (guaranteed by
/// `BigRational`), so structural equality coincides with numeric equality.
/// The derived order puts `-inf` below every finite value and `+inf` above.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimePoint {
    NegInf,
    Finite(BigRational),
    PosInf,
}

impl TimePoint {
    /// A finite point from an integer.
    pub fn integer(n: i64) -> Self {
        TimePoint::Finite(BigRational::from_integer(BigInt::from(n)))
    }

    /// A finite point from a numerator/denominator pair. Panics if `den` is zero.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "time point denominator must be non-zero");
        TimePoint::Finite(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TimePoint::Finite(_))
    }

    /// The finite rational value, if any.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            TimePoint::Finite(q) => Some(q),
            _ => None,
        }
    }

    /// Extended addition. Panics on the indeterminate form `-inf + +inf`;
    /// callers in this crate guard against that combination.
    pub fn plus(&self, other: &TimePoint) -> TimePoint {
        use TimePoint::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (NegInf, PosInf) | (PosInf, NegInf) => {
                panic!("indeterminate sum of opposite infinities")
            }
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
        }
    }

    /// Extended negation.
    pub fn negated(&self) -> TimePoint {
        match self {
            TimePoint::NegInf => TimePoint::PosInf,
            TimePoint::Finite(q) => TimePoint::Finite(-q),
            TimePoint::PosInf => TimePoint::NegInf,
        }
    }

    /// Extended subtraction; same caveat as [`TimePoint::plus`].
    pub fn minus(&self, other: &TimePoint) -> TimePoint {
        self.plus(&other.negated())
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::NegInf => write!(f, "-inf"),
            TimePoint::PosInf => write!(f, "+inf"),
            TimePoint::Finite(q) => {
                if q.denom().is_one() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
        }
    }
}

/// Endpoint-of-interval comparison helpers. A bound is a point plus a
/// closedness flag; lower and upper bounds order differently when the points
/// tie, so the two sides get separate comparison functions.
fn lower_bound_cmp(a: (&TimePoint, bool), b: (&TimePoint, bool)) -> Ordering {
    // A closed lower bound reaches further down than an open one at the same point.
    a.0.cmp(b.0).then_with(|| b.1.cmp(&a.1))
}

fn upper_bound_cmp(a: (&TimePoint, bool), b: (&TimePoint, bool)) -> Ordering {
    // A closed upper bound reaches further up than an open one at the same point.
    a.0.cmp(b.0).then_with(|| a.1.cmp(&b.1))
}

/// A non-empty interval of time points with open/closed endpoint flags.
///
/// Invariants established by the constructor:
/// - `lower <= upper`, and if they are equal the interval is punctual (both
///   flags closed, both endpoints finite);
/// - an infinite endpoint is never closed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    lower: TimePoint,
    upper: TimePoint,
    lower_closed: bool,
    upper_closed: bool,
}

impl Interval {
    /// Builds an interval, normalising infinite endpoints to open, or returns
    /// `None` when the requested set of points would be empty.
    pub fn new(
        lower: TimePoint,
        lower_closed: bool,
        upper: TimePoint,
        upper_closed: bool,
    ) -> Option<Interval> {
        let lower_closed = lower_closed && lower.is_finite();
        let upper_closed = upper_closed && upper.is_finite();
        match lower.cmp(&upper) {
            Ordering::Greater => None,
            Ordering::Equal => {
                if lower_closed && upper_closed {
                    Some(Interval { lower, upper, lower_closed, upper_closed })
                } else {
                    // Includes the degenerate infinite cases: [-inf,-inf] etc.
                    None
                }
            }
            Ordering::Less => Some(Interval { lower, upper, lower_closed, upper_closed }),
        }
    }

    /// The punctual interval `[t,t]`. Panics if `t` is not finite.
    pub fn point(t: TimePoint) -> Interval {
        assert!(t.is_finite(), "punctual interval requires a finite point");
        Interval { lower: t.clone(), upper: t, lower_closed: true, upper_closed: true }
    }

    /// Closed interval between two integers.
    pub fn closed_int(lo: i64, hi: i64) -> Interval {
        Interval::new(TimePoint::integer(lo), true, TimePoint::integer(hi), true)
            .expect("closed_int requires lo <= hi")
    }

    /// The whole timeline `(-inf,+inf)`.
    pub fn unbounded() -> Interval {
        Interval {
            lower: TimePoint::NegInf,
            upper: TimePoint::PosInf,
            lower_closed: false,
            upper_closed: false,
        }
    }

    pub fn lower(&self) -> &TimePoint {
        &self.lower
    }

    pub fn upper(&self) -> &TimePoint {
        &self.upper
    }

    pub fn lower_closed(&self) -> bool {
        self.lower_closed
    }

    pub fn upper_closed(&self) -> bool {
        self.upper_closed
    }

    /// Infimum of the interval as a time point (`-inf` when unbounded below).
    pub fn infimum(&self) -> &TimePoint {
        &self.lower
    }

    /// Supremum of the interval as a time point (`+inf` when unbounded above).
    pub fn supremum(&self) -> &TimePoint {
        &self.upper
    }

    /// `[t,t]` for a single point?
    pub fn is_punctual(&self) -> bool {
        self.lower == self.upper
    }

    /// Both endpoints finite rationals?
    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    /// Is this exactly `(-inf,+inf)`?
    pub fn is_whole_line(&self) -> bool {
        self.lower == TimePoint::NegInf && self.upper == TimePoint::PosInf
    }

    /// Does the interval contain a finite point `t`?
    pub fn member(&self, t: &TimePoint) -> bool {
        debug_assert!(t.is_finite(), "membership is only defined for finite points");
        let above_lower = match t.cmp(&self.lower) {
            Ordering::Greater => true,
            Ordering::Equal => self.lower_closed,
            Ordering::Less => false,
        };
        let below_upper = match t.cmp(&self.upper) {
            Ordering::Less => true,
            Ordering::Equal => self.upper_closed,
            Ordering::Greater => false,
        };
        above_lower && below_upper
    }

    /// Set inclusion: does `self` contain every point of `other`?
    pub fn superset_of(&self, other: &Interval) -> bool {
        lower_bound_cmp((&self.lower, self.lower_closed), (&other.lower, other.lower_closed))
            != Ordering::Greater
            && upper_bound_cmp((&self.upper, self.upper_closed), (&other.upper, other.upper_closed))
                != Ordering::Less
    }

    /// Set intersection; `None` when the intervals do not overlap.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (lower, lower_closed) = match lower_bound_cmp(
            (&self.lower, self.lower_closed),
            (&other.lower, other.lower_closed),
        ) {
            Ordering::Less => (other.lower.clone(), other.lower_closed),
            _ => (self.lower.clone(), self.lower_closed),
        };
        let (upper, upper_closed) = match upper_bound_cmp(
            (&self.upper, self.upper_closed),
            (&other.upper, other.upper_closed),
        ) {
            Ordering::Greater => (other.upper.clone(), other.upper_closed),
            _ => (self.upper.clone(), self.upper_closed),
        };
        Interval::new(lower, lower_closed, upper, upper_closed)
    }

    /// The reflection `{-x | x in self}`.
    pub fn negated(&self) -> Interval {
        Interval {
            lower: self.upper.negated(),
            upper: self.lower.negated(),
            lower_closed: self.upper_closed,
            upper_closed: self.lower_closed,
        }
    }

    /// Minkowski sum `{x + y | x in self, y in other}`. An endpoint of the
    /// sum is closed iff both contributing endpoints are closed; infinite
    /// endpoints stay open. Never empty for non-empty inputs.
    pub fn minkowski_sum(&self, other: &Interval) -> Interval {
        // lower + lower and upper + upper can never pair opposite infinities:
        // a lower endpoint is never +inf and an upper endpoint is never -inf.
        Interval::new(
            self.lower.plus(&other.lower),
            self.lower_closed && other.lower_closed,
            self.upper.plus(&other.upper),
            self.upper_closed && other.upper_closed,
        )
        .expect("Minkowski sum of non-empty intervals is non-empty")
    }

    /// Minkowski difference `{x - y | x in self, y in other}`.
    pub fn minkowski_diff(&self, other: &Interval) -> Interval {
        self.minkowski_sum(&other.negated())
    }

    /// Erosion `{t | t + by ⊆ self}`: the points from which the whole window
    /// `by` lands inside `self`. `None` when `self` is too short.
    pub fn erode(&self, by: &Interval) -> Option<Interval> {
        // Upper side: every t + s with s up to by.upper must stay inside.
        // An infinite by.upper demands an infinite self.upper; the mirrored
        // statement holds on the lower side.
        if !by.lower.is_finite() && self.lower.is_finite() {
            return None;
        }
        if !by.upper.is_finite() && self.upper.is_finite() {
            return None;
        }
        let (lower, lower_closed) = if self.lower.is_finite() {
            // t >= self.lower - by.lower, with equality permitted unless the
            // window actually attains its lower endpoint outside a closed edge.
            (self.lower.minus(&by.lower), self.lower_closed || !by.lower_closed)
        } else {
            (TimePoint::NegInf, false)
        };
        let (upper, upper_closed) = if self.upper.is_finite() {
            (self.upper.minus(&by.upper), self.upper_closed || !by.upper_closed)
        } else {
            (TimePoint::PosInf, false)
        };
        Interval::new(lower, lower_closed, upper, upper_closed)
    }

    /// The appendix-style connective joining two intervals: the closed hull
    /// of `B = a ∪ b` minus those hull endpoints that belong to `B`.
    /// `None` when the result would be empty (e.g. both inputs the same
    /// punctual interval).
    pub fn link(a: &Interval, b: &Interval) -> Option<Interval> {
        let (lower, in_b_lower) = match a.lower.cmp(&b.lower) {
            Ordering::Less => (&a.lower, a.lower_closed),
            Ordering::Greater => (&b.lower, b.lower_closed),
            Ordering::Equal => (&a.lower, a.lower_closed || b.lower_closed),
        };
        let (upper, in_b_upper) = match a.upper.cmp(&b.upper) {
            Ordering::Greater => (&a.upper, a.upper_closed),
            Ordering::Less => (&b.upper, b.upper_closed),
            Ordering::Equal => (&a.upper, a.upper_closed || b.upper_closed),
        };
        // Hull endpoint survives (stays closed) exactly when it is not in B.
        Interval::new(lower.clone(), !in_b_lower, upper.clone(), !in_b_upper)
    }

    /// Would `self ∪ other` itself be an interval? True on overlap or exact
    /// adjacency (`[1,2]` and `(2,3]`, but not `[1,2)` and `(2,3]`).
    pub fn mergeable(&self, other: &Interval) -> bool {
        if self.intersect(other).is_some() {
            return true;
        }
        (self.upper == other.lower && (self.upper_closed || other.lower_closed))
            || (other.upper == self.lower && (other.upper_closed || self.lower_closed))
    }

    /// Hull of two mergeable intervals.
    fn merge(&self, other: &Interval) -> Interval {
        debug_assert!(self.mergeable(other));
        let (lower, lower_closed) = match lower_bound_cmp(
            (&self.lower, self.lower_closed),
            (&other.lower, other.lower_closed),
        ) {
            Ordering::Greater => (other.lower.clone(), other.lower_closed),
            _ => (self.lower.clone(), self.lower_closed),
        };
        let (upper, upper_closed) = match upper_bound_cmp(
            (&self.upper, self.upper_closed),
            (&other.upper, other.upper_closed),
        ) {
            Ordering::Less => (other.upper.clone(), other.upper_closed),
            _ => (self.upper.clone(), self.upper_closed),
        };
        Interval { lower, upper, lower_closed, upper_closed }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lower_closed { '[' } else { '(' },
            self.lower,
            self.upper,
            if self.upper_closed { ']' } else { ')' },
        )
    }
}

/// A canonical finite union of intervals: sorted ascending by lower bound,
/// pairwise disjoint, and non-mergeable. The empty union is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> IntervalSet {
        IntervalSet { intervals: Vec::new() }
    }

    /// The canonical set equal to the union of the inputs.
    pub fn coalesce(mut items: Vec<Interval>) -> IntervalSet {
        items.sort_by(|a, b| {
            lower_bound_cmp((&a.lower, a.lower_closed), (&b.lower, b.lower_closed))
        });
        let mut out: Vec<Interval> = Vec::with_capacity(items.len());
        for item in items {
            match out.last_mut() {
                Some(last) if last.mergeable(&item) => {
                    *last = last.merge(&item);
                }
                _ => out.push(item),
            }
        }
        IntervalSet { intervals: out }
    }

    pub fn singleton(interval: Interval) -> IntervalSet {
        IntervalSet { intervals: vec![interval] }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn members(&self) -> &[Interval] {
        &self.intervals
    }

    /// Does some member contain the finite point `t`?
    pub fn contains_point(&self, t: &TimePoint) -> bool {
        // Binary search on lower endpoints: the only candidate member is the
        // last one whose lower bound does not exceed t.
        let idx = self.intervals.partition_point(|iv| iv.lower() <= t);
        idx > 0 && self.intervals[idx - 1].member(t)
            || idx < self.intervals.len() && self.intervals[idx].member(t)
    }

    /// Is `target` covered by the union? Because members are coalesced, a
    /// single member must contain it entirely.
    pub fn covers(&self, target: &Interval) -> bool {
        let idx = self.intervals.partition_point(|iv| {
            lower_bound_cmp((&iv.lower, iv.lower_closed), (&target.lower, target.lower_closed))
                != Ordering::Greater
        });
        idx > 0 && self.intervals[idx - 1].superset_of(target)
    }

    /// Adds one interval, keeping the representation canonical. Returns
    /// `false` when the interval was already covered (no change).
    pub fn insert(&mut self, interval: Interval) -> bool {
        if self.covers(&interval) {
            return false;
        }
        // Splice: find the run of members mergeable with the newcomer, merge
        // them all, and replace the run.
        // A member strictly precedes the newcomer iff the two are disjoint,
        // non-adjacent, and the member starts first. Non-mergeable already
        // implies the first two, so comparing lower bounds suffices and the
        // predicate is monotone over the sorted members.
        let start = self.intervals.partition_point(|iv| {
            !iv.mergeable(&interval)
                && lower_bound_cmp(
                    (&iv.lower, iv.lower_closed),
                    (&interval.lower, interval.lower_closed),
                ) == Ordering::Less
        });
        let mut merged = interval;
        let mut end = start;
        while end < self.intervals.len() && self.intervals[end].mergeable(&merged) {
            merged = merged.merge(&self.intervals[end]);
            end += 1;
        }
        self.intervals.splice(start..end, std::iter::once(merged));
        true
    }

    /// Union of two sets (canonical).
    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut items = self.intervals.clone();
        items.extend(other.intervals.iter().cloned());
        IntervalSet::coalesce(items)
    }

    /// Intersection of two sets (canonical).
    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        // Linear sweep over both sorted sequences.
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            if let Some(c) = a.intersect(b) {
                out.push(c);
            }
            // Advance whichever side ends first.
            if upper_bound_cmp((&a.upper, a.upper_closed), (&b.upper, b.upper_closed))
                == Ordering::Less
            {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Pieces of coalesced inputs are already disjoint and non-mergeable.
        IntervalSet { intervals: out }
    }

    /// Is every point of `self` also in `other`?
    pub fn subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|iv| other.covers(iv))
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{iv}")?;
        }
        write!(f, "}}")
    }
}
