//! Semilattices and antichains.
//!
//! A lattice element carries its own partial order (`leq`) and greatest lower
//! bound (`meet`). The derived `Ord` on element types is only a storage order
//! used to keep antichains and pseudo-antichains in a canonical, reproducible
//! layout; it is never consulted as the lattice order.

use std::cell::Cell;
use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};

/// An element of a finite meet-semilattice.
pub trait Lattice: Clone + Ord + Hash + fmt::Debug {
    /// The partial order `self ⪯ other`.
    fn leq(&self, other: &Self) -> bool;

    /// Greatest lower bound.
    fn meet(&self, other: &Self) -> Self;

    fn lt(&self, other: &Self) -> bool {
        self != other && self.leq(other)
    }
}

/// A finite lattice whose elements can be listed. Only test oracles and the
/// explicit baseline rely on this capability.
pub trait Enumerable {
    type Elem: Lattice;

    fn size(&self) -> u128;

    fn elements(&self) -> Result<Vec<Self::Elem>>;
}

thread_local! {
    static ENUMERATION_FORBIDDEN: Cell<bool> = const { Cell::new(false) };
    static ENUMERATIONS: Cell<u64> = const { Cell::new(0) };
}

/// While alive, any full state-space enumeration on this thread fails with
/// [`Error::EnumerationForbidden`]. Used to prove that a symbolic run never
/// falls back to listing states.
pub struct EnumerationGuard {
    previous: bool,
}

impl EnumerationGuard {
    pub fn forbid() -> Self {
        let previous = ENUMERATION_FORBIDDEN.with(|f| f.replace(true));
        EnumerationGuard { previous }
    }
}

impl Drop for EnumerationGuard {
    fn drop(&mut self) {
        ENUMERATION_FORBIDDEN.with(|f| f.set(self.previous));
    }
}

/// Number of full enumerations performed on this thread so far.
pub fn enumeration_count() -> u64 {
    ENUMERATIONS.with(|c| c.get())
}

pub(crate) fn note_enumeration() -> Result<()> {
    if ENUMERATION_FORBIDDEN.with(|f| f.get()) {
        return Err(Error::EnumerationForbidden);
    }
    ENUMERATIONS.with(|c| c.set(c.get() + 1));
    Ok(())
}

/// A set of pairwise incomparable elements, standing for its downward closure.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Antichain<E> {
    elems: Vec<E>,
}

impl<E> Default for Antichain<E> {
    fn default() -> Self {
        Antichain { elems: Vec::new() }
    }
}

impl<E: Lattice> Antichain<E> {
    pub fn empty() -> Self {
        Antichain { elems: Vec::new() }
    }

    pub fn singleton(x: E) -> Self {
        Antichain { elems: vec![x] }
    }

    /// `⌈set⌉`: keeps only the maximal elements.
    pub fn maximal(set: impl IntoIterator<Item = E>) -> Self {
        let mut items: Vec<E> = set.into_iter().collect();
        items.sort();
        items.dedup();
        let keep: Vec<bool> = (0..items.len())
            .map(|i| !items.iter().enumerate().any(|(j, b)| i != j && items[i].leq(b)))
            .collect();
        let elems = items
            .into_iter()
            .zip(keep)
            .filter_map(|(e, k)| k.then_some(e))
            .collect();
        Antichain { elems }
    }

    pub fn elems(&self) -> &[E] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// `s ∈ ↓self`.
    pub fn covers(&self, s: &E) -> bool {
        self.elems.iter().any(|a| s.leq(a))
    }

    pub fn union(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let mut elems: Vec<E> = self
            .elems
            .iter()
            .filter(|a| !other.covers(a))
            .cloned()
            .collect();
        elems.extend(other.elems.iter().filter(|b| !self.elems.iter().any(|a| Lattice::lt(*b, a))).cloned());
        elems.sort();
        elems.dedup();
        Antichain { elems }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut meets = Vec::with_capacity(self.len() * other.len());
        for a in &self.elems {
            for b in &other.elems {
                meets.push(a.meet(b));
            }
        }
        Antichain::maximal(meets)
    }

    /// `{x} ∩̇ self`, the maximal elements of `↓x ∩ ↓self`.
    pub fn meet_with(&self, x: &E) -> Self {
        Antichain::maximal(self.elems.iter().map(|a| a.meet(x)))
    }

    /// `↓self ⊆ ↓other`.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.elems.iter().all(|a| other.covers(a))
    }

    /// Expands the closure over an enumerable lattice.
    pub fn closure<L: Enumerable<Elem = E>>(&self, lat: &L) -> Result<Vec<E>> {
        Ok(lat.elements()?.into_iter().filter(|s| self.covers(s)).collect())
    }
}

impl<E: Lattice> FromIterator<E> for Antichain<E> {
    fn from_iter<I: IntoIterator<Item = E>>(iter: I) -> Self {
        Antichain::maximal(iter)
    }
}

/// Tuples of naturals ordered componentwise, meet is componentwise min.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NatVec(pub Vec<u32>);

impl NatVec {
    pub fn new(v: impl Into<Vec<u32>>) -> Self {
        NatVec(v.into())
    }
}

impl fmt::Debug for NatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for NatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Lattice for NatVec {
    fn leq(&self, other: &Self) -> bool {
        debug_assert_eq!(self.0.len(), other.0.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn meet(&self, other: &Self) -> Self {
        NatVec(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }
}

/// `ℕ^dimension` with every coordinate bounded by `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductNatLattice {
    pub dimension: usize,
    pub bound: u32,
}

impl ProductNatLattice {
    pub fn new(dimension: usize, bound: u32) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        ProductNatLattice { dimension, bound }
    }

    pub fn top(&self) -> NatVec {
        NatVec(vec![self.bound; self.dimension])
    }
}

impl Enumerable for ProductNatLattice {
    type Elem = NatVec;

    fn size(&self) -> u128 {
        (self.bound as u128 + 1).pow(self.dimension as u32)
    }

    fn elements(&self) -> Result<Vec<NatVec>> {
        let mut out = vec![NatVec(Vec::new())];
        for _ in 0..self.dimension {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..=self.bound).map(move |v| {
                        let mut t = prefix.0.clone();
                        t.push(v);
                        NatVec(t)
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

/// Maximum number of conditions a [`CondSet`] can hold.
pub const MAX_CONDITIONS: usize = 128;

/// A subset of at most [`MAX_CONDITIONS`] conditions, ordered by reverse
/// inclusion: `s ⪯ s'` iff `s ⊇ s'`, so the meet is set union and `↓{x}` is
/// the family of supersets of `x`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CondSet(pub u128);

impl CondSet {
    pub const EMPTY: CondSet = CondSet(0);

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        CondSet(idx.into_iter().fold(0u128, |acc, i| {
            assert!(i < MAX_CONDITIONS, "condition index out of range");
            acc | (1u128 << i)
        }))
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn is_superset(&self, other: &CondSet) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn union(&self, other: &CondSet) -> CondSet {
        CondSet(self.0 | other.0)
    }

    pub fn minus(&self, other: &CondSet) -> CondSet {
        CondSet(self.0 & !other.0)
    }

    pub fn disjoint(&self, other: &CondSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..MAX_CONDITIONS).filter(move |i| self.contains(*i))
    }
}

impl fmt::Debug for CondSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for CondSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.indices().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl Lattice for CondSet {
    fn leq(&self, other: &Self) -> bool {
        self.is_superset(other)
    }

    fn meet(&self, other: &Self) -> Self {
        self.union(other)
    }
}

/// The powerset of `universe` conditions under reverse inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SupersetLattice {
    pub universe: usize,
}

impl SupersetLattice {
    pub fn new(universe: usize) -> Self {
        assert!(universe <= MAX_CONDITIONS);
        SupersetLattice { universe }
    }

    pub fn full(&self) -> CondSet {
        CondSet::from_indices(0..self.universe)
    }
}

impl Enumerable for SupersetLattice {
    type Elem = CondSet;

    fn size(&self) -> u128 {
        if self.universe >= 128 {
            u128::MAX
        } else {
            1u128 << self.universe
        }
    }

    fn elements(&self) -> Result<Vec<CondSet>> {
        if self.universe > 24 {
            return Err(Error::CapExceeded {
                states: self.size(),
                cap: 1 << 24,
            });
        }
        note_enumeration()?;
        Ok((0..(1u128 << self.universe)).map(CondSet).collect())
    }
}

/// Two-level lattice of pairwise incomparable points above a common bottom.
/// Lets any small explicit MDP be handled by the symbolic algorithms; the
/// bottom is an artificial sink excluded from the state space.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flat {
    Bottom,
    Point(u32),
}

impl fmt::Debug for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flat::Bottom => write!(f, "⊥"),
            Flat::Point(i) => write!(f, "s{i}"),
        }
    }
}

impl fmt::Display for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Lattice for Flat {
    fn leq(&self, other: &Self) -> bool {
        matches!(self, Flat::Bottom) || self == other
    }

    fn meet(&self, other: &Self) -> Self {
        if self == other {
            *self
        } else {
            Flat::Bottom
        }
    }
}
