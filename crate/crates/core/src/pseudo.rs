//! Pseudo-elements and pseudo-antichains.
//!
//! A pseudo-element `(x, α)` denotes `↓{x} \ ↓α`, the elements below `x` that
//! escape the closure of the antichain `α`. A pseudo-antichain denotes the
//! union of its members and is closed under union, intersection and
//! difference, which lets arbitrary (not only downward-closed) sets be
//! manipulated through antichains alone.
//!
//! Every value stored here is canonical (`∀a ∈ α · a ⪯ x`, hence `x ∉ ↓α`),
//! and every pseudo-antichain is kept simplified: distinct tops and no member
//! contained in another. An empty pseudo-antichain therefore denotes `∅`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{Antichain, Enumerable, Lattice};

/// A canonical pseudo-element.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PseudoElement<E> {
    x: E,
    alpha: Antichain<E>,
}

impl<E: Lattice> PseudoElement<E> {
    /// Canonical form of an arbitrary pair, `None` when the pair denotes `∅`.
    pub fn canonical(x: E, alpha: &Antichain<E>) -> Option<Self> {
        if alpha.covers(&x) {
            return None;
        }
        let alpha = alpha.meet_with(&x);
        Some(PseudoElement { x, alpha })
    }

    /// The whole closure `↓{x}`.
    pub fn closed(x: E) -> Self {
        PseudoElement {
            x,
            alpha: Antichain::empty(),
        }
    }

    pub fn top(&self) -> &E {
        &self.x
    }

    pub fn alpha(&self) -> &Antichain<E> {
        &self.alpha
    }

    pub fn contains(&self, s: &E) -> bool {
        s.leq(&self.x) && !self.alpha.covers(s)
    }

    /// `↕self ⊆ ↕other`, decided without enumeration.
    pub fn is_subset(&self, other: &Self) -> bool {
        self.x.leq(&other.x)
            && other
                .alpha
                .elems()
                .iter()
                .all(|b| self.alpha.covers(&b.meet(&self.x)))
    }

    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let x = self.x.meet(&other.x);
        if self.alpha.covers(&x) || other.alpha.covers(&x) {
            return None;
        }
        PseudoElement::canonical(x, &self.alpha.union(&other.alpha))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        let x = self.x.meet(&other.x);
        self.alpha.covers(&x) || other.alpha.covers(&x)
    }

    /// `↕self \ ↕other` as a list of canonical pseudo-elements (not simplified).
    pub fn difference(&self, other: &Self) -> Vec<Self> {
        if self.is_disjoint(other) {
            return vec![self.clone()];
        }
        if self.is_subset(other) {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(1 + other.alpha.len());
        let outside = Antichain::singleton(other.x.clone()).union(&self.alpha);
        out.extend(PseudoElement::canonical(self.x.clone(), &outside));
        for b in other.alpha.elems() {
            out.extend(PseudoElement::canonical(self.x.meet(b), &self.alpha));
        }
        out
    }

    fn size(&self) -> usize {
        1 + self.alpha.len()
    }
}

impl<E: Lattice + fmt::Display> fmt::Display for PseudoElement<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} |", self.x)?;
        for (i, a) in self.alpha.elems().iter().enumerate() {
            write!(f, "{}{}", if i == 0 { " " } else { ", " }, a)?;
        }
        write!(f, ")")
    }
}

/// A simplified pseudo-antichain.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PseudoAntichain<E> {
    elems: Vec<PseudoElement<E>>,
}

impl<E> Default for PseudoAntichain<E> {
    fn default() -> Self {
        PseudoAntichain { elems: Vec::new() }
    }
}

impl<E: Lattice> PseudoAntichain<E> {
    pub fn empty() -> Self {
        PseudoAntichain { elems: Vec::new() }
    }

    pub fn from_element(pe: PseudoElement<E>) -> Self {
        PseudoAntichain { elems: vec![pe] }
    }

    /// The pseudo-antichain of `↓α`.
    pub fn closed(alpha: &Antichain<E>) -> Self {
        PseudoAntichain {
            elems: alpha
                .elems()
                .iter()
                .cloned()
                .map(PseudoElement::closed)
                .collect(),
        }
    }

    /// Builds from arbitrary `(x, α)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (E, Antichain<E>)>) -> Self {
        Self::simplify(
            pairs
                .into_iter()
                .filter_map(|(x, a)| PseudoElement::canonical(x, &a)),
        )
    }

    /// Merges members sharing a top, then drops members contained in others.
    pub fn simplify(items: impl IntoIterator<Item = PseudoElement<E>>) -> Self {
        let mut by_top: BTreeMap<E, Antichain<E>> = BTreeMap::new();
        for pe in items {
            match by_top.get_mut(&pe.x) {
                Some(alpha) => *alpha = alpha.intersect(&pe.alpha),
                None => {
                    by_top.insert(pe.x, pe.alpha);
                }
            }
        }
        let merged: Vec<PseudoElement<E>> = by_top
            .into_iter()
            .map(|(x, alpha)| PseudoElement { x, alpha })
            .collect();
        if merged.len() <= 1 {
            return PseudoAntichain { elems: merged };
        }
        // Tops are distinct, so inclusion between canonical members is strict
        // and at least one maximal member of every chain survives.
        let keep: Vec<bool> = (0..merged.len())
            .map(|i| {
                !merged
                    .iter()
                    .enumerate()
                    .any(|(j, other)| i != j && merged[i].is_subset(other))
            })
            .collect();
        PseudoAntichain {
            elems: merged
                .into_iter()
                .zip(keep)
                .filter_map(|(pe, k)| k.then_some(pe))
                .collect(),
        }
    }

    pub fn elems(&self) -> &[PseudoElement<E>] {
        &self.elems
    }

    /// Number of pseudo-elements.
    pub fn len(&self) -> usize {
        self.elems.len()
    }

    /// Number of lattice elements stored (tops plus antichain members).
    pub fn size(&self) -> usize {
        self.elems.iter().map(PseudoElement::size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, s: &E) -> bool {
        self.elems.iter().any(|pe| pe.contains(s))
    }

    /// True when every member has an empty antichain, i.e. the set is closed.
    pub fn is_closed_form(&self) -> bool {
        self.elems.iter().all(|pe| pe.alpha.is_empty())
    }

    pub fn union(&self, other: &Self) -> Self {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        Self::simplify(self.elems.iter().chain(&other.elems).cloned())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        if self.is_empty() || other.is_empty() {
            return Self::empty();
        }
        let mut out = Vec::new();
        for a in &self.elems {
            for b in &other.elems {
                out.extend(a.intersect(b));
            }
        }
        Self::simplify(out)
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut current = self.clone();
        for b in &other.elems {
            if current.is_empty() {
                break;
            }
            if current.elems.iter().all(|a| a.is_disjoint(b)) {
                continue;
            }
            current = Self::simplify(current.elems.iter().flat_map(|a| a.difference(b)));
        }
        current
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        let rest: Vec<&PseudoElement<E>> = self
            .elems
            .iter()
            .filter(|a| !other.elems.iter().any(|b| a.is_subset(b)))
            .collect();
        if rest.is_empty() {
            return true;
        }
        let rest = PseudoAntichain {
            elems: rest.into_iter().cloned().collect(),
        };
        rest.difference(other).is_empty()
    }

    pub fn set_eq(&self, other: &Self) -> bool {
        self == other || (self.is_subset(other) && other.is_subset(self))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.elems
            .iter()
            .all(|a| other.elems.iter().all(|b| a.is_disjoint(b)))
    }

    /// A deterministic member: the top of the first stored pseudo-element.
    pub fn pick(&self) -> Result<E> {
        self.elems.first().map(|pe| pe.x.clone()).ok_or(Error::EmptySet)
    }

    /// Expands the denoted set by filtering the lattice's elements.
    pub fn enumerate<L: Enumerable<Elem = E>>(&self, lat: &L) -> Result<Vec<E>> {
        Ok(lat
            .elements()?
            .into_iter()
            .filter(|s| self.contains(s))
            .collect())
    }

    /// Deterministic text form with a caller-supplied element printer.
    pub fn display_with<F: Fn(&E) -> String>(&self, show: F) -> String {
        let mut out = String::from("{");
        for (i, pe) in self.elems.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push('(');
            out.push_str(&show(&pe.x));
            out.push_str(" |");
            for (j, a) in pe.alpha.elems().iter().enumerate() {
                out.push_str(if j == 0 { " " } else { ", " });
                out.push_str(&show(a));
            }
            out.push(')');
        }
        out.push('}');
        out
    }
}

impl<E: Lattice + fmt::Display> fmt::Display for PseudoAntichain<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(|e| e.to_string()))
    }
}
