//! Monotonic MDPs seen through symbolic queries.
//!
//! Algorithms never list states. They only ask a model for successors and
//! probabilities of single states, and for the maximal predecessors of a
//! downward-closed set `↓{x}`; everything else is pseudo-antichain algebra.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{Antichain, Lattice};
use crate::pseudo::PseudoAntichain;
use crate::Rational;

/// Index of an action `σ`.
pub type ActionId = usize;

/// A monotonic MDP `(S, Σ, T, E, D)` with costs.
///
/// Effects `τ` are indexed per action, `0..num_effects(σ)`. Every declared
/// effect has a strictly positive probability on `S_σ`.
pub trait MonotonicMdp {
    type Elem: Lattice;

    fn num_actions(&self) -> usize;

    fn action_name(&self, action: ActionId) -> String;

    fn num_effects(&self, action: ActionId) -> usize;

    fn is_enabled(&self, s: &Self::Elem, action: ActionId) -> bool;

    /// `E(s, σ)(τ)`; only meaningful when `σ` is enabled at `s`.
    fn successor(&self, s: &Self::Elem, action: ActionId, effect: usize) -> Self::Elem;

    /// `D(s, σ)(τ)`.
    fn probability(&self, s: &Self::Elem, action: ActionId, effect: usize) -> Rational;

    /// `C(s, σ)`.
    fn cost(&self, s: &Self::Elem, action: ActionId) -> Rational;

    /// `⌈Pre_{σ,τ}(↓{x})⌉`: maximal states where `σ` is enabled and whose
    /// `τ`-successor lies below `x`.
    fn pre_max(&self, x: &Self::Elem, action: ActionId, effect: usize) -> Antichain<Self::Elem>;

    fn states(&self) -> PseudoAntichain<Self::Elem>;

    fn goal(&self) -> Option<PseudoAntichain<Self::Elem>>;

    /// Blocks of `S_σ` on which `D(·, σ)` is constant.
    fn dist_partition(&self, action: ActionId) -> PaPartition<Self::Elem, Vec<Rational>>;

    /// Blocks of `S_σ` on which `C(·, σ)` is constant.
    fn cost_partition(&self, action: ActionId) -> PaPartition<Self::Elem, Rational>;

    fn initial_state(&self) -> Option<Self::Elem> {
        None
    }

    /// Lists every state, for explicit baselines only.
    fn enumerate_states(&self, cap: u128) -> Result<Vec<Self::Elem>> {
        let _ = cap;
        Err(Error::NotEnumerable)
    }

    /// Largest effect count over all actions.
    fn max_effects(&self) -> usize {
        (0..self.num_actions())
            .map(|a| self.num_effects(a))
            .max()
            .unwrap_or(0)
    }
}

/// A finite list of disjoint regions, each tagged with a payload.
#[derive(Clone, PartialEq, Eq)]
pub struct PaPartition<E, P> {
    pub blocks: Vec<(PseudoAntichain<E>, P)>,
}

impl<E: Lattice + fmt::Debug, P: fmt::Debug> fmt::Debug for PaPartition<E, P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.blocks.iter()).finish()
    }
}

impl<E, P> Default for PaPartition<E, P> {
    fn default() -> Self {
        PaPartition { blocks: Vec::new() }
    }
}

impl<E: Lattice, P: Clone> PaPartition<E, P> {
    pub fn new(blocks: Vec<(PseudoAntichain<E>, P)>) -> Self {
        PaPartition {
            blocks: blocks.into_iter().filter(|(r, _)| !r.is_empty()).collect(),
        }
    }

    pub fn single(region: PseudoAntichain<E>, payload: P) -> Self {
        Self::new(vec![(region, payload)])
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn domain(&self) -> PseudoAntichain<E> {
        self.blocks
            .iter()
            .fold(PseudoAntichain::empty(), |acc, (r, _)| acc.union(r))
    }

    pub fn lookup(&self, s: &E) -> Option<&P> {
        self.blocks
            .iter()
            .find(|(r, _)| r.contains(s))
            .map(|(_, p)| p)
    }

    pub fn position(&self, s: &E) -> Option<usize> {
        self.blocks.iter().position(|(r, _)| r.contains(s))
    }

    /// Restricts every block to `region`, dropping empty blocks.
    pub fn restrict(&self, region: &PseudoAntichain<E>) -> Self {
        Self::new(
            self.blocks
                .iter()
                .map(|(r, p)| (r.intersect(region), p.clone()))
                .collect(),
        )
    }

    /// Blocks pairwise disjoint, none empty, and (when given) covering `domain`.
    pub fn validate(&self, domain: Option<&PseudoAntichain<E>>) -> bool {
        if self.blocks.iter().any(|(r, _)| r.is_empty()) {
            return false;
        }
        for i in 0..self.blocks.len() {
            for j in i + 1..self.blocks.len() {
                if !self.blocks[i].0.is_disjoint(&self.blocks[j].0) {
                    return false;
                }
            }
        }
        match domain {
            Some(d) => self.domain().set_eq(d),
            None => true,
        }
    }

    /// Coarsest common refinement; payloads are paired.
    pub fn refine<Q: Clone>(&self, other: &PaPartition<E, Q>) -> Result<PaPartition<E, (P, Q)>> {
        if !self.domain().set_eq(&other.domain()) {
            return Err(Error::DomainMismatch);
        }
        Ok(self.refine_unchecked(other))
    }

    /// Pairwise intersections without the domain check; the result covers
    /// the intersection of both domains.
    pub fn refine_unchecked<Q: Clone>(&self, other: &PaPartition<E, Q>) -> PaPartition<E, (P, Q)> {
        let mut blocks = Vec::new();
        for (r, p) in &self.blocks {
            for (s, q) in &other.blocks {
                let i = r.intersect(s);
                if !i.is_empty() {
                    blocks.push((i, (p.clone(), q.clone())));
                }
            }
        }
        PaPartition { blocks }
    }
}

impl<E: Lattice, P: Clone + Ord> PaPartition<E, P> {
    /// Unions the blocks carrying equal payloads, ordered by payload.
    pub fn merge_equal(&self) -> Self {
        let mut by: BTreeMap<P, PseudoAntichain<E>> = BTreeMap::new();
        for (r, p) in &self.blocks {
            let e = by.entry(p.clone()).or_default();
            *e = e.union(r);
        }
        PaPartition {
            blocks: by.into_iter().map(|(p, r)| (r, p)).collect(),
        }
    }
}

/// A memoryless strategy: each block's action is enabled on the whole block.
pub type Strategy<E> = PaPartition<E, ActionId>;

/// `{s | σ enabled at s and E(s,σ,τ) ∈ ↕target}`.
pub fn pre_sigma_tau<M: MonotonicMdp>(
    mdp: &M,
    target: &PseudoAntichain<M::Elem>,
    action: ActionId,
    effect: usize,
) -> PseudoAntichain<M::Elem> {
    let mut pairs = Vec::new();
    for pe in target.elems() {
        let tops = mdp.pre_max(pe.top(), action, effect);
        if tops.is_empty() {
            continue;
        }
        let below = Antichain::maximal(
            pe.alpha()
                .elems()
                .iter()
                .flat_map(|a| mdp.pre_max(a, action, effect).elems().to_vec()),
        );
        for t in tops.elems() {
            pairs.push((t.clone(), below.clone()));
        }
    }
    PseudoAntichain::from_pairs(pairs)
}

/// `S_σ`, obtained as the predecessors of the whole state space.
pub fn enabled_region<M: MonotonicMdp>(mdp: &M, action: ActionId) -> PseudoAntichain<M::Elem> {
    if mdp.num_effects(action) == 0 {
        return PseudoAntichain::empty();
    }
    pre_sigma_tau(mdp, &mdp.states(), action, 0)
}

/// States of `S_σ` all of whose `σ`-successors stay inside `target`.
pub fn allow_region<M: MonotonicMdp>(
    mdp: &M,
    action: ActionId,
    target: &PseudoAntichain<M::Elem>,
) -> PseudoAntichain<M::Elem> {
    let mut acc: Option<PseudoAntichain<M::Elem>> = None;
    for t in 0..mdp.num_effects(action) {
        let p = pre_sigma_tau(mdp, target, action, t);
        acc = Some(match acc {
            None => p,
            Some(a) => a.intersect(&p),
        });
        if acc.as_ref().is_some_and(|a| a.is_empty()) {
            break;
        }
    }
    acc.unwrap_or_default()
}

/// `Pre_λ(C, τ) = ⋃ {Pre_{σ,τ}(C) ∩ B | B ∈ S_{~λ}, λ(B) = σ}`.
pub fn pre_lambda<M: MonotonicMdp>(
    mdp: &M,
    target: &PseudoAntichain<M::Elem>,
    effect: usize,
    strategy: &Strategy<M::Elem>,
) -> PseudoAntichain<M::Elem> {
    let mut out = PseudoAntichain::empty();
    for &(ref block, action) in &strategy.blocks {
        if effect >= mdp.num_effects(action) {
            continue;
        }
        let p = pre_sigma_tau(mdp, target, action, effect);
        if p.is_empty() {
            continue;
        }
        out = out.union(&p.intersect(block));
    }
    out
}

/// Equality of the state-to-action functions, whatever the block shapes.
pub fn strategies_equal<E: Lattice>(a: &Strategy<E>, b: &Strategy<E>) -> Result<bool> {
    if !a.domain().set_eq(&b.domain()) {
        return Err(Error::DomainMismatch);
    }
    let ma = a.merge_equal();
    let mb = b.merge_equal();
    let actions: std::collections::BTreeSet<ActionId> = ma
        .blocks
        .iter()
        .chain(&mb.blocks)
        .map(|(_, p)| *p)
        .collect();
    let empty = PseudoAntichain::empty();
    Ok(actions.into_iter().all(|act| {
        let ra = ma.blocks.iter().find(|(_, p)| *p == act).map_or(&empty, |(r, _)| r);
        let rb = mb.blocks.iter().find(|(_, p)| *p == act).map_or(&empty, |(r, _)| r);
        ra.set_eq(rb)
    }))
}
