//! Symbolic bisimulation lumping of the Markov chain induced by a strategy.

use std::collections::{BTreeMap, VecDeque};

use num_traits::Zero;

use crate::lattice::Lattice;
use crate::mdp::{pre_lambda, ActionId, MonotonicMdp, PaPartition, Strategy};
use crate::pseudo::PseudoAntichain;
use crate::Rational;

/// `S_{~C,λ}`: regions of the strategy's domain with equal cost `C_λ`.
pub fn strategy_cost_partition<M: MonotonicMdp>(
    mdp: &M,
    strategy: &Strategy<M::Elem>,
) -> PaPartition<M::Elem, Rational> {
    let mut blocks = Vec::new();
    for &(ref region, action) in &strategy.blocks {
        for (part, cost) in &mdp.cost_partition(action).blocks {
            let i = region.intersect(part);
            if !i.is_empty() {
                blocks.push((i, cost.clone()));
            }
        }
    }
    PaPartition::new(blocks).merge_equal()
}

/// `S_{~D,λ}`: regions of the strategy's domain with equal distribution `D_λ`.
pub fn strategy_dist_partition<M: MonotonicMdp>(
    mdp: &M,
    strategy: &Strategy<M::Elem>,
) -> PaPartition<M::Elem, Vec<Rational>> {
    let mut blocks = Vec::new();
    for &(ref region, action) in &strategy.blocks {
        for (part, dist) in &mdp.dist_partition(action).blocks {
            let i = region.intersect(part);
            if !i.is_empty() {
                blocks.push((i, dist.clone()));
            }
        }
    }
    PaPartition::new(blocks).merge_equal()
}

/// `Pre_λ(C, τ)` for every effect index, computed once per splitter.
pub(crate) struct Splitter<E> {
    pre: Vec<PseudoAntichain<E>>,
    any: PseudoAntichain<E>,
}

impl<E: Lattice> Splitter<E> {
    pub(crate) fn new<M: MonotonicMdp<Elem = E>>(
        mdp: &M,
        target: &PseudoAntichain<E>,
        strategy: &Strategy<E>,
    ) -> Self {
        let effects = strategy
            .blocks
            .iter()
            .map(|(_, a)| mdp.num_effects(*a))
            .max()
            .unwrap_or(0);
        let pre: Vec<_> = (0..effects)
            .map(|t| pre_lambda(mdp, target, t, strategy))
            .collect();
        let any = pre.iter().fold(PseudoAntichain::empty(), |acc, p| acc.union(p));
        Splitter { pre, any }
    }

    pub(crate) fn reaches(&self, block: &PseudoAntichain<E>) -> bool {
        !self.any.is_disjoint(block)
    }

    /// Splits `block` by the one-step probability of entering the target.
    pub(crate) fn split(
        &self,
        block: &PseudoAntichain<E>,
        dists: &PaPartition<E, Vec<Rational>>,
    ) -> Vec<(Rational, PseudoAntichain<E>)> {
        if !self.reaches(block) {
            return vec![(Rational::zero(), block.clone())];
        }
        let mut table: BTreeMap<Rational, PseudoAntichain<E>> = BTreeMap::new();
        table.insert(Rational::zero(), block.clone());
        for (t, pre) in self.pre.iter().enumerate() {
            if pre.is_empty() {
                continue;
            }
            let mut next: BTreeMap<Rational, PseudoAntichain<E>> = BTreeMap::new();
            for (p, part) in table {
                let inside = part.intersect(pre);
                if inside.is_empty() {
                    add_to(&mut next, p, part);
                    continue;
                }
                let rest = part.difference(pre);
                if !rest.is_empty() {
                    add_to(&mut next, p.clone(), rest);
                }
                // `inside` lies in the strategy's domain, which a single
                // distribution block covers entirely.
                if let [(_, dist)] = dists.blocks.as_slice() {
                    let q = dist.get(t).map_or_else(|| p.clone(), |x| &p + x);
                    add_to(&mut next, q, inside);
                    continue;
                }
                for (d, dist) in &dists.blocks {
                    let piece = inside.intersect(d);
                    if piece.is_empty() {
                        continue;
                    }
                    let q = dist.get(t).map_or_else(|| p.clone(), |x| &p + x);
                    add_to(&mut next, q, piece);
                }
            }
            table = next;
        }
        table.into_iter().collect()
    }
}

fn add_to<E: Lattice>(
    table: &mut BTreeMap<Rational, PseudoAntichain<E>>,
    key: Rational,
    region: PseudoAntichain<E>,
) {
    match table.get_mut(&key) {
        Some(r) => *r = r.union(&region),
        None => {
            table.insert(key, region);
        }
    }
}

/// Splits `block` into parts of equal probability of reaching `target` in
/// one step under `strategy`, each tagged with that probability.
pub fn split<M: MonotonicMdp>(
    mdp: &M,
    block: &PseudoAntichain<M::Elem>,
    target: &PseudoAntichain<M::Elem>,
    strategy: &Strategy<M::Elem>,
) -> Vec<(Rational, PseudoAntichain<M::Elem>)> {
    let dists = strategy_dist_partition(mdp, strategy);
    Splitter::new(mdp, target, strategy).split(block, &dists)
}

#[derive(Clone, Debug)]
pub struct LumpBlock<E> {
    pub region: PseudoAntichain<E>,
    pub cost: Rational,
    /// Goal block made absorbing: a self-loop of cost 0.
    pub absorbing: bool,
}

#[derive(Clone, Debug)]
pub struct LumpResult<E> {
    pub blocks: Vec<LumpBlock<E>>,
    pub splitters_processed: usize,
    pub splits: usize,
    domain: PseudoAntichain<E>,
}

impl<E: Lattice> LumpResult<E> {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn position(&self, s: &E) -> Option<usize> {
        self.blocks.iter().position(|b| b.region.contains(s))
    }

    pub fn partition(&self) -> PaPartition<E, Rational> {
        PaPartition {
            blocks: self
                .blocks
                .iter()
                .map(|b| (b.region.clone(), b.cost.clone()))
                .collect(),
        }
    }

    /// Union of all blocks.
    pub fn domain(&self) -> &PseudoAntichain<E> {
        &self.domain
    }
}

/// Strategy with the absorbing region cut out of its domain.
pub fn moving_strategy<E: Lattice>(
    strategy: &Strategy<E>,
    absorbing: Option<&PseudoAntichain<E>>,
) -> Strategy<E> {
    match absorbing {
        None => strategy.clone(),
        Some(g) => PaPartition::new(
            strategy
                .blocks
                .iter()
                .map(|(r, a)| (r.difference(g), *a))
                .collect::<Vec<(PseudoAntichain<E>, ActionId)>>(),
        ),
    }
}

/// Largest bisimulation of the chain induced by `strategy` on its domain.
///
/// When `absorbing` is given (the goal set of a shortest-path problem), the
/// states of the domain inside it are collapsed into one block that loops on
/// itself at cost 0: behaviour after reaching the goal is irrelevant to the
/// truncated sum.
pub fn lump<M: MonotonicMdp>(
    mdp: &M,
    strategy: &Strategy<M::Elem>,
    absorbing: Option<&PseudoAntichain<M::Elem>>,
) -> LumpResult<M::Elem> {
    let domain = strategy.domain();
    let moving = moving_strategy(strategy, absorbing);
    let costs = strategy_cost_partition(mdp, &moving);
    let dists = strategy_dist_partition(mdp, &moving);

    let mut blocks: Vec<LumpBlock<M::Elem>> = costs
        .blocks
        .into_iter()
        .map(|(region, cost)| LumpBlock {
            region,
            cost,
            absorbing: false,
        })
        .collect();
    if let Some(g) = absorbing {
        let region = domain.intersect(g);
        if !region.is_empty() {
            blocks.push(LumpBlock {
                region,
                cost: Rational::zero(),
                absorbing: true,
            });
        }
    }

    let mut worklist: VecDeque<PseudoAntichain<M::Elem>> =
        blocks.iter().map(|b| b.region.clone()).collect();
    let mut splitters_processed = 0;
    let mut splits = 0;
    while let Some(target) = worklist.pop_front() {
        splitters_processed += 1;
        let splitter = Splitter::new(mdp, &target, &moving);
        if splitter.any.is_empty() {
            continue;
        }
        let mut next = Vec::with_capacity(blocks.len());
        for b in blocks {
            if b.absorbing || !splitter.reaches(&b.region) {
                next.push(b);
                continue;
            }
            let parts = splitter.split(&b.region, &dists);
            if parts.len() == 1 {
                next.push(b);
                continue;
            }
            splits += 1;
            // Stability against the parent and all other parts implies
            // stability against the largest part.
            let largest = (0..parts.len()).max_by_key(|&i| parts[i].1.size()).unwrap();
            for (i, (_, region)) in parts.into_iter().enumerate() {
                if i != largest {
                    worklist.push_back(region.clone());
                }
                next.push(LumpBlock {
                    region,
                    cost: b.cost.clone(),
                    absorbing: false,
                });
            }
        }
        blocks = next;
    }
    LumpResult {
        blocks,
        splitters_processed,
        splits,
        domain,
    }
}

/// Every block splits into a single part against every block.
pub fn is_stable<M: MonotonicMdp>(
    mdp: &M,
    strategy: &Strategy<M::Elem>,
    absorbing: Option<&PseudoAntichain<M::Elem>>,
    result: &LumpResult<M::Elem>,
) -> bool {
    let moving = moving_strategy(strategy, absorbing);
    let dists = strategy_dist_partition(mdp, &moving);
    result.blocks.iter().all(|target| {
        let splitter = Splitter::new(mdp, &target.region, &moving);
        result
            .blocks
            .iter()
            .filter(|b| !b.absorbing)
            .all(|b| splitter.split(&b.region, &dists).len() == 1)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Flat;
    use crate::table::TableMdp;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn region(p: &[u32]) -> PseudoAntichain<Flat> {
        TableMdp::region(p.iter().copied())
    }

    /// s0, s1 reach s3 with probability 1/2, s2 never does.
    fn three_state() -> TableMdp {
        TableMdp::new(4, &["a"])
            .transition(0, 0, q(1, 1), &[(q(1, 2), 3), (q(1, 2), 2)])
            .transition(1, 0, q(1, 1), &[(q(1, 2), 2), (q(1, 2), 3)])
            .transition(2, 0, q(1, 1), &[(q(1, 2), 2), (q(1, 2), 2)])
            .transition(3, 0, q(1, 1), &[(q(1, 2), 3), (q(1, 2), 3)])
    }

    fn constant(mdp: &TableMdp, action: ActionId) -> Strategy<Flat> {
        PaPartition::single(mdp.states(), action)
    }

    #[test]
    fn split_by_probability() {
        let mdp = three_state();
        let lambda = constant(&mdp, 0);
        let mut parts = split(&mdp, &region(&[0, 1, 2]), &region(&[3]), &lambda);
        parts.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, q(0, 1));
        assert!(parts[0].1.set_eq(&region(&[2])));
        assert_eq!(parts[1].0, q(1, 2));
        assert!(parts[1].1.set_eq(&region(&[0, 1])));
    }

    #[test]
    fn split_trivial_cases() {
        let mdp = three_state();
        let lambda = constant(&mdp, 0);
        let none = split(&mdp, &region(&[2]), &region(&[0, 1]), &lambda);
        assert_eq!(none.len(), 1);
        assert_eq!(none[0].0, q(0, 1));
        let all = split(&mdp, &region(&[0, 1, 2]), &region(&[2, 3]), &lambda);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].0, q(1, 1));
    }

    #[test]
    fn symmetric_chain_is_one_block() {
        let mdp = TableMdp::new(2, &["a"])
            .transition(0, 0, q(2, 1), &[(q(1, 3), 0), (q(2, 3), 1)])
            .transition(1, 0, q(2, 1), &[(q(1, 3), 1), (q(2, 3), 0)]);
        let lambda = constant(&mdp, 0);
        let res = lump(&mdp, &lambda, None);
        assert_eq!(res.len(), 1);
        assert!(is_stable(&mdp, &lambda, None, &res));
    }

    #[test]
    fn distinct_costs_stay_apart() {
        let mdp = TableMdp::new(3, &["a"])
            .transition(0, 0, q(1, 1), &[(q(1, 1), 1)])
            .transition(1, 0, q(2, 1), &[(q(1, 1), 2)])
            .transition(2, 0, q(1, 1), &[(q(1, 1), 0)]);
        let lambda = constant(&mdp, 0);
        let res = lump(&mdp, &lambda, None);
        assert_eq!(res.len(), 3);
        for b in &res.blocks {
            let costs: Vec<Rational> = [0u32, 1, 2]
                .iter()
                .filter(|&&s| b.region.contains(&Flat::Point(s)))
                .map(|&s| mdp.cost(&Flat::Point(s), 0))
                .collect();
            assert!(costs.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn cost_partition_merges_across_actions() {
        let mdp = TableMdp::new(2, &["a", "b"])
            .transition(0, 0, q(1, 1), &[(q(1, 1), 0)])
            .transition(1, 1, q(1, 1), &[(q(1, 1), 1)]);
        let lambda = PaPartition::new(vec![(region(&[0]), 0), (region(&[1]), 1)]);
        assert_eq!(strategy_cost_partition(&mdp, &lambda).len(), 1);
        let mdp = TableMdp::new(2, &["a", "b"])
            .transition(0, 0, q(1, 1), &[(q(1, 1), 0)])
            .transition(1, 1, q(2, 1), &[(q(1, 1), 1)]);
        assert_eq!(strategy_cost_partition(&mdp, &lambda).len(), 2);
    }
}
