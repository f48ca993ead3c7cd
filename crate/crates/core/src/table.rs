//! Small explicit MDPs embedded as monotonic MDPs.
//!
//! States are the points of the [`Flat`] lattice; the bottom element is an
//! isolated sink every action maps to itself, and it is cut out of the state
//! space with the pseudo-element `(s, {⊥})`. This makes hand-written chains
//! usable with the symbolic algorithms.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{Antichain, Flat, Lattice};
use crate::mdp::{ActionId, MonotonicMdp, PaPartition};
use crate::pseudo::PseudoAntichain;
use crate::Rational;

#[derive(Clone, Debug)]
struct Row {
    cost: Rational,
    outcomes: Vec<(Rational, u32)>,
}

#[derive(Clone, Debug, Default)]
pub struct TableMdp {
    states: u32,
    actions: Vec<String>,
    rows: BTreeMap<(u32, ActionId), Row>,
    goal: Option<Vec<u32>>,
    initial: Option<u32>,
}

impl TableMdp {
    pub fn new(states: u32, actions: &[&str]) -> Self {
        TableMdp {
            states,
            actions: actions.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    /// Adds `state --action--> outcomes` at `cost`. All rows of one action
    /// must list the same number of outcomes, each with positive probability.
    pub fn transition(mut self, state: u32, action: ActionId, cost: Rational, outcomes: &[(Rational, u32)]) -> Self {
        assert!(state < self.states && action < self.actions.len());
        assert!(outcomes.iter().all(|(p, t)| *p > Rational::from_integer(0.into()) && *t < self.states));
        let total: Rational = outcomes.iter().map(|(p, _)| p.clone()).sum();
        assert_eq!(total, Rational::from_integer(1.into()), "outcomes must sum to 1");
        if let Some(other) = self.rows.iter().find(|((_, a), _)| *a == action) {
            assert_eq!(other.1.outcomes.len(), outcomes.len(), "uneven effect count");
        }
        self.rows.insert(
            (state, action),
            Row {
                cost,
                outcomes: outcomes.to_vec(),
            },
        );
        self
    }

    pub fn with_goal(mut self, goal: &[u32]) -> Self {
        self.goal = Some(goal.to_vec());
        self
    }

    pub fn with_initial(mut self, s: u32) -> Self {
        self.initial = Some(s);
        self
    }

    pub fn region(points: impl IntoIterator<Item = u32>) -> PseudoAntichain<Flat> {
        let bottom = Antichain::singleton(Flat::Bottom);
        PseudoAntichain::from_pairs(points.into_iter().map(|p| (Flat::Point(p), bottom.clone())))
    }

    fn row(&self, s: &Flat, action: ActionId) -> Option<&Row> {
        match s {
            Flat::Point(i) => self.rows.get(&(*i, action)),
            Flat::Bottom => None,
        }
    }

    fn grouped<K: Ord + Clone>(&self, action: ActionId, key: impl Fn(&Row) -> K) -> PaPartition<Flat, K> {
        let mut by: BTreeMap<K, Vec<u32>> = BTreeMap::new();
        for ((s, a), row) in &self.rows {
            if *a == action {
                by.entry(key(row)).or_default().push(*s);
            }
        }
        PaPartition::new(by.into_iter().map(|(k, pts)| (Self::region(pts), k)).collect())
    }
}

impl MonotonicMdp for TableMdp {
    type Elem = Flat;

    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn action_name(&self, action: ActionId) -> String {
        self.actions[action].clone()
    }

    fn num_effects(&self, action: ActionId) -> usize {
        self.rows
            .iter()
            .find(|((_, a), _)| *a == action)
            .map_or(0, |(_, r)| r.outcomes.len())
    }

    fn is_enabled(&self, s: &Flat, action: ActionId) -> bool {
        matches!(s, Flat::Bottom) || self.row(s, action).is_some()
    }

    fn successor(&self, s: &Flat, action: ActionId, effect: usize) -> Flat {
        self.row(s, action)
            .map_or(Flat::Bottom, |r| Flat::Point(r.outcomes[effect].1))
    }

    fn probability(&self, s: &Flat, action: ActionId, effect: usize) -> Rational {
        self.row(s, action)
            .map_or_else(|| Rational::from_integer(0.into()), |r| r.outcomes[effect].0.clone())
    }

    fn cost(&self, s: &Flat, action: ActionId) -> Rational {
        self.row(s, action)
            .map_or_else(|| Rational::from_integer(0.into()), |r| r.cost.clone())
    }

    fn pre_max(&self, x: &Flat, action: ActionId, effect: usize) -> Antichain<Flat> {
        let preds = self
            .rows
            .iter()
            .filter(|((_, a), _)| *a == action)
            .filter(|(_, r)| Flat::Point(r.outcomes[effect].1).leq(x))
            .map(|((s, _), _)| Flat::Point(*s));
        Antichain::maximal(preds.chain([Flat::Bottom]))
    }

    fn states(&self) -> PseudoAntichain<Flat> {
        Self::region(0..self.states)
    }

    fn goal(&self) -> Option<PseudoAntichain<Flat>> {
        self.goal.as_ref().map(|g| Self::region(g.iter().copied()))
    }

    fn dist_partition(&self, action: ActionId) -> PaPartition<Flat, Vec<Rational>> {
        self.grouped(action, |r| r.outcomes.iter().map(|(p, _)| p.clone()).collect())
    }

    fn cost_partition(&self, action: ActionId) -> PaPartition<Flat, Rational> {
        self.grouped(action, |r| r.cost.clone())
    }

    fn initial_state(&self) -> Option<Flat> {
        self.initial.map(Flat::Point)
    }

    fn enumerate_states(&self, cap: u128) -> Result<Vec<Flat>> {
        if self.states as u128 > cap {
            return Err(Error::CapExceeded {
                states: self.states as u128,
                cap,
            });
        }
        Ok((0..self.states).map(Flat::Point).collect())
    }
}
