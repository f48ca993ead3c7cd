//! Enumerative baseline: the same objectives solved state by state.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mdp::{ActionId, MonotonicMdp};
use crate::quotient::Chain;
use crate::strategy::{solve_emp, solve_ssp, SolveOptions, SolveReport};
use crate::strips::Objective;
use crate::Rational;

#[derive(Clone, Debug)]
pub struct Choice {
    pub action: ActionId,
    pub cost: Rational,
    pub succ: Vec<(usize, Rational)>,
}

#[derive(Clone, Debug)]
pub struct ExplicitMdp<E> {
    pub states: Vec<E>,
    pub index: HashMap<E, usize>,
    /// Enabled actions per state, in action order.
    pub choices: Vec<Vec<Choice>>,
    pub goal: Vec<bool>,
    pub initial: Option<usize>,
}

/// Lists every state with its enabled actions and successor distributions.
pub fn enumerate_states<M: MonotonicMdp>(mdp: &M, cap: u128) -> Result<ExplicitMdp<M::Elem>> {
    let space = mdp.states();
    let states: Vec<M::Elem> = mdp
        .enumerate_states(cap)?
        .into_iter()
        .filter(|s| space.contains(s))
        .collect();
    let index: HashMap<M::Elem, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let goal_pa = mdp.goal();
    let mut choices = Vec::with_capacity(states.len());
    for s in &states {
        let mut here = Vec::new();
        for a in 0..mdp.num_actions() {
            if !mdp.is_enabled(s, a) {
                continue;
            }
            let mut succ: BTreeMap<usize, Rational> = BTreeMap::new();
            for t in 0..mdp.num_effects(a) {
                let p = mdp.probability(s, a, t);
                if p.is_zero() {
                    continue;
                }
                let target = mdp.successor(s, a, t);
                let j = *index
                    .get(&target)
                    .ok_or_else(|| Error::InvalidProblem("successor outside the state space".into()))?;
                *succ.entry(j).or_insert_with(Rational::zero) += p;
            }
            let total: Rational = succ.values().cloned().sum();
            if !total.is_one() {
                return Err(Error::InvalidProblem(format!(
                    "distribution of `{}` sums to {}",
                    mdp.action_name(a),
                    total
                )));
            }
            here.push(Choice {
                action: a,
                cost: mdp.cost(s, a),
                succ: succ.into_iter().collect(),
            });
        }
        if here.is_empty() {
            return Err(Error::InvalidProblem("a state has no enabled action".into()));
        }
        choices.push(here);
    }
    let goal = states
        .iter()
        .map(|s| goal_pa.as_ref().is_some_and(|g| g.contains(s)))
        .collect();
    let initial = mdp.initial_state().and_then(|s| index.get(&s).copied());
    Ok(ExplicitMdp {
        states,
        index,
        choices,
        goal,
        initial,
    })
}

#[derive(Clone, Debug)]
pub struct ExplicitSolution {
    /// Chosen action per state; `None` outside the proper region.
    pub actions: Vec<Option<ActionId>>,
    /// Expected cost to the goal, or gain.
    pub values: Vec<Option<Rational>>,
    pub bias: Option<Vec<Rational>>,
    pub iterations: usize,
}

impl<E> ExplicitMdp<E> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn choice(&self, s: usize, a: ActionId) -> Option<&Choice> {
        self.choices[s].iter().find(|c| c.action == a)
    }

    /// Almost-sure reachability of the goal, with an attractor strategy.
    pub fn prob1(&self) -> (Vec<bool>, Vec<Option<ActionId>>) {
        let n = self.len();
        let mut safe = vec![true; n];
        loop {
            let mut reach = self.goal.clone();
            let mut strategy: Vec<Option<ActionId>> = (0..n)
                .map(|s| if self.goal[s] { Some(self.choices[s][0].action) } else { None })
                .collect();
            loop {
                let mut grew = false;
                for s in 0..n {
                    if reach[s] || !safe[s] {
                        continue;
                    }
                    let pick = self.choices[s].iter().find(|c| {
                        c.succ.iter().all(|(t, _)| safe[*t]) && c.succ.iter().any(|(t, _)| reach[*t])
                    });
                    if let Some(c) = pick {
                        reach[s] = true;
                        strategy[s] = Some(c.action);
                        grew = true;
                    }
                }
                if !grew {
                    break;
                }
            }
            let next: Vec<bool> = (0..n).map(|s| safe[s] && reach[s]).collect();
            if next == safe {
                return (safe, strategy);
            }
            safe = next;
        }
    }

    /// The chain induced by a strategy on the states where it is defined,
    /// with goal states made absorbing when `absorb` is set.
    fn chain(&self, actions: &[Option<ActionId>], absorb: bool) -> Result<(Chain, Vec<usize>)> {
        let members: Vec<usize> = (0..self.len()).filter(|&s| actions[s].is_some()).collect();
        let mut local = vec![usize::MAX; self.len()];
        for (k, &s) in members.iter().enumerate() {
            local[s] = k;
        }
        let mut chain = Chain::default();
        for &s in &members {
            let goal = absorb && self.goal[s];
            chain.goal.push(goal);
            if goal {
                chain.rows.push(vec![(local[s], Rational::one())]);
                chain.costs.push(Rational::zero());
                continue;
            }
            let c = self
                .choice(s, actions[s].unwrap())
                .ok_or_else(|| Error::InvalidProblem("strategy picks a disabled action".into()))?;
            let mut row = Vec::with_capacity(c.succ.len());
            for (t, p) in &c.succ {
                if local[*t] == usize::MAX {
                    return Err(Error::InvalidProblem("strategy leaves its domain".into()));
                }
                row.push((local[*t], p.clone()));
            }
            chain.rows.push(row);
            chain.costs.push(c.cost.clone());
        }
        Ok((chain, members))
    }

    /// Expected cost to the goal of a strategy defined on a closed region.
    pub fn evaluate_ssp(&self, actions: &[Option<ActionId>]) -> Result<Vec<Option<Rational>>> {
        let (chain, members) = self.chain(actions, true)?;
        let v: Vec<Rational> = chain.ssp_values()?;
        let mut out = vec![None; self.len()];
        for (k, s) in members.into_iter().enumerate() {
            out[s] = Some(v[k].clone());
        }
        Ok(out)
    }

    /// Gain and bias of a strategy defined everywhere.
    pub fn evaluate_emp(&self, actions: &[Option<ActionId>]) -> Result<(Vec<Rational>, Vec<Rational>)> {
        if actions.iter().any(|a| a.is_none()) {
            return Err(Error::InvalidProblem("strategy must be total".into()));
        }
        let (chain, _) = self.chain(actions, false)?;
        chain.gain_bias()
    }
}

fn expect(succ: &[(usize, Rational)], x: &[Rational]) -> Rational {
    succ.iter().fold(Rational::zero(), |acc, (t, p)| acc + p * &x[*t])
}

/// Per-state strategy iteration for the expected truncated sum.
pub fn explicit_ssp_oracle<E>(e: &ExplicitMdp<E>) -> Result<ExplicitSolution> {
    let (proper, mut actions) = e.prob1();
    if !proper.iter().any(|&p| p) || e.initial.is_some_and(|i| !proper[i]) {
        return Err(Error::NoProperState);
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let values = e.evaluate_ssp(&actions)?;
        let v: Vec<Rational> = values.iter().map(|x| x.clone().unwrap_or_default()).collect();
        let mut changed = false;
        for s in 0..e.len() {
            if !proper[s] || e.goal[s] {
                continue;
            }
            let scored: Vec<(ActionId, Rational)> = e.choices[s]
                .iter()
                .filter(|c| c.succ.iter().all(|(t, _)| proper[*t]))
                .map(|c| (c.action, &c.cost + expect(&c.succ, &v)))
                .collect();
            let best = scored.iter().map(|(_, l)| l).min().unwrap();
            if *best < v[s] {
                actions[s] = scored.iter().find(|(_, l)| l == best).map(|(a, _)| *a);
                changed = true;
            }
        }
        if !changed {
            return Ok(ExplicitSolution {
                actions,
                values,
                bias: None,
                iterations,
            });
        }
    }
}

/// Howard's multichain strategy iteration for the mean payoff.
pub fn explicit_emp_oracle<E>(e: &ExplicitMdp<E>) -> Result<ExplicitSolution> {
    let mut actions: Vec<Option<ActionId>> = e.choices.iter().map(|c| Some(c[0].action)).collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (g, b) = e.evaluate_emp(&actions)?;
        let mut changed = false;
        for s in 0..e.len() {
            let scored: Vec<(ActionId, Rational)> = e.choices[s]
                .iter()
                .map(|c| (c.action, expect(&c.succ, &g)))
                .collect();
            let best = scored.iter().map(|(_, q)| q).min().unwrap();
            if *best < g[s] {
                actions[s] = scored.iter().find(|(_, q)| q == best).map(|(a, _)| *a);
                changed = true;
            }
        }
        if !changed {
            for s in 0..e.len() {
                let scored: Vec<(ActionId, Rational)> = e.choices[s]
                    .iter()
                    .filter(|c| expect(&c.succ, &g) == g[s])
                    .map(|c| (c.action, &c.cost - &g[s] + expect(&c.succ, &b)))
                    .collect();
                let best = scored.iter().map(|(_, r)| r).min().unwrap();
                if *best < b[s] {
                    actions[s] = scored.iter().find(|(_, r)| r == best).map(|(a, _)| *a);
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(ExplicitSolution {
                actions,
                values: g.into_iter().map(Some).collect(),
                bias: Some(b),
                iterations,
            });
        }
    }
}

/// Coarsest partition of the strategy's domain with equal costs and equal
/// probabilities into every block, by naive iterated refinement. States in
/// `absorbing` form one block of their own.
pub fn explicit_lump_oracle<E>(
    e: &ExplicitMdp<E>,
    actions: &[Option<ActionId>],
    absorbing: &[bool],
) -> Vec<Vec<usize>> {
    let members: Vec<usize> = (0..e.len()).filter(|&s| actions[s].is_some()).collect();
    let info = |s: usize| e.choice(s, actions[s].unwrap()).expect("strategy picks an enabled action");
    let mut block: HashMap<usize, usize> = HashMap::new();
    let mut keys: BTreeMap<Option<Rational>, usize> = BTreeMap::new();
    for &s in &members {
        let key = if absorbing[s] { None } else { Some(info(s).cost.clone()) };
        let next = keys.len();
        block.insert(s, *keys.entry(key).or_insert(next));
    }
    let mut count = keys.len();
    loop {
        let mut sigs: BTreeMap<(usize, Vec<(usize, Rational)>), usize> = BTreeMap::new();
        let mut next_block = HashMap::new();
        for &s in &members {
            let mut out: BTreeMap<usize, Rational> = BTreeMap::new();
            if !absorbing[s] {
                for (t, p) in &info(s).succ {
                    *out.entry(block[t]).or_insert_with(Rational::zero) += p;
                }
            }
            let key = (block[&s], out.into_iter().collect());
            let fresh = sigs.len();
            next_block.insert(s, *sigs.entry(key).or_insert(fresh));
        }
        block = next_block;
        if sigs.len() == count {
            break;
        }
        count = sigs.len();
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &s in &members {
        groups.entry(block[&s]).or_default().push(s);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Agreement between the symbolic solver and the enumerative baseline.
#[derive(Clone, Debug)]
pub struct Comparison {
    pub states: usize,
    pub symbolic_value: Option<Rational>,
    pub explicit_value: Option<Rational>,
    /// Values equal on every state where both are defined.
    pub values_match: bool,
    /// The symbolic strategy, evaluated state by state, attains the
    /// baseline's optimal values.
    pub strategy_match: bool,
}

impl Comparison {
    pub fn matches(&self) -> bool {
        self.values_match && self.strategy_match
    }
}

/// Per-state actions of a symbolic strategy.
pub fn lift_strategy<E: Lattice>(e: &ExplicitMdp<E>, report: &SolveReport<E>) -> Vec<Option<ActionId>> {
    e.states.iter().map(|s| report.strategy.lookup(s).copied()).collect()
}

pub fn compare<M: MonotonicMdp>(mdp: &M, objective: Objective, cap: u128) -> Result<Comparison> {
    let e = enumerate_states(mdp, cap)?;
    let (report, oracle) = match objective {
        Objective::Ssp => (solve_ssp(mdp, SolveOptions::default())?, explicit_ssp_oracle(&e)?),
        Objective::Emp => (solve_emp(mdp, SolveOptions::default())?, explicit_emp_oracle(&e)?),
    };
    compare_with(&e, &report, &oracle, objective)
}

pub fn compare_with<E: Lattice>(
    e: &ExplicitMdp<E>,
    report: &SolveReport<E>,
    oracle: &ExplicitSolution,
    objective: Objective,
) -> Result<Comparison> {
    let lifted: Vec<Option<Rational>> = e.states.iter().map(|s| report.value_at(s).cloned()).collect();
    let values_match = lifted == oracle.values;
    let actions = lift_strategy(e, report);
    let evaluated: Vec<Option<Rational>> = match objective {
        Objective::Ssp => e.evaluate_ssp(&actions)?,
        Objective::Emp => e.evaluate_emp(&actions)?.0.into_iter().map(Some).collect(),
    };
    let strategy_match = evaluated == oracle.values;
    Ok(Comparison {
        states: e.len(),
        symbolic_value: report.initial_value().cloned(),
        explicit_value: e.initial.and_then(|i| oracle.values[i].clone()),
        values_match,
        strategy_match,
    })
}
