//! Symbolic strategy iteration: proper states, the improvement step and the
//! shortest-path and mean-payoff drivers.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::lumping::{lump, strategy_dist_partition, LumpResult, Splitter};
use crate::mdp::{allow_region, enabled_region, pre_sigma_tau, strategies_equal, ActionId, MonotonicMdp, PaPartition, Strategy};
use crate::pseudo::PseudoAntichain;
use crate::quotient::{build_quotient, solve_gain_bias, solve_ssp_values, Chain};
use crate::strips::Objective;
use crate::Rational;

type Pa<E> = PseudoAntichain<E>;

/// Greatest fixpoint of the almost-sure reachability operator together with
/// the attractor layers of its last inner fixpoint.
pub struct ProperStates<E> {
    pub region: Pa<E>,
    /// `layers[k]`: states reaching the goal within `k` progress steps.
    pub layers: Vec<Pa<E>>,
    /// `steps[k][σ]`: states where `σ` keeps every successor proper and
    /// reaches `layers[k]` with positive probability.
    pub steps: Vec<Vec<Pa<E>>>,
    pub outer_iterations: usize,
}

fn goal_region<M: MonotonicMdp>(mdp: &M) -> Result<Pa<M::Elem>> {
    let g = mdp
        .goal()
        .ok_or_else(|| Error::InvalidProblem("the shortest-path objective needs a goal".into()))?;
    Ok(g.intersect(&mdp.states()))
}

fn attractor<M: MonotonicMdp>(mdp: &M, goal: &Pa<M::Elem>, safe: &Pa<M::Elem>) -> (Vec<Pa<M::Elem>>, Vec<Vec<Pa<M::Elem>>>) {
    let allows: Vec<_> = (0..mdp.num_actions())
        .map(|a| allow_region(mdp, a, safe))
        .collect();
    let mut reach: Vec<Pa<M::Elem>> = vec![Pa::empty(); mdp.num_actions()];
    let mut layers = vec![goal.clone()];
    let mut steps = Vec::new();
    let mut fresh = goal.clone();
    loop {
        let current = layers.last().unwrap().clone();
        let mut step = Vec::with_capacity(mdp.num_actions());
        let mut next = current.clone();
        for (a, allow) in allows.iter().enumerate() {
            for t in 0..mdp.num_effects(a) {
                reach[a] = reach[a].union(&pre_sigma_tau(mdp, &fresh, a, t));
            }
            let s = allow.intersect(&reach[a]);
            next = next.union(&s);
            step.push(s);
        }
        steps.push(step);
        fresh = next.difference(&current);
        if fresh.is_empty() {
            return (layers, steps);
        }
        layers.push(next);
    }
}

/// States from which some strategy reaches the goal with probability 1.
pub fn proper_states<M: MonotonicMdp>(mdp: &M) -> Result<ProperStates<M::Elem>> {
    let goal = goal_region(mdp)?;
    let mut safe = mdp.states();
    let mut outer = 0;
    loop {
        outer += 1;
        let (layers, steps) = attractor(mdp, &goal, &safe);
        let reached = layers.last().unwrap().intersect(&safe);
        if reached.set_eq(&safe) {
            return Ok(ProperStates {
                region: safe,
                layers,
                steps,
                outer_iterations: outer,
            });
        }
        safe = reached;
    }
}

/// Partition of `region` by the first enabled action.
pub fn first_enabled_strategy<M: MonotonicMdp>(mdp: &M, region: &Pa<M::Elem>) -> Strategy<M::Elem> {
    let mut rest = region.clone();
    let mut blocks = Vec::new();
    for a in 0..mdp.num_actions() {
        let r = rest.intersect(&enabled_region(mdp, a));
        if !r.is_empty() {
            rest = rest.difference(&r);
            blocks.push((r, a));
        }
    }
    PaPartition::new(blocks)
}

/// A strategy on the proper region reaching the goal with probability 1:
/// each layer moves towards the previous one, the goal takes its first
/// enabled action.
pub fn initial_proper_strategy<M: MonotonicMdp>(mdp: &M, proper: &ProperStates<M::Elem>) -> Strategy<M::Elem> {
    let mut blocks = first_enabled_strategy(mdp, &proper.layers[0]).blocks;
    for k in 1..proper.layers.len() {
        let mut fresh = proper.layers[k].difference(&proper.layers[k - 1]);
        for (a, step) in proper.steps[k - 1].iter().enumerate() {
            let r = fresh.intersect(step);
            if !r.is_empty() {
                fresh = fresh.difference(&r);
                blocks.push((r, a));
            }
        }
        debug_assert!(fresh.is_empty());
    }
    PaPartition::new(blocks).merge_equal()
}

/// Region where `action` induces one fixed vector of probabilities into the
/// lumped blocks and one cost.
#[derive(Clone, Debug)]
pub struct Signature<E> {
    pub region: Pa<E>,
    pub cost: Rational,
    /// `(block, probability)` with positive probabilities.
    pub probs: Vec<(usize, Rational)>,
}

impl<E> Signature<E> {
    pub fn expect(&self, x: &[Rational]) -> Rational {
        self.probs
            .iter()
            .fold(Rational::zero(), |acc, (c, p)| acc + p * &x[*c])
    }
}

/// Splits `S_σ ∩ region` by the probability of entering each lumped block,
/// then by cost. Each effect sends a state into exactly one block, so the
/// states are first grouped by their tuple of successor blocks; groups with
/// equal probabilities and cost are then merged.
pub fn signature_partition<M: MonotonicMdp>(
    mdp: &M,
    action: ActionId,
    region: &Pa<M::Elem>,
    lumped: &LumpResult<M::Elem>,
) -> Result<Vec<Signature<M::Elem>>> {
    let start = enabled_region(mdp, action).intersect(region);
    if start.is_empty() {
        return Ok(Vec::new());
    }
    let dists = mdp.dist_partition(action);
    let mut parts = Vec::new();
    for (d, dist) in &dists.blocks {
        let r = start.intersect(d);
        if !r.is_empty() {
            parts.push((r, BTreeMap::new(), dist));
        }
    }
    for t in 0..mdp.num_effects(action) {
        if !start.is_subset(&pre_sigma_tau(mdp, lumped.domain(), action, t)) {
            return Err(Error::InvalidProblem(format!(
                "action `{}` leaves the lumped region",
                mdp.action_name(action)
            )));
        }
        let pres: Vec<Pa<M::Elem>> = lumped
            .blocks
            .iter()
            .map(|b| pre_sigma_tau(mdp, &b.region, action, t).intersect(&start))
            .collect();
        let mut next = Vec::with_capacity(parts.len());
        for (d, probs, dist) in parts {
            for (c, pre) in pres.iter().enumerate() {
                if pre.is_disjoint(&d) {
                    continue;
                }
                let piece = d.intersect(pre);
                let mut probs = probs.clone();
                if let Some(p) = dist.get(t).filter(|p| !p.is_zero()) {
                    *probs.entry(c).or_insert_with(Rational::zero) += p;
                }
                next.push((piece, probs, dist));
            }
        }
        parts = next;
    }
    let costs = mdp.cost_partition(action);
    let mut merged: BTreeMap<(Vec<(usize, Rational)>, Rational), Pa<M::Elem>> = BTreeMap::new();
    for (d, probs, _) in parts {
        let probs: Vec<(usize, Rational)> = probs.into_iter().collect();
        for (r, cost) in &costs.blocks {
            let region = d.intersect(r);
            if region.is_empty() {
                continue;
            }
            let slot = merged.entry((probs.clone(), cost.clone())).or_default();
            *slot = slot.union(&region);
        }
    }
    Ok(merged
        .into_iter()
        .map(|((probs, cost), region)| Signature { region, cost, probs })
        .collect())
}

/// [`signature_partition`] obtained by splitting against one lumped block
/// at a time, keeping apart groups with equal probabilities.
pub fn signature_partition_by_split<M: MonotonicMdp>(
    mdp: &M,
    action: ActionId,
    region: &Pa<M::Elem>,
    lumped: &LumpResult<M::Elem>,
) -> Result<Vec<Signature<M::Elem>>> {
    let start = enabled_region(mdp, action).intersect(region);
    if start.is_empty() {
        return Ok(Vec::new());
    }
    let constant = PaPartition::single(start.clone(), action);
    let dists = strategy_dist_partition(mdp, &constant);
    let mut parts: Vec<(Pa<M::Elem>, Vec<(usize, Rational)>, Rational)> = vec![(start, Vec::new(), Rational::zero())];
    for (c, block) in lumped.blocks.iter().enumerate() {
        let splitter = Splitter::new(mdp, &block.region, &constant);
        let mut next = Vec::with_capacity(parts.len());
        for (d, sig, total) in parts {
            if total.is_one() || !splitter.reaches(&d) {
                next.push((d, sig, total));
                continue;
            }
            for (p, part) in splitter.split(&d, &dists) {
                let mut sig = sig.clone();
                let total = &total + &p;
                if !p.is_zero() {
                    sig.push((c, p));
                }
                next.push((part, sig, total));
            }
        }
        parts = next;
    }
    if parts.iter().any(|(_, _, t)| !t.is_one()) {
        return Err(Error::InvalidProblem(format!(
            "action `{}` leaves the lumped region",
            mdp.action_name(action)
        )));
    }
    let costs = mdp.cost_partition(action);
    let mut out = Vec::new();
    for (d, probs, _) in parts {
        for (r, cost) in &costs.blocks {
            let region = d.intersect(r);
            if !region.is_empty() {
                out.push(Signature {
                    region,
                    cost: cost.clone(),
                    probs: probs.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// A region where switching to `action` strictly improves, with the score
/// used to order switches.
#[derive(Clone, Debug)]
struct Candidate<E> {
    region: Pa<E>,
    action: ActionId,
    score: Rational,
}

/// Each signature region cut by the lumped blocks, as `(region, block)`.
fn by_block<'a, E: Lattice>(
    sigs: &'a [Signature<E>],
    lumped: &'a LumpResult<E>,
) -> impl Iterator<Item = (&'a Signature<E>, Pa<E>, usize)> + 'a {
    sigs.iter().flat_map(move |s| {
        lumped
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| !b.absorbing && !b.region.is_disjoint(&s.region))
            .map(move |(i, b)| (s, s.region.intersect(&b.region), i))
    })
}

/// Applies the switches in order of decreasing score, later ones winning,
/// and returns the strategy with one block per action.
fn apply_switches<E: Lattice>(strategy: &Strategy<E>, mut list: Vec<Candidate<E>>) -> Strategy<E> {
    list.sort_by(|a, b| b.score.cmp(&a.score));
    let mut regions: BTreeMap<ActionId, Pa<E>> = strategy
        .merge_equal()
        .blocks
        .into_iter()
        .map(|(r, a)| (a, r))
        .collect();
    for c in list {
        for (a, r) in regions.iter_mut() {
            if *a != c.action && !r.is_disjoint(&c.region) {
                *r = r.difference(&c.region);
            }
        }
        let r = regions.entry(c.action).or_default();
        *r = r.union(&c.region);
    }
    PaPartition::new(regions.into_iter().map(|(a, r)| (r, a)).collect())
}

/// One improvement step for the expected truncated sum. `regions[σ]` is
/// where `σ` may be chosen.
pub fn improve_strategy_ssp<M: MonotonicMdp>(
    mdp: &M,
    strategy: &Strategy<M::Elem>,
    lumped: &LumpResult<M::Elem>,
    values: &[Rational],
    regions: &[Pa<M::Elem>],
) -> Result<(Strategy<M::Elem>, bool)> {
    let mut list = Vec::new();
    for (a, region) in regions.iter().enumerate() {
        let sigs = signature_partition(mdp, a, region, lumped)?;
        for (sig, region, block) in by_block(&sigs, lumped) {
            let l = &sig.cost + sig.expect(values);
            if l < values[block] {
                list.push(Candidate { region, action: a, score: l });
            }
        }
    }
    let next = apply_switches(strategy, list);
    let changed = !strategies_equal(&next, strategy)?;
    Ok((next, changed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmpStage {
    Unchanged,
    Gain,
    Bias,
}

/// Two-stage improvement for the mean payoff: first on `Σ P·g`, and when
/// that changes nothing, on `C - g + Σ P·b` among gain-preserving actions.
pub fn improve_strategy_emp<M: MonotonicMdp>(
    mdp: &M,
    strategy: &Strategy<M::Elem>,
    lumped: &LumpResult<M::Elem>,
    gain: &[Rational],
    bias: &[Rational],
) -> Result<(Strategy<M::Elem>, EmpStage)> {
    let states = mdp.states();
    let mut gain_list = Vec::new();
    let mut bias_list = Vec::new();
    for a in 0..mdp.num_actions() {
        let sigs = signature_partition(mdp, a, &states, lumped)?;
        for (sig, region, block) in by_block(&sigs, lumped) {
            let q = sig.expect(gain);
            if q < gain[block] {
                gain_list.push(Candidate { region, action: a, score: q });
            } else if q == gain[block] {
                let r = &sig.cost - &gain[block] + sig.expect(bias);
                if r < bias[block] {
                    bias_list.push(Candidate { region, action: a, score: r });
                }
            }
        }
    }
    let (list, stage) = if !gain_list.is_empty() {
        (gain_list, EmpStage::Gain)
    } else {
        (bias_list, EmpStage::Bias)
    };
    let next = apply_switches(strategy, list);
    if strategies_equal(&next, strategy)? {
        return Ok((next, EmpStage::Unchanged));
    }
    Ok((next, stage))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Timings {
    pub lump: Duration,
    pub solve: Duration,
    pub improve: Duration,
    pub total: Duration,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    /// Also solve every quotient in `f64` and record the worst residual.
    pub float_check: bool,
}

#[derive(Clone, Debug)]
pub struct SolveReport<E: Lattice> {
    pub objective: Objective,
    pub strategy: Strategy<E>,
    /// Expected cost to the goal, or gain, per final lumped block.
    pub values: PaPartition<E, Rational>,
    pub bias: Option<PaPartition<E, Rational>>,
    pub lumped: LumpResult<E>,
    pub proper: Option<Pa<E>>,
    pub iterations: usize,
    pub max_quotient_blocks: usize,
    pub gain_improvements: usize,
    pub bias_improvements: usize,
    /// Value at the initial state after each evaluation.
    pub initial_trace: Vec<Rational>,
    /// Worst exact residual over all solved quotients.
    pub residual: Rational,
    pub float_residual: Option<f64>,
    pub timings: Timings,
}

impl<E: Lattice> SolveReport<E> {
    pub fn value_at(&self, s: &E) -> Option<&Rational> {
        self.values.lookup(s)
    }

    pub fn initial_value(&self) -> Option<&Rational> {
        self.initial_trace.last()
    }
}

fn worst(a: Rational, b: Rational) -> Rational {
    if b > a {
        b
    } else {
        a
    }
}

fn float_residual(chain: &Chain, objective: Objective) -> Result<f64> {
    Ok(match objective {
        Objective::Ssp => chain.ssp_residual(&chain.ssp_values::<f64>()?),
        Objective::Emp => {
            let (g, b) = chain.gain_bias::<f64>()?;
            chain.gain_bias_residual(&g, &b)
        }
    })
}

fn partition_of<E: Lattice>(lumped: &LumpResult<E>, x: &[Rational]) -> PaPartition<E, Rational> {
    PaPartition {
        blocks: lumped
            .blocks
            .iter()
            .zip(x)
            .map(|(b, v)| (b.region.clone(), v.clone()))
            .collect(),
    }
}

/// Minimal expected truncated sum to the goal over proper strategies.
pub fn solve_ssp<M: MonotonicMdp>(mdp: &M, opts: SolveOptions) -> Result<SolveReport<M::Elem>> {
    let start = Instant::now();
    let goal = goal_region(mdp)?;
    let proper = proper_states(mdp)?;
    let sp = proper.region.clone();
    match mdp.initial_state() {
        Some(s) if !sp.contains(&s) => return Err(Error::NoProperState),
        _ if sp.is_empty() => return Err(Error::NoProperState),
        _ => {}
    }
    let moving = sp.difference(&goal);
    let regions: Vec<_> = (0..mdp.num_actions())
        .map(|a| allow_region(mdp, a, &sp).intersect(&moving))
        .collect();
    let mut strategy = initial_proper_strategy(mdp, &proper);
    let mut timings = Timings::default();
    let mut iterations = 0;
    let mut max_blocks = 0;
    let mut trace = Vec::new();
    let mut residual = Rational::zero();
    let mut fres: Option<f64> = None;
    loop {
        iterations += 1;
        let t = Instant::now();
        let lumped = lump(mdp, &strategy, Some(&goal));
        timings.lump += t.elapsed();
        max_blocks = max_blocks.max(lumped.len());

        let t = Instant::now();
        let q = build_quotient(mdp, &lumped, &strategy, Some(&goal))?;
        let v = solve_ssp_values(&q)?;
        residual = worst(residual, q.chain.ssp_residual(&v));
        if opts.float_check {
            let r = float_residual(&q.chain, Objective::Ssp)?;
            fres = Some(fres.map_or(r, |m| m.max(r)));
        }
        if let Some(i) = mdp.initial_state().and_then(|s| lumped.position(&s)) {
            trace.push(v[i].clone());
        }
        timings.solve += t.elapsed();

        let t = Instant::now();
        let (next, changed) = improve_strategy_ssp(mdp, &strategy, &lumped, &v, &regions)?;
        timings.improve += t.elapsed();
        if !changed {
            timings.total = start.elapsed();
            return Ok(SolveReport {
                objective: Objective::Ssp,
                strategy,
                values: partition_of(&lumped, &v),
                bias: None,
                lumped,
                proper: Some(sp),
                iterations,
                max_quotient_blocks: max_blocks,
                gain_improvements: 0,
                bias_improvements: 0,
                initial_trace: trace,
                residual,
                float_residual: fres,
                timings,
            });
        }
        strategy = next;
    }
}

/// Minimal expected mean payoff.
pub fn solve_emp<M: MonotonicMdp>(mdp: &M, opts: SolveOptions) -> Result<SolveReport<M::Elem>> {
    let start = Instant::now();
    let mut strategy = first_enabled_strategy(mdp, &mdp.states());
    let mut timings = Timings::default();
    let mut iterations = 0;
    let mut max_blocks = 0;
    let mut trace = Vec::new();
    let mut residual = Rational::zero();
    let mut fres: Option<f64> = None;
    let mut gain_steps = 0;
    let mut bias_steps = 0;
    loop {
        iterations += 1;
        let t = Instant::now();
        let lumped = lump(mdp, &strategy, None);
        timings.lump += t.elapsed();
        max_blocks = max_blocks.max(lumped.len());

        let t = Instant::now();
        let q = build_quotient(mdp, &lumped, &strategy, None)?;
        let (g, b) = solve_gain_bias(&q)?;
        residual = worst(residual, q.chain.gain_bias_residual(&g, &b));
        if opts.float_check {
            let r = float_residual(&q.chain, Objective::Emp)?;
            fres = Some(fres.map_or(r, |m| m.max(r)));
        }
        if let Some(i) = mdp.initial_state().and_then(|s| lumped.position(&s)) {
            trace.push(g[i].clone());
        }
        timings.solve += t.elapsed();

        let t = Instant::now();
        let (next, stage) = improve_strategy_emp(mdp, &strategy, &lumped, &g, &b)?;
        timings.improve += t.elapsed();
        match stage {
            EmpStage::Gain => gain_steps += 1,
            EmpStage::Bias => bias_steps += 1,
            EmpStage::Unchanged => {
                timings.total = start.elapsed();
                return Ok(SolveReport {
                    objective: Objective::Emp,
                    strategy,
                    values: partition_of(&lumped, &g),
                    bias: Some(partition_of(&lumped, &b)),
                    lumped,
                    proper: None,
                    iterations,
                    max_quotient_blocks: max_blocks,
                    gain_improvements: gain_steps,
                    bias_improvements: bias_steps,
                    initial_trace: trace,
                    residual,
                    float_residual: fres,
                    timings,
                });
            }
        }
        strategy = next;
    }
}

fn block_values<E: Lattice>(report: &SolveReport<E>) -> Vec<Rational> {
    report.values.blocks.iter().map(|(_, v)| v.clone()).collect()
}

/// Optimality of a shortest-path report: no allowed action scores below the
/// value on any block, and the chosen action scores exactly the value.
pub fn bellman_check_ssp<M: MonotonicMdp>(mdp: &M, report: &SolveReport<M::Elem>) -> Result<bool> {
    let goal = goal_region(mdp)?;
    let sp = report.proper.clone().unwrap_or_else(|| mdp.states());
    let moving = sp.difference(&goal);
    let v = block_values(report);
    for a in 0..mdp.num_actions() {
        let allowed = allow_region(mdp, a, &sp).intersect(&moving);
        let chosen = report
            .strategy
            .blocks
            .iter()
            .filter(|(_, b)| *b == a)
            .fold(Pa::empty(), |acc, (r, _)| acc.union(r))
            .intersect(&moving);
        if !chosen.is_subset(&allowed) {
            return Ok(false);
        }
        let sigs = signature_partition(mdp, a, &allowed, &report.lumped)?;
        for (sig, region, block) in by_block(&sigs, &report.lumped) {
            let l = &sig.cost + sig.expect(&v);
            if l < v[block] || (l != v[block] && !region.is_disjoint(&chosen)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Optimality of a mean-payoff report under the two-stage conditions.
pub fn bellman_check_emp<M: MonotonicMdp>(mdp: &M, report: &SolveReport<M::Elem>) -> Result<bool> {
    let g = block_values(report);
    let b: Vec<Rational> = match &report.bias {
        Some(p) => p.blocks.iter().map(|(_, v)| v.clone()).collect(),
        None => return Ok(false),
    };
    let (_, stage) = improve_strategy_emp(mdp, &report.strategy, &report.lumped, &g, &b)?;
    Ok(stage == EmpStage::Unchanged)
}
