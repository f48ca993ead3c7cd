//! Monotonic stochastic STRIPS problems and their reduction to monotonic MDPs.
//!
//! States are sets of true conditions, ordered by reverse inclusion (a state
//! with more true conditions is smaller). Under that order an operator is
//! enabled on a downward-closed set (all supersets of its guard), successors
//! `(s ∪ add) \ del` are monotone in `s`, and the goal `{s | s ⊇ M}` is
//! closed. The maximal predecessor of `↓{x}` through an effect is the single
//! set `(x \ add) ∪ guard`, or nothing when the effect deletes part of `x`.
//!
//! # Text format
//!
//! ```text
//! # comment
//! conditions: a b c
//! init: a
//! goal: c
//! operator step
//!   guard: a
//!   cost: 2
//!   effect: 1/2 => add(b) del(a)
//!   effect: 1/2 => add() del()
//! ```
//!
//! Rationals are written `n` or `n/d`. Names may be separated by spaces or
//! commas. `conditions:` must come before any line naming a condition.
//! Problems whose states fail every guard get an extra `_stutter` action
//! (no guard, identity effect, cost 1) so that no state is blocking.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{Antichain, CondSet, Enumerable, SupersetLattice, MAX_CONDITIONS};
use crate::mdp::{ActionId, MonotonicMdp, PaPartition};
use crate::pseudo::PseudoAntichain;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Effect {
    pub probability: Rational,
    pub add: CondSet,
    pub del: CondSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operator {
    pub name: String,
    pub guard: CondSet,
    pub cost: Rational,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MssProblem {
    pub conditions: Vec<String>,
    pub init: CondSet,
    pub goal: CondSet,
    pub operators: Vec<Operator>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Ssp,
    Emp,
}

pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if t.is_empty() || t.contains(char::is_whitespace) {
        return None;
    }
    let r = Rational::from_str(t).ok()?;
    Some(r)
}

pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn split_names(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

struct Parser {
    conditions: Vec<String>,
    index: HashMap<String, usize>,
}

impl Parser {
    fn resolve(&self, line: usize, text: &str) -> Result<CondSet> {
        let mut set = CondSet::EMPTY;
        for name in split_names(text) {
            let &i = self
                .index
                .get(name)
                .ok_or_else(|| Error::UndeclaredCondition {
                    line,
                    name: name.to_string(),
                })?;
            set = set.union(&CondSet::from_indices([i]));
        }
        Ok(set)
    }

    fn effect(&self, line: usize, text: &str) -> Result<Effect> {
        let syntax = |m: &str| Error::Syntax {
            line,
            message: m.to_string(),
        };
        let (prob, rest) = text
            .split_once("=>")
            .ok_or_else(|| syntax("expected `PROBABILITY => add(...) del(...)`"))?;
        let probability =
            parse_rational(prob).ok_or_else(|| syntax(&format!("bad probability `{}`", prob.trim())))?;
        if !probability.is_positive() || probability > Rational::one() {
            return Err(syntax("probability must lie in (0, 1]"));
        }
        let mut add = None;
        let mut del = None;
        let mut rest = rest.trim();
        while !rest.is_empty() {
            let (key, after) = rest
                .split_once('(')
                .ok_or_else(|| syntax("expected `add(...)` or `del(...)`"))?;
            let (inner, tail) = after
                .split_once(')')
                .ok_or_else(|| syntax("unclosed parenthesis"))?;
            let slot = match key.trim() {
                "add" => &mut add,
                "del" => &mut del,
                other => return Err(syntax(&format!("unknown effect part `{other}`"))),
            };
            if slot.is_some() {
                return Err(syntax(&format!("repeated `{}`", key.trim())));
            }
            *slot = Some(self.resolve(line, inner)?);
            rest = tail.trim();
        }
        Ok(Effect {
            probability,
            add: add.unwrap_or_default(),
            del: del.unwrap_or_default(),
        })
    }
}

struct PendingOp {
    line: usize,
    op: Operator,
    has_cost: bool,
}

fn finish_op(p: PendingOp, ops: &mut Vec<Operator>) -> Result<()> {
    if !p.has_cost {
        return Err(Error::Syntax {
            line: p.line,
            message: format!("operator `{}` has no cost", p.op.name),
        });
    }
    if p.op.effects.is_empty() {
        return Err(Error::Syntax {
            line: p.line,
            message: format!("operator `{}` has no effect", p.op.name),
        });
    }
    let sum: Rational = p.op.effects.iter().map(|e| e.probability.clone()).sum();
    if !sum.is_one() {
        return Err(Error::ProbabilitySum {
            line: p.line,
            operator: p.op.name.clone(),
            sum: fmt_rational(&sum),
        });
    }
    ops.push(p.op);
    Ok(())
}

impl MssProblem {
    pub fn parse(text: &str) -> Result<Self> {
        let mut parser = Parser {
            conditions: Vec::new(),
            index: HashMap::new(),
        };
        let mut declared = false;
        let mut init = None;
        let mut goal = None;
        let mut operators: Vec<Operator> = Vec::new();
        let mut names = BTreeSet::new();
        let mut current: Option<PendingOp> = None;

        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let syntax = |m: String| Error::Syntax { line, message: m };
            let indented = content.starts_with(char::is_whitespace);
            let content = content.trim();

            if indented {
                let Some(pending) = current.as_mut() else {
                    return Err(syntax("indented line outside an operator".into()));
                };
                let (key, value) = content
                    .split_once(':')
                    .ok_or_else(|| syntax(format!("expected `key: value`, got `{content}`")))?;
                match key.trim() {
                    "guard" => pending.op.guard = parser.resolve(line, value)?,
                    "cost" => {
                        pending.op.cost = parse_rational(value)
                            .ok_or_else(|| syntax(format!("bad cost `{}`", value.trim())))?;
                        pending.has_cost = true;
                    }
                    "effect" => {
                        let e = parser.effect(line, value)?;
                        pending.op.effects.push(e);
                    }
                    other => return Err(syntax(format!("unknown operator field `{other}`"))),
                }
                continue;
            }

            if let Some(p) = current.take() {
                finish_op(p, &mut operators)?;
            }
            if let Some(name) = content.strip_prefix("operator") {
                let name = name.trim();
                if !content.starts_with("operator ") || !valid_name(name) {
                    return Err(syntax(format!("bad operator header `{content}`")));
                }
                if !declared {
                    return Err(syntax("`conditions:` must come first".into()));
                }
                if !names.insert(name.to_string()) {
                    return Err(Error::DuplicateOperator {
                        line,
                        name: name.to_string(),
                    });
                }
                current = Some(PendingOp {
                    line,
                    op: Operator {
                        name: name.to_string(),
                        guard: CondSet::EMPTY,
                        cost: Rational::zero(),
                        effects: Vec::new(),
                    },
                    has_cost: false,
                });
                continue;
            }
            let (key, value) = content
                .split_once(':')
                .ok_or_else(|| syntax(format!("unrecognised line `{content}`")))?;
            match key.trim() {
                "conditions" => {
                    if declared {
                        return Err(syntax("`conditions:` declared twice".into()));
                    }
                    for name in split_names(value) {
                        if !valid_name(name) {
                            return Err(syntax(format!("bad condition name `{name}`")));
                        }
                        if parser.index.contains_key(name) {
                            return Err(syntax(format!("condition `{name}` declared twice")));
                        }
                        parser.index.insert(name.to_string(), parser.conditions.len());
                        parser.conditions.push(name.to_string());
                    }
                    if parser.conditions.is_empty() {
                        return Err(syntax("at least one condition is required".into()));
                    }
                    if parser.conditions.len() > MAX_CONDITIONS {
                        return Err(syntax(format!("more than {MAX_CONDITIONS} conditions")));
                    }
                    declared = true;
                }
                "init" | "goal" => {
                    if !declared {
                        return Err(syntax("`conditions:` must come first".into()));
                    }
                    let set = parser.resolve(line, value)?;
                    let slot = if key.trim() == "init" { &mut init } else { &mut goal };
                    if slot.replace(set).is_some() {
                        return Err(syntax(format!("`{}:` given twice", key.trim())));
                    }
                }
                other => return Err(syntax(format!("unknown key `{other}`"))),
            }
        }
        if let Some(p) = current.take() {
            finish_op(p, &mut operators)?;
        }
        if !declared {
            return Err(Error::Syntax {
                line: 0,
                message: "missing `conditions:`".into(),
            });
        }
        Ok(MssProblem {
            conditions: parser.conditions,
            init: init.unwrap_or_default(),
            goal: goal.ok_or(Error::Syntax {
                line: 0,
                message: "missing `goal:`".into(),
            })?,
            operators,
        })
    }

    pub fn format_set(&self, s: &CondSet) -> String {
        let names: Vec<&str> = s.indices().map(|i| self.conditions[i].as_str()).collect();
        format!("{{{}}}", names.join(","))
    }

    fn names(&self, s: &CondSet) -> String {
        s.indices()
            .map(|i| self.conditions[i].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Canonical text form; parsing it gives back an equal problem.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "conditions: {}", self.conditions.join(" "));
        let _ = writeln!(out, "init: {}", self.names(&self.init));
        let _ = writeln!(out, "goal: {}", self.names(&self.goal));
        for op in &self.operators {
            let _ = writeln!(out, "operator {}", op.name);
            let _ = writeln!(out, "  guard: {}", self.names(&op.guard));
            let _ = writeln!(out, "  cost: {}", fmt_rational(&op.cost));
            for e in &op.effects {
                let _ = writeln!(
                    out,
                    "  effect: {} => add({}) del({})",
                    fmt_rational(&e.probability),
                    self.names(&e.add),
                    self.names(&e.del)
                );
            }
        }
        out
    }

    /// Problems violating the model constraints for `mode`; empty when valid.
    pub fn validate(&self, mode: Objective) -> Vec<String> {
        let mut diags = Vec::new();
        let universe = CondSet::from_indices(0..self.conditions.len());
        if !universe.is_superset(&self.init) || !universe.is_superset(&self.goal) {
            diags.push("init or goal mentions unknown conditions".to_string());
        }
        let mut seen = BTreeSet::new();
        for op in &self.operators {
            if !seen.insert(op.name.as_str()) {
                diags.push(format!("operator `{}` is declared twice", op.name));
            }
            if op.effects.is_empty() {
                diags.push(format!("operator `{}` has no effect", op.name));
            }
            let sum: Rational = op.effects.iter().map(|e| e.probability.clone()).sum();
            if !sum.is_one() {
                diags.push(format!(
                    "operator `{}`: probabilities sum to {}",
                    op.name,
                    fmt_rational(&sum)
                ));
            }
            if op.effects.iter().any(|e| !e.probability.is_positive()) {
                diags.push(format!("operator `{}`: non-positive probability", op.name));
            }
            if mode == Objective::Ssp && !op.cost.is_positive() {
                diags.push(format!(
                    "operator `{}`: cost {} is not strictly positive",
                    op.name,
                    fmt_rational(&op.cost)
                ));
            }
        }
        if mode == Objective::Ssp && self.goal.is_empty() {
            diags.push("goal must name at least one condition".to_string());
        }
        diags
    }

    pub fn num_states(&self) -> u128 {
        SupersetLattice::new(self.conditions.len()).size()
    }

    /// Same problem with every cost negated (maximisation as minimisation).
    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        for op in &mut p.operators {
            op.cost = -op.cost.clone();
        }
        p
    }
}

/// An [`MssProblem`] seen as a monotonic MDP over [`SupersetLattice`].
#[derive(Clone, Debug)]
pub struct MssMdp {
    problem: MssProblem,
    stutter: bool,
}

impl MssMdp {
    pub fn new(problem: MssProblem) -> Self {
        let stutter = !problem.operators.iter().any(|o| o.guard.is_empty());
        MssMdp { problem, stutter }
    }

    pub fn problem(&self) -> &MssProblem {
        &self.problem
    }

    pub fn has_stutter(&self) -> bool {
        self.stutter
    }

    pub fn lattice(&self) -> SupersetLattice {
        SupersetLattice::new(self.problem.conditions.len())
    }

    fn op(&self, action: ActionId) -> Option<&Operator> {
        self.problem.operators.get(action)
    }

    fn guard(&self, action: ActionId) -> CondSet {
        self.op(action).map_or(CondSet::EMPTY, |o| o.guard)
    }
}

impl MonotonicMdp for MssMdp {
    type Elem = CondSet;

    fn num_actions(&self) -> usize {
        self.problem.operators.len() + usize::from(self.stutter)
    }

    fn action_name(&self, action: ActionId) -> String {
        self.op(action)
            .map_or_else(|| "_stutter".to_string(), |o| o.name.clone())
    }

    fn num_effects(&self, action: ActionId) -> usize {
        self.op(action).map_or(1, |o| o.effects.len())
    }

    fn is_enabled(&self, s: &CondSet, action: ActionId) -> bool {
        s.is_superset(&self.guard(action))
    }

    fn successor(&self, s: &CondSet, action: ActionId, effect: usize) -> CondSet {
        match self.op(action) {
            Some(o) => {
                let e = &o.effects[effect];
                s.union(&e.add).minus(&e.del)
            }
            None => *s,
        }
    }

    fn probability(&self, _s: &CondSet, action: ActionId, effect: usize) -> Rational {
        self.op(action)
            .map_or_else(Rational::one, |o| o.effects[effect].probability.clone())
    }

    fn cost(&self, _s: &CondSet, action: ActionId) -> Rational {
        self.op(action).map_or_else(Rational::one, |o| o.cost.clone())
    }

    fn pre_max(&self, x: &CondSet, action: ActionId, effect: usize) -> Antichain<CondSet> {
        match self.op(action) {
            Some(o) => {
                let e = &o.effects[effect];
                if !x.disjoint(&e.del) {
                    Antichain::empty()
                } else {
                    Antichain::singleton(x.minus(&e.add).union(&o.guard))
                }
            }
            None => Antichain::singleton(*x),
        }
    }

    fn states(&self) -> PseudoAntichain<CondSet> {
        PseudoAntichain::closed(&Antichain::singleton(CondSet::EMPTY))
    }

    fn goal(&self) -> Option<PseudoAntichain<CondSet>> {
        Some(PseudoAntichain::closed(&Antichain::singleton(self.problem.goal)))
    }

    fn dist_partition(&self, action: ActionId) -> PaPartition<CondSet, Vec<Rational>> {
        let dist = (0..self.num_effects(action))
            .map(|t| self.probability(&CondSet::EMPTY, action, t))
            .collect();
        PaPartition::single(
            PseudoAntichain::closed(&Antichain::singleton(self.guard(action))),
            dist,
        )
    }

    fn cost_partition(&self, action: ActionId) -> PaPartition<CondSet, Rational> {
        PaPartition::single(
            PseudoAntichain::closed(&Antichain::singleton(self.guard(action))),
            self.cost(&CondSet::EMPTY, action),
        )
    }

    fn initial_state(&self) -> Option<CondSet> {
        Some(self.problem.init)
    }

    fn enumerate_states(&self, cap: u128) -> Result<Vec<CondSet>> {
        let lat = self.lattice();
        if lat.size() > cap {
            return Err(Error::CapExceeded {
                states: lat.size(),
                cap,
            });
        }
        lat.elements()
    }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

struct Builder {
    conditions: Vec<String>,
    operators: Vec<Operator>,
}

impl Builder {
    fn cond(&mut self, name: String) -> usize {
        self.conditions.push(name);
        self.conditions.len() - 1
    }

    fn op(&mut self, name: String, guard: &[usize], cost: Rational, effects: Vec<(Rational, Vec<usize>, Vec<usize>)>) {
        self.operators.push(Operator {
            name,
            guard: CondSet::from_indices(guard.iter().copied()),
            cost,
            effects: effects
                .into_iter()
                .map(|(p, a, d)| Effect {
                    probability: p,
                    add: CondSet::from_indices(a),
                    del: CondSet::from_indices(d),
                })
                .collect(),
        });
    }
}

/// Monkey-and-bananas benchmark with `sticks` sticks of `pieces` pieces each.
///
/// Conditions: one per piece, one per assembled stick, plus `box`, `stone`,
/// `on_box` and `bananas` (`pieces·sticks + sticks + 4` in total). Picking up
/// a piece succeeds with probability 3/4 and costs 1. Stick `j` is assembled
/// from its pieces at cost `j + 1`, so the sticks differ in building time.
/// The bananas are reached by climbing on the box; grabbing them succeeds
/// with probability 1/20 bare-handed and 9/10 with a stick, and throwing the
/// stone at them succeeds with probability 1/10 but loses the stone.
pub fn gen_monkey(pieces: usize, sticks: usize) -> MssProblem {
    assert!(pieces >= 1 && sticks >= 1, "parameters must be at least 1");
    let mut b = Builder {
        conditions: Vec::new(),
        operators: Vec::new(),
    };
    let mut piece = vec![Vec::new(); sticks];
    for (j, group) in piece.iter_mut().enumerate() {
        for i in 0..pieces {
            group.push(b.cond(format!("piece_{}_{}", j + 1, i + 1)));
        }
    }
    let stick: Vec<usize> = (0..sticks).map(|j| b.cond(format!("stick_{}", j + 1))).collect();
    let bx = b.cond("box".into());
    let stone = b.cond("stone".into());
    let on_box = b.cond("on_box".into());
    let bananas = b.cond("bananas".into());

    for j in 0..sticks {
        for i in 0..pieces {
            b.op(
                format!("get_piece_{}_{}", j + 1, i + 1),
                &[],
                r(1, 1),
                vec![(r(3, 4), vec![piece[j][i]], vec![]), (r(1, 4), vec![], vec![])],
            );
        }
    }
    for j in 0..sticks {
        b.op(
            format!("build_stick_{}", j + 1),
            &piece[j],
            r(j as i64 + 1, 1),
            vec![(r(1, 1), vec![stick[j]], vec![])],
        );
    }
    b.op(
        "get_box".into(),
        &[],
        r(2, 1),
        vec![(r(1, 2), vec![bx], vec![]), (r(1, 2), vec![], vec![])],
    );
    b.op(
        "get_stone".into(),
        &[],
        r(1, 1),
        vec![(r(1, 2), vec![stone], vec![]), (r(1, 2), vec![], vec![])],
    );
    b.op(
        "climb".into(),
        &[bx],
        r(1, 1),
        vec![(r(1, 1), vec![on_box], vec![])],
    );
    b.op(
        "grab_bananas".into(),
        &[on_box],
        r(1, 1),
        vec![(r(1, 20), vec![bananas], vec![]), (r(19, 20), vec![], vec![])],
    );
    for j in 0..sticks {
        b.op(
            format!("grab_with_stick_{}", j + 1),
            &[on_box, stick[j]],
            r(1, 1),
            vec![(r(9, 10), vec![bananas], vec![]), (r(1, 10), vec![], vec![])],
        );
    }
    b.op(
        "throw_stone".into(),
        &[stone],
        r(1, 1),
        vec![(r(1, 10), vec![bananas], vec![stone]), (r(9, 10), vec![], vec![stone])],
    );
    MssProblem {
        conditions: b.conditions,
        init: CondSet::EMPTY,
        goal: CondSet::from_indices([bananas]),
        operators: b.operators,
    }
}

/// Moats-and-castles benchmark: `castles` castles, each protectable by a
/// moat dug to one of `depths` levels.
///
/// Conditions per castle: `moat_k_1..moat_k_d` and `castle_k`
/// (`castles·(depths + 1)` in total). Digging level `i` needs level `i - 1`,
/// costs 1 and succeeds with probability 3/4. Building castle `k` behind a
/// moat of depth `i` costs 2 and survives the waves with probability
/// `(i + 1)/(depths + 2)`, so deeper moats make success likelier.
pub fn gen_moats(depths: usize, castles: usize) -> MssProblem {
    assert!(depths >= 1 && castles >= 1, "parameters must be at least 1");
    let mut b = Builder {
        conditions: Vec::new(),
        operators: Vec::new(),
    };
    let mut moat = vec![Vec::new(); castles];
    let mut castle = Vec::new();
    for (k, levels) in moat.iter_mut().enumerate() {
        for i in 0..depths {
            levels.push(b.cond(format!("moat_{}_{}", k + 1, i + 1)));
        }
        castle.push(b.cond(format!("castle_{}", k + 1)));
    }
    let denom = depths as i64 + 2;
    for k in 0..castles {
        for i in 0..depths {
            let guard: Vec<usize> = if i == 0 { vec![] } else { vec![moat[k][i - 1]] };
            b.op(
                format!("dig_{}_{}", k + 1, i + 1),
                &guard,
                r(1, 1),
                vec![(r(3, 4), vec![moat[k][i]], vec![]), (r(1, 4), vec![], vec![])],
            );
        }
        for i in 0..=depths {
            let guard: Vec<usize> = if i == 0 { vec![] } else { vec![moat[k][i - 1]] };
            let win = r(i as i64 + 1, denom);
            b.op(
                format!("build_{}_{}", k + 1, i),
                &guard,
                r(2, 1),
                vec![(win.clone(), vec![castle[k]], vec![]), (Rational::one() - win, vec![], vec![])],
            );
        }
    }
    MssProblem {
        conditions: b.conditions,
        init: CondSet::EMPTY,
        goal: CondSet::from_indices(castle.iter().copied()),
        operators: b.operators,
    }
}

/// A random problem over `n` conditions, for cross-checking solvers.
pub fn gen_random<R: Rng>(n: usize, rng: &mut R) -> MssProblem {
    assert!((1..=MAX_CONDITIONS).contains(&n));
    let conditions: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let subset = |rng: &mut R, max: usize| {
        let k = rng.gen_range(0..=max.min(n));
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        CondSet::from_indices(idx.into_iter().take(k))
    };
    let dists: [&[(i64, i64)]; 6] = [
        &[(1, 1)],
        &[(1, 2), (1, 2)],
        &[(1, 3), (2, 3)],
        &[(1, 4), (3, 4)],
        &[(1, 2), (1, 4), (1, 4)],
        &[(1, 6), (1, 3), (1, 2)],
    ];
    let num_ops = rng.gen_range(2..=5);
    let mut operators = Vec::new();
    for k in 0..num_ops {
        let guard = subset(rng, 2);
        let cost = r(rng.gen_range(1..=4), *[1, 1, 2].choose(rng).unwrap());
        let dist = dists.choose(rng).unwrap();
        let effects = dist
            .iter()
            .map(|&(p, q)| {
                let add = subset(rng, 2);
                let del = subset(rng, 1).minus(&add);
                Effect {
                    probability: r(p, q),
                    add,
                    del,
                }
            })
            .collect();
        operators.push(Operator {
            name: format!("o{k}"),
            guard,
            cost,
            effects,
        });
    }
    let mut goal = subset(rng, 2);
    if goal.is_empty() {
        goal = CondSet::from_indices([rng.gen_range(0..n)]);
    }
    MssProblem {
        conditions,
        init: subset(rng, 1),
        goal,
        operators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use rand::SeedableRng;

    const SMALL: &str = "conditions: a b c\ninit:\ngoal: b\noperator o\n  guard: a\n  cost: 1\n  effect: 1 => add(b) del(c)\n";

    #[test]
    fn parses_minimal_file() {
        let p = MssProblem::parse("conditions: g\ngoal: g\noperator go\n  cost: 1\n  effect: 1 => add(g) del()\n").unwrap();
        assert_eq!(p.conditions, vec!["g"]);
        assert_eq!(p.operators.len(), 1);
        assert!(p.validate(Objective::Ssp).is_empty());
    }

    #[test]
    fn rejects_bad_probability_sum() {
        let text = "conditions: a\ngoal: a\noperator o\n  cost: 1\n  effect: 1/3 => add(a)\n  effect: 1/3 => add()\n";
        match MssProblem::parse(text) {
            Err(Error::ProbabilitySum { sum, .. }) => assert_eq!(sum, "2/3"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_undeclared_condition() {
        let text = "conditions: a\ngoal: zz\n";
        match MssProblem::parse(text) {
            Err(Error::UndeclaredCondition { name, line }) => {
                assert_eq!(name, "zz");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicate_operator() {
        let text = "conditions: a\ngoal: a\noperator o\n  cost: 1\n  effect: 1 => add(a)\noperator o\n  cost: 1\n  effect: 1 => add(a)\n";
        assert!(matches!(
            MssProblem::parse(text),
            Err(Error::DuplicateOperator { line: 6, .. })
        ));
    }

    #[test]
    fn syntax_errors_are_positioned() {
        let text = "conditions: a\ngoal: a\noperator o\n  cost: x\n";
        assert!(matches!(MssProblem::parse(text), Err(Error::Syntax { line: 4, .. })));
    }

    #[test]
    fn validation_modes() {
        let p = MssProblem::parse(SMALL).unwrap();
        assert!(p.validate(Objective::Ssp).is_empty());
        let mut zero = p.clone();
        zero.operators[0].cost = Rational::zero();
        assert_eq!(zero.validate(Objective::Ssp).len(), 1);
        let mut neg = p.clone();
        neg.operators[0].cost = r(-3, 2);
        assert!(neg.validate(Objective::Emp).is_empty());
        let mut no_goal = p;
        no_goal.goal = CondSet::EMPTY;
        assert!(!no_goal.validate(Objective::Ssp).is_empty());
    }

    #[test]
    fn text_round_trip() {
        let p = MssProblem::parse(SMALL).unwrap();
        let text = p.to_text();
        let q = MssProblem::parse(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_text(), text);
        let m = gen_moats(2, 1);
        assert_eq!(MssProblem::parse(&m.to_text()).unwrap(), m);
    }

    fn brute_pre(mdp: &MssMdp, x: CondSet, action: usize, effect: usize, n: usize) -> Vec<CondSet> {
        (0..1u128 << n)
            .map(CondSet)
            .filter(|s| mdp.is_enabled(s, action) && mdp.successor(s, action, effect).leq(&x))
            .collect()
    }

    #[test]
    fn pre_max_examples() {
        let mdp = MssMdp::new(MssProblem::parse(SMALL).unwrap());
        let b = CondSet::from_indices([1]);
        let c = CondSet::from_indices([2]);
        let a = CondSet::from_indices([0]);
        assert_eq!(mdp.pre_max(&b, 0, 0), Antichain::singleton(a));
        let closure: Vec<CondSet> = brute_pre(&mdp, b, 0, 0, 3);
        assert_eq!(Antichain::maximal(closure), Antichain::singleton(a));
        assert!(mdp.pre_max(&c, 0, 0).is_empty());
        assert!(brute_pre(&mdp, c, 0, 0, 3).is_empty());
        // S_o is every superset of the guard.
        let region = crate::mdp::enabled_region(&mdp, 0);
        assert_eq!(region, PseudoAntichain::closed(&Antichain::singleton(a)));
    }

    #[test]
    fn stutter_only_when_some_state_is_blocked() {
        let mdp = MssMdp::new(MssProblem::parse(SMALL).unwrap());
        assert!(mdp.has_stutter());
        assert_eq!(mdp.num_actions(), 2);
        assert_eq!(mdp.action_name(1), "_stutter");
        assert!(!MssMdp::new(gen_monkey(2, 1)).has_stutter());
    }

    #[test]
    fn generators() {
        let m = gen_monkey(3, 2);
        assert_eq!(m.conditions.len(), 12);
        assert_eq!(m.num_states(), 4096);
        assert!(m.validate(Objective::Ssp).is_empty());
        let c = gen_moats(2, 1);
        assert_eq!(c.conditions.len(), 3);
        assert!(MssProblem::parse(&c.to_text()).unwrap().validate(Objective::Ssp).is_empty());
        assert_eq!(gen_moats(3, 4).conditions.len(), 16);
    }

    #[test]
    fn monotonicity_on_random_problems() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = gen_random(5, &mut rng);
            assert!(p.validate(Objective::Ssp).is_empty());
            let mdp = MssMdp::new(p);
            for big in 0..32u128 {
                for small in 0..32u128 {
                    let (s, s2) = (CondSet(big), CondSet(small));
                    if !s.leq(&s2) {
                        continue;
                    }
                    for a in 0..mdp.num_actions() {
                        if !mdp.is_enabled(&s2, a) {
                            continue;
                        }
                        assert!(mdp.is_enabled(&s, a));
                        for t in 0..mdp.num_effects(a) {
                            assert!(mdp.successor(&s, a, t).leq(&mdp.successor(&s2, a, t)));
                        }
                    }
                }
            }
        }
    }
}
