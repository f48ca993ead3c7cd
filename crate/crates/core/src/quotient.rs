//! The quotient Markov chain of a lumped strategy and its linear systems.

use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{self, Scalar, SparseRow};
use crate::lattice::Lattice;
use crate::lumping::LumpResult;
use crate::mdp::{MonotonicMdp, Strategy};
use crate::pseudo::PseudoAntichain;
use crate::strips::fmt_rational;
use crate::Rational;

/// Finite Markov chain with sparse rows `(target, probability)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Chain {
    pub rows: Vec<Vec<(usize, Rational)>>,
    pub costs: Vec<Rational>,
    /// Absorbing target states of a shortest-path problem.
    pub goal: Vec<bool>,
}

#[derive(Clone, Debug)]
pub struct QuotientMc<E> {
    pub chain: Chain,
    pub regions: Vec<PseudoAntichain<E>>,
}

impl<E> QuotientMc<E> {
    pub fn len(&self) -> usize {
        self.chain.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.rows.is_empty()
    }
}

fn push(row: &mut Vec<(usize, Rational)>, j: usize, p: Rational) {
    match row.iter_mut().find(|(k, _)| *k == j) {
        Some((_, q)) => *q += p,
        None => row.push((j, p)),
    }
}

/// Builds the quotient chain, one row per block taken from a representative.
pub fn build_quotient<M: MonotonicMdp>(
    mdp: &M,
    lump: &LumpResult<M::Elem>,
    strategy: &Strategy<M::Elem>,
    goal: Option<&PseudoAntichain<M::Elem>>,
) -> Result<QuotientMc<M::Elem>> {
    let n = lump.len();
    let mut chain = Chain {
        rows: Vec::with_capacity(n),
        costs: Vec::with_capacity(n),
        goal: Vec::with_capacity(n),
    };
    for (i, block) in lump.blocks.iter().enumerate() {
        let in_goal = goal.is_some_and(|g| block.region.is_subset(g));
        if let Some(g) = goal {
            if !in_goal && !block.region.is_disjoint(g) {
                return Err(Error::GoalImpureBlock { block: i });
            }
        }
        chain.goal.push(in_goal);
        if block.absorbing {
            chain.rows.push(vec![(i, Rational::one())]);
            chain.costs.push(Rational::zero());
            continue;
        }
        let rep = block.region.pick()?;
        let action = *strategy
            .lookup(&rep)
            .ok_or_else(|| Error::InvalidProblem("block outside the strategy domain".into()))?;
        let mut row = Vec::new();
        for t in 0..mdp.num_effects(action) {
            let p = mdp.probability(&rep, action, t);
            if p.is_zero() {
                continue;
            }
            let succ = mdp.successor(&rep, action, t);
            let j = lump
                .position(&succ)
                .ok_or_else(|| Error::InvalidProblem("successor leaves the strategy domain".into()))?;
            push(&mut row, j, p);
        }
        row.sort_by_key(|(j, _)| *j);
        chain.rows.push(row);
        chain.costs.push(block.cost.clone());
    }
    Ok(QuotientMc {
        chain,
        regions: lump.blocks.iter().map(|b| b.region.clone()).collect(),
    })
}

impl Chain {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Expected cost until the goal: `v = 0` on goal states and
    /// `C + (P - I) v = 0` elsewhere.
    pub fn ssp_values<T: Scalar>(&self) -> Result<Vec<T>> {
        let moving: Vec<usize> = (0..self.len()).filter(|&i| !self.goal[i]).collect();
        let mut index = vec![usize::MAX; self.len()];
        for (k, &i) in moving.iter().enumerate() {
            index[i] = k;
        }
        let mut rows = Vec::with_capacity(moving.len());
        let mut rhs = Vec::with_capacity(moving.len());
        for &i in &moving {
            let mut row: SparseRow<T> = SparseRow::new();
            row.insert(index[i], T::one());
            for (j, p) in &self.rows[i] {
                if self.goal[*j] {
                    continue;
                }
                let e = row.entry(index[*j]).or_insert_with(T::zero);
                *e = e.clone() - T::from_rational(p);
            }
            row.retain(|_, v| !v.is_zero());
            rows.push(row);
            rhs.push(T::from_rational(&self.costs[i]));
        }
        let x = linalg::solve(rows, rhs)?;
        let mut v = vec![T::zero(); self.len()];
        for (k, &i) in moving.iter().enumerate() {
            v[i] = x[k].clone();
        }
        Ok(v)
    }

    /// Strongly connected components, each sorted, in reverse topological
    /// order (bottom components first).
    pub fn sccs(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        let mut counter = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call: Vec<(usize, usize)> = vec![(root, 0)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut edge)) = call.last_mut() {
                if let Some(&(w, _)) = self.rows[v].get(*edge) {
                    *edge += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
        out
    }

    /// Recurrent classes: components no transition leaves.
    pub fn recurrent_classes(&self) -> Vec<Vec<usize>> {
        let comps = self.sccs();
        let mut comp_of = vec![0; self.len()];
        for (c, comp) in comps.iter().enumerate() {
            for &i in comp {
                comp_of[i] = c;
            }
        }
        comps
            .iter()
            .enumerate()
            .filter(|(c, comp)| {
                comp.iter()
                    .all(|&i| self.rows[i].iter().all(|(j, _)| comp_of[*j] == *c))
            })
            .map(|(_, comp)| comp.clone())
            .collect()
    }

    /// Gain and bias solving `g = P g` and `g + b = c + P b`, with the bias
    /// fixed to 0 at the smallest state of every recurrent class.
    pub fn gain_bias<T: Scalar>(&self) -> Result<(Vec<T>, Vec<T>)> {
        let n = self.len();
        let mut g = vec![T::zero(); n];
        let mut b = vec![T::zero(); n];
        let mut recurrent = vec![false; n];
        for class in self.recurrent_classes() {
            // Unknowns: g, then b at every member except the reference.
            let pos = |i: usize| class.binary_search(&i).ok();
            let mut rows = Vec::with_capacity(class.len());
            let mut rhs = Vec::with_capacity(class.len());
            for &i in &class {
                let mut row: SparseRow<T> = SparseRow::new();
                row.insert(0, T::one());
                if let Some(k) = pos(i).filter(|&k| k > 0) {
                    row.insert(k, T::one());
                }
                for (j, p) in &self.rows[i] {
                    if let Some(k) = pos(*j).filter(|&k| k > 0) {
                        let e = row.entry(k).or_insert_with(T::zero);
                        *e = e.clone() - T::from_rational(p);
                    }
                }
                row.retain(|_, v| !v.is_zero());
                rows.push(row);
                rhs.push(T::from_rational(&self.costs[i]));
            }
            let x = linalg::solve(rows, rhs)?;
            for (k, &i) in class.iter().enumerate() {
                recurrent[i] = true;
                g[i] = x[0].clone();
                if k > 0 {
                    b[i] = x[k].clone();
                }
            }
        }
        let transient: Vec<usize> = (0..n).filter(|&i| !recurrent[i]).collect();
        if transient.is_empty() {
            return Ok((g, b));
        }
        let mut index = vec![usize::MAX; n];
        for (k, &i) in transient.iter().enumerate() {
            index[i] = k;
        }
        let mut rows = Vec::with_capacity(transient.len());
        let mut rhs_g = Vec::with_capacity(transient.len());
        for &i in &transient {
            let mut row: SparseRow<T> = SparseRow::new();
            row.insert(index[i], T::one());
            let mut acc = T::zero();
            for (j, p) in &self.rows[i] {
                let p = T::from_rational(p);
                if recurrent[*j] {
                    acc = acc + p * g[*j].clone();
                } else {
                    let e = row.entry(index[*j]).or_insert_with(T::zero);
                    *e = e.clone() - p;
                }
            }
            row.retain(|_, v| !v.is_zero());
            rows.push(row);
            rhs_g.push(acc);
        }
        let gt = linalg::solve(rows.clone(), rhs_g)?;
        for (k, &i) in transient.iter().enumerate() {
            g[i] = gt[k].clone();
        }
        let rhs_b = transient
            .iter()
            .map(|&i| {
                let mut acc = T::from_rational(&self.costs[i]) - g[i].clone();
                for (j, p) in &self.rows[i] {
                    if recurrent[*j] {
                        acc = acc + T::from_rational(p) * b[*j].clone();
                    }
                }
                acc
            })
            .collect();
        let bt = linalg::solve(rows, rhs_b)?;
        for (k, &i) in transient.iter().enumerate() {
            b[i] = bt[k].clone();
        }
        Ok((g, b))
    }

    fn apply<T: Scalar>(&self, i: usize, x: &[T]) -> T {
        self.rows[i]
            .iter()
            .fold(T::zero(), |acc, (j, p)| acc + T::from_rational(p) * x[*j].clone())
    }

    /// ∞-norm of `C + (P - I) v` over non-goal states, plus `|v|` on goals.
    pub fn ssp_residual<T: Scalar>(&self, v: &[T]) -> T {
        (0..self.len())
            .map(|i| {
                if self.goal[i] {
                    v[i].abs()
                } else {
                    (T::from_rational(&self.costs[i]) + self.apply(i, v) - v[i].clone()).abs()
                }
            })
            .fold(T::zero(), |m, r| if r > m { r } else { m })
    }

    /// ∞-norm over both `g - P g` and `g + b - c - P b`.
    pub fn gain_bias_residual<T: Scalar>(&self, g: &[T], b: &[T]) -> T {
        (0..self.len())
            .flat_map(|i| {
                let r1 = g[i].clone() - self.apply(i, g);
                let r2 = g[i].clone() + b[i].clone() - T::from_rational(&self.costs[i]) - self.apply(i, b);
                [r1.abs(), r2.abs()]
            })
            .fold(T::zero(), |m, r| if r > m { r } else { m })
    }

    pub fn is_stochastic(&self) -> bool {
        self.rows.iter().all(|row| {
            row.iter().all(|(_, p)| *p > Rational::zero())
                && row.iter().map(|(_, p)| p.clone()).sum::<Rational>().is_one()
        })
    }
}

/// Exact expected costs to the goal per quotient block.
pub fn solve_ssp_values<E>(q: &QuotientMc<E>) -> Result<Vec<Rational>> {
    q.chain.ssp_values()
}

/// Exact gain and bias per quotient block.
pub fn solve_gain_bias<E>(q: &QuotientMc<E>) -> Result<(Vec<Rational>, Vec<Rational>)> {
    q.chain.gain_bias()
}

pub fn solve_ssp_values_f64<E>(q: &QuotientMc<E>) -> Result<Vec<f64>> {
    q.chain.ssp_values()
}

pub fn solve_gain_bias_f64<E>(q: &QuotientMc<E>) -> Result<(Vec<f64>, Vec<f64>)> {
    q.chain.gain_bias()
}

impl<E: Lattice> QuotientMc<E> {
    /// Text matrix: one line per block with cost, goal flag and row.
    pub fn dump(&self, show: impl Fn(&E) -> String) -> String {
        let mut out = String::new();
        for (i, row) in self.chain.rows.iter().enumerate() {
            let entries: Vec<String> = row
                .iter()
                .map(|(j, p)| format!("{}:{}", j, fmt_rational(p)))
                .collect();
            let _ = writeln!(
                out,
                "block {} cost={} goal={} row=[{}] region={}",
                i,
                fmt_rational(&self.chain.costs[i]),
                self.chain.goal[i],
                entries.join(" "),
                self.regions[i].display_with(&show)
            );
        }
        out
    }
}
