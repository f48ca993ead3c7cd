//! Python bindings: problems, solver reports and pseudo-antichains over ℕ^d.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use symblicit_core::explicit::compare as compare_solvers;
use symblicit_core::lattice::{ProductNatLattice, MAX_CONDITIONS};
use symblicit_core::lumping::lump as lump_chain;
use symblicit_core::strategy::{initial_proper_strategy, proper_states, solve_emp, solve_ssp, SolveOptions, SolveReport};
use symblicit_core::strips::{gen_monkey, gen_moats, gen_random, MssMdp, MssProblem, Objective};
use symblicit_core::{Antichain, CondSet, Error, MonotonicMdp, NatVec, PseudoAntichain, Rational};

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn objective(name: &str) -> PyResult<Objective> {
    match name {
        "ssp" => Ok(Objective::Ssp),
        "emp" => Ok(Objective::Emp),
        other => Err(PyValueError::new_err(format!("unknown objective `{other}`, expected `ssp` or `emp`"))),
    }
}

fn state_of(problem: &MssProblem, names: Vec<String>) -> PyResult<CondSet> {
    let idx = names
        .iter()
        .map(|n| {
            problem
                .conditions
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| PyKeyError::new_err(format!("unknown condition `{n}`")))
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok(CondSet::from_indices(idx))
}

fn names_of(problem: &MssProblem, s: &CondSet) -> Vec<String> {
    s.indices().map(|i| problem.conditions[i].clone()).collect()
}

/// A monotonic stochastic STRIPS problem.
#[pyclass(module = "symblicit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Problem {
    inner: MssProblem,
}

#[pymethods]
impl Problem {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        MssProblem::parse(text).map(|inner| Problem { inner }).map_err(err)
    }

    #[staticmethod]
    fn monkey(pieces: usize, sticks: usize) -> PyResult<Self> {
        if pieces == 0 || sticks == 0 {
            return Err(PyValueError::new_err("parameters must be at least 1"));
        }
        Ok(Problem {
            inner: gen_monkey(pieces, sticks),
        })
    }

    #[staticmethod]
    fn moats(depths: usize, castles: usize) -> PyResult<Self> {
        if depths == 0 || castles == 0 {
            return Err(PyValueError::new_err("parameters must be at least 1"));
        }
        Ok(Problem {
            inner: gen_moats(depths, castles),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (conditions, seed = 0))]
    fn random(conditions: usize, seed: u64) -> PyResult<Self> {
        if !(1..=MAX_CONDITIONS).contains(&conditions) {
            return Err(PyValueError::new_err(format!("conditions must lie in 1..={MAX_CONDITIONS}")));
        }
        Ok(Problem {
            inner: gen_random(conditions, &mut ChaCha8Rng::seed_from_u64(seed)),
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn conditions(&self) -> Vec<String> {
        self.inner.conditions.clone()
    }

    #[getter]
    fn operators(&self) -> Vec<String> {
        self.inner.operators.iter().map(|o| o.name.clone()).collect()
    }

    #[getter]
    fn num_states(&self) -> u128 {
        self.inner.num_states()
    }

    /// Problems found by validation for the given objective; empty when valid.
    #[pyo3(signature = (objective = "ssp"))]
    fn validate(&self, objective: &str) -> PyResult<Vec<String>> {
        Ok(self.inner.validate(self::objective(objective)?))
    }

    /// Solves the problem. `maximize` applies to the mean payoff only.
    #[pyo3(signature = (objective = "ssp", maximize = false, float_check = false))]
    fn solve(&self, py: Python<'_>, objective: &str, maximize: bool, float_check: bool) -> PyResult<Report> {
        let mode = self::objective(objective)?;
        if maximize && mode == Objective::Ssp {
            return Err(PyValueError::new_err("maximize applies to the emp objective only"));
        }
        let diags = self.inner.validate(mode);
        if !diags.is_empty() {
            return Err(PyValueError::new_err(diags.join("; ")));
        }
        let problem = if maximize { self.inner.negated() } else { self.inner.clone() };
        let mdp = MssMdp::new(problem);
        let opts = SolveOptions { float_check };
        let report = py
            .detach(|| match mode {
                Objective::Ssp => solve_ssp(&mdp, opts),
                Objective::Emp => solve_emp(&mdp, opts),
            })
            .map_err(err)?;
        Ok(Report {
            mdp,
            report,
            sign: if maximize { -1 } else { 1 },
        })
    }

    /// Checks the symbolic solver against state enumeration.
    #[pyo3(signature = (objective = "ssp", cap = 1 << 16))]
    fn compare(&self, py: Python<'_>, objective: &str, cap: u128) -> PyResult<bool> {
        let mode = self::objective(objective)?;
        let mdp = MssMdp::new(self.inner.clone());
        let c = py.detach(|| compare_solvers(&mdp, mode, cap)).map_err(err)?;
        Ok(c.matches())
    }

    /// Blocks of the chain induced by the initial proper strategy, as
    /// `(cost, is_goal, region)` triples.
    fn lump(&self) -> PyResult<Vec<(Rational, bool, String)>> {
        let mdp = MssMdp::new(self.inner.clone());
        let proper = proper_states(&mdp).map_err(err)?;
        if proper.region.is_empty() {
            return Err(err(Error::NoProperState));
        }
        let lambda = initial_proper_strategy(&mdp, &proper);
        let goal = mdp.goal().expect("problems always have a goal");
        let res = lump_chain(&mdp, &lambda, Some(&goal));
        Ok(res
            .blocks
            .iter()
            .map(|b| {
                (
                    b.cost.clone(),
                    b.absorbing,
                    b.region.display_with(|s| self.inner.format_set(s)),
                )
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem(conditions={}, operators={})",
            self.inner.conditions.len(),
            self.inner.operators.len()
        )
    }
}

/// Result of a solver run.
#[pyclass(module = "symblicit", frozen)]
struct Report {
    mdp: MssMdp,
    report: SolveReport<CondSet>,
    sign: i64,
}

impl Report {
    fn signed(&self, v: &Rational) -> Rational {
        v * Rational::from_integer(self.sign.into())
    }
}

#[pymethods]
impl Report {
    /// Optimal value at the initial state.
    #[getter]
    fn value(&self) -> Option<Rational> {
        self.report.initial_value().map(|v| self.signed(v))
    }

    /// Value of the state holding exactly the named conditions.
    fn value_of(&self, state: Vec<String>) -> PyResult<Option<Rational>> {
        let s = state_of(self.mdp.problem(), state)?;
        Ok(self.report.value_at(&s).map(|v| self.signed(v)))
    }

    /// Operator chosen in the state holding exactly the named conditions.
    fn action_of(&self, state: Vec<String>) -> PyResult<Option<String>> {
        let s = state_of(self.mdp.problem(), state)?;
        Ok(self.report.strategy.lookup(&s).map(|&a| self.mdp.action_name(a)))
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.report.iterations
    }

    #[getter]
    fn max_quotient_blocks(&self) -> usize {
        self.report.max_quotient_blocks
    }

    #[getter]
    fn gain_improvements(&self) -> usize {
        self.report.gain_improvements
    }

    #[getter]
    fn bias_improvements(&self) -> usize {
        self.report.bias_improvements
    }

    #[getter]
    fn residual(&self) -> Rational {
        self.report.residual.clone()
    }

    #[getter]
    fn float_residual(&self) -> Option<f64> {
        self.report.float_residual
    }

    /// Seconds spent lumping, solving, improving and in total.
    #[getter]
    fn timings(&self) -> (f64, f64, f64, f64) {
        let t = &self.report.timings;
        (
            t.lump.as_secs_f64(),
            t.solve.as_secs_f64(),
            t.improve.as_secs_f64(),
            t.total.as_secs_f64(),
        )
    }

    /// `(region, operator)` pairs of the final strategy.
    #[getter]
    fn strategy(&self) -> Vec<(String, String)> {
        let p = self.mdp.problem();
        self.report
            .strategy
            .blocks
            .iter()
            .map(|(r, a)| (r.display_with(|s| p.format_set(s)), self.mdp.action_name(*a)))
            .collect()
    }

    /// Initial state's conditions.
    #[getter]
    fn initial_state(&self) -> Vec<String> {
        names_of(self.mdp.problem(), &self.mdp.problem().init)
    }

    fn __repr__(&self) -> String {
        let value = self
            .value()
            .map_or_else(|| "None".into(), |v| symblicit_core::strips::fmt_rational(&v));
        format!(
            "Report(value={value}, iterations={}, max_quotient_blocks={})",
            self.report.iterations, self.report.max_quotient_blocks
        )
    }
}

/// A set of points of ℕ^d given as a union of pseudo-closures
/// `↓x \ ↓α`.
#[pyclass(name = "PseudoAntichain", module = "symblicit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPseudoAntichain {
    inner: PseudoAntichain<NatVec>,
    dim: usize,
}

impl PyPseudoAntichain {
    fn point(&self, v: Vec<u32>) -> PyResult<NatVec> {
        if v.len() != self.dim {
            return Err(PyValueError::new_err(format!("expected {} coordinates, got {}", self.dim, v.len())));
        }
        Ok(NatVec(v))
    }

    fn same_dim(&self, other: &Self) -> PyResult<()> {
        if self.dim != other.dim && !self.inner.is_empty() && !other.inner.is_empty() {
            return Err(PyValueError::new_err("dimensions differ"));
        }
        Ok(())
    }

    fn wrap(&self, inner: PseudoAntichain<NatVec>) -> Self {
        PyPseudoAntichain { inner, dim: self.dim }
    }
}

#[pymethods]
impl PyPseudoAntichain {
    /// Builds the union of `↓x \ ↓α` over `(x, α)` pairs.
    #[new]
    #[pyo3(signature = (dim, pairs = Vec::new()))]
    fn new(dim: usize, pairs: Vec<(Vec<u32>, Vec<Vec<u32>>)>) -> PyResult<Self> {
        let empty = PyPseudoAntichain {
            inner: PseudoAntichain::empty(),
            dim,
        };
        let mut items = Vec::with_capacity(pairs.len());
        for (x, alpha) in pairs {
            let x = empty.point(x)?;
            let alpha = alpha.into_iter().map(|a| empty.point(a)).collect::<PyResult<Vec<_>>>()?;
            items.push((x, Antichain::maximal(alpha)));
        }
        Ok(empty.wrap(PseudoAntichain::from_pairs(items)))
    }

    /// Stored form: `(x, α)` pairs in canonical order.
    fn pairs(&self) -> Vec<(Vec<u32>, Vec<Vec<u32>>)> {
        self.inner
            .elems()
            .iter()
            .map(|pe| {
                (
                    pe.top().0.clone(),
                    pe.alpha().elems().iter().map(|a| a.0.clone()).collect(),
                )
            })
            .collect()
    }

    fn union(&self, other: &Self) -> PyResult<Self> {
        self.same_dim(other)?;
        Ok(self.wrap(self.inner.union(&other.inner)))
    }

    fn intersect(&self, other: &Self) -> PyResult<Self> {
        self.same_dim(other)?;
        Ok(self.wrap(self.inner.intersect(&other.inner)))
    }

    fn difference(&self, other: &Self) -> PyResult<Self> {
        self.same_dim(other)?;
        Ok(self.wrap(self.inner.difference(&other.inner)))
    }

    fn is_subset(&self, other: &Self) -> PyResult<bool> {
        self.same_dim(other)?;
        Ok(self.inner.is_subset(&other.inner))
    }

    fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    /// Every point with coordinates at most `bound`, in lexicographic order.
    fn enumerate(&self, bound: u32) -> PyResult<Vec<Vec<u32>>> {
        let lat = ProductNatLattice::new(self.dim, bound);
        Ok(self.inner.enumerate(&lat).map_err(err)?.into_iter().map(|p| p.0).collect())
    }

    fn __or__(&self, other: &Self) -> PyResult<Self> {
        self.union(other)
    }

    fn __and__(&self, other: &Self) -> PyResult<Self> {
        self.intersect(other)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.difference(other)
    }

    fn __le__(&self, other: &Self) -> PyResult<bool> {
        self.is_subset(other)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.dim == other.dim && self.inner.set_eq(&other.inner)
    }

    fn __contains__(&self, point: Vec<u32>) -> PyResult<bool> {
        Ok(self.inner.contains(&self.point(point)?))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __bool__(&self) -> bool {
        !self.inner.is_empty()
    }

    fn __repr__(&self) -> String {
        format!("PseudoAntichain({})", self.inner)
    }
}

#[pymodule]
fn symblicit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<Report>()?;
    m.add_class::<PyPseudoAntichain>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
