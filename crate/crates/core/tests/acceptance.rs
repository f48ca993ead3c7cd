//! Acceptance checks, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance`. Every limit below is fixed; a
//! check fails when its result or its wall time is out of bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symblicit::explicit::{compare_with, enumerate_states, explicit_emp_oracle, explicit_lump_oracle, explicit_ssp_oracle};
use symblicit::lattice::{enumeration_count, EnumerationGuard, Flat};
use symblicit::lumping::lump;
use symblicit::mdp::pre_sigma_tau;
use symblicit::strategy::{
    bellman_check_emp, bellman_check_ssp, initial_proper_strategy, proper_states, solve_emp, solve_ssp, SolveOptions,
    SolveReport,
};
use symblicit::strips::{gen_monkey, gen_random, MssMdp, Objective};
use symblicit::table::TableMdp;
use symblicit::{Antichain, CondSet, Error, Lattice, MonotonicMdp, NatVec, PseudoAntichain, PseudoElement, Rational};

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let outcome = match outcome {
        Ok(d) if elapsed > limit => Err(format!("{d}; took {elapsed:.3?}, limit {limit:?}")),
        o => o,
    };
    let ok = outcome.is_ok();
    let detail = outcome.unwrap_or_else(|e| e);
    println!(
        "{} {id:>2} {name}: {detail} [{:.3}s / {}s]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    ok
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// A finite lattice listed in full, with an order written independently of
/// the library's.
struct Universe<E> {
    elems: Vec<E>,
    le: fn(&E, &E) -> bool,
}

impl<E: Lattice> Universe<E> {
    fn mask_pe(&self, pe: &PseudoElement<E>) -> u64 {
        self.mask(|s| (self.le)(s, pe.top()) && !pe.alpha().elems().iter().any(|a| (self.le)(s, a)))
    }

    fn mask_pa(&self, pa: &PseudoAntichain<E>) -> u64 {
        pa.elems().iter().fold(0, |m, pe| m | self.mask_pe(pe))
    }

    fn mask(&self, f: impl Fn(&E) -> bool) -> u64 {
        self.elems
            .iter()
            .enumerate()
            .filter(|(_, s)| f(s))
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Compares every Boolean operation on `a` and `b` with set semantics.
    fn check_ops(&self, a: &PseudoAntichain<E>, b: &PseudoAntichain<E>) -> std::result::Result<(), String> {
        let (ma, mb) = (self.mask_pa(a), self.mask_pa(b));
        let show = || format!("a={a:?} b={b:?}");
        ensure(self.mask_pa(&a.union(b)) == ma | mb, || format!("union: {}", show()))?;
        ensure(self.mask_pa(&a.intersect(b)) == ma & mb, || format!("intersect: {}", show()))?;
        ensure(self.mask_pa(&a.difference(b)) == ma & !mb, || format!("difference: {}", show()))?;
        ensure(a.is_subset(b) == (ma & !mb == 0), || format!("subset: {}", show()))?;
        ensure(a.set_eq(b) == (ma == mb), || format!("equal: {}", show()))?;
        ensure(a.is_empty() == (ma == 0), || format!("empty: {}", show()))?;
        ensure(a.is_disjoint(b) == (ma & mb == 0), || format!("disjoint: {}", show()))?;
        for (i, s) in self.elems.iter().enumerate() {
            ensure(a.contains(s) == (ma >> i & 1 == 1), || format!("member {s:?}: {}", show()))?;
        }
        Ok(())
    }

    fn random_pa(&self, rng: &mut ChaCha8Rng) -> PseudoAntichain<E> {
        let k = rng.gen_range(0..=3);
        PseudoAntichain::from_pairs((0..k).map(|_| {
            let x = self.elems.choose(rng).unwrap().clone();
            let n = rng.gen_range(0..=3);
            let alpha = Antichain::maximal((0..n).map(|_| self.elems.choose(rng).unwrap().clone()));
            (x, alpha)
        }))
    }

    /// All canonical pseudo-elements whose antichain has at most `max` members.
    fn canonical_elements(&self, max: usize) -> Vec<PseudoElement<E>> {
        let mut out = BTreeSet::new();
        for x in &self.elems {
            let below: Vec<&E> = self.elems.iter().filter(|a| (self.le)(a, x) && *a != x).collect();
            let mut stack: Vec<(usize, Vec<E>)> = vec![(0, Vec::new())];
            while let Some((next, chosen)) = stack.pop() {
                let alpha = Antichain::maximal(chosen.iter().cloned());
                out.extend(PseudoElement::canonical(x.clone(), &alpha));
                if chosen.len() == max {
                    continue;
                }
                for (j, a) in below.iter().enumerate().skip(next) {
                    if chosen.iter().all(|c| !(self.le)(c, a) && !(self.le)(a, c)) {
                        let mut c = chosen.clone();
                        c.push((*a).clone());
                        stack.push((j + 1, c));
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

fn nat_le(a: &NatVec, b: &NatVec) -> bool {
    a.0.iter().zip(&b.0).all(|(x, y)| x <= y)
}

fn grid(dim: usize, bound: u32) -> Universe<NatVec> {
    let mut elems = vec![NatVec(Vec::new())];
    for _ in 0..dim {
        elems = elems
            .into_iter()
            .flat_map(|v| {
                (0..=bound).map(move |c| {
                    let mut w = v.0.clone();
                    w.push(c);
                    NatVec(w)
                })
            })
            .collect();
    }
    Universe { elems, le: nat_le }
}

fn superset_le(a: &CondSet, b: &CondSet) -> bool {
    a.0 & b.0 == b.0
}

fn powerset(n: usize) -> Universe<CondSet> {
    Universe {
        elems: (0..1u128 << n).map(CondSet).collect(),
        le: superset_le,
    }
}

fn example_closure() -> Check {
    let u = grid(2, 3);
    let alpha = Antichain::maximal([NatVec::new([2, 1]), NatVec::new([0, 2])]);
    let pe = PseudoElement::canonical(NatVec::new([3, 2]), &alpha).ok_or("empty pseudo-element")?;
    let got: BTreeSet<NatVec> = PseudoAntichain::from_element(pe)
        .enumerate(&symblicit::lattice::ProductNatLattice::new(2, 3))
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect();
    let want: BTreeSet<NatVec> = [[3, 2], [3, 1], [3, 0], [2, 2], [1, 2]].map(NatVec::new).into_iter().collect();
    ensure(got == want, || format!("got {got:?}"))?;
    ensure(u.elems.len() == 16, || "grid size".into())?;
    Ok(format!("{} elements", got.len()))
}

fn boolean_algebra() -> Check {
    let u = grid(2, 3);
    let pes = u.canonical_elements(2);
    let empty = PseudoAntichain::empty();
    let full = PseudoAntichain::closed(&Antichain::singleton(NatVec::new([3, 3])));
    let singles: Vec<PseudoAntichain<NatVec>> = std::iter::once(empty.clone())
        .chain(pes.iter().cloned().map(PseudoAntichain::from_element))
        .collect();
    let mut checked = 0usize;
    for a in &singles {
        for b in &singles {
            u.check_ops(a, b)?;
            checked += 1;
        }
    }
    let mut doubles = 0usize;
    for (i, p) in pes.iter().enumerate() {
        for r in &pes[i + 1..] {
            let a = PseudoAntichain::simplify([p.clone(), r.clone()]);
            let parts = [
                PseudoAntichain::from_element(p.clone()),
                PseudoAntichain::from_element(r.clone()),
            ];
            for b in parts.iter().chain([&empty, &full, &a]) {
                u.check_ops(&a, b)?;
                u.check_ops(b, &a)?;
                checked += 2;
            }
            doubles += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let double = |rng: &mut ChaCha8Rng| PseudoAntichain::simplify([pes.choose(rng).unwrap().clone(), pes.choose(rng).unwrap().clone()]);
    for _ in 0..1000 {
        let (a, b) = (double(&mut rng), double(&mut rng));
        u.check_ops(&a, &b)?;
    }
    let cube = grid(3, 2);
    for _ in 0..1000 {
        let (a, b) = (cube.random_pa(&mut rng), cube.random_pa(&mut rng));
        cube.check_ops(&a, &b)?;
    }
    let sets = powerset(5);
    for _ in 0..1000 {
        let (a, b) = (sets.random_pa(&mut rng), sets.random_pa(&mut rng));
        sets.check_ops(&a, &b)?;
    }
    Ok(format!(
        "N^2<=3: all {} pairs of single members, {doubles} two-member sets against their parts, empty, full and themselves ({checked} checks), 1000 random two-member pairs; 1000 random on N^3<=2; 1000 random on 2^5",
        singles.len() * singles.len()
    ))
}

fn canonical_subset() -> Check {
    let u = grid(2, 3);
    let pes = u.canonical_elements(usize::MAX);
    let masks: Vec<u64> = pes.iter().map(|p| u.mask_pe(p)).collect();
    let mut pairs = 0usize;
    for (a, ma) in pes.iter().zip(&masks) {
        for (b, mb) in pes.iter().zip(&masks) {
            ensure(a.is_subset(b) == (ma & !mb == 0), || format!("subset {a:?} {b:?}"))?;
            ensure((ma == mb) == (a == b), || format!("equal closures, different forms: {a:?} {b:?}"))?;
            pairs += 1;
        }
    }
    Ok(format!("{} canonical pseudo-elements, {pairs} ordered pairs", pes.len()))
}

fn pre_correctness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checks = 0;
    while checks < 200 {
        let n = rng.gen_range(3..=10);
        let mdp = MssMdp::new(gen_random(n, &mut rng));
        let ops = mdp.problem().operators.len();
        let o = rng.gen_range(0..ops);
        let op = &mdp.problem().operators[o];
        let t = rng.gen_range(0..op.effects.len());
        let eff = &op.effects[t];
        let states: Vec<CondSet> = (0..1u128 << n).map(CondSet).collect();
        let x = *states.choose(&mut rng).unwrap();
        let succ = |s: &CondSet| CondSet((s.0 | eff.add.0) & !eff.del.0);
        let enabled = |s: &CondSet| s.0 & op.guard.0 == op.guard.0;
        let maxima = mdp.pre_max(&x, o, t);
        for s in &states {
            let brute = enabled(s) && superset_le(&succ(s), &x);
            let ours = maxima.elems().iter().any(|m| superset_le(s, m));
            ensure(brute == ours, || format!("pre_max of {x:?} at {s:?}"))?;
        }
        // The same through a pseudo-antichain with a random hole.
        let hole = Antichain::maximal((0..2).map(|_| *states.choose(&mut rng).unwrap()));
        let target = PseudoAntichain::from_pairs([(x, hole.clone())]);
        let pre = pre_sigma_tau(&mdp, &target, o, t);
        for s in &states {
            let y = succ(s);
            let brute = enabled(s) && superset_le(&y, &x) && !hole.elems().iter().any(|h| superset_le(&y, h));
            ensure(pre.contains(s) == brute, || format!("pre of {target:?} at {s:?}"))?;
        }
        checks += 1;
    }
    Ok(format!("{checks} operators, |P| in 3..=10"))
}

fn lumping() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = 0;
    let mut blocks = 0;
    while done < 50 {
        let n = 3 + done % 8;
        let mdp = MssMdp::new(gen_random(n, &mut rng));
        let ps = proper_states(&mdp).map_err(|e| e.to_string())?;
        if ps.region.is_empty() {
            continue;
        }
        let lambda = initial_proper_strategy(&mdp, &ps);
        let goal = mdp.goal().unwrap();
        let res = lump(&mdp, &lambda, Some(&goal));
        let e = enumerate_states(&mdp, 1 << 10).map_err(|e| e.to_string())?;
        let actions: Vec<_> = e.states.iter().map(|s| lambda.lookup(s).copied()).collect();
        let oracle = explicit_lump_oracle(&e, &actions, &e.goal);
        let lat = mdp.lattice();
        let mut ours: Vec<Vec<usize>> = res
            .blocks
            .iter()
            .map(|b| {
                let mut v: Vec<usize> = b
                    .region
                    .enumerate(&lat)
                    .unwrap()
                    .iter()
                    .map(|s| e.index[s])
                    .collect();
                v.sort();
                v
            })
            .collect();
        ours.sort();
        ensure(ours == oracle, || format!("instance {done}: {} vs {} blocks", ours.len(), oracle.len()))?;
        blocks += ours.len();
        done += 1;
    }
    Ok(format!("{done} instances, {blocks} blocks in total"))
}

#[derive(Default)]
struct Residuals {
    solved: usize,
    nonzero: usize,
    worst_float: f64,
}

fn ssp_end_to_end(res: &mut Residuals) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut solved = 0;
    let mut tried = 0;
    let mut iterations = 0;
    while solved < 100 {
        tried += 1;
        let n = 3 + tried % 6;
        let mdp = MssMdp::new(gen_random(n, &mut rng));
        let report = match solve_ssp(&mdp, SolveOptions { float_check: true }) {
            Ok(r) => r,
            Err(Error::NoProperState) => continue,
            Err(e) => return Err(format!("instance {tried}: {e}")),
        };
        let e = enumerate_states(&mdp, 1 << 8).map_err(|e| e.to_string())?;
        let oracle = explicit_ssp_oracle(&e).map_err(|e| e.to_string())?;
        let c = compare_with(&e, &report, &oracle, Objective::Ssp).map_err(|e| e.to_string())?;
        ensure(c.symbolic_value.is_some() && c.symbolic_value == c.explicit_value, || {
            format!("instance {tried}: {:?} vs {:?}", c.symbolic_value, c.explicit_value)
        })?;
        ensure(c.matches(), || format!("instance {tried}: per-state values differ"))?;
        ensure(bellman_check_ssp(&mdp, &report).map_err(|e| e.to_string())?, || {
            format!("instance {tried}: Bellman check")
        })?;
        note(res, &report);
        iterations = iterations.max(report.iterations);
        solved += 1;
    }
    Ok(format!("{solved} proper instances of {tried} drawn, |P| in 3..=8, at most {iterations} iterations"))
}

fn note(res: &mut Residuals, report: &SolveReport<CondSet>) {
    res.solved += 1;
    if report.residual != Rational::from_integer(0.into()) {
        res.nonzero += 1;
    }
    res.worst_float = res.worst_float.max(report.float_residual.unwrap_or(f64::INFINITY));
}

fn emp_end_to_end(res: &mut Residuals) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut gain_steps = 0;
    let mut bias_steps = 0;
    for i in 0..100 {
        let n = 3 + i % 6;
        let mdp = MssMdp::new(gen_random(n, &mut rng));
        let report = solve_emp(&mdp, SolveOptions { float_check: true }).map_err(|e| format!("instance {i}: {e}"))?;
        let e = enumerate_states(&mdp, 1 << 8).map_err(|e| e.to_string())?;
        let oracle = explicit_emp_oracle(&e).map_err(|e| e.to_string())?;
        let c = compare_with(&e, &report, &oracle, Objective::Emp).map_err(|e| e.to_string())?;
        ensure(c.symbolic_value.is_some() && c.symbolic_value == c.explicit_value, || {
            format!("instance {i}: {:?} vs {:?}", c.symbolic_value, c.explicit_value)
        })?;
        ensure(c.matches(), || format!("instance {i}: per-state gains differ"))?;
        ensure(bellman_check_emp(&mdp, &report).map_err(|e| e.to_string())?, || {
            format!("instance {i}: optimality check")
        })?;
        note(res, &report);
        gain_steps += report.gain_improvements;
        bias_steps += report.bias_improvements;
    }

    // Both actions of state 0 reach the same zero-cost loop, so the gains
    // tie and only the bias separates them.
    let tie = TableMdp::new(2, &["dear", "cheap"])
        .transition(0, 0, q(4, 1), &[(q(1, 1), 1)])
        .transition(0, 1, q(1, 1), &[(q(1, 1), 1)])
        .transition(1, 0, q(0, 1), &[(q(1, 1), 1)]);
    let r = solve_emp(&tie, SolveOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.gain_improvements == 0 && r.bias_improvements >= 1, || {
        format!("tie instance: {} gain, {} bias steps", r.gain_improvements, r.bias_improvements)
    })?;
    ensure(r.strategy.lookup(&Flat::Point(0)) == Some(&1), || "tie instance: wrong action".into())?;
    ensure(r.value_at(&Flat::Point(0)) == Some(&q(0, 1)), || "tie instance: wrong gain".into())?;

    // Staying costs 2 per step; paying 5 once reaches a loop of cost 1.
    let escape = TableMdp::new(2, &["stay", "move"])
        .transition(0, 0, q(2, 1), &[(q(1, 1), 0)])
        .transition(0, 1, q(5, 1), &[(q(1, 1), 1)])
        .transition(1, 0, q(1, 1), &[(q(1, 1), 1)]);
    let r = solve_emp(&escape, SolveOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.gain_improvements >= 1 && r.value_at(&Flat::Point(0)) == Some(&q(1, 1)), || {
        "escape instance".into()
    })?;
    Ok(format!(
        "100 instances, |P| in 3..=8; {gain_steps} gain and {bias_steps} bias improvements; tie instance settled by bias"
    ))
}

fn residuals(res: &Residuals) -> Check {
    ensure(res.solved >= 200, || format!("only {} solved runs", res.solved))?;
    ensure(res.nonzero == 0, || format!("{} runs with a nonzero exact residual", res.nonzero))?;
    ensure(res.worst_float <= 1e-9, || format!("float residual {:e}", res.worst_float))?;
    Ok(format!(
        "{} runs: exact residual 0 on every quotient, worst float residual {:e} <= 1e-9",
        res.solved, res.worst_float
    ))
}

fn scalability() -> Check {
    let problem = gen_monkey(3, 4);
    let states = problem.num_states();
    ensure(states >= 1 << 20, || format!("only {states} states"))?;
    let mdp = MssMdp::new(problem);
    let before = enumeration_count();
    let report = {
        let _guard = EnumerationGuard::forbid();
        solve_ssp(&mdp, SolveOptions::default()).map_err(|e| e.to_string())?
    };
    ensure(enumeration_count() == before, || "state space was enumerated".into())?;
    ensure(report.max_quotient_blocks <= 1000, || format!("{} blocks", report.max_quotient_blocks))?;
    ensure(report.iterations <= 20, || format!("{} iterations", report.iterations))?;
    ensure(report.residual == Rational::from_integer(0.into()), || "nonzero residual".into())?;
    let value = report.initial_value().ok_or("no value at the initial state")?;
    Ok(format!(
        "monkey(3,4): {states} states, value {value} ({:.4}), {} iterations, at most {} quotient blocks",
        value.to_f64().unwrap_or(f64::NAN),
        report.iterations,
        report.max_quotient_blocks
    ))
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = symblicit::cli::run(std::iter::once("symblicit").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("symblicit-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (gen, objective) in [(&["gen", "monkey", "2", "2"][..], "ssp"), (&["gen", "moats", "2", "2"][..], "emp"), (&["gen", "random", "6", "--seed", "3"][..], "emp")] {
        let (code, text) = cli(gen);
        ensure(code == 0, || format!("{gen:?} failed"))?;
        ensure(cli(gen).1 == text, || format!("{gen:?} differs between runs"))?;
        let path = dir.join(format!("{}.mss", gen[1]));
        std::fs::write(&path, &text).map_err(|e| e.to_string())?;
        let path = path.to_str().unwrap();
        let runs: Vec<(i32, String)> = (0..2).map(|_| cli(&["solve", "--objective", objective, path])).collect();
        let strip = |s: &str| s.lines().filter(|l| !l.starts_with("time_")).collect::<Vec<_>>().join("\n");
        ensure(runs[0].0 == 0 && runs[1].0 == 0, || format!("solve {path} failed"))?;
        ensure(strip(&runs[0].1) == strip(&runs[1].1), || format!("solve {path} differs between runs"))?;
        compared += 1;
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!("{compared} problems solved twice with identical output apart from time_ lines"))
}

fn main() {
    let mut results = BTreeMap::new();
    let secs = Duration::from_secs;
    results.insert(1, run(1, "pseudo-closure example", Duration::from_millis(1), example_closure));
    results.insert(2, run(2, "Boolean operations vs set semantics", secs(60), boolean_algebra));
    results.insert(3, run(3, "pseudo-element inclusion and canonical uniqueness", secs(60), canonical_subset));
    results.insert(4, run(4, "predecessor operator vs brute force", secs(30), pre_correctness));
    results.insert(5, run(5, "lumping vs naive refinement", secs(120), lumping));
    let mut res = Residuals::default();
    results.insert(6, run(6, "shortest path vs explicit strategy iteration", secs(300), || ssp_end_to_end(&mut res)));
    results.insert(7, run(7, "mean payoff vs explicit strategy iteration", secs(300), || emp_end_to_end(&mut res)));
    results.insert(8, run(8, "linear-system residuals", secs(1), || residuals(&res)));
    results.insert(9, run(9, "scalability on a 2^20-state benchmark", secs(600), scalability));
    results.insert(10, run(10, "deterministic CLI output", secs(60), determinism));
    let failed: Vec<_> = results.iter().filter(|(_, ok)| !**ok).map(|(k, _)| *k).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
