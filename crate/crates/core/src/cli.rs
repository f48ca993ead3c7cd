//! Command-line front end.

use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::explicit::compare;
use crate::lumping::lump;
use crate::mdp::MonotonicMdp;
use crate::strategy::{initial_proper_strategy, proper_states, solve_emp, solve_ssp, SolveOptions, SolveReport};
use crate::strips::{fmt_rational, gen_monkey, gen_moats, gen_random, MssMdp, MssProblem, Objective};
use crate::lattice::CondSet;
use crate::Rational;

#[derive(Parser, Debug)]
#[command(name = "symblicit", version, about = "Strategy synthesis for monotonic stochastic STRIPS problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Ssp,
    Emp,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Ssp => Objective::Ssp,
            ObjectiveArg::Emp => Objective::Emp,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Initial,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute an optimal strategy.
    Solve {
        #[arg(long, value_enum, default_value = "ssp")]
        objective: ObjectiveArg,
        /// Maximise the mean payoff instead of minimising it.
        #[arg(long)]
        maximize: bool,
        /// Also solve each quotient in floating point and report the residual.
        #[arg(long)]
        float_check: bool,
        file: String,
    },
    /// Print a generated benchmark problem.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Lump the chain induced by a strategy.
    Lump {
        file: String,
        #[arg(long, value_enum, default_value = "initial")]
        strategy: StrategyArg,
    },
    /// Check the symbolic solver against state enumeration.
    Compare {
        file: String,
        #[arg(long, value_enum, default_value = "ssp")]
        objective: ObjectiveArg,
        /// Largest state space to enumerate.
        #[arg(long, default_value_t = 1 << 16)]
        cap: u128,
    },
    /// Problem and solver statistics.
    Stats {
        file: String,
        #[arg(long, value_enum, default_value = "ssp")]
        objective: ObjectiveArg,
    },
}

#[derive(Subcommand, Debug)]
enum Family {
    /// Monkey and bananas with P pieces per stick and S sticks.
    Monkey { pieces: usize, sticks: usize },
    /// Moats and castles with D moat depths and C castles.
    Moats { depths: usize, castles: usize },
    /// Random problem over N conditions.
    Random {
        conditions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(1, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(1, e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn load(path: &str, mode: Objective) -> std::result::Result<MssProblem, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(1, format!("{path}: {e}")))?;
    let problem = MssProblem::parse(&text).map_err(|e| Failure(1, format!("{path}: {e}")))?;
    let diags = problem.validate(mode);
    if !diags.is_empty() {
        return Err(Failure(1, format!("{path}: {}", diags.join("; "))));
    }
    Ok(problem)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Solve {
            objective,
            maximize,
            float_check,
            file,
        } => {
            let mode = Objective::from(objective);
            if maximize && mode == Objective::Ssp {
                return Err(Failure(2, "--maximize applies to the emp objective only".into()));
            }
            let problem = load(&file, mode)?;
            let opts = SolveOptions { float_check };
            let (mdp, sign) = if maximize {
                (MssMdp::new(problem.negated()), -1)
            } else {
                (MssMdp::new(problem), 1)
            };
            let report = match mode {
                Objective::Ssp => solve_ssp(&mdp, opts)?,
                Objective::Emp => solve_emp(&mdp, opts)?,
            };
            write_report(out, &mdp, &report, sign, true)?;
        }
        Command::Gen { family } => {
            let problem = match family {
                Family::Monkey { pieces, sticks } => {
                    check_positive(&[pieces, sticks])?;
                    gen_monkey(pieces, sticks)
                }
                Family::Moats { depths, castles } => {
                    check_positive(&[depths, castles])?;
                    gen_moats(depths, castles)
                }
                Family::Random { conditions, seed } => {
                    if !(1..=crate::lattice::MAX_CONDITIONS).contains(&conditions) {
                        return Err(Failure(2, format!("conditions must lie in 1..={}", crate::lattice::MAX_CONDITIONS)));
                    }
                    gen_random(conditions, &mut ChaCha8Rng::seed_from_u64(seed))
                }
            };
            write!(out, "{}", problem.to_text())?;
        }
        Command::Lump { file, strategy: StrategyArg::Initial } => {
            let mdp = MssMdp::new(load(&file, Objective::Ssp)?);
            let proper = proper_states(&mdp)?;
            if proper.region.is_empty() {
                return Err(Error::NoProperState.into());
            }
            let lambda = initial_proper_strategy(&mdp, &proper);
            let goal = mdp.goal().expect("problems always have a goal");
            let res = lump(&mdp, &lambda, Some(&goal));
            writeln!(out, "blocks={}", res.len())?;
            writeln!(out, "splitters={}", res.splitters_processed)?;
            writeln!(out, "splits={}", res.splits)?;
            for (i, b) in res.blocks.iter().enumerate() {
                writeln!(
                    out,
                    "block {} cost={}{} {}",
                    i,
                    fmt_rational(&b.cost),
                    if b.absorbing { " goal" } else { "" },
                    show_region(&mdp, &b.region)
                )?;
            }
        }
        Command::Compare { file, objective, cap } => {
            let mode = Objective::from(objective);
            let mdp = MssMdp::new(load(&file, mode)?);
            let c = compare(&mdp, mode, cap)?;
            writeln!(out, "states={}", c.states)?;
            writeln!(out, "symbolic_value={}", opt(&c.symbolic_value))?;
            writeln!(out, "explicit_value={}", opt(&c.explicit_value))?;
            writeln!(out, "values_match={}", c.values_match)?;
            writeln!(out, "strategy_match={}", c.strategy_match)?;
            writeln!(out, "match={}", c.matches())?;
            if !c.matches() {
                return Err(Failure(1, "symbolic and explicit results differ".into()));
            }
        }
        Command::Stats { file, objective } => {
            let mode = Objective::from(objective);
            let problem = load(&file, mode)?;
            let mdp = MssMdp::new(problem);
            writeln!(out, "conditions={}", mdp.problem().conditions.len())?;
            writeln!(out, "operators={}", mdp.problem().operators.len())?;
            writeln!(out, "states={}", mdp.problem().num_states())?;
            writeln!(out, "stutter={}", mdp.has_stutter())?;
            let report = match mode {
                Objective::Ssp => solve_ssp(&mdp, SolveOptions::default())?,
                Objective::Emp => solve_emp(&mdp, SolveOptions::default())?,
            };
            if let Some(p) = &report.proper {
                writeln!(out, "proper_region_elements={}", p.len())?;
            }
            writeln!(out, "final_quotient_blocks={}", report.lumped.len())?;
            writeln!(out, "strategy_blocks={}", report.strategy.len())?;
            writeln!(out, "gain_improvements={}", report.gain_improvements)?;
            writeln!(out, "bias_improvements={}", report.bias_improvements)?;
            write_report(out, &mdp, &report, 1, false)?;
        }
    }
    Ok(())
}

fn check_positive(values: &[usize]) -> Outcome {
    if values.contains(&0) {
        return Err(Failure(2, "parameters must be at least 1".into()));
    }
    Ok(())
}

fn opt(r: &Option<Rational>) -> String {
    r.as_ref().map_or_else(|| "none".to_string(), fmt_rational)
}

fn show_region(mdp: &MssMdp, region: &crate::pseudo::PseudoAntichain<CondSet>) -> String {
    region.display_with(|s| mdp.problem().format_set(s))
}

fn write_report(out: &mut dyn Write, mdp: &MssMdp, report: &SolveReport<CondSet>, sign: i64, strategy: bool) -> Outcome {
    let value = report.initial_value().map(|v| v * Rational::from_integer(sign.into()));
    writeln!(out, "value={}", opt(&value))?;
    if let Some(v) = &value {
        writeln!(out, "value_decimal={:.6}", v.to_f64().unwrap_or(f64::NAN))?;
    }
    writeln!(out, "iterations={}", report.iterations)?;
    writeln!(out, "max_quotient_blocks={}", report.max_quotient_blocks)?;
    writeln!(out, "residual={}", fmt_rational(&report.residual))?;
    if let Some(r) = report.float_residual {
        writeln!(out, "float_residual={r:e}")?;
    }
    let t = &report.timings;
    writeln!(out, "time_lump_s={:.6}", t.lump.as_secs_f64())?;
    writeln!(out, "time_solve_s={:.6}", t.solve.as_secs_f64())?;
    writeln!(out, "time_improve_s={:.6}", t.improve.as_secs_f64())?;
    writeln!(out, "time_total_s={:.6}", t.total.as_secs_f64())?;
    if strategy {
        writeln!(out, "strategy:")?;
        for (region, action) in &report.strategy.blocks {
            writeln!(out, "{} -> {}", show_region(mdp, region), mdp.action_name(*action))?;
        }
    }
    Ok(())
}
