//! Command-line driver: reduce programs along a pipeline or automatically,
//! certify that reductions preserve the queried probability, report model
//! statistics, and generate the built-in benchmark families.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pcfp::eliminate::{eliminate_all, eliminate_location, remove_unsat_commands, suggest_unfold};
use pcfp::frontend::{
    export_explicit, parse_model, parse_pcfp, parse_pipeline, parse_property, serialize_pcfp,
    Directive,
};
use pcfp::gen::{coin_model_text, exp_family};
use pcfp::pcfp::{
    build_semantics, check_deterministic, mark_goal_states, ExplicitModel, GoalSpec, LocationId,
    Objective, Pcfp,
};
use pcfp::solver::{
    model_stats, solve_mc_by_elimination, solve_mdp, MdpMethod, OptDir, ReachResult,
};
use pcfp::unfold::unfold;

use report::{render_report, ReportSide, Verdict};

#[derive(Parser)]
#[command(name = "pcfp", version, about = "Reduce probabilistic guarded-command programs by unfolding and location elimination, with certified exact reachability")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a model along a pipeline script or automatically.
    Reduce(ReduceArgs),
    /// Compute the reachability probability of a property.
    Check(CheckArgs),
    /// Print explicit-model statistics.
    Stats(StatsArgs),
    /// Emit a built-in benchmark model.
    Gen(GenArgs),
}

#[derive(Args)]
struct ReduceArgs {
    /// Model file (.pm text or PCFP JSON).
    model: PathBuf,
    /// Pipeline script to run.
    #[arg(long, conflicts_with = "auto")]
    pipeline: Option<PathBuf>,
    /// Alternate the unfold heuristic and elimination until no progress.
    #[arg(long)]
    auto: bool,
    /// Reachability property, e.g. "P=? [ F x>=N & !f ]".
    #[arg(long)]
    prop: String,
    /// Set a constant, e.g. --const N=6 (repeatable).
    #[arg(long = "const", value_name = "NAME=INT")]
    consts: Vec<String>,
    /// Write the reduced program as JSON.
    #[arg(long, value_name = "FILE")]
    emit_pcfp: Option<PathBuf>,
    /// Write the reduced explicit model as text.
    #[arg(long, value_name = "FILE")]
    emit_model: Option<PathBuf>,
    /// Write a before/after report.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// Solve both models and fail on any exact mismatch.
    #[arg(long)]
    certify: bool,
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    #[arg(long)]
    prop: String,
    #[arg(long = "const", value_name = "NAME=INT")]
    consts: Vec<String>,
}

#[derive(Args)]
struct StatsArgs {
    model: PathBuf,
    #[arg(long = "const", value_name = "NAME=INT")]
    consts: Vec<String>,
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    family: GenFamily,
}

#[derive(Subcommand)]
enum GenFamily {
    /// The coin game; without --n the bound stays a free constant.
    Coin {
        #[arg(long)]
        n: Option<i64>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// The exponential-elimination family, as PCFP JSON.
    Expfamily {
        #[arg(long)]
        m: u32,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

/// Failure carrying the process exit code: 1 usage/parse/validation,
/// 2 certification failure, 3 budget exhaustion.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn certify(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn budget(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::usage(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Cmd::Reduce(args) => reduce(args),
        Cmd::Check(args) => check(args),
        Cmd::Stats(args) => stats(args),
        Cmd::Gen(args) => gen(args),
    }
}

fn parse_consts(pairs: &[String]) -> Result<BTreeMap<String, i64>, Failure> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("bad --const '{pair}'; expected NAME=INT")))?;
        let value: i64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("bad --const value in '{pair}'")))?;
        out.insert(name.trim().to_string(), value);
    }
    Ok(out)
}

fn load_model(path: &Path, consts: &[String]) -> Result<Pcfp, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let p = if text.trim_start().starts_with('{') {
        parse_pcfp(&text)?
    } else {
        parse_model(&text)?
    };
    let values = parse_consts(consts)?;
    Ok(p.with_const_values(&values)?)
}

/// Build and mark the explicit model; requires instantiated constants.
fn build_marked(p: &Pcfp, g: &GoalSpec) -> Result<ExplicitModel, Failure> {
    let m = build_semantics(p).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(mark_goal_states(m, g)?)
}

/// Solve a marked model under the property's objective. Chains are solved
/// exactly by state elimination; nondeterministic models by exact scheduler
/// enumeration when feasible, value iteration otherwise.
fn solve(m: &ExplicitModel, objective: Objective) -> Result<ReachResult, Failure> {
    match objective {
        Objective::Forced => {
            if !m.is_chain() {
                return Err(Failure::usage(
                    "P=? needs a deterministic model; use Pmax=? or Pmin=?",
                ));
            }
            Ok(solve_mc_by_elimination(m)?)
        }
        Objective::Maximize | Objective::Minimize => {
            let dir = if objective == Objective::Maximize {
                OptDir::Maximize
            } else {
                OptDir::Minimize
            };
            match solve_mdp(m, dir, MdpMethod::SchedulerEnumerationExact) {
                Ok(r) => Ok(r),
                Err(pcfp::solver::SolveError::TooLargeForEnumeration(_)) => {
                    Ok(solve_mdp(m, dir, MdpMethod::ValueIteration(1e-10))?)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn apply_directives(
    p: Pcfp,
    g: &GoalSpec,
    directives: &[Directive],
) -> Result<(Pcfp, bool), Failure> {
    let mut cur = p;
    let mut budget_hit = false;
    for d in directives {
        match d {
            Directive::Unfold(vars) => {
                let set: BTreeSet<_> = vars.iter().cloned().collect();
                cur = unfold(&cur, &set)?;
            }
            Directive::EliminateAll => {
                let out = eliminate_all(&cur, g);
                budget_hit |= out.budget_hit;
                cur = out.pcfp;
            }
            Directive::RemoveUnsat => cur = remove_unsat_commands(&cur),
            Directive::Eliminate(eqs) => {
                let matching: Vec<LocationId> = (0..cur.locations().len())
                    .map(LocationId)
                    .filter(|l| {
                        eqs.iter().all(|(v, val)| cur.location(*l).label.get(v) == Some(*val))
                    })
                    .collect();
                if matching.is_empty() {
                    return Err(Failure::usage(format!(
                        "eliminate: no location matches the selector {eqs:?}"
                    )));
                }
                for l in matching {
                    cur = eliminate_location(&cur, l, g)
                        .map_err(|e| {
                            Failure::usage(format!(
                                "eliminate {}: {e}",
                                cur.location(l).display_name()
                            ))
                        })?
                        .pcfp;
                }
            }
            Directive::Stats => match build_marked(&cur, g) {
                Ok(m) => {
                    let s = model_stats(&m);
                    println!(
                        "stats: {} states, {} transitions, {} actions",
                        s.states, s.transitions, s.actions
                    );
                }
                Err(f) => println!("stats: unavailable ({})", f.message),
            },
            Directive::Check => {
                let m = build_marked(&cur, g)?;
                let r = solve(&m, g.objective)?;
                println!("check: {} = {}", g.objective, r.value);
            }
        }
    }
    Ok((cur, budget_hit))
}

/// The automatic strategy: eliminate what is already eliminable, then
/// alternate the unfold suggestion with elimination until a round stops
/// making progress; fruitless unfoldings are rolled back.
fn auto_reduce(p: Pcfp, g: &GoalSpec) -> (Pcfp, bool) {
    let first = eliminate_all(&p, g);
    let mut cur = first.pcfp;
    let mut budget_hit = first.budget_hit;
    loop {
        let Some(set) = suggest_unfold(&cur, g) else {
            return (cur, budget_hit);
        };
        let Ok(unfolded) = unfold(&cur, &set) else {
            return (cur, budget_hit);
        };
        let out = eliminate_all(&unfolded, g);
        budget_hit |= out.budget_hit;
        if out.locations_eliminated == 0 {
            // the unfolding bought nothing; keep the smaller program
            return (cur, budget_hit);
        }
        cur = out.pcfp;
    }
}

fn reduce(args: ReduceArgs) -> Result<(), Failure> {
    let p = load_model(&args.model, &args.consts)?;
    let g = parse_property(&args.prop, &p)?;

    let reduction_started = Instant::now();
    let (reduced, budget_hit) = if args.auto {
        let (reduced, budget_hit) = auto_reduce(p.clone(), &g);
        (reduced, budget_hit)
    } else if let Some(script) = &args.pipeline {
        let text = fs::read_to_string(script)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", script.display())))?;
        apply_directives(p.clone(), &g, &parse_pipeline(&text)?)?
    } else {
        return Err(Failure::usage("reduce needs either --pipeline or --auto"));
    };
    let reduction_time = reduction_started.elapsed();

    if let Some(path) = &args.emit_pcfp {
        fs::write(path, serialize_pcfp(&reduced))
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    }

    let needs_models =
        args.certify || args.report.is_some() || args.emit_model.is_some();
    if needs_models {
        let t0 = Instant::now();
        let original_model = build_marked(&p, &g)?;
        let build_before = t0.elapsed();
        let t1 = Instant::now();
        let reduced_model = build_marked(&reduced, &g)?;
        let build_after = t1.elapsed();

        if let Some(path) = &args.emit_model {
            fs::write(path, export_explicit(&reduced_model))
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        }

        let t2 = Instant::now();
        let before = solve(&original_model, g.objective)?;
        let check_before = t2.elapsed();
        let t3 = Instant::now();
        let after = solve(&reduced_model, g.objective)?;
        let check_after = t3.elapsed();

        let verdict = if args.certify {
            match (before.value.as_exact(), after.value.as_exact()) {
                (Some(a), Some(b)) if a == b => Verdict::Pass,
                (Some(_), Some(_)) => Verdict::Fail,
                _ => {
                    return Err(Failure::usage(
                        "certification needs exact solving; this model is too large \
                         for exact optimization",
                    ))
                }
            }
        } else {
            Verdict::Skipped
        };

        let text = render_report(
            &ReportSide {
                program: &p,
                stats: model_stats(&original_model),
                build: build_before,
                check: check_before,
                result: &before,
            },
            &ReportSide {
                program: &reduced,
                stats: model_stats(&reduced_model),
                build: build_after,
                check: check_after,
                result: &after,
            },
            reduction_time,
            verdict,
        );
        print!("{text}");
        if let Some(path) = &args.report {
            fs::write(path, &text)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
        }
        if verdict == Verdict::Fail {
            return Err(Failure::certify("probabilities differ between the models"));
        }
    } else {
        println!(
            "reduced: {} locations, {} commands, {} transitions",
            reduced.locations().len(),
            reduced.commands().len(),
            reduced.transition_count()
        );
    }

    if budget_hit {
        return Err(Failure::budget(
            "the elimination budget was exhausted; the emitted program is \
             reduced only partially (still semantics-preserving)",
        ));
    }
    Ok(())
}

fn check(args: CheckArgs) -> Result<(), Failure> {
    let p = load_model(&args.model, &args.consts)?;
    let g = parse_property(&args.prop, &p)?;
    if g.objective == Objective::Forced && !check_deterministic(&p)? {
        return Err(Failure::usage(
            "P=? needs a deterministic model; use Pmax=? or Pmin=?",
        ));
    }
    let m = build_marked(&p, &g)?;
    let r = solve(&m, g.objective)?;
    match &r.value {
        pcfp::solver::Value::Exact(v) => {
            println!("{} = {} (~ {:.10})", g.objective, v, r.value.to_f64());
        }
        pcfp::solver::Value::Approx(v) => println!("{} ~ {:.10}", g.objective, v),
    }
    Ok(())
}

fn stats(args: StatsArgs) -> Result<(), Failure> {
    let p = load_model(&args.model, &args.consts)?;
    let m = build_semantics(&p).map_err(|e| Failure::usage(e.to_string()))?;
    let s = model_stats(&m);
    println!("states      {}", s.states);
    println!("transitions {}", s.transitions);
    println!("actions     {}", s.actions);
    println!(
        "program     {} locations, {} commands, {} transitions",
        p.locations().len(),
        p.commands().len(),
        p.transition_count()
    );
    if m.bottom().is_some() {
        println!("note: the program is not well-formed (out-of-domain state reachable)");
    }
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let (text, out) = match args.family {
        GenFamily::Coin { n, out } => (coin_model_text(n)?, out),
        GenFamily::Expfamily { m, out } => (serialize_pcfp(&exp_family(m)?), out),
    };
    match out {
        Some(path) => fs::write(&path, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}
