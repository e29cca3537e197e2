//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test -p pcfp --test acceptance -- --nocapture` to see the
//! per-criterion lines.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_traits::ToPrimitive;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;
use pcfp::eliminate::{
    eliminate_all, eliminate_location, eliminate_transition, remove_unsat_commands,
    rescale_nop_self_loop, suggest_unfold, TransitionRef,
};
use pcfp::expr::{
    apply_update, enumerate_domain, eval_pred, CmpOp, ConstEnv, IntExpr, Predicate, Update,
    Valuation, VarId,
};
use pcfp::frontend::{parse_model, parse_pcfp, parse_pipeline, parse_property, serialize_pcfp, Directive};
use pcfp::gen::{coin_model_text, exp_family};
use pcfp::pcfp::{
    build_semantics, check_deterministic, check_potential_goal, check_well_formed,
    mark_goal_states, GoalSpec, LocationId, Objective, Pcfp,
};
use pcfp::solver::{
    canonical_compare, model_stats, solve_mc_by_elimination, solve_mc_exact, solve_mdp, MdpMethod,
    OptDir,
};
use pcfp::unfold::{unfold, unfoldable_sets};

fn verdict(name: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("{name}: PASS");
    } else {
        println!("{name}: FAIL");
        for f in failures {
            println!("  - {f}");
        }
        panic!("{name} failed with {} issue(s)", failures.len());
    }
}

fn apply_pipeline(p: &Pcfp, g: &GoalSpec, directives: &[Directive]) -> Pcfp {
    let mut cur = p.clone();
    for d in directives {
        match d {
            Directive::Unfold(vars) => {
                cur = unfold(&cur, &vars.iter().cloned().collect()).expect("unfold applies");
            }
            Directive::EliminateAll => {
                let out = eliminate_all(&cur, g);
                assert!(!out.budget_hit, "budget hit in test pipeline");
                cur = out.pcfp;
            }
            Directive::RemoveUnsat => cur = remove_unsat_commands(&cur),
            Directive::Eliminate(eqs) => {
                let matching: Vec<LocationId> = (0..cur.locations().len())
                    .map(LocationId)
                    .filter(|l| {
                        eqs.iter().all(|(v, val)| {
                            cur.location(*l).label.get(v) == Some(*val)
                        })
                    })
                    .collect();
                for l in matching {
                    cur = eliminate_location(&cur, l, g).expect("selector eliminates").pcfp;
                }
            }
            Directive::Stats | Directive::Check => {}
        }
    }
    cur
}

/// Semantic equality of two updates over the program's domains.
fn updates_equal(p: &Pcfp, a: &Update, b: &Update) -> bool {
    let ranges: Vec<(VarId, i64, i64)> = p
        .vars()
        .iter()
        .map(|v| {
            let (lo, hi) = p.dom().bounds(v, p.consts()).unwrap();
            (v.clone(), lo, hi)
        })
        .collect();
    enumerate_domain(&ranges).into_iter().all(|nu| {
        apply_update(a, &nu, p.consts()).ok() == apply_update(b, &nu, p.consts()).ok()
    })
}

fn preds_equivalent(p: &Pcfp, a: &Predicate, b: &Predicate) -> bool {
    let mut vars: BTreeSet<VarId> = a.vars();
    vars.extend(b.vars());
    let ranges: Vec<(VarId, i64, i64)> = vars
        .iter()
        .map(|v| {
            let (lo, hi) = p.dom().bounds(v, p.consts()).unwrap();
            (v.clone(), lo, hi)
        })
        .collect();
    enumerate_domain(&ranges).into_iter().all(|nu| {
        eval_pred(a, &nu, p.consts()).ok() == eval_pred(b, &nu, p.consts()).ok()
    })
}

/// Criterion 1: the coin-game pipeline at N=6.
#[test]
fn criterion_1_coin_pipeline() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let p = parse_model(&coin_model_text(Some(6)).unwrap()).unwrap();
    let g = parse_property("P=? [ F x>=N & !f ]", &p).unwrap();

    let original = mark_goal_states(build_semantics(&p).unwrap(), &g).unwrap();
    if original.num_states() != 13 {
        failures.push(format!("original model has {} states, want 13", original.num_states()));
    }

    let reduced = apply_pipeline(&p, &g, &parse_pipeline("unfold f\neliminate-all\n").unwrap());
    let reduced_model = mark_goal_states(build_semantics(&reduced).unwrap(), &g).unwrap();
    if reduced_model.num_states() != 8 {
        failures.push(format!("reduced model has {} states, want 8", reduced_model.num_states()));
    }
    if reduced.locations().len() != 1 {
        failures.push(format!("reduced program has {} locations, want 1", reduced.locations().len()));
    }

    // the summarized command 0<x<N -> 3/4:(x'=x-1) + 1/4:(x'=x+2)
    let want_guard = Predicate::and(
        Predicate::cmp(CmpOp::Lt, IntExpr::Lit(0), IntExpr::var("x")),
        Predicate::cmp(CmpOp::Lt, IntExpr::var("x"), IntExpr::constant("N")),
    );
    let down = Update::assign([(
        "x",
        IntExpr::Sub(Box::new(IntExpr::var("x")), Box::new(IntExpr::Lit(1))),
    )]);
    let up = Update::assign([(
        "x",
        IntExpr::Add(Box::new(IntExpr::var("x")), Box::new(IntExpr::Lit(2))),
    )]);
    let found = reduced.commands().iter().any(|c| {
        if !preds_equivalent(&reduced, &c.guard, &want_guard) || c.destinations.len() != 2 {
            return false;
        }
        let mut took_down = false;
        let mut took_up = false;
        for d in &c.destinations {
            if d.prob == rat(3, 4) && updates_equal(&reduced, &d.update, &down) {
                took_down = true;
            }
            if d.prob == rat(1, 4) && updates_equal(&reduced, &d.update, &up) {
                took_up = true;
            }
        }
        took_down && took_up
    });
    if !found {
        failures.push("reduced program lacks the summarized 3/4 / 1/4 command".to_string());
    }

    let before = solve_mc_exact(&original).unwrap().value.as_exact().unwrap().clone();
    let after = solve_mc_by_elimination(&reduced_model)
        .unwrap()
        .value
        .as_exact()
        .unwrap()
        .clone();
    let oracle = oracle_chain_reach(&original, &|_| 0);
    if before != after {
        failures.push(format!("probabilities differ: {before} vs {after}"));
    }
    if before != oracle {
        failures.push(format!("probability {before} disagrees with the oracle {oracle}"));
    }
    if before != rat(10, 37) {
        failures.push(format!("win probability is {before}, expected 10/37"));
    }

    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 1.0 {
        failures.push(format!("pipeline took {elapsed:?}, budget is 1 s"));
    }
    verdict("criterion 1 (coin pipeline, N=6)", &failures);
}

/// Criterion 2: the coin game at desk scale, N = 10^4.
#[test]
fn criterion_2_coin_at_scale() {
    let started = Instant::now();
    let mut failures = Vec::new();

    let p = parse_model(&coin_model_text(None).unwrap())
        .unwrap()
        .with_const_values(&BTreeMap::from([("N".to_string(), 10_000)]))
        .unwrap();
    let g = parse_property("P=? [ F x>=N & !f ]", &p).unwrap();

    if p.transition_count() != 5 {
        failures.push(format!("program has {} transitions, want 5", p.transition_count()));
    }

    let original = mark_goal_states(build_semantics(&p).unwrap(), &g).unwrap();
    let stats = model_stats(&original);
    let within = |actual: usize, target: usize| {
        (actual as i64 - target as i64).unsigned_abs() as usize <= target / 100
    };
    if !within(stats.states, 20_000) {
        failures.push(format!("original states {} not within 1% of 20000", stats.states));
    }
    if !within(stats.transitions, 40_000) {
        failures.push(format!("original transitions {} not within 1% of 40000", stats.transitions));
    }

    let reduced = apply_pipeline(&p, &g, &parse_pipeline("unfold f\neliminate-all\n").unwrap());
    if reduced.transition_count() > 5 {
        failures.push(format!(
            "reduced program has {} transitions, want at most 5",
            reduced.transition_count()
        ));
    }
    let reduced_model = mark_goal_states(build_semantics(&reduced).unwrap(), &g).unwrap();
    let rstats = model_stats(&reduced_model);
    if !within(rstats.states, 10_000) {
        failures.push(format!("reduced states {} not within 1% of 10000", rstats.states));
    }
    if !within(rstats.transitions, 20_000) {
        failures.push(format!("reduced transitions {} not within 1% of 20000", rstats.transitions));
    }

    let before = solve_mc_by_elimination(&original).unwrap();
    let after = solve_mc_by_elimination(&reduced_model).unwrap();
    if before.value.as_exact() != after.value.as_exact() {
        failures.push("exact probabilities differ at N=10^4".to_string());
    }

    let elapsed = started.elapsed();
    if elapsed.as_secs_f64() >= 60.0 {
        failures.push(format!("end-to-end took {elapsed:?}, budget is 60 s"));
    }
    println!(
        "criterion 2 timing: {:.2} s total (states {} -> {})",
        elapsed.as_secs_f64(),
        stats.states,
        rstats.states
    );
    verdict("criterion 2 (coin at N=10^4)", &failures);
}

/// Criterion 3: exponential elimination complexity on the blow-up family.
#[test]
fn criterion_3_exponential_family() {
    let mut failures = Vec::new();
    for m in 2u32..=4 {
        let p = exp_family(m).unwrap();
        let g = parse_property("P=? [ F goal=1 ]", &p).unwrap();
        let entry = LocationId(0);
        let mid = LocationId(1);

        let model = mark_goal_states(build_semantics(&p).unwrap(), &g).unwrap();
        let before = solve_mc_exact(&model).unwrap().value.as_exact().unwrap().clone();
        // the initial valuation has x1=1, so the hit probability is c/2
        let c_half = {
            let denom = (1i64 << m) - 1;
            rat(1 << (m - 1), denom)
        };
        if before != c_half {
            failures.push(format!("m={m}: expected hit probability {c_half}, got {before}"));
        }

        let out = eliminate_location(&p, mid, &g).unwrap();
        let want = (1usize << m) - 1;
        if out.transition_eliminations != want {
            failures.push(format!(
                "m={m}: {} transition eliminations, want {want}",
                out.transition_eliminations
            ));
        }
        let at_entry = out.pcfp.commands_at(entry).count();
        if at_entry < (1usize << m) {
            failures.push(format!(
                "m={m}: {} commands at the entry location, want at least {}",
                at_entry,
                1usize << m
            ));
        }
        let after_model = mark_goal_states(build_semantics(&out.pcfp).unwrap(), &g).unwrap();
        let after = solve_mc_exact(&after_model).unwrap().value.as_exact().unwrap().clone();
        if after != before {
            failures.push(format!("m={m}: probability changed from {before} to {after}"));
        }
    }
    verdict("criterion 3 (exponential blow-up family)", &failures);
}

/// Criterion 4: preservation property suite over 500 random programs.
#[test]
fn criterion_4_preservation_suite() {
    let mut failures = Vec::new();
    let mut rng = StdRng::seed_from_u64(0x5eed_4001);
    let mut checked = 0usize;
    let mut attempts = 0usize;

    while checked < 500 && attempts < 50_000 {
        attempts += 1;
        let deterministic = checked % 2 == 0;
        let mut cfg = PcfpGenCfg::small(deterministic);
        if !deterministic {
            // keep the scheduler-enumeration oracle affordable
            cfg.max_locations = 2;
            cfg.max_vars = 2;
            cfg.max_dom = 3;
        }
        let (p, g) = random_pcfp(&mut rng, cfg);
        // The reduction theory assumes well-formed programs.
        let Ok(true) = check_well_formed(&p) else { continue };
        let model = match build_semantics(&p) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if model.num_states() > 120 || scheduler_count(&model) > 64 {
            continue;
        }
        if deterministic != check_deterministic(&p).unwrap() {
            continue;
        }
        checked += 1;

        let marked = mark_goal_states(model, &g).unwrap();
        let value_before = solver_value(&marked, g.objective);

        // (a) unfolding of every unfoldable set gives an equal model
        for set in unfoldable_sets(&p) {
            match unfold(&p, &set) {
                Ok(q) => {
                    let mq = build_semantics(&q).unwrap();
                    let mp = build_semantics(&p).unwrap();
                    if !canonical_compare(&mp, &mq) {
                        failures.push(format!(
                            "#{checked}: unfolding {set:?} changes the model"
                        ));
                    }
                }
                Err(e) => failures.push(format!("#{checked}: unfold {set:?} failed: {e}")),
            }
            if failures.len() > 10 {
                break;
            }
        }

        let check_after = |tag: &str, q: &Pcfp, failures: &mut Vec<String>| {
            let after = mark_goal_states(build_semantics(q).unwrap(), &g).unwrap();
            if scheduler_count(&after) > 4096 {
                return;
            }
            let value_after = solver_value(&after, g.objective);
            if value_after != value_before {
                failures.push(format!(
                    "#{checked}: {tag} changed the value from {value_before} to {value_after}"
                ));
            }
        };

        // (b) remove_unsat_commands always applies
        check_after("remove-unsat", &remove_unsat_commands(&p), &mut failures);

        // (b) transition elimination on up to two applicable transitions,
        // (c) with determinism preserved
        let mut tried = 0;
        'outer: for ci in 0..p.commands().len() {
            for di in 0..p.commands()[ci].destinations.len() {
                if tried >= 2 {
                    break 'outer;
                }
                let t = TransitionRef { command: ci, destination: di };
                if let Ok(q) = eliminate_transition(&p, t, &g) {
                    tried += 1;
                    check_after(&format!("eliminate-transition {ci}/{di}"), &q, &mut failures);
                    if deterministic && !check_deterministic(&q).unwrap() {
                        failures.push(format!(
                            "#{checked}: transition elimination broke determinism"
                        ));
                    }
                }
            }
        }

        // (b) location elimination on the first eliminable location
        for l in pcfp::eliminate::eliminable_locations(&p, &g).into_iter().take(1) {
            if let Ok(r) = eliminate_location(&p, l, &g) {
                check_after("eliminate-location", &r.pcfp, &mut failures);
            }
        }

        // (b) self-loop rules wherever they apply
        let mut rescales = 0;
        let mut idems = 0;
        'rules: for ci in 0..p.commands().len() {
            let cmd = &p.commands()[ci];
            for di in 0..cmd.destinations.len() {
                let t = TransitionRef { command: ci, destination: di };
                if rescales < 2 {
                    if let Ok(q) = rescale_nop_self_loop(&p, t) {
                        rescales += 1;
                        check_after("rescale-nop-self-loop", &q, &mut failures);
                    }
                }
                if idems < 2 {
                    if let Ok(q) = pcfp::eliminate::eliminate_idempotent_self_loop(&p, t, &g) {
                        idems += 1;
                        check_after("idempotent-self-loop", &q, &mut failures);
                    }
                }
                if failures.len() > 10 {
                    break 'rules;
                }
            }
        }

        if failures.len() > 10 {
            break;
        }
    }
    if checked < 500 {
        failures.push(format!("only {checked} programs generated within the attempt budget"));
    }
    println!("criterion 4 coverage: {checked} programs, {attempts} attempts");
    verdict("criterion 4 (preservation on 500 random programs)", &failures);
}

/// Criterion 5: the Hoare equivalence of weakest preconditions.
#[test]
fn criterion_5_wp_correctness() {
    let mut failures = Vec::new();
    let mut rng = StdRng::seed_from_u64(0x5eed_5002);
    for i in 0..1000 {
        let n_vars = rng.gen_range(1..=3);
        let vars: Vec<(VarId, i64)> = (0..n_vars)
            .map(|k| (VarId::new(format!("v{k}")), rng.gen_range(1..=4)))
            .collect();
        let mut u = random_update(&mut rng, &vars, 3);
        if i % 5 == 0 {
            u = u.chain(&random_update(&mut rng, &vars, 2));
        }
        let phi = random_pred(&mut rng, &vars, 2);
        let pre = pcfp::expr::wp(&u, &phi);

        let ranges: Vec<(VarId, i64, i64)> =
            vars.iter().map(|(v, hi)| (v.clone(), 0, *hi)).collect();
        let consts = ConstEnv::new();
        for nu in enumerate_domain(&ranges) {
            let lhs = eval_pred(&pre, &nu, &consts).unwrap();
            let after = apply_update(&u, &nu, &consts).unwrap();
            let rhs = eval_pred(&phi, &after, &consts).unwrap();
            if lhs != rhs {
                failures.push(format!(
                    "pair {i}: wp({u}, {phi}) wrong at {nu}: pre={lhs}, post={rhs}"
                ));
                break;
            }
        }
        if failures.len() > 5 {
            break;
        }
    }
    verdict("criterion 5 (wp Hoare equivalence, 1000 pairs)", &failures);
}

/// Criterion 6: solver cross-validation.
#[test]
fn criterion_6_solver_cross_validation() {
    let mut failures = Vec::new();
    let mut rng = StdRng::seed_from_u64(0x5eed_6003);

    for i in 0..200 {
        let m = random_chain(&mut rng, 12);
        let a = solve_mc_exact(&m).unwrap().value.as_exact().unwrap().clone();
        let b = solve_mc_by_elimination(&m).unwrap().value.as_exact().unwrap().clone();
        if a != b {
            failures.push(format!("chain {i}: gaussian {a} vs elimination {b}"));
        }
        let oracle = oracle_chain_reach(&m, &|_| 0);
        if a != oracle {
            failures.push(format!("chain {i}: solver {a} vs oracle {oracle}"));
        }
        if failures.len() > 5 {
            break;
        }
    }

    for i in 0..100 {
        let m = random_model(&mut rng, 6, 3);
        for dir in [OptDir::Maximize, OptDir::Minimize] {
            let exact = solve_mdp(&m, dir, MdpMethod::SchedulerEnumerationExact)
                .unwrap()
                .value
                .as_exact()
                .unwrap()
                .clone();
            let vi = solve_mdp(&m, dir, MdpMethod::ValueIteration(1e-10)).unwrap();
            let delta = (vi.value.to_f64() - exact.to_f64().unwrap()).abs();
            if delta > 1e-9 {
                failures.push(format!("mdp {i} {dir:?}: |vi - exact| = {delta:e}"));
            }
            let oracle = oracle_mdp_reach(&m, dir == OptDir::Maximize);
            if exact != oracle {
                failures.push(format!("mdp {i} {dir:?}: enumeration disagrees with oracle"));
            }
        }
        if failures.len() > 5 {
            break;
        }
    }
    verdict("criterion 6 (solver cross-validation)", &failures);
}

/// Criterion 7: format round-trips and the coin-program shape.
#[test]
fn criterion_7_format_round_trips() {
    let mut failures = Vec::new();

    let coin = parse_model(&coin_model_text(Some(6)).unwrap()).unwrap();
    if coin.locations().len() != 1 || coin.commands().len() != 3 || coin.transition_count() != 5 {
        failures.push(format!(
            "coin program parses to {} locations / {} commands / {} destinations, want 1/3/5",
            coin.locations().len(),
            coin.commands().len(),
            coin.transition_count()
        ));
    }

    let g = parse_property("P=? [ F x>=N & !f ]", &coin).unwrap();
    let unfolded = unfold(&coin, &BTreeSet::from([VarId::new("f")])).unwrap();
    let reduced = eliminate_all(&unfolded, &g).pcfp;
    let family = exp_family(3).unwrap();
    for (name, p) in [
        ("coin", &coin),
        ("unfolded", &unfolded),
        ("reduced", &reduced),
        ("family", &family),
    ] {
        let text = serialize_pcfp(p);
        match parse_pcfp(&text) {
            Ok(q) if &q == p => {}
            Ok(_) => failures.push(format!("{name}: round-trip is not the identity")),
            Err(e) => failures.push(format!("{name}: round-trip parse failed: {e}")),
        }
    }

    let mut rng = StdRng::seed_from_u64(0x5eed_7004);
    for i in 0..200 {
        let (p, _) = random_pcfp(&mut rng, PcfpGenCfg::small(i % 2 == 0));
        let text = serialize_pcfp(&p);
        match parse_pcfp(&text) {
            Ok(q) if q == p => {}
            Ok(_) => failures.push(format!("random {i}: round-trip is not the identity")),
            Err(e) => failures.push(format!("random {i}: round-trip parse failed: {e}")),
        }
        if failures.len() > 5 {
            break;
        }
    }
    verdict("criterion 7 (format round-trips)", &failures);
}

/// Extra coverage tying the suite together: the property-directed heuristic
/// suggests the same first step the worked pipeline uses, and potential-goal
/// classification matches the worked example.
#[test]
fn heuristic_and_potential_goals_on_the_coin() {
    let p = parse_model(&coin_model_text(Some(6)).unwrap()).unwrap();
    let g = parse_property("P=? [ F x>=N & !f ]", &p).unwrap();
    assert_eq!(suggest_unfold(&p, &g), Some(BTreeSet::from([VarId::new("f")])));

    let q = unfold(&p, &BTreeSet::from([VarId::new("f")])).unwrap();
    let theta = parse_property("P=? [ F x=N & !f ]", &q).unwrap();
    // the location labeled !f is a potential goal, the one labeled f is not
    let nf = LocationId(0);
    let f = LocationId(1);
    assert_eq!(q.location(nf).label, Valuation::from_pairs([("f", 0)]));
    assert!(check_potential_goal(&q, nf, &theta));
    assert!(!check_potential_goal(&q, f, &theta));
    // goal objective survives: Forced on the deterministic program
    assert_eq!(theta.objective, Objective::Forced);
}
