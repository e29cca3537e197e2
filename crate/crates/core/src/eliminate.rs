//! The reduction engine: transition elimination, location elimination,
//! removal of never-enabled commands, the two self-loop rules, and the
//! unfold-selection heuristic.
//!
//! All transformations preserve the exact reachability probability of the
//! goal specification they are given; conservative `Unknown` answers from
//! the enumeration-based checks make a rule skip, never misfire.

use std::collections::BTreeSet;

use log::warn;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::expr::{
    check_idempotent, check_sat, simplify, wp, Answer, Predicate, VarId,
    DEFAULT_SAT_BUDGET,
};
use crate::pcfp::{
    check_potential_goal, ActionTag, Command, Destination, GoalSpec, LocationId, LocationInfo,
    Pcfp,
};
use crate::unfold::{unfold, unfoldable_sets};

/// Command-count budget at which [`eliminate_all`] stops transforming.
pub const DEFAULT_COMMAND_BUDGET: usize = 10_000;

/// Location-count budget for tentative unfoldings in [`suggest_unfold`].
const SUGGEST_LOCATION_BUDGET: usize = 10_000;

/// A transition inside a program: one destination of one command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionRef {
    pub command: usize,
    pub destination: usize,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ElimError {
    #[error("transition reference out of range")]
    BadTransition,

    #[error("the target location is a potential goal")]
    PotentialGoalTarget(LocationId),

    #[error("the target location has no commands")]
    NoCommandsAtTarget(LocationId),

    #[error("cannot eliminate the initial location")]
    IsInitial(LocationId),

    #[error("location has a self-loop")]
    HasSelfLoop(LocationId),

    #[error("location is a potential goal")]
    PotentialGoal(LocationId),

    #[error("self-loop probability is 1")]
    FullLoop,

    #[error("the update of this self-loop is not a no-op")]
    NotNop,

    #[error("the transition is not a self-loop")]
    NotSelfLoop,

    #[error("the update of this self-loop is not provably idempotent")]
    NotIdempotent,
}

/// Size data of one transition elimination before pruning and merging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ElimTrace {
    /// Commands created by the rule (the eliminated command not counted).
    pub commands_created: usize,
    /// Transitions of the created commands, before merging and pruning.
    pub transitions_created: usize,
    /// Commands dropped right away because their guard is unsatisfiable.
    pub commands_pruned: usize,
    /// Whether an escape command to a deadlock location was added because
    /// the target's guards do not cover the image of the update.
    pub gap_completed: bool,
}

/// Number of destinations in the transition's command that share its target.
pub fn multiplicity(p: &Pcfp, t: TransitionRef) -> usize {
    let cmd = &p.commands()[t.command];
    let target = cmd.destinations[t.destination].target;
    cmd.destinations.iter().filter(|d| d.target == target).count()
}

/// Merge parallel destinations (same update, same target) by summing their
/// probabilities; first-occurrence order is kept.
fn merge_parallel(dests: Vec<Destination>) -> Vec<Destination> {
    let mut out: Vec<Destination> = Vec::with_capacity(dests.len());
    for d in dests {
        match out
            .iter_mut()
            .find(|o| o.target == d.target && o.update == d.update)
        {
            Some(o) => o.prob += d.prob,
            None => out.push(d),
        }
    }
    out
}

/// A tag not yet used by any command in `taken`.
fn fresh_tag(taken: &BTreeSet<ActionTag>, parent: &ActionTag, suffix: &str) -> ActionTag {
    let mut candidate = parent.derived(suffix);
    let mut n = 1;
    while taken.contains(&candidate) {
        n += 1;
        candidate = parent.derived(&format!("{suffix}.{n}"));
    }
    candidate
}

/// Find a deadlock location with the given label, or create one named after
/// `base`. Any location without commands and with an equal label behaves
/// identically for the states routed there.
fn find_or_make_sink(p: &mut Pcfp, base: &str, label: &crate::expr::Valuation) -> LocationId {
    let with_commands: BTreeSet<usize> = p.commands().iter().map(|c| c.source.0).collect();
    for (i, info) in p.locations().iter().enumerate() {
        if !with_commands.contains(&i) && &info.label == label {
            return LocationId(i);
        }
    }
    let names: BTreeSet<(String, crate::expr::Valuation)> = p
        .locations()
        .iter()
        .map(|l| (l.base.clone(), l.label.clone()))
        .collect();
    let mut name = format!("{base}_stuck");
    let mut n = 1;
    while names.contains(&(name.clone(), label.clone())) {
        n += 1;
        name = format!("{base}_stuck{n}");
    }
    p.push_location(LocationInfo::with_label(name, label.clone()))
}

/// Eliminate one transition `l --phi -> p1:u1 --> l1`.
///
/// The whole command is removed and replaced by one new command per command
/// at `l1`: the new guard is `phi && wp(u1, psi_i)` and the new branches are
/// the untouched sibling branches plus, for each branch `q:v:l'` of the
/// target command, `p1*q : (u1 ; v) : l'`. New commands with unsatisfiable
/// guards are dropped immediately and parallel branches merged.
///
/// When the guards at `l1` do not provably cover every state the update can
/// produce, one escape command routes the residual branch to a deadlock
/// location with `l1`'s label; this keeps the probability of the sibling
/// branches exactly right even for programs that can get stuck at `l1`.
pub fn eliminate_transition(
    p: &Pcfp,
    t: TransitionRef,
    g: &GoalSpec,
) -> Result<Pcfp, ElimError> {
    eliminate_transition_traced(p, t, g).map(|(p, _)| p)
}

/// [`eliminate_transition`] together with size data of the rewrite.
pub fn eliminate_transition_traced(
    p: &Pcfp,
    t: TransitionRef,
    g: &GoalSpec,
) -> Result<(Pcfp, ElimTrace), ElimError> {
    let cmd = p
        .commands()
        .get(t.command)
        .ok_or(ElimError::BadTransition)?
        .clone();
    let dest = cmd
        .destinations
        .get(t.destination)
        .ok_or(ElimError::BadTransition)?
        .clone();
    let target = dest.target;
    if check_potential_goal(p, target, g) {
        return Err(ElimError::PotentialGoalTarget(target));
    }
    let target_cmds: Vec<Command> = p.commands_at(target).map(|(_, c)| c.clone()).collect();
    if target_cmds.is_empty() {
        return Err(ElimError::NoCommandsAtTarget(target));
    }

    let siblings: Vec<Destination> = cmd
        .destinations
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t.destination)
        .map(|(_, d)| d.clone())
        .collect();

    let mut taken: BTreeSet<ActionTag> = p
        .commands()
        .iter()
        .filter(|c| c.action != cmd.action)
        .map(|c| c.action.clone())
        .collect();

    let mut trace = ElimTrace::default();
    let mut new_cmds: Vec<Command> = Vec::new();
    let mut guard_union = Predicate::FALSE;
    for (k, tc) in target_cmds.iter().enumerate() {
        guard_union = Predicate::or(guard_union, tc.guard.clone());
        let guard = simplify(&Predicate::and(cmd.guard.clone(), wp(&dest.update, &tc.guard)));
        let mut branches = siblings.clone();
        for td in &tc.destinations {
            branches.push(Destination {
                prob: &dest.prob * &td.prob,
                update: dest.update.chain(&td.update),
                target: td.target,
            });
        }
        trace.commands_created += 1;
        trace.transitions_created += branches.len();
        if check_sat(&guard, p.dom(), p.consts(), DEFAULT_SAT_BUDGET).is_unsat() {
            trace.commands_pruned += 1;
            continue;
        }
        let action = fresh_tag(&taken, &cmd.action, &k.to_string());
        taken.insert(action.clone());
        new_cmds.push(Command {
            source: cmd.source,
            action,
            guard,
            destinations: merge_parallel(branches),
        });
    }

    // Escape command for the part of the update's image no guard at the
    // target covers. Harmless when that part is empty but unprovably so.
    let gap_guard = simplify(&Predicate::and(
        cmd.guard.clone(),
        wp(&dest.update, &Predicate::not(guard_union)),
    ));
    let mut result = p.clone();
    if !check_sat(&gap_guard, p.dom(), p.consts(), DEFAULT_SAT_BUDGET).is_unsat() {
        let label = p.location(target).label.clone();
        let base = p.location(target).base.clone();
        let sink = find_or_make_sink(&mut result, &base, &label);
        let mut branches = siblings.clone();
        branches.push(Destination { prob: dest.prob.clone(), update: dest.update.clone(), target: sink });
        let action = fresh_tag(&taken, &cmd.action, "gap");
        trace.gap_completed = true;
        new_cmds.push(Command {
            source: cmd.source,
            action,
            guard: gap_guard,
            destinations: merge_parallel(branches),
        });
    }

    let mut commands = Vec::with_capacity(result.commands().len() + new_cmds.len());
    for (i, c) in result.commands().iter().enumerate() {
        if i == t.command {
            commands.extend(new_cmds.iter().cloned());
        } else {
            commands.push(c.clone());
        }
    }
    Ok((result.replace_commands(commands), trace))
}

/// Result of a location elimination.
#[derive(Debug, Clone)]
pub struct LocationElimination {
    pub pcfp: Pcfp,
    /// Number of transition eliminations the loop performed.
    pub transition_eliminations: usize,
}

/// Eliminate a location: repeatedly eliminate an ingoing transition (lowest
/// multiplicity first, then program order) until none remains, then delete
/// the location and its commands. Requires a non-initial, self-loop-free
/// location that is not a potential goal.
pub fn eliminate_location(
    p: &Pcfp,
    l: LocationId,
    g: &GoalSpec,
) -> Result<LocationElimination, ElimError> {
    if l == p.initial_location() {
        return Err(ElimError::IsInitial(l));
    }
    if p.has_self_loop(l) {
        return Err(ElimError::HasSelfLoop(l));
    }
    if check_potential_goal(p, l, g) {
        return Err(ElimError::PotentialGoal(l));
    }

    let mut cur = p.clone();
    let mut count = 0usize;
    loop {
        let ingoing = cur.ingoing_transitions(l, true);
        let Some(&(ci, di)) = ingoing.iter().min_by_key(|(ci, di)| {
            (multiplicity(&cur, TransitionRef { command: *ci, destination: *di }), *ci, *di)
        }) else {
            break;
        };
        let (next, _) =
            eliminate_transition_traced(&cur, TransitionRef { command: ci, destination: di }, g)?;
        cur = next;
        count += 1;
    }

    let mut keep = vec![true; cur.locations().len()];
    keep[l.0] = false;
    Ok(LocationElimination { pcfp: cur.retain_locations(&keep), transition_eliminations: count })
}

/// Drop commands that can never be enabled and locations that become
/// unreachable, to a fixpoint.
///
/// A command goes when its guard is unsatisfiable, or, at a non-initial
/// location, when no ingoing transition can establish its guard: the
/// context disjunction of `psi_i && wp(u_i, guard)` over the ingoing
/// transitions from other locations and over self-loop transitions of the
/// *other* commands at the same location is unsatisfiable. A command's own
/// self-loops cannot establish its guard for the first time, so they stay
/// out of its context.
pub fn remove_unsat_commands(p: &Pcfp) -> Pcfp {
    let mut cur = p.clone();
    loop {
        let mut changed = false;

        let kept: Vec<Command> = cur
            .commands()
            .iter()
            .filter(|c| !check_sat(&c.guard, cur.dom(), cur.consts(), DEFAULT_SAT_BUDGET).is_unsat())
            .cloned()
            .collect();
        if kept.len() != cur.commands().len() {
            changed = true;
            cur = cur.replace_commands(kept);
        }

        let mut drop = vec![false; cur.commands().len()];
        for (i, c) in cur.commands().iter().enumerate() {
            let l = c.source;
            if l == cur.initial_location() {
                continue;
            }
            let mut ctx = Predicate::FALSE;
            for (ci, cc) in cur.commands().iter().enumerate() {
                for d in &cc.destinations {
                    if d.target != l || (cc.source == l && ci == i) {
                        continue;
                    }
                    ctx = Predicate::or(
                        ctx,
                        Predicate::and(cc.guard.clone(), wp(&d.update, &c.guard)),
                    );
                }
            }
            if check_sat(&simplify(&ctx), cur.dom(), cur.consts(), DEFAULT_SAT_BUDGET).is_unsat() {
                drop[i] = true;
            }
        }
        if drop.iter().any(|d| *d) {
            changed = true;
            let kept: Vec<Command> = cur
                .commands()
                .iter()
                .enumerate()
                .filter(|(i, _)| !drop[*i])
                .map(|(_, c)| c.clone())
                .collect();
            cur = cur.replace_commands(kept);
        }

        let keep = cur.location_graph_reachable();
        if keep.iter().any(|k| !k) {
            changed = true;
            cur = cur.retain_locations(&keep);
        }

        if !changed {
            return cur;
        }
    }
}

/// Remove a no-op self-loop branch by rescaling the remaining branches of
/// its command with `1/(1-p)`.
pub fn rescale_nop_self_loop(p: &Pcfp, t: TransitionRef) -> Result<Pcfp, ElimError> {
    let cmd = p
        .commands()
        .get(t.command)
        .ok_or(ElimError::BadTransition)?;
    let dest = cmd
        .destinations
        .get(t.destination)
        .ok_or(ElimError::BadTransition)?;
    if dest.target != cmd.source {
        return Err(ElimError::NotSelfLoop);
    }
    if !dest.update.is_nop() {
        return Err(ElimError::NotNop);
    }
    if dest.prob.is_one() {
        return Err(ElimError::FullLoop);
    }
    let scale = BigRational::one() / (BigRational::one() - &dest.prob);
    let branches: Vec<Destination> = cmd
        .destinations
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t.destination)
        .map(|(_, d)| Destination {
            prob: &d.prob * &scale,
            update: d.update.clone(),
            target: d.target,
        })
        .collect();
    let mut commands = p.commands().to_vec();
    commands[t.command] = Command {
        source: cmd.source,
        action: cmd.action.clone(),
        guard: cmd.guard.clone(),
        destinations: merge_parallel(branches),
    };
    Ok(p.replace_commands(commands))
}

/// Eliminate a self-loop whose update is idempotent.
///
/// With `gamma: l, phi -> p1:u1:l + (siblings)` and `u1(u1(nu)) = u1(nu)`,
/// the state reached by the loop is a fixed point, so the loop behaves like
/// a no-op self-loop one step later. `gamma` is replaced by one command per
/// co-resident command `psi -> sum q_j : v_j : l_j`:
///
/// * guard `phi && wp(u1, psi)`, branches: siblings plus
///   `p1*q_j : (u1 ; v_j) : l_j` — take the loop once, then leave via that
///   command;
/// * guard `phi && wp(u1, phi)`, branches: siblings plus
///   `p1/(1-p1) * p_j : (u1 ; u_j) : l_j` over the siblings — keep taking
///   the loop until a sibling branch fires;
/// * an escape command when the guards at `l` do not provably cover the
///   image of `u1`.
///
/// Requires the loop probability below one and either a non-potential-goal
/// location or `wp(u1, goal-at-l)` unsatisfiable.
pub fn eliminate_idempotent_self_loop(
    p: &Pcfp,
    t: TransitionRef,
    g: &GoalSpec,
) -> Result<Pcfp, ElimError> {
    let cmd = p
        .commands()
        .get(t.command)
        .ok_or(ElimError::BadTransition)?
        .clone();
    let dest = cmd
        .destinations
        .get(t.destination)
        .ok_or(ElimError::BadTransition)?
        .clone();
    let l = cmd.source;
    if dest.target != l {
        return Err(ElimError::NotSelfLoop);
    }
    if dest.prob.is_one() {
        return Err(ElimError::FullLoop);
    }
    if check_idempotent(&dest.update, p.dom(), p.consts(), DEFAULT_SAT_BUDGET) != Answer::Yes {
        return Err(ElimError::NotIdempotent);
    }
    let goal_after_loop = simplify(&wp(&dest.update, &g.at_location(p, l)));
    let admissible = !check_potential_goal(p, l, g)
        || check_sat(&goal_after_loop, p.dom(), p.consts(), DEFAULT_SAT_BUDGET).is_unsat();
    if !admissible {
        return Err(ElimError::PotentialGoal(l));
    }

    let siblings: Vec<Destination> = cmd
        .destinations
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != t.destination)
        .map(|(_, d)| d.clone())
        .collect();
    let u1 = &dest.update;
    let p1 = &dest.prob;
    let stay_scale = p1 / (BigRational::one() - p1);

    let mut taken: BTreeSet<ActionTag> = p
        .commands()
        .iter()
        .filter(|c| c.action != cmd.action)
        .map(|c| c.action.clone())
        .collect();

    let co_resident: Vec<(usize, Command)> =
        p.commands_at(l).map(|(i, c)| (i, c.clone())).collect();
    let mut new_cmds = Vec::new();
    let mut guard_union = Predicate::FALSE;
    for (k, (ci, other)) in co_resident.iter().enumerate() {
        guard_union = Predicate::or(guard_union, other.guard.clone());
        let (guard, extra): (Predicate, Vec<Destination>) = if *ci == t.command {
            // keep looping until a sibling branch fires
            let guard = simplify(&Predicate::and(cmd.guard.clone(), wp(u1, &cmd.guard)));
            let extra = siblings
                .iter()
                .map(|s| Destination {
                    prob: &s.prob * &stay_scale,
                    update: u1.chain(&s.update),
                    target: s.target,
                })
                .collect();
            (guard, extra)
        } else {
            let guard = simplify(&Predicate::and(cmd.guard.clone(), wp(u1, &other.guard)));
            let extra = other
                .destinations
                .iter()
                .map(|d| Destination {
                    prob: p1 * &d.prob,
                    update: u1.chain(&d.update),
                    target: d.target,
                })
                .collect();
            (guard, extra)
        };
        if check_sat(&guard, p.dom(), p.consts(), DEFAULT_SAT_BUDGET).is_unsat() {
            continue;
        }
        let mut branches = siblings.clone();
        branches.extend(extra);
        if branches.iter().any(|b| b.target == l) {
            warn!(
                "idempotent self-loop elimination at {} reintroduces a self-loop; \
                 the rule only shrinks when the involved locations are distinct",
                p.location(l).display_name()
            );
        }
        let action = fresh_tag(&taken, &cmd.action, &format!("loop{k}"));
        taken.insert(action.clone());
        new_cmds.push(Command {
            source: l,
            action,
            guard,
            destinations: merge_parallel(branches),
        });
    }

    let gap_guard = simplify(&Predicate::and(
        cmd.guard.clone(),
        wp(u1, &Predicate::not(guard_union)),
    ));
    let mut result = p.clone();
    if !check_sat(&gap_guard, p.dom(), p.consts(), DEFAULT_SAT_BUDGET).is_unsat() {
        let label = p.location(l).label.clone();
        let base = p.location(l).base.clone();
        let sink = find_or_make_sink(&mut result, &base, &label);
        let mut branches = siblings.clone();
        branches.push(Destination { prob: p1.clone(), update: u1.clone(), target: sink });
        let action = fresh_tag(&taken, &cmd.action, "gap");
        new_cmds.push(Command {
            source: l,
            action,
            guard: gap_guard,
            destinations: merge_parallel(branches),
        });
    }

    let mut commands = Vec::with_capacity(result.commands().len() + new_cmds.len());
    for (i, c) in result.commands().iter().enumerate() {
        if i == t.command {
            commands.extend(new_cmds.iter().cloned());
        } else {
            commands.push(c.clone());
        }
    }
    Ok(result.replace_commands(commands))
}

/// Locations that [`eliminate_location`] accepts right now: non-initial,
/// self-loop-free, not potential goals, and with commands to route through
/// (a location without commands qualifies only once nothing points at it).
/// Ordered by (ingoing transitions x outgoing commands) ascending, ties by
/// index.
pub fn eliminable_locations(p: &Pcfp, g: &GoalSpec) -> Vec<LocationId> {
    let mut scored: Vec<(usize, usize)> = Vec::new();
    for i in 0..p.locations().len() {
        let l = LocationId(i);
        if l == p.initial_location() || p.has_self_loop(l) {
            continue;
        }
        let ingoing = p.ingoing_transitions(l, true).len();
        let outgoing = p.commands_at(l).count();
        if outgoing == 0 && ingoing > 0 {
            continue;
        }
        if check_potential_goal(p, l, g) {
            continue;
        }
        scored.push((ingoing * outgoing, i));
    }
    scored.sort();
    scored.into_iter().map(|(_, i)| LocationId(i)).collect()
}

/// Outcome of [`eliminate_all`].
#[derive(Debug, Clone)]
pub struct EliminateAllOutcome {
    pub pcfp: Pcfp,
    pub locations_eliminated: usize,
    pub transition_eliminations: usize,
    /// True when the command budget stopped the loop early.
    pub budget_hit: bool,
}

/// Alternate unsat-command removal and location elimination until no
/// location qualifies, guarded by a program-size budget. The result is
/// always semantics-preserving, budget hit or not.
pub fn eliminate_all(p: &Pcfp, g: &GoalSpec) -> EliminateAllOutcome {
    eliminate_all_with_budget(p, g, DEFAULT_COMMAND_BUDGET)
}

pub fn eliminate_all_with_budget(p: &Pcfp, g: &GoalSpec, budget: usize) -> EliminateAllOutcome {
    let mut out = EliminateAllOutcome {
        pcfp: remove_unsat_commands(p),
        locations_eliminated: 0,
        transition_eliminations: 0,
        budget_hit: false,
    };
    loop {
        if out.pcfp.commands().len() > budget {
            out.budget_hit = true;
            return out;
        }
        let candidates = eliminable_locations(&out.pcfp, g);
        let mut progressed = false;
        for l in candidates {
            match eliminate_location(&out.pcfp, l, g) {
                Ok(r) => {
                    out.pcfp = remove_unsat_commands(&r.pcfp);
                    out.locations_eliminated += 1;
                    out.transition_eliminations += r.transition_eliminations;
                    progressed = true;
                    break;
                }
                Err(_) => continue,
            }
        }
        if !progressed {
            return out;
        }
    }
}

/// Pick the unfoldable set whose tentative unfolding (after unsat-command
/// cleanup) yields the most immediately eliminable locations; ties go to
/// the smaller domain product, then to the lexicographically first set.
/// Sets with undefined bounds, and sets whose unfolding would exceed the
/// location budget, are not considered.
pub fn suggest_unfold(p: &Pcfp, g: &GoalSpec) -> Option<BTreeSet<VarId>> {
    let mut best: Option<(usize, u128, Vec<String>, BTreeSet<VarId>)> = None;
    for set in unfoldable_sets(p) {
        let mut product: u128 = 1;
        let mut symbolic = false;
        for v in &set {
            match p.dom().bounds(v, p.consts()) {
                Ok((lo, hi)) if lo <= hi => product = product.saturating_mul((hi - lo + 1) as u128),
                _ => {
                    symbolic = true;
                    break;
                }
            }
        }
        if symbolic {
            continue;
        }
        if product.saturating_mul(p.locations().len() as u128) > SUGGEST_LOCATION_BUDGET as u128 {
            continue;
        }
        let Ok(unfolded) = unfold(p, &set) else { continue };
        let cleaned = remove_unsat_commands(&unfolded);
        let score = eliminable_locations(&cleaned, g).len();
        let names: Vec<String> = set.iter().map(|v| v.as_str().to_string()).collect();
        let better = match &best {
            None => true,
            Some((s, pr, nm, _)) => {
                score > *s || (score == *s && (product < *pr || (product == *pr && names < *nm)))
            }
        };
        if better {
            best = Some((score, product, names, set));
        }
    }
    best.map(|(_, _, _, set)| set)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use num_traits::Zero;

    use super::*;
    use crate::expr::{CmpOp, IntExpr};
    use crate::frontend::{parse_model, parse_property};
    use crate::pcfp::Objective;
    use crate::unfold::unfold;

    fn coin(n: i64) -> Pcfp {
        parse_model(
            "dtmc\nconst int N;\nmodule coingame\n\
             x : [0..N+1] init N/2;\n f : bool init false;\n\
             [] 0<x<N & !f  ->  1/2: (x'=x-1) + 1/2: (f'=true);\n\
             [] 0<x<N & f   ->  1/2: (x'=x-1)&(f'=false) + 1/2: (x'=x+2)&(f'=false);\n\
             [] x=0 | x>=N  ->  1: (x'=x);\nendmodule\n",
        )
        .unwrap()
        .with_const_values(&BTreeMap::from([("N".to_string(), n)]))
        .unwrap()
    }

    fn win(p: &Pcfp) -> GoalSpec {
        parse_property("P=? [ F x>=N & !f ]", p).unwrap()
    }

    fn unfolded_coin(n: i64) -> (Pcfp, GoalSpec) {
        let p = coin(n);
        let g = win(&p);
        let q = unfold(&p, &BTreeSet::from([VarId::new("f")])).unwrap();
        (q, g)
    }

    #[test]
    fn multiplicity_counts_shared_targets() {
        let p = coin(6);
        // all three commands have pairwise distinct targets (single location
        // means all destinations share the target, so multiplicity = arity)
        assert_eq!(multiplicity(&p, TransitionRef { command: 0, destination: 0 }), 2);
        let (q, _) = unfolded_coin(6);
        // in the unfolded program, command 0 at !f has branches to !f and f
        let c0 = &q.commands()[0];
        assert_eq!(c0.destinations.len(), 2);
        assert_ne!(c0.destinations[0].target, c0.destinations[1].target);
        assert_eq!(multiplicity(&q, TransitionRef { command: 0, destination: 0 }), 1);
    }

    /// The worked example: eliminating the nop-branch into location f of the
    /// unfolded coin program produces the summarized command
    /// `0<x<N -> 3/4:(x'=x-1) + 1/4:(x'=x+2)`.
    #[test]
    fn coin_transition_elimination_summarizes() {
        let (q, g) = unfolded_coin(6);
        // locate the branch !f -> f (the f'=true branch became a nop into f)
        let loc_f = LocationId(1);
        assert_eq!(q.location(loc_f).label.to_string(), "f=1");
        let q = remove_unsat_commands(&q);
        let mut hit = None;
        for (ci, c) in q.commands().iter().enumerate() {
            if c.source != loc_f {
                for (di, d) in c.destinations.iter().enumerate() {
                    if d.target == loc_f {
                        hit = Some(TransitionRef { command: ci, destination: di });
                    }
                }
            }
        }
        let t = hit.expect("one transition into f");
        let (r, trace) = eliminate_transition_traced(&q, t, &g).unwrap();
        assert!(!trace.gap_completed);
        // the surviving new command: guard equivalent to 0<x<N with branches
        // 3/4 x-1 and 1/4 x+2, both back to !f
        let loc_nf = LocationId(0);
        let new_cmd = r
            .commands()
            .iter()
            .find(|c| c.source == loc_nf && c.destinations.len() == 2)
            .expect("summarized command");
        let probs: Vec<String> = new_cmd
            .destinations
            .iter()
            .map(|d| d.prob.to_string())
            .collect();
        assert!(probs.contains(&"3/4".to_string()));
        assert!(probs.contains(&"1/4".to_string()));
        for d in &new_cmd.destinations {
            assert_eq!(d.target, loc_nf);
        }
    }

    #[test]
    fn eliminate_location_f_reduces_to_one_location() {
        let (q, g) = unfolded_coin(6);
        let q = remove_unsat_commands(&q);
        let r = eliminate_location(&q, LocationId(1), &g).unwrap();
        assert_eq!(r.transition_eliminations, 1);
        assert_eq!(r.pcfp.locations().len(), 1);
        assert_eq!(r.pcfp.commands().len(), 2);
        assert_eq!(r.pcfp.transition_count(), 3);
    }

    #[test]
    fn eliminate_all_on_unfolded_coin() {
        let (q, g) = unfolded_coin(6);
        let out = eliminate_all(&q, &g);
        assert!(!out.budget_hit);
        assert_eq!(out.locations_eliminated, 1);
        assert_eq!(out.pcfp.locations().len(), 1);
        assert_eq!(out.pcfp.commands().len(), 2);
        assert_eq!(out.pcfp.transition_count(), 3);
    }

    #[test]
    fn remove_unsat_drops_boundary_command_at_f() {
        let (q, g) = unfolded_coin(6);
        let _ = g;
        // at location f the x=0|x>=N command can never be enabled: every
        // ingoing transition asserts 0<x<N and keeps x
        let cleaned = remove_unsat_commands(&q);
        let loc_f = LocationId(1);
        let guards: Vec<String> = cleaned
            .commands_at(loc_f)
            .map(|(_, c)| c.guard.to_string())
            .collect();
        assert_eq!(guards.len(), 1, "only the interior command survives: {guards:?}");
        assert_eq!(cleaned.commands().len(), 3);
    }

    #[test]
    fn context_rule_spares_initial_location() {
        // A command at the initial location whose guard cannot be
        // established by any ingoing transition still stays.
        let p = parse_model(
            "dtmc\nmodule m\nx : [0..1] init 0;\n\
             [] x=1 -> 1: (x'=1);\nendmodule\n",
        )
        .unwrap();
        let cleaned = remove_unsat_commands(&p);
        assert_eq!(cleaned.commands().len(), 1);
    }

    #[test]
    fn context_rule_sees_self_loops_of_other_commands() {
        // Location b is entered with x=0; a self-loop command at b sets
        // x to 1, which enables the exit command. The exit command must
        // survive even though no *ingoing* transition establishes x=1.
        let text = "\
dtmc
module m
    s : [0..2] init 0;
    x : [0..1] init 0;
    [] s=0 -> 1: (s'=1)&(x'=0);
    [] s=1 & x=0 -> 1: (x'=1);
    [] s=1 & x=1 -> 1: (s'=2);
    [] s=2 -> 1: true;
endmodule
";
        let p = parse_model(text).unwrap();
        let q = unfold(&p, &BTreeSet::from([VarId::new("s")])).unwrap();
        let cleaned = remove_unsat_commands(&q);
        // the s=1,x=1 exit command must not be dropped
        let loc_s1 = q
            .locations()
            .iter()
            .position(|l| l.label.to_string() == "s=1")
            .unwrap();
        let exits = cleaned
            .commands_at(LocationId(loc_s1))
            .filter(|(_, c)| c.destinations.iter().all(|d| d.target != LocationId(loc_s1)))
            .count();
        assert_eq!(exits, 1);
    }

    #[test]
    fn command_with_false_guard_is_removed() {
        let p = parse_model(
            "dtmc\nmodule m\nx : [0..1] init 0;\n\
             [] false -> 1: (x'=1);\n[] true -> 1: (x'=x);\nendmodule\n",
        )
        .unwrap();
        assert_eq!(remove_unsat_commands(&p).commands().len(), 1);
    }

    #[test]
    fn rescale_two_branch() {
        let p = parse_model(
            "dtmc\nmodule m\ns : [0..1] init 0;\n\
             [] s=0 -> 1/2: true + 1/2: (s'=1);\n[] s=1 -> 1: true;\nendmodule\n",
        )
        .unwrap();
        // branch 0 of command 0 is a nop self-loop (single location program)
        let r = rescale_nop_self_loop(&p, TransitionRef { command: 0, destination: 0 });
        // in a single-location program a nop branch *is* a self-loop
        let r = r.unwrap();
        let c = &r.commands()[0];
        assert_eq!(c.destinations.len(), 1);
        assert!(c.destinations[0].prob.is_one());
    }

    #[test]
    fn rescale_three_branch_rationals() {
        // 1/4 nop-self + 1/4 u1 + 1/2 u2 -> 1/3 u1 + 2/3 u2
        let p = parse_model(
            "dtmc\nmodule m\ns : [0..2] init 0;\n\
             [] s=0 -> 1/4: true + 1/4: (s'=1) + 1/2: (s'=2);\n\
             [] s>0 -> 1: true;\nendmodule\n",
        )
        .unwrap();
        let r = rescale_nop_self_loop(&p, TransitionRef { command: 0, destination: 0 }).unwrap();
        let probs: Vec<String> = r.commands()[0]
            .destinations
            .iter()
            .map(|d| d.prob.to_string())
            .collect();
        assert_eq!(probs, vec!["1/3".to_string(), "2/3".to_string()]);
    }

    #[test]
    fn rescale_full_loop_rejected() {
        let p = parse_model(
            "dtmc\nmodule m\ns : [0..1] init 0;\n[] s=0 -> 1: true;\n[] s=1 -> 1: true;\nendmodule\n",
        )
        .unwrap();
        assert_eq!(
            rescale_nop_self_loop(&p, TransitionRef { command: 0, destination: 0 }),
            Err(ElimError::FullLoop)
        );
    }

    #[test]
    fn idempotent_loop_rejects_non_idempotent_update() {
        let p = parse_model(
            "dtmc\nmodule m\nx : [0..5] init 0;\n\
             [] x<5 -> 1/2: (x'=x+1) + 1/2: (x'=x);\n[] x=5 -> 1: true;\nendmodule\n",
        )
        .unwrap();
        let g = GoalSpec::new(
            Objective::Forced,
            Predicate::cmp(CmpOp::Eq, IntExpr::var("x"), IntExpr::Lit(5)),
        );
        assert_eq!(
            eliminate_idempotent_self_loop(&p, TransitionRef { command: 0, destination: 0 }, &g),
            Err(ElimError::NotIdempotent)
        );
    }

    #[test]
    fn eliminable_locations_on_cleaned_unfolded_coin() {
        let (q, g) = unfolded_coin(6);
        let cleaned = remove_unsat_commands(&q);
        let els = eliminable_locations(&cleaned, &g);
        assert_eq!(els, vec![LocationId(1)]);
        // original coin: single location, which is initial
        let p = coin(6);
        assert!(eliminable_locations(&p, &win(&p)).is_empty());
    }

    #[test]
    fn suggest_unfold_picks_f_for_the_coin() {
        let p = coin(6);
        let g = win(&p);
        assert_eq!(suggest_unfold(&p, &g), Some(BTreeSet::from([VarId::new("f")])));
    }

    #[test]
    fn suggest_unfold_with_symbolic_bound_still_picks_f() {
        let p = parse_model(
            "dtmc\nconst int N;\nmodule coingame\n\
             x : [0..N+1] init N/2;\n f : bool init false;\n\
             [] 0<x<N & !f  ->  1/2: (x'=x-1) + 1/2: (f'=true);\n\
             [] 0<x<N & f   ->  1/2: (x'=x-1)&(f'=false) + 1/2: (x'=x+2)&(f'=false);\n\
             [] x=0 | x>=N  ->  1: (x'=x);\nendmodule\n",
        )
        .unwrap();
        let g = parse_property("P=? [ F x>=N & !f ]", &p).unwrap();
        assert_eq!(suggest_unfold(&p, &g), Some(BTreeSet::from([VarId::new("f")])));
    }

    #[test]
    fn suggest_unfold_none_without_candidates() {
        let p = parse_model("dtmc\nmodule m\nendmodule\n").unwrap();
        let g = GoalSpec::new(Objective::Forced, Predicate::TRUE);
        assert_eq!(suggest_unfold(&p, &g), None);
    }

    #[test]
    fn deterministic_input_stays_deterministic() {
        let (q, g) = unfolded_coin(6);
        let q = remove_unsat_commands(&q);
        assert!(crate::pcfp::check_deterministic(&q).unwrap());
        let t = TransitionRef { command: 0, destination: 1 };
        assert_eq!(q.commands()[0].destinations[1].target, LocationId(1));
        let r = eliminate_transition(&q, t, &g).unwrap();
        assert!(crate::pcfp::check_deterministic(&r).unwrap());
    }

    #[test]
    fn growth_bound_matches_rule_arithmetic() {
        let (q, g) = unfolded_coin(6);
        let q = remove_unsat_commands(&q);
        let t = TransitionRef { command: 0, destination: 1 };
        let n_siblings = q.commands()[0].destinations.len() - 1;
        let target = q.commands()[0].destinations[1].target;
        let m: usize = q.commands_at(target).count();
        let sum_mi: usize = q
            .commands_at(target)
            .map(|(_, c)| c.destinations.len())
            .sum();
        let (_, trace) = eliminate_transition_traced(&q, t, &g).unwrap();
        assert_eq!(trace.commands_created, m);
        assert_eq!(trace.transitions_created, m * n_siblings + sum_mi);
        // net additional commands/transitions before pruning:
        assert_eq!(trace.commands_created - 1, m - 1);
        assert_eq!(
            trace.transitions_created - (n_siblings + 1),
            (m - 1) * n_siblings + sum_mi - 1
        );
    }

    #[test]
    fn zero_probability_never_appears() {
        let (q, g) = unfolded_coin(6);
        let out = eliminate_all(&q, &g);
        for c in out.pcfp.commands() {
            for d in &c.destinations {
                assert!(!d.prob.is_zero());
            }
        }
    }
}
