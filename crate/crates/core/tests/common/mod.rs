//! Shared test support: independent reachability oracles and random model /
//! program generators with fixed seeds.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::Rng;

use pcfp::expr::{
    Assignment, CmpOp, ConstEnv, DomainMap, IntExpr, Predicate, Update, UpdateBlock, Valuation,
    VarDomain, VarId,
};
use pcfp::pcfp::{
    ActionChoice, ActionTag, Command, Destination, ExplicitModel, GoalSpec, LocationId,
    LocationInfo, Objective, Pcfp, StateDesc, StateId,
};
use pcfp::solver::{solve_mc_exact, solve_mdp, MdpMethod, OptDir};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// Independent oracle: plain dense Gaussian elimination over the model's
// transition structure, written from scratch against the textbook linear
// system. Shares no code with the solver module.

/// Reachability probability of a Markov chain, by the linear-system method.
/// `pick` selects one action per state for MDPs (index into the choice list).
pub fn oracle_chain_reach(m: &ExplicitModel, pick: &dyn Fn(usize) -> usize) -> BigRational {
    let n = m.num_states();
    // which states can reach a goal at all
    let mut can = vec![false; n];
    {
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for s in 0..n {
            if m.choices(StateId(s)).is_empty() {
                continue;
            }
            let a = &m.choices(StateId(s))[pick(s)];
            for (_, t) in &a.branches {
                rev[t.0].push(s);
            }
        }
        let mut queue: VecDeque<usize> = VecDeque::new();
        for s in 0..n {
            if m.is_goal(StateId(s)) {
                can[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &q in &rev[s] {
                if !can[q] {
                    can[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    if m.is_goal(m.initial()) {
        return BigRational::one();
    }
    if !can[m.initial().0] {
        return BigRational::zero();
    }

    let unknowns: Vec<usize> = (0..n)
        .filter(|&s| can[s] && !m.is_goal(StateId(s)))
        .collect();
    let col: BTreeMap<usize, usize> = unknowns.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let k = unknowns.len();
    let mut a = vec![vec![BigRational::zero(); k + 1]; k];
    for (row, &s) in unknowns.iter().enumerate() {
        a[row][row] = BigRational::one();
        if m.choices(StateId(s)).is_empty() {
            continue;
        }
        let action = &m.choices(StateId(s))[pick(s)];
        for (p, t) in &action.branches {
            if m.is_goal(*t) {
                let cur = a[row][k].clone();
                a[row][k] = cur + p;
            } else if let Some(&c) = col.get(&t.0) {
                let cur = a[row][c].clone();
                a[row][c] = cur - p;
            }
        }
    }
    // full Gauss-Jordan, no pivoting subtleties needed over exact rationals
    for i in 0..k {
        let piv = (i..k).find(|&r| !a[r][i].is_zero()).expect("non-singular");
        a.swap(i, piv);
        let d = a[i][i].clone();
        for x in a[i].iter_mut() {
            *x /= &d;
        }
        for r in 0..k {
            if r != i && !a[r][i].is_zero() {
                let f = a[r][i].clone();
                for cidx in 0..=k {
                    let delta = &f * &a[i][cidx];
                    a[r][cidx] -= delta;
                }
            }
        }
    }
    a[col[&m.initial().0]][k].clone()
}

/// Optimal reachability by brute-force enumeration of all stationary
/// deterministic schedulers, each solved with the oracle above.
pub fn oracle_mdp_reach(m: &ExplicitModel, maximize: bool) -> BigRational {
    let n = m.num_states();
    let nondet: Vec<usize> = (0..n).filter(|&s| m.choices(StateId(s)).len() > 1).collect();
    let mut pick = vec![0usize; nondet.len()];
    let mut best: Option<BigRational> = None;
    loop {
        let chosen: BTreeMap<usize, usize> =
            nondet.iter().copied().zip(pick.iter().copied()).collect();
        let v = oracle_chain_reach(m, &|s| chosen.get(&s).copied().unwrap_or(0));
        best = Some(match best {
            None => v,
            Some(b) => {
                if maximize {
                    b.max(v)
                } else {
                    b.min(v)
                }
            }
        });
        let mut i = 0;
        loop {
            if i == nondet.len() {
                return best.unwrap();
            }
            pick[i] += 1;
            if pick[i] < m.choices(StateId(nondet[i])).len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Reachability value of a marked model under the given objective, using
/// the production solvers (exact methods only).
pub fn solver_value(m: &ExplicitModel, objective: Objective) -> BigRational {
    match objective {
        Objective::Forced => solve_mc_exact(m)
            .expect("chain")
            .value
            .as_exact()
            .unwrap()
            .clone(),
        Objective::Maximize => solve_mdp(m, OptDir::Maximize, MdpMethod::SchedulerEnumerationExact)
            .expect("enumerable")
            .value
            .as_exact()
            .unwrap()
            .clone(),
        Objective::Minimize => solve_mdp(m, OptDir::Minimize, MdpMethod::SchedulerEnumerationExact)
            .expect("enumerable")
            .value
            .as_exact()
            .unwrap()
            .clone(),
    }
}

// ---------------------------------------------------------------------------
// Random explicit models

/// A random Markov chain over `2..=max_states` states with rational edge
/// probabilities and at least one goal state (sometimes more).
pub fn random_chain(rng: &mut StdRng, max_states: usize) -> ExplicitModel {
    random_model(rng, max_states, 1)
}

/// A random MDP with up to `max_actions` actions per state.
pub fn random_model(rng: &mut StdRng, max_states: usize, max_actions: usize) -> ExplicitModel {
    let n = rng.gen_range(2..=max_states);
    let states: Vec<StateDesc> = (0..n)
        .map(|i| StateDesc::Pair {
            location: LocationId(0),
            valuation: Valuation::from_pairs([("s", i as i64)]),
        })
        .collect();
    let mut choices = Vec::with_capacity(n);
    for s in 0..n {
        let n_actions = if max_actions == 1 { 1 } else { rng.gen_range(1..=max_actions) };
        let mut actions = Vec::with_capacity(n_actions);
        for a in 0..n_actions {
            let n_succ = rng.gen_range(1..=3.min(n));
            let mut weights = Vec::with_capacity(n_succ);
            let mut targets = Vec::with_capacity(n_succ);
            for _ in 0..n_succ {
                weights.push(rng.gen_range(1..=3i64));
                targets.push(rng.gen_range(0..n));
            }
            let total: i64 = weights.iter().sum();
            let mut dist: BTreeMap<StateId, BigRational> = BTreeMap::new();
            for (w, t) in weights.iter().zip(&targets) {
                *dist.entry(StateId(*t)).or_insert_with(BigRational::zero) += rat(*w, total);
            }
            actions.push(ActionChoice::from_map(ActionTag::new(format!("a{s}_{a}")), dist));
        }
        // occasionally a deadlock state
        if rng.gen_ratio(1, 10) {
            actions.clear();
        }
        choices.push(actions);
    }
    let mut goal = vec![false; n];
    let n_goals = rng.gen_range(1..=2.min(n));
    for _ in 0..n_goals {
        goal[rng.gen_range(0..n)] = true;
    }
    ExplicitModel::from_parts(
        vec![LocationInfo::new("l")],
        states,
        choices,
        StateId(rng.gen_range(0..n)),
        goal,
        None,
        ConstEnv::new(),
    )
}

// ---------------------------------------------------------------------------
// Random programs

#[derive(Clone, Copy)]
pub struct PcfpGenCfg {
    pub max_locations: usize,
    pub max_vars: usize,
    /// Maximum number of values per variable domain.
    pub max_dom: i64,
    pub max_commands: usize,
    pub max_branches: usize,
    pub deterministic: bool,
    /// Label the locations with a goal marker variable, as an unfolding
    /// would have.
    pub with_labels: bool,
}

impl PcfpGenCfg {
    pub fn small(deterministic: bool) -> Self {
        PcfpGenCfg {
            max_locations: 3,
            max_vars: 3,
            max_dom: 4,
            max_commands: 4,
            max_branches: 3,
            deterministic,
            with_labels: true,
        }
    }
}

fn random_int_expr(rng: &mut StdRng, vars: &[(VarId, i64)], depth: usize) -> IntExpr {
    if depth == 0 || rng.gen_ratio(1, 2) {
        if rng.gen_ratio(1, 2) {
            let (v, hi) = &vars[rng.gen_range(0..vars.len())];
            let _ = hi;
            IntExpr::Var(v.clone())
        } else {
            let hi = vars.iter().map(|(_, h)| *h).max().unwrap_or(1);
            IntExpr::Lit(rng.gen_range(0..=hi))
        }
    } else {
        let a = Box::new(random_int_expr(rng, vars, depth - 1));
        let b = Box::new(random_int_expr(rng, vars, depth - 1));
        match rng.gen_range(0..4) {
            0 => IntExpr::Add(a, b),
            1 => IntExpr::Sub(a, b),
            2 => IntExpr::Min(a, b),
            _ => IntExpr::Max(a, b),
        }
    }
}

pub fn random_pred(rng: &mut StdRng, vars: &[(VarId, i64)], depth: usize) -> Predicate {
    if depth == 0 || rng.gen_ratio(1, 2) {
        let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge];
        Predicate::Cmp(
            ops[rng.gen_range(0..ops.len())],
            random_int_expr(rng, vars, 1),
            random_int_expr(rng, vars, 0),
        )
    } else {
        let a = random_pred(rng, vars, depth - 1);
        match rng.gen_range(0..3) {
            0 => Predicate::not(a),
            1 => Predicate::and(a, random_pred(rng, vars, depth - 1)),
            _ => Predicate::or(a, random_pred(rng, vars, depth - 1)),
        }
    }
}

pub fn random_update(rng: &mut StdRng, vars: &[(VarId, i64)], max_assignments: usize) -> Update {
    let n = rng.gen_range(0..=max_assignments.min(vars.len()));
    let mut picked = BTreeSet::new();
    let mut assignments = Vec::new();
    for _ in 0..n {
        let (v, hi) = &vars[rng.gen_range(0..vars.len())];
        if !picked.insert(v.clone()) {
            continue;
        }
        let rhs = match rng.gen_range(0..4) {
            0 => IntExpr::Lit(rng.gen_range(0..=*hi)),
            1 => IntExpr::Var(vars[rng.gen_range(0..vars.len())].0.clone()),
            2 => IntExpr::Min(
                Box::new(IntExpr::Add(Box::new(IntExpr::Var(v.clone())), Box::new(IntExpr::Lit(1)))),
                Box::new(IntExpr::Lit(*hi)),
            ),
            _ => IntExpr::Max(
                Box::new(IntExpr::Sub(Box::new(IntExpr::Var(v.clone())), Box::new(IntExpr::Lit(1)))),
                Box::new(IntExpr::Lit(0)),
            ),
        };
        assignments.push(Assignment { lhs: v.clone(), rhs });
    }
    Update::single(UpdateBlock::new(assignments))
}

/// A random program within the configured bounds. Probabilities are exact
/// rationals; the goal marker label (when enabled) splits the locations
/// into potential and non-potential goals.
pub fn random_pcfp(rng: &mut StdRng, cfg: PcfpGenCfg) -> (Pcfp, GoalSpec) {
    let n_locs = rng.gen_range(1..=cfg.max_locations);
    let n_vars = rng.gen_range(1..=cfg.max_vars);
    let vars: Vec<(VarId, i64)> = (0..n_vars)
        .map(|i| (VarId::new(format!("v{i}")), rng.gen_range(1..cfg.max_dom)))
        .collect();

    let locations: Vec<LocationInfo> = (0..n_locs)
        .map(|i| {
            let label = if cfg.with_labels {
                Valuation::from_pairs([("mark", if rng.gen_ratio(1, 2) { 1 } else { 0 })])
            } else {
                Valuation::new()
            };
            LocationInfo::with_label(format!("L{i}"), label)
        })
        .collect();

    let mut dom = DomainMap::new();
    let mut init = BTreeMap::new();
    for (v, hi) in &vars {
        dom.insert(v.clone(), VarDomain::literal(0, *hi));
        init.insert(v.clone(), IntExpr::Lit(rng.gen_range(0..=*hi)));
    }

    let n_cmds = rng.gen_range(1..=cfg.max_commands);
    let mut commands = Vec::with_capacity(n_cmds);
    let mut det_guard_pool: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    for ci in 0..n_cmds {
        let source = rng.gen_range(0..n_locs);
        let guard = if cfg.deterministic {
            // mutually exclusive guards per location: v0 = value, each value
            // used at most once
            let pool = det_guard_pool.entry(source).or_insert_with(|| {
                let hi = vars[0].1;
                (0..=hi).collect()
            });
            if pool.is_empty() {
                continue;
            }
            let value = pool.remove(rng.gen_range(0..pool.len()));
            Predicate::Cmp(CmpOp::Eq, IntExpr::Var(vars[0].0.clone()), IntExpr::Lit(value))
        } else {
            random_pred(rng, &vars, 2)
        };
        let n_branches = rng.gen_range(1..=cfg.max_branches);
        let weights: Vec<i64> = (0..n_branches).map(|_| rng.gen_range(1..=3)).collect();
        let total: i64 = weights.iter().sum();
        let destinations: Vec<Destination> = weights
            .iter()
            .map(|w| Destination {
                prob: rat(*w, total),
                update: random_update(rng, &vars, 2),
                target: LocationId(rng.gen_range(0..n_locs)),
            })
            .collect();
        commands.push(Command {
            source: LocationId(source),
            action: ActionTag::new(format!("c{ci}")),
            guard,
            destinations,
        });
    }

    let p = Pcfp::new(
        locations,
        vars.iter().map(|(v, _)| v.clone()).collect(),
        dom,
        commands,
        LocationId(0),
        init,
        ConstEnv::new(),
    )
    .expect("generated program is structurally valid");

    let goal_pred = {
        let atom = Predicate::Cmp(
            CmpOp::Ge,
            IntExpr::Var(vars[0].0.clone()),
            IntExpr::Lit(rng.gen_range(0..=vars[0].1)),
        );
        if cfg.with_labels {
            Predicate::and(
                atom,
                Predicate::Cmp(CmpOp::Eq, IntExpr::var("mark"), IntExpr::Lit(1)),
            )
        } else {
            atom
        }
    };
    let objective = if cfg.deterministic {
        Objective::Forced
    } else if rng.gen_ratio(1, 2) {
        Objective::Maximize
    } else {
        Objective::Minimize
    };
    (p, GoalSpec::new(objective, goal_pred))
}

/// Number of scheduler combinations of a model, saturating.
pub fn scheduler_count(m: &ExplicitModel) -> u64 {
    let mut combos: u64 = 1;
    for s in 0..m.num_states() {
        let k = m.choices(StateId(s)).len() as u64;
        if k > 1 {
            combos = combos.saturating_mul(k);
        }
    }
    combos
}
