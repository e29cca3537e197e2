//! Exact reachability analysis on explicit models: rational Gaussian
//! elimination and state elimination for Markov chains, optimal values for
//! MDPs by scheduler enumeration (exact) or value iteration (float), plus
//! model comparison and statistics.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::Valuation;
use crate::pcfp::{ActionChoice, ActionTag, ExplicitModel, StateDesc, StateId};

/// Cap on the number of schedulers the exact MDP oracle will enumerate.
pub const ENUMERATION_LIMIT: u64 = 1 << 16;

/// Default absolute precision of value iteration.
pub const DEFAULT_VI_EPSILON: f64 = 1e-10;

/// How a reachability value was computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    GaussianExact,
    EliminationExact,
    ValueIteration(f64),
    SchedulerEnumerationExact,
}

/// A reachability value: exact rational or float, depending on the method.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// A stationary deterministic scheduler: one available action per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheduler(pub BTreeMap<StateId, ActionTag>);

/// Result of a reachability query.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachResult {
    pub value: Value,
    pub method: Method,
    pub witness: Option<Scheduler>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("the model is not a Markov chain (some state has several actions)")]
    NotAChain,

    #[error("state {0} cannot be eliminated: it is absorbing")]
    AbsorbingState(StateId),

    #[error("state {0} cannot be eliminated: it is the initial state or a goal state")]
    IsInitialOrGoal(StateId),

    #[error("too many schedulers to enumerate (limit {0})")]
    TooLargeForEnumeration(u64),

    #[error("objective P=? is for deterministic models; this query needs Pmax/Pmin")]
    NotAnOptimization,
}

/// States from which no goal state is reachable (ignoring probabilities).
/// These have reachability probability zero under every scheduler.
fn cannot_reach_goal(m: &ExplicitModel) -> Vec<bool> {
    let n = m.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, actions) in m.all_choices().iter().enumerate() {
        for a in actions {
            for (_, t) in &a.branches {
                preds[t.0].push(s);
            }
        }
    }
    let mut can = vec![false; n];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for g in m.goal_states() {
        can[g.0] = true;
        queue.push_back(g.0);
    }
    while let Some(s) = queue.pop_front() {
        for &p in &preds[s] {
            if !can[p] {
                can[p] = true;
                queue.push_back(p);
            }
        }
    }
    can.iter().map(|c| !c).collect()
}

fn chain_distribution(m: &ExplicitModel, s: StateId) -> Result<Option<&ActionChoice>, SolveError> {
    let actions = m.choices(s);
    match actions.len() {
        0 => Ok(None),
        1 => Ok(Some(&actions[0])),
        _ => Err(SolveError::NotAChain),
    }
}

fn require_chain(m: &ExplicitModel) -> Result<(), SolveError> {
    if m.is_chain() {
        Ok(())
    } else {
        Err(SolveError::NotAChain)
    }
}

/// Exact reachability probability of a Markov chain by Gaussian elimination
/// over the linear equation system `p(s) = sum P(s,t) p(t)` with goals pinned
/// to one and graph-identified zero states pinned to zero.
pub fn solve_mc_exact(m: &ExplicitModel) -> Result<ReachResult, SolveError> {
    require_chain(m)?;
    let value = mc_value(m, Method::GaussianExact)?;
    Ok(ReachResult { value: Value::Exact(value), method: Method::GaussianExact, witness: None })
}

fn mc_value(m: &ExplicitModel, method: Method) -> Result<BigRational, SolveError> {
    let init = m.initial();
    if m.is_goal(init) {
        return Ok(BigRational::one());
    }
    let zero = cannot_reach_goal(m);
    if zero[init.0] {
        return Ok(BigRational::zero());
    }
    match method {
        Method::GaussianExact => gaussian_value(m, &zero),
        Method::EliminationExact => elimination_value(m, &zero),
        _ => unreachable!("mc_value only serves the exact chain methods"),
    }
}

fn gaussian_value(m: &ExplicitModel, zero: &[bool]) -> Result<BigRational, SolveError> {
    // Unknowns: states that can reach a goal but are not goals themselves.
    let mut var_of: BTreeMap<usize, usize> = BTreeMap::new();
    for s in 0..m.num_states() {
        if !zero[s] && !m.is_goal(StateId(s)) {
            let k = var_of.len();
            var_of.insert(s, k);
        }
    }
    let n = var_of.len();
    // Rows of (I - Q) x = b over the unknowns.
    let mut mat: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); n + 1]; n];
    for (&s, &row) in &var_of {
        mat[row][row] = BigRational::one();
        if let Some(choice) = chain_distribution(m, StateId(s))? {
            for (p, t) in &choice.branches {
                if m.is_goal(*t) {
                    let b = mat[row][n].clone();
                    mat[row][n] = b + p;
                } else if let Some(&col) = var_of.get(&t.0) {
                    let c = mat[row][col].clone();
                    mat[row][col] = c - p;
                }
                // transitions into zero states contribute nothing
            }
        }
    }

    // Forward elimination with the first nonzero pivot in each column.
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !mat[r][col].is_zero())
            .expect("reachability system is non-singular");
        mat.swap(col, pivot_row);
        let pivot = mat[col][col].clone();
        for r in col + 1..n {
            if mat[r][col].is_zero() {
                continue;
            }
            let factor = &mat[r][col] / &pivot;
            for k in col..=n {
                let delta = &factor * &mat[col][k];
                mat[r][k] -= delta;
            }
        }
    }
    // Back substitution.
    let mut sol = vec![BigRational::zero(); n];
    for row in (0..n).rev() {
        let mut acc = mat[row][n].clone();
        for k in row + 1..n {
            acc -= &mat[row][k] * &sol[k];
        }
        sol[row] = acc / &mat[row][row];
    }
    let init_var = var_of[&m.initial().0];
    Ok(sol[init_var].clone())
}

/// Sparse workspace for state elimination. Each state's outgoing edges are
/// stored as integer numerators over one shared denominator, so elimination
/// steps need no gcd normalization; a single reduction happens when a value
/// is read out. This keeps exact solving fast on long chains whose
/// probabilities have large denominators.
struct SparseChain {
    denom: Vec<BigInt>,
    succ: Vec<BTreeMap<usize, BigInt>>,
    pred: Vec<BTreeSet<usize>>,
}

impl SparseChain {
    fn from_model(m: &ExplicitModel) -> Result<Self, SolveError> {
        let n = m.num_states();
        let mut denom = vec![BigInt::one(); n];
        let mut succ = vec![BTreeMap::new(); n];
        let mut pred = vec![BTreeSet::new(); n];
        for s in 0..n {
            if let Some(choice) = chain_distribution(m, StateId(s))? {
                let mut d = BigInt::one();
                for (p, _) in &choice.branches {
                    d = lcm(&d, p.denom());
                }
                for (p, t) in &choice.branches {
                    let num = p.numer() * (&d / p.denom());
                    *succ[s].entry(t.0).or_insert_with(BigInt::zero) += num;
                    pred[t.0].insert(s);
                }
                denom[s] = d;
            }
        }
        Ok(SparseChain { denom, succ, pred })
    }

    fn prob(&self, s: usize, t: usize) -> Option<BigRational> {
        self.succ[s]
            .get(&t)
            .map(|n| BigRational::new(n.clone(), self.denom[s].clone()))
    }

    /// Remove state `s` by rescaling its self-loop and rerouting every
    /// ingoing edge through its successor distribution.
    fn eliminate(&mut self, s: usize) -> Result<(), SolveError> {
        let self_w = self.succ[s].remove(&s).unwrap_or_else(BigInt::zero);
        // After removing the self-loop the leftover mass is denom - self_w;
        // zero leftover means the state cannot be left.
        let leftover = &self.denom[s] - &self_w;
        if leftover.is_zero() || self.succ[s].is_empty() {
            return Err(SolveError::AbsorbingState(StateId(s)));
        }
        self.pred[s].remove(&s);
        // With the self-loop removed, s's distribution is succ[s] / leftover.
        let out: Vec<(usize, BigInt)> =
            self.succ[s].iter().map(|(t, w)| (*t, w.clone())).collect();
        let ins: Vec<usize> = self.pred[s].iter().copied().collect();
        for q in ins {
            let w = self.succ[q].remove(&s).expect("predecessor edge exists");
            // P(q->t) becomes (n_qt * leftover + w * n_st) / (D_q * leftover)
            for v in self.succ[q].values_mut() {
                *v *= &leftover;
            }
            for (t, n) in &out {
                *self.succ[q].entry(*t).or_insert_with(BigInt::zero) += &w * n;
                self.pred[*t].insert(q);
            }
            self.denom[q] *= &leftover;
            self.normalize(q);
        }
        for (t, _) in &out {
            self.pred[*t].remove(&s);
        }
        self.succ[s].clear();
        self.pred[s].clear();
        Ok(())
    }

    /// Divide a row by the gcd of its denominator and numerators, so sizes
    /// track the reduced fractions instead of compounding.
    fn normalize(&mut self, q: usize) {
        use num_integer::Integer;
        let mut g = self.denom[q].clone();
        for v in self.succ[q].values() {
            if g.is_one() {
                return;
            }
            g = g.gcd(v);
        }
        if g.is_one() {
            return;
        }
        self.denom[q] /= &g;
        for v in self.succ[q].values_mut() {
            *v /= &g;
        }
    }
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    use num_integer::Integer;
    a.lcm(b)
}

fn elimination_value(m: &ExplicitModel, zero: &[bool]) -> Result<BigRational, SolveError> {
    let mut chain = SparseChain::from_model(m)?;
    let init = m.initial().0;

    // Candidates: everything except the initial state, goals and zero
    // states. Zero states stay so their probability mass visibly diverges.
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    let weight = |c: &SparseChain, s: usize| c.pred[s].len() * c.succ[s].len();
    let candidate =
        |s: usize| s != init && !m.is_goal(StateId(s)) && !zero[s];
    for s in 0..m.num_states() {
        if candidate(s) {
            heap.push(Reverse((weight(&chain, s), s)));
        }
    }
    let mut done = vec![false; m.num_states()];
    while let Some(Reverse((w, s))) = heap.pop() {
        if done[s] {
            continue;
        }
        if chain.pred[s].is_empty() {
            // unreachable by now; nothing to reroute, but its outgoing
            // edges must disappear from the predecessor lists
            done[s] = true;
            let outs: Vec<usize> = chain.succ[s].keys().copied().collect();
            for t in outs {
                chain.pred[t].remove(&s);
            }
            chain.succ[s].clear();
            continue;
        }
        let current = weight(&chain, s);
        if current != w {
            heap.push(Reverse((current, s)));
            continue;
        }
        let affected: Vec<usize> = chain.pred[s]
            .iter()
            .chain(chain.succ[s].keys())
            .copied()
            .collect();
        chain.eliminate(s)?;
        done[s] = true;
        // Re-queue neighbors whose degree changed; stale heap entries are
        // skipped above.
        for q in affected {
            if candidate(q) && !done[q] {
                heap.push(Reverse((weight(&chain, q), q)));
            }
        }
    }

    // The initial state now only reaches goals, zero states, and possibly
    // itself via a residual self-loop.
    let self_w = chain.succ[init].remove(&init).unwrap_or_else(BigInt::zero);
    let mut to_goal = BigInt::zero();
    for (t, w) in &chain.succ[init] {
        if m.is_goal(StateId(*t)) {
            to_goal += w;
        }
    }
    let leftover = &chain.denom[init] - &self_w;
    if leftover.is_zero() {
        return Ok(BigRational::zero());
    }
    Ok(BigRational::new(to_goal, leftover))
}

/// Exact reachability probability via repeated state elimination.
pub fn solve_mc_by_elimination(m: &ExplicitModel) -> Result<ReachResult, SolveError> {
    require_chain(m)?;
    let value = mc_value(m, Method::EliminationExact)?;
    Ok(ReachResult {
        value: Value::Exact(value),
        method: Method::EliminationExact,
        witness: None,
    })
}

/// Eliminate one state of a Markov chain, returning the smaller chain.
/// The state must be neither initial nor a goal, and must not be absorbing.
pub fn mc_eliminate_state(m: &ExplicitModel, s: StateId) -> Result<ExplicitModel, SolveError> {
    require_chain(m)?;
    if s == m.initial() || m.is_goal(s) {
        return Err(SolveError::IsInitialOrGoal(s));
    }
    let mut chain = SparseChain::from_model(m)?;
    chain.eliminate(s.0)?;

    let mut remap = vec![usize::MAX; m.num_states()];
    let mut states = Vec::with_capacity(m.num_states() - 1);
    let mut goal = Vec::with_capacity(m.num_states() - 1);
    for i in 0..m.num_states() {
        if i != s.0 {
            remap[i] = states.len();
            states.push(m.state(StateId(i)).clone());
            goal.push(m.is_goal(StateId(i)));
        }
    }
    let mut choices = Vec::with_capacity(states.len());
    for i in 0..m.num_states() {
        if i == s.0 {
            continue;
        }
        if chain.succ[i].is_empty() {
            choices.push(Vec::new());
            continue;
        }
        let tag = m.choices(StateId(i))[0].tag.clone();
        let dist: BTreeMap<StateId, BigRational> = chain.succ[i]
            .keys()
            .map(|t| (StateId(remap[*t]), chain.prob(i, *t).unwrap()))
            .collect();
        choices.push(vec![ActionChoice::from_map(tag, dist)]);
    }
    Ok(ExplicitModel::from_parts(
        m.location_infos().to_vec(),
        states,
        choices,
        StateId(remap[m.initial().0]),
        goal,
        m.bottom().map(|b| StateId(remap[b.0])),
        m.consts().clone(),
    ))
}

/// How to solve an MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MdpMethod {
    /// Enumerate all stationary deterministic schedulers and solve each
    /// induced chain exactly. The test oracle; exponential in the number of
    /// nondeterministic states.
    SchedulerEnumerationExact,
    /// Standard fixed-point iteration to the given absolute precision.
    ValueIteration(f64),
}

/// Optimization direction for MDP reachability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptDir {
    Maximize,
    Minimize,
}

/// Optimal reachability probability of an MDP over stationary deterministic
/// schedulers.
pub fn solve_mdp(
    m: &ExplicitModel,
    dir: OptDir,
    method: MdpMethod,
) -> Result<ReachResult, SolveError> {
    match method {
        MdpMethod::SchedulerEnumerationExact => solve_mdp_enumeration(m, dir),
        MdpMethod::ValueIteration(eps) => Ok(solve_mdp_value_iteration(m, dir, eps)),
    }
}

fn solve_mdp_enumeration(m: &ExplicitModel, dir: OptDir) -> Result<ReachResult, SolveError> {
    let nondet: Vec<usize> = (0..m.num_states())
        .filter(|&s| m.choices(StateId(s)).len() > 1)
        .collect();
    let mut combos: u64 = 1;
    for &s in &nondet {
        combos = combos
            .checked_mul(m.choices(StateId(s)).len() as u64)
            .filter(|&c| c <= ENUMERATION_LIMIT)
            .ok_or(SolveError::TooLargeForEnumeration(ENUMERATION_LIMIT))?;
    }

    let mut pick = vec![0usize; nondet.len()];
    let mut best: Option<(BigRational, Vec<usize>)> = None;
    loop {
        let induced = induce_chain(m, &nondet, &pick);
        let value = mc_value(&induced, Method::GaussianExact)?;
        let better = match &best {
            None => true,
            Some((cur, _)) => match dir {
                OptDir::Maximize => value > *cur,
                OptDir::Minimize => value < *cur,
            },
        };
        if better {
            best = Some((value, pick.clone()));
        }
        // advance odometer
        let mut i = 0;
        loop {
            if i == nondet.len() {
                let (value, pick) = best.expect("at least one scheduler");
                let witness = scheduler_from_pick(m, &nondet, &pick);
                return Ok(ReachResult {
                    value: Value::Exact(value),
                    method: Method::SchedulerEnumerationExact,
                    witness: Some(witness),
                });
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

fn induce_chain(m: &ExplicitModel, nondet: &[usize], pick: &[usize]) -> ExplicitModel {
    let chosen: BTreeMap<usize, usize> =
        nondet.iter().copied().zip(pick.iter().copied()).collect();
    let choices: Vec<Vec<ActionChoice>> = (0..m.num_states())
        .map(|s| {
            let actions = m.choices(StateId(s));
            match actions.len() {
                0 => Vec::new(),
                1 => vec![actions[0].clone()],
                _ => vec![actions[chosen[&s]].clone()],
            }
        })
        .collect();
    ExplicitModel::from_parts(
        m.location_infos().to_vec(),
        m.states().to_vec(),
        choices,
        m.initial(),
        (0..m.num_states()).map(|s| m.is_goal(StateId(s))).collect(),
        m.bottom(),
        m.consts().clone(),
    )
}

fn scheduler_from_pick(m: &ExplicitModel, nondet: &[usize], pick: &[usize]) -> Scheduler {
    let chosen: BTreeMap<usize, usize> =
        nondet.iter().copied().zip(pick.iter().copied()).collect();
    let mut map = BTreeMap::new();
    for s in 0..m.num_states() {
        let actions = m.choices(StateId(s));
        if actions.is_empty() {
            continue;
        }
        let k = chosen.get(&s).copied().unwrap_or(0);
        map.insert(StateId(s), actions[k].tag.clone());
    }
    Scheduler(map)
}

fn solve_mdp_value_iteration(m: &ExplicitModel, dir: OptDir, eps: f64) -> ReachResult {
    let n = m.num_states();
    let zero = cannot_reach_goal(m);
    let mut values = vec![0.0f64; n];
    for g in m.goal_states() {
        values[g.0] = 1.0;
    }
    // Cache f64 transition probabilities.
    let probs: Vec<Vec<Vec<(f64, usize)>>> = (0..n)
        .map(|s| {
            m.choices(StateId(s))
                .iter()
                .map(|a| {
                    a.branches
                        .iter()
                        .map(|(p, t)| (p.to_f64().unwrap_or(0.0), t.0))
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut prev_delta = f64::INFINITY;
    for _ in 0..2_000_000u64 {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            if m.is_goal(StateId(s)) || zero[s] || probs[s].is_empty() {
                continue;
            }
            let mut best = match dir {
                OptDir::Maximize => f64::NEG_INFINITY,
                OptDir::Minimize => f64::INFINITY,
            };
            for action in &probs[s] {
                let v: f64 = action.iter().map(|(p, t)| p * values[*t]).sum();
                best = match dir {
                    OptDir::Maximize => best.max(v),
                    OptDir::Minimize => best.min(v),
                };
            }
            delta = delta.max((best - values[s]).abs());
            values[s] = best;
        }
        // Geometric tail bound: with contraction estimate q = delta/prev,
        // the remaining error is at most delta * q / (1 - q).
        if delta == 0.0 {
            break;
        }
        let q = (delta / prev_delta).min(0.999_999);
        if q < 1.0 && delta * q / (1.0 - q) < eps && delta < eps {
            break;
        }
        prev_delta = delta;
    }
    let value = values[m.initial().0].clamp(0.0, 1.0);
    ReachResult {
        value: Value::Approx(value),
        method: Method::ValueIteration(eps),
        witness: None,
    }
}

/// Canonical key of a state: its location's base name, the label valuation
/// and the variable valuation merged. This is the natural bijection between
/// a program's model and the model of its unfolding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum StateKey {
    Bottom,
    Pair(String, Valuation),
}

/// Compare two explicit models up to renaming of states and action labels:
/// states are keyed by base location name plus merged label/variable
/// valuation, and per state the multisets of action distributions must
/// agree. Action tags themselves are ignored.
pub fn canonical_compare(a: &ExplicitModel, b: &ExplicitModel) -> bool {
    canonical_compare_impl(a, b).is_some()
}

fn keyed_states(m: &ExplicitModel) -> Option<BTreeMap<StateKey, StateId>> {
    let mut map = BTreeMap::new();
    for s in 0..m.num_states() {
        let key = match m.state(StateId(s)) {
            StateDesc::Bottom => StateKey::Bottom,
            StateDesc::Pair { location, valuation } => {
                let info = m.location_info(*location);
                StateKey::Pair(info.base.clone(), info.label.union(valuation))
            }
        };
        if map.insert(key, StateId(s)).is_some() {
            return None;
        }
    }
    Some(map)
}

fn canonical_compare_impl(a: &ExplicitModel, b: &ExplicitModel) -> Option<()> {
    if a.num_states() != b.num_states() {
        return None;
    }
    let ka = keyed_states(a)?;
    let kb = keyed_states(b)?;
    if !ka.keys().eq(kb.keys()) {
        return None;
    }
    let rev_a: BTreeMap<StateId, StateKey> = ka.iter().map(|(k, v)| (*v, k.clone())).collect();
    let rev_b: BTreeMap<StateId, StateKey> = kb.iter().map(|(k, v)| (*v, k.clone())).collect();
    if rev_a[&a.initial()] != rev_b[&b.initial()] {
        return None;
    }

    // Distribution of one action, with targets replaced by their keys.
    fn dist_of(
        keys: &BTreeMap<StateId, StateKey>,
        action: &ActionChoice,
    ) -> Vec<(StateKey, BigRational)> {
        let mut d: BTreeMap<StateKey, BigRational> = BTreeMap::new();
        for (p, t) in &action.branches {
            *d.entry(keys[t].clone()).or_insert_with(BigRational::zero) += p;
        }
        d.into_iter().collect()
    }

    for (key, sa) in &ka {
        let sb = kb[key];
        if a.is_goal(*sa) != b.is_goal(sb) {
            return None;
        }
        let mut da: Vec<Vec<(StateKey, BigRational)>> =
            a.choices(*sa).iter().map(|c| dist_of(&rev_a, c)).collect();
        let mut db: Vec<Vec<(StateKey, BigRational)>> =
            b.choices(sb).iter().map(|c| dist_of(&rev_b, c)).collect();
        da.sort();
        db.sort();
        if da != db {
            return None;
        }
    }
    Some(())
}

/// Counts of an explicit model: states, transitions as (state, action,
/// target) triples with nonzero probability, and available actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelStats {
    pub states: usize,
    pub transitions: usize,
    pub actions: usize,
}

pub fn model_stats(m: &ExplicitModel) -> ModelStats {
    let mut transitions = 0;
    let mut actions = 0;
    for choices in m.all_choices() {
        actions += choices.len();
        for a in choices {
            transitions += a.branches.iter().filter(|(p, _)| !p.is_zero()).count();
        }
    }
    ModelStats { states: m.num_states(), transitions, actions }
}

// Sanity helper used by debug assertions and tests: every distribution must
// sum to one.
#[allow(dead_code)]
pub(crate) fn stochastic(m: &ExplicitModel) -> bool {
    m.all_choices().iter().all(|choices| {
        choices.iter().all(|a| {
            let sum: BigRational = a.branches.iter().map(|(p, _)| p.clone()).sum();
            sum.is_one() && a.branches.iter().all(|(p, _)| p.is_positive())
        })
    })
}
