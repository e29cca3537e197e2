//! The probabilistic control-flow program model and its explicit MDP
//! semantics: locations, location-guided probabilistic commands, breadth
//! first state space construction, well-formedness, determinism and goal
//! classification.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use log::warn;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::expr::{
    apply_update, check_sat, eval_int, eval_pred, simplify, substitute_pred, ConstEnv, EvalError,
    Int, IntExpr, Predicate, Update, Valuation, VarId, DEFAULT_SAT_BUDGET,
};
use crate::expr::DomainMap;

/// Default cap on the number of explicit states built from one program.
pub const DEFAULT_STATE_LIMIT: usize = 10_000_000;

/// Index of a control-flow location within one [`Pcfp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocationId(pub usize);

impl fmt::Display for LocationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

/// Descriptive data of one location: the base name it inherited from the
/// source program and the partial valuation over previously unfolded
/// variables it is labeled with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocationInfo {
    pub base: String,
    pub label: Valuation,
}

impl LocationInfo {
    pub fn new(base: impl Into<String>) -> Self {
        LocationInfo { base: base.into(), label: Valuation::new() }
    }

    pub fn with_label(base: impl Into<String>, label: Valuation) -> Self {
        LocationInfo { base: base.into(), label }
    }

    pub fn display_name(&self) -> String {
        if self.label.is_empty() {
            self.base.clone()
        } else {
            format!("{}[{}]", self.base, self.label)
        }
    }
}

/// Opaque action identifier; unique per program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionTag(String);

impl ActionTag {
    pub fn new(tag: impl Into<String>) -> Self {
        let tag = tag.into();
        debug_assert!(!tag.contains(char::is_whitespace), "action tags must not contain spaces");
        ActionTag(tag)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Derived tag for a command produced while rewriting this one.
    pub fn derived(&self, suffix: &str) -> ActionTag {
        ActionTag(format!("{}#{}", self.0, suffix))
    }
}

impl fmt::Display for ActionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One probabilistic destination of a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Destination {
    pub prob: BigRational,
    pub update: Update,
    pub target: LocationId,
}

/// A location-guided probabilistic command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Command {
    pub source: LocationId,
    pub action: ActionTag,
    pub guard: Predicate,
    pub destinations: Vec<Destination>,
}

impl Command {
    /// True if some destination loops back to the source location.
    pub fn has_self_loop(&self) -> bool {
        self.destinations.iter().any(|d| d.target == self.source)
    }
}

/// A probabilistic control-flow program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pcfp {
    locations: Vec<LocationInfo>,
    vars: Vec<VarId>,
    dom: DomainMap,
    commands: Vec<Command>,
    initial_location: LocationId,
    /// Initial values as constant expressions; kept symbolic until model
    /// construction so programs with undefined constants can be reduced.
    initial_values: BTreeMap<VarId, IntExpr>,
    consts: ConstEnv,
}

/// Structural validation errors for [`Pcfp::new`].
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InvalidPcfp {
    #[error("a program needs at least one location")]
    NoLocations,

    #[error("location index {0} out of range")]
    BadLocationIndex(usize),

    #[error("command {0} has no destinations")]
    EmptyCommand(usize),

    #[error("command {0}: destination probabilities sum to {1}, not 1")]
    BadProbabilitySum(usize, String),

    #[error("command {0}: destination probability {1} outside (0,1]")]
    BadProbability(usize, String),

    #[error("duplicate action tag '{0}'")]
    DuplicateActionTag(String),

    #[error("duplicate location '{0}'")]
    DuplicateLocation(String),

    #[error("variable '{0}' has no domain")]
    MissingDomain(String),

    #[error("variable '{0}' has no initial value")]
    MissingInitial(String),
}

impl Pcfp {
    pub fn new(
        locations: Vec<LocationInfo>,
        vars: Vec<VarId>,
        dom: DomainMap,
        commands: Vec<Command>,
        initial_location: LocationId,
        initial_values: BTreeMap<VarId, IntExpr>,
        consts: ConstEnv,
    ) -> Result<Pcfp, InvalidPcfp> {
        if locations.is_empty() {
            return Err(InvalidPcfp::NoLocations);
        }
        let mut names = BTreeSet::new();
        for l in &locations {
            if !names.insert((l.base.clone(), l.label.clone())) {
                return Err(InvalidPcfp::DuplicateLocation(l.display_name()));
            }
        }
        if initial_location.0 >= locations.len() {
            return Err(InvalidPcfp::BadLocationIndex(initial_location.0));
        }
        for v in &vars {
            if dom.get(v).is_none() {
                return Err(InvalidPcfp::MissingDomain(v.to_string()));
            }
            if !initial_values.contains_key(v) {
                return Err(InvalidPcfp::MissingInitial(v.to_string()));
            }
        }
        let mut tags = BTreeSet::new();
        for (i, c) in commands.iter().enumerate() {
            if c.source.0 >= locations.len() {
                return Err(InvalidPcfp::BadLocationIndex(c.source.0));
            }
            if c.destinations.is_empty() {
                return Err(InvalidPcfp::EmptyCommand(i));
            }
            let mut sum = BigRational::zero();
            for d in &c.destinations {
                if d.target.0 >= locations.len() {
                    return Err(InvalidPcfp::BadLocationIndex(d.target.0));
                }
                if d.prob <= BigRational::zero() || d.prob > BigRational::one() {
                    return Err(InvalidPcfp::BadProbability(i, d.prob.to_string()));
                }
                sum += &d.prob;
            }
            if !sum.is_one() {
                return Err(InvalidPcfp::BadProbabilitySum(i, sum.to_string()));
            }
            if !tags.insert(c.action.clone()) {
                return Err(InvalidPcfp::DuplicateActionTag(c.action.to_string()));
            }
        }
        Ok(Pcfp {
            locations,
            vars,
            dom,
            commands,
            initial_location,
            initial_values,
            consts,
        })
    }

    pub fn locations(&self) -> &[LocationInfo] {
        &self.locations
    }

    pub fn location(&self, l: LocationId) -> &LocationInfo {
        &self.locations[l.0]
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn dom(&self) -> &DomainMap {
        &self.dom
    }

    pub fn commands(&self) -> &[Command] {
        &self.commands
    }

    pub fn initial_location(&self) -> LocationId {
        self.initial_location
    }

    pub fn initial_values(&self) -> &BTreeMap<VarId, IntExpr> {
        &self.initial_values
    }

    pub fn consts(&self) -> &ConstEnv {
        &self.consts
    }

    /// Replace the values of already-declared constants.
    pub fn with_const_values(
        &self,
        values: &BTreeMap<String, Int>,
    ) -> Result<Pcfp, UnknownConstant> {
        let mut consts = ConstEnv::new();
        for (id, v) in self.consts.iter() {
            consts.declare(id.clone(), *v);
        }
        for (name, v) in values {
            let id = crate::expr::ConstId::new(name.clone());
            if !consts.is_declared(&id) {
                return Err(UnknownConstant(name.clone()));
            }
            consts.declare(id, Some(*v));
        }
        let mut out = self.clone();
        out.consts = consts;
        Ok(out)
    }

    /// Commands whose source is `l`, with their indices.
    pub fn commands_at(&self, l: LocationId) -> impl Iterator<Item = (usize, &Command)> {
        self.commands
            .iter()
            .enumerate()
            .filter(move |(_, c)| c.source == l)
    }

    /// All transitions into `l`, as (command index, destination index).
    /// Self-loops (source = target = l) are included unless excluded.
    pub fn ingoing_transitions(&self, l: LocationId, include_self_loops: bool) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (ci, c) in self.commands.iter().enumerate() {
            for (di, d) in c.destinations.iter().enumerate() {
                if d.target == l && (include_self_loops || c.source != l) {
                    out.push((ci, di));
                }
            }
        }
        out
    }

    pub fn has_self_loop(&self, l: LocationId) -> bool {
        self.commands
            .iter()
            .any(|c| c.source == l && c.destinations.iter().any(|d| d.target == l))
    }

    /// Total number of transitions (destinations over all commands).
    pub fn transition_count(&self) -> usize {
        self.commands.iter().map(|c| c.destinations.len()).sum()
    }

    /// The initial valuation with all expressions evaluated.
    pub fn initial_valuation(&self) -> Result<Valuation, EvalError> {
        let empty = Valuation::new();
        let mut nu = Valuation::new();
        for (v, e) in &self.initial_values {
            nu.set(v.clone(), eval_int(e, &empty, &self.consts)?);
        }
        Ok(nu)
    }

    /// Label variables in use, i.e. the union of all label supports.
    pub fn label_vars(&self) -> BTreeSet<VarId> {
        self.locations
            .iter()
            .flat_map(|l| l.label.support().cloned())
            .collect()
    }

    /// Locations reachable from the initial location in the location graph,
    /// ignoring guards.
    pub fn location_graph_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.locations.len()];
        let mut queue = VecDeque::from([self.initial_location]);
        seen[self.initial_location.0] = true;
        while let Some(l) = queue.pop_front() {
            for (_, c) in self.commands_at(l) {
                for d in &c.destinations {
                    if !seen[d.target.0] {
                        seen[d.target.0] = true;
                        queue.push_back(d.target);
                    }
                }
            }
        }
        seen
    }

    /// Rebuild the program keeping only the locations marked in `keep`;
    /// commands at removed locations are dropped. Panics if a surviving
    /// command targets a removed location.
    pub(crate) fn retain_locations(&self, keep: &[bool]) -> Pcfp {
        assert!(keep[self.initial_location.0], "cannot remove the initial location");
        let mut remap = vec![usize::MAX; self.locations.len()];
        let mut locations = Vec::new();
        for (i, l) in self.locations.iter().enumerate() {
            if keep[i] {
                remap[i] = locations.len();
                locations.push(l.clone());
            }
        }
        let commands = self
            .commands
            .iter()
            .filter(|c| keep[c.source.0])
            .map(|c| Command {
                source: LocationId(remap[c.source.0]),
                action: c.action.clone(),
                guard: c.guard.clone(),
                destinations: c
                    .destinations
                    .iter()
                    .map(|d| {
                        assert!(keep[d.target.0], "surviving command targets removed location");
                        Destination {
                            prob: d.prob.clone(),
                            update: d.update.clone(),
                            target: LocationId(remap[d.target.0]),
                        }
                    })
                    .collect(),
            })
            .collect();
        Pcfp {
            locations,
            vars: self.vars.clone(),
            dom: self.dom.clone(),
            commands,
            initial_location: LocationId(remap[self.initial_location.0]),
            initial_values: self.initial_values.clone(),
            consts: self.consts.clone(),
        }
    }

    pub(crate) fn replace_commands(&self, commands: Vec<Command>) -> Pcfp {
        let mut out = self.clone();
        out.commands = commands;
        out
    }

    pub(crate) fn push_location(&mut self, info: LocationInfo) -> LocationId {
        self.locations.push(info);
        LocationId(self.locations.len() - 1)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown constant '{0}'")]
pub struct UnknownConstant(pub String);

/// Objective of a reachability query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Plain probability on a deterministic program.
    Forced,
    Maximize,
    Minimize,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Forced => write!(f, "P=?"),
            Objective::Maximize => write!(f, "Pmax=?"),
            Objective::Minimize => write!(f, "Pmin=?"),
        }
    }
}

/// A reachability objective plus its goal predicate over program variables
/// and label variables from earlier unfoldings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalSpec {
    pub objective: Objective,
    pub predicate: Predicate,
}

impl GoalSpec {
    pub fn new(objective: Objective, predicate: Predicate) -> Self {
        GoalSpec { objective, predicate }
    }

    /// The goal predicate specialized to a location's label.
    pub fn at_location(&self, p: &Pcfp, l: LocationId) -> Predicate {
        simplify(&substitute_pred(&self.predicate, &p.location(l).label))
    }
}

/// A state of the explicit model: a location paired with a valuation, or
/// the distinguished out-of-domain state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateDesc {
    Pair { location: LocationId, valuation: Valuation },
    Bottom,
}

/// Index of a state in an [`ExplicitModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One available action of a state: a tag and a probability distribution
/// over successor states. Parallel transitions to the same target are
/// merged; branches are sorted by target index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionChoice {
    pub tag: ActionTag,
    pub branches: Vec<(BigRational, StateId)>,
}

impl ActionChoice {
    pub fn from_map(tag: ActionTag, map: BTreeMap<StateId, BigRational>) -> Self {
        ActionChoice {
            tag,
            branches: map.into_iter().map(|(s, p)| (p, s)).collect(),
        }
    }
}

/// The explicit Markov decision process of a program: interned states,
/// per-state action choices, an initial state and a goal mask. The model
/// keeps a copy of the program's location descriptions so it can be
/// compared and rendered on its own.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitModel {
    locations: Vec<LocationInfo>,
    states: Vec<StateDesc>,
    choices: Vec<Vec<ActionChoice>>,
    initial: StateId,
    goal: Vec<bool>,
    bottom: Option<StateId>,
    consts: ConstEnv,
}

impl ExplicitModel {
    /// Assemble a model directly. Intended for import, tests and tools; the
    /// usual path is [`build_semantics`].
    pub fn from_parts(
        locations: Vec<LocationInfo>,
        states: Vec<StateDesc>,
        choices: Vec<Vec<ActionChoice>>,
        initial: StateId,
        goal: Vec<bool>,
        bottom: Option<StateId>,
        consts: ConstEnv,
    ) -> Self {
        assert_eq!(states.len(), choices.len());
        assert_eq!(states.len(), goal.len());
        assert!(initial.0 < states.len());
        ExplicitModel { locations, states, choices, initial, goal, bottom, consts }
    }

    pub fn location_info(&self, l: LocationId) -> &LocationInfo {
        &self.locations[l.0]
    }

    pub fn location_infos(&self) -> &[LocationInfo] {
        &self.locations
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, s: StateId) -> &StateDesc {
        &self.states[s.0]
    }

    pub fn states(&self) -> &[StateDesc] {
        &self.states
    }

    pub fn choices(&self, s: StateId) -> &[ActionChoice] {
        &self.choices[s.0]
    }

    pub fn all_choices(&self) -> &[Vec<ActionChoice>] {
        &self.choices
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_goal(&self, s: StateId) -> bool {
        self.goal[s.0]
    }

    pub fn goal_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.goal
            .iter()
            .enumerate()
            .filter(|(_, g)| **g)
            .map(|(i, _)| StateId(i))
    }

    pub fn bottom(&self) -> Option<StateId> {
        self.bottom
    }

    pub fn consts(&self) -> &ConstEnv {
        &self.consts
    }

    /// True when no state offers more than one action.
    pub fn is_chain(&self) -> bool {
        self.choices.iter().all(|c| c.len() <= 1)
    }
}

/// Errors from explicit-model construction.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("state space exceeds the limit of {0} states")]
    ExplosionLimit(usize),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("initial valuation is outside the variable domains")]
    InitialOutOfDomain,
}

/// Build the explicit semantics of a program by breadth-first exploration
/// from the initial state, with the default state cap.
pub fn build_semantics(p: &Pcfp) -> Result<ExplicitModel, SemanticsError> {
    build_semantics_with_limit(p, DEFAULT_STATE_LIMIT)
}

/// [`build_semantics`] with an explicit state cap.
///
/// States are interned in first-discovery order of a deterministic BFS that
/// scans commands in program order. Destinations that leave a variable's
/// domain go to the distinguished absorbing out-of-domain state, which makes
/// non-well-formed programs total rather than rejected.
pub fn build_semantics_with_limit(
    p: &Pcfp,
    limit: usize,
) -> Result<ExplicitModel, SemanticsError> {
    // Resolve every domain up front; model construction requires the
    // constants to be instantiated.
    let mut bounds: BTreeMap<VarId, (Int, Int)> = BTreeMap::new();
    for (v, d) in p.dom().iter() {
        bounds.insert(v.clone(), d.bounds(p.consts())?);
    }
    let in_dom = |nu: &Valuation| -> bool {
        bounds
            .iter()
            .all(|(v, (lo, hi))| nu.get(v).map(|x| *lo <= x && x <= *hi).unwrap_or(false))
    };

    let init_val = p.initial_valuation()?;
    if !in_dom(&init_val) {
        return Err(SemanticsError::InitialOutOfDomain);
    }

    let mut states: Vec<StateDesc> = Vec::new();
    let mut choices: Vec<Vec<ActionChoice>> = Vec::new();
    let mut index: HashMap<(LocationId, Valuation), StateId> = HashMap::new();
    let mut bottom: Option<StateId> = None;
    let mut queue: VecDeque<StateId> = VecDeque::new();

    let init_key = (p.initial_location(), init_val);
    states.push(StateDesc::Pair { location: init_key.0, valuation: init_key.1.clone() });
    choices.push(Vec::new());
    index.insert(init_key, StateId(0));
    queue.push_back(StateId(0));

    while let Some(s) = queue.pop_front() {
        let (loc, nu) = match states[s.0].clone() {
            StateDesc::Pair { location, valuation } => (location, valuation),
            StateDesc::Bottom => continue,
        };
        let mut actions = Vec::new();
        for (_, cmd) in p.commands_at(loc) {
            if !eval_pred(&cmd.guard, &nu, p.consts())? {
                continue;
            }
            let mut dist: BTreeMap<StateId, BigRational> = BTreeMap::new();
            for dest in &cmd.destinations {
                let next = apply_update(&dest.update, &nu, p.consts())?;
                let target = if in_dom(&next) {
                    let key = (dest.target, next);
                    match index.get(&key) {
                        Some(id) => *id,
                        None => {
                            if states.len() >= limit {
                                return Err(SemanticsError::ExplosionLimit(limit));
                            }
                            let id = StateId(states.len());
                            states.push(StateDesc::Pair {
                                location: key.0,
                                valuation: key.1.clone(),
                            });
                            choices.push(Vec::new());
                            index.insert(key, id);
                            queue.push_back(id);
                            id
                        }
                    }
                } else {
                    *bottom.get_or_insert_with(|| {
                        warn!(
                            "program is not well-formed: out-of-domain state reached from {} under {}",
                            p.location(loc).display_name(),
                            nu
                        );
                        let id = StateId(states.len());
                        states.push(StateDesc::Bottom);
                        choices.push(Vec::new());
                        id
                    })
                };
                *dist.entry(target).or_insert_with(BigRational::zero) += &dest.prob;
            }
            actions.push(ActionChoice::from_map(cmd.action.clone(), dist));
        }
        choices[s.0] = actions;
    }

    let goal = vec![false; states.len()];
    Ok(ExplicitModel {
        locations: p.locations().to_vec(),
        states,
        choices,
        initial: StateId(0),
        goal,
        bottom,
        consts: p.consts().clone(),
    })
}

/// A program is well-formed when the out-of-domain state is unreachable.
pub fn check_well_formed(p: &Pcfp) -> Result<bool, SemanticsError> {
    Ok(build_semantics(p)?.bottom.is_none())
}

/// A program is deterministic when no reachable state has two enabled
/// commands; its semantics is then a Markov chain.
pub fn check_deterministic(p: &Pcfp) -> Result<bool, SemanticsError> {
    Ok(build_semantics(p)?.is_chain())
}

/// A location is a potential goal when the goal predicate, specialized by
/// the location's label, is satisfiable in the variable domains. `Unknown`
/// counts as potentially a goal so that reductions stay conservative.
pub fn check_potential_goal(p: &Pcfp, l: LocationId, g: &GoalSpec) -> bool {
    let specialized = g.at_location(p, l);
    !check_sat(&specialized, p.dom(), p.consts(), DEFAULT_SAT_BUDGET).is_unsat()
}

/// Set the goal mask: a state is a goal when the predicate holds under its
/// valuation extended by its location's label. The out-of-domain state is
/// never a goal.
pub fn mark_goal_states(mut m: ExplicitModel, g: &GoalSpec) -> Result<ExplicitModel, EvalError> {
    let mut mask = vec![false; m.states.len()];
    for (i, s) in m.states.iter().enumerate() {
        mask[i] = match s {
            StateDesc::Bottom => false,
            StateDesc::Pair { location, valuation } => {
                let full = valuation.union(&m.locations[location.0].label);
                eval_pred(&g.predicate, &full, &m.consts)?
            }
        };
    }
    m.goal = mask;
    Ok(m)
}
