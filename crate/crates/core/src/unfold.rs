//! Variable-dependency analysis and unfolding of finite-domain variables
//! into the control location space.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use thiserror::Error;

use crate::expr::{
    eval_int, simplify, substitute_pred, Assignment, Int, Update, UpdateBlock, Valuation,
    VarId,
};
use crate::pcfp::{Command, Destination, LocationId, LocationInfo, Pcfp};

/// Directed variable dependency graph: an edge `x -> y` means some
/// assignment writes `x` from a right-hand side mentioning `y`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DependencyGraph {
    edges: BTreeMap<VarId, BTreeSet<VarId>>,
}

impl DependencyGraph {
    pub fn depends_on(&self, x: &VarId) -> impl Iterator<Item = &VarId> {
        self.edges.get(x).into_iter().flatten()
    }

    pub fn has_edge(&self, x: &VarId, y: &VarId) -> bool {
        self.edges.get(x).map(|s| s.contains(y)).unwrap_or(false)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(|s| s.len()).sum()
    }
}

/// Build the dependency graph of a program. Only updates are taken into
/// account; guards play no role.
pub fn dependency_graph(p: &Pcfp) -> DependencyGraph {
    let mut edges: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
    for cmd in p.commands() {
        for dest in &cmd.destinations {
            for block in dest.update.blocks() {
                for a in block.assignments() {
                    edges.entry(a.lhs.clone()).or_default().extend(a.rhs.vars());
                }
            }
        }
    }
    DependencyGraph { edges }
}

/// Variables that depend at most on themselves.
pub fn directly_unfoldable(p: &Pcfp) -> BTreeSet<VarId> {
    let g = dependency_graph(p);
    p.vars()
        .iter()
        .filter(|x| g.depends_on(x).all(|y| y == *x))
        .cloned()
        .collect()
}

/// The bottom strongly connected components of the dependency graph, each
/// closed under dependency, smallest first.
pub fn unfoldable_sets(p: &Pcfp) -> Vec<BTreeSet<VarId>> {
    let g = dependency_graph(p);
    let vars: Vec<VarId> = p.vars().to_vec();
    let index: BTreeMap<&VarId, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();

    // Tarjan's algorithm, iterating variables in program order.
    struct Tarjan<'a> {
        g: &'a DependencyGraph,
        index: &'a BTreeMap<&'a VarId, usize>,
        vars: &'a [VarId],
        order: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        next: usize,
        sccs: Vec<Vec<usize>>,
    }

    impl Tarjan<'_> {
        fn visit(&mut self, v: usize) {
            self.order[v] = Some(self.next);
            self.low[v] = self.next;
            self.next += 1;
            self.stack.push(v);
            self.on_stack[v] = true;
            let succs: Vec<usize> = self
                .g
                .depends_on(&self.vars[v])
                .filter_map(|w| self.index.get(w).copied())
                .collect();
            for w in succs {
                if self.order[w].is_none() {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                } else if self.on_stack[w] {
                    self.low[v] = self.low[v].min(self.order[w].unwrap());
                }
            }
            if self.low[v] == self.order[v].unwrap() {
                let mut comp = Vec::new();
                loop {
                    let w = self.stack.pop().unwrap();
                    self.on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                self.sccs.push(comp);
            }
        }
    }

    let mut t = Tarjan {
        g: &g,
        index: &index,
        vars: &vars,
        order: vec![None; vars.len()],
        low: vec![0; vars.len()],
        on_stack: vec![false; vars.len()],
        stack: Vec::new(),
        next: 0,
        sccs: Vec::new(),
    };
    for v in 0..vars.len() {
        if t.order[v].is_none() {
            t.visit(v);
        }
    }

    let scc_of: BTreeMap<usize, usize> = t
        .sccs
        .iter()
        .enumerate()
        .flat_map(|(i, comp)| comp.iter().map(move |v| (*v, i)))
        .collect();

    let mut bottom: Vec<BTreeSet<VarId>> = Vec::new();
    for (i, comp) in t.sccs.iter().enumerate() {
        let leaves_scc = comp.iter().any(|v| {
            g.depends_on(&vars[*v])
                .filter_map(|w| index.get(w))
                .any(|w| scc_of[w] != i)
        });
        if !leaves_scc {
            bottom.push(comp.iter().map(|v| vars[*v].clone()).collect());
        }
    }
    bottom.sort_by(|a, b| {
        a.len()
            .cmp(&b.len())
            .then_with(|| a.iter().next().cmp(&b.iter().next()))
    });
    bottom
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum UnfoldError {
    #[error("variable '{0}' has a domain bound or initial value with undefined constants")]
    SymbolicBound(VarId),

    #[error("unfold set is not dependency-closed: '{0}' depends on '{1}'")]
    NotClosed(VarId, VarId),

    #[error("cannot unfold unknown variable '{0}'")]
    UnknownVariable(VarId),

    #[error("cannot unfold '{0}': it collides with an existing label variable")]
    LabelCollision(VarId),
}

/// Specialize an update by a partial valuation over the unfold set `U`,
/// tracking the values of `U` through the blocks. Returns the residual
/// update (all assignments to `U` removed, reads of `U` replaced by their
/// tracked values) together with the final `U`-valuation.
///
/// Right-hand sides of assignments to `U` only mention `U` because the set
/// is dependency-closed, so the tracked valuation is always defined.
fn specialize_update(
    u: &Update,
    nu: &Valuation,
    p: &Pcfp,
) -> Result<(Update, Valuation), UnfoldError> {
    let mut cur = nu.clone();
    let mut blocks = Vec::new();
    for block in u.blocks() {
        let mut residual = Vec::new();
        let mut staged: Vec<(VarId, Int)> = Vec::new();
        for a in block.assignments() {
            if cur.contains(&a.lhs) {
                let rhs = crate::expr::substitute_int(&a.rhs, &cur);
                let value = eval_int(&rhs, &Valuation::new(), p.consts())
                    .map_err(|_| UnfoldError::SymbolicBound(a.lhs.clone()))?;
                staged.push((a.lhs.clone(), value));
            } else {
                residual.push(Assignment {
                    lhs: a.lhs.clone(),
                    rhs: crate::expr::substitute_int(&a.rhs, &cur),
                });
            }
        }
        for (lhs, v) in staged {
            cur.set(lhs, v);
        }
        blocks.push(UpdateBlock::new(residual));
    }
    Ok((Update::from_blocks(blocks), cur))
}

/// Unfold a dependency-closed set of variables into the location space.
///
/// The new location set is the product of the old one with the domains of
/// the unfolded variables, restricted to locations reachable in the
/// location graph; each new location's label extends the old label by its
/// variable values. Guards and updates are specialized accordingly and the
/// unfolded variables disappear from the program. Unfolding the empty set
/// returns the program unchanged.
pub fn unfold(p: &Pcfp, set: &BTreeSet<VarId>) -> Result<Pcfp, UnfoldError> {
    if set.is_empty() {
        return Ok(p.clone());
    }
    let deps = dependency_graph(p);
    for u in set {
        if !p.vars().contains(u) {
            return Err(UnfoldError::UnknownVariable(u.clone()));
        }
        for d in deps.depends_on(u) {
            if !set.contains(d) {
                return Err(UnfoldError::NotClosed(u.clone(), d.clone()));
            }
        }
    }
    let label_vars = p.label_vars();
    for u in set {
        if label_vars.contains(u) {
            return Err(UnfoldError::LabelCollision(u.clone()));
        }
    }

    // Bounds of the unfolded variables must be concrete.
    let mut ranges: Vec<(VarId, Int, Int)> = Vec::new();
    for u in set {
        let (lo, hi) = p
            .dom()
            .bounds(u, p.consts())
            .map_err(|_| UnfoldError::SymbolicBound(u.clone()))?;
        ranges.push((u.clone(), lo, hi));
    }

    let init_full = {
        let empty = Valuation::new();
        let mut nu = Valuation::new();
        for u in set {
            let e = &p.initial_values()[u];
            let v = eval_int(e, &empty, p.consts())
                .map_err(|_| UnfoldError::SymbolicBound(u.clone()))?;
            nu.set(u.clone(), v);
        }
        nu
    };

    let assignments: Vec<Valuation> = crate::expr::enumerate_domain(&ranges);
    let stride = assignments.len();
    let rank_of: BTreeMap<&Valuation, usize> =
        assignments.iter().enumerate().map(|(i, a)| (a, i)).collect();

    // Full product of locations and U-valuations.
    let mut locations = Vec::with_capacity(p.locations().len() * stride);
    for loc in p.locations() {
        for nu in &assignments {
            locations.push(LocationInfo::with_label(loc.base.clone(), loc.label.union(nu)));
        }
    }
    let product_id = |l: LocationId, nu: &Valuation| -> LocationId {
        let rank = rank_of[nu];
        LocationId(l.0 * stride + rank)
    };

    // A branch whose unfolded value leaves the domain would go to the
    // out-of-domain state; the location product cannot express that, so the
    // value is clamped. Such branches are dead in well-formed programs.
    // Only branches whose guard is not already false are worth a warning.
    let clamp = |nu: Valuation, guard_dead: bool| -> Valuation {
        let mut out = nu;
        for (u, lo, hi) in &ranges {
            let v = out.get(u).expect("tracked U-valuation is total");
            if v < *lo || v > *hi {
                if !guard_dead {
                    warn!(
                        "unfolding of '{u}' leaves its domain ({v} outside [{lo}..{hi}]); \
                         the branch is unreachable in well-formed programs"
                    );
                }
                out.set(u.clone(), v.clamp(*lo, *hi));
            }
        }
        out
    };

    let mut commands = Vec::with_capacity(p.commands().len() * stride);
    for cmd in p.commands() {
        for nu in &assignments {
            let guard = simplify(&substitute_pred(&cmd.guard, nu));
            let guard_dead = guard == crate::expr::Predicate::FALSE;
            let mut destinations = Vec::with_capacity(cmd.destinations.len());
            for dest in &cmd.destinations {
                let (update, after) = specialize_update(&dest.update, nu, p)?;
                let after = clamp(after, guard_dead);
                destinations.push(Destination {
                    prob: dest.prob.clone(),
                    update,
                    target: product_id(dest.target, &after),
                });
            }
            commands.push(Command {
                source: product_id(cmd.source, nu),
                action: cmd.action.derived(&format!("@{nu}")),
                guard,
                destinations,
            });
        }
    }

    let vars: Vec<VarId> = p.vars().iter().filter(|v| !set.contains(v)).cloned().collect();
    let mut dom = p.dom().clone();
    let mut init = p.initial_values().clone();
    for u in set {
        dom.remove(u);
        init.remove(u);
    }

    let unfolded = Pcfp::new(
        locations,
        vars,
        dom,
        commands,
        product_id(p.initial_location(), &init_full),
        init,
        p.consts().clone(),
    )
    .expect("unfolding preserves structural validity");

    // Drop locations unreachable in the location graph; unsatisfiable
    // guards are left for the elimination pass.
    let keep = unfolded.location_graph_reachable();
    Ok(unfolded.retain_locations(&keep))
}
