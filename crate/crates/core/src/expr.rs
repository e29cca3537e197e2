//! Symbolic integer expressions, predicates and updates over bounded
//! variables, plus the operations the reduction engine is built on: weakest
//! preconditions, substitution, simplification and enumeration-based
//! satisfiability / idempotence checks.
//!
//! Everything in this module is an immutable value and every operation is a
//! pure function, so values can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Machine integers are wide enough for every finite-domain model we care
/// about; arithmetic is checked so silent wraparound cannot corrupt a model.
pub type Int = i64;

/// Default number of product-domain points an enumeration may visit before
/// giving up with `Unknown`.
pub const DEFAULT_SAT_BUDGET: u64 = 1 << 20;

/// A program variable, identified by name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(String);

impl VarId {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "variable names must be non-empty");
        VarId(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A named constant. Constants without a value are *undefined* (symbolic);
/// they may flow through reductions but block model construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConstId(String);

impl ConstId {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "constant names must be non-empty");
        ConstId(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConstId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Constant environment: declared constants and their (optional) values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstEnv(BTreeMap<ConstId, Option<Int>>);

impl ConstEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, id: ConstId, value: Option<Int>) {
        self.0.insert(id, value);
    }

    pub fn is_declared(&self, id: &ConstId) -> bool {
        self.0.contains_key(id)
    }

    /// `None` if undeclared, `Some(None)` if declared but undefined.
    pub fn lookup(&self, id: &ConstId) -> Option<Option<Int>> {
        self.0.get(id).copied()
    }

    pub fn value(&self, id: &ConstId) -> Result<Int, EvalError> {
        match self.0.get(id) {
            Some(Some(v)) => Ok(*v),
            _ => Err(EvalError::UnboundConstant(id.clone())),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ConstId, &Option<Int>)> {
        self.0.iter()
    }

    /// True when every declared constant has a value.
    pub fn fully_defined(&self) -> bool {
        self.0.values().all(|v| v.is_some())
    }
}

/// An integer expression tree. Division is restricted by construction sites
/// (parsers, generators) to divisors that are literals or constants; the
/// evaluator still guards against division by zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntExpr {
    Lit(Int),
    Var(VarId),
    Const(ConstId),
    Neg(Box<IntExpr>),
    Add(Box<IntExpr>, Box<IntExpr>),
    Sub(Box<IntExpr>, Box<IntExpr>),
    Mul(Box<IntExpr>, Box<IntExpr>),
    /// Integer division, rounding toward negative infinity.
    Div(Box<IntExpr>, Box<IntExpr>),
    Min(Box<IntExpr>, Box<IntExpr>),
    Max(Box<IntExpr>, Box<IntExpr>),
}

impl IntExpr {
    pub fn var(name: impl Into<String>) -> Self {
        IntExpr::Var(VarId::new(name))
    }

    pub fn constant(name: impl Into<String>) -> Self {
        IntExpr::Const(ConstId::new(name))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            IntExpr::Lit(_) | IntExpr::Const(_) => {}
            IntExpr::Var(v) => {
                out.insert(v.clone());
            }
            IntExpr::Neg(e) => e.collect_vars(out),
            IntExpr::Add(a, b)
            | IntExpr::Sub(a, b)
            | IntExpr::Mul(a, b)
            | IntExpr::Div(a, b)
            | IntExpr::Min(a, b)
            | IntExpr::Max(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<ConstId>) {
        match self {
            IntExpr::Lit(_) | IntExpr::Var(_) => {}
            IntExpr::Const(c) => {
                out.insert(c.clone());
            }
            IntExpr::Neg(e) => e.collect_consts(out),
            IntExpr::Add(a, b)
            | IntExpr::Sub(a, b)
            | IntExpr::Mul(a, b)
            | IntExpr::Div(a, b)
            | IntExpr::Min(a, b)
            | IntExpr::Max(a, b) => {
                a.collect_consts(out);
                b.collect_consts(out);
            }
        }
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntExpr::Lit(n) => write!(f, "{n}"),
            IntExpr::Var(v) => write!(f, "{v}"),
            IntExpr::Const(c) => write!(f, "{c}"),
            IntExpr::Neg(e) => write!(f, "-({e})"),
            IntExpr::Add(a, b) => write!(f, "({a} + {b})"),
            IntExpr::Sub(a, b) => write!(f, "({a} - {b})"),
            IntExpr::Mul(a, b) => write!(f, "({a} * {b})"),
            IntExpr::Div(a, b) => write!(f, "({a} / {b})"),
            IntExpr::Min(a, b) => write!(f, "min({a}, {b})"),
            IntExpr::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}

/// Comparison operators on integer expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn apply(self, a: Int, b: Int) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// A Boolean predicate over integer expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Predicate {
    Bool(bool),
    Cmp(CmpOp, IntExpr, IntExpr),
    Not(Box<Predicate>),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
}

impl Predicate {
    pub const TRUE: Predicate = Predicate::Bool(true);
    pub const FALSE: Predicate = Predicate::Bool(false);

    pub fn cmp(op: CmpOp, a: IntExpr, b: IntExpr) -> Self {
        Predicate::Cmp(op, a, b)
    }

    pub fn not(p: Predicate) -> Self {
        Predicate::Not(Box::new(p))
    }

    pub fn and(a: Predicate, b: Predicate) -> Self {
        Predicate::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Predicate, b: Predicate) -> Self {
        Predicate::Or(Box::new(a), Box::new(b))
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Predicate::Bool(_) => {}
            Predicate::Cmp(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Predicate::Not(p) => p.collect_vars(out),
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<ConstId>) {
        match self {
            Predicate::Bool(_) => {}
            Predicate::Cmp(_, a, b) => {
                a.collect_consts(out);
                b.collect_consts(out);
            }
            Predicate::Not(p) => p.collect_consts(out),
            Predicate::And(a, b) | Predicate::Or(a, b) => {
                a.collect_consts(out);
                b.collect_consts(out);
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Bool(b) => write!(f, "{b}"),
            Predicate::Cmp(op, a, b) => write!(f, "{a}{}{b}", op.symbol()),
            Predicate::Not(p) => write!(f, "!({p})"),
            Predicate::And(a, b) => write!(f, "({a} & {b})"),
            Predicate::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

/// A (possibly partial) mapping from variables to integers.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation(BTreeMap<VarId, Int>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Int)>,
        S: Into<String>,
    {
        Valuation(
            pairs
                .into_iter()
                .map(|(k, v)| (VarId::new(k), v))
                .collect(),
        )
    }

    pub fn set(&mut self, var: VarId, value: Int) {
        self.0.insert(var, value);
    }

    pub fn get(&self, var: &VarId) -> Option<Int> {
        self.0.get(var).copied()
    }

    pub fn contains(&self, var: &VarId) -> bool {
        self.0.contains_key(var)
    }

    pub fn remove(&mut self, var: &VarId) -> Option<Int> {
        self.0.remove(var)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, Int)> {
        self.0.iter().map(|(k, v)| (k, *v))
    }

    pub fn support(&self) -> impl Iterator<Item = &VarId> {
        self.0.keys()
    }

    /// Union of two valuations; entries of `other` win on overlap.
    pub fn union(&self, other: &Valuation) -> Valuation {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            out.set(k.clone(), v);
        }
        out
    }

    /// Restriction to the given variable set.
    pub fn restrict(&self, vars: &BTreeSet<VarId>) -> Valuation {
        Valuation(
            self.0
                .iter()
                .filter(|(k, _)| vars.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        )
    }

    /// Restriction to the complement of the given variable set.
    pub fn without(&self, vars: &BTreeSet<VarId>) -> Valuation {
        Valuation(
            self.0
                .iter()
                .filter(|(k, _)| !vars.contains(*k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        )
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{k}={v}")?;
            first = false;
        }
        Ok(())
    }
}

/// One assignment `lhs' = rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub lhs: VarId,
    pub rhs: IntExpr,
}

/// A block of simultaneous assignments; left-hand sides are pairwise
/// distinct.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct UpdateBlock {
    assignments: Vec<Assignment>,
}

impl UpdateBlock {
    pub fn new(assignments: Vec<Assignment>) -> Self {
        let mut seen = BTreeSet::new();
        for a in &assignments {
            assert!(
                seen.insert(a.lhs.clone()),
                "duplicate assignment to {} in one block",
                a.lhs
            );
        }
        UpdateBlock { assignments }
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// An update: a sequence of simultaneous blocks. A single block is the
/// common case; longer sequences arise from chaining during elimination.
/// The empty sequence is `nop`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Update {
    blocks: Vec<UpdateBlock>,
}

impl Update {
    pub fn nop() -> Self {
        Update::default()
    }

    pub fn single(block: UpdateBlock) -> Self {
        if block.is_empty() {
            Update::nop()
        } else {
            Update { blocks: vec![block] }
        }
    }

    pub fn from_blocks(blocks: Vec<UpdateBlock>) -> Self {
        Update {
            blocks: blocks.into_iter().filter(|b| !b.is_empty()).collect(),
        }
    }

    /// Convenience constructor for a one-block update from (name, rhs) pairs.
    pub fn assign<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, IntExpr)>,
        S: Into<String>,
    {
        Update::single(UpdateBlock::new(
            pairs
                .into_iter()
                .map(|(k, rhs)| Assignment { lhs: VarId::new(k), rhs })
                .collect(),
        ))
    }

    pub fn blocks(&self) -> &[UpdateBlock] {
        &self.blocks
    }

    pub fn is_nop(&self) -> bool {
        self.blocks.iter().all(|b| b.is_empty())
    }

    /// `self ⨟ other`: run `self` first, then `other`.
    pub fn chain(&self, other: &Update) -> Update {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Update::from_blocks(blocks)
    }

    /// Variables written by any block.
    pub fn writes(&self) -> BTreeSet<VarId> {
        self.blocks
            .iter()
            .flat_map(|b| b.assignments.iter().map(|a| a.lhs.clone()))
            .collect()
    }

    /// Variables read by any right-hand side.
    pub fn reads(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for b in &self.blocks {
            for a in &b.assignments {
                a.rhs.collect_vars(&mut out);
            }
        }
        out
    }

    pub fn collect_consts(&self, out: &mut BTreeSet<ConstId>) {
        for b in &self.blocks {
            for a in &b.assignments {
                a.rhs.collect_consts(out);
            }
        }
    }
}

impl fmt::Display for Update {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_nop() {
            return write!(f, "nop");
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, " ; ")?;
            }
            write!(f, "[")?;
            for (j, a) in b.assignments.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}'={}", a.lhs, a.rhs)?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// Finite interval domain of one variable; bounds are constant expressions
/// (literals or expressions over declared constants, never variables).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDomain {
    pub lo: IntExpr,
    pub hi: IntExpr,
}

impl VarDomain {
    pub fn literal(lo: Int, hi: Int) -> Self {
        VarDomain { lo: IntExpr::Lit(lo), hi: IntExpr::Lit(hi) }
    }

    /// Resolve the bounds to integers; fails on undefined constants.
    pub fn bounds(&self, consts: &ConstEnv) -> Result<(Int, Int), EvalError> {
        let empty = Valuation::new();
        let lo = eval_int(&self.lo, &empty, consts)?;
        let hi = eval_int(&self.hi, &empty, consts)?;
        Ok((lo, hi))
    }
}

/// Domain map for a variable set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainMap(BTreeMap<VarId, VarDomain>);

impl DomainMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, var: VarId, dom: VarDomain) {
        self.0.insert(var, dom);
    }

    pub fn remove(&mut self, var: &VarId) -> Option<VarDomain> {
        self.0.remove(var)
    }

    pub fn get(&self, var: &VarId) -> Option<&VarDomain> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarId, &VarDomain)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Resolved bounds for `var`, or an error if unknown or symbolic.
    pub fn bounds(&self, var: &VarId, consts: &ConstEnv) -> Result<(Int, Int), EvalError> {
        match self.0.get(var) {
            Some(d) => d.bounds(consts),
            None => Err(EvalError::UnboundVariable(var.clone())),
        }
    }
}

/// Outcome of an enumeration-based satisfiability check. `Unknown` must be
/// treated by callers as "possibly satisfiable".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Satisfiable(Valuation),
    Unsatisfiable,
    Unknown(String),
}

impl SatResult {
    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsatisfiable)
    }
}

/// Three-valued answer for enumeration-based checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

/// Errors raised by expression evaluation.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable '{0}'")]
    UnboundVariable(VarId),

    #[error("undefined constant '{0}'")]
    UnboundConstant(ConstId),

    #[error("division by zero")]
    DivisionByZero,

    #[error("integer overflow during evaluation")]
    Overflow,
}

fn checked(v: Option<Int>) -> Result<Int, EvalError> {
    v.ok_or(EvalError::Overflow)
}

/// Integer division rounding toward negative infinity.
fn div_floor(a: Int, b: Int) -> Result<Int, EvalError> {
    if b == 0 {
        return Err(EvalError::DivisionByZero);
    }
    if a == Int::MIN && b == -1 {
        return Err(EvalError::Overflow);
    }
    let q = a / b;
    let r = a % b;
    if r != 0 && ((a < 0) != (b < 0)) {
        Ok(q - 1)
    } else {
        Ok(q)
    }
}

/// Evaluate an integer expression under a valuation and constant environment.
pub fn eval_int(e: &IntExpr, nu: &Valuation, consts: &ConstEnv) -> Result<Int, EvalError> {
    match e {
        IntExpr::Lit(n) => Ok(*n),
        IntExpr::Var(v) => nu.get(v).ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        IntExpr::Const(c) => consts.value(c),
        IntExpr::Neg(e) => checked(eval_int(e, nu, consts)?.checked_neg()),
        IntExpr::Add(a, b) => {
            checked(eval_int(a, nu, consts)?.checked_add(eval_int(b, nu, consts)?))
        }
        IntExpr::Sub(a, b) => {
            checked(eval_int(a, nu, consts)?.checked_sub(eval_int(b, nu, consts)?))
        }
        IntExpr::Mul(a, b) => {
            checked(eval_int(a, nu, consts)?.checked_mul(eval_int(b, nu, consts)?))
        }
        IntExpr::Div(a, b) => div_floor(eval_int(a, nu, consts)?, eval_int(b, nu, consts)?),
        IntExpr::Min(a, b) => Ok(eval_int(a, nu, consts)?.min(eval_int(b, nu, consts)?)),
        IntExpr::Max(a, b) => Ok(eval_int(a, nu, consts)?.max(eval_int(b, nu, consts)?)),
    }
}

/// Evaluate a predicate under a valuation and constant environment.
pub fn eval_pred(p: &Predicate, nu: &Valuation, consts: &ConstEnv) -> Result<bool, EvalError> {
    match p {
        Predicate::Bool(b) => Ok(*b),
        Predicate::Cmp(op, a, b) => {
            Ok(op.apply(eval_int(a, nu, consts)?, eval_int(b, nu, consts)?))
        }
        Predicate::Not(p) => Ok(!eval_pred(p, nu, consts)?),
        Predicate::And(a, b) => Ok(eval_pred(a, nu, consts)? && eval_pred(b, nu, consts)?),
        Predicate::Or(a, b) => Ok(eval_pred(a, nu, consts)? || eval_pred(b, nu, consts)?),
    }
}

/// Apply an update to a valuation. Within a block all right-hand sides are
/// evaluated against the incoming valuation and written at once; blocks run
/// left to right. Unassigned variables persist.
pub fn apply_update(u: &Update, nu: &Valuation, consts: &ConstEnv) -> Result<Valuation, EvalError> {
    let mut cur = nu.clone();
    for block in u.blocks() {
        let mut staged = Vec::with_capacity(block.assignments().len());
        for a in block.assignments() {
            staged.push((a.lhs.clone(), eval_int(&a.rhs, &cur, consts)?));
        }
        for (lhs, v) in staged {
            cur.set(lhs, v);
        }
    }
    Ok(cur)
}

/// Replace assigned variables by literals.
pub fn substitute_int(e: &IntExpr, nu: &Valuation) -> IntExpr {
    match e {
        IntExpr::Lit(_) | IntExpr::Const(_) => e.clone(),
        IntExpr::Var(v) => match nu.get(v) {
            Some(val) => IntExpr::Lit(val),
            None => e.clone(),
        },
        IntExpr::Neg(a) => IntExpr::Neg(Box::new(substitute_int(a, nu))),
        IntExpr::Add(a, b) => bin(IntExpr::Add, substitute_int(a, nu), substitute_int(b, nu)),
        IntExpr::Sub(a, b) => bin(IntExpr::Sub, substitute_int(a, nu), substitute_int(b, nu)),
        IntExpr::Mul(a, b) => bin(IntExpr::Mul, substitute_int(a, nu), substitute_int(b, nu)),
        IntExpr::Div(a, b) => bin(IntExpr::Div, substitute_int(a, nu), substitute_int(b, nu)),
        IntExpr::Min(a, b) => bin(IntExpr::Min, substitute_int(a, nu), substitute_int(b, nu)),
        IntExpr::Max(a, b) => bin(IntExpr::Max, substitute_int(a, nu), substitute_int(b, nu)),
    }
}

fn bin<F>(f: F, a: IntExpr, b: IntExpr) -> IntExpr
where
    F: Fn(Box<IntExpr>, Box<IntExpr>) -> IntExpr,
{
    f(Box::new(a), Box::new(b))
}

/// Replace assigned variables by literals throughout a predicate.
pub fn substitute_pred(p: &Predicate, nu: &Valuation) -> Predicate {
    match p {
        Predicate::Bool(_) => p.clone(),
        Predicate::Cmp(op, a, b) => {
            Predicate::Cmp(*op, substitute_int(a, nu), substitute_int(b, nu))
        }
        Predicate::Not(q) => Predicate::not(substitute_pred(q, nu)),
        Predicate::And(a, b) => Predicate::and(substitute_pred(a, nu), substitute_pred(b, nu)),
        Predicate::Or(a, b) => Predicate::or(substitute_pred(a, nu), substitute_pred(b, nu)),
    }
}

/// Substitute into an update: right-hand sides are specialized and
/// assignments whose left-hand side becomes a constant are dropped.
pub fn substitute_update(u: &Update, nu: &Valuation) -> Update {
    Update::from_blocks(
        u.blocks()
            .iter()
            .map(|b| {
                UpdateBlock::new(
                    b.assignments()
                        .iter()
                        .filter(|a| !nu.contains(&a.lhs))
                        .map(|a| Assignment {
                            lhs: a.lhs.clone(),
                            rhs: substitute_int(&a.rhs, nu),
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Simultaneous substitution of variables by expressions in an expression.
fn subst_int_map(e: &IntExpr, map: &BTreeMap<&VarId, &IntExpr>) -> IntExpr {
    match e {
        IntExpr::Lit(_) | IntExpr::Const(_) => e.clone(),
        IntExpr::Var(v) => match map.get(v) {
            Some(rhs) => (*rhs).clone(),
            None => e.clone(),
        },
        IntExpr::Neg(a) => IntExpr::Neg(Box::new(subst_int_map(a, map))),
        IntExpr::Add(a, b) => bin(IntExpr::Add, subst_int_map(a, map), subst_int_map(b, map)),
        IntExpr::Sub(a, b) => bin(IntExpr::Sub, subst_int_map(a, map), subst_int_map(b, map)),
        IntExpr::Mul(a, b) => bin(IntExpr::Mul, subst_int_map(a, map), subst_int_map(b, map)),
        IntExpr::Div(a, b) => bin(IntExpr::Div, subst_int_map(a, map), subst_int_map(b, map)),
        IntExpr::Min(a, b) => bin(IntExpr::Min, subst_int_map(a, map), subst_int_map(b, map)),
        IntExpr::Max(a, b) => bin(IntExpr::Max, subst_int_map(a, map), subst_int_map(b, map)),
    }
}

fn subst_pred_map(p: &Predicate, map: &BTreeMap<&VarId, &IntExpr>) -> Predicate {
    match p {
        Predicate::Bool(_) => p.clone(),
        Predicate::Cmp(op, a, b) => {
            Predicate::Cmp(*op, subst_int_map(a, map), subst_int_map(b, map))
        }
        Predicate::Not(q) => Predicate::not(subst_pred_map(q, map)),
        Predicate::And(a, b) => Predicate::and(subst_pred_map(a, map), subst_pred_map(b, map)),
        Predicate::Or(a, b) => Predicate::or(subst_pred_map(a, map), subst_pred_map(b, map)),
    }
}

/// Weakest precondition of an update with respect to a postcondition.
///
/// A single block is handled by *simultaneous* substitution of each assigned
/// variable by its right-hand side; a chained update `u1 ⨟ u2` satisfies
/// `wp(u1 ⨟ u2, phi) = wp(u1, wp(u2, phi))`.
pub fn wp(u: &Update, post: &Predicate) -> Predicate {
    let mut acc = post.clone();
    for block in u.blocks().iter().rev() {
        let map: BTreeMap<&VarId, &IntExpr> = block
            .assignments()
            .iter()
            .map(|a| (&a.lhs, &a.rhs))
            .collect();
        acc = subst_pred_map(&acc, &map);
    }
    acc
}

fn simplify_int(e: &IntExpr) -> IntExpr {
    use IntExpr::*;
    match e {
        Lit(_) | Var(_) | Const(_) => e.clone(),
        Neg(a) => match simplify_int(a) {
            Lit(n) => n.checked_neg().map(Lit).unwrap_or_else(|| Neg(Box::new(Lit(n)))),
            Neg(inner) => *inner,
            a => Neg(Box::new(a)),
        },
        Add(a, b) => match (simplify_int(a), simplify_int(b)) {
            (Lit(x), Lit(y)) => x.checked_add(y).map(Lit).unwrap_or(bin(Add, Lit(x), Lit(y))),
            (Lit(0), b) => b,
            (a, Lit(0)) => a,
            (a, b) => bin(Add, a, b),
        },
        Sub(a, b) => match (simplify_int(a), simplify_int(b)) {
            (Lit(x), Lit(y)) => x.checked_sub(y).map(Lit).unwrap_or(bin(Sub, Lit(x), Lit(y))),
            (a, Lit(0)) => a,
            (a, b) => bin(Sub, a, b),
        },
        Mul(a, b) => match (simplify_int(a), simplify_int(b)) {
            (Lit(x), Lit(y)) => x.checked_mul(y).map(Lit).unwrap_or(bin(Mul, Lit(x), Lit(y))),
            (Lit(1), b) => b,
            (a, Lit(1)) => a,
            (a, b) => bin(Mul, a, b),
        },
        Div(a, b) => match (simplify_int(a), simplify_int(b)) {
            (Lit(x), Lit(y)) => div_floor(x, y).map(Lit).unwrap_or(bin(Div, Lit(x), Lit(y))),
            (a, Lit(1)) => a,
            (a, b) => bin(Div, a, b),
        },
        Min(a, b) => match (simplify_int(a), simplify_int(b)) {
            (Lit(x), Lit(y)) => Lit(x.min(y)),
            (a, b) => bin(Min, a, b),
        },
        Max(a, b) => match (simplify_int(a), simplify_int(b)) {
            (Lit(x), Lit(y)) => Lit(x.max(y)),
            (a, b) => bin(Max, a, b),
        },
    }
}

/// Simplify a predicate to a logically equivalent one: constant folding,
/// double-negation removal, identity/annihilator absorption for
/// conjunction/disjunction, literal comparisons, and collapsing of
/// syntactically equal operands. Equivalence over total valuations is the
/// only contract; no normal form is attempted.
pub fn simplify(p: &Predicate) -> Predicate {
    match p {
        Predicate::Bool(_) => p.clone(),
        Predicate::Cmp(op, a, b) => {
            let a = simplify_int(a);
            let b = simplify_int(b);
            if let (IntExpr::Lit(x), IntExpr::Lit(y)) = (&a, &b) {
                Predicate::Bool(op.apply(*x, *y))
            } else {
                Predicate::Cmp(*op, a, b)
            }
        }
        Predicate::Not(q) => match simplify(q) {
            Predicate::Bool(b) => Predicate::Bool(!b),
            Predicate::Not(inner) => *inner,
            q => Predicate::not(q),
        },
        Predicate::And(a, b) => match (simplify(a), simplify(b)) {
            (Predicate::Bool(false), _) | (_, Predicate::Bool(false)) => Predicate::FALSE,
            (Predicate::Bool(true), q) => q,
            (q, Predicate::Bool(true)) => q,
            (a, b) if a == b => a,
            (a, b) => Predicate::and(a, b),
        },
        Predicate::Or(a, b) => match (simplify(a), simplify(b)) {
            (Predicate::Bool(true), _) | (_, Predicate::Bool(true)) => Predicate::TRUE,
            (Predicate::Bool(false), q) => q,
            (q, Predicate::Bool(false)) => q,
            (a, b) if a == b => a,
            (a, b) => Predicate::or(a, b),
        },
    }
}

/// Odometer over the product domain of a variable list. Yields `None` once
/// exhausted. Bounds must already be resolved.
pub(crate) struct DomainIter {
    vars: Vec<(VarId, Int, Int)>,
    current: Option<Vec<Int>>,
}

impl DomainIter {
    pub(crate) fn new(vars: Vec<(VarId, Int, Int)>) -> Self {
        let start: Vec<Int> = vars.iter().map(|(_, lo, _)| *lo).collect();
        let nonempty = vars.iter().all(|(_, lo, hi)| lo <= hi);
        DomainIter { vars, current: nonempty.then_some(start) }
    }

    pub(crate) fn product_size(vars: &[(VarId, Int, Int)]) -> Option<u64> {
        let mut size: u64 = 1;
        for (_, lo, hi) in vars {
            if hi < lo {
                return Some(0);
            }
            let n = u64::try_from(*hi as i128 - *lo as i128 + 1).ok()?;
            size = size.checked_mul(n)?;
        }
        Some(size)
    }
}

impl Iterator for DomainIter {
    type Item = Valuation;

    fn next(&mut self) -> Option<Valuation> {
        let cur = self.current.as_mut()?;
        let mut out = Valuation::new();
        for ((var, _, _), v) in self.vars.iter().zip(cur.iter()) {
            out.set(var.clone(), *v);
        }
        // advance, last variable fastest
        let mut i = self.vars.len();
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if cur[i] < self.vars[i].2 {
                cur[i] += 1;
                for j in i + 1..self.vars.len() {
                    cur[j] = self.vars[j].1;
                }
                break;
            }
        }
        Some(out)
    }
}

/// All valuations over the given variable ranges, in odometer order with
/// the last variable fastest.
pub fn enumerate_domain(ranges: &[(VarId, Int, Int)]) -> Vec<Valuation> {
    DomainIter::new(ranges.to_vec()).collect()
}

/// Resolve the domains of `vars`, or explain why that is not possible.
fn resolve_domains(
    vars: &BTreeSet<VarId>,
    dom: &DomainMap,
    consts: &ConstEnv,
) -> Result<Vec<(VarId, Int, Int)>, String> {
    let mut out = Vec::with_capacity(vars.len());
    for v in vars {
        match dom.get(v) {
            None => return Err(format!("no domain for variable '{v}'")),
            Some(d) => match d.bounds(consts) {
                Ok((lo, hi)) => out.push((v.clone(), lo, hi)),
                Err(e) => return Err(format!("domain of '{v}' is not resolvable: {e}")),
            },
        }
    }
    Ok(out)
}

/// Enumeration-based satisfiability over the product domain of the variables
/// occurring in `p`. Short-circuits on the first witness. Returns `Unknown`
/// when symbolic constants block evaluation or the product exceeds `budget`.
pub fn check_sat(p: &Predicate, dom: &DomainMap, consts: &ConstEnv, budget: u64) -> SatResult {
    let p = simplify(p);
    let vars = p.vars();
    let resolved = match resolve_domains(&vars, dom, consts) {
        Ok(r) => r,
        Err(reason) => return SatResult::Unknown(reason),
    };
    match DomainIter::product_size(&resolved) {
        Some(n) if n <= budget => {}
        _ => return SatResult::Unknown(format!("product domain exceeds budget {budget}")),
    }
    let mut eval_failure = None;
    for nu in DomainIter::new(resolved) {
        match eval_pred(&p, &nu, consts) {
            Ok(true) => return SatResult::Satisfiable(nu),
            Ok(false) => {}
            Err(e) => eval_failure = Some(e),
        }
    }
    match eval_failure {
        Some(e) => SatResult::Unknown(format!("evaluation failed: {e}")),
        None => SatResult::Unsatisfiable,
    }
}

/// Decide whether `u(u(nu)) = u(nu)` for all valuations of the variables the
/// update reads or writes, by enumeration over their domains. Two syntactic
/// fast paths answer `Yes` without enumerating: every right-hand side is
/// constant, or no right-hand side mentions any written variable (then the
/// second application assigns the same values as the first).
pub fn check_idempotent(u: &Update, dom: &DomainMap, consts: &ConstEnv, budget: u64) -> Answer {
    if u.is_nop() {
        return Answer::Yes;
    }
    let writes = u.writes();
    let rhs_vars = u.reads();
    if rhs_vars.is_empty() || rhs_vars.is_disjoint(&writes) {
        return Answer::Yes;
    }
    let mut vars = rhs_vars;
    vars.extend(writes);
    let resolved = match resolve_domains(&vars, dom, consts) {
        Ok(r) => r,
        Err(_) => return Answer::Unknown,
    };
    match DomainIter::product_size(&resolved) {
        Some(n) if n <= budget => {}
        _ => return Answer::Unknown,
    }
    for nu in DomainIter::new(resolved) {
        let once = match apply_update(u, &nu, consts) {
            Ok(v) => v,
            Err(_) => return Answer::Unknown,
        };
        let twice = match apply_update(u, &once, consts) {
            Ok(v) => v,
            Err(_) => return Answer::Unknown,
        };
        if once != twice {
            return Answer::No;
        }
    }
    Answer::Yes
}
