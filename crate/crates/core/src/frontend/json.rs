//! The PCFP JSON document format. Expressions and predicates are embedded as
//! prefix s-expression strings; probabilities as exact rational strings.
//! `parse_pcfp(serialize_pcfp(p))` is the identity.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::expr::{
    Assignment, CmpOp, ConstEnv, ConstId, DomainMap, Int, IntExpr, Predicate, Update, UpdateBlock,
    Valuation, VarDomain, VarId,
};
use crate::pcfp::{ActionTag, Command, Destination, LocationId, LocationInfo, Pcfp};

use super::ParseError;

#[derive(Serialize, Deserialize)]
struct PcfpDoc {
    constants: Vec<ConstDoc>,
    variables: Vec<VarDoc>,
    locations: Vec<LocDoc>,
    initial: InitialDoc,
    commands: Vec<CommandDoc>,
}

#[derive(Serialize, Deserialize)]
struct ConstDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<Int>,
}

#[derive(Serialize, Deserialize)]
struct VarDoc {
    name: String,
    lo: String,
    hi: String,
    init: String,
}

#[derive(Serialize, Deserialize)]
struct LocDoc {
    id: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    label: BTreeMap<String, Int>,
}

#[derive(Serialize, Deserialize)]
struct InitialDoc {
    location: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    valuation: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct CommandDoc {
    source: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    guard: String,
    branches: Vec<BranchDoc>,
}

#[derive(Serialize, Deserialize)]
struct BranchDoc {
    prob: String,
    update: Vec<Vec<AssignDoc>>,
    target: usize,
}

#[derive(Serialize, Deserialize)]
struct AssignDoc {
    lhs: String,
    rhs: String,
}

/// Serialize a program as a JSON document.
pub fn serialize_pcfp(p: &Pcfp) -> String {
    let doc = PcfpDoc {
        constants: p
            .consts()
            .iter()
            .map(|(c, v)| ConstDoc { name: c.as_str().to_string(), value: *v })
            .collect(),
        variables: p
            .vars()
            .iter()
            .map(|v| {
                let d = p.dom().get(v).expect("validated");
                VarDoc {
                    name: v.as_str().to_string(),
                    lo: int_to_sexpr(&d.lo),
                    hi: int_to_sexpr(&d.hi),
                    init: int_to_sexpr(&p.initial_values()[v]),
                }
            })
            .collect(),
        locations: p
            .locations()
            .iter()
            .map(|l| LocDoc {
                id: l.base.clone(),
                label: l.label.iter().map(|(k, v)| (k.as_str().to_string(), v)).collect(),
            })
            .collect(),
        initial: InitialDoc {
            location: p.initial_location().0,
            valuation: p
                .initial_values()
                .iter()
                .map(|(v, e)| (v.as_str().to_string(), int_to_sexpr(e)))
                .collect(),
        },
        commands: p
            .commands()
            .iter()
            .map(|c| CommandDoc {
                source: c.source.0,
                action: Some(c.action.as_str().to_string()),
                guard: pred_to_sexpr(&c.guard),
                branches: c
                    .destinations
                    .iter()
                    .map(|d| BranchDoc {
                        prob: d.prob.to_string(),
                        update: d
                            .update
                            .blocks()
                            .iter()
                            .map(|b| {
                                b.assignments()
                                    .iter()
                                    .map(|a| AssignDoc {
                                        lhs: a.lhs.as_str().to_string(),
                                        rhs: int_to_sexpr(&a.rhs),
                                    })
                                    .collect()
                            })
                            .collect(),
                        target: d.target.0,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serialization cannot fail");
    s.push('\n');
    s
}

/// Parse a JSON document back into a program.
pub fn parse_pcfp(text: &str) -> Result<Pcfp, ParseError> {
    let doc: PcfpDoc =
        serde_json::from_str(text).map_err(|e| ParseError::Document(e.to_string()))?;

    let mut consts = ConstEnv::new();
    let mut const_names = BTreeSet::new();
    for c in &doc.constants {
        if !const_names.insert(c.name.clone()) {
            return Err(ParseError::DuplicateConstant(c.name.clone()));
        }
        consts.declare(ConstId::new(c.name.clone()), c.value);
    }

    let mut vars = Vec::new();
    let mut var_names = BTreeSet::new();
    let mut dom = DomainMap::new();
    let mut init: BTreeMap<VarId, IntExpr> = BTreeMap::new();
    for v in &doc.variables {
        if !var_names.insert(v.name.clone()) {
            return Err(ParseError::DuplicateVariable(v.name.clone()));
        }
        let var = VarId::new(v.name.clone());
        vars.push(var.clone());
        dom.insert(
            var.clone(),
            VarDomain {
                lo: int_from_sexpr(&v.lo, &var_names, &const_names)?,
                hi: int_from_sexpr(&v.hi, &var_names, &const_names)?,
            },
        );
        init.insert(var, int_from_sexpr(&v.init, &var_names, &const_names)?);
    }
    // Initial valuation entries override the per-variable init expressions;
    // both are written by `serialize_pcfp` and must agree.
    for (name, e) in &doc.initial.valuation {
        if !var_names.contains(name) {
            return Err(ParseError::Document(format!(
                "initial valuation mentions unknown variable '{name}'"
            )));
        }
        init.insert(VarId::new(name.clone()), int_from_sexpr(e, &var_names, &const_names)?);
    }

    let locations: Vec<LocationInfo> = doc
        .locations
        .iter()
        .map(|l| {
            LocationInfo::with_label(
                l.id.clone(),
                Valuation::from_pairs(l.label.iter().map(|(k, v)| (k.clone(), *v))),
            )
        })
        .collect();

    let num_locations = locations.len();
    let check_loc = move |i: usize| -> Result<LocationId, ParseError> {
        if i < num_locations {
            Ok(LocationId(i))
        } else {
            Err(ParseError::Document(format!("location index {i} out of range")))
        }
    };

    let mut commands = Vec::new();
    for (i, c) in doc.commands.iter().enumerate() {
        let action = match &c.action {
            Some(a) => ActionTag::new(a.clone()),
            None => ActionTag::new(format!("c{i}")),
        };
        let mut destinations = Vec::new();
        for b in &c.branches {
            let blocks = b
                .update
                .iter()
                .map(|assigns| {
                    let mut seen = BTreeSet::new();
                    let mut out = Vec::new();
                    for a in assigns {
                        if !var_names.contains(&a.lhs) {
                            return Err(ParseError::Document(format!(
                                "assignment to unknown variable '{}'",
                                a.lhs
                            )));
                        }
                        if !seen.insert(a.lhs.clone()) {
                            return Err(ParseError::Document(format!(
                                "variable '{}' assigned twice in one block",
                                a.lhs
                            )));
                        }
                        out.push(Assignment {
                            lhs: VarId::new(a.lhs.clone()),
                            rhs: int_from_sexpr(&a.rhs, &var_names, &const_names)?,
                        });
                    }
                    Ok(UpdateBlock::new(out))
                })
                .collect::<Result<Vec<_>, ParseError>>()?;
            destinations.push(Destination {
                prob: parse_rational(&b.prob)?,
                update: Update::from_blocks(blocks),
                target: check_loc(b.target)?,
            });
        }
        commands.push(Command {
            source: check_loc(c.source)?,
            action,
            guard: pred_from_sexpr(&c.guard, &var_names, &const_names)?,
            destinations,
        });
    }

    Ok(Pcfp::new(
        locations,
        vars,
        dom,
        commands,
        check_loc(doc.initial.location)?,
        init,
        consts,
    )?)
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational, ParseError> {
    let bad = || ParseError::Document(format!("bad rational '{s}'"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => {
            let n: BigInt = s.trim().parse().map_err(|_| bad())?;
            Ok(BigRational::from(n))
        }
    }
}

// ---------------------------------------------------------------------------
// s-expressions

pub(crate) fn int_to_sexpr(e: &IntExpr) -> String {
    match e {
        IntExpr::Lit(n) => n.to_string(),
        IntExpr::Var(v) => v.as_str().to_string(),
        IntExpr::Const(c) => c.as_str().to_string(),
        IntExpr::Neg(a) => format!("(neg {})", int_to_sexpr(a)),
        IntExpr::Add(a, b) => format!("(+ {} {})", int_to_sexpr(a), int_to_sexpr(b)),
        IntExpr::Sub(a, b) => format!("(- {} {})", int_to_sexpr(a), int_to_sexpr(b)),
        IntExpr::Mul(a, b) => format!("(* {} {})", int_to_sexpr(a), int_to_sexpr(b)),
        IntExpr::Div(a, b) => format!("(div {} {})", int_to_sexpr(a), int_to_sexpr(b)),
        IntExpr::Min(a, b) => format!("(min {} {})", int_to_sexpr(a), int_to_sexpr(b)),
        IntExpr::Max(a, b) => format!("(max {} {})", int_to_sexpr(a), int_to_sexpr(b)),
    }
}

pub(crate) fn pred_to_sexpr(p: &Predicate) -> String {
    match p {
        Predicate::Bool(b) => b.to_string(),
        Predicate::Cmp(op, a, b) => {
            format!("({} {} {})", op.symbol(), int_to_sexpr(a), int_to_sexpr(b))
        }
        Predicate::Not(q) => format!("(not {})", pred_to_sexpr(q)),
        Predicate::And(a, b) => format!("(and {} {})", pred_to_sexpr(a), pred_to_sexpr(b)),
        Predicate::Or(a, b) => format!("(or {} {})", pred_to_sexpr(a), pred_to_sexpr(b)),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum SexprTok {
    Open,
    Close,
    Atom(String),
}

fn sexpr_tokens(s: &str) -> Vec<SexprTok> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' | ')' | ' ' | '\t' | '\n' => {
                if !cur.is_empty() {
                    out.push(SexprTok::Atom(std::mem::take(&mut cur)));
                }
                match ch {
                    '(' => out.push(SexprTok::Open),
                    ')' => out.push(SexprTok::Close),
                    _ => {}
                }
            }
            _ => cur.push(ch),
        }
    }
    if !cur.is_empty() {
        out.push(SexprTok::Atom(cur));
    }
    out
}

struct SexprParser<'a> {
    toks: &'a [SexprTok],
    pos: usize,
    vars: &'a BTreeSet<String>,
    consts: &'a BTreeSet<String>,
}

impl<'a> SexprParser<'a> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Document(msg.into())
    }

    fn next(&mut self) -> Option<&'a SexprTok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        match self.next() {
            Some(SexprTok::Close) => Ok(()),
            _ => Err(self.err("expected ')'")),
        }
    }

    fn atom_to_int(&self, atom: &str) -> Result<IntExpr, ParseError> {
        if let Ok(n) = atom.parse::<Int>() {
            return Ok(IntExpr::Lit(n));
        }
        if self.vars.contains(atom) {
            return Ok(IntExpr::var(atom));
        }
        if self.consts.contains(atom) {
            return Ok(IntExpr::constant(atom));
        }
        Err(self.err(format!("unknown identifier '{atom}' in expression")))
    }

    fn parse_int(&mut self) -> Result<IntExpr, ParseError> {
        match self.next().cloned() {
            Some(SexprTok::Atom(a)) => self.atom_to_int(&a),
            Some(SexprTok::Open) => {
                let op = match self.next().cloned() {
                    Some(SexprTok::Atom(op)) => op,
                    _ => return Err(self.err("expected an operator")),
                };
                let e = match op.as_str() {
                    "neg" => IntExpr::Neg(Box::new(self.parse_int()?)),
                    "+" | "-" | "*" | "div" | "min" | "max" => {
                        let a = Box::new(self.parse_int()?);
                        let b = Box::new(self.parse_int()?);
                        match op.as_str() {
                            "+" => IntExpr::Add(a, b),
                            "-" => IntExpr::Sub(a, b),
                            "*" => IntExpr::Mul(a, b),
                            "div" => IntExpr::Div(a, b),
                            "min" => IntExpr::Min(a, b),
                            _ => IntExpr::Max(a, b),
                        }
                    }
                    other => return Err(self.err(format!("unknown operator '{other}'"))),
                };
                self.expect_close()?;
                if let IntExpr::Div(_, d) = &e {
                    if !matches!(**d, IntExpr::Lit(_) | IntExpr::Const(_)) {
                        return Err(self.err("division by a non-constant divisor"));
                    }
                }
                Ok(e)
            }
            _ => Err(self.err("expected an expression")),
        }
    }

    fn parse_pred(&mut self) -> Result<Predicate, ParseError> {
        match self.next().cloned() {
            Some(SexprTok::Atom(a)) => match a.as_str() {
                "true" => Ok(Predicate::TRUE),
                "false" => Ok(Predicate::FALSE),
                other => Err(self.err(format!("expected a predicate, found '{other}'"))),
            },
            Some(SexprTok::Open) => {
                let op = match self.next().cloned() {
                    Some(SexprTok::Atom(op)) => op,
                    _ => return Err(self.err("expected an operator")),
                };
                let p = match op.as_str() {
                    "not" => Predicate::not(self.parse_pred()?),
                    "and" => {
                        let a = self.parse_pred()?;
                        let b = self.parse_pred()?;
                        Predicate::and(a, b)
                    }
                    "or" => {
                        let a = self.parse_pred()?;
                        let b = self.parse_pred()?;
                        Predicate::or(a, b)
                    }
                    "=" | "!=" | "<" | "<=" | ">" | ">=" => {
                        let cmp = match op.as_str() {
                            "=" => CmpOp::Eq,
                            "!=" => CmpOp::Ne,
                            "<" => CmpOp::Lt,
                            "<=" => CmpOp::Le,
                            ">" => CmpOp::Gt,
                            _ => CmpOp::Ge,
                        };
                        let a = self.parse_int()?;
                        let b = self.parse_int()?;
                        Predicate::Cmp(cmp, a, b)
                    }
                    other => return Err(self.err(format!("unknown operator '{other}'"))),
                };
                self.expect_close()?;
                Ok(p)
            }
            _ => Err(self.err("expected a predicate")),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.err("trailing tokens in expression"))
        }
    }
}

pub(crate) fn int_from_sexpr(
    s: &str,
    vars: &BTreeSet<String>,
    consts: &BTreeSet<String>,
) -> Result<IntExpr, ParseError> {
    let toks = sexpr_tokens(s);
    let mut p = SexprParser { toks: &toks, pos: 0, vars, consts };
    let e = p.parse_int()?;
    p.finish()?;
    Ok(e)
}

pub(crate) fn pred_from_sexpr(
    s: &str,
    vars: &BTreeSet<String>,
    consts: &BTreeSet<String>,
) -> Result<Predicate, ParseError> {
    let toks = sexpr_tokens(s);
    let mut p = SexprParser { toks: &toks, pos: 0, vars, consts };
    let pred = p.parse_pred()?;
    p.finish()?;
    Ok(pred)
}
