//! Parser for the supported PRISM-language subset: a `dtmc`/`mdp` header,
//! integer constants, a single module with bounded-integer and boolean
//! variables and probabilistic commands, and label declarations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::expr::{
    Assignment, ConstEnv, ConstId, DomainMap, IntExpr, Update, UpdateBlock, Valuation,
    VarDomain, VarId,
};
use crate::pcfp::{ActionTag, Command, Destination, LocationId, LocationInfo, Pcfp};

use super::lexer::{tokenize, Tok};
use super::pexpr::{parse_int_expr, parse_pred, Cursor, Scope};
use super::ParseError;

/// Parse a model file into a single-location program.
pub fn parse_model(text: &str) -> Result<Pcfp, ParseError> {
    let toks = tokenize(text)?;
    let mut c = Cursor::new(&toks);

    // Header: the model-type keyword. Commands decide determinism; the
    // keyword is accepted for compatibility and otherwise unused.
    if !(c.eat_keyword("dtmc") || c.eat_keyword("mdp")) {
        return Err(c.unexpected("'dtmc' or 'mdp' header"));
    }

    let mut scope = Scope::default();
    let mut consts = ConstEnv::new();

    while c.eat_keyword("const") {
        c.expect_keyword("int")?;
        let (name, _) = c.expect_ident("constant name")?;
        if scope.consts.contains(&name) || scope.vars.contains_key(&name) {
            return Err(ParseError::DuplicateConstant(name));
        }
        let mut value = None;
        if c.eat(&Tok::Eq) {
            let neg = c.eat(&Tok::Minus);
            let pos = c.here();
            match c.next().map(|s| s.tok.clone()) {
                Some(Tok::Int(n)) => value = Some(if neg { -n } else { n }),
                _ => return Err(ParseError::syntax(pos, "expected an integer constant value")),
            }
        }
        c.expect(&Tok::Semi, "';'")?;
        scope.consts.insert(name.clone());
        consts.declare(ConstId::new(name), value);
    }

    let module_pos = c.here();
    c.expect_keyword("module")?;
    let (module_name, _) = c.expect_ident("module name")?;

    let mut vars: Vec<VarId> = Vec::new();
    let mut dom = DomainMap::new();
    let mut init: BTreeMap<VarId, IntExpr> = BTreeMap::new();
    let mut commands: Vec<Command> = Vec::new();

    loop {
        if c.eat_keyword("endmodule") {
            break;
        }
        if c.peek() == Some(&Tok::LBracket) {
            commands.push(parse_command(&mut c, &scope, commands.len())?);
        } else if matches!(c.peek(), Some(Tok::Ident(_))) && c.peek2() == Some(&Tok::Colon) {
            let (name, pos) = c.expect_ident("variable name")?;
            if scope.vars.contains_key(&name) {
                return Err(ParseError::DuplicateVariable(name));
            }
            if scope.consts.contains(&name) {
                return Err(ParseError::type_error(
                    pos,
                    format!("'{name}' is already declared as a constant"),
                ));
            }
            c.expect(&Tok::Colon, "':'")?;
            let (var_dom, is_bool) = parse_domain(&mut c, &scope)?;
            let init_expr = if c.eat_keyword("init") {
                parse_init_expr(&mut c, &scope, is_bool)?
            } else {
                // PRISM default: the lowest value of the range.
                var_dom.lo.clone()
            };
            c.expect(&Tok::Semi, "';'")?;
            let var = VarId::new(name.clone());
            scope.vars.insert(name, is_bool);
            vars.push(var.clone());
            dom.insert(var.clone(), var_dom);
            init.insert(var, init_expr);
        } else {
            return Err(c.unexpected("a variable declaration, a command, or 'endmodule'"));
        }
    }

    // Trailing label declarations are validated and otherwise unused: goal
    // predicates are given with the property, not by name.
    loop {
        if c.eat_keyword("label") {
            let pos = c.here();
            match c.next().map(|s| s.tok.clone()) {
                Some(Tok::Str(_)) => {}
                _ => return Err(ParseError::syntax(pos, "expected a label name string")),
            }
            c.expect(&Tok::Eq, "'='")?;
            let _ = parse_pred(&mut c, &scope)?;
            c.expect(&Tok::Semi, "';'")?;
        } else if c.eat_keyword("module") {
            return Err(ParseError::MultipleModules {
                line: module_pos.line,
                col: module_pos.col,
            });
        } else if c.at_end() {
            break;
        } else {
            return Err(c.unexpected("'label' or end of file"));
        }
    }

    Ok(Pcfp::new(
        vec![LocationInfo::new(module_name)],
        vars,
        dom,
        commands,
        LocationId(0),
        init,
        consts,
    )?)
}

fn parse_domain(c: &mut Cursor, scope: &Scope) -> Result<(VarDomain, bool), ParseError> {
    if c.eat_keyword("bool") {
        return Ok((VarDomain::literal(0, 1), true));
    }
    c.expect(&Tok::LBracket, "'[' or 'bool'")?;
    let lo = parse_const_expr(c, scope)?;
    c.expect(&Tok::DotDot, "'..'")?;
    let hi = parse_const_expr(c, scope)?;
    c.expect(&Tok::RBracket, "']'")?;
    Ok((VarDomain { lo, hi }, false))
}

/// An expression that may only mention constants (domain bounds, initial
/// values).
fn parse_const_expr(c: &mut Cursor, scope: &Scope) -> Result<IntExpr, ParseError> {
    let pos = c.here();
    let const_scope = Scope { vars: BTreeMap::new(), consts: scope.consts.clone() };
    match parse_int_expr(c, &const_scope) {
        Ok(e) => Ok(e),
        Err(ParseError::UnknownVariable { name, .. }) if scope.vars.contains_key(&name) => {
            Err(ParseError::type_error(
                pos,
                format!("'{name}' is a variable; only constants are allowed here"),
            ))
        }
        Err(e) => Err(e),
    }
}

fn parse_init_expr(c: &mut Cursor, scope: &Scope, is_bool: bool) -> Result<IntExpr, ParseError> {
    if is_bool {
        let pos = c.here();
        if c.eat_keyword("true") {
            return Ok(IntExpr::Lit(1));
        }
        if c.eat_keyword("false") {
            return Ok(IntExpr::Lit(0));
        }
        return Err(ParseError::syntax(pos, "expected 'true' or 'false'"));
    }
    parse_const_expr(c, scope)
}

fn parse_command(c: &mut Cursor, scope: &Scope, index: usize) -> Result<Command, ParseError> {
    c.expect(&Tok::LBracket, "'['")?;
    if let Some(Tok::Ident(name)) = c.peek() {
        return Err(ParseError::syntax(
            c.here(),
            format!("synchronization label '[{name}]' is not supported; use '[]'"),
        ));
    }
    c.expect(&Tok::RBracket, "']'")?;
    let guard = parse_pred(c, scope)?;
    c.expect(&Tok::Arrow, "'->'")?;

    let mut destinations = Vec::new();
    loop {
        destinations.push(parse_destination(c, scope)?);
        if !c.eat(&Tok::Plus) {
            break;
        }
    }
    c.expect(&Tok::Semi, "';'")?;

    Ok(Command {
        source: LocationId(0),
        action: ActionTag::new(format!("c{index}")),
        guard,
        destinations,
    })
}

fn parse_destination(c: &mut Cursor, scope: &Scope) -> Result<Destination, ParseError> {
    let prob = match c.peek() {
        Some(Tok::Int(_)) | Some(Tok::Dec(_)) => {
            let p = parse_probability(c)?;
            c.expect(&Tok::Colon, "':'")?;
            p
        }
        _ => BigRational::one(),
    };
    let update = parse_update(c, scope)?;
    Ok(Destination { prob, update, target: LocationId(0) })
}

fn parse_probability(c: &mut Cursor) -> Result<BigRational, ParseError> {
    let pos = c.here();
    match c.next().map(|s| s.tok.clone()) {
        Some(Tok::Int(n)) => {
            if c.eat(&Tok::Slash) {
                let dpos = c.here();
                match c.next().map(|s| s.tok.clone()) {
                    Some(Tok::Int(d)) if d != 0 => {
                        Ok(BigRational::new(BigInt::from(n), BigInt::from(d)))
                    }
                    _ => Err(ParseError::syntax(dpos, "expected a nonzero denominator")),
                }
            } else {
                Ok(BigRational::from(BigInt::from(n)))
            }
        }
        Some(Tok::Dec(r)) => Ok(r),
        _ => Err(ParseError::syntax(pos, "expected a probability")),
    }
}

/// `true` (no update) or `(x'=e) & (y'=e) & ...`, one simultaneous block.
fn parse_update(c: &mut Cursor, scope: &Scope) -> Result<Update, ParseError> {
    if c.eat_keyword("true") {
        return Ok(Update::nop());
    }
    let mut assignments: Vec<Assignment> = Vec::new();
    loop {
        c.expect(&Tok::LParen, "'('")?;
        let (name, pos) = c.expect_ident("a variable to assign")?;
        if !scope.vars.contains_key(&name) {
            return Err(ParseError::unknown_var(pos, name));
        }
        if c.peek() == Some(&Tok::Eq) {
            return Err(ParseError::syntax(
                c.here(),
                format!("assignment to unprimed variable '{name}'; write ({name}'=...)"),
            ));
        }
        c.expect(&Tok::Prime, "''' after the assigned variable")?;
        c.expect(&Tok::Eq, "'='")?;
        let rhs = if c.eat_keyword("true") {
            IntExpr::Lit(1)
        } else if c.eat_keyword("false") {
            IntExpr::Lit(0)
        } else {
            parse_int_expr(c, scope)?
        };
        c.expect(&Tok::RParen, "')'")?;
        if assignments.iter().any(|a| a.lhs.as_str() == name) {
            return Err(ParseError::type_error(
                pos,
                format!("variable '{name}' is assigned twice in one update"),
            ));
        }
        assignments.push(Assignment { lhs: VarId::new(name), rhs });
        if !c.eat(&Tok::Amp) {
            break;
        }
    }
    Ok(Update::single(UpdateBlock::new(assignments)))
}

/// Convenience used by tests and generated fixtures.
#[allow(dead_code)]
pub(crate) fn literal_valuation(pairs: &[(&str, i64)]) -> Valuation {
    Valuation::from_pairs(pairs.iter().map(|(k, v)| (k.to_string(), *v)))
}
