//! Token-stream parser for integer expressions and predicates, shared by the
//! model and property grammars.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::expr::{CmpOp, IntExpr, Predicate};

use super::lexer::{Pos, Spanned, Tok};
use super::ParseError;

/// How an identifier in an expression resolves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IdentKind {
    /// A variable; the flag records whether it may be used in boolean
    /// position (declared bool, or a label variable of unknown type).
    Var(bool),
    Const,
}

/// Name resolution context for expression parsing.
#[derive(Debug, Clone, Default)]
pub(crate) struct Scope {
    pub vars: BTreeMap<String, bool>,
    pub consts: BTreeSet<String>,
}

impl Scope {
    pub fn resolve(&self, name: &str) -> Option<IdentKind> {
        if let Some(is_bool) = self.vars.get(name) {
            Some(IdentKind::Var(*is_bool))
        } else if self.consts.contains(name) {
            Some(IdentKind::Const)
        } else {
            None
        }
    }
}

/// Cursor over the token stream with backtracking.
pub(crate) struct Cursor<'a> {
    toks: &'a [Spanned],
    pub pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(toks: &'a [Spanned]) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    pub fn here(&self) -> Pos {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|s| s.pos)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    pub fn next(&mut self) -> Option<&Spanned> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    pub fn expect_ident(&mut self, what: &str) -> Result<(String, Pos), ParseError> {
        let pos = self.here();
        match self.next().map(|s| s.tok.clone()) {
            Some(Tok::Ident(s)) => Ok((s, pos)),
            _ => Err(ParseError::syntax(pos, format!("expected {what}"))),
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let pos = self.here();
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError::syntax(pos, format!("expected '{kw}'"))),
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    pub fn unexpected(&self, what: &str) -> ParseError {
        let pos = self.here();
        match self.toks.get(self.pos) {
            Some(s) => ParseError::syntax(pos, format!("expected {what}, found {}", s.tok.describe())),
            None => ParseError::syntax(pos, format!("expected {what}, found end of input")),
        }
    }
}

fn cmp_tok(tok: &Tok) -> Option<CmpOp> {
    match tok {
        Tok::Eq => Some(CmpOp::Eq),
        Tok::Neq => Some(CmpOp::Ne),
        Tok::Lt => Some(CmpOp::Lt),
        Tok::Le => Some(CmpOp::Le),
        Tok::Gt => Some(CmpOp::Gt),
        Tok::Ge => Some(CmpOp::Ge),
        _ => None,
    }
}

/// Enforce that division only occurs by a literal or constant.
fn check_divisor(e: &IntExpr, pos: Pos) -> Result<(), ParseError> {
    match e {
        IntExpr::Lit(_) | IntExpr::Const(_) => Ok(()),
        _ => Err(ParseError::type_error(
            pos,
            "division is only supported by a literal or constant divisor",
        )),
    }
}

pub(crate) fn parse_int_expr(c: &mut Cursor, scope: &Scope) -> Result<IntExpr, ParseError> {
    let mut lhs = parse_term(c, scope)?;
    loop {
        if c.eat(&Tok::Plus) {
            let rhs = parse_term(c, scope)?;
            lhs = IntExpr::Add(Box::new(lhs), Box::new(rhs));
        } else if c.eat(&Tok::Minus) {
            let rhs = parse_term(c, scope)?;
            lhs = IntExpr::Sub(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_term(c: &mut Cursor, scope: &Scope) -> Result<IntExpr, ParseError> {
    let mut lhs = parse_factor(c, scope)?;
    loop {
        if c.eat(&Tok::Star) {
            let rhs = parse_factor(c, scope)?;
            lhs = IntExpr::Mul(Box::new(lhs), Box::new(rhs));
        } else if c.peek() == Some(&Tok::Slash) {
            let pos = c.here();
            c.next();
            let rhs = parse_factor(c, scope)?;
            check_divisor(&rhs, pos)?;
            lhs = IntExpr::Div(Box::new(lhs), Box::new(rhs));
        } else {
            return Ok(lhs);
        }
    }
}

fn parse_factor(c: &mut Cursor, scope: &Scope) -> Result<IntExpr, ParseError> {
    if c.eat(&Tok::Minus) {
        let inner = parse_factor(c, scope)?;
        return Ok(match inner {
            IntExpr::Lit(n) => IntExpr::Lit(-n),
            e => IntExpr::Neg(Box::new(e)),
        });
    }
    let pos = c.here();
    match c.next().map(|s| s.tok.clone()) {
        Some(Tok::Int(n)) => Ok(IntExpr::Lit(n)),
        Some(Tok::LParen) => {
            let e = parse_int_expr(c, scope)?;
            c.expect(&Tok::RParen, "')'")?;
            Ok(e)
        }
        Some(Tok::Ident(name)) => {
            if (name == "min" || name == "max") && c.peek() == Some(&Tok::LParen) {
                c.next();
                let a = parse_int_expr(c, scope)?;
                c.expect(&Tok::Comma, "','")?;
                let b = parse_int_expr(c, scope)?;
                c.expect(&Tok::RParen, "')'")?;
                return Ok(if name == "min" {
                    IntExpr::Min(Box::new(a), Box::new(b))
                } else {
                    IntExpr::Max(Box::new(a), Box::new(b))
                });
            }
            if name == "true" || name == "false" {
                // boolean literals never belong in integer position
                return Err(ParseError::syntax(pos, "expected an integer expression"));
            }
            match scope.resolve(&name) {
                Some(IdentKind::Var(_)) => Ok(IntExpr::var(name)),
                Some(IdentKind::Const) => Ok(IntExpr::constant(name)),
                None => Err(ParseError::unknown_var(pos, name)),
            }
        }
        _ => Err(ParseError::syntax(pos, "expected an integer expression")),
    }
}

/// Parse a predicate: `|` over `&` over `!` over atoms. A comparison chain
/// like `0<x<N` desugars to the conjunction of adjacent comparisons. A bare
/// boolean variable `f` is shorthand for `f=1`, and `!f` for `f=0`.
pub(crate) fn parse_pred(c: &mut Cursor, scope: &Scope) -> Result<Predicate, ParseError> {
    parse_or(c, scope).map(|(p, _)| p)
}

type Flagged = (Predicate, bool);

fn parse_or(c: &mut Cursor, scope: &Scope) -> Result<Flagged, ParseError> {
    let (mut lhs, mut bare) = parse_and(c, scope)?;
    while c.eat(&Tok::Pipe) {
        let (rhs, _) = parse_and(c, scope)?;
        lhs = Predicate::or(lhs, rhs);
        bare = false;
    }
    Ok((lhs, bare))
}

fn parse_and(c: &mut Cursor, scope: &Scope) -> Result<Flagged, ParseError> {
    let (mut lhs, mut bare) = parse_not(c, scope)?;
    while c.eat(&Tok::Amp) {
        let (rhs, _) = parse_not(c, scope)?;
        lhs = Predicate::and(lhs, rhs);
        bare = false;
    }
    Ok((lhs, bare))
}

fn parse_not(c: &mut Cursor, scope: &Scope) -> Result<Flagged, ParseError> {
    if c.eat(&Tok::Bang) {
        let (inner, bare) = parse_not(c, scope)?;
        if bare {
            // `!f` on a boolean variable flips the shorthand value.
            if let Predicate::Cmp(CmpOp::Eq, v @ IntExpr::Var(_), IntExpr::Lit(b)) = &inner {
                return Ok((
                    Predicate::Cmp(CmpOp::Eq, v.clone(), IntExpr::Lit(1 - b)),
                    true,
                ));
            }
        }
        return Ok((Predicate::not(inner), false));
    }
    parse_atom(c, scope)
}

fn parse_atom(c: &mut Cursor, scope: &Scope) -> Result<Flagged, ParseError> {
    if c.eat_keyword("true") {
        return Ok((Predicate::TRUE, false));
    }
    if c.eat_keyword("false") {
        return Ok((Predicate::FALSE, false));
    }

    // Attempt a comparison chain first; on failure fall back to a
    // parenthesized predicate.
    let save = c.pos;
    match parse_int_expr(c, scope) {
        Ok(first) => {
            if cmp_tok(c.peek().unwrap_or(&Tok::Semi)).is_some() {
                let mut lhs = first;
                let mut acc: Option<Predicate> = None;
                while let Some(op) = c.peek().and_then(cmp_tok) {
                    c.next();
                    let rhs = parse_int_expr(c, scope)?;
                    let cmp = Predicate::Cmp(op, lhs.clone(), rhs.clone());
                    acc = Some(match acc {
                        None => cmp,
                        Some(p) => Predicate::and(p, cmp),
                    });
                    lhs = rhs;
                }
                return Ok((acc.unwrap(), false));
            }
            // No comparison operator: only a bare boolean variable is valid.
            if let IntExpr::Var(v) = &first {
                let boolish = scope.vars.get(v.as_str()).copied().unwrap_or(true);
                if boolish {
                    return Ok((
                        Predicate::Cmp(CmpOp::Eq, first.clone(), IntExpr::Lit(1)),
                        true,
                    ));
                }
                return Err(ParseError::type_error(
                    c.here(),
                    format!("variable '{v}' is not boolean; expected a comparison"),
                ));
            }
            // It may have been a parenthesized predicate after all.
            c.pos = save;
        }
        // A structural mismatch may mean a parenthesized predicate; scope
        // and type errors are real and must surface.
        Err(ParseError::Syntax { .. }) => {
            c.pos = save;
        }
        Err(e) => return Err(e),
    }

    if c.eat(&Tok::LParen) {
        let (p, _) = parse_or(c, scope)?;
        c.expect(&Tok::RParen, "')'")?;
        return Ok((p, false));
    }
    Err(c.unexpected("a predicate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;

    fn scope() -> Scope {
        Scope {
            vars: BTreeMap::from([("x".to_string(), false), ("f".to_string(), true)]),
            consts: BTreeSet::from(["N".to_string()]),
        }
    }

    fn pred(text: &str) -> Predicate {
        let toks = tokenize(text).unwrap();
        let mut c = Cursor::new(&toks);
        let p = parse_pred(&mut c, &scope()).unwrap();
        assert!(c.at_end(), "trailing tokens in {text}");
        p
    }

    #[test]
    fn chained_comparison_desugars() {
        assert_eq!(pred("0<x<N"), pred("0<x & x<N"));
    }

    #[test]
    fn bool_var_shorthand() {
        assert_eq!(pred("f"), pred("f=1"));
        assert_eq!(pred("!f"), pred("f=0"));
        assert_eq!(pred("!!f"), pred("f=1"));
    }

    #[test]
    fn precedence_and_parens() {
        let p = pred("x=0 | x>=N & !f");
        // `&` binds tighter than `|`
        assert_eq!(p, Predicate::or(pred("x=0"), Predicate::and(pred("x>=N"), pred("f=0"))));
        assert_eq!(pred("(x=0 | x>=N) & !f"), Predicate::and(pred("x=0 | x>=N"), pred("f=0")));
    }

    #[test]
    fn variable_divisor_rejected() {
        let toks = tokenize("N/x > 1").unwrap();
        let mut c = Cursor::new(&toks);
        assert!(matches!(
            parse_pred(&mut c, &scope()),
            Err(ParseError::Type { .. })
        ));
    }

    #[test]
    fn unknown_identifier_reported() {
        let toks = tokenize("y < 1").unwrap();
        let mut c = Cursor::new(&toks);
        assert!(matches!(
            parse_pred(&mut c, &scope()),
            Err(ParseError::UnknownVariable { .. })
        ));
    }
}
