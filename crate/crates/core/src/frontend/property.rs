//! Parser for reachability property strings.

use std::collections::BTreeMap;

use crate::expr::Predicate;
use crate::pcfp::{GoalSpec, Objective, Pcfp};

use super::lexer::{tokenize, Tok};
use super::pexpr::{parse_pred, Cursor, Scope};
use super::ParseError;

/// Parse `P=? [ F <predicate> ]`, `Pmax=? [ F ... ]` or `Pmin=? [ F ... ]`.
///
/// `P=?` asks for the plain probability of a deterministic program. The
/// predicate ranges over the program's variables and over label variables
/// introduced by earlier unfoldings.
pub fn parse_property(text: &str, p: &Pcfp) -> Result<GoalSpec, ParseError> {
    let toks = tokenize(text)?;
    let mut c = Cursor::new(&toks);

    let pos = c.here();
    let objective = match c.next().map(|s| s.tok.clone()) {
        Some(Tok::Ident(kw)) => match kw.as_str() {
            "P" => Objective::Forced,
            "Pmax" => Objective::Maximize,
            "Pmin" => Objective::Minimize,
            _ => return Err(ParseError::syntax(pos, "expected 'P=?', 'Pmax=?' or 'Pmin=?'")),
        },
        _ => return Err(ParseError::syntax(pos, "expected 'P=?', 'Pmax=?' or 'Pmin=?'")),
    };
    c.expect(&Tok::Eq, "'='")?;
    c.expect(&Tok::Question, "'?'")?;
    c.expect(&Tok::LBracket, "'['")?;
    c.expect_keyword("F")?;

    let scope = property_scope(p);
    let predicate: Predicate = parse_pred(&mut c, &scope)?;
    c.expect(&Tok::RBracket, "']'")?;
    if !c.at_end() {
        return Err(c.unexpected("end of property"));
    }
    Ok(GoalSpec::new(objective, predicate))
}

fn property_scope(p: &Pcfp) -> Scope {
    let mut vars: BTreeMap<String, bool> = BTreeMap::new();
    for v in p.vars() {
        // A variable with domain exactly [0..1] may be used in boolean
        // position; bounds that cannot be resolved are given the benefit of
        // the doubt only when they are literal.
        let is_bool = p
            .dom()
            .bounds(v, p.consts())
            .map(|(lo, hi)| lo == 0 && hi == 1)
            .unwrap_or(false);
        vars.insert(v.as_str().to_string(), is_bool);
    }
    // Label variables come from earlier unfoldings; their declared type is
    // gone, so boolean shorthand is allowed for them.
    for v in p.label_vars() {
        vars.insert(v.as_str().to_string(), true);
    }
    Scope {
        vars,
        consts: p.consts().iter().map(|(c, _)| c.as_str().to_string()).collect(),
    }
}
