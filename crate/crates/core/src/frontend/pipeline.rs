//! Line-oriented pipeline scripts driving the reduction.

use crate::expr::{Int, VarId};

use super::ParseError;

/// One pipeline directive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    /// Unfold the given variables jointly into the location space.
    Unfold(Vec<VarId>),
    /// Eliminate every location whose label satisfies all given equalities.
    Eliminate(Vec<(VarId, Int)>),
    EliminateAll,
    RemoveUnsat,
    Stats,
    Check,
}

/// Parse a pipeline script: one directive per line, `#` comments, blank
/// lines ignored.
pub fn parse_pipeline(text: &str) -> Result<Vec<Directive>, ParseError> {
    let mut out = Vec::new();
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (line, ""),
        };
        match head {
            "unfold" => {
                let vars: Vec<VarId> = rest
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(VarId::new)
                    .collect();
                if vars.is_empty() {
                    return Err(ParseError::Syntax {
                        line: 0,
                        col: 0,
                        msg: "'unfold' needs at least one variable".into(),
                    });
                }
                out.push(Directive::Unfold(vars));
            }
            "eliminate" => {
                let mut eqs = Vec::new();
                for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (name, value) = part.split_once('=').ok_or_else(|| ParseError::Syntax {
                        line: 0,
                        col: 0,
                        msg: format!("bad location selector '{part}'; expected name=value"),
                    })?;
                    let value: Int = value.trim().parse().map_err(|_| ParseError::Syntax {
                        line: 0,
                        col: 0,
                        msg: format!("bad value in selector '{part}'"),
                    })?;
                    eqs.push((VarId::new(name.trim()), value));
                }
                if eqs.is_empty() {
                    return Err(ParseError::Syntax {
                        line: 0,
                        col: 0,
                        msg: "'eliminate' needs a label selector such as f=1".into(),
                    });
                }
                out.push(Directive::Eliminate(eqs));
            }
            "eliminate-all" if rest.is_empty() => out.push(Directive::EliminateAll),
            "remove-unsat" if rest.is_empty() => out.push(Directive::RemoveUnsat),
            "stats" if rest.is_empty() => out.push(Directive::Stats),
            "check" if rest.is_empty() => out.push(Directive::Check),
            other => return Err(ParseError::UnknownDirective(other.to_string())),
        }
    }
    Ok(out)
}
