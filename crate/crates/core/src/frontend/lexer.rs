//! Tokenizer shared by the model and property parsers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::pow::Pow;

use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Decimal literal, kept exact (e.g. `0.1` is 1/10).
    Dec(BigRational),
    Str(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Semi,
    Colon,
    Comma,
    DotDot,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Amp,
    Pipe,
    Bang,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Prime,
    Question,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(n) => format!("number {n}"),
            Tok::Dec(_) => "decimal literal".to_string(),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Semi => "';'".into(),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::DotDot => "'..'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Amp => "'&'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Bang => "'!'".into(),
            Tok::Eq => "'='".into(),
            Tok::Neq => "'!='".into(),
            Tok::Lt => "'<'".into(),
            Tok::Le => "'<='".into(),
            Tok::Gt => "'>'".into(),
            Tok::Ge => "'>='".into(),
            Tok::Prime => "'''".into(),
            Tok::Question => "'?'".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if let Some(c) = c {
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '/' => {
                bump!();
                if chars.peek() == Some(&'/') {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        bump!();
                    }
                } else {
                    out.push(Spanned { tok: Tok::Slash, pos });
                }
            }
            '[' => {
                bump!();
                out.push(Spanned { tok: Tok::LBracket, pos });
            }
            ']' => {
                bump!();
                out.push(Spanned { tok: Tok::RBracket, pos });
            }
            '(' => {
                bump!();
                out.push(Spanned { tok: Tok::LParen, pos });
            }
            ')' => {
                bump!();
                out.push(Spanned { tok: Tok::RParen, pos });
            }
            ';' => {
                bump!();
                out.push(Spanned { tok: Tok::Semi, pos });
            }
            ':' => {
                bump!();
                out.push(Spanned { tok: Tok::Colon, pos });
            }
            ',' => {
                bump!();
                out.push(Spanned { tok: Tok::Comma, pos });
            }
            '+' => {
                bump!();
                out.push(Spanned { tok: Tok::Plus, pos });
            }
            '*' => {
                bump!();
                out.push(Spanned { tok: Tok::Star, pos });
            }
            '&' => {
                bump!();
                out.push(Spanned { tok: Tok::Amp, pos });
            }
            '|' => {
                bump!();
                out.push(Spanned { tok: Tok::Pipe, pos });
            }
            '\'' => {
                bump!();
                out.push(Spanned { tok: Tok::Prime, pos });
            }
            '?' => {
                bump!();
                out.push(Spanned { tok: Tok::Question, pos });
            }
            '-' => {
                bump!();
                if chars.peek() == Some(&'>') {
                    bump!();
                    out.push(Spanned { tok: Tok::Arrow, pos });
                } else {
                    out.push(Spanned { tok: Tok::Minus, pos });
                }
            }
            '!' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    out.push(Spanned { tok: Tok::Neq, pos });
                } else {
                    out.push(Spanned { tok: Tok::Bang, pos });
                }
            }
            '=' => {
                bump!();
                out.push(Spanned { tok: Tok::Eq, pos });
            }
            '<' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    out.push(Spanned { tok: Tok::Le, pos });
                } else {
                    out.push(Spanned { tok: Tok::Lt, pos });
                }
            }
            '>' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    out.push(Spanned { tok: Tok::Ge, pos });
                } else {
                    out.push(Spanned { tok: Tok::Gt, pos });
                }
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => {
                            return Err(ParseError::syntax(pos, "unterminated string literal"))
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), pos });
            }
            '.' => {
                // only meaningful as '..'
                bump!();
                if chars.peek() == Some(&'.') {
                    bump!();
                    out.push(Spanned { tok: Tok::DotDot, pos });
                } else {
                    return Err(ParseError::syntax(pos, "unexpected '.'"));
                }
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        digits.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                // Lookahead: '.' starts a decimal, '..' does not.
                let mut it = chars.clone();
                if it.next() == Some('.') && it.peek_is_digit() {
                    bump!(); // consume '.'
                    let mut frac = String::new();
                    while let Some(&c) = chars.peek() {
                        if c.is_ascii_digit() {
                            frac.push(c);
                            bump!();
                        } else {
                            break;
                        }
                    }
                    let mantissa: BigInt = format!("{digits}{frac}")
                        .parse()
                        .map_err(|_| ParseError::syntax(pos, "number too large"))?;
                    let denom = BigInt::from(10u32).pow(frac.len() as u32);
                    out.push(Spanned { tok: Tok::Dec(BigRational::new(mantissa, denom)), pos });
                } else {
                    let n: i64 = digits
                        .parse()
                        .map_err(|_| ParseError::syntax(pos, "number too large"))?;
                    out.push(Spanned { tok: Tok::Int(n), pos });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(c);
                        bump!();
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Ident(s), pos });
            }
            other => {
                return Err(ParseError::syntax(pos, format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(out)
}

trait PeekDigit {
    fn peek_is_digit(&mut self) -> bool;
}

impl PeekDigit for std::iter::Peekable<std::str::Chars<'_>> {
    fn peek_is_digit(&mut self) -> bool {
        self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false)
    }
}
