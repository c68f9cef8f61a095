//! Words of the interconnection grammar: syntax tree, parser and printer.
//!
//! Concrete syntax: identifiers name operators, `1` is the identity, `+` and
//! `-` build sums, juxtaposition or `*` builds compositions (rightmost acts
//! first), postfix `^-1` inverts and a numeric literal scales the factor that
//! follows it. Precedence: `^-1` > composition > sum.

use std::fmt;

use super::LangError;

/// Name of the identity operator.
pub const IDENTITY: &str = "1";

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(String),
    Scale(f64, Box<Expr>),
    Inv(Box<Expr>),
    Sum(Box<Expr>, Box<Expr>),
    Prod(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn identity() -> Expr {
        Expr::Var(IDENTITY.into())
    }

    pub fn scale(a: f64, e: Expr) -> Expr {
        Expr::Scale(a, Box::new(e))
    }

    pub fn inv(e: Expr) -> Expr {
        Expr::Inv(Box::new(e))
    }

    pub fn sum(a: Expr, b: Expr) -> Expr {
        Expr::Sum(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Expr, b: Expr) -> Expr {
        Expr::Prod(Box::new(a), Box::new(b))
    }

    /// Operator names in order of first appearance, identity excluded.
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_vars(&mut |n| {
            if n != IDENTITY && !out.contains(&n) {
                out.push(n);
            }
        });
        out
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Var(n) => f(n),
            Expr::Scale(_, e) | Expr::Inv(e) => e.visit_vars(f),
            Expr::Sum(a, b) | Expr::Prod(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
        }
    }

    /// Replaces every variable by the result of `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&str) -> Expr) -> Expr {
        match self {
            Expr::Var(n) => f(n),
            Expr::Scale(a, e) => Expr::scale(*a, e.map_vars(f)),
            Expr::Inv(e) => Expr::inv(e.map_vars(f)),
            Expr::Sum(a, b) => Expr::sum(a.map_vars(f), b.map_vars(f)),
            Expr::Prod(a, b) => Expr::prod(a.map_vars(f), b.map_vars(f)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Sum(..) => 0,
            Expr::Prod(..) | Expr::Scale(..) => 1,
            Expr::Var(_) | Expr::Inv(_) => 3,
        }
    }

    fn ends_with_number(&self) -> bool {
        match self {
            Expr::Var(n) => n == IDENTITY,
            Expr::Scale(_, e) | Expr::Prod(_, e) => e.ends_with_number(),
            Expr::Inv(_) | Expr::Sum(..) => false,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Scale(a, e) => match e.as_ref() {
                Expr::Var(n) if n == IDENTITY && *a != 1.0 => write!(f, "{a}"),
                e => {
                    write!(f, "{a} ")?;
                    e.write_at(f, 3)
                }
            },
            Expr::Inv(e) => {
                e.write_at(f, 3)?;
                write!(f, "^-1")
            }
            Expr::Sum(a, b) => {
                a.write_at(f, 0)?;
                write!(f, " + ")?;
                b.write_at(f, 1)
            }
            Expr::Prod(a, b) => {
                a.write_at(f, 1)?;
                // A trailing number would read as a scale of the next factor.
                write!(f, "{}", if a.ends_with_number() { " * " } else { " " })?;
                b.write_at(f, 3)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = LangError;

    fn from_str(s: &str) -> Result<Self, LangError> {
        parse_expr(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Star,
    LParen,
    RParen,
    InvMark,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, LangError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| LangError::Syntax { pos, msg: msg.into() };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            '^' => {
                let rest = &src[i + 1..];
                let len = ["-1", "(-1)"].iter().find(|p| rest.starts_with(**p)).map(|p| p.len());
                let Some(len) = len else {
                    return Err(err(start, "only `^-1` is supported"));
                };
                out.push((start, Tok::InvMark));
                i += 1 + len;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let v: f64 = src[start..i].parse().map_err(|_| err(start, "malformed number"))?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'') {
                    i += 1;
                }
                out.push((start, Tok::Ident(src[start..i].to_string())));
                continue;
            }
            _ => return Err(err(start, &format!("unexpected character `{c}`"))),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn fail<T>(&self, msg: &str) -> Result<T, LangError> {
        Err(LangError::Syntax { pos: self.at(), msg: msg.into() })
    }

    fn starts_factor(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident(_) | Tok::Num(_) | Tok::LParen))
    }

    fn sum(&mut self) -> Result<Expr, LangError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::sum(lhs, rhs);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.product()?;
                    lhs = Expr::sum(lhs, negate(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// A product, optionally preceded by a sign that folds into its first factor.
    fn term(&mut self) -> Result<Expr, LangError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let first = negate(self.factor()?);
            return self.product_from(first);
        }
        self.product()
    }

    fn product(&mut self) -> Result<Expr, LangError> {
        let first = self.factor()?;
        self.product_from(first)
    }

    fn product_from(&mut self, mut lhs: Expr) -> Result<Expr, LangError> {
        loop {
            if self.peek() == Some(&Tok::Star) {
                self.pos += 1;
            } else if !self.starts_factor() {
                return Ok(lhs);
            }
            let rhs = self.factor()?;
            lhs = Expr::prod(lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr, LangError> {
        let mut e = match self.peek().cloned() {
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                Expr::Var(n)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.sum()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.fail("expected `)`");
                }
                self.pos += 1;
                inner
            }
            Some(Tok::Num(a)) => {
                self.pos += 1;
                if self.starts_factor() {
                    Expr::scale(a, self.factor()?)
                } else if a == 1.0 {
                    Expr::identity()
                } else {
                    Expr::scale(a, Expr::identity())
                }
            }
            _ => return self.fail("expected an operator name, number or `(`"),
        };
        while self.peek() == Some(&Tok::InvMark) {
            self.pos += 1;
            e = Expr::inv(e);
        }
        Ok(e)
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Scale(a, inner) => Expr::Scale(-a, inner),
        e => Expr::scale(-1.0, e),
    }
}

/// Parses a word of the interconnection grammar.
pub fn parse_expr(text: &str) -> Result<Expr, LangError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(LangError::Syntax { pos: 0, msg: "empty word".into() });
    }
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.fail("unexpected trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> Expr {
        Expr::var(n)
    }

    #[test]
    fn lure_word() {
        let e = parse_expr("(G^-1 + phi)^-1").unwrap();
        assert_eq!(e, Expr::inv(Expr::sum(Expr::inv(v("G")), v("phi"))));
        assert_eq!(e.to_string(), "(G^-1 + phi)^-1");
    }

    #[test]
    fn saturation_word() {
        let e = parse_expr("(1+((G^-1+phi2)^-1 * phi1 * K)^-1)^-1").unwrap();
        let l = Expr::prod(Expr::prod(Expr::inv(Expr::sum(Expr::inv(v("G")), v("phi2"))), v("phi1")), v("K"));
        assert_eq!(e, Expr::inv(Expr::sum(Expr::identity(), Expr::inv(l))));
    }

    #[test]
    fn block_chain_word() {
        let e = parse_expr("G1 phi1 G2 (w_top + w_bot) phi6 G7 phi7").unwrap();
        assert_eq!(e.names(), ["G1", "phi1", "G2", "w_top", "w_bot", "phi6", "G7", "phi7"]);
        let Expr::Prod(_, last) = &e else { panic!() };
        assert_eq!(**last, v("phi7"));
    }

    #[test]
    fn scales_and_signs() {
        assert_eq!(parse_expr("2 G").unwrap(), Expr::scale(2.0, v("G")));
        assert_eq!(parse_expr("-G").unwrap(), Expr::scale(-1.0, v("G")));
        assert_eq!(parse_expr("G - 2 H").unwrap(), Expr::sum(v("G"), Expr::scale(-2.0, v("H"))));
        assert_eq!(parse_expr("0.5").unwrap(), Expr::scale(0.5, Expr::identity()));
        assert_eq!(parse_expr("G^(-1)").unwrap(), Expr::inv(v("G")));
        assert_eq!(parse_expr("1e-3 G").unwrap(), Expr::scale(1e-3, v("G")));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        for (src, pos) in [("G +", 3), ("(G", 2), ("G ^2", 2), ("G $", 2), ("", 0), ("G)", 1)] {
            match parse_expr(src) {
                Err(LangError::Syntax { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn printer_round_trips() {
        for src in [
            "G",
            "1",
            "2",
            "1 1",
            "-1",
            "(1 + L^-1)^-1",
            "G1 phi1 G2 (w_top + w_bot) phi6 G7 phi7",
            "a (b c)",
            "a + (b + c)",
            "2 (3 G) + -1 H",
            "(2 G)^-1^-1",
            "G (-2 H) K",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = e.to_string();
            assert_eq!(parse_expr(&printed).unwrap(), e, "{src} -> {printed}");
        }
    }
}
