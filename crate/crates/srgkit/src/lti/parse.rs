//! Reader for transfer-function text such as `"(3)/((s-2)*(s/10+1))"`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary | unary)*     juxtaposition multiplies
//! unary := ('+' | '-') unary | power
//! power := atom ('^' '-'? integer)?
//! atom  := number | 's' | '(' expr ')'
//! ```

use std::str::FromStr;

use super::{LtiError, Polynomial, TransferFunction};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    S,
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, LtiError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                out.push((i, Tok::Op(c)));
                i += 1;
            }
            's' => {
                out.push((i, Tok::S));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let v = text[start..i].parse::<f64>().map_err(|_| LtiError::Parse {
                    pos: start,
                    msg: format!("bad number '{}'", &text[start..i]),
                })?;
                out.push((start, Tok::Num(v)));
            }
            _ => {
                return Err(LtiError::Parse {
                    pos: i,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    Ok(out)
}

/// Unreduced rational value during parsing.
struct Rat<T: Scalar> {
    num: Polynomial<T>,
    den: Polynomial<T>,
}

impl<T: Scalar> Rat<T> {
    fn poly(p: Polynomial<T>) -> Self {
        Rat { num: p, den: Polynomial::one() }
    }
    fn mul(self, o: Self) -> Self {
        Rat { num: &self.num * &o.num, den: &self.den * &o.den }
    }
    fn add(self, o: Self) -> Self {
        if self.den == o.den {
            return Rat { num: &self.num + &o.num, den: self.den };
        }
        Rat {
            num: &(&self.num * &o.den) + &(&o.num * &self.den),
            den: &self.den * &o.den,
        }
    }
    fn neg(self) -> Self {
        Rat { num: -&self.num, den: self.den }
    }
    fn recip(self, pos: usize) -> Result<Self, LtiError> {
        if self.num.is_zero() {
            return Err(LtiError::Parse { pos, msg: "division by zero".into() });
        }
        Ok(Rat { num: self.den, den: self.num })
    }
}

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    i: usize,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.1)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.end, |t| t.0)
    }

    fn err<X>(&self, msg: &str) -> Result<X, LtiError> {
        Err(LtiError::Parse { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr<T: Scalar>(&mut self) -> Result<Rat<T>, LtiError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc.add(self.term()?);
            } else if self.eat('-') {
                acc = acc.add(self.term()?.neg());
            } else {
                return Ok(acc);
            }
        }
    }

    fn term<T: Scalar>(&mut self) -> Result<Rat<T>, LtiError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = acc.mul(self.unary()?);
            } else if self.eat('/') {
                let pos = self.pos();
                acc = acc.mul(self.unary()?.recip(pos)?);
            } else if matches!(self.peek(), Some(Tok::Num(_) | Tok::S | Tok::Op('('))) {
                acc = acc.mul(self.power()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary<T: Scalar>(&mut self) -> Result<Rat<T>, LtiError> {
        if self.eat('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power<T: Scalar>(&mut self) -> Result<Rat<T>, LtiError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let neg = self.eat('-');
        let pos = self.pos();
        let Some(Tok::Num(k)) = self.peek().cloned() else {
            return self.err("expected an integer exponent");
        };
        if k.fract() != 0.0 || k > 64.0 {
            return self.err("exponent must be an integer no larger than 64");
        }
        self.i += 1;
        let k = k as u32;
        let r = Rat { num: base.num.pow(k), den: base.den.pow(k) };
        if neg {
            r.recip(pos)
        } else {
            Ok(r)
        }
    }

    fn atom<T: Scalar>(&mut self) -> Result<Rat<T>, LtiError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.i += 1;
                Ok(Rat::poly(Polynomial::constant(T::of(v))))
            }
            Some(Tok::S) => {
                self.i += 1;
                Ok(Rat::poly(Polynomial::s()))
            }
            Some(Tok::Op('(')) => {
                self.i += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(inner)
            }
            Some(_) => self.err("expected a number, 's' or '('"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses and reduces a transfer function.
pub fn parse_tf<T: Scalar>(text: &str) -> Result<TransferFunction<T>, LtiError> {
    let toks = lex(text)?;
    let mut p = Parser { toks: &toks, i: 0, end: text.len() };
    let r: Rat<T> = p.expr()?;
    if p.i != toks.len() {
        return p.err("unexpected trailing input");
    }
    if r.den.is_zero() {
        return Err(LtiError::ZeroDenominator);
    }
    TransferFunction::new(r.num, r.den)
}

impl<T: Scalar> FromStr for TransferFunction<T> {
    type Err = LtiError;
    fn from_str(s: &str) -> Result<Self, LtiError> {
        parse_tf(s)
    }
}
