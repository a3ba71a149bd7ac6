//! A small expression language for the functional `f(v)`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | atom
//! atom   := number | 'v' ('^' integer)? | 'ind(' bound ',' bound ')'
//!         | 'clamp(' expr ',' number ',' number ')' | '(' expr ')'
//! bound  := number | 'inf'
//! ```
//!
//! `ind(a,b)` is 1 on `(a, b]` and 0 elsewhere; `clamp(e,lo,hi)` limits
//! `e` to `[lo, hi]`.

use sbm_core::fksolver::PiecewiseFunction;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum FExpr {
    Num(f64),
    Pow(u32),
    Ind(f64, f64),
    Clamp(Box<FExpr>, f64, f64),
    Neg(Box<FExpr>),
    Add(Box<FExpr>, Box<FExpr>),
    Sub(Box<FExpr>, Box<FExpr>),
    Mul(Box<FExpr>, Box<FExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot parse f at column {}: {}", self.pos + 1, self.msg)
    }
}

impl std::error::Error for ParseError {}

impl FExpr {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            FExpr::Num(c) => *c,
            FExpr::Pow(k) => v.powi(*k as i32),
            FExpr::Ind(a, b) => (v > *a && v <= *b) as u8 as f64,
            FExpr::Clamp(e, lo, hi) => e.eval(v).clamp(*lo, *hi),
            FExpr::Neg(e) => -e.eval(v),
            FExpr::Add(a, b) => a.eval(v) + b.eval(v),
            FExpr::Sub(a, b) => a.eval(v) - b.eval(v),
            FExpr::Mul(a, b) => a.eval(v) * b.eval(v),
        }
    }

    /// Finite indicator endpoints: the only places `f` may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.retain(|x| x.is_finite());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn collect(&self, out: &mut Vec<f64>) {
        match self {
            FExpr::Ind(a, b) => out.extend([*a, *b]),
            FExpr::Clamp(e, _, _) | FExpr::Neg(e) => e.collect(out),
            FExpr::Add(a, b) | FExpr::Sub(a, b) | FExpr::Mul(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            FExpr::Num(_) | FExpr::Pow(_) => {}
        }
    }

    pub fn to_function(&self) -> PiecewiseFunction {
        let e = Arc::new(self.clone());
        PiecewiseFunction::new(self.breakpoints(), move |v| e.eval(v))
            .expect("breakpoints are finite")
    }
}

pub fn parse(src: &str) -> Result<FExpr, ParseError> {
    let mut p = Parser {
        s: src.as_bytes(),
        i: 0,
    };
    let e = p.expr()?;
    p.ws();
    if p.i < p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.i,
            msg: msg.to_string(),
        }
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.ws();
        if self.s[self.i..].starts_with(kw.as_bytes()) {
            self.i += kw.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<FExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = FExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = FExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<FExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.eat(b'*') {
            lhs = FExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FExpr, ParseError> {
        if self.eat(b'-') {
            Ok(FExpr::Neg(Box::new(self.unary()?)))
        } else {
            self.atom()
        }
    }

    fn atom(&mut self) -> Result<FExpr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'v') => {
                self.i += 1;
                if self.eat(b'^') {
                    Ok(FExpr::Pow(self.integer()?))
                } else {
                    Ok(FExpr::Pow(1))
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(FExpr::Num(self.number()?)),
            Some(_) => {
                if self.keyword("ind(") {
                    let a = self.bound()?;
                    self.expect(b',')?;
                    let b = self.bound()?;
                    self.expect(b')')?;
                    if !(a < b) {
                        return Err(self.err("ind(a,b) needs a < b"));
                    }
                    Ok(FExpr::Ind(a, b))
                } else if self.keyword("clamp(") {
                    let e = self.expr()?;
                    self.expect(b',')?;
                    let lo = self.signed()?;
                    self.expect(b',')?;
                    let hi = self.signed()?;
                    self.expect(b')')?;
                    if !(lo <= hi) {
                        return Err(self.err("clamp(e,lo,hi) needs lo <= hi"));
                    }
                    Ok(FExpr::Clamp(Box::new(e), lo, hi))
                } else {
                    Err(self.err("expected a number, v, ind(...), clamp(...) or '('"))
                }
            }
        }
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return Err(self.err("expected an integer exponent after '^'"));
        }
        std::str::from_utf8(&self.s[start..self.i])
            .unwrap()
            .parse()
            .map_err(|_| self.err("exponent out of range"))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.ws();
        let start = self.i;
        let digits = |p: &mut Self| {
            while p.i < p.s.len() && (p.s[p.i].is_ascii_digit() || p.s[p.i] == b'.') {
                p.i += 1;
            }
        };
        digits(self);
        if self.i < self.s.len() && (self.s[self.i] == b'e' || self.s[self.i] == b'E') {
            self.i += 1;
            if self.i < self.s.len() && (self.s[self.i] == b'+' || self.s[self.i] == b'-') {
                self.i += 1;
            }
            digits(self);
        }
        let text = std::str::from_utf8(&self.s[start..self.i]).unwrap();
        text.parse().map_err(|_| ParseError {
            pos: start,
            msg: format!("bad number '{text}'"),
        })
    }

    fn signed(&mut self) -> Result<f64, ParseError> {
        if self.eat(b'-') {
            Ok(-self.number()?)
        } else {
            self.number()
        }
    }

    fn bound(&mut self) -> Result<f64, ParseError> {
        if self.keyword("inf") {
            Ok(f64::INFINITY)
        } else {
            self.signed()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomials_and_sums() {
        let e = parse("1*v^1").unwrap();
        assert_eq!(e.eval(3.0), 3.0);
        let e = parse("2*v^2 + 0.5*v - 1").unwrap();
        assert_eq!(e.eval(2.0), 8.0);
        assert_eq!(parse("0").unwrap().eval(7.0), 0.0);
        assert_eq!(parse("-v").unwrap().eval(2.0), -2.0);
        assert_eq!(parse("1e-1*v").unwrap().eval(10.0), 1.0);
    }

    #[test]
    fn indicators_and_clamps() {
        let e = parse("3*ind(0.5, 1) + clamp(v, 0, 2)").unwrap();
        assert_eq!(e.eval(0.5), 0.5);
        assert_eq!(e.eval(0.75), 3.75);
        assert_eq!(e.eval(5.0), 2.0);
        assert_eq!(e.breakpoints(), vec![0.5, 1.0]);
        assert_eq!(parse("ind(2,inf)").unwrap().eval(1e9), 1.0);
    }

    #[test]
    fn errors_point_at_the_problem() {
        let err = parse("v^").unwrap_err();
        assert_eq!(err.pos, 2);
        assert!(parse("2*").is_err());
        assert!(parse("(v").is_err());
        assert!(parse("v v").is_err());
        assert!(parse("ind(1,0)").is_err());
        assert!(parse("w").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn parentheses_group() {
        assert_eq!(parse("2*(v+1)").unwrap().eval(1.0), 4.0);
        assert_eq!(parse("(v)*(v)").unwrap().eval(3.0), 9.0);
    }
}
