//! Coordinate expressions in the curve parameter `t`.
//!
//! Grammar (this is the format of every line of a curve file):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("+" | "-") unary | power ;
//! power   = primary [ "^" unary ] ;          (* exponent must not contain t *)
//! primary = number | "t" | "pi" | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "exp" ;
//! number  = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ```
//!
//! Whitespace is insignificant. `-t^2` parses as `-(t^2)`; `^` is right
//! associative. Integer exponents are evaluated by repeated multiplication
//! and accept any base; other exponents need a positive base at every
//! evaluation point.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Param,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser::new(src);
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn depends_on_param(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Param => true,
            Expr::Neg(a) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) | Expr::Pow(a, _) => {
                a.depends_on_param()
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on_param() || b.depends_on_param()
            }
        }
    }

    /// Value and derivatives up to `degree` at `t`.
    pub fn jet(&self, t: f64, degree: usize) -> Result<Jet> {
        let var = Jet::variable(t, degree);
        self.eval_jet(&var, t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(self.jet(t, 0)?.value())
    }

    fn eval_jet(&self, var: &Jet, t: f64) -> Result<Jet> {
        let d = var.degree();
        Ok(match self {
            Expr::Const(c) => Jet::constant(*c, d),
            Expr::Param => var.clone(),
            Expr::Neg(a) => -a.eval_jet(var, t)?,
            Expr::Add(a, b) => a.eval_jet(var, t)? + b.eval_jet(var, t)?,
            Expr::Sub(a, b) => a.eval_jet(var, t)? - b.eval_jet(var, t)?,
            Expr::Mul(a, b) => a.eval_jet(var, t)? * b.eval_jet(var, t)?,
            Expr::Div(a, b) => {
                let num = a.eval_jet(var, t)?;
                let den = b.eval_jet(var, t)?;
                num.checked_div(&den).ok_or(Error::DivisionByZero { t })?
            }
            Expr::Pow(a, p) => {
                let base = a.eval_jet(var, t)?;
                if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 {
                    base.powi(*p as i32).ok_or_else(|| Error::Domain {
                        t,
                        detail: format!("zero base raised to negative power {p}"),
                    })?
                } else {
                    base.powf(*p).ok_or_else(|| Error::Domain {
                        t,
                        detail: format!(
                            "base {} raised to non-integer power {p}",
                            base.value()
                        ),
                    })?
                }
            }
            Expr::Sin(a) => a.eval_jet(var, t)?.sin(),
            Expr::Cos(a) => a.eval_jet(var, t)?.cos(),
            Expr::Exp(a) => a.eval_jet(var, t)?.exp(),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c:?})"),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Param => write!(f, "t"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, p) if *p < 0.0 => write!(f, "({a}^({p:?}))"),
            Expr::Pow(a, p) => write!(f, "({a}^{p:?})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat('^') {
            let at = self.pos;
            let exponent = self.unary()?;
            if exponent.depends_on_param() {
                return Err(Error::Parse {
                    position: at,
                    message: "exponent must not depend on t".into(),
                });
            }
            let p = exponent.eval(0.0).map_err(|_| Error::Parse {
                position: at,
                message: "exponent does not evaluate to a finite constant".into(),
            })?;
            if !p.is_finite() {
                return Err(Error::Parse {
                    position: at,
                    message: "exponent does not evaluate to a finite constant".into(),
                });
            }
            return Ok(Expr::Pow(Box::new(base), p));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while matches!(self.peek_raw(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                let func: fn(Box<Expr>) -> Expr = match ident {
                    "t" => return Ok(Expr::Param),
                    "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
                    "sin" => Expr::Sin,
                    "cos" => Expr::Cos,
                    "exp" => Expr::Exp,
                    _ => {
                        return Err(Error::Parse {
                            position: start,
                            message: format!("unknown identifier '{ident}'"),
                        })
                    }
                };
                if !self.eat('(') {
                    return Err(self.error("expected '(' after function name"));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(func(Box::new(arg)))
            }
            Some(c) => Err(self.error(&format!("unexpected character '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut count = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            count += digits(&mut p);
        }
        if count == 0 {
            return Err(self.error("malformed number"));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) == 0 {
                self.pos = q;
                return Err(self.error("malformed exponent"));
            }
            p = q;
        }
        self.pos = p;
        self.src[start..p]
            .parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| Error::Parse {
                position: start,
                message: "malformed number".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn derivs(src: &str, t: f64) -> Vec<f64> {
        Expr::parse(src).unwrap().jet(t, 4).unwrap().derivatives()
    }

    #[test]
    fn spec_examples() {
        assert_eq!(derivs("sin(2*t)", 0.0), vec![0.0, 2.0, 0.0, -8.0, 0.0]);
        assert_eq!(derivs("1", 3.7), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let q = derivs("t*t*t*t", 1.0);
        for (g, w) in q.iter().zip([1.0, 4.0, 12.0, 24.0, 24.0]) {
            assert_relative_eq!(*g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("-t^2 + 2*3 - 4/2").unwrap();
        assert_relative_eq!(e.eval(3.0).unwrap(), -9.0 + 6.0 - 2.0);
        let e = Expr::parse("2^3^2").unwrap();
        assert_relative_eq!(e.eval(0.0).unwrap(), 512.0);
        let e = Expr::parse("2^-1").unwrap();
        assert_relative_eq!(e.eval(0.0).unwrap(), 0.5);
        let e = Expr::parse(" 1.5e-1 * pi ").unwrap();
        assert_relative_eq!(e.eval(0.0).unwrap(), 0.15 * std::f64::consts::PI);
    }

    #[test]
    fn parse_errors_report_position() {
        match Expr::parse("sin(t) + foo(t)") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Expr::parse("(t + 1"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("t^t"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("1e"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse("t t"), Err(Error::Parse { .. })));
        assert!(matches!(Expr::parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn evaluation_errors() {
        let e = Expr::parse("1/(t-1)").unwrap();
        assert!(matches!(e.eval(1.0), Err(Error::DivisionByZero { .. })));
        let e = Expr::parse("(t-2)^0.5").unwrap();
        assert!(matches!(e.eval(1.0), Err(Error::Domain { .. })));
        assert_relative_eq!(e.eval(6.0).unwrap(), 2.0);
        // integer powers accept negative bases
        let e = Expr::parse("(t-2)^3").unwrap();
        assert_relative_eq!(e.eval(1.0).unwrap(), -1.0);
    }

    #[test]
    fn display_round_trips() {
        for src in ["-t^2 + sin(3*t)/exp(t)", "2^-1*cos(t - 0.25)", "(1+t)^1.5"] {
            let e = Expr::parse(src).unwrap();
            let again = Expr::parse(&e.to_string()).unwrap();
            for t in [0.1, 0.7, 1.3] {
                assert_relative_eq!(e.eval(t).unwrap(), again.eval(t).unwrap(), epsilon = 1e-14);
            }
        }
    }
}
