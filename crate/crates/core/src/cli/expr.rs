//! Initial-condition expressions: constants, sin(kx), cos(kx), exp of a trigonometric polynomial,
//! combined with + − * / and integer powers.
//!
//! Grammar:
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/')? unary)*      juxtaposition multiplies: "0.5 sin(2x)"
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := number | 'x' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func   := sin | cos | exp
//! ```

use crate::error::{Error, Result};
use crate::field::FourierField;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let mut p = Parser { chars: text.chars().collect(), pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(Error::Parse(format!("unexpected '{}' at {} in '{text}'", p.chars[p.pos], p.pos)));
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, n) => a.eval(x).powi(*n),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Samples on a grid four times finer than the field grid and projects onto |k| ≤ `k`.
    pub fn to_field(&self, k: usize, grid: usize) -> Result<FourierField> {
        let m = (4 * grid).max(4 * k + 4);
        let vals: Vec<f64> = (0..m).map(|j| self.eval(2.0 * std::f64::consts::PI * j as f64 / m as f64)).collect();
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(Error::ConfigError(format!("expression evaluates to {v}")));
        }
        let fine = FourierField::from_grid_values(&vals, k, m)?;
        FourierField::from_half_spectrum(fine.half_spectrum().to_vec(), grid)
    }
}

/// Parses and projects in one step.
pub fn field(text: &str, k: usize, grid: usize) -> Result<FourierField> {
    Expr::parse(text)?.to_field(k, grid)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
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
            } else if matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '(' || c == '.') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.power()?));
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
        let base = self.atom()?;
        if self.eat('^') {
            let neg = self.eat('-');
            let n = self.number()?;
            if n.fract() != 0.0 || n.abs() > 64.0 {
                return Err(Error::Parse(format!("exponent {n} must be an integer of size at most 64")));
            }
            let n = if neg { -(n as i32) } else { n as i32 };
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            let exp_sign = (c == '-' || c == '+')
                && self.pos > start
                && matches!(self.chars[self.pos - 1], 'e' | 'E');
            // an 'e' only belongs to the number when digits follow it
            let exp_mark = (c == 'e' || c == 'E')
                && self.pos > start
                && self
                    .chars
                    .get(self.pos + 1)
                    .is_some_and(|n| n.is_ascii_digit() || ((*n == '-' || *n == '+') && self.chars.get(self.pos + 2).is_some_and(|d| d.is_ascii_digit())));
            if c.is_ascii_digit() || c == '.' || exp_mark || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}' at {start}")))
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Expr::Num(self.number()?)),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse("missing ')'".into()));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let at = self.pos;
                let name = self.ident();
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "sin" | "cos" | "exp" => {
                        if !self.eat('(') {
                            return Err(Error::Parse(format!("{name} needs '('")));
                        }
                        let arg = Box::new(self.expr()?);
                        if !self.eat(')') {
                            return Err(Error::Parse(format!("missing ')' after {name} argument")));
                        }
                        Ok(match name.as_str() {
                            "sin" => Expr::Sin(arg),
                            "cos" => Expr::Cos(arg),
                            _ => Expr::Exp(arg),
                        })
                    }
                    _ => Err(Error::Parse(format!("unknown name '{name}' at {at}"))),
                }
            }
            Some(c) => Err(Error::Parse(format!("unexpected '{c}' at {}", self.pos))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_polynomial_coefficients() {
        let f = field("2 + 0.5 sin(x) - 0.2*cos(3x)", 16, 64).unwrap();
        assert!((f.mean() - 2.0).abs() < 1e-14);
        assert!((f.cos_sin(1).1 - 0.5).abs() < 1e-14);
        assert!((f.cos_sin(3).0 + 0.2).abs() < 1e-14);
    }

    #[test]
    fn exponent_notation_and_powers() {
        let e = Expr::parse("1 + 1e-3 cos(x)").unwrap();
        assert!((e.eval(0.0) - 1.001).abs() < 1e-15);
        let p = Expr::parse("sin(x)^2 + cos(x)^2").unwrap();
        assert!((p.eval(0.7) - 1.0).abs() < 1e-15);
        assert!((Expr::parse("2e1").unwrap().eval(0.0) - 20.0).abs() < 1e-15);
    }

    #[test]
    fn exp_of_trig() {
        let f = field("exp(0.1 cos(x))", 16, 64).unwrap();
        let want = FourierField::from_fn(16, 64, |x| (0.1 * x.cos()).exp());
        assert!((&f - &want).l2_norm() < 1e-13);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("1 +").is_err());
        assert!(Expr::parse("tan(x)").is_err());
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("(1").is_err());
        assert!(field("1/(x-x)", 8, 32).is_err());
    }
}
