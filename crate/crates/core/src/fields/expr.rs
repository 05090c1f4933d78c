//! Small expression language for user fields, differentiated in forward
//! mode with second-order jets.
//!
//! Grammar: `+ - * / ^`, parentheses, unary minus, the functions
//! `tanh exp sin cos`, the constants `pi` and `e`, and the variables
//! `x1 x2` (also `x y`). `^` binds tighter than unary minus and is
//! right-associative.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::{Mat2, Point2};

/// Value, gradient and Hessian (xx, xy, yy) carried together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: [0.0; 2], h: [0.0; 3] }
    }

    pub fn variable(v: f64, index: usize) -> Self {
        let mut g = [0.0; 2];
        g[index] = 1.0;
        Jet { v, g, h: [0.0; 3] }
    }

    fn is_constant(&self) -> bool {
        self.g == [0.0; 2] && self.h == [0.0; 3]
    }

    /// Chain rule for a scalar function with derivatives `d1`, `d2` at `self.v`.
    fn chain(&self, f: f64, d1: f64, d2: f64) -> Jet {
        let [gx, gy] = self.g;
        Jet {
            v: f,
            g: [d1 * gx, d1 * gy],
            h: [
                d1 * self.h[0] + d2 * gx * gx,
                d1 * self.h[1] + d2 * gx * gy,
                d1 * self.h[2] + d2 * gy * gy,
            ],
        }
    }

    pub fn tanh(self) -> Jet {
        let t = self.v.tanh();
        let s = super::sech2(self.v);
        self.chain(t, s, -2.0 * t * s)
    }

    pub fn exp(self) -> Jet {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn ln(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn recip(self) -> Jet {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn pow(self, exponent: Jet) -> Jet {
        if exponent.is_constant() {
            let c = exponent.v;
            if c == c.round() && c.abs() < 64.0 {
                let n = c as i32;
                let d1 = if n == 0 { 0.0 } else { c * self.v.powi(n - 1) };
                let d2 = if n == 0 || n == 1 { 0.0 } else { c * (c - 1.0) * self.v.powi(n - 2) };
                return self.chain(self.v.powi(n), d1, d2);
            }
            return self.chain(self.v.powf(c), c * self.v.powf(c - 1.0), c * (c - 1.0) * self.v.powf(c - 2.0));
        }
        (exponent * self.ln()).exp()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { v: -self.v, g: [-self.g[0], -self.g[1]], h: [-self.h[0], -self.h[1], -self.h[2]] }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            g: [a.v * b.g[0] + b.v * a.g[0], a.v * b.g[1] + b.v * a.g[1]],
            h: [
                a.v * b.h[0] + b.v * a.h[0] + 2.0 * a.g[0] * b.g[0],
                a.v * b.h[1] + b.v * a.h[1] + a.g[0] * b.g[1] + a.g[1] * b.g[0],
                a.v * b.h[2] + b.v * a.h[2] + 2.0 * a.g[1] * b.g[1],
            ],
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Tanh,
    Exp,
    Sin,
    Cos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, p: &Point2) -> Jet {
        match self {
            Expr::Num(c) => Jet::constant(*c),
            Expr::Var(i) => Jet::variable(p[*i], *i),
            Expr::Neg(a) => -a.eval(p),
            Expr::Add(a, b) => a.eval(p) + b.eval(p),
            Expr::Sub(a, b) => a.eval(p) - b.eval(p),
            Expr::Mul(a, b) => a.eval(p) * b.eval(p),
            Expr::Div(a, b) => a.eval(p) / b.eval(p),
            Expr::Pow(a, b) => a.eval(p).pow(b.eval(p)),
            Expr::Call(f, a) => {
                let x = a.eval(p);
                match f {
                    Func::Tanh => x.tanh(),
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse()
                .map_err(|_| Error::Expression(format!("bad number '{text}' at {start}")))?;
            out.push((start, Token::Num(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Token::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected '{c}' at {i}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn error(&self, what: &str) -> Error {
        match self.tokens.get(self.pos) {
            Some((at, tok)) => Error::Expression(format!("{what}, found {tok:?} at {at}")),
            None => Error::Expression(format!("{what}, found end of input")),
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
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
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expected a value"));
        };
        match tok {
            Token::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Token::Op('(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Token::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "x1" | "x" => return Ok(Expr::Var(0)),
                    "x2" | "y" => return Ok(Expr::Var(1)),
                    "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => return Ok(Expr::Num(std::f64::consts::E)),
                    "tanh" => Func::Tanh,
                    "exp" => Func::Exp,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("unknown name"));
                    }
                };
                if !self.eat('(') {
                    return Err(self.error("expected '(' after function name"));
                }
                let arg = self.sum()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Token::Op(_) => Err(self.error("expected a value")),
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Expr> {
    let mut parser = Parser { tokens: tokenize(src)?, pos: 0 };
    let e = parser.sum()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Debug, Clone)]
pub struct ExprField {
    expr: Expr,
    label: String,
}

impl ExprField {
    pub fn parse(src: &str) -> Result<Self> {
        Ok(ExprField { expr: parse_expression(src)?, label: src.trim().to_string() })
    }

    pub fn jet(&self, p: &Point2) -> Jet {
        self.expr.eval(p)
    }
}

impl ScalarField for ExprField {
    fn value(&self, p: &Point2) -> f64 {
        self.jet(p).v
    }

    fn gradient(&self, p: &Point2) -> Point2 {
        let g = self.jet(p).g;
        Point2::new(g[0], g[1])
    }

    fn hessian(&self, p: &Point2) -> Mat2 {
        let h = self.jet(p).h;
        Mat2::new(h[0], h[1], h[1], h[2])
    }

    fn label(&self) -> &str {
        &self.label
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::tests::check_derivatives;
    use crate::fields::{tanh_layer, ScalarField};
    use approx::assert_relative_eq;

    #[test]
    fn precedence() {
        let p = Point2::new(2.0, 3.0);
        let v = |s: &str| ExprField::parse(s).unwrap().value(&p);
        assert_eq!(v("1 + 2 * 3"), 7.0);
        assert_eq!(v("-x1^2"), -4.0);
        assert_eq!(v("2^3^2"), 512.0);
        assert_eq!(v("(x1 + x2) / 5"), 1.0);
        assert_eq!(v("x - y"), -1.0);
        assert_eq!(v("2^-1"), 0.5);
        assert_relative_eq!(v("1.5e1 + 2E-1"), 15.2);
        assert_relative_eq!(v("cos(pi)"), -1.0);
        assert_relative_eq!(v("e"), std::f64::consts::E);
    }

    #[test]
    fn errors() {
        for bad in ["", "x1 +", "(x1", "foo(x1)", "x3", "sin x1", "1 2", "x1 $ 2"] {
            assert!(parse_expression(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn matches_builtin_tanh() {
        let f = ExprField::parse("tanh(60*x2) - tanh(60*(x1 - x2) - 30)").unwrap();
        let t = tanh_layer();
        for p in [Point2::new(0.51, 0.005), Point2::new(0.2, 0.7), Point2::new(0.9, 0.41)] {
            assert_relative_eq!(f.value(&p), t.value(&p), epsilon = 1e-13);
            assert_relative_eq!(f.gradient(&p), t.gradient(&p), max_relative = 1e-12);
            assert_relative_eq!(f.hessian(&p), t.hessian(&p), max_relative = 1e-10, epsilon = 1e-9);
        }
    }

    #[test]
    fn jets_match_differences() {
        for src in [
            "x1^3*x2 - 2*x2^2 + 1",
            "exp(x1)*sin(2*x2) / (1 + x1^2)",
            "cos(x1*x2) + x1^x2",
            "x1^0.5 + tanh(3*x2 - x1)",
        ] {
            let f = ExprField::parse(src).unwrap();
            check_derivatives(&f, Point2::new(0.2, 0.2), Point2::new(1.5, 1.5), 11);
        }
    }
}
