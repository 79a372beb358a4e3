//! Coefficient expressions for the SDE estimators.
//!
//! ```text
//! expr   = term { ("+" | "-") term } ;
//! term   = unary { ("*" | "/") unary } ;
//! unary  = "-" unary | atom ;
//! atom   = number | "t" | "x" | call | "(" expr ")" ;
//! call   = ("min" | "max") "(" expr "," expr { "," expr } ")"
//!        | "clip" "(" expr "," expr "," expr ")" ;
//! number = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```
//!
//! `clip(e, lo, hi)` is `min(max(e, lo), hi)`. Whitespace is ignored.

use std::fmt;
use std::str::FromStr;

use crate::error::GeneratorError;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    T,
    X,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Min(Vec<Node>),
    Max(Vec<Node>),
    Clip(Box<[Node; 3]>),
}

impl Node {
    fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::T => t,
            Node::X => x,
            Node::Neg(a) => -a.eval(t, x),
            Node::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Node::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Node::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Node::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Node::Min(v) => v.iter().map(|n| n.eval(t, x)).fold(f64::INFINITY, f64::min),
            Node::Max(v) => v.iter().map(|n| n.eval(t, x)).fold(f64::NEG_INFINITY, f64::max),
            Node::Clip(a) => a[0].eval(t, x).max(a[1].eval(t, x)).min(a[2].eval(t, x)),
        }
    }
}

/// A parsed coefficient `f(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    /// Parses an expression; see the module documentation for the grammar.
    pub fn parse(src: &str) -> Result<Self, GeneratorError> {
        let mut p = Parser { chars: src.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0 };
        let root = p.expr()?;
        if p.pos != p.chars.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Expr { source: src.trim().to_string(), root })
    }

    /// A constant expression.
    pub fn constant(v: f64) -> Self {
        Expr { source: v.to_string(), root: Node::Num(v) }
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.root.eval(t, x)
    }

    /// `true` when the expression does not mention `x`.
    pub fn is_state_independent(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::X => false,
                Node::Num(_) | Node::T => true,
                Node::Neg(a) => walk(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => walk(a) && walk(b),
                Node::Min(v) | Node::Max(v) => v.iter().all(walk),
                Node::Clip(a) => a.iter().all(walk),
            }
        }
        walk(&self.root)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl FromStr for Expr {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, what: &str) -> GeneratorError {
        GeneratorError::Expression(format!("{what} at position {}", self.pos))
    }

    fn peek(&self) -> Option<char> {
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

    fn expect(&mut self, c: char) -> Result<(), GeneratorError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Node, GeneratorError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, GeneratorError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, GeneratorError> {
        if self.eat('-') {
            Ok(Node::Neg(Box::new(self.unary()?)))
        } else {
            self.atom()
        }
    }

    fn args(&mut self) -> Result<Vec<Node>, GeneratorError> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn atom(&mut self) -> Result<Node, GeneratorError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                match word.as_str() {
                    "t" => Ok(Node::T),
                    "x" => Ok(Node::X),
                    "min" | "max" => {
                        let a = self.args()?;
                        if a.len() < 2 {
                            return Err(self.error(&format!("`{word}` needs at least two arguments")));
                        }
                        Ok(if word == "min" { Node::Min(a) } else { Node::Max(a) })
                    }
                    "clip" => {
                        let a: [Node; 3] =
                            self.args()?.try_into().map_err(|_| self.error("`clip` takes exactly three arguments"))?;
                        Ok(Node::Clip(Box::new(a)))
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier `{word}`")))
                    }
                }
            }
            Some(c) => Err(self.error(&format!("unexpected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<Node, GeneratorError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>().map(Node::Num).map_err(|_| {
            self.pos = start;
            self.error(&format!("bad number `{text}`"))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("1 + 2*x - t/4").unwrap();
        assert_eq!(e.eval(2.0, 3.0), 6.5);
        assert_eq!(Expr::parse("-x*-2").unwrap().eval(0.0, 1.5), 3.0);
        assert_eq!(Expr::parse("clip(-x, -1, 0.5)").unwrap().eval(0.0, -3.0), 0.5);
        assert_eq!(Expr::parse("min(x, t, 0.25)").unwrap().eval(0.5, 1.0), 0.25);
        assert_eq!(Expr::parse("max(1e-1, 2.5E0 * t)").unwrap().eval(0.0, 0.0), 0.1);
        assert!(Expr::parse("(t+1)*(x-1)").unwrap().is_state_independent() == false);
        assert!(Expr::parse("1 + t").unwrap().is_state_independent());
    }

    #[test]
    fn syntax_errors() {
        for bad in ["", "1 +", "sin(x)", "clip(x, 1)", "min(x)", "(x", "x y", "1.2.3", "y"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }
}
