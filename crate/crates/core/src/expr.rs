//! A small expression language for coefficients and initial profiles.
//!
//! Expressions are functions of time `t` and radius `r`, with the named
//! constants `pi` and `e`, optional user parameters, and the functions
//! `sin cos exp log sqrt abs tanh` (one argument) and `min max` (two).
//!
//! Precedence, tightest first: `^` (right-associative), unary `-`,
//! `* /`, `+ -`. So `-2^2` is `-4` and `2^3^2` is `512`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Longest accepted source text, in bytes.
pub const MAX_SOURCE_LEN: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}", .expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("expression is empty")]
    Empty,
    #[error("expression longer than {MAX_SOURCE_LEN} bytes")]
    TooLong,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{node}` at argument {value}")]
    Domain { node: &'static str, value: f64 },
    #[error("parameter `{0}` is not bound")]
    UnboundParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(Constant),
    Param(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parse an expression with no user parameters.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with_params(text, &[])
}

/// Parse an expression that may reference the given parameter names.
pub fn parse_with_params(text: &str, params: &[&str]) -> Result<Expr, ParseError> {
    if text.len() > MAX_SOURCE_LEN {
        return Err(ParseError::TooLong);
    }
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        params,
    };
    let expr = parser.sum()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.syntax(vec!["operator", "end of input"]));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn syntax(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            expected,
        }
    }

    fn expect(&mut self, byte: u8, what: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(vec![what]))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // right operand may carry its own sign: 2^-1
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                self.expect(b')', ")")?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(self.syntax(vec!["number", "identifier", "("])),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.syntax(vec!["number"]));
        }
        // exponent only when digits follow, so `2e` stays a syntax error
        // rather than swallowing the constant `e`
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: vec!["number"],
        })?;
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(', "(")?;
            let mut args = vec![self.sum()?];
            for _ in 1..func.arity() {
                self.expect(b',', ",")?;
                args.push(self.sum()?);
            }
            self.expect(b')', ")")?;
            return Ok(Expr::Call(func, args));
        }
        match name {
            "t" => Ok(Expr::Var(Var::T)),
            "r" => Ok(Expr::Var(Var::R)),
            "pi" => Ok(Expr::Const(Constant::Pi)),
            "e" => Ok(Expr::Const(Constant::E)),
            _ if self.params.contains(&name) => Ok(Expr::Param(name.to_string())),
            _ => Err(ParseError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            }),
        }
    }
}

fn check(node: &'static str, arg: f64, out: f64) -> Result<f64, EvalError> {
    if out.is_finite() {
        Ok(out)
    } else {
        Err(EvalError::Domain { node, value: arg })
    }
}

/// Apply a function to already-evaluated arguments with the domain rules of
/// the language: no NaN or infinity ever escapes.
pub fn apply_func(func: Func, args: &[f64]) -> Result<f64, EvalError> {
    let x = args[0];
    let name = func.name();
    match func {
        Func::Sin => check(name, x, x.sin()),
        Func::Cos => check(name, x, x.cos()),
        Func::Exp => check(name, x, x.exp()),
        Func::Log if x <= 0.0 => Err(EvalError::Domain { node: name, value: x }),
        Func::Log => check(name, x, x.ln()),
        Func::Sqrt if x < 0.0 => Err(EvalError::Domain { node: name, value: x }),
        Func::Sqrt => check(name, x, x.sqrt()),
        Func::Abs => Ok(x.abs()),
        Func::Tanh => check(name, x, x.tanh()),
        Func::Min => Ok(x.min(args[1])),
        Func::Max => Ok(x.max(args[1])),
    }
}

/// Apply a binary operator with the same domain rules as [`apply_func`].
pub fn apply_binary(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    match op {
        BinOp::Add => check("+", a, a + b),
        BinOp::Sub => check("-", a, a - b),
        BinOp::Mul => check("*", a, a * b),
        BinOp::Div if b == 0.0 => Err(EvalError::Domain { node: "/", value: b }),
        BinOp::Div => check("/", a, a / b),
        BinOp::Pow => check("^", a, a.powf(b)),
    }
}

impl Expr {
    /// Evaluate at `(t, r)` with parameters looked up by name.
    pub fn eval(&self, t: f64, r: f64, params: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_with(t, r, &|name| params.get(name).copied())
    }

    fn eval_with(
        &self,
        t: f64,
        r: f64,
        lookup: &dyn Fn(&str) -> Option<f64>,
    ) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::T) => Ok(t),
            Expr::Var(Var::R) => Ok(r),
            Expr::Const(c) => Ok(c.value()),
            Expr::Param(name) => {
                lookup(name).ok_or_else(|| EvalError::UnboundParameter(name.clone()))
            }
            Expr::Neg(inner) => Ok(-inner.eval_with(t, r, lookup)?),
            Expr::Binary(op, lhs, rhs) => {
                let a = lhs.eval_with(t, r, lookup)?;
                let b = rhs.eval_with(t, r, lookup)?;
                apply_binary(*op, a, b)
            }
            Expr::Call(func, args) => {
                let mut vals = [0.0; 2];
                for (slot, arg) in vals.iter_mut().zip(args) {
                    *slot = arg.eval_with(t, r, lookup)?;
                }
                apply_func(*func, &vals[..args.len()])
            }
        }
    }

    /// Evaluate an expression with no free parameters.
    pub fn eval_at(&self, t: f64, r: f64) -> Result<f64, EvalError> {
        self.eval_with(t, r, &|_| None)
    }

    /// Replace every parameter by its bound value.
    pub fn bind(&self, params: &HashMap<String, f64>) -> Result<Expr, EvalError> {
        Ok(match self {
            Expr::Param(name) => Expr::Num(
                *params
                    .get(name)
                    .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            ),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.bind(params)?)),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.bind(params)?), Box::new(b.bind(params)?))
            }
            Expr::Call(f, args) => Expr::Call(
                *f,
                args.iter().map(|a| a.bind(params)).collect::<Result<_, _>>()?,
            ),
            other => other.clone(),
        })
    }

    pub fn mentions(&self, var: Var) -> bool {
        match self {
            Expr::Var(v) => *v == var,
            Expr::Num(_) | Expr::Const(_) | Expr::Param(_) => false,
            Expr::Neg(inner) => inner.mentions(var),
            Expr::Binary(_, a, b) => a.mentions(var) || b.mentions(var),
            Expr::Call(_, args) => args.iter().any(|a| a.mentions(var)),
        }
    }

    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(name) if !out.contains(name) => out.push(name.clone()),
            Expr::Neg(inner) => inner.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_params(out)),
            _ => {}
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Neg(inner) => 1 + inner.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
            Expr::Call(_, args) => 1 + args.iter().map(Expr::depth).max().unwrap_or(0),
            _ => 1,
        }
    }
}

/// Fully parenthesized form; reparsing it gives back the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::R) => f.write_str("r"),
            Expr::Const(Constant::Pi) => f.write_str("pi"),
            Expr::Const(Constant::E) => f.write_str("e"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(inner) => write!(f, "(-{inner})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, t: f64, r: f64) -> Result<f64, EvalError> {
        parse(text).unwrap().eval_at(t, r)
    }

    #[test]
    fn sum_at_root() {
        let ast = parse("1 + 0.5*sin(2*pi*t)").unwrap();
        assert!(matches!(ast, Expr::Binary(BinOp::Add, _, _)));
        assert!((ast.eval_at(0.25, 0.0).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(eval("2^3^2", 0.0, 0.0).unwrap(), 512.0);
        assert_eq!(eval("-2^2", 0.0, 0.0).unwrap(), -4.0);
        assert_eq!(eval("2^-1", 0.0, 0.0).unwrap(), 0.5);
        assert_eq!(eval("8 - 2 - 1", 0.0, 0.0).unwrap(), 5.0);
        assert_eq!(eval("8 / 2 / 2", 0.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        match parse("sin(t") {
            Err(ParseError::Syntax { offset, expected }) => {
                assert_eq!(offset, 5);
                assert_eq!(expected, vec![")"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifiers() {
        assert!(matches!(
            parse("1 + q"),
            Err(ParseError::UnknownIdentifier { ref name, offset: 4 }) if name == "q"
        ));
        let ast = parse_with_params("a*r", &["a"]).unwrap();
        let mut params = HashMap::new();
        assert_eq!(
            ast.eval(0.0, 1.0, &params),
            Err(EvalError::UnboundParameter("a".into()))
        );
        params.insert("a".to_string(), 3.0);
        assert_eq!(ast.eval(0.0, 2.0, &params).unwrap(), 6.0);
        assert_eq!(ast.bind(&params).unwrap().eval_at(0.0, 2.0).unwrap(), 6.0);
    }

    #[test]
    fn simple_evaluations() {
        assert_eq!(eval("t*r", 2.0, 3.0).unwrap(), 6.0);
        assert_eq!(eval("max(0, r-1)", 0.0, 0.5).unwrap(), 0.0);
        assert_eq!(eval("min(2, r)", 0.0, 5.0).unwrap(), 2.0);
        assert_eq!(eval("abs(-3)", 0.0, 0.0).unwrap(), 3.0);
        assert!((eval("e", 0.0, 0.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert_eq!(eval("1.5e2", 0.0, 0.0).unwrap(), 150.0);
        assert_eq!(eval(".5", 0.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            eval("sqrt(r-2)", 0.0, 1.0),
            Err(EvalError::Domain { node: "sqrt", .. })
        ));
        assert!(matches!(eval("log(r)", 0.0, 0.0), Err(EvalError::Domain { node: "log", .. })));
        assert!(matches!(eval("1/r", 0.0, 0.0), Err(EvalError::Domain { node: "/", .. })));
        assert!(matches!(eval("(-1)^0.5", 0.0, 0.0), Err(EvalError::Domain { node: "^", .. })));
        assert!(matches!(eval("exp(1000)", 0.0, 0.0), Err(EvalError::Domain { node: "exp", .. })));
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse("   "), Err(ParseError::Empty));
        assert!(matches!(parse("1 +"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("2e"), Err(ParseError::Syntax { offset: 1, .. })));
        assert!(matches!(parse("max(1)"), Err(ParseError::Syntax { offset: 5, .. })));
        assert!(matches!(parse("1 2"), Err(ParseError::Syntax { offset: 2, .. })));
        let long = "1".repeat(MAX_SOURCE_LEN + 1);
        assert_eq!(parse(&long), Err(ParseError::TooLong));
    }

    #[test]
    fn variable_dependence() {
        let ast = parse("1 + sin(t)").unwrap();
        assert!(ast.mentions(Var::T));
        assert!(!ast.mentions(Var::R));
    }

    #[test]
    fn display_reparses() {
        let ast = parse("-2^-x*max(r, 1e-7) + exp(t)/3", ).err();
        assert!(ast.is_some());
        let ast = parse_with_params("-2^-x*max(r, 1e-7) + exp(t)/3", &["x"]).unwrap();
        let printed = ast.to_string();
        assert_eq!(parse_with_params(&printed, &["x"]).unwrap(), ast);
    }
}
