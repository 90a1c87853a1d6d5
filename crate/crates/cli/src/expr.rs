//! Arithmetic expressions over state and control coordinates.
//!
//! Grammar: `+ - * /` with the usual precedence, unary minus, parentheses,
//! numeric literals, the variables `t`, `x1..xd`, `u1..`, `v1..`, and the
//! functions `abs`, `exp`, `sin`, `cos`, `sqrt`, `min(a, b)`, `max(a, b)`.
//! Expressions are parsed once and evaluated against slices.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    T,
    X(usize),
    U(usize),
    V(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Abs,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the expression text.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.offset + 1, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Variable values for one evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub v: &'a [f64],
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let mut p = Parser { src: source.as_bytes(), pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Largest index used per variable kind: `(x, u, v)`, 1-based, 0 if unused.
    pub fn max_indices(&self) -> (usize, usize, usize) {
        fn walk(n: &Node, acc: &mut (usize, usize, usize)) {
            match n {
                Node::Var(Var::X(k)) => acc.0 = acc.0.max(k + 1),
                Node::Var(Var::U(k)) => acc.1 = acc.1.max(k + 1),
                Node::Var(Var::V(k)) => acc.2 = acc.2.max(k + 1),
                Node::Neg(a) => walk(a, acc),
                Node::Bin(_, a, b) => {
                    walk(a, acc);
                    walk(b, acc);
                }
                Node::Call(_, args) => args.iter().for_each(|a| walk(a, acc)),
                Node::Num(_) | Node::Var(Var::T) => {}
            }
        }
        let mut acc = (0, 0, 0);
        walk(&self.root, &mut acc);
        acc
    }

    pub fn uses_time(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Var(Var::T) => true,
                Node::Neg(a) => walk(a),
                Node::Bin(_, a, b) => walk(a) || walk(b),
                Node::Call(_, args) => args.iter().any(walk),
                Node::Num(_) | Node::Var(_) => false,
            }
        }
        walk(&self.root)
    }

    pub fn uses_controls(&self) -> bool {
        let (_, u, v) = self.max_indices();
        u > 0 || v > 0
    }

    /// Evaluates the expression; indices were checked against the slices at load time.
    pub fn eval(&self, env: &Env<'_>) -> f64 {
        eval(&self.root, env)
    }
}

fn eval(n: &Node, env: &Env<'_>) -> f64 {
    match n {
        Node::Num(c) => *c,
        Node::Var(Var::T) => env.t,
        Node::Var(Var::X(k)) => env.x[*k],
        Node::Var(Var::U(k)) => env.u[*k],
        Node::Var(Var::V(k)) => env.v[*k],
        Node::Neg(a) => -eval(a, env),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, env), eval(b, env));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                _ => a / b,
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], env);
            match f {
                Func::Abs => a.abs(),
                Func::Exp => a.exp(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Sqrt => a.sqrt(),
                Func::Min => a.min(eval(&args[1], env)),
                Func::Max => a.max(eval(&args[1], env)),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            lhs = Node::Bin(c as char, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(self.error("expected a number, variable, function or '('")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse().map(Node::Num).map_err(|_| ParseError { offset: start, message: format!("bad number '{text}'") })
    }

    fn ident(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        let func = match name {
            "abs" => Some(Func::Abs),
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            "min" => Some(Func::Min),
            "max" => Some(Func::Max),
            _ => None,
        };
        if let Some(f) = func {
            self.expect(b'(')?;
            let mut args = vec![self.expr()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(b')')?;
            if args.len() != f.arity() {
                return Err(ParseError {
                    offset: start,
                    message: format!("{name} takes {} argument(s), got {}", f.arity(), args.len()),
                });
            }
            return Ok(Node::Call(f, args));
        }
        if name == "t" {
            return Ok(Node::Var(Var::T));
        }
        let bad = || ParseError { offset: start, message: format!("unknown identifier '{name}'") };
        let (kind, digits) = name.split_at(1);
        let index: usize = digits.parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(ParseError { offset: start, message: format!("variable indices start at 1 in '{name}'") });
        }
        match kind {
            "x" => Ok(Node::Var(Var::X(index - 1))),
            "u" => Ok(Node::Var(Var::U(index - 1))),
            "v" => Ok(Node::Var(Var::V(index - 1))),
            _ => Err(bad()),
        }
    }
}
