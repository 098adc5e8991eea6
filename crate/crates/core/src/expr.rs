//! Arithmetic expressions for structural equations.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident | ident '(' args ')' | '(' sum ')'
//!          | 'noise' ('normal' | 'uniform') '(' number ',' number ')'
//! ```

use std::fmt;

use thiserror::Error;

use crate::scm::NoiseSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("column {col}: {message}")]
    Syntax { col: usize, message: String },
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("function {name} takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Reference by name; resolved to a node or a latent when the SEM is built.
    Var(String),
    /// The owning node's own exogenous noise term.
    Noise,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Cos(Box<Expr>),
    Sin(Box<Expr>),
    Sigmoid(Box<Expr>),
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Expr {
    /// Names referenced by `Var`, in first-occurrence order, deduplicated.
    pub fn vars(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(name) = e {
                if !out.contains(&name.as_str()) {
                    out.push(name.as_str());
                }
            }
        });
        out
    }

    pub fn uses_noise(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Noise));
        found
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Noise => {}
            Expr::Neg(a) | Expr::Exp(a) | Expr::Cos(a) | Expr::Sin(a) | Expr::Sigmoid(a) => {
                a.visit(f)
            }
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Evaluates with a name lookup. Used for tests and one-off evaluation;
    /// sampling goes through [`Compiled`].
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> f64, noise: f64) -> f64 {
        let r = |e: &Expr| e.eval_with(lookup, noise);
        match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => lookup(name),
            Expr::Noise => noise,
            Expr::Neg(a) => -r(a),
            Expr::Add(a, b) => r(a) + r(b),
            Expr::Sub(a, b) => r(a) - r(b),
            Expr::Mul(a, b) => r(a) * r(b),
            Expr::Div(a, b) => r(a) / r(b),
            Expr::Pow(a, b) => r(a).powf(r(b)),
            Expr::Exp(a) => r(a).exp(),
            Expr::Cos(a) => r(a).cos(),
            Expr::Sin(a) => r(a).sin(),
            Expr::Sigmoid(a) => sigmoid(r(a)),
        }
    }

    /// Resolves names to slots. `resolve` maps a name to `Slot::Node(i)` or
    /// `Slot::Latent(j)`; unknown names are returned as the error.
    pub fn compile(&self, resolve: &dyn Fn(&str) -> Option<Slot>) -> Result<Compiled, String> {
        let c = |e: &Expr| e.compile(resolve).map(Box::new);
        Ok(match self {
            Expr::Const(v) => Compiled::Const(*v),
            Expr::Var(name) => match resolve(name) {
                Some(Slot::Node(i)) => Compiled::Node(i),
                Some(Slot::Latent(j)) => Compiled::Latent(j),
                None => return Err(name.clone()),
            },
            Expr::Noise => Compiled::Noise,
            Expr::Neg(a) => Compiled::Neg(c(a)?),
            Expr::Add(a, b) => Compiled::Add(c(a)?, c(b)?),
            Expr::Sub(a, b) => Compiled::Sub(c(a)?, c(b)?),
            Expr::Mul(a, b) => Compiled::Mul(c(a)?, c(b)?),
            Expr::Div(a, b) => Compiled::Div(c(a)?, c(b)?),
            Expr::Pow(a, b) => Compiled::Pow(c(a)?, c(b)?),
            Expr::Exp(a) => Compiled::Exp(c(a)?),
            Expr::Cos(a) => Compiled::Cos(c(a)?),
            Expr::Sin(a) => Compiled::Sin(c(a)?),
            Expr::Sigmoid(a) => Compiled::Sigmoid(c(a)?),
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::Var(name) => f.write_str(name),
            Expr::Noise => f.write_str("noise"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Sigmoid(a) => write!(f, "sigmoid({a})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Node(usize),
    Latent(usize),
}

/// Index-resolved expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Compiled {
    Const(f64),
    Node(usize),
    Latent(usize),
    Noise,
    Neg(Box<Compiled>),
    Add(Box<Compiled>, Box<Compiled>),
    Sub(Box<Compiled>, Box<Compiled>),
    Mul(Box<Compiled>, Box<Compiled>),
    Div(Box<Compiled>, Box<Compiled>),
    Pow(Box<Compiled>, Box<Compiled>),
    Exp(Box<Compiled>),
    Cos(Box<Compiled>),
    Sin(Box<Compiled>),
    Sigmoid(Box<Compiled>),
}

impl Compiled {
    pub fn eval(&self, nodes: &[f64], latents: &[f64], noise: f64) -> f64 {
        let r = |e: &Compiled| e.eval(nodes, latents, noise);
        match self {
            Compiled::Const(c) => *c,
            Compiled::Node(i) => nodes[*i],
            Compiled::Latent(j) => latents[*j],
            Compiled::Noise => noise,
            Compiled::Neg(a) => -r(a),
            Compiled::Add(a, b) => r(a) + r(b),
            Compiled::Sub(a, b) => r(a) - r(b),
            Compiled::Mul(a, b) => r(a) * r(b),
            Compiled::Div(a, b) => r(a) / r(b),
            Compiled::Pow(a, b) => r(a).powf(r(b)),
            Compiled::Exp(a) => r(a).exp(),
            Compiled::Cos(a) => r(a).cos(),
            Compiled::Sin(a) => r(a).sin(),
            Compiled::Sigmoid(a) => sigmoid(r(a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
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
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ExprError::Syntax {
                col: start + 1,
                message: format!("bad number {s:?}"),
            })?;
            out.push((start + 1, Tok::Num(v)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start + 1, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((i + 1, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                col: i + 1,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
    noise: Option<NoiseSpec>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(c, _)| *c)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            col: self.col(),
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected {c:?}"))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
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

    fn product(&mut self) -> Result<Expr, ExprError> {
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

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let neg = self.eat('-');
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.err("expected a number"),
        }
    }

    fn noise(&mut self) -> Result<Expr, ExprError> {
        if self.noise.is_some() {
            return self.err("noise may appear once per equation");
        }
        let kind = match self.peek() {
            Some(Tok::Ident(k)) => k.clone(),
            _ => return self.err("expected normal(..) or uniform(..) after noise"),
        };
        self.pos += 1;
        self.expect('(')?;
        let a = self.number()?;
        self.expect(',')?;
        let b = self.number()?;
        self.expect(')')?;
        let spec = match kind.as_str() {
            "normal" if b >= 0.0 => NoiseSpec::Normal { mean: a, std: b },
            "uniform" if a <= b => NoiseSpec::Uniform { lo: a, hi: b },
            "normal" => return self.err("normal std must be >= 0"),
            "uniform" => return self.err("uniform needs lo <= hi"),
            other => return self.err(format!("unknown noise distribution {other:?}")),
        };
        self.noise = Some(spec);
        Ok(Expr::Noise)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "noise" {
                    return self.noise();
                }
                if !self.eat('(') {
                    return Ok(Expr::Var(name));
                }
                let mut args = vec![self.sum()?];
                while self.eat(',') {
                    args.push(self.sum()?);
                }
                self.expect(')')?;
                call(&name, args)
            }
            _ => self.err("expected an expression"),
        }
    }
}

fn call(name: &str, mut args: Vec<Expr>) -> Result<Expr, ExprError> {
    let expected = match name {
        "exp" | "cos" | "sin" | "sigmoid" => 1,
        "pow" => 2,
        _ => return Err(ExprError::UnknownFunction(name.to_string())),
    };
    if args.len() != expected {
        return Err(ExprError::Arity {
            name: name.to_string(),
            expected,
            got: args.len(),
        });
    }
    let a = Box::new(args.remove(0));
    Ok(match name {
        "exp" => Expr::Exp(a),
        "cos" => Expr::Cos(a),
        "sin" => Expr::Sin(a),
        "sigmoid" => Expr::Sigmoid(a),
        _ => Expr::Pow(a, Box::new(args.remove(0))),
    })
}

/// Parses an expression. A `noise normal(m,s)` / `noise uniform(a,b)` term
/// becomes [`Expr::Noise`] and its distribution is returned alongside.
pub fn parse_expr(text: &str) -> Result<(Expr, Option<NoiseSpec>), ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end_col: text.chars().count() + 1,
        noise: None,
    };
    let e = p.sum()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok((e, p.noise))
}
