//! Expression language for symbols `a(x, ξ)`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' signed-number)?
//! atom   := number | 'x' | 'xi' | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Unary minus parses as `0 - e`. Functions: `sin cos exp abs jb phi0 chi` (one
//! argument), `weier(r, e)` and `psi(j, e)` whose first argument is a literal.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid, C64};
use crate::lp::{CutoffProfile, LPPartition};
use crate::symbol::{weierstrass_value, Provenance, SampledSymbol, SeparableTerm};

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum DslError {
    #[error("parse error at offset {offset}: expected {expected}")]
    ParseError { offset: usize, expected: String },
    #[error("`{name}` takes {want} argument(s), got {got}")]
    ArityError { name: String, got: usize, want: usize },
    #[error("unknown name `{name}`")]
    UnknownName { name: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Var {
    X,
    Xi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
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

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Abs,
    Jb,
    Weier,
    Psi,
    Phi0,
    Chi,
}

impl Func {
    pub const ALL: [Func; 9] = [Func::Sin, Func::Cos, Func::Exp, Func::Abs, Func::Jb, Func::Weier, Func::Psi, Func::Phi0, Func::Chi];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Jb => "jb",
            Func::Weier => "weier",
            Func::Psi => "psi",
            Func::Phi0 => "phi0",
            Func::Chi => "chi",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Weier | Func::Psi => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SymbolExpr {
    Number(f64),
    Var(Var),
    Binary(BinOp, Box<SymbolExpr>, Box<SymbolExpr>),
    Call(Func, Vec<SymbolExpr>),
}

impl SymbolExpr {
    pub fn binary(op: BinOp, l: SymbolExpr, r: SymbolExpr) -> Self {
        SymbolExpr::Binary(op, Box::new(l), Box::new(r))
    }

    fn deps(&self) -> (bool, bool) {
        match self {
            SymbolExpr::Number(_) => (false, false),
            SymbolExpr::Var(Var::X) => (true, false),
            SymbolExpr::Var(Var::Xi) => (false, true),
            SymbolExpr::Binary(_, l, r) => {
                let (a, b) = l.deps();
                let (c, d) = r.deps();
                (a || c, b || d)
            }
            SymbolExpr::Call(_, args) => args.iter().fold((false, false), |(a, b), e| {
                let (c, d) = e.deps();
                (a || c, b || d)
            }),
        }
    }

    pub fn depends_on_x(&self) -> bool {
        self.deps().0
    }

    pub fn depends_on_xi(&self) -> bool {
        self.deps().1
    }
}

/// Canonical fully parenthesised form; `parse(render(e)) == e`.
impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolExpr::Number(v) => write!(f, "{v}"),
            SymbolExpr::Var(Var::X) => f.write_str("x"),
            SymbolExpr::Var(Var::Xi) => f.write_str("xi"),
            SymbolExpr::Binary(BinOp::Pow, l, r) => write!(f, "({l}^{r})"),
            SymbolExpr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            SymbolExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

pub fn render(expr: &SymbolExpr) -> String {
    expr.to_string()
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(text: &str) -> std::result::Result<Vec<(Tok, usize)>, DslError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| DslError::ParseError { offset: start, expected: "a decimal number".into() })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                return Err(DslError::ParseError { offset: start, expected: "number, variable, function or operator".into() });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

const ATOM_EXPECTED: &str = "number, `x`, `xi`, function call or `(`";

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &str) -> std::result::Result<T, DslError> {
        Err(DslError::ParseError { offset: self.offset(), expected: expected.into() })
    }

    fn expr(&mut self) -> std::result::Result<SymbolExpr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = SymbolExpr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> std::result::Result<SymbolExpr, DslError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = SymbolExpr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> std::result::Result<SymbolExpr, DslError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(SymbolExpr::binary(BinOp::Sub, SymbolExpr::Number(0.0), inner));
        }
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let sign = match self.peek() {
            Tok::Minus => {
                self.bump();
                -1.0
            }
            Tok::Plus => {
                self.bump();
                1.0
            }
            _ => 1.0,
        };
        match self.peek() {
            Tok::Num(v) => {
                let v = sign * *v;
                self.bump();
                Ok(SymbolExpr::binary(BinOp::Pow, base, SymbolExpr::Number(v)))
            }
            _ => self.fail("a numeric exponent"),
        }
    }

    fn atom(&mut self) -> std::result::Result<SymbolExpr, DslError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(SymbolExpr::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.fail("`)`");
                }
                self.bump();
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "x" => return Ok(SymbolExpr::Var(Var::X)),
                    "xi" => return Ok(SymbolExpr::Var(Var::Xi)),
                    _ => {}
                }
                let Some(func) = Func::from_name(&name) else {
                    return Err(DslError::UnknownName { name });
                };
                if *self.peek() != Tok::LParen {
                    return self.fail("`(`");
                }
                self.bump();
                let mut args = Vec::new();
                let mut starts = Vec::new();
                loop {
                    starts.push(self.offset());
                    args.push(self.expr()?);
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                        }
                        Tok::RParen => {
                            self.bump();
                            break;
                        }
                        _ => return self.fail("`,` or `)`"),
                    }
                }
                if args.len() != func.arity() {
                    return Err(DslError::ArityError { name, got: args.len(), want: func.arity() });
                }
                match func {
                    Func::Weier if !matches!(args[0], SymbolExpr::Number(_)) => {
                        return Err(DslError::ParseError { offset: starts[0], expected: "a numeric literal exponent".into() });
                    }
                    Func::Psi => match args[0] {
                        SymbolExpr::Number(j) if j >= 0.0 && j.fract() == 0.0 && j <= 62.0 => {}
                        _ => {
                            return Err(DslError::ParseError { offset: starts[0], expected: "a non-negative integer level".into() });
                        }
                    },
                    _ => {}
                }
                Ok(SymbolExpr::Call(func, args))
            }
            _ => self.fail(ATOM_EXPECTED),
        }
    }
}

pub fn parse(text: &str) -> std::result::Result<SymbolExpr, DslError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("operator or end of input");
    }
    Ok(e)
}

enum Val {
    C(C64),
    X(Vec<C64>),
    Xi(Vec<C64>),
    F(Vec<C64>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shape {
    C,
    X,
    Xi,
    F,
}

impl Val {
    fn shape(&self) -> Shape {
        match self {
            Val::C(_) => Shape::C,
            Val::X(_) => Shape::X,
            Val::Xi(_) => Shape::Xi,
            Val::F(_) => Shape::F,
        }
    }

    fn at(&self, n: usize, j: usize, i: usize) -> C64 {
        match self {
            Val::C(c) => *c,
            Val::X(v) => v[j],
            Val::Xi(v) => v[i],
            Val::F(v) => v[i * n + j],
        }
    }
}

fn join(a: Shape, b: Shape) -> Shape {
    match (a, b) {
        (Shape::C, s) | (s, Shape::C) => s,
        (Shape::X, Shape::X) => Shape::X,
        (Shape::Xi, Shape::Xi) => Shape::Xi,
        _ => Shape::F,
    }
}

struct Ctx<'a> {
    grid: &'a PeriodicGrid,
    partition: &'a LPPartition,
    xs: Vec<f64>,
    ks: Vec<f64>,
}

type OpResult = std::result::Result<C64, &'static str>;

impl Ctx<'_> {
    fn domain(&self, shape: Shape, flat: usize, reason: &str) -> Error {
        let n = self.grid.size();
        let (j, i) = match shape {
            Shape::C => (0, 0),
            Shape::X => (flat, 0),
            Shape::Xi => (0, flat),
            Shape::F => (flat % n, flat / n),
        };
        Error::Domain { x_index: j, x: self.xs[j], k: self.grid.frequency(i), reason: reason.into() }
    }

    fn checked(&self, shape: Shape, flat: usize, v: OpResult) -> Result<C64> {
        match v {
            Ok(z) if z.re.is_finite() && z.im.is_finite() => Ok(z),
            Ok(_) => Err(self.domain(shape, flat, "non-finite value")),
            Err(reason) => Err(self.domain(shape, flat, reason)),
        }
    }

    fn map(&self, v: Val, f: impl Fn(C64) -> OpResult) -> Result<Val> {
        let shape = v.shape();
        let mapv = |xs: Vec<C64>| -> Result<Vec<C64>> {
            xs.into_iter().enumerate().map(|(i, z)| self.checked(shape, i, f(z))).collect()
        };
        Ok(match v {
            Val::C(c) => Val::C(self.checked(shape, 0, f(c))?),
            Val::X(xs) => Val::X(mapv(xs)?),
            Val::Xi(xs) => Val::Xi(mapv(xs)?),
            Val::F(xs) => Val::F(mapv(xs)?),
        })
    }

    fn combine(&self, a: &Val, b: &Val, f: impl Fn(C64, C64) -> OpResult) -> Result<Val> {
        let n = self.grid.size();
        let shape = join(a.shape(), b.shape());
        Ok(match shape {
            Shape::C => Val::C(self.checked(shape, 0, f(a.at(n, 0, 0), b.at(n, 0, 0)))?),
            Shape::X => Val::X((0..n).map(|j| self.checked(shape, j, f(a.at(n, j, 0), b.at(n, j, 0)))).collect::<Result<_>>()?),
            Shape::Xi => Val::Xi((0..n).map(|i| self.checked(shape, i, f(a.at(n, 0, i), b.at(n, 0, i)))).collect::<Result<_>>()?),
            Shape::F => Val::F(
                (0..n * n)
                    .map(|t| {
                        let (i, j) = (t / n, t % n);
                        self.checked(shape, t, f(a.at(n, j, i), b.at(n, j, i)))
                    })
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn eval(&self, e: &SymbolExpr) -> Result<Val> {
        match e {
            SymbolExpr::Number(v) => Ok(Val::C(C64::new(*v, 0.0))),
            SymbolExpr::Var(Var::X) => Ok(Val::X(self.xs.iter().map(|&x| C64::new(x, 0.0)).collect())),
            SymbolExpr::Var(Var::Xi) => Ok(Val::Xi(self.ks.iter().map(|&k| C64::new(k, 0.0)).collect())),
            SymbolExpr::Binary(BinOp::Pow, base, exp) => {
                let SymbolExpr::Number(p) = **exp else {
                    return Err(Error::Invalid("exponent must be a numeric literal".into()));
                };
                let b = self.eval(base)?;
                self.map(b, move |z| power(z, p))
            }
            SymbolExpr::Binary(op, l, r) => {
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                match op {
                    BinOp::Add => self.combine(&a, &b, |u, v| Ok(u + v)),
                    BinOp::Sub => self.combine(&a, &b, |u, v| Ok(u - v)),
                    BinOp::Mul => self.combine(&a, &b, |u, v| Ok(u * v)),
                    BinOp::Div => self.combine(&a, &b, |u, v| if v == C64::new(0.0, 0.0) { Err("division by zero") } else { Ok(u / v) }),
                    BinOp::Pow => unreachable!(),
                }
            }
            SymbolExpr::Call(func, args) => self.call(*func, args),
        }
    }

    fn call(&self, func: Func, args: &[SymbolExpr]) -> Result<Val> {
        let literal = |e: &SymbolExpr| match e {
            SymbolExpr::Number(v) => Ok(*v),
            _ => Err(Error::Invalid(format!("first argument of {} must be a literal", func.name()))),
        };
        match func {
            Func::Weier => {
                let r = literal(&args[0])?;
                let levels = self.grid.max_level();
                let v = self.eval(&args[1])?;
                self.map(v, move |z| {
                    if z.im == 0.0 {
                        Ok(C64::new(weierstrass_value(r, levels, z.re), 0.0))
                    } else {
                        Ok((0..=levels).map(|j| (z * (j as f64).exp2()).cos() * (-(j as f64) * r).exp2()).sum())
                    }
                })
            }
            Func::Psi => {
                let j = literal(&args[0])? as usize;
                let v = self.eval(&args[1])?;
                let part = self.partition;
                self.map(v, move |z| real_arg(z).map(|t| C64::new(part.psi(j, t), 0.0)))
            }
            _ => {
                let v = self.eval(&args[0])?;
                let part = self.partition;
                match func {
                    Func::Sin => self.map(v, |z| Ok(z.sin())),
                    Func::Cos => self.map(v, |z| Ok(z.cos())),
                    Func::Exp => self.map(v, |z| Ok(z.exp())),
                    Func::Abs => self.map(v, |z| Ok(C64::new(z.norm(), 0.0))),
                    Func::Jb => self.map(v, |z| {
                        if z.im == 0.0 {
                            Ok(C64::new((1.0 + z.re * z.re).sqrt(), 0.0))
                        } else {
                            Ok((C64::new(1.0, 0.0) + z * z).sqrt())
                        }
                    }),
                    Func::Phi0 => self.map(v, move |z| real_arg(z).map(|t| C64::new(part.phi(t), 0.0))),
                    Func::Chi => self.map(v, |z| real_arg(z).map(|t| C64::new(chi(t), 0.0))),
                    Func::Weier | Func::Psi => unreachable!(),
                }
            }
        }
    }
}

fn real_arg(z: C64) -> std::result::Result<f64, &'static str> {
    if z.im == 0.0 {
        Ok(z.re)
    } else {
        Err("real argument required")
    }
}

fn power(z: C64, p: f64) -> OpResult {
    if z == C64::new(0.0, 0.0) {
        return if p > 0.0 {
            Ok(z)
        } else if p == 0.0 {
            Ok(C64::new(1.0, 0.0))
        } else {
            Err("zero raised to a negative power")
        };
    }
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        return Ok(if z.im == 0.0 { C64::new(z.re.powi(p as i32), 0.0) } else { z.powi(p as i32) });
    }
    if z.im == 0.0 && z.re > 0.0 {
        return Ok(C64::new(z.re.powf(p), 0.0));
    }
    Ok(z.powf(p))
}

/// Bump equal to 1 on `[-1, 1]` and 0 outside `[-2, 2]`, infinitely smooth.
pub fn chi(t: f64) -> f64 {
    CutoffProfile::SmoothedErf.eval(t)
}

const MAX_TERMS: usize = 64;

struct Factor {
    x: Val,
    xi: Val,
}

impl Ctx<'_> {
    fn separate(&self, e: &SymbolExpr) -> Option<Vec<Factor>> {
        let (dx, dxi) = e.deps();
        if !(dx && dxi) {
            let v = self.eval(e).ok()?;
            return Some(vec![if dxi { Factor { x: Val::C(C64::new(1.0, 0.0)), xi: v } } else { Factor { x: v, xi: Val::C(C64::new(1.0, 0.0)) } }]);
        }
        let SymbolExpr::Binary(op, l, r) = e else { return None };
        match op {
            BinOp::Add | BinOp::Sub => {
                let mut a = self.separate(l)?;
                let b = self.separate(r)?;
                for t in b {
                    let x = if *op == BinOp::Sub { self.map(t.x, |z| Ok(-z)).ok()? } else { t.x };
                    a.push(Factor { x, xi: t.xi });
                }
                (a.len() <= MAX_TERMS).then_some(a)
            }
            BinOp::Mul => {
                let a = self.separate(l)?;
                let b = self.separate(r)?;
                if a.len() * b.len() > MAX_TERMS {
                    return None;
                }
                let mut out = Vec::new();
                for s in &a {
                    for t in &b {
                        out.push(Factor { x: self.combine(&s.x, &t.x, |u, v| Ok(u * v)).ok()?, xi: self.combine(&s.xi, &t.xi, |u, v| Ok(u * v)).ok()? });
                    }
                }
                Some(out)
            }
            BinOp::Div => {
                let a = self.separate(l)?;
                let b = self.separate(r)?;
                let [d] = b.as_slice() else { return None };
                let div = |u: C64, v: C64| if v == C64::new(0.0, 0.0) { Err("division by zero") } else { Ok(u / v) };
                a.into_iter()
                    .map(|t| Some(Factor { x: self.combine(&t.x, &d.x, div).ok()?, xi: self.combine(&t.xi, &d.xi, div).ok()? }))
                    .collect()
            }
            BinOp::Pow => {
                let SymbolExpr::Number(p) = **r else { return None };
                if p.fract() != 0.0 {
                    return None;
                }
                let a = self.separate(l)?;
                let [t] = a.as_slice() else { return None };
                Some(vec![Factor { x: self.map(clone_val(&t.x), move |z| power(z, p)).ok()?, xi: self.map(clone_val(&t.xi), move |z| power(z, p)).ok()? }])
            }
        }
    }
}

fn clone_val(v: &Val) -> Val {
    match v {
        Val::C(c) => Val::C(*c),
        Val::X(x) => Val::X(x.clone()),
        Val::Xi(x) => Val::Xi(x.clone()),
        Val::F(x) => Val::F(x.clone()),
    }
}

pub fn evaluate(expr: &SymbolExpr, grid: &PeriodicGrid, declared_m: f64) -> Result<SampledSymbol> {
    evaluate_with_profile(expr, grid, declared_m, CutoffProfile::default())
}

/// Samples `a(x_j, k)` on the grid; `psi`/`phi0` use the given cutoff profile.
pub fn evaluate_with_profile(expr: &SymbolExpr, grid: &PeriodicGrid, declared_m: f64, profile: CutoffProfile) -> Result<SampledSymbol> {
    let partition = LPPartition::new(grid, profile);
    let ctx = Ctx { grid, partition: &partition, xs: grid.points(), ks: grid.frequencies().iter().map(|&k| k as f64).collect() };
    let n = grid.size();
    let val = ctx.eval(expr)?;
    let values: Vec<C64> = (0..n * n).map(|t| val.at(n, t % n, t / n)).collect();
    let terms = ctx.separate(expr).map(|factors| {
        factors
            .into_iter()
            .map(|f| SeparableTerm {
                x: GridFunction::from_samples(grid, (0..n).map(|j| f.x.at(n, j, 0)).collect()).expect("grid length"),
                xi: (0..n).map(|i| f.xi.at(n, 0, i)).collect(),
            })
            .collect()
    });
    let mut sym = SampledSymbol::from_values(grid, values, declared_m, Provenance::Dsl(expr.to_string()))?;
    if let Some(terms) = terms {
        sym = sym.with_terms(terms);
    }
    Ok(sym)
}

/// `parse` followed by `evaluate`.
pub fn symbol_from_text(text: &str, grid: &PeriodicGrid, declared_m: f64) -> Result<SampledSymbol> {
    let expr = parse(text)?;
    let mut sym = evaluate(&expr, grid, declared_m)?;
    sym.set_provenance(Provenance::Dsl(text.to_string()));
    Ok(sym)
}
