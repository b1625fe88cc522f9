//! Closed-form smooth expressions over `x1..xn` and `t`.
//!
//! Expressions are parsed from a small infix language, evaluated in IEEE-754
//! double precision with explicit domain checks, and differentiated
//! symbolically so that pushforwards can be formed exactly.

mod diff;
mod parse;
mod print;

use std::fmt;

use thiserror::Error;

pub use parse::parse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable x{index} exceeds declared arity {arity}")]
    Arity { index: usize, arity: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("domain violation in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: &'static str },
    #[error("vector expression has {got} components, expected {expected}")]
    Components { expected: usize, got: usize },
}

pub type Result<T, E = ExprError> = std::result::Result<T, E>;

/// Elementary functions allowed in the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

/// Expression tree. Variables are 1-indexed.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Time,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    pub fn max_var(&self) -> usize {
        match self {
            Node::Const(_) | Node::Time => 0,
            Node::Var(i) => *i,
            Node::Neg(a) | Node::Call(_, a) => a.max_var(),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Node::Const(_) | Node::Time => false,
            Node::Var(i) => *i == var,
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(var),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    fn substitute(&self, args: &[Node]) -> Node {
        let sub = |n: &Node| Box::new(n.substitute(args));
        match self {
            Node::Const(c) => Node::Const(*c),
            Node::Time => Node::Time,
            Node::Var(i) => args[*i - 1].clone(),
            Node::Neg(a) => Node::Neg(sub(a)),
            Node::Call(f, a) => Node::Call(*f, sub(a)),
            Node::Add(a, b) => Node::Add(sub(a), sub(b)),
            Node::Sub(a, b) => Node::Sub(sub(a), sub(b)),
            Node::Mul(a, b) => Node::Mul(sub(a), sub(b)),
            Node::Div(a, b) => Node::Div(sub(a), sub(b)),
            Node::Pow(a, b) => Node::Pow(sub(a), sub(b)),
        }
    }

    fn eval_checked(&self, point: &[f64], t: f64) -> Result<f64> {
        let violation = |reason| ExprError::Domain {
            subexpr: self.to_string(),
            reason,
        };
        let value = match self {
            Node::Const(c) => *c,
            Node::Var(i) => point[*i - 1],
            Node::Time => t,
            Node::Neg(a) => -a.eval_checked(point, t)?,
            Node::Add(a, b) => a.eval_checked(point, t)? + b.eval_checked(point, t)?,
            Node::Sub(a, b) => a.eval_checked(point, t)? - b.eval_checked(point, t)?,
            Node::Mul(a, b) => a.eval_checked(point, t)? * b.eval_checked(point, t)?,
            Node::Div(a, b) => {
                let num = a.eval_checked(point, t)?;
                let den = b.eval_checked(point, t)?;
                if den == 0.0 {
                    return Err(violation("division by zero"));
                }
                num / den
            }
            Node::Pow(a, b) => {
                let base = a.eval_checked(point, t)?;
                let exponent = b.eval_checked(point, t)?;
                if integer_exponent(exponent).is_none() && base <= 0.0 {
                    return Err(violation("real exponent requires a positive base"));
                }
                pow(base, exponent)
            }
            Node::Call(f, a) => {
                let x = a.eval_checked(point, t)?;
                match f {
                    Func::Log if x <= 0.0 => return Err(violation("log of non-positive value")),
                    Func::Sqrt if x < 0.0 => return Err(violation("sqrt of negative value")),
                    _ => apply(*f, x),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(violation("non-finite result"))
        }
    }

    fn eval_unchecked(&self, point: &[f64], t: f64) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => point[*i - 1],
            Node::Time => t,
            Node::Neg(a) => -a.eval_unchecked(point, t),
            Node::Add(a, b) => a.eval_unchecked(point, t) + b.eval_unchecked(point, t),
            Node::Sub(a, b) => a.eval_unchecked(point, t) - b.eval_unchecked(point, t),
            Node::Mul(a, b) => a.eval_unchecked(point, t) * b.eval_unchecked(point, t),
            Node::Div(a, b) => a.eval_unchecked(point, t) / b.eval_unchecked(point, t),
            Node::Pow(a, b) => pow(a.eval_unchecked(point, t), b.eval_unchecked(point, t)),
            Node::Call(f, a) => apply(*f, a.eval_unchecked(point, t)),
        }
    }
}

fn integer_exponent(e: f64) -> Option<i32> {
    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        Some(e as i32)
    } else {
        None
    }
}

fn pow(base: f64, exponent: f64) -> f64 {
    match integer_exponent(exponent) {
        Some(n) => base.powi(n),
        None => base.powf(exponent),
    }
}

fn apply(f: Func, x: f64) -> f64 {
    match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sqrt => x.sqrt(),
        Func::Tanh => x.tanh(),
    }
}

/// A scalar expression of fixed arity.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    arity: usize,
    root: Node,
}

impl Expr {
    pub fn new(root: Node, arity: usize) -> Result<Self> {
        let max = root.max_var();
        if max > arity {
            return Err(ExprError::Arity { index: max, arity });
        }
        Ok(Expr { arity, root })
    }

    pub fn constant(value: f64, arity: usize) -> Self {
        Expr { arity, root: Node::Const(value) }
    }

    /// The coordinate projection `x_index`.
    pub fn var(index: usize, arity: usize) -> Result<Self> {
        if index == 0 || index > arity {
            return Err(ExprError::Arity { index, arity });
        }
        Ok(Expr { arity, root: Node::Var(index) })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, point: &[f64], t: f64) -> Result<f64> {
        self.check_len(point)?;
        self.root.eval_checked(point, t)
    }

    /// Evaluation without domain checks; may return NaN or infinities.
    pub fn eval_unchecked(&self, point: &[f64], t: f64) -> f64 {
        self.root.eval_unchecked(point, t)
    }

    pub fn differentiate(&self, var: usize) -> Result<Expr> {
        if var == 0 || var > self.arity {
            return Err(ExprError::Arity { index: var, arity: self.arity });
        }
        Ok(Expr { arity: self.arity, root: diff::derivative(&self.root, var) })
    }

    /// Substitutes `inner` for the variables, yielding `self ∘ inner`.
    ///
    /// No simplification is applied, so evaluating the result performs the
    /// same floating-point operations as evaluating `inner` and then `self`.
    pub fn compose(&self, inner: &VectorExpr) -> Result<Expr> {
        if inner.len() != self.arity {
            return Err(ExprError::Components { expected: self.arity, got: inner.len() });
        }
        let args: Vec<Node> = inner.components.iter().map(|c| c.root.clone()).collect();
        Ok(Expr { arity: inner.arity, root: self.root.substitute(&args) })
    }

    /// Re-declares the arity, failing if a variable would fall out of range.
    pub fn with_arity(&self, arity: usize) -> Result<Expr> {
        Expr::new(self.root.clone(), arity)
    }

    fn check_len(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.arity {
            return Err(ExprError::PointLength { expected: self.arity, got: point.len() });
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// An ordered list of expressions sharing one arity, e.g. a vector field or a
/// smooth map `R^n -> R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorExpr {
    arity: usize,
    components: Vec<Expr>,
}

impl VectorExpr {
    pub fn new(components: Vec<Expr>, arity: usize) -> Result<Self> {
        for c in &components {
            if c.arity != arity {
                let index = c.root.max_var();
                if index > arity {
                    return Err(ExprError::Arity { index, arity });
                }
            }
        }
        let components = components
            .into_iter()
            .map(|c| Expr { arity, root: c.root })
            .collect();
        Ok(VectorExpr { arity, components })
    }

    /// Parses one expression per component.
    pub fn parse<S: AsRef<str>>(sources: &[S], arity: usize) -> Result<Self> {
        let components = sources
            .iter()
            .map(|s| parse(s.as_ref(), arity))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorExpr { arity, components })
    }

    pub fn identity(n: usize) -> Self {
        let components = (1..=n).map(|i| Expr { arity: n, root: Node::Var(i) }).collect();
        VectorExpr { arity: n, components }
    }

    pub fn zero(n: usize, arity: usize) -> Self {
        VectorExpr { arity, components: vec![Expr::constant(0.0, arity); n] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, point: &[f64], t: f64) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval(point, t)).collect()
    }

    /// `self ∘ inner`, component-wise.
    pub fn compose(&self, inner: &VectorExpr) -> Result<VectorExpr> {
        let components = self
            .components
            .iter()
            .map(|c| c.compose(inner))
            .collect::<Result<Vec<_>>>()?;
        Ok(VectorExpr { arity: inner.arity, components })
    }

    /// Matrix of partials: entry `(i, j)` is `∂f_i/∂x_j`.
    pub fn jacobian(&self) -> Jacobian {
        let entries = self
            .components
            .iter()
            .map(|c| {
                (1..=self.arity)
                    .map(|j| Expr { arity: self.arity, root: diff::derivative(&c.root, j) })
                    .collect()
            })
            .collect();
        Jacobian { rows: self.components.len(), cols: self.arity, entries }
    }
}

impl fmt::Display for VectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Symbolic Jacobian of a [`VectorExpr`].
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Expr>>,
}

impl Jacobian {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    pub fn eval(&self, point: &[f64], t: f64) -> Result<Vec<Vec<f64>>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.eval(point, t)).collect())
            .collect()
    }

    /// Jacobian-vector product `J(point) · v`, i.e. the pushforward of `v`.
    pub fn apply(&self, point: &[f64], t: f64, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(ExprError::PointLength { expected: self.cols, got: v.len() });
        }
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .try_fold(0.0, |acc, (e, vj)| Ok(acc + e.eval(point, t)? * vj))
            })
            .collect()
    }
}
