//! Real-valued closed-form expressions.
//!
//! An [`Expr`] is an immutable tree of constants, named variables, unary
//! functions and binary operators. Trees are built by [`parse`], printed back
//! with `Display` (the printed form reparses to an identical tree), evaluated
//! against variable bindings, differentiated symbolically and composed by
//! substitution. Evaluation never returns NaN or an infinity: any such result
//! is reported as a [`DomainFault`].

mod compile;
mod diff;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub use compile::CompiledExpr;
pub use parse::{parse, ParseError, ParseErrorKind};

/// Unary operators. `Neg` is arithmetic negation; the rest are functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl UnaryOp {
    pub const FUNCTIONS: [UnaryOp; 7] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Exp,
        UnaryOp::Ln,
        UnaryOp::Sqrt,
        UnaryOp::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
        }
    }

    pub fn from_function_name(name: &str) -> Option<UnaryOp> {
        UnaryOp::FUNCTIONS.into_iter().find(|op| op.name() == name)
    }

    pub(crate) fn apply(self, x: f64) -> Result<f64, DomainFault> {
        let y = match self {
            UnaryOp::Neg => -x,
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tan => x.tan(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Ln => {
                if x <= 0.0 {
                    return Err(DomainFault::LogOfNonPositive(x));
                }
                x.ln()
            }
            UnaryOp::Sqrt => {
                if x < 0.0 {
                    return Err(DomainFault::SqrtOfNegative(x));
                }
                x.sqrt()
            }
            UnaryOp::Abs => x.abs(),
        };
        finite(y, self.name())
    }
}

/// Binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    pub(crate) fn apply(self, a: f64, b: f64) -> Result<f64, DomainFault> {
        let y = match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b == 0.0 {
                    return Err(DomainFault::DivisionByZero);
                }
                a / b
            }
            BinaryOp::Pow => real_pow(a, b)?,
        };
        finite(
            y,
            match self {
                BinaryOp::Add => "+",
                BinaryOp::Sub => "-",
                BinaryOp::Mul => "*",
                BinaryOp::Div => "/",
                BinaryOp::Pow => "^",
            },
        )
    }
}

/// Why an expression could not be evaluated at a point.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainFault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of non-positive value {0}")]
    LogOfNonPositive(f64),
    #[error("square root of negative value {0}")]
    SqrtOfNegative(f64),
    #[error("zero raised to negative power {0}")]
    ZeroToNegativePower(f64),
    #[error("negative base {base} raised to power {exponent} has no real value")]
    NegativeBase { base: f64, exponent: f64 },
    #[error("non-finite result from `{0}`")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain fault: {0}")]
    Domain(#[from] DomainFault),
}

fn finite(y: f64, op: &'static str) -> Result<f64, DomainFault> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(DomainFault::NonFinite(op))
    }
}

/// Real power. A negative base is allowed when the exponent is an integer or
/// a rational with odd denominator (denominator up to 99), so that e.g.
/// `(-8)^(1/3) = -2` and `(-8)^(2/3) = 4`.
pub(crate) fn real_pow(base: f64, exponent: f64) -> Result<f64, DomainFault> {
    if base == 0.0 && exponent < 0.0 {
        return Err(DomainFault::ZeroToNegativePower(exponent));
    }
    if base >= 0.0 || exponent.fract() == 0.0 {
        return Ok(base.powf(exponent));
    }
    for q in (3..100u32).step_by(2) {
        let scaled = exponent * f64::from(q);
        let p = scaled.round();
        if (scaled - p).abs() <= 1e-9 * f64::from(q) {
            let magnitude = (-base).powf(exponent);
            return Ok(if (p as i64) % 2 == 0 { magnitude } else { -magnitude });
        }
    }
    Err(DomainFault::NegativeBase { base, exponent })
}

/// Something that can resolve a variable name to a value.
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const N: usize> Bindings for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

/// Expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, self, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, self, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, self, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, self, rhs)
    }

    pub fn pow(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Pow, self, rhs)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }

    pub fn apply(self, op: UnaryOp) -> Expr {
        Expr::unary(op, self)
    }

    /// Parse `text` with `vars` as the only admissible variable names.
    pub fn parse(text: &str, vars: &[&str]) -> Result<Expr, ParseError> {
        parse(text, vars)
    }

    /// Names of all variables occurring in the tree, sorted.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Unary(_, a) => a.contains_var(name),
            Expr::Binary(_, a, b) => a.contains_var(name) || b.contains_var(name),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    pub fn eval<B: Bindings + ?Sized>(&self, env: &B) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => env.lookup(name).ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Unary(op, a) => Ok(op.apply(a.eval(env)?)?),
            Expr::Binary(op, a, b) => {
                let x = a.eval(env)?;
                let y = b.eval(env)?;
                Ok(op.apply(x, y)?)
            }
        }
    }

    /// Evaluate an expression of a single variable.
    pub fn eval_at(&self, var: &str, value: f64) -> Result<f64, EvalError> {
        self.eval(&[(var, value)])
    }

    /// Replace every occurrence of `var` by `replacement`.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(name) if name == var => replacement.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, a) => Expr::unary(*op, a.substitute(var, replacement)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(var, replacement), b.substitute(var, replacement)),
        }
    }

    /// Symbolic derivative with respect to `var`, lightly simplified.
    pub fn differentiate(&self, var: &str) -> Expr {
        diff::derivative(self, var).simplified()
    }

    /// Constant folding and identity elimination (`x*1`, `x+0`, `x^1`, ...).
    pub fn simplified(&self) -> Expr {
        diff::simplify(self)
    }

    pub fn compile(&self, vars: &[&str]) -> Result<CompiledExpr, EvalError> {
        CompiledExpr::new(self, vars)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Unary(UnaryOp::Neg, a) => {
                // `-2` would reparse as a negative literal, so a non-negative
                // constant operand keeps its parentheses.
                let wrap = a.precedence() < 3 || matches!(**a, Expr::Const(c) if !c.is_sign_negative());
                f.write_str("-")?;
                write_wrapped(f, a, wrap)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(BinaryOp::Pow, a, b) => {
                write_wrapped(f, a, a.precedence() < 5)?;
                f.write_str("^")?;
                write_wrapped(f, b, b.precedence() < 3)
            }
            Expr::Binary(op, a, b) => {
                let own = self.precedence();
                write_wrapped(f, a, a.precedence() < own)?;
                write!(f, "{}", op.symbol())?;
                write_wrapped(f, b, b.precedence() <= own)
            }
        }
    }
}
