//! Arithmetic expression trees over named state variables and parameters.
//!
//! Every rate, bracket entry, Hamiltonian and Casimir in the crate is an
//! [`Expr`]. Trees are immutable values; the smart constructors
//! ([`Expr::add`], [`Expr::mul`], ...) apply a light simplification
//! (constant folding, `0·x → 0`, `1·x → x`, `x + 0 → x`) so that symbolic
//! derivatives and substitutions stay small. The parser builds trees with
//! the raw constructors so that printing and re-parsing reproduces the same
//! evaluation order.

mod diff;
mod eval;
mod parse;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;
use core::ops;

pub use eval::{CompiledExpr, Environment, EvalError, ParamMap};
pub use parse::{parse, ParseError};

/// Expression node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Param(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant real exponent.
    Pow(Box<Expr>, f64),
    Neg(Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
}

/// Shorthand for a state-variable leaf.
pub fn var(name: &str) -> Expr {
    Expr::Var(name.into())
}

/// Shorthand for a parameter leaf.
pub fn param(name: &str) -> Expr {
    Expr::Param(name.into())
}

/// Shorthand for a constant leaf.
pub fn constant(value: f64) -> Expr {
    Expr::Const(value)
}

// smart constructors that fold constants; the operator impls call these
#[allow(clippy::should_implement_trait, clippy::redundant_guards)]
impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => match b {
                Expr::Neg(inner) => Expr::Sub(Box::new(a), inner),
                b => Expr::Add(Box::new(a), Box::new(b)),
            },
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (Some(x), _) if x == 0.0 => Expr::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => match b {
                Expr::Neg(inner) => Expr::Add(Box::new(a), inner),
                b => Expr::Sub(Box::new(a), Box::new(b)),
            },
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) if x == 0.0 => Expr::zero(),
            (_, Some(y)) if y == 0.0 => Expr::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Expr::neg(b),
            (_, Some(y)) if y == -1.0 => Expr::neg(a),
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
            (_, Some(y)) if y == 1.0 => a,
            _ => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(base: Expr, exponent: f64) -> Expr {
        if exponent == 1.0 {
            return base;
        }
        if exponent == 0.0 {
            return Expr::one();
        }
        match base.as_const() {
            Some(x) if x > 0.0 => Expr::Const(libm::pow(x, exponent)),
            _ => Expr::Pow(Box::new(base), exponent),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn log(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) if x > 0.0 => Expr::Const(libm::log(x)),
            _ => Expr::Log(Box::new(a)),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a.as_const() {
            Some(x) => Expr::Const(libm::exp(x)),
            None => Expr::Exp(Box::new(a)),
        }
    }

    /// Sum of an iterator of expressions, simplified.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    /// True if `name` occurs as a variable leaf.
    pub fn contains_var(&self, name: &str) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if let Expr::Var(n) = e {
                if n == name {
                    found = true;
                }
            }
        });
        found
    }

    /// Names of all variable leaves.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Var(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Names of all parameter leaves.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(n) = e {
                out.insert(n.clone());
            }
        });
        out
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit<F: FnMut(&Expr)>(&self, f: &mut F) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Pow(a, _) | Expr::Neg(a) | Expr::Log(a) | Expr::Exp(a) => a.visit(f),
        }
    }

    /// Rebuilds the tree bottom-up through the simplifying constructors,
    /// replacing leaves with `leaf(e)` when it returns `Some`.
    pub fn map_leaves<F: FnMut(&Expr) -> Option<Expr>>(&self, leaf: &mut F) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => {
                leaf(self).unwrap_or_else(|| self.clone())
            }
            Expr::Add(a, b) => Expr::add(a.map_leaves(leaf), b.map_leaves(leaf)),
            Expr::Sub(a, b) => Expr::sub(a.map_leaves(leaf), b.map_leaves(leaf)),
            Expr::Mul(a, b) => Expr::mul(a.map_leaves(leaf), b.map_leaves(leaf)),
            Expr::Div(a, b) => Expr::div(a.map_leaves(leaf), b.map_leaves(leaf)),
            Expr::Pow(a, p) => Expr::pow(a.map_leaves(leaf), *p),
            Expr::Neg(a) => Expr::neg(a.map_leaves(leaf)),
            Expr::Log(a) => Expr::log(a.map_leaves(leaf)),
            Expr::Exp(a) => Expr::exp(a.map_leaves(leaf)),
        }
    }

    /// Replaces every occurrence of variable `name` by `replacement`.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Var(n) if n == name => Some(replacement.clone()),
            _ => None,
        })
    }

    /// Replaces parameter leaves by constants where `values` has a binding.
    pub fn bind_params(&self, values: &ParamMap) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::Param(n) => values.get(n).map(|v| Expr::Const(*v)),
            _ => None,
        })
    }

    /// Renames variables and parameters.
    pub fn rename<V, P>(&self, mut var_name: V, mut param_name: P) -> Expr
    where
        V: FnMut(&str) -> String,
        P: FnMut(&str) -> String,
    {
        self.map_leaves(&mut |e| match e {
            Expr::Var(n) => Some(Expr::Var(var_name(n))),
            Expr::Param(n) => Some(Expr::Param(param_name(n))),
            _ => None,
        })
    }

    /// Simplified copy of the tree.
    pub fn simplify(&self) -> Expr {
        self.map_leaves(&mut |_| None)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        let p = self.precedence();
        match self {
            Expr::Const(c) => write_number(f, *c),
            Expr::Var(n) | Expr::Param(n) => f.write_str(n),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = match self {
                    Expr::Add(..) => " + ",
                    Expr::Sub(..) => " - ",
                    Expr::Mul(..) => " * ",
                    _ => " / ",
                };
                child(f, a, a.precedence() < p)?;
                f.write_str(op)?;
                child(f, b, b.precedence() <= p)
            }
            Expr::Pow(a, e) => {
                child(f, a, a.precedence() <= p)?;
                f.write_str("^")?;
                if e.is_sign_negative() {
                    f.write_str("(")?;
                    write_number(f, *e)?;
                    f.write_str(")")
                } else {
                    write_number(f, *e)
                }
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                child(f, a, a.precedence() < p)
            }
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

// `{:?}` on f64 is shortest round-trip and switches to exponent notation
// for very large or small magnitudes, both of which the parser accepts.
fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    write!(f, "{x:?}")
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Mul<Expr> for f64 {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(Expr::Const(self), rhs)
    }
}

impl ops::Sub<Expr> for f64 {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(Expr::Const(self), rhs)
    }
}
