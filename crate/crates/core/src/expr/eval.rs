use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;

use super::Expr;

/// Parameter bindings, name → value.
pub type ParamMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("power {base}^{exponent} is not real")]
    PowDomain { base: f64, exponent: f64 },
}

/// Variable and parameter bindings for [`Expr::eval`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment {
    pub vars: BTreeMap<String, f64>,
    pub params: ParamMap,
}

impl Environment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(mut self, name: &str, value: f64) -> Self {
        self.vars.insert(name.into(), value);
        self
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    /// Binds `names[i]` to `values[i]`.
    pub fn with_state(mut self, names: &[String], values: &[f64]) -> Self {
        for (n, v) in names.iter().zip(values) {
            self.vars.insert(n.clone(), *v);
        }
        self
    }

    pub fn with_params(mut self, params: &ParamMap) -> Self {
        self.params.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }
}

#[inline]
fn checked_div(a: f64, b: f64) -> Result<f64, EvalError> {
    if b == 0.0 {
        Err(EvalError::DivisionByZero)
    } else {
        Ok(a / b)
    }
}

#[inline]
fn checked_log(a: f64) -> Result<f64, EvalError> {
    if a > 0.0 {
        Ok(libm::log(a))
    } else {
        Err(EvalError::LogDomain(a))
    }
}

#[inline]
fn checked_pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base < 0.0 && libm::trunc(exponent) != exponent {
        return Err(EvalError::PowDomain { base, exponent });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    Ok(libm::pow(base, exponent))
}

impl Expr {
    /// Evaluates the tree in IEEE double precision.
    pub fn eval(&self, env: &Environment) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(n) => *env
                .vars
                .get(n)
                .ok_or_else(|| EvalError::UnboundVariable(n.clone()))?,
            Expr::Param(n) => *env
                .params
                .get(n)
                .ok_or_else(|| EvalError::UnboundParameter(n.clone()))?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => checked_div(a.eval(env)?, b.eval(env)?)?,
            Expr::Pow(a, e) => checked_pow(a.eval(env)?, *e)?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Log(a) => checked_log(a.eval(env)?)?,
            Expr::Exp(a) => libm::exp(a.eval(env)?),
        })
    }

    /// Resolves variables to slots of `vars` and parameters to their values.
    pub fn compile(&self, vars: &[String], params: &ParamMap) -> Result<CompiledExpr, EvalError> {
        Ok(CompiledExpr {
            root: Node::build(self, vars, params)?,
        })
    }
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, f64),
    Neg(Box<Node>),
    Log(Box<Node>),
    Exp(Box<Node>),
}

impl Node {
    fn build(e: &Expr, vars: &[String], params: &ParamMap) -> Result<Node, EvalError> {
        let b = |x: &Expr| Node::build(x, vars, params).map(Box::new);
        Ok(match e {
            Expr::Const(c) => Node::Const(*c),
            Expr::Var(n) => Node::Slot(
                vars.iter()
                    .position(|v| v == n)
                    .ok_or_else(|| EvalError::UnboundVariable(n.clone()))?,
            ),
            Expr::Param(n) => Node::Const(
                *params
                    .get(n)
                    .ok_or_else(|| EvalError::UnboundParameter(n.clone()))?,
            ),
            Expr::Add(x, y) => Node::Add(b(x)?, b(y)?),
            Expr::Sub(x, y) => Node::Sub(b(x)?, b(y)?),
            Expr::Mul(x, y) => Node::Mul(b(x)?, b(y)?),
            Expr::Div(x, y) => Node::Div(b(x)?, b(y)?),
            Expr::Pow(x, p) => Node::Pow(b(x)?, *p),
            Expr::Neg(x) => Node::Neg(b(x)?),
            Expr::Log(x) => Node::Log(b(x)?),
            Expr::Exp(x) => Node::Exp(b(x)?),
        })
    }

    fn eval(&self, state: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Node::Const(c) => *c,
            Node::Slot(i) => state[*i],
            Node::Add(a, b) => a.eval(state)? + b.eval(state)?,
            Node::Sub(a, b) => a.eval(state)? - b.eval(state)?,
            Node::Mul(a, b) => a.eval(state)? * b.eval(state)?,
            Node::Div(a, b) => checked_div(a.eval(state)?, b.eval(state)?)?,
            Node::Pow(a, p) => checked_pow(a.eval(state)?, *p)?,
            Node::Neg(a) => -a.eval(state)?,
            Node::Log(a) => checked_log(a.eval(state)?)?,
            Node::Exp(a) => libm::exp(a.eval(state)?),
        })
    }
}

/// An expression with names resolved, for fast pointwise evaluation.
///
/// Variables index into the state slice given to [`CompiledExpr::eval`];
/// parameters are frozen at compile time.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
}

impl CompiledExpr {
    pub fn eval(&self, state: &[f64]) -> Result<f64, EvalError> {
        self.root.eval(state)
    }
}
