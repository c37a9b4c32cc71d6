//! Poisson structures given by their fundamental brackets `{x^μ, x^ν} = π^{μν}`.
//!
//! Only the upper triangle `μ < ν` is stored, so skew-symmetry holds by
//! construction. Brackets of arbitrary functions are computed symbolically
//! as `Σ_{μ<ν} π^{μν} (∂_μ f ∂_ν g − ∂_ν f ∂_μ g)`.

mod checks;
mod pair;
mod system;

use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{EvalError, Expr};
use crate::sampling::SamplingError;

pub use checks::{
    casimir_defect, check_compatibility, is_casimir, jacobi_residual, CasimirReport,
    CompatibilityReport, JacobiChecker, JacobiReport,
};
pub use pair::{BiHamiltonianPair, PairDomain, PairReport};
pub use system::HamiltonianSystem;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PoissonError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("bracket of `{0}` with itself is identically zero")]
    Diagonal(String),
    #[error("structures differ in dimension or variable order ({left} vs {right} variables)")]
    DimensionMismatch { left: usize, right: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// A skew-symmetric matrix of bracket expressions over ordered variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonStructure {
    vars: Vec<String>,
    upper: Vec<Expr>,
}

fn packed(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

impl PoissonStructure {
    /// The zero structure on `vars`.
    pub fn zero<S: Into<String>, I: IntoIterator<Item = S>>(vars: I) -> Self {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        let n = vars.len();
        Self {
            vars,
            upper: alloc::vec![Expr::zero(); n * n.saturating_sub(1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    fn index(&self, name: &str) -> Result<usize, PoissonError> {
        self.index_of(name)
            .ok_or_else(|| PoissonError::UnknownVariable(name.into()))
    }

    /// `π^{ij}`, with the sign flipped below the diagonal.
    pub fn entry(&self, i: usize, j: usize) -> Expr {
        use core::cmp::Ordering::*;
        match i.cmp(&j) {
            Less => self.upper[packed(self.dim(), i, j)].clone(),
            Greater => Expr::neg(self.upper[packed(self.dim(), j, i)].clone()),
            Equal => Expr::zero(),
        }
    }

    /// Sets `{x^i, x^j} = value` (and implicitly `{x^j, x^i} = −value`).
    pub fn set_entry(&mut self, i: usize, j: usize, value: Expr) -> Result<(), PoissonError> {
        use core::cmp::Ordering::*;
        let n = self.dim();
        match i.cmp(&j) {
            Less => self.upper[packed(n, i, j)] = value,
            Greater => self.upper[packed(n, j, i)] = Expr::neg(value),
            Equal => return Err(PoissonError::Diagonal(self.vars[i].clone())),
        }
        Ok(())
    }

    /// Sets the fundamental bracket `{a, b}` by variable name.
    pub fn set(&mut self, a: &str, b: &str, value: Expr) -> Result<(), PoissonError> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        self.set_entry(i, j, value)
    }

    /// Builder form of [`set`](Self::set).
    pub fn with(mut self, a: &str, b: &str, value: Expr) -> Result<Self, PoissonError> {
        self.set(a, b, value)?;
        Ok(self)
    }

    /// The fundamental bracket `{a, b}` by variable name.
    pub fn get(&self, a: &str, b: &str) -> Result<Expr, PoissonError> {
        Ok(self.entry(self.index(a)?, self.index(b)?))
    }

    /// Upper-triangle entries `(i, j, π^{ij})` with `i < j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, &Expr)> + '_ {
        let n = self.dim();
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.upper.iter())
            .map(|((i, j), e)| (i, j, e))
    }

    /// Symbolic bracket `{f, g}`.
    pub fn bracket(&self, f: &Expr, g: &Expr) -> Expr {
        let df: Vec<Expr> = self.vars.iter().map(|v| f.diff(v)).collect();
        let dg: Vec<Expr> = self.vars.iter().map(|v| g.diff(v)).collect();
        Expr::sum(self.upper_entries().filter(|(_, _, e)| !e.is_zero()).map(|(i, j, e)| {
            let cross = Expr::sub(
                Expr::mul(df[i].clone(), dg[j].clone()),
                Expr::mul(df[j].clone(), dg[i].clone()),
            );
            Expr::mul(e.clone(), cross)
        }))
    }

    /// `π^♯(df)`: component `μ` is `Σ_ν π^{μν} ∂_ν f = {x^μ, f}`.
    pub fn sharp(&self, f: &Expr) -> Vec<Expr> {
        let df: Vec<Expr> = self.vars.iter().map(|v| f.diff(v)).collect();
        (0..self.dim())
            .map(|mu| {
                Expr::sum(
                    (0..self.dim())
                        .filter(|&nu| nu != mu && !df[nu].is_zero())
                        .map(|nu| Expr::mul(self.entry(mu, nu), df[nu].clone())),
                )
            })
            .collect()
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), PoissonError> {
        if self.vars != other.vars {
            return Err(PoissonError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    /// Entrywise `self + other`.
    pub fn sum(&self, other: &Self) -> Result<Self, PoissonError> {
        self.check_same_shape(other)?;
        Ok(Self {
            vars: self.vars.clone(),
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| Expr::add(a.clone(), b.clone()))
                .collect(),
        })
    }

    /// Entrywise `factor · self`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vars: self.vars.clone(),
            upper: self
                .upper
                .iter()
                .map(|e| Expr::mul(Expr::Const(factor), e.clone()))
                .collect(),
        }
    }

    /// The pencil member `(1 − λ) π₁ + λ π₂`.
    pub fn pencil(first: &Self, second: &Self, lambda: f64) -> Result<Self, PoissonError> {
        first.scaled(1.0 - lambda).sum(&second.scaled(lambda))
    }
}
