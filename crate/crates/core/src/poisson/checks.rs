//! Pointwise verification of the Jacobi identity, Casimir property and
//! compatibility. Brackets are derived symbolically once per structure and
//! then compiled, so sweeping many sample points only evaluates.

use alloc::vec::Vec;

use super::{PoissonError, PoissonStructure};
use crate::expr::{CompiledExpr, EvalError, Expr, ParamMap};

/// Compiled cyclic sums `{{x^i,x^j},x^k} + {{x^j,x^k},x^i} + {{x^k,x^i},x^j}`
/// for every `i < j < k`.
#[derive(Debug, Clone)]
pub struct JacobiChecker {
    triples: Vec<([usize; 3], CompiledExpr)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiReport {
    pub points: usize,
    pub max_residual: f64,
    pub worst_point: Vec<f64>,
    pub worst_triple: Option<[usize; 3]>,
}

impl JacobiChecker {
    /// Symbolic cyclic sums, one per triple.
    pub fn cyclic_sums(ps: &PoissonStructure) -> Vec<([usize; 3], Expr)> {
        let n = ps.dim();
        // d[i][j][nu] = ∂_nu π^{ij}, upper triangle only
        let mut d: Vec<Vec<Vec<Expr>>> = alloc::vec![alloc::vec![Vec::new(); n]; n];
        for (i, j, e) in ps.upper_entries() {
            d[i][j] = ps.vars().iter().map(|v| e.diff(v)).collect();
        }
        let deriv = |i: usize, j: usize, nu: usize| -> Expr {
            if i < j {
                d[i][j][nu].clone()
            } else {
                Expr::neg(d[j][i][nu].clone())
            }
        };
        // {π^{ij}, x^k} = Σ_ν ∂_ν π^{ij} π^{νk}
        let outer = |i: usize, j: usize, k: usize| -> Expr {
            Expr::sum((0..n).filter(|&nu| nu != k).map(|nu| {
                let dv = deriv(i, j, nu);
                if dv.is_zero() {
                    Expr::zero()
                } else {
                    Expr::mul(dv, ps.entry(nu, k))
                }
            }))
        };
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let sum = Expr::sum([outer(i, j, k), outer(j, k, i), outer(k, i, j)]);
                    out.push(([i, j, k], sum));
                }
            }
        }
        out
    }

    pub fn new(ps: &PoissonStructure, params: &ParamMap) -> Result<Self, EvalError> {
        let triples = Self::cyclic_sums(ps)
            .into_iter()
            .map(|(t, e)| Ok((t, e.compile(ps.vars(), params)?)))
            .collect::<Result<_, EvalError>>()?;
        Ok(Self { triples })
    }

    /// Largest absolute cyclic sum at `state`, with the triple attaining it.
    pub fn residual_with_triple(&self, state: &[f64]) -> Result<(f64, Option<[usize; 3]>), EvalError> {
        let mut worst = (0.0, None);
        for (t, e) in &self.triples {
            let r = libm::fabs(e.eval(state)?);
            if r > worst.0 || r.is_nan() || worst.1.is_none() {
                worst = (r, Some(*t));
            }
        }
        Ok(worst)
    }

    pub fn residual(&self, state: &[f64]) -> Result<f64, EvalError> {
        Ok(self.residual_with_triple(state)?.0)
    }

    pub fn report(&self, samples: &[Vec<f64>]) -> Result<JacobiReport, EvalError> {
        let mut report = JacobiReport {
            points: samples.len(),
            max_residual: 0.0,
            worst_point: Vec::new(),
            worst_triple: None,
        };
        for p in samples {
            let (r, t) = self.residual_with_triple(p)?;
            if report.worst_point.is_empty() || r > report.max_residual || r.is_nan() {
                report.max_residual = r;
                report.worst_point = p.clone();
                report.worst_triple = t;
            }
        }
        Ok(report)
    }
}

/// Largest absolute Jacobi cyclic sum over all coordinate triples at `state`.
pub fn jacobi_residual(
    ps: &PoissonStructure,
    params: &ParamMap,
    state: &[f64],
) -> Result<f64, EvalError> {
    JacobiChecker::new(ps, params)?.residual(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CasimirReport {
    pub is_casimir: bool,
    pub max_defect: f64,
}

/// Components of `π^♯(dC)`; all vanish for a Casimir.
pub fn casimir_defect(ps: &PoissonStructure, c: &Expr) -> Vec<Expr> {
    ps.sharp(c)
}

/// Checks `max |π^♯(dC)| ≤ tol` over `samples`.
pub fn is_casimir(
    ps: &PoissonStructure,
    params: &ParamMap,
    c: &Expr,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CasimirReport, EvalError> {
    let comps = casimir_defect(ps, c)
        .iter()
        .map(|e| e.compile(ps.vars(), params))
        .collect::<Result<Vec<_>, _>>()?;
    let mut max_defect: f64 = 0.0;
    for p in samples {
        for comp in &comps {
            let d = libm::fabs(comp.eval(p)?);
            max_defect = if d.is_nan() { f64::NAN } else { max_defect.max(d) };
        }
    }
    Ok(CasimirReport {
        is_casimir: max_defect <= tol,
        max_defect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub compatible: bool,
    pub max_residual: f64,
    pub jacobi: JacobiReport,
}

/// Two structures are compatible when their entrywise sum is Poisson.
pub fn check_compatibility(
    first: &PoissonStructure,
    second: &PoissonStructure,
    params: &ParamMap,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<CompatibilityReport, PoissonError> {
    let sum = first.sum(second)?;
    let jacobi = JacobiChecker::new(&sum, params)?.report(samples)?;
    Ok(CompatibilityReport {
        compatible: jacobi.max_residual <= tol,
        max_residual: jacobi.max_residual,
        jacobi,
    })
}
