use alloc::vec::Vec;

use super::checks::{JacobiChecker, JacobiReport};
use super::{HamiltonianSystem, PoissonError, PoissonStructure};
use crate::expr::{CompiledExpr, EvalError, Expr, ParamMap};
use crate::field::{CompiledField, VectorField};

/// One flow written through two compatible Poisson structures,
/// `π₁^♯ dH₁ = π₂^♯ dH₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiHamiltonianPair {
    pub first: PoissonStructure,
    pub first_hamiltonian: Expr,
    pub second: PoissonStructure,
    pub second_hamiltonian: Expr,
    pub params: ParamMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub points: usize,
    pub vector_field_mismatch: f64,
    pub first_jacobi: JacobiReport,
    pub second_jacobi: JacobiReport,
    pub compatibility: JacobiReport,
}

impl PairReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.vector_field_mismatch <= tol
            && self.first_jacobi.max_residual <= tol
            && self.second_jacobi.max_residual <= tol
            && self.compatibility.max_residual <= tol
    }
}

impl BiHamiltonianPair {
    pub fn vars(&self) -> &[alloc::string::String] {
        self.first.vars()
    }

    pub fn first_system(&self) -> HamiltonianSystem {
        HamiltonianSystem::new(
            self.first.clone(),
            self.first_hamiltonian.clone(),
            self.params.clone(),
        )
    }

    pub fn second_system(&self) -> HamiltonianSystem {
        HamiltonianSystem::new(
            self.second.clone(),
            self.second_hamiltonian.clone(),
            self.params.clone(),
        )
    }

    fn fields(&self) -> Result<(CompiledField, CompiledField), EvalError> {
        Ok((self.first_system().compile()?, self.second_system().compile()?))
    }

    /// Compiled membership test for the pair's open domain: both
    /// Hamiltonians and both vector fields evaluate without error.
    pub fn domain(&self) -> Result<PairDomain, EvalError> {
        let (f1, f2) = self.fields()?;
        Ok(PairDomain {
            hamiltonians: [
                self.first_hamiltonian.compile(self.vars(), &self.params)?,
                self.second_hamiltonian.compile(self.vars(), &self.params)?,
            ],
            fields: [f1, f2],
        })
    }

    /// Largest componentwise `|X₁ − X₂|` over `samples`.
    pub fn vector_field_mismatch(&self, samples: &[Vec<f64>]) -> Result<f64, EvalError> {
        let (f1, f2) = self.fields()?;
        let n = f1.dim();
        let (mut a, mut b) = (alloc::vec![0.0; n], alloc::vec![0.0; n]);
        let mut worst: f64 = 0.0;
        for p in samples {
            f1.eval(p, &mut a)?;
            f2.eval(p, &mut b)?;
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max(libm::fabs(x - y));
            }
        }
        Ok(worst)
    }

    pub fn compatibility(&self, samples: &[Vec<f64>]) -> Result<JacobiReport, PoissonError> {
        let sum = self.first.sum(&self.second)?;
        Ok(JacobiChecker::new(&sum, &self.params)?.report(samples)?)
    }

    /// Vector-field equality, Jacobi for both structures, and compatibility.
    pub fn verify(&self, samples: &[Vec<f64>]) -> Result<PairReport, PoissonError> {
        Ok(PairReport {
            points: samples.len(),
            vector_field_mismatch: self.vector_field_mismatch(samples)?,
            first_jacobi: JacobiChecker::new(&self.first, &self.params)?.report(samples)?,
            second_jacobi: JacobiChecker::new(&self.second, &self.params)?.report(samples)?,
            compatibility: self.compatibility(samples)?,
        })
    }
}

/// See [`BiHamiltonianPair::domain`].
#[derive(Debug, Clone)]
pub struct PairDomain {
    hamiltonians: [CompiledExpr; 2],
    fields: [CompiledField; 2],
}

impl PairDomain {
    pub fn contains(&self, state: &[f64]) -> bool {
        self.hamiltonians.iter().all(|h| h.eval(state).is_ok())
            && self.fields.iter().all(|f| f.eval_vec(state).is_ok())
    }
}
