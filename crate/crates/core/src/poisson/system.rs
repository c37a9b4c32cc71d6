use alloc::string::String;
use alloc::vec::Vec;

use super::PoissonStructure;
use crate::expr::{EvalError, Expr, ParamMap};
use crate::field::CompiledField;

/// A Poisson structure paired with a Hamiltonian; Hamilton's equations
/// `ẋ^μ = {x^μ, H}` define its vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSystem {
    pub structure: PoissonStructure,
    pub hamiltonian: Expr,
    pub params: ParamMap,
}

impl HamiltonianSystem {
    pub fn new(structure: PoissonStructure, hamiltonian: Expr, params: ParamMap) -> Self {
        Self {
            structure,
            hamiltonian,
            params,
        }
    }

    /// Sum of all coordinates, the total population.
    pub fn total_population(vars: &[String]) -> Expr {
        Expr::sum(vars.iter().map(|v| Expr::Var(v.clone())))
    }

    pub fn vars(&self) -> &[String] {
        self.structure.vars()
    }

    /// Symbolic right-hand sides `{x^μ, H}`.
    pub fn vector_field_exprs(&self) -> Vec<Expr> {
        self.structure.sharp(&self.hamiltonian)
    }

    pub fn compile(&self) -> Result<CompiledField, EvalError> {
        CompiledField::new(self.vars(), &self.vector_field_exprs(), &self.params)
    }

    /// The Hamiltonian vector field at `state`.
    pub fn velocity(&self, state: &[f64]) -> Result<Vec<f64>, EvalError> {
        use crate::field::VectorField;
        self.compile()?.eval_vec(state)
    }

    pub fn hamiltonian_at(&self, state: &[f64]) -> Result<f64, EvalError> {
        self.hamiltonian.compile(self.vars(), &self.params)?.eval(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{param, var};
    use crate::poisson::tests::sir_first;

    fn params() -> ParamMap {
        [("beta", 1.0), ("alpha", 0.1), ("mu", 0.1)]
            .into_iter()
            .map(|(k, v)| (String::from(k), v))
            .collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn sir_velocity() {
        let ps = sir_first();
        let h = HamiltonianSystem::total_population(ps.vars());
        let hs = HamiltonianSystem::new(ps, h, params());
        let v = hs.velocity(&[0.8, 0.1, 0.1]).unwrap();
        assert!(close(&v, &[-0.08, 0.07, 0.01], 1e-15), "{v:?}");
    }

    #[test]
    fn constant_hamiltonian_gives_zero_field() {
        let hs = HamiltonianSystem::new(sir_first(), Expr::Const(3.0), params());
        assert_eq!(hs.velocity(&[0.2, 0.3, 0.5]).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn endemic_sirs_velocity() {
        let (s, i) = (var("S"), var("I"));
        let ps = PoissonStructure::zero(["S", "I", "R"])
            .with("S", "R", -(param("beta") * s.clone() * i.clone()) + param("mu") * i.clone())
            .unwrap()
            .with(
                "I",
                "R",
                param("beta") * s * i.clone() - (param("alpha") + param("mu")) * i,
            )
            .unwrap();
        let h = HamiltonianSystem::total_population(ps.vars());
        let hs = HamiltonianSystem::new(ps, h, params());
        let v = hs.velocity(&[0.8, 0.1, 0.1]).unwrap();
        assert!(close(&v, &[-0.07, 0.06, 0.01], 1e-15), "{v:?}");
    }
}
