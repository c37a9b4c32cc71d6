use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{CompiledExpr, EvalError, Expr, ParamMap};

/// An autonomous vector field `ẋ = F(x)`.
pub trait VectorField {
    fn dim(&self) -> usize;

    /// Writes `F(state)` into `out`. Both slices have length [`dim`](Self::dim).
    fn eval(&self, state: &[f64], out: &mut [f64]) -> Result<(), EvalError>;

    fn eval_vec(&self, state: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut out = alloc::vec![0.0; self.dim()];
        self.eval(state, &mut out)?;
        Ok(out)
    }
}

impl<F: VectorField + ?Sized> VectorField for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, state: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        (**self).eval(state, out)
    }
}

/// One compiled expression per component.
#[derive(Debug, Clone)]
pub struct CompiledField {
    components: Vec<CompiledExpr>,
}

impl CompiledField {
    pub fn new(vars: &[String], components: &[Expr], params: &ParamMap) -> Result<Self, EvalError> {
        let components = components
            .iter()
            .map(|e| e.compile(vars, params))
            .collect::<Result<_, _>>()?;
        Ok(Self { components })
    }
}

impl VectorField for CompiledField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, state: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(state)?;
        }
        Ok(())
    }
}
