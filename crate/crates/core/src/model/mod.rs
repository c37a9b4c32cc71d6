//! Compartmental models as lists of flow arrows.
//!
//! A flow `A → B` with rate `r` contributes `−r` to `ẋ^A` and `+r` to `ẋ^B`,
//! so the total population is conserved by construction. Such a model is
//! Hamiltonian with `H = Σ x^μ` and the canonical brackets
//! `{x^μ, x^ν} = 0`, `{x^μ, x^M} = f^μ` for a distinguished compartment `M`.

pub mod builtin;
mod rescale;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{parse, EvalError, Expr, ParamMap, ParseError};
use crate::field::{CompiledField, VectorField};
use crate::poisson::{HamiltonianSystem, PoissonStructure};

pub use rescale::{rescale_nonconstant, GrowingPopulationSir};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown compartment `{0}`")]
    UnknownCompartment(String),
    #[error("compartment `{0}` is listed twice")]
    DuplicateCompartment(String),
    #[error("a model needs at least one compartment")]
    NoCompartments,
    #[error("parameter `{name}` must be non-negative, got {value}")]
    NegativeParameter { name: String, value: f64 },
    #[error("flow {flow} rate depends on the distinguished compartment `{compartment}`")]
    DistinguishedDependence { flow: usize, compartment: String },
    #[error("rate {which} is not linear and homogeneous in the compartments; the rescaling assumes linear transfer functions")]
    Nonlinear { which: &'static str },
    #[error("right-hand sides do not sum to zero (max |Σ ẋ| = {defect})")]
    NotClosed { defect: f64 },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A directed transfer between compartments (indices into the model).
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub from: usize,
    pub to: usize,
    pub rate: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentalModel {
    compartments: Vec<String>,
    params: ParamMap,
    flows: Vec<Flow>,
    distinguished: usize,
}

impl CompartmentalModel {
    /// A model with no flows; the last compartment is distinguished.
    pub fn new<S, I>(compartments: I, params: ParamMap) -> Result<Self, ModelError>
    where
        S: Into<String>,
        I: IntoIterator<Item = S>,
    {
        let compartments: Vec<String> = compartments.into_iter().map(Into::into).collect();
        if compartments.is_empty() {
            return Err(ModelError::NoCompartments);
        }
        let mut seen = BTreeSet::new();
        for c in &compartments {
            if !seen.insert(c.as_str()) {
                return Err(ModelError::DuplicateCompartment(c.clone()));
            }
        }
        let distinguished = compartments.len() - 1;
        Ok(Self {
            compartments,
            params,
            flows: Vec::new(),
            distinguished,
        })
    }

    pub fn compartments(&self) -> &[String] {
        &self.compartments
    }

    pub fn params(&self) -> &ParamMap {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamMap {
        &mut self.params
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn distinguished(&self) -> usize {
        self.distinguished
    }

    pub fn distinguished_name(&self) -> &str {
        &self.compartments[self.distinguished]
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ModelError> {
        self.compartments
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ModelError::UnknownCompartment(name.into()))
    }

    /// Adds the arrow `from → to` carrying `rate`.
    pub fn add_flow(&mut self, from: &str, to: &str, rate: Expr) -> Result<(), ModelError> {
        let flow = Flow {
            from: self.index_of(from)?,
            to: self.index_of(to)?,
            rate,
        };
        self.flows.push(flow);
        Ok(())
    }

    pub fn with_flow(mut self, from: &str, to: &str, rate: Expr) -> Result<Self, ModelError> {
        self.add_flow(from, to, rate)?;
        Ok(self)
    }

    /// Adds a flow whose rate is parsed with the compartments as variables.
    pub fn with_flow_str(self, from: &str, to: &str, rate: &str) -> Result<Self, ModelError> {
        let vars: Vec<&str> = self.compartments.iter().map(String::as_str).collect();
        let rate = parse(rate, &vars)?;
        self.with_flow(from, to, rate)
    }

    pub fn set_distinguished(&mut self, name: &str) -> Result<(), ModelError> {
        self.distinguished = self.index_of(name)?;
        Ok(())
    }

    pub fn with_distinguished(mut self, name: &str) -> Result<Self, ModelError> {
        self.set_distinguished(name)?;
        Ok(self)
    }

    /// `ẋ^A = Σ_{into A} rate − Σ_{out of A} rate`.
    pub fn to_ode(&self) -> OdeSystem {
        let mut rhs = alloc::vec![Expr::zero(); self.compartments.len()];
        for f in &self.flows {
            if f.from == f.to {
                continue;
            }
            rhs[f.from] = Expr::sub(rhs[f.from].clone(), f.rate.clone());
            rhs[f.to] = Expr::add(rhs[f.to].clone(), f.rate.clone());
        }
        OdeSystem {
            vars: self.compartments.clone(),
            rhs,
            params: self.params.clone(),
        }
    }

    /// Indices of flows whose rate mentions the distinguished compartment.
    pub fn flows_on_distinguished(&self) -> Vec<usize> {
        let m = self.distinguished_name();
        self.flows
            .iter()
            .enumerate()
            .filter(|(_, f)| f.rate.contains_var(m))
            .map(|(i, _)| i)
            .collect()
    }

    /// The canonical Hamiltonian system. Rates that depend on the
    /// distinguished compartment are restricted to the unit-population
    /// hypersurface by `x^M = 1 − Σ_{μ≠M} x^μ`; those flows are listed in
    /// [`CanonicalSystem::eliminated_flows`].
    pub fn canonical_poisson(&self) -> CanonicalSystem {
        CanonicalSystem {
            system: self.to_ode().canonical_structure(self.distinguished),
            eliminated_flows: self.flows_on_distinguished(),
        }
    }

    /// Like [`canonical_poisson`](Self::canonical_poisson) but refuses rates
    /// that depend on the distinguished compartment. Needed when the
    /// population of this model is not conserved on its own (coupling).
    pub fn canonical_poisson_strict(&self) -> Result<HamiltonianSystem, ModelError> {
        if let Some(&flow) = self.flows_on_distinguished().first() {
            return Err(ModelError::DistinguishedDependence {
                flow,
                compartment: self.distinguished_name().into(),
            });
        }
        Ok(self.canonical_poisson().system)
    }
}

/// Result of [`CompartmentalModel::canonical_poisson`].
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem {
    pub system: HamiltonianSystem,
    /// Flows whose rates were restricted to the hypersurface `Σx = 1`.
    /// Off that hypersurface their dynamics differs from the raw model.
    pub eliminated_flows: Vec<usize>,
}

/// Explicit right-hand sides `ẋ^μ = f^μ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeSystem {
    pub vars: Vec<String>,
    pub rhs: Vec<Expr>,
    pub params: ParamMap,
}

impl OdeSystem {
    pub fn compile(&self) -> Result<CompiledField, EvalError> {
        CompiledField::new(&self.vars, &self.rhs, &self.params)
    }

    /// `Σ_μ f^μ`, simplified.
    pub fn total_rate(&self) -> Expr {
        Expr::sum(self.rhs.iter().cloned())
    }

    /// Largest `|Σ_μ f^μ|` over `samples`.
    pub fn zero_sum_defect(&self, samples: &[Vec<f64>]) -> Result<f64, EvalError> {
        let field = self.compile()?;
        let mut worst: f64 = 0.0;
        for p in samples {
            let v = field.eval_vec(p)?;
            worst = worst.max(libm::fabs(v.iter().sum::<f64>()));
        }
        Ok(worst)
    }

    /// Checks closure numerically for raw right-hand sides, then builds the
    /// canonical structure.
    pub fn canonical_checked(
        &self,
        distinguished: usize,
        samples: &[Vec<f64>],
        tol: f64,
    ) -> Result<HamiltonianSystem, ModelError> {
        let defect = self.zero_sum_defect(samples)?;
        if !(defect <= tol) {
            return Err(ModelError::NotClosed { defect });
        }
        Ok(self.canonical_structure(distinguished))
    }

    /// `{x^μ, x^M} = f^μ|_{x^M = 1 − Σ others}`, all other brackets zero,
    /// `H = Σ x^μ`. Assumes the right-hand sides sum to zero.
    pub fn canonical_structure(&self, distinguished: usize) -> HamiltonianSystem {
        let m = &self.vars[distinguished];
        let rest = Expr::sub(
            Expr::one(),
            Expr::sum(
                self.vars
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != distinguished)
                    .map(|(_, v)| Expr::Var(v.clone())),
            ),
        );
        let mut ps = PoissonStructure::zero(self.vars.iter().cloned());
        for (mu, f) in self.rhs.iter().enumerate() {
            if mu == distinguished {
                continue;
            }
            let reduced = if f.contains_var(m) {
                f.substitute(m, &rest)
            } else {
                f.clone()
            };
            ps.set_entry(mu, distinguished, reduced)
                .expect("mu differs from the distinguished index");
        }
        let h = HamiltonianSystem::total_population(&self.vars);
        HamiltonianSystem::new(ps, h, self.params.clone())
    }
}
