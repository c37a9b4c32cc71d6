//! Time integration with conservation diagnostics, and exact solutions by
//! Casimir reduction.

mod dopri;
pub mod exact;
pub mod quad;
mod rk4;
pub mod roots;

use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{EvalError, Expr, ParamMap};

pub use dopri::{integrate_adaptive, Dopri5};
pub use exact::{exact_sirs, exact_vacc_i, exact_vacc_s, ExactError, ExactSolution};
pub use rk4::{integrate_rk4, Rk4};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("`{name}` must be {requirement}, got {value}")]
    InvalidOption {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("initial state has {found} components, the system has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("initial state is outside the domain: {0}")]
    InitialState(ExitReason),
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("no convergence after {steps} steps (t = {t})")]
    TooManySteps { steps: usize, t: f64 },
    #[error("output times must be increasing and lie in [0, t_end]")]
    BadOutputTimes,
}

/// Why integration stopped early.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExitReason {
    #[error("component {index} became negative ({value})")]
    Negative { index: usize, value: f64 },
    #[error("vector field could not be evaluated: {0}")]
    Eval(EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainExit {
    /// Time the integrator was trying to reach when the exit occurred.
    pub time: f64,
    pub reason: ExitReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Set when integration was cut short; the stored samples are all
    /// inside the domain.
    pub domain_exit: Option<DomainExit>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Column `index` of the states.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[index]).collect()
    }

    /// Values of `h` and, if given, `c` along the trajectory with their
    /// largest deviation from the initial value.
    pub fn diagnostics(
        &self,
        vars: &[String],
        params: &ParamMap,
        h: &Expr,
        c: Option<&Expr>,
    ) -> Result<DriftReport, EvalError> {
        let series = |e: &Expr| -> Result<Series, EvalError> {
            let compiled = e.compile(vars, params)?;
            let mut values = Vec::with_capacity(self.len());
            let mut failures = Vec::new();
            for (k, s) in self.states.iter().enumerate() {
                match compiled.eval(s) {
                    Ok(v) => values.push(v),
                    Err(err) => {
                        values.push(f64::NAN);
                        failures.push((k, err));
                    }
                }
            }
            let first = values.first().copied().unwrap_or(0.0);
            let drift = values
                .iter()
                .filter(|v| !v.is_nan())
                .fold(0.0_f64, |m, v| m.max(libm::fabs(v - first)));
            Ok(Series {
                values,
                drift,
                failures,
            })
        };
        Ok(DriftReport {
            hamiltonian: series(h)?,
            casimir: c.map(series).transpose()?,
        })
    }
}

/// Per-sample values of a conserved quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    /// `max_t |q(t) − q(0)|` over the samples that evaluated.
    pub drift: f64,
    /// Samples where evaluation failed, with the error.
    pub failures: Vec<(usize, EvalError)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub hamiltonian: Series,
    pub casimir: Option<Series>,
}

impl DriftReport {
    pub fn h_drift(&self) -> f64 {
        self.hamiltonian.drift
    }

    pub fn casimir_drift(&self) -> Option<f64> {
        self.casimir.as_ref().map(|c| c.drift)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), SolverError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidOption {
            name,
            requirement: "positive and finite",
            value,
        })
    }
}

fn first_negative(y: &[f64]) -> Option<ExitReason> {
    y.iter()
        .position(|v| *v < 0.0 || v.is_nan())
        .map(|index| ExitReason::Negative {
            index,
            value: y[index],
        })
}
