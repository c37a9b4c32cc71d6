//! Generalized SIR with exponentially growing total population, and its
//! equivalent constant-population model in fractions `s = S/N`, `i = I/N`,
//! `r = R/N`.

use alloc::string::String;

use super::{CompartmentalModel, ModelError, OdeSystem};
use crate::expr::{param, var, Environment, Expr, ParamMap};

/// `Ṡ = bN − dS − βSI/N + φ₁`, `İ = βSI/N − αI − dI + φ₂`,
/// `Ṙ = αI − dR − φ₁ − φ₂` with `N = S + I + R`, so `Ṅ = (b − d)N`.
///
/// `phi1` and `phi2` are expressions in `S` and `I`. Parameter names
/// `alpha`, `beta`, `b`, `d` are reserved for the fields below.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowingPopulationSir {
    pub alpha: f64,
    pub beta: f64,
    pub birth: f64,
    pub death: f64,
    pub phi1: Expr,
    pub phi2: Expr,
    /// Parameters referenced by `phi1` and `phi2`.
    pub extra: ParamMap,
}

impl GrowingPopulationSir {
    pub fn new(alpha: f64, beta: f64, birth: f64, death: f64) -> Self {
        Self {
            alpha,
            beta,
            birth,
            death,
            phi1: Expr::zero(),
            phi2: Expr::zero(),
            extra: ParamMap::new(),
        }
    }

    pub fn params(&self) -> ParamMap {
        let mut p = self.extra.clone();
        for (k, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("b", self.birth),
            ("d", self.death),
        ] {
            p.insert(String::from(k), v);
        }
        p
    }

    /// The raw three-dimensional system in absolute numbers.
    pub fn raw_ode(&self) -> OdeSystem {
        let (s, i, r) = (var("S"), var("I"), var("R"));
        let n = s.clone() + i.clone() + r.clone();
        let infection = param("beta") * s.clone() * i.clone() / n.clone();
        let rhs = alloc::vec![
            param("b") * n - param("d") * s - infection.clone() + self.phi1.clone(),
            infection - param("alpha") * i.clone() - param("d") * i.clone() + self.phi2.clone(),
            param("alpha") * i - param("d") * r - self.phi1.clone() - self.phi2.clone(),
        ];
        OdeSystem {
            vars: ["S", "I", "R"].iter().map(|v| String::from(*v)).collect(),
            rhs,
            params: self.params(),
        }
    }
}

fn check_linear(phi: &Expr, which: &'static str, params: &ParamMap) -> Result<(), ModelError> {
    let nonlinear = Err(ModelError::Nonlinear { which });
    if phi.variables().iter().any(|v| v != "S" && v != "I") {
        return nonlinear;
    }
    for a in ["S", "I"] {
        let da = phi.diff(a);
        for b in ["S", "I"] {
            if !da.diff(b).is_zero() {
                return nonlinear;
            }
        }
    }
    let env = Environment::new().var("S", 0.0).var("I", 0.0).with_params(params);
    if phi.eval(&env)? != 0.0 {
        return nonlinear;
    }
    Ok(())
}

/// The constant-population model in `s, i, r`: `s → i` at `βsi`,
/// `i → r` at `αi`, and `r → s`, `r → i` at
/// `φ̃₁ = b − ds + φ₁(s,i) − (b−d)s`, `φ̃₂ = −di + φ₂(s,i) − (b−d)i`.
///
/// Dividing by `N` commutes with `φ` only when `φ` is linear and
/// homogeneous, so anything else is rejected.
pub fn rescale_nonconstant(m: &GrowingPopulationSir) -> Result<CompartmentalModel, ModelError> {
    let params = m.params();
    for (name, value) in [
        ("alpha", m.alpha),
        ("beta", m.beta),
        ("b", m.birth),
        ("d", m.death),
    ] {
        if !(value >= 0.0) {
            return Err(ModelError::NegativeParameter {
                name: name.into(),
                value,
            });
        }
    }
    check_linear(&m.phi1, "phi1", &params)?;
    check_linear(&m.phi2, "phi2", &params)?;

    let lower = |e: &Expr| e.rename(|v: &str| v.to_lowercase(), |p: &str| String::from(p));
    let (s, i) = (var("s"), var("i"));
    let growth = param("b") - param("d");
    let phi1 = param("b") - param("d") * s.clone() + lower(&m.phi1) - growth.clone() * s.clone();
    let phi2 = -(param("d") * i.clone()) + lower(&m.phi2) - growth * i.clone();

    let vanishes = |e: &Expr| e.bind_params(&params).is_zero();
    let (skip1, skip2) = (vanishes(&phi1), vanishes(&phi2));
    let mut out = CompartmentalModel::new(["s", "i", "r"], params.clone())?
        .with_flow("s", "i", param("beta") * s * i.clone())?
        .with_flow("i", "r", param("alpha") * i)?;
    if !skip1 {
        out.add_flow("r", "s", phi1)?;
    }
    if !skip2 {
        out.add_flow("r", "i", phi2)?;
    }
    Ok(out)
}
