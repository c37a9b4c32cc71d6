//! Built-in SIR-family and SEIR models.
//!
//! Parameter names used in rate expressions: `alpha` (recovery), `beta`
//! (transmission), `mu` (loss of immunity), `v` (vaccination), `epsilon`
//! (incubation), `d_S`, `d_I`, `d_R` (death rates).

use alloc::string::String;

use super::{CompartmentalModel, ModelError};
use crate::expr::{param, var, Expr, ParamMap};

fn params(pairs: &[(&str, f64)]) -> Result<ParamMap, ModelError> {
    let mut out = ParamMap::new();
    for &(name, value) in pairs {
        if !(value >= 0.0) {
            return Err(ModelError::NegativeParameter {
                name: name.into(),
                value,
            });
        }
        out.insert(String::from(name), value);
    }
    Ok(out)
}

fn sir_base(p: ParamMap, transmission: Expr) -> Result<CompartmentalModel, ModelError> {
    CompartmentalModel::new(["S", "I", "R"], p)?
        .with_flow("S", "I", transmission * var("S") * var("I"))?
        .with_flow("I", "R", param("alpha") * var("I"))
}

/// Kermack–McKendrick SIR: `S → I` at `βSI`, `I → R` at `αI`.
pub fn sir(alpha: f64, beta: f64) -> Result<CompartmentalModel, ModelError> {
    sir_base(params(&[("alpha", alpha), ("beta", beta)])?, param("beta"))
}

/// Generalized SIR: transmission `β(·) S I` with an arbitrary rate
/// expression `beta_rate` (for example `phi(S+I)/(S+I)`), plus the
/// transfers `R → S` at `phi1` and `R → I` at `phi2`. Parameters referenced
/// by the expressions besides `alpha` go in `extra`.
pub fn generalized_sir(
    alpha: f64,
    beta_rate: Expr,
    phi1: Expr,
    phi2: Expr,
    extra: ParamMap,
) -> Result<CompartmentalModel, ModelError> {
    let mut p = params(&[("alpha", alpha)])?;
    p.extend(extra);
    let mut m = sir_base(p, beta_rate)?;
    if !phi1.is_zero() {
        m.add_flow("R", "S", phi1)?;
    }
    if !phi2.is_zero() {
        m.add_flow("R", "I", phi2)?;
    }
    Ok(m)
}

/// Endemic SIRS: recovered individuals return to `S` at `μI`, balanced
/// by an extra `I → R` arrow at `μI`.
pub fn sirs_endemic(alpha: f64, beta: f64, mu: f64) -> Result<CompartmentalModel, ModelError> {
    let p = params(&[("alpha", alpha), ("beta", beta), ("mu", mu)])?;
    let mut m = sir_base(p, param("beta"))?;
    if mu != 0.0 {
        m.add_flow("R", "S", param("mu") * var("I"))?;
        m.add_flow("I", "R", param("mu") * var("I"))?;
    }
    Ok(m)
}

/// SIR with vaccination `S → R` at rate `vI`.
pub fn sir_vacc_i(alpha: f64, beta: f64, v: f64) -> Result<CompartmentalModel, ModelError> {
    let p = params(&[("alpha", alpha), ("beta", beta), ("v", v)])?;
    sir_base(p, param("beta"))?.with_flow("S", "R", param("v") * var("I"))
}

/// SIR with vaccination `S → R` at rate `vS`.
pub fn sir_vacc_s(alpha: f64, beta: f64, v: f64) -> Result<CompartmentalModel, ModelError> {
    let p = params(&[("alpha", alpha), ("beta", beta), ("v", v)])?;
    sir_base(p, param("beta"))?.with_flow("S", "R", param("v") * var("S"))
}

/// SIR with vital dynamics. Births `d_S S + d_I I + d_R R` enter `S` and
/// balance the deaths, so the population stays constant. The `d_S S`
/// terms cancel; deaths in `I` and `R` appear as arrows back to `S`.
pub fn sir_vital(
    alpha: f64,
    beta: f64,
    d_s: f64,
    d_i: f64,
    d_r: f64,
) -> Result<CompartmentalModel, ModelError> {
    let p = params(&[
        ("alpha", alpha),
        ("beta", beta),
        ("d_S", d_s),
        ("d_I", d_i),
        ("d_R", d_r),
    ])?;
    sir_base(p, param("beta"))?
        .with_flow("I", "S", param("d_I") * var("I"))?
        .with_flow("R", "S", param("d_R") * var("R"))
}

/// Generalized SEIR: `S → E` at `βSI`, `E → I` at `εE`, `I → R` at `αI`,
/// and `R → S`, `R → E`, `R → I` at `phi1`, `phi2`, `phi3`.
pub fn seir(
    alpha: f64,
    beta: f64,
    epsilon: f64,
    phi: [Expr; 3],
    extra: ParamMap,
) -> Result<CompartmentalModel, ModelError> {
    let mut p = params(&[("alpha", alpha), ("beta", beta), ("epsilon", epsilon)])?;
    p.extend(extra);
    let mut m = CompartmentalModel::new(["S", "E", "I", "R"], p)?
        .with_flow("S", "E", param("beta") * var("S") * var("I"))?
        .with_flow("E", "I", param("epsilon") * var("E"))?
        .with_flow("I", "R", param("alpha") * var("I"))?;
    for (target, rate) in ["S", "E", "I"].into_iter().zip(phi) {
        if !rate.is_zero() {
            m.add_flow("R", target, rate)?;
        }
    }
    Ok(m)
}

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 6] = ["sir", "sirs", "vacc_i", "vacc_s", "vital", "seir"];

/// Looks up a built-in by name. Missing parameters default to zero, except
/// that `alpha` and `beta` are required.
pub fn by_name(name: &str, p: &ParamMap) -> Result<CompartmentalModel, BuiltinError> {
    let get = |k: &str| p.get(k).copied().unwrap_or(0.0);
    let need = |k: &'static str| p.get(k).copied().ok_or(BuiltinError::MissingParameter(k));
    let (alpha, beta) = (need("alpha")?, need("beta")?);
    let m = match name {
        "sir" => sir(alpha, beta),
        "sirs" => sirs_endemic(alpha, beta, get("mu")),
        "vacc_i" => sir_vacc_i(alpha, beta, get("v")),
        "vacc_s" => sir_vacc_s(alpha, beta, get("v")),
        "vital" => sir_vital(alpha, beta, get("d_S"), get("d_I"), get("d_R")),
        "seir" => seir(
            alpha,
            beta,
            need("epsilon")?,
            [Expr::zero(), Expr::zero(), Expr::zero()],
            ParamMap::new(),
        ),
        other => return Err(BuiltinError::Unknown(other.into())),
    }?;
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuiltinError {
    #[error("unknown built-in model `{0}`")]
    Unknown(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}
