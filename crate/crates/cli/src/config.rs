//! JSON run configurations.
//!
//! A model is given as a built-in name (`"sir"`), an object naming a
//! built-in with its parameters (`{"builtin": "sirs", "params": {...}}`),
//! an explicit compartment/flow object, or a path to a JSON file holding
//! any of these. Relative paths resolve against the directory of the file
//! that mentions them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hamepi_core::bihamiltonian::{Kind, KIND_NAMES};
use hamepi_core::coupling::{couple, population_vars, InteractingSystem, Transfer};
use hamepi_core::model::builtin::{self, BuiltinError};
use hamepi_core::model::CompartmentalModel;
use hamepi_core::sampling::{Domain, Sampler};
use hamepi_core::solver::{Dopri5, Rk4, SolverError, Trajectory};
use hamepi_core::{parse, Expr, ParamMap, PoissonStructure, VectorField};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, runtime, CliError, Result};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Adaptive,
}

/// A configuration file as written. Which fields are needed depends on the
/// command; the accessors below validate them on use.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Value>,
    /// Parameters for built-in models named by a bare string, and for a
    /// `poisson` structure.
    #[serde(default)]
    pub params: ParamMap,
    pub interacting: Option<Value>,
    pub poisson: Option<PoissonSpec>,
    /// A flat list, or one list per population for interacting systems.
    pub initial: Option<Value>,
    pub s0: Option<f64>,
    pub t_end: Option<f64>,
    pub method: Option<Method>,
    pub dt: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub output_dt: Option<f64>,
    pub nonneg_guard: Option<bool>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub tol: Option<f64>,
    pub grid: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(skip)]
    pub base: PathBuf,
}

/// A resolved model, remembering the built-in it came from.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub model: CompartmentalModel,
    pub builtin: Option<String>,
}

impl ModelSpec {
    /// The bi-Hamiltonian kind, for the built-ins that have one.
    pub fn kind(&self) -> Option<Kind> {
        let name = self.builtin.as_deref()?;
        if !KIND_NAMES.contains(&name) {
            return None;
        }
        Kind::from_name(name, self.model.params()).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Rk4 { dt: f64 },
    Adaptive { rtol: f64, atol: f64, output_dt: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub t_end: f64,
    pub scheme: Scheme,
    pub guard: bool,
}

impl Integration {
    pub fn run<F: VectorField>(&self, field: &F, y0: &[f64]) -> Result<Trajectory> {
        match self.scheme {
            Scheme::Rk4 { dt } => {
                let mut rk = Rk4::new(dt);
                rk.nonneg_guard = self.guard;
                rk.integrate(field, y0, self.t_end)
            }
            Scheme::Adaptive { rtol, atol, output_dt } => {
                let mut dp = Dopri5::new(rtol, atol);
                dp.nonneg_guard = self.guard;
                match output_dt {
                    Some(h) => dp.integrate_at(field, y0, &time_grid(self.t_end, h)),
                    None => dp.integrate(field, y0, self.t_end),
                }
            }
        }
        .map_err(solver_error)
    }
}

pub fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::InvalidOption { name, .. } => invalid(name, e),
        SolverError::DimensionMismatch { .. } | SolverError::InitialState(_) => invalid("initial", e),
        other => runtime(other),
    }
}

/// `0, h, 2h, …` up to and including `t_end`.
pub fn time_grid(t_end: f64, h: f64) -> Vec<f64> {
    let n = (t_end / h).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * h).filter(|&t| t <= t_end).collect();
    match times.last_mut() {
        Some(last) if *last > 0.0 && t_end - *last <= 1e-9 * h => *last = t_end,
        Some(last) if *last < t_end => times.push(t_end),
        _ => {}
    }
    times
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn from_json(text: &str, base: PathBuf) -> Result<Self> {
        let mut cfg: RunConfig = deserialize_str(text, "")?;
        cfg.base = base;
        Ok(cfg)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let v = self.model.as_ref().ok_or_else(|| invalid("model", "required"))?;
        resolve_model(v, "model", &self.base, &self.params)
    }

    pub fn t_end(&self) -> Result<f64> {
        positive("t_end", self.t_end)?.ok_or_else(|| invalid("t_end", "required"))
    }

    pub fn integration(&self) -> Result<Integration> {
        let t_end = self.t_end()?;
        let dt = positive("dt", self.dt)?;
        let rtol = positive("rtol", self.rtol)?;
        let atol = positive("atol", self.atol)?;
        let output_dt = positive("output_dt", self.output_dt)?;
        let method = self.method.unwrap_or(if dt.is_some() { Method::Rk4 } else { Method::Adaptive });
        let scheme = match method {
            Method::Rk4 => {
                for (name, given) in [("rtol", rtol), ("atol", atol), ("output_dt", output_dt)] {
                    if given.is_some() {
                        return Err(invalid(name, "only used by the adaptive method"));
                    }
                }
                Scheme::Rk4 {
                    dt: dt.ok_or_else(|| invalid("dt", "required by the rk4 method"))?,
                }
            }
            Method::Adaptive => {
                if dt.is_some() {
                    return Err(invalid("dt", "only used by the rk4 method"));
                }
                Scheme::Adaptive {
                    rtol: rtol.unwrap_or(DEFAULT_RTOL),
                    atol: atol.unwrap_or(DEFAULT_ATOL),
                    output_dt,
                }
            }
        };
        Ok(Integration {
            t_end,
            scheme,
            guard: self.nonneg_guard.unwrap_or(true),
        })
    }

    /// The initial state, flattened, checked against `dim`.
    pub fn initial(&self, dim: usize) -> Result<Vec<f64>> {
        let v = self.initial.as_ref().ok_or_else(|| invalid("initial", "required"))?;
        let mut out = Vec::new();
        flatten_numbers(v, "initial", &mut out)?;
        if out.len() != dim {
            return Err(invalid(
                "initial",
                format!("has {} components, the system has {dim}", out.len()),
            ));
        }
        Ok(out)
    }

    /// Builds the interacting system. Transfers listed in both orders must
    /// be negatives of each other; the check evaluates both at seeded
    /// sample points.
    pub fn interacting(&self, seed: u64) -> Result<InteractingSystem> {
        let v = self.interacting.as_ref().ok_or_else(|| invalid("interacting", "required"))?;
        let (raw, base): (InteractingRaw, PathBuf) = match v {
            Value::String(file) => {
                let path = self.base.join(file);
                let text = read(&path)?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (deserialize_str(&text, "interacting")?, base)
            }
            other => (deserialize_value(other, "interacting")?, self.base.clone()),
        };
        let models = raw
            .populations
            .iter()
            .enumerate()
            .map(|(k, p)| {
                resolve_model(p, &format!("interacting.populations[{k}]"), &base, &self.params)
                    .map(|m| m.model)
            })
            .collect::<Result<Vec<_>>>()?;
        let vars = population_vars(&models);
        let names: Vec<&str> = vars.iter().map(String::as_str).collect();

        let mut transfers: Vec<(usize, Transfer)> = Vec::new();
        for (k, t) in raw.transfers.iter().enumerate() {
            let path = format!("interacting.transfers[{k}]");
            let rate = parse(&t.rate, &names).map_err(|e| invalid(format!("{path}.rate"), e))?;
            let reverse = transfers.iter().find(|(_, u)| u.a == t.b && u.b == t.a);
            if let Some((j, u)) = reverse {
                skew_consistent(&u.rate, &rate, &vars, &raw.params, seed).map_err(|why| {
                    invalid(
                        &path,
                        format!(
                            "({},{}) is not the negative of ({},{}) in transfers[{j}]: {why}",
                            t.a, t.b, u.a, u.b
                        ),
                    )
                })?;
                continue;
            }
            transfers.push((k, Transfer::new(t.a, t.b, rate)));
        }
        couple(models, transfers.into_iter().map(|(_, t)| t).collect(), raw.params)
            .map_err(|e| invalid("interacting", e))
    }

    pub fn poisson(&self) -> Result<PoissonStructure> {
        self.poisson
            .as_ref()
            .ok_or_else(|| invalid("poisson", "required"))?
            .structure()
    }
}

fn skew_consistent(
    forward: &Expr,
    backward: &Expr,
    vars: &[String],
    params: &ParamMap,
    seed: u64,
) -> std::result::Result<(), String> {
    let f = forward.compile(vars, params).map_err(|e| e.to_string())?;
    let b = backward.compile(vars, params).map_err(|e| e.to_string())?;
    for p in Sampler::new(seed).points(vars.len(), 64, Domain::INTERIOR) {
        let (x, y) = (
            f.eval(&p).map_err(|e| e.to_string())?,
            b.eval(&p).map_err(|e| e.to_string())?,
        );
        // NaN fails too
        let skew = (x + y).abs() <= 1e-12 * (1.0 + x.abs() + y.abs());
        if !skew {
            return Err(format!("the two rates sum to {:e} at {p:?}", x + y));
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InteractingRaw {
    populations: Vec<Value>,
    #[serde(default)]
    transfers: Vec<TransferRaw>,
    #[serde(default)]
    params: ParamMap,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferRaw {
    a: usize,
    b: usize,
    rate: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuiltinRaw {
    builtin: String,
    #[serde(default)]
    params: ParamMap,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomRaw {
    compartments: Vec<String>,
    #[serde(default)]
    params: ParamMap,
    flows: Vec<FlowRaw>,
    distinguished: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowRaw {
    from: String,
    to: String,
    rate: String,
}

fn resolve_model(v: &Value, path: &str, base: &Path, shared: &ParamMap) -> Result<ModelSpec> {
    match v {
        Value::String(name) if builtin::NAMES.contains(&name.as_str()) => {
            build_builtin(name, shared, path)
        }
        Value::String(file) => {
            let file = base.join(file);
            let text = read(&file)?;
            let value: Value = deserialize_str(&text, path)?;
            let base = file.parent().map(Path::to_path_buf).unwrap_or_default();
            resolve_model(&value, path, &base, shared)
        }
        Value::Object(map) if map.contains_key("builtin") => {
            let raw: BuiltinRaw = deserialize_value(v, path)?;
            let mut params = shared.clone();
            params.extend(raw.params);
            build_builtin(&raw.builtin, &params, path)
        }
        Value::Object(_) => {
            let raw: CustomRaw = deserialize_value(v, path)?;
            custom_model(raw, path).map(|model| ModelSpec { model, builtin: None })
        }
        _ => Err(invalid(path, "expected a built-in name, a file path or a model object")),
    }
}

fn build_builtin(name: &str, params: &ParamMap, path: &str) -> Result<ModelSpec> {
    let model = builtin::by_name(name, params).map_err(|e| match e {
        BuiltinError::Unknown(_) => invalid(
            format!("{path}.builtin"),
            format!("{e}; expected one of {}", builtin::NAMES.join(", ")),
        ),
        BuiltinError::MissingParameter(_) => invalid(format!("{path}.params"), e),
        BuiltinError::Model(_) => invalid(path, e),
    })?;
    Ok(ModelSpec {
        model,
        builtin: Some(name.to_string()),
    })
}

fn custom_model(raw: CustomRaw, path: &str) -> Result<CompartmentalModel> {
    let mut m = CompartmentalModel::new(raw.compartments.iter().cloned(), raw.params)
        .map_err(|e| invalid(format!("{path}.compartments"), e))?;
    let vars: Vec<&str> = raw.compartments.iter().map(String::as_str).collect();
    for (k, f) in raw.flows.iter().enumerate() {
        let at = format!("{path}.flows[{k}]");
        let rate = parse(&f.rate, &vars).map_err(|e| invalid(format!("{at}.rate"), e))?;
        if let Some(p) = rate.parameters().into_iter().find(|p| !m.params().contains_key(p)) {
            return Err(invalid(format!("{at}.rate"), format!("unknown parameter `{p}`")));
        }
        m.add_flow(&f.from, &f.to, rate).map_err(|e| invalid(&at, e))?;
    }
    if let Some(d) = &raw.distinguished {
        m.set_distinguished(d)
            .map_err(|e| invalid(format!("{path}.distinguished"), e))?;
    }
    Ok(m)
}

/// A Poisson structure as `{"dim": n, "vars": [...], "brackets": {"S,I": "expr"}}`,
/// listing the nonzero entries above the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoissonSpec {
    pub dim: usize,
    pub vars: Vec<String>,
    pub brackets: BTreeMap<String, String>,
}

impl PoissonSpec {
    pub fn from_structure(ps: &PoissonStructure) -> Self {
        let vars = ps.vars().to_vec();
        let brackets = ps
            .upper_entries()
            .filter(|(_, _, e)| !e.is_zero())
            .map(|(i, j, e)| (format!("{},{}", vars[i], vars[j]), e.to_string()))
            .collect();
        Self {
            dim: vars.len(),
            vars,
            brackets,
        }
    }

    pub fn structure(&self) -> Result<PoissonStructure> {
        if self.dim != self.vars.len() {
            return Err(invalid(
                "poisson.dim",
                format!("is {} but {} variables are listed", self.dim, self.vars.len()),
            ));
        }
        let names: Vec<&str> = self.vars.iter().map(String::as_str).collect();
        let mut ps = PoissonStructure::zero(self.vars.iter().cloned());
        for (key, text) in &self.brackets {
            let path = format!("poisson.brackets.{key}");
            let (a, b) = key
                .split_once(',')
                .map(|(a, b)| (a.trim(), b.trim()))
                .ok_or_else(|| invalid(&path, "key must be two variables separated by a comma"))?;
            let (i, j) = match (ps.index_of(a), ps.index_of(b)) {
                (Some(i), Some(j)) => (i, j),
                _ => return Err(invalid(&path, "unknown variable in key")),
            };
            if i >= j {
                return Err(invalid(&path, "list each entry once, earlier variable first"));
            }
            let e = parse(text, &names).map_err(|e| invalid(&path, e))?;
            ps.set_entry(i, j, e).map_err(|e| invalid(&path, e))?;
        }
        Ok(ps)
    }
}

fn flatten_numbers(v: &Value, path: &str, out: &mut Vec<f64>) -> Result<()> {
    match v {
        Value::Array(items) => {
            for (k, item) in items.iter().enumerate() {
                flatten_numbers(item, &format!("{path}[{k}]"), out)?;
            }
            Ok(())
        }
        Value::Number(n) => {
            out.push(n.as_f64().ok_or_else(|| invalid(path, "not a finite number"))?);
            Ok(())
        }
        _ => Err(invalid(path, "expected a number or a list of numbers")),
    }
}

/// `Ok(None)` when absent; an error naming the field when not positive.
pub fn positive(name: &str, value: Option<f64>) -> Result<Option<f64>> {
    match value {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(invalid(name, format!("must be positive and finite, got {x}")))
        }
        other => Ok(other),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn join_path(prefix: &str, inner: &str) -> String {
    match (prefix.is_empty(), inner == "." || inner.is_empty()) {
        (true, true) => "config".into(),
        (true, false) => inner.into(),
        (false, true) => prefix.into(),
        (false, false) => format!("{prefix}.{inner}"),
    }
}

fn deserialize_str<T: DeserializeOwned>(text: &str, prefix: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| invalid(join_path(prefix, &e.path().to_string()), e.inner()))
}

fn deserialize_value<T: DeserializeOwned>(v: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v.clone())
        .map_err(|e| invalid(join_path(prefix, &e.path().to_string()), e.inner()))
}
