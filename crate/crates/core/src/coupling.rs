//! Several compartmental populations exchanging individuals through their
//! distinguished compartments.
//!
//! Each population keeps its own canonical brackets `{x^μ_a, x^M_a} = f^μ_a`,
//! and the distinguished compartments are linked by
//! `{x^M_a, x^M_b} = −τ_ab` with `τ_ba = −τ_ab`. With `H = Σ_{a,μ} x^μ_a`,
//! Hamilton's equations add the transfer `−Σ_{k≠a} τ_ak` to `ẋ^M_a`, and
//! the grand total is conserved.
//!
//! Variables and per-population parameters are suffixed with the 1-based
//! population index: `S_1`, `beta_2`, ...

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::expr::{EvalError, Expr, ParamMap};
use crate::model::{CompartmentalModel, ModelError};
use crate::poisson::{HamiltonianSystem, PoissonStructure};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CouplingError {
    #[error("at least one population is required")]
    NoPopulations,
    #[error("population {population} has {found} compartments, expected {expected}")]
    MismatchedCompartments {
        population: usize,
        expected: usize,
        found: usize,
    },
    #[error("transfer references population {index}, but there are {count}")]
    PopulationOutOfRange { index: usize, count: usize },
    #[error("transfer from population {0} to itself")]
    SelfTransfer(usize),
    #[error("transfer between populations {a} and {b} is given more than once")]
    DuplicateTransfer { a: usize, b: usize },
    #[error("transfer ({a},{b}) depends on the distinguished variable `{variable}`")]
    DistinguishedInTransfer { a: usize, b: usize, variable: String },
    #[error("transfer ({a},{b}) depends on `{variable}`, which belongs to neither population")]
    ForeignVariable { a: usize, b: usize, variable: String },
    #[error("transfer ({a},{b}) uses unknown parameter `{name}`")]
    UnknownParameter { a: usize, b: usize, name: String },
    #[error("shared parameter `{0}` clashes with a per-population parameter")]
    ParameterClash(String),
    #[error("population {population}: {source}")]
    Model {
        population: usize,
        #[source]
        source: ModelError,
    },
    #[error("trajectory does not match the system: {0}")]
    TrajectoryMismatch(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A transfer `τ_ab` between populations `a` and `b` (1-based), written in
/// the suffixed variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Transfer {
    pub a: usize,
    pub b: usize,
    pub rate: Expr,
}

impl Transfer {
    pub fn new(a: usize, b: usize, rate: Expr) -> Self {
        Self { a, b, rate }
    }
}

/// `name_a` for the 1-based population index `a`.
pub fn suffixed(name: &str, a: usize) -> String {
    format!("{name}_{a}")
}

/// Suffixed variable names of the coupled system, population by population.
pub fn population_vars(models: &[CompartmentalModel]) -> Vec<String> {
    models
        .iter()
        .enumerate()
        .flat_map(|(k, m)| m.compartments().iter().map(move |c| suffixed(c, k + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractingSystem {
    models: Vec<CompartmentalModel>,
    width: usize,
    /// Keyed by 0-based `(a, b)` with `a < b`.
    tau: BTreeMap<(usize, usize), Expr>,
    system: HamiltonianSystem,
}

/// Builds the interacting system. `params` holds parameters shared by the
/// transfers (for example `kappa`).
pub fn couple(
    models: Vec<CompartmentalModel>,
    transfers: Vec<Transfer>,
    params: ParamMap,
) -> Result<InteractingSystem, CouplingError> {
    let n = models.len();
    let width = models.first().ok_or(CouplingError::NoPopulations)?.compartments().len();
    for (k, m) in models.iter().enumerate() {
        if m.compartments().len() != width {
            return Err(CouplingError::MismatchedCompartments {
                population: k + 1,
                expected: width,
                found: m.compartments().len(),
            });
        }
    }

    let vars = population_vars(&models);
    let mut all_params = params;
    let mut ps = PoissonStructure::zero(vars.iter().cloned());

    for (k, m) in models.iter().enumerate() {
        let a = k + 1;
        for (name, value) in m.params() {
            if all_params.insert(suffixed(name, a), *value).is_some() {
                return Err(CouplingError::ParameterClash(suffixed(name, a)));
            }
        }
        let local = m
            .canonical_poisson_strict()
            .map_err(|source| CouplingError::Model { population: a, source })?;
        let md = m.distinguished();
        for mu in (0..width).filter(|&mu| mu != md) {
            let f = local.structure.entry(mu, md).rename(|v| suffixed(v, a), |p| suffixed(p, a));
            ps.set_entry(k * width + mu, k * width + md, f)
                .expect("distinct indices");
        }
    }

    let mut tau = BTreeMap::new();
    for t in transfers {
        for index in [t.a, t.b] {
            if index == 0 || index > n {
                return Err(CouplingError::PopulationOutOfRange { index, count: n });
            }
        }
        if t.a == t.b {
            return Err(CouplingError::SelfTransfer(t.a));
        }
        for v in t.rate.variables() {
            let owner = (1..=n)
                .filter(|&p| p == t.a || p == t.b)
                .find(|&p| models[p - 1].compartments().iter().any(|c| suffixed(c, p) == v));
            match owner {
                None => {
                    return Err(CouplingError::ForeignVariable {
                        a: t.a,
                        b: t.b,
                        variable: v,
                    })
                }
                Some(p) if suffixed(models[p - 1].distinguished_name(), p) == v => {
                    return Err(CouplingError::DistinguishedInTransfer {
                        a: t.a,
                        b: t.b,
                        variable: v,
                    })
                }
                Some(_) => {}
            }
        }
        if let Some(name) = t.rate.parameters().into_iter().find(|p| !all_params.contains_key(p)) {
            return Err(CouplingError::UnknownParameter { a: t.a, b: t.b, name });
        }
        let (key, rate) = if t.a < t.b {
            ((t.a - 1, t.b - 1), t.rate)
        } else {
            ((t.b - 1, t.a - 1), Expr::neg(t.rate))
        };
        if tau.insert(key, rate).is_some() {
            return Err(CouplingError::DuplicateTransfer {
                a: key.0 + 1,
                b: key.1 + 1,
            });
        }
    }
    for ((a, b), rate) in &tau {
        let (ma, mb) = (models[*a].distinguished(), models[*b].distinguished());
        ps.set_entry(a * width + ma, b * width + mb, Expr::neg(rate.clone()))
            .expect("distinct populations");
    }

    let h = HamiltonianSystem::total_population(&vars);
    Ok(InteractingSystem {
        models,
        width,
        tau,
        system: HamiltonianSystem::new(ps, h, all_params),
    })
}

impl InteractingSystem {
    pub fn populations(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[CompartmentalModel] {
        &self.models
    }

    /// Compartments per population.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn vars(&self) -> &[String] {
        self.system.vars()
    }

    pub fn system(&self) -> &HamiltonianSystem {
        &self.system
    }

    pub fn into_system(self) -> HamiltonianSystem {
        self.system
    }

    /// `τ_ab` for 1-based indices; zero when no transfer was given.
    pub fn tau(&self, a: usize, b: usize) -> Expr {
        use core::cmp::Ordering::*;
        let get = |a: usize, b: usize| self.tau.get(&(a - 1, b - 1)).cloned();
        match a.cmp(&b) {
            Less => get(a, b).unwrap_or_else(Expr::zero),
            Greater => get(b, a).map(Expr::neg).unwrap_or_else(Expr::zero),
            Equal => Expr::zero(),
        }
    }

    /// Net outflow `Σ_{k≠a} τ_ak` of each population.
    pub fn net_transfer_exprs(&self) -> Vec<Expr> {
        (1..=self.populations())
            .map(|a| {
                Expr::sum(
                    (1..=self.populations())
                        .filter(|&k| k != a)
                        .map(|k| self.tau(a, k)),
                )
            })
            .collect()
    }

    /// Per-population totals `N_a = Σ_μ x^μ_a`.
    pub fn population_totals(&self, state: &[f64]) -> Vec<f64> {
        state.chunks(self.width).map(|c| c.iter().sum()).collect()
    }

    /// For each population and sample, `dN_a/dt + Σ_{k≠a} τ_ak`, where the
    /// derivative is a fourth-order finite difference on the uniform time
    /// grid of the trajectory. Every entry vanishes up to discretization
    /// error when the trajectory solves this system.
    pub fn per_population_balance(
        &self,
        times: &[f64],
        states: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>, CouplingError> {
        if times.len() != states.len() {
            return Err(CouplingError::TrajectoryMismatch("times and states differ in length"));
        }
        if times.len() < 5 {
            return Err(CouplingError::TrajectoryMismatch("need at least five samples"));
        }
        if states.iter().any(|s| s.len() != self.vars().len()) {
            return Err(CouplingError::TrajectoryMismatch("state dimension"));
        }
        let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        let uniform = times
            .windows(2)
            .all(|w| libm::fabs(w[1] - w[0] - h) <= 1e-9 * libm::fabs(h).max(1.0));
        if !(h > 0.0) || !uniform {
            return Err(CouplingError::TrajectoryMismatch("time grid is not uniform"));
        }

        let transfers = self
            .net_transfer_exprs()
            .iter()
            .map(|e| e.compile(self.vars(), &self.system.params))
            .collect::<Result<Vec<_>, _>>()?;
        let totals: Vec<Vec<f64>> = states.iter().map(|s| self.population_totals(s)).collect();
        let m = times.len();
        let mut out = alloc::vec![Vec::with_capacity(m); self.populations()];
        for (a, row) in out.iter_mut().enumerate() {
            let f = |i: usize| totals[i][a];
            for (i, state) in states.iter().enumerate() {
                let d = fourth_order_derivative(&f, i, m, h);
                row.push(d + transfers[a].eval(state)?);
            }
        }
        Ok(out)
    }
}

/// Five-point derivative at sample `i` of `m`; one-sided near the ends.
fn fourth_order_derivative(f: &impl Fn(usize) -> f64, i: usize, m: usize, h: f64) -> f64 {
    let w = 12.0 * h;
    if i >= 2 && i + 2 < m {
        (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / w
    } else if i == 0 {
        (-25.0 * f(0) + 48.0 * f(1) - 36.0 * f(2) + 16.0 * f(3) - 3.0 * f(4)) / w
    } else if i == 1 {
        (-3.0 * f(0) - 10.0 * f(1) + 18.0 * f(2) - 6.0 * f(3) + f(4)) / w
    } else if i == m - 1 {
        (25.0 * f(i) - 48.0 * f(i - 1) + 36.0 * f(i - 2) - 16.0 * f(i - 3) + 3.0 * f(i - 4)) / w
    } else {
        (3.0 * f(i + 1) + 10.0 * f(i) - 18.0 * f(i - 1) + 6.0 * f(i - 2) - f(i - 3)) / w
    }
}
