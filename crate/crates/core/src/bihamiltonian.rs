//! Bi-Hamiltonian formulations of SIR, endemic SIRS and the two vaccination
//! models, their couplings through constant transfers, and the Casimirs of
//! the first structures.
//!
//! Every second structure here has the shape `{S,I}₂ = g`, `{S,R}₂ = −g`,
//! `{I,R}₂ = g` for a kind-specific `g`, so `H₁ = S + I + R` is one of its
//! Casimirs, and the second Hamiltonian is `H₂ = −(R + ℓ(S, I))`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::coupling::{couple, suffixed, CouplingError, Transfer};
use crate::expr::{constant, param, var, Expr, ParamMap};
use crate::model::{builtin, CompartmentalModel, ModelError};
use crate::poisson::{
    is_casimir, BiHamiltonianPair, CasimirReport, HamiltonianSystem, PoissonStructure,
};
use crate::sampling::{Domain, Sampler, SamplingError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BiHamiltonianError {
    #[error("unknown model kind `{0}` (expected sir, sirs, vacc_i or vacc_s)")]
    UnknownKind(String),
    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),
    #[error("parameter `{name}` must be {requirement}, got {value}")]
    BadParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("all coupled populations must be of the same kind")]
    MixedKinds,
    #[error("transfer ({a},{b}) must be constant for the second structure")]
    NonConstantTransfer { a: usize, b: usize },
    #[error("initial susceptible fraction {s0} lies outside the domain of the Casimir ({reason})")]
    InitialOutsideDomain { s0: f64, reason: &'static str },
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] crate::expr::EvalError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// One of the cataloged models with its rate constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Sir { alpha: f64, beta: f64 },
    Sirs { alpha: f64, beta: f64, mu: f64 },
    VaccI { alpha: f64, beta: f64, v: f64 },
    VaccS { alpha: f64, beta: f64, v: f64 },
}

/// Names accepted by [`Kind::from_name`].
pub const KIND_NAMES: [&str; 4] = ["sir", "sirs", "vacc_i", "vacc_s"];

impl Kind {
    /// Looks up a kind by name; `mu` and `v` default to zero.
    pub fn from_name(name: &str, p: &ParamMap) -> Result<Self, BiHamiltonianError> {
        let need = |k: &'static str| {
            p.get(k)
                .copied()
                .ok_or(BiHamiltonianError::MissingParameter(k))
        };
        let opt = |k: &str| p.get(k).copied().unwrap_or(0.0);
        let (alpha, beta) = (need("alpha")?, need("beta")?);
        let kind = match name {
            "sir" => Kind::Sir { alpha, beta },
            "sirs" => Kind::Sirs { alpha, beta, mu: opt("mu") },
            "vacc_i" => Kind::VaccI { alpha, beta, v: opt("v") },
            "vacc_s" => Kind::VaccS { alpha, beta, v: opt("v") },
            other => return Err(BiHamiltonianError::UnknownKind(other.into())),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Sir { .. } => "sir",
            Kind::Sirs { .. } => "sirs",
            Kind::VaccI { .. } => "vacc_i",
            Kind::VaccS { .. } => "vacc_s",
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Kind::Sir { alpha, .. }
            | Kind::Sirs { alpha, .. }
            | Kind::VaccI { alpha, .. }
            | Kind::VaccS { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Kind::Sir { beta, .. }
            | Kind::Sirs { beta, .. }
            | Kind::VaccI { beta, .. }
            | Kind::VaccS { beta, .. } => beta,
        }
    }

    fn validate(&self) -> Result<(), BiHamiltonianError> {
        let bad = |name, requirement, value| BiHamiltonianError::BadParameter {
            name,
            requirement,
            value,
        };
        if !(self.alpha() > 0.0) {
            return Err(bad("alpha", "positive", self.alpha()));
        }
        if !(self.beta() > 0.0) {
            return Err(bad("beta", "positive", self.beta()));
        }
        match *self {
            Kind::Sirs { mu, .. } if !(mu >= 0.0) => Err(bad("mu", "non-negative", mu)),
            Kind::VaccI { v, .. } | Kind::VaccS { v, .. } if !(v >= 0.0) => {
                Err(bad("v", "non-negative", v))
            }
            _ => Ok(()),
        }
    }

    /// Parameter values under their expression names.
    pub fn params(&self) -> ParamMap {
        let mut p = ParamMap::new();
        p.insert("alpha".into(), self.alpha());
        p.insert("beta".into(), self.beta());
        match *self {
            Kind::Sirs { mu, .. } => {
                p.insert("mu".into(), mu);
            }
            Kind::VaccI { v, .. } | Kind::VaccS { v, .. } => {
                p.insert("v".into(), v);
            }
            Kind::Sir { .. } => {}
        }
        p
    }

    /// The flow-arrow model with this kind's dynamics.
    pub fn model(&self) -> Result<CompartmentalModel, ModelError> {
        match *self {
            Kind::Sir { alpha, beta } => builtin::sir(alpha, beta),
            Kind::Sirs { alpha, beta, mu } => builtin::sirs_endemic(alpha, beta, mu),
            Kind::VaccI { alpha, beta, v } => builtin::sir_vacc_i(alpha, beta, v),
            Kind::VaccS { alpha, beta, v } => builtin::sir_vacc_s(alpha, beta, v),
        }
    }

    /// Open set where the second Hamiltonian and the Casimir are defined,
    /// for a state `(S, I, R)`.
    pub fn in_domain(&self, state: &[f64]) -> bool {
        let (s, i) = (state[0], state[1]);
        match *self {
            Kind::Sir { .. } => s > 0.0,
            Kind::Sirs { beta, mu, .. } => beta * s - mu > 0.0,
            Kind::VaccI { beta, v, .. } => beta * s + v > 0.0,
            Kind::VaccS { .. } => s > 0.0 && i > 0.0,
        }
    }

    /// First-structure entries `({S,R}₁, {I,R}₁)`, the second-structure
    /// factor `g` and the log term `ℓ`, with parameters named through `p`.
    fn blocks(&self, s: Expr, i: Expr, p: &dyn Fn(&str) -> Expr) -> [Expr; 4] {
        let bsi = p("beta") * s.clone() * i.clone();
        let (alpha, beta) = (p("alpha"), p("beta"));
        match self {
            Kind::Sir { .. } => [
                -bsi.clone(),
                bsi.clone() - alpha.clone() * i,
                -bsi,
                alpha / beta * Expr::log(s),
            ],
            Kind::Sirs { .. } => {
                let mu_i = p("mu") * i.clone();
                [
                    -bsi.clone() + mu_i.clone(),
                    bsi.clone() - (alpha.clone() + p("mu")) * i,
                    -bsi + mu_i,
                    alpha / beta.clone() * Expr::log(beta * s - p("mu")),
                ]
            }
            Kind::VaccI { .. } => {
                let v_i = p("v") * i.clone();
                [
                    -bsi.clone() - v_i.clone(),
                    bsi.clone() - alpha.clone() * i,
                    -bsi - v_i,
                    (alpha + p("v")) / beta.clone() * Expr::log(beta * s + p("v")),
                ]
            }
            Kind::VaccS { .. } => [
                -bsi.clone() - p("v") * s.clone(),
                bsi.clone() - alpha.clone() * i.clone(),
                -bsi,
                alpha / beta.clone() * Expr::log(s) - p("v") / beta * Expr::log(i),
            ],
        }
    }

    /// The single-population bi-Hamiltonian pair.
    pub fn pair(&self) -> BiHamiltonianPair {
        let [sr, ir, g, ell] = self.blocks(var("S"), var("I"), &param);
        let first = PoissonStructure::zero(["S", "I", "R"])
            .with("S", "R", sr)
            .and_then(|p| p.with("I", "R", ir))
            .expect("known variables");
        let second = second_block(PoissonStructure::zero(["S", "I", "R"]), [0, 1, 2], g);
        BiHamiltonianPair {
            first_hamiltonian: HamiltonianSystem::total_population(first.vars()),
            first,
            second,
            second_hamiltonian: -(var("R") + ell),
            params: self.params(),
        }
    }

    /// The Casimir of the first structure, zero at `(S₀, 1 − S₀, 0)`.
    ///
    /// These are written without `R`, so they are Casimirs of the
    /// three-dimensional structure. On `S + I + R = 1` they equal the
    /// forms in `R` obtained from the second Hamiltonian.
    pub fn casimir(&self, s0: f64) -> Result<Expr, BiHamiltonianError> {
        if !(s0 > 0.0 && s0 < 1.0) {
            return Err(BiHamiltonianError::InitialOutsideDomain {
                s0,
                reason: "need 0 < S0 < 1",
            });
        }
        if !self.in_domain(&[s0, 1.0 - s0, 0.0]) {
            return Err(BiHamiltonianError::InitialOutsideDomain {
                s0,
                reason: "the logarithm's argument must be positive",
            });
        }
        let (s, i) = (var("S"), var("I"));
        let (alpha, beta) = (param("alpha"), param("beta"));
        let rest = constant(1.0) - s.clone() - i.clone();
        let anchored = |shift: Expr| {
            Expr::log((beta.clone() * s.clone() + shift.clone()) / (beta.clone() * constant(s0) + shift))
        };
        Ok(match self {
            Kind::Sir { .. } => -(rest + alpha / beta * Expr::log(s / constant(s0))),
            Kind::Sirs { .. } => -(rest + alpha / beta.clone() * anchored(-param("mu"))),
            Kind::VaccI { .. } => {
                -(rest + (alpha + param("v")) / beta.clone() * anchored(param("v")))
            }
            Kind::VaccS { .. } => {
                rest + alpha / beta.clone() * Expr::log(s / constant(s0))
                    - param("v") / beta * Expr::log(i / constant(1.0 - s0))
            }
        })
    }
}

/// Writes `{x,y}₂ = g`, `{x,z}₂ = −g`, `{y,z}₂ = g` at the given indices.
fn second_block(mut ps: PoissonStructure, [x, y, z]: [usize; 3], g: Expr) -> PoissonStructure {
    ps.set_entry(x, y, g.clone()).expect("distinct");
    ps.set_entry(x, z, -g.clone()).expect("distinct");
    ps.set_entry(y, z, g).expect("distinct");
    ps
}

/// Nutku's pair for the SIR model.
pub fn nutku_pair(alpha: f64, beta: f64) -> Result<BiHamiltonianPair, BiHamiltonianError> {
    let k = Kind::Sir { alpha, beta };
    k.validate()?;
    Ok(k.pair())
}

pub fn sirs_pair(alpha: f64, beta: f64, mu: f64) -> Result<BiHamiltonianPair, BiHamiltonianError> {
    let k = Kind::Sirs { alpha, beta, mu };
    k.validate()?;
    Ok(k.pair())
}

pub fn vacc_i_pair(alpha: f64, beta: f64, v: f64) -> Result<BiHamiltonianPair, BiHamiltonianError> {
    let k = Kind::VaccI { alpha, beta, v };
    k.validate()?;
    Ok(k.pair())
}

pub fn vacc_s_pair(alpha: f64, beta: f64, v: f64) -> Result<BiHamiltonianPair, BiHamiltonianError> {
    let k = Kind::VaccS { alpha, beta, v };
    k.validate()?;
    Ok(k.pair())
}

/// `N` populations of one kind coupled through constant transfers.
///
/// The first structure is the interacting-population structure with
/// `{R_a, R_b}₁ = −τ_ab`; the second repeats each population's second
/// block and sets `{R_a, R_b}₂ = τ_ab`. Transfer expressions may use the
/// shared `params` but must reduce to constants.
pub fn coupled_pair(
    kinds: &[Kind],
    transfers: &[Transfer],
    params: &ParamMap,
) -> Result<BiHamiltonianPair, BiHamiltonianError> {
    let first_kind = kinds.first().ok_or(CouplingError::NoPopulations)?;
    if kinds
        .iter()
        .any(|k| core::mem::discriminant(k) != core::mem::discriminant(first_kind))
    {
        return Err(BiHamiltonianError::MixedKinds);
    }
    let mut constants = Vec::with_capacity(transfers.len());
    for t in transfers {
        let c = t
            .rate
            .bind_params(params)
            .as_const()
            .ok_or(BiHamiltonianError::NonConstantTransfer { a: t.a, b: t.b })?;
        constants.push(Transfer::new(t.a, t.b, constant(c)));
    }
    let models = kinds
        .iter()
        .map(|k| {
            k.validate()?;
            Ok(k.model()?)
        })
        .collect::<Result<Vec<_>, BiHamiltonianError>>()?;
    let interacting = couple(models, constants, ParamMap::new())?;

    let vars = interacting.vars().to_vec();
    let mut second = PoissonStructure::zero(vars.iter().cloned());
    let mut ells = Vec::with_capacity(kinds.len());
    for (k, kind) in kinds.iter().enumerate() {
        let a = k + 1;
        let p = |name: &str| param(&suffixed(name, a));
        let s = var(&suffixed("S", a));
        let i = var(&suffixed("I", a));
        let [_, _, g, ell] = kind.blocks(s, i, &p);
        second = second_block(second, [3 * k, 3 * k + 1, 3 * k + 2], g);
        ells.push(var(&suffixed("R", a)) + ell);
    }
    for a in 1..=kinds.len() {
        for b in a + 1..=kinds.len() {
            let tau = interacting.tau(a, b);
            if !tau.is_zero() {
                second
                    .set_entry(3 * a - 1, 3 * b - 1, tau)
                    .expect("distinct populations");
            }
        }
    }

    let system = interacting.into_system();
    Ok(BiHamiltonianPair {
        first: system.structure,
        first_hamiltonian: system.hamiltonian,
        second,
        second_hamiltonian: -Expr::sum(ells),
        params: system.params,
    })
}

/// The Casimir of `kind`'s first structure, anchored at `S₀`.
pub fn casimir_of(kind: &Kind, s0: f64) -> Result<Expr, BiHamiltonianError> {
    kind.casimir(s0)
}

/// One cataloged Casimir.
#[derive(Debug, Clone, PartialEq)]
pub struct CasimirEntry {
    pub id: String,
    pub structure: PoissonStructure,
    pub casimir: Expr,
    pub params: ParamMap,
    pub kind: Kind,
    pub domain: &'static str,
}

/// Known Casimirs: for each kind, its first-structure Casimir and the
/// total population as a Casimir of the second structure.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CasimirCatalog {
    pub entries: Vec<CasimirEntry>,
}

impl CasimirCatalog {
    pub fn new(kinds: &[Kind], s0: f64) -> Result<Self, BiHamiltonianError> {
        let mut entries = Vec::new();
        for kind in kinds {
            kind.validate()?;
            let pair = kind.pair();
            let domain = match kind {
                Kind::Sir { .. } => "S > 0",
                Kind::Sirs { .. } => "beta*S - mu > 0",
                Kind::VaccI { .. } => "beta*S + v > 0",
                Kind::VaccS { .. } => "S > 0, I > 0",
            };
            entries.push(CasimirEntry {
                id: alloc::format!("{}/first", kind.name()),
                structure: pair.first.clone(),
                casimir: kind.casimir(s0)?,
                params: pair.params.clone(),
                kind: *kind,
                domain,
            });
            entries.push(CasimirEntry {
                id: alloc::format!("{}/second", kind.name()),
                casimir: pair.first_hamiltonian.clone(),
                structure: pair.second,
                params: pair.params,
                kind: *kind,
                domain: "everywhere",
            });
        }
        Ok(Self { entries })
    }

    /// Checks every entry at `points` seeded interior points inside its
    /// domain.
    pub fn verify(
        &self,
        seed: u64,
        points: usize,
        tol: f64,
    ) -> Result<Vec<(String, CasimirReport)>, BiHamiltonianError> {
        self.entries
            .iter()
            .map(|e| {
                let pts = Sampler::new(seed).points_where(3, points, Domain::INTERIOR, |p| {
                    e.kind.in_domain(p)
                })?;
                let rep = is_casimir(&e.structure, &e.params, &e.casimir, &pts, tol)?;
                Ok((e.id.clone(), rep))
            })
            .collect()
    }
}
