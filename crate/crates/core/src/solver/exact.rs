//! Exact solutions of SIR, endemic SIRS and the vaccination models with
//! `S(0) = S₀`, `I(0) = 1 − S₀`, `R(0) = 0`.
//!
//! On the leaf `C = 0` of the first structure's Casimir, `R` is a function
//! `ρ(S)` and `I = 1 − S − ρ(S)`, so the dynamics reduces to a scalar
//! equation `Ṡ = g(S)`. Then `t(S) = ∫_{S₀}^{S} dζ / g(ζ)`, which is
//! tabulated once by adaptive quadrature and inverted by bracketed root
//! finding. `S(t)` decreases monotonically to the equilibrium `S_∞`, where
//! `t(S)` diverges; the solution is offered on `[0, t(S_∞ + δ)]` with
//! `δ = 10⁻⁹ (S₀ − S_∞)`.

use alloc::vec::Vec;

use super::quad::{adaptive_simpson, adaptive_simpson_leaves};
use super::roots::{brent, RootError, RootOptions};
use crate::bihamiltonian::{BiHamiltonianError, Kind};
use crate::expr::Expr;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("time {t} is beyond the valid horizon t_max = {t_max}")]
    BeyondHorizon { t: f64, t_max: f64 },
    #[error("time {0} is negative")]
    NegativeTime(f64),
    #[error("0 < S0 < 1 is required, got {0}")]
    InitialFraction(f64),
    #[error("initial state is outside the model's domain: {0}")]
    Domain(&'static str),
    #[error("inner Casimir solve failed at S = {s}: {source}")]
    InnerSolve {
        s: f64,
        #[source]
        source: RootError,
    },
    #[error("inverting t(S) failed at t = {t}: {source}")]
    Inversion {
        t: f64,
        #[source]
        source: RootError,
    },
    #[error("locating the equilibrium failed: {0}")]
    Equilibrium(#[source] RootError),
    #[error("quadrature produced a non-finite value near S = {0}")]
    Quadrature(f64),
    #[error(transparent)]
    Kind(#[from] BiHamiltonianError),
}

/// Width of the guard band above `S_∞`, relative to `S₀ − S_∞`.
const DELTA_REL: f64 = 1e-9;
/// Absolute tolerance for each tabulated quadrature segment.
const QUAD_TOL: f64 = 1e-12;
/// `log` of the smallest positive subnormal, rounded down.
const UNDERFLOW_LOG: f64 = -746.0;
/// Uniform nodes over the first half of `[S_∞, S₀]`.
const UNIFORM_NODES: usize = 64;

/// The reduced one-dimensional problem.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Reduction {
    /// `ρ(S) = −(c/β) log((βS + σ)/(βS₀ + σ))`, `Ṡ = −(βS + σ) I`.
    /// SIR: `c = α, σ = 0`; SIRS: `c = α, σ = −μ`; vacc-I: `c = α + v, σ = v`.
    Log { c: f64, beta: f64, sigma: f64 },
    /// `ρ` solves `R + (α/β) log(S/S₀) − (v/β) log((1−S−R)/I₀) = 0`,
    /// `Ṡ = −S(βI + v)`.
    VaccS { alpha: f64, beta: f64, v: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    kind: Kind,
    s0: f64,
    reduction: Reduction,
    s_inf: f64,
    /// Tabulated `(S_k, t(S_k))`, `S` decreasing from `S₀`.
    table: Vec<(f64, f64)>,
}

impl ExactSolution {
    /// Builds the solution for `kind` from `S₀`. The vacc-S model with
    /// `v = 0` is the SIR model and is solved as such.
    pub fn new(kind: Kind, s0: f64) -> Result<Self, ExactError> {
        if !(s0 > 0.0 && s0 < 1.0) {
            return Err(ExactError::InitialFraction(s0));
        }
        // validates the parameters and the log domain at S₀
        kind.casimir(s0).map_err(|e| match e {
            BiHamiltonianError::InitialOutsideDomain { reason, .. } => ExactError::Domain(reason),
            other => ExactError::Kind(other),
        })?;
        let (alpha, beta) = (kind.alpha(), kind.beta());
        let reduction = match kind {
            Kind::Sir { .. } => Reduction::Log { c: alpha, beta, sigma: 0.0 },
            Kind::Sirs { mu, .. } => Reduction::Log { c: alpha, beta, sigma: -mu },
            Kind::VaccI { v, .. } => Reduction::Log { c: alpha + v, beta, sigma: v },
            Kind::VaccS { v: 0.0, .. } => Reduction::Log { c: alpha, beta, sigma: 0.0 },
            Kind::VaccS { v, .. } => Reduction::VaccS { alpha, beta, v },
        };
        let mut sol = Self {
            kind,
            s0,
            reduction,
            s_inf: f64::NAN,
            table: Vec::new(),
        };
        sol.s_inf = sol.find_s_inf()?;
        sol.tabulate()?;
        Ok(sol)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Limit of `S(t)` as `t → ∞`.
    pub fn s_inf(&self) -> f64 {
        self.s_inf
    }

    /// Last time at which the solution is offered.
    pub fn horizon(&self) -> f64 {
        self.table.last().map_or(0.0, |p| p.1)
    }

    /// The Casimir whose zero level contains the solution.
    pub fn casimir(&self) -> Expr {
        self.kind.casimir(self.s0).expect("validated at construction")
    }

    /// Smallest `S` for which `ρ(S)` is defined.
    fn floor(&self) -> f64 {
        match self.reduction {
            Reduction::Log { beta, sigma, .. } => -sigma / beta,
            Reduction::VaccS { .. } => 0.0,
        }
    }

    /// `R` on the leaf as a function of `S`.
    pub fn rho(&self, s: f64) -> Result<f64, ExactError> {
        self.leaf(s).map(|(_, r)| r)
    }

    /// `(I, R)` on the leaf at `S`.
    fn leaf(&self, s: f64) -> Result<(f64, f64), ExactError> {
        match self.reduction {
            Reduction::Log { c, beta, sigma } => {
                let r = -(c / beta) * libm::log((beta * s + sigma) / (beta * self.s0 + sigma));
                if self.s_inf > self.floor() {
                    // I(S_∞) = 0, so measuring from S_∞ avoids the
                    // cancellation in 1 − S − R where I is small
                    let d = s - self.s_inf;
                    let i = -d + c / beta * libm::log1p(beta * d / (beta * self.s_inf + sigma));
                    Ok((i, r))
                } else {
                    Ok((1.0 - s - r, r))
                }
            }
            Reduction::VaccS { alpha, beta, v } => {
                let i0 = 1.0 - self.s0;
                if s == self.s0 {
                    return Ok((i0, 0.0));
                }
                // Solved for u = log I, which stays resolved when I is far
                // below the rounding level of R. C is decreasing in u.
                let ln_i0 = libm::log(i0);
                let shift = alpha / beta * libm::log(s / self.s0);
                let c = |u: f64| 1.0 - s - libm::exp(u) + shift - v / beta * (u - ln_i0);
                let hi = libm::log(1.0 - s);
                // below hi - 1 the first terms are positive, and the linear
                // term outweighs the logarithmic shift past this point
                let mut lo = hi.min(ln_i0) - 1.0 - beta / v * libm::fabs(shift);
                if !(lo >= UNDERFLOW_LOG) {
                    if c(UNDERFLOW_LOG) <= 0.0 {
                        // I is below the smallest positive double
                        return Ok((0.0, 1.0 - s));
                    }
                    lo = UNDERFLOW_LOG;
                }
                let u = brent(c, lo, hi, RootOptions { ftol: 0.0, ..Default::default() })
                    .map_err(|source| ExactError::InnerSolve { s, source })?;
                let i = libm::exp(u);
                Ok((i, 1.0 - s - i))
            }
        }
    }

    /// `(I, Ṡ)` at `S` on the leaf.
    fn reduced(&self, s: f64) -> Result<(f64, f64), ExactError> {
        let (i, _) = self.leaf(s)?;
        let sdot = match self.reduction {
            Reduction::Log { beta, sigma, .. } => -(beta * s + sigma) * i,
            Reduction::VaccS { beta, v, .. } => -s * (beta * i + v),
        };
        Ok((i, sdot))
    }

    /// The factor of `Ṡ` whose root is the equilibrium.
    fn equilibrium_factor(&self, s: f64) -> Result<f64, ExactError> {
        let (i, _) = self.reduced(s)?;
        Ok(match self.reduction {
            Reduction::Log { .. } => i,
            Reduction::VaccS { beta, v, .. } => beta * i + v,
        })
    }

    /// Largest root of the equilibrium factor below `S₀`, or the floor if
    /// the factor keeps its sign all the way down.
    fn find_s_inf(&self) -> Result<f64, ExactError> {
        let floor = self.floor();
        if let Reduction::VaccS { .. } = self.reduction {
            // βI + v ≥ v > 0
            return Ok(floor);
        }
        let top = self.s0;
        // I(S₀) = 1 − S₀ > 0, so the factor starts positive
        let mut hi = top;
        let mut gap = top - floor;
        let mut lo = None;
        for _ in 0..1100 {
            gap *= 0.5;
            let s = floor + gap;
            if s == floor || gap <= f64::MIN_POSITIVE {
                break;
            }
            let f = self.equilibrium_factor(s)?;
            if f <= 0.0 {
                lo = Some(s);
                break;
            }
            hi = s;
        }
        let Some(lo) = lo else {
            return Ok(floor);
        };
        let mut inner_err = None;
        let root = brent(
            |s| match self.equilibrium_factor(s) {
                Ok(f) => f,
                Err(e) => {
                    inner_err = Some(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            RootOptions { ftol: 0.0, ..Default::default() },
        );
        if let Some(e) = inner_err {
            return Err(e);
        }
        root.map_err(ExactError::Equilibrium)
    }

    /// `1/Ṡ(S)`; errors are reported as NaN and surfaced by the caller.
    fn integrand(&self, s: f64) -> f64 {
        match self.reduced(s) {
            Ok((_, sdot)) => 1.0 / sdot,
            Err(_) => f64::NAN,
        }
    }

    fn segment(&self, from: f64, to: f64) -> Result<f64, ExactError> {
        let v = adaptive_simpson(|s| self.integrand(s), from, to, QUAD_TOL);
        if v.is_finite() {
            Ok(v)
        } else {
            // find the failing point for the report
            self.reduced(0.5 * (from + to))?;
            Err(ExactError::Quadrature(0.5 * (from + to)))
        }
    }

    /// Nodes: uniform over the upper half of `[S_∞, S₀]`, then halving the
    /// distance to `S_∞` down to `δ`.
    fn tabulate(&mut self) -> Result<(), ExactError> {
        let width = self.s0 - self.s_inf;
        let delta = DELTA_REL * width;
        let mut nodes = Vec::new();
        for k in 0..=UNIFORM_NODES {
            nodes.push(self.s0 - 0.5 * width * k as f64 / UNIFORM_NODES as f64);
        }
        let mut d = 0.5 * width;
        while d > 2.0 * delta {
            d *= 0.5;
            nodes.push(self.s_inf + d);
        }
        nodes.push(self.s_inf + delta);

        let mut table = Vec::with_capacity(nodes.len());
        let mut t = 0.0;
        table.push((nodes[0], 0.0));
        // every accepted quadrature subinterval becomes a node, so inversion
        // only ever integrates over a span the integrand is resolved on
        for w in nodes.windows(2) {
            let mut acc = t;
            let total = adaptive_simpson_leaves(
                |z| self.integrand(z),
                w[0],
                w[1],
                QUAD_TOL,
                |b, v| {
                    acc += v;
                    table.push((b, acc));
                },
            );
            if !total.is_finite() {
                return Err(ExactError::Quadrature(w[1]));
            }
            t = acc;
            if let Some(last) = table.last_mut() {
                last.0 = w[1];
            }
        }
        self.table = table;
        Ok(())
    }

    /// `t(S)` for `S` on the valid branch `[S_∞ + δ, S₀]`.
    pub fn t_of_s(&self, s: f64) -> Result<f64, ExactError> {
        let k = Some(self.table.partition_point(|&(sk, _)| sk > s))
            .filter(|&k| k < self.table.len())
            .ok_or(ExactError::BeyondHorizon {
                t: f64::INFINITY,
                t_max: self.horizon(),
            })?;
        if k == 0 {
            return Ok(0.0);
        }
        let (s_prev, t_prev) = self.table[k - 1];
        Ok(t_prev + self.segment(s_prev, s)?)
    }

    /// `S(t)` by inverting the tabulated `t(S)`.
    pub fn s_at(&self, t: f64) -> Result<f64, ExactError> {
        if t < 0.0 {
            return Err(ExactError::NegativeTime(t));
        }
        if t == 0.0 {
            return Ok(self.s0);
        }
        let t_max = self.horizon();
        if t > t_max {
            return Err(ExactError::BeyondHorizon { t, t_max });
        }
        let k = self.table.partition_point(|&(_, tk)| tk < t).clamp(1, self.table.len() - 1);
        let (s_hi, t_hi) = self.table[k - 1];
        let (s_lo, t_lo) = self.table[k];
        if t == t_lo {
            return Ok(s_lo);
        }
        let _ = t_hi;
        let mut failed = false;
        let opts = RootOptions {
            xtol: 1e-14,
            ftol: 1e-12 * t.max(1.0),
            max_iter: 200,
        };
        let root = brent(
            |s| {
                let v = adaptive_simpson(|z| self.integrand(z), s_hi, s, QUAD_TOL);
                if !v.is_finite() {
                    failed = true;
                }
                t_hi + v - t
            },
            s_lo,
            s_hi,
            opts,
        );
        if failed {
            return Err(ExactError::Quadrature(s_lo));
        }
        root.map_err(|source| ExactError::Inversion { t, source })
    }

    /// `(S, I, R)` at time `t`; `t = 0` gives exactly `(S₀, 1 − S₀, 0)`.
    pub fn state_at(&self, t: f64) -> Result<[f64; 3], ExactError> {
        if t == 0.0 {
            return Ok([self.s0, 1.0 - self.s0, 0.0]);
        }
        let s = self.s_at(t)?;
        let (i, r) = self.leaf(s)?;
        Ok([s, i, r])
    }

    /// States at each of `times`.
    pub fn sample(&self, times: &[f64]) -> Result<Vec<[f64; 3]>, ExactError> {
        times.iter().map(|t| self.state_at(*t)).collect()
    }
}

/// Endemic SIRS solution from `S₀`, sampled at `times`.
pub fn exact_sirs(
    alpha: f64,
    beta: f64,
    mu: f64,
    s0: f64,
    times: &[f64],
) -> Result<(ExactSolution, Vec<[f64; 3]>), ExactError> {
    sampled(Kind::Sirs { alpha, beta, mu }, s0, times)
}

/// Solution of SIR with vaccination at rate `vI`, sampled at `times`.
pub fn exact_vacc_i(
    alpha: f64,
    beta: f64,
    v: f64,
    s0: f64,
    times: &[f64],
) -> Result<(ExactSolution, Vec<[f64; 3]>), ExactError> {
    sampled(Kind::VaccI { alpha, beta, v }, s0, times)
}

/// Solution of SIR with vaccination at rate `vS`, sampled at `times`.
pub fn exact_vacc_s(
    alpha: f64,
    beta: f64,
    v: f64,
    s0: f64,
    times: &[f64],
) -> Result<(ExactSolution, Vec<[f64; 3]>), ExactError> {
    sampled(Kind::VaccS { alpha, beta, v }, s0, times)
}

fn sampled(kind: Kind, s0: f64, times: &[f64]) -> Result<(ExactSolution, Vec<[f64; 3]>), ExactError> {
    let sol = ExactSolution::new(kind, s0)?;
    let states = sol.sample(times)?;
    Ok((sol, states))
}
