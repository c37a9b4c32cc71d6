use hamepi_core::bihamiltonian::CasimirCatalog;
use hamepi_core::poisson::{JacobiChecker, JacobiReport};
use hamepi_core::sampling::{Domain, Sampler};
use hamepi_core::{ParamMap, PoissonStructure, VectorField};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{invalid, runtime, CliError, Result};
use crate::output::{ensure_dir, write_json};

use super::Options;

const DEFAULT_POINTS: usize = 1000;
const DEFAULT_TOL: f64 = 1e-10;
/// Casimirs are anchored here unless the config sets `s0`.
const DEFAULT_S0: f64 = 0.99;

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    max_residual: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_triple: Option<[String; 3]>,
}

#[derive(Debug, Serialize)]
struct Report {
    status: &'static str,
    seed: u64,
    points: usize,
    tol: f64,
    checks: Vec<Check>,
}

struct Checks {
    tol: f64,
    list: Vec<Check>,
}

impl Checks {
    fn value(&mut self, name: impl Into<String>, max_residual: f64) {
        self.list.push(Check {
            name: name.into(),
            max_residual,
            passed: max_residual <= self.tol,
            worst_point: None,
            worst_triple: None,
        });
    }

    fn jacobi(&mut self, name: impl Into<String>, report: JacobiReport, vars: &[String]) {
        self.list.push(Check {
            name: name.into(),
            max_residual: report.max_residual,
            passed: report.max_residual <= self.tol,
            worst_point: Some(report.worst_point),
            worst_triple: report.worst_triple.map(|t| t.map(|i| vars[i].clone())),
        });
    }
}

fn jacobi(ps: &PoissonStructure, params: &ParamMap, samples: &[Vec<f64>]) -> Result<JacobiReport> {
    JacobiChecker::new(ps, params)
        .map_err(|e| invalid("params", e))?
        .report(samples)
        .map_err(runtime)
}

/// Checks the Poisson identities of whichever of `model`, `interacting` or
/// `poisson` the config holds; writes `verify.json` and prints one line per
/// check. Fails with [`CliError::VerifyFailed`] if any check exceeds `tol`.
pub fn verify(cfg: &RunConfig, opts: &Options) -> Result<()> {
    let seed = opts.seed(cfg);
    let n = opts.points(cfg, DEFAULT_POINTS)?;
    let tol = opts.tol(cfg, DEFAULT_TOL)?;
    let mut checks = Checks { tol, list: Vec::new() };

    let given = [cfg.model.is_some(), cfg.interacting.is_some(), cfg.poisson.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(invalid("config", "give exactly one of model, interacting or poisson"));
    }
    if cfg.model.is_some() {
        let spec = cfg.model()?;
        let canonical = spec.model.canonical_poisson();
        let system = &canonical.system;
        let dim = system.vars().len();
        let interior = Sampler::new(seed).points(dim, n, Domain::INTERIOR);
        checks.jacobi(
            "canonical Jacobi",
            jacobi(&system.structure, &system.params, &interior)?,
            system.vars(),
        );

        let simplex = Sampler::new(seed).points(dim, n, Domain::SIMPLEX);
        let hamiltonian = system.compile().map_err(|e| invalid("model", e))?;
        let ode = spec.model.to_ode().compile().map_err(|e| invalid("model", e))?;
        let mut worst: f64 = 0.0;
        for p in &simplex {
            let a = hamiltonian.eval_vec(p).map_err(runtime)?;
            let b = ode.eval_vec(p).map_err(runtime)?;
            worst = a.iter().zip(&b).fold(worst, |m, (x, y)| m.max((x - y).abs()));
        }
        checks.value("Hamilton equations vs ODE", worst);

        if let Some(kind) = spec.kind() {
            let samples = Sampler::new(seed)
                .points_where(3, n, Domain::INTERIOR, |p| kind.in_domain(p))
                .map_err(runtime)?;
            let pair = kind.pair();
            let report = pair.verify(&samples).map_err(runtime)?;
            checks.value("pair vector fields", report.vector_field_mismatch);
            checks.jacobi("first structure Jacobi", report.first_jacobi, pair.vars());
            checks.jacobi("second structure Jacobi", report.second_jacobi, pair.vars());
            checks.jacobi("compatibility", report.compatibility, pair.vars());
            let s0 = cfg.s0.unwrap_or(DEFAULT_S0);
            let catalog = CasimirCatalog::new(&[kind], s0).map_err(|e| invalid("s0", e))?;
            for (id, rep) in catalog.verify(seed, n, tol).map_err(runtime)? {
                checks.value(format!("Casimir {id}"), rep.max_defect);
            }
        }
    } else if cfg.interacting.is_some() {
        let sys = cfg.interacting(seed)?;
        let system = sys.system();
        let samples = Sampler::new(seed).points(system.vars().len(), n, Domain::INTERIOR);
        checks.jacobi(
            "coupled Jacobi",
            jacobi(&system.structure, &system.params, &samples)?,
            system.vars(),
        );
        let field = system.compile().map_err(|e| invalid("interacting", e))?;
        let mut worst: f64 = 0.0;
        for p in &samples {
            let v = field.eval_vec(p).map_err(runtime)?;
            worst = worst.max(v.iter().sum::<f64>().abs());
        }
        checks.value("grand total rate", worst);
    } else {
        let ps = cfg.poisson()?;
        let samples = Sampler::new(seed).points(ps.dim(), n, Domain::INTERIOR);
        checks.jacobi("Jacobi", jacobi(&ps, &cfg.params, &samples)?, ps.vars());
    }

    let passed = checks.list.iter().all(|c| c.passed);
    let report = Report {
        status: if passed { "PASS" } else { "FAIL" },
        seed,
        points: n,
        tol,
        checks: checks.list,
    };
    ensure_dir(&opts.out)?;
    write_json(&opts.out.join("verify.json"), &report)?;
    for c in &report.checks {
        let verdict = if c.passed { "ok  " } else { "FAIL" };
        let mut line = format!("{verdict} {}: {:.3e}", c.name, c.max_residual);
        if !c.passed {
            if let Some(p) = &c.worst_point {
                line.push_str(&format!(" at {p:?}"));
            }
            if let Some(t) = &c.worst_triple {
                line.push_str(&format!(" ({})", t.join(", ")));
            }
        }
        println!("{line}");
    }
    println!("{}", report.status);
    if passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}
