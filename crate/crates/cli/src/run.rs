//! A single model integration with its conservation diagnostics, shared by
//! `simulate` and `sweep`.

use hamepi_core::solver::{DriftReport, Trajectory};
use hamepi_core::{Expr, HamiltonianSystem};
use serde::Serialize;

use crate::config::{Integration, ModelSpec};
use crate::error::{invalid, runtime, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitInfo {
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub samples: usize,
    pub t_final: f64,
    pub h_drift: f64,
    pub casimir_drift: Option<f64>,
    pub domain_exit: Option<ExitInfo>,
    /// Largest value of the `I` compartment, when the model has one.
    pub peak_infection: Option<f64>,
    pub peak_time: Option<f64>,
    #[serde(rename = "final_S")]
    pub final_s: Option<f64>,
}

pub struct Run {
    pub vars: Vec<String>,
    pub traj: Trajectory,
    pub drift: DriftReport,
    pub summary: RunSummary,
}

impl Run {
    /// Header `t,<vars>,H[,C]`.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend(self.vars.iter().cloned());
        h.push("H".into());
        if self.drift.casimir.is_some() {
            h.push("C".into());
        }
        h
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        let c = self.drift.casimir.as_ref();
        self.traj
            .times
            .iter()
            .zip(&self.traj.states)
            .enumerate()
            .map(|(k, (&t, s))| {
                let mut row = Vec::with_capacity(s.len() + 3);
                row.push(t);
                row.extend_from_slice(s);
                row.push(self.drift.hamiltonian.values[k]);
                if let Some(c) = c {
                    row.push(c.values[k]);
                }
                row
            })
            .collect()
    }
}

/// Integrates the model's right-hand sides from `y0`. The Casimir is
/// tracked for the built-ins that have one, anchored at `y0[0]`.
pub fn run_model(spec: &ModelSpec, integration: &Integration, y0: &[f64]) -> Result<Run> {
    let ode = spec.model.to_ode();
    let field = ode.compile().map_err(|e| invalid("model", e))?;
    let traj = integration.run(&field, y0)?;
    let h = HamiltonianSystem::total_population(&ode.vars);
    let c = casimir(spec, y0);
    let drift = traj
        .diagnostics(&ode.vars, &ode.params, &h, c.as_ref())
        .map_err(runtime)?;

    let column = |name: &str| ode.vars.iter().position(|v| v == name);
    let peak = column("I").and_then(|i| {
        traj.states
            .iter()
            .zip(&traj.times)
            .map(|(s, &t)| (s[i], t))
            .fold(None, |best: Option<(f64, f64)>, (x, t)| match best {
                Some((b, _)) if b >= x => best,
                _ => Some((x, t)),
            })
    });
    let final_s = column("S").and_then(|i| traj.states.last().map(|s| s[i]));
    let summary = RunSummary {
        samples: traj.len(),
        t_final: traj.last_time().unwrap_or(0.0),
        h_drift: drift.h_drift(),
        casimir_drift: drift.casimir_drift(),
        domain_exit: traj.domain_exit.as_ref().map(|e| ExitInfo {
            time: e.time,
            reason: e.reason.to_string(),
        }),
        peak_infection: peak.map(|p| p.0),
        peak_time: peak.map(|p| p.1),
        final_s,
    };
    Ok(Run {
        vars: ode.vars,
        traj,
        drift,
        summary,
    })
}

fn casimir(spec: &ModelSpec, y0: &[f64]) -> Option<Expr> {
    let kind = spec.kind()?;
    match kind.casimir(y0[0]) {
        Ok(c) => Some(c),
        Err(e) => {
            log::info!("no Casimir column: {e}");
            None
        }
    }
}
