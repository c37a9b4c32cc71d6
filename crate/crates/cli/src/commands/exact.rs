use hamepi_core::bihamiltonian::KIND_NAMES;
use hamepi_core::solver::{Dopri5, ExactError, ExactSolution};
use hamepi_core::ParamMap;
use serde::Serialize;

use crate::config::{positive, solver_error, time_grid, RunConfig};
use crate::error::{invalid, runtime, CliError, Result};
use crate::output::{ensure_dir, write_csv, write_json};

use super::Options;

const DEFAULT_RTOL: f64 = 1e-10;
const DEFAULT_ATOL: f64 = 1e-13;
const DEFAULT_POINTS: f64 = 240.0;

#[derive(Debug, Serialize)]
struct ExactSummary {
    kind: &'static str,
    params: ParamMap,
    s0: f64,
    s_inf: f64,
    horizon: f64,
    t_end: f64,
    rows: usize,
    rtol: f64,
    atol: f64,
    max_abs_diff: f64,
    max_abs_diff_by_component: [f64; 3],
}

/// Compares the exact solution with adaptive integration on a uniform
/// grid; writes `exact.csv` and `exact.json`.
pub fn exact(cfg: &RunConfig, opts: &Options) -> Result<()> {
    let spec = cfg.model()?;
    let name = spec.builtin.as_deref().unwrap_or("custom");
    let kind = spec.kind().ok_or_else(|| {
        invalid(
            "model",
            format!(
                "exact solution not available for `{name}` (supported: {})",
                KIND_NAMES.join(", ")
            ),
        )
    })?;
    let s0 = initial_s0(cfg)?;
    let t_end = cfg.t_end()?;
    let h = positive("output_dt", cfg.output_dt)?.unwrap_or(t_end / DEFAULT_POINTS);
    let rtol = positive("rtol", cfg.rtol)?.unwrap_or(DEFAULT_RTOL);
    let atol = positive("atol", cfg.atol)?.unwrap_or(DEFAULT_ATOL);

    let solution = ExactSolution::new(kind, s0).map_err(exact_error)?;
    let times = time_grid(t_end, h);
    let exact = solution.sample(&times).map_err(exact_error)?;
    // vacc_i legitimately drives S below zero, so no guard here
    let field = spec.model.to_ode().compile().map_err(|e| invalid("model", e))?;
    let y0 = [s0, 1.0 - s0, 0.0];
    let numeric = Dopri5::new(rtol, atol)
        .without_guard()
        .integrate_at(&field, &y0, &times)
        .map_err(solver_error)?;
    if numeric.len() != times.len() {
        return Err(runtime(format!(
            "numerical integration stopped at t = {}",
            numeric.last_time().unwrap_or(0.0)
        )));
    }

    let mut by_component = [0.0_f64; 3];
    let rows: Vec<Vec<f64>> = times
        .iter()
        .zip(exact.iter().zip(&numeric.states))
        .map(|(&t, (e, n))| {
            let mut diff: f64 = 0.0;
            for k in 0..3 {
                let d = (e[k] - n[k]).abs();
                by_component[k] = by_component[k].max(d);
                diff = diff.max(d);
            }
            vec![t, e[0], e[1], e[2], n[0], n[1], n[2], diff]
        })
        .collect();
    let summary = ExactSummary {
        kind: kind.name(),
        params: kind.params(),
        s0,
        s_inf: solution.s_inf(),
        horizon: solution.horizon(),
        t_end,
        rows: rows.len(),
        rtol,
        atol,
        max_abs_diff: by_component.iter().copied().fold(0.0, f64::max),
        max_abs_diff_by_component: by_component,
    };

    ensure_dir(&opts.out)?;
    let header = ["t", "S_exact", "I_exact", "R_exact", "S_num", "I_num", "R_num", "max_abs_diff"];
    write_csv(&opts.out.join("exact.csv"), &header, &rows)?;
    write_json(&opts.out.join("exact.json"), &summary)?;
    log::info!("max |exact - numeric| = {:e}", summary.max_abs_diff);
    Ok(())
}

/// `s0`, or the first component of an `initial` of the form `(S₀, 1 − S₀, 0)`.
fn initial_s0(cfg: &RunConfig) -> Result<f64> {
    if let Some(s0) = cfg.s0 {
        return Ok(s0);
    }
    if cfg.initial.is_none() {
        return Err(invalid("s0", "required"));
    }
    let y0 = cfg.initial(3)?;
    if y0[2] != 0.0 || (y0[0] + y0[1] - 1.0).abs() > 1e-15 {
        return Err(invalid("initial", "exact solutions start from (S0, 1 - S0, 0)"));
    }
    Ok(y0[0])
}

fn exact_error(e: ExactError) -> CliError {
    match e {
        ExactError::InitialFraction(_) | ExactError::Domain(_) | ExactError::Kind(_) => {
            invalid("s0", e)
        }
        other => runtime(other),
    }
}
