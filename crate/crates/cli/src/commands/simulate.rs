use crate::config::RunConfig;
use crate::error::{runtime, Result};
use crate::output::{ensure_dir, write_csv, write_json};
use crate::run::run_model;

use super::Options;

/// Writes `trajectory.csv` and `diagnostics.json`. A domain exit still
/// writes both, then fails.
pub fn simulate(cfg: &RunConfig, opts: &Options) -> Result<()> {
    let spec = cfg.model()?;
    let integration = cfg.integration()?;
    let y0 = cfg.initial(spec.model.compartments().len())?;
    let run = run_model(&spec, &integration, &y0)?;

    ensure_dir(&opts.out)?;
    write_csv(&opts.out.join("trajectory.csv"), &run.header(), &run.rows())?;
    write_json(&opts.out.join("diagnostics.json"), &run.summary)?;
    log::info!(
        "{} samples, H drift {:e}, Casimir drift {:?}",
        run.summary.samples,
        run.summary.h_drift,
        run.summary.casimir_drift
    );
    match &run.summary.domain_exit {
        Some(e) => Err(runtime(format!("left the domain at t = {}: {}", e.time, e.reason))),
        None => Ok(()),
    }
}
