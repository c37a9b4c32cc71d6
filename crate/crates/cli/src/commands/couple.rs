use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{invalid, runtime, Result};
use crate::output::{ensure_dir, write_csv, write_json};
use crate::run::ExitInfo;

use super::Options;

/// Grand-total drift allowed by the audit unless `tol` is given.
const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
struct CoupleSummary {
    populations: usize,
    samples: usize,
    t_final: f64,
    grand_total_drift: f64,
    /// `max_t |N_a(t) − N_a(0)|` per population.
    population_change: Vec<f64>,
    domain_exit: Option<ExitInfo>,
    audit_tol: f64,
    audit: &'static str,
}

/// Writes `population_<a>.csv` for each population, `totals.csv` and
/// `couple.json`, then audits the grand total.
pub fn couple(cfg: &RunConfig, opts: &Options) -> Result<()> {
    let seed = opts.seed(cfg);
    let tol = opts.tol(cfg, DEFAULT_TOL)?;
    let sys = cfg.interacting(seed)?;
    let integration = cfg.integration()?;
    let y0 = cfg.initial(sys.vars().len())?;
    let field = sys.system().compile().map_err(|e| invalid("interacting", e))?;
    let traj = integration.run(&field, &y0)?;

    let n = sys.populations();
    let w = sys.width();
    let totals: Vec<Vec<f64>> = traj.states.iter().map(|s| sys.population_totals(s)).collect();
    let grand: Vec<f64> = totals.iter().map(|t| t.iter().sum()).collect();
    let drift = grand.iter().map(|g| (g - grand[0]).abs()).fold(0.0, f64::max);
    let change: Vec<f64> = (0..n)
        .map(|a| totals.iter().map(|t| (t[a] - totals[0][a]).abs()).fold(0.0, f64::max))
        .collect();

    ensure_dir(&opts.out)?;
    for a in 0..n {
        let mut header = vec!["t".to_string()];
        header.extend(sys.vars()[a * w..(a + 1) * w].iter().cloned());
        header.push(format!("N_{}", a + 1));
        let rows: Vec<Vec<f64>> = traj
            .times
            .iter()
            .zip(&traj.states)
            .zip(&totals)
            .map(|((&t, s), tot)| {
                let mut row = vec![t];
                row.extend_from_slice(&s[a * w..(a + 1) * w]);
                row.push(tot[a]);
                row
            })
            .collect();
        write_csv(&opts.out.join(format!("population_{}.csv", a + 1)), &header, &rows)?;
    }
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|a| format!("N_{a}")));
    header.push("N_total".into());
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&totals)
        .zip(&grand)
        .map(|((&t, tot), &g)| {
            let mut row = vec![t];
            row.extend_from_slice(tot);
            row.push(g);
            row
        })
        .collect();
    write_csv(&opts.out.join("totals.csv"), &header, &rows)?;

    let passed = drift <= tol;
    let summary = CoupleSummary {
        populations: n,
        samples: traj.len(),
        t_final: traj.last_time().unwrap_or(0.0),
        grand_total_drift: drift,
        population_change: change,
        domain_exit: traj.domain_exit.as_ref().map(|e| ExitInfo {
            time: e.time,
            reason: e.reason.to_string(),
        }),
        audit_tol: tol,
        audit: if passed { "PASS" } else { "FAIL" },
    };
    write_json(&opts.out.join("couple.json"), &summary)?;
    log::info!("grand total drift {drift:e}");

    if let Some(e) = &summary.domain_exit {
        return Err(runtime(format!("left the domain at t = {}: {}", e.time, e.reason)));
    }
    if !passed {
        return Err(runtime(format!("grand total drifted by {drift:e}, above {tol:e}")));
    }
    Ok(())
}
