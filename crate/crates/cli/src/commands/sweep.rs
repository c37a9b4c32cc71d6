use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{invalid, Result};
use crate::output::{ensure_dir, write_json};
use crate::run::{run_model, RunSummary};

use super::Options;

#[derive(Debug, Serialize)]
struct Entry {
    params: BTreeMap<String, f64>,
    #[serde(flatten)]
    summary: RunSummary,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    keys: Vec<String>,
    points: Vec<Entry>,
}

/// The Cartesian product of the grid, keys in sorted order and values in
/// the order given; the last key varies fastest. Repeated points are
/// dropped with a warning.
fn grid_points(grid: &BTreeMap<String, Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    if grid.is_empty() {
        return Err(invalid("grid", "is empty"));
    }
    let mut points = vec![Vec::new()];
    for (key, values) in grid {
        if values.is_empty() {
            return Err(invalid(format!("grid.{key}"), "has no values"));
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    let mut unique: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        let bits: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        if unique.iter().any(|u| u.iter().map(|v| v.to_bits()).eq(bits.iter().copied())) {
            log::warn!("duplicate grid point {p:?} dropped");
        } else {
            unique.push(p);
        }
    }
    Ok(unique)
}

/// Runs the simulation at every grid point, concurrently, and writes
/// `sweep.json` in grid order. Domain exits are recorded per point.
pub fn sweep(cfg: &RunConfig, opts: &Options) -> Result<()> {
    let grid = cfg.grid.as_ref().ok_or_else(|| invalid("grid", "required"))?;
    let points = grid_points(grid)?;
    let base = cfg.model()?;
    for key in grid.keys() {
        if !base.model.params().contains_key(key) {
            return Err(invalid(format!("grid.{key}"), "is not a parameter of the model"));
        }
    }
    let integration = cfg.integration()?;
    let y0 = cfg.initial(base.model.compartments().len())?;
    let keys: Vec<String> = grid.keys().cloned().collect();

    let entries = points
        .par_iter()
        .map(|values| {
            let mut spec = base.clone();
            let params: BTreeMap<String, f64> = keys.iter().cloned().zip(values.iter().copied()).collect();
            spec.model.params_mut().extend(params.clone());
            let run = run_model(&spec, &integration, &y0)?;
            Ok(Entry {
                params,
                summary: run.summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    ensure_dir(&opts.out)?;
    write_json(&opts.out.join("sweep.json"), &SweepReport { keys, points: entries })
}
