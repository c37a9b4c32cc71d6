mod couple;
mod exact;
mod simulate;
mod sweep;
mod verify;

use std::path::PathBuf;

use hamepi_core::sampling::DEFAULT_SEED;

use crate::config::{positive, RunConfig};
use crate::error::{invalid, Result};

pub use couple::couple;
pub use exact::exact;
pub use simulate::simulate;
pub use sweep::sweep;
pub use verify::verify;

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub tol: Option<f64>,
}

impl Options {
    fn seed(&self, cfg: &RunConfig) -> u64 {
        self.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED)
    }

    fn points(&self, cfg: &RunConfig, default: usize) -> Result<usize> {
        match self.points.or(cfg.points).unwrap_or(default) {
            0 => Err(invalid("points", "must be at least 1")),
            n => Ok(n),
        }
    }

    fn tol(&self, cfg: &RunConfig, default: f64) -> Result<f64> {
        Ok(positive("tol", self.tol.or(cfg.tol))?.unwrap_or(default))
    }
}
