//! Seeded random sample points for the numerical identity checks.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0;

/// Where sample points are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Uniform in the open box `(lo, hi)^n`.
    Box { lo: f64, hi: f64 },
    /// Uniform on the simplex `Σx = 1` with every coordinate above `min`.
    Simplex { min: f64 },
}

impl Domain {
    /// The interior box used for Jacobi sampling, `(0.01, 0.99)^n`.
    pub const INTERIOR: Domain = Domain::Box { lo: 0.01, hi: 0.99 };
    /// The open simplex with coordinates above 0.01.
    pub const SIMPLEX: Domain = Domain::Simplex { min: 0.01 };
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("only {found} of {wanted} sample points were accepted after {attempts} draws")]
pub struct SamplingError {
    pub wanted: usize,
    pub found: usize,
    pub attempts: usize,
}

/// Deterministic point generator.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn point(&mut self, dim: usize, domain: Domain) -> Vec<f64> {
        match domain {
            Domain::Box { lo, hi } => (0..dim).map(|_| self.rng.gen_range(lo..hi)).collect(),
            Domain::Simplex { min } => loop {
                // Spacings of sorted uniforms are uniform on the simplex.
                let mut cuts: Vec<f64> = (0..dim.saturating_sub(1)).map(|_| self.rng.gen()).collect();
                cuts.sort_by(f64::total_cmp);
                let mut prev = 0.0;
                let mut p = Vec::with_capacity(dim);
                for c in cuts.iter().chain(core::iter::once(&1.0)) {
                    p.push(c - prev);
                    prev = *c;
                }
                if p.iter().all(|&x| x > min) {
                    return p;
                }
            },
        }
    }

    pub fn points(&mut self, dim: usize, count: usize, domain: Domain) -> Vec<Vec<f64>> {
        (0..count).map(|_| self.point(dim, domain)).collect()
    }

    /// Draws until `count` points satisfy `accept`, resampling rejects.
    pub fn points_where<F>(
        &mut self,
        dim: usize,
        count: usize,
        domain: Domain,
        mut accept: F,
    ) -> Result<Vec<Vec<f64>>, SamplingError>
    where
        F: FnMut(&[f64]) -> bool,
    {
        let max_attempts = 1000 * count.max(1);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            if attempts == max_attempts {
                return Err(SamplingError {
                    wanted: count,
                    found: out.len(),
                    attempts,
                });
            }
            attempts += 1;
            let p = self.point(dim, domain);
            if accept(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }
}
