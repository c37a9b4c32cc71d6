use alloc::vec::Vec;

use super::{check_positive, first_negative, DomainExit, ExitReason, SolverError, Trajectory};
use crate::field::VectorField;

/// Classical fixed-step fourth-order Runge–Kutta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4 {
    pub dt: f64,
    /// Stop at the first step that makes a component negative.
    pub nonneg_guard: bool,
}

impl Rk4 {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            nonneg_guard: true,
        }
    }

    pub fn without_guard(mut self) -> Self {
        self.nonneg_guard = false;
        self
    }

    /// Integrates from `t = 0` to `t_end`, storing every step. The last
    /// step is shortened to land on `t_end`.
    pub fn integrate<F: VectorField>(
        &self,
        field: &F,
        y0: &[f64],
        t_end: f64,
    ) -> Result<Trajectory, SolverError> {
        check_positive("dt", self.dt)?;
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(SolverError::InvalidOption {
                name: "t_end",
                requirement: "non-negative and finite",
                value: t_end,
            });
        }
        let n = field.dim();
        if y0.len() != n {
            return Err(SolverError::DimensionMismatch {
                expected: n,
                found: y0.len(),
            });
        }
        if self.nonneg_guard {
            if let Some(r) = first_negative(y0) {
                return Err(SolverError::InitialState(r));
            }
        }

        let steps = libm::ceil(t_end / self.dt - 1e-9).max(0.0) as usize;
        let mut traj = Trajectory {
            times: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity(steps + 1),
            domain_exit: None,
        };
        traj.times.push(0.0);
        traj.states.push(y0.to_vec());

        let mut y = y0.to_vec();
        let mut k = [alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n], alloc::vec![0.0; n]];
        let mut tmp = alloc::vec![0.0; n];
        let mut t = 0.0;
        for step in 1..=steps {
            let t_next = if step == steps { t_end } else { step as f64 * self.dt };
            let h = t_next - t;
            match rk4_step(field, &y, h, &mut k, &mut tmp) {
                Ok(()) => {}
                Err(e) => {
                    traj.domain_exit = Some(DomainExit {
                        time: t_next,
                        reason: ExitReason::Eval(e),
                    });
                    return Ok(traj);
                }
            }
            for i in 0..n {
                y[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
            if self.nonneg_guard {
                if let Some(reason) = first_negative(&y) {
                    traj.domain_exit = Some(DomainExit { time: t_next, reason });
                    return Ok(traj);
                }
            }
            t = t_next;
            traj.times.push(t);
            traj.states.push(y.clone());
        }
        Ok(traj)
    }
}

fn rk4_step<F: VectorField>(
    field: &F,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>; 4],
    tmp: &mut [f64],
) -> Result<(), crate::expr::EvalError> {
    let [k1, k2, k3, k4] = k;
    field.eval(y, k1)?;
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    field.eval(tmp, k2)?;
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    field.eval(tmp, k3)?;
    for i in 0..y.len() {
        tmp[i] = y[i] + h * k3[i];
    }
    field.eval(tmp, k4)
}

/// [`Rk4`] with the non-negativity guard on.
pub fn integrate_rk4<F: VectorField>(
    field: &F,
    y0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Trajectory, SolverError> {
    Rk4::new(dt).integrate(field, y0, t_end)
}
