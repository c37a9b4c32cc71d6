//! Dormand–Prince 5(4) with the standard continuous extension.

use alloc::vec::Vec;

use super::{check_positive, first_negative, DomainExit, ExitReason, SolverError, Trajectory};
use crate::field::VectorField;

#[cfg(test)]
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Adaptive embedded Runge–Kutta integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    /// Reject steps that make a component negative; if the step size then
    /// collapses, stop with a domain exit.
    pub nonneg_guard: bool,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 1_000_000,
            nonneg_guard: true,
        }
    }

    pub fn without_guard(mut self) -> Self {
        self.nonneg_guard = false;
        self
    }

    /// Every accepted step from `t = 0` to `t_end`.
    pub fn integrate<F: VectorField>(
        &self,
        field: &F,
        y0: &[f64],
        t_end: f64,
    ) -> Result<Trajectory, SolverError> {
        let mut traj = Trajectory::default();
        traj.times.push(0.0);
        traj.states.push(y0.to_vec());
        let exit = self.run(field, y0, t_end, |step| {
            traj.times.push(step.t + step.h);
            traj.states.push(step.y1.to_vec());
        })?;
        traj.domain_exit = exit;
        Ok(traj)
    }

    /// States at the requested `times` (increasing, starting at or after 0)
    /// by dense output.
    pub fn integrate_at<F: VectorField>(
        &self,
        field: &F,
        y0: &[f64],
        times: &[f64],
    ) -> Result<Trajectory, SolverError> {
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|t| !(*t >= 0.0)) {
            return Err(SolverError::BadOutputTimes);
        }
        let t_end = times.last().copied().unwrap_or(0.0);
        let mut traj = Trajectory::default();
        let mut next = 0;
        while next < times.len() && times[next] == 0.0 {
            traj.times.push(0.0);
            traj.states.push(y0.to_vec());
            next += 1;
        }
        let exit = self.run(field, y0, t_end, |step| {
            while next < times.len() && times[next] <= step.t + step.h {
                let theta = (times[next] - step.t) / step.h;
                traj.times.push(times[next]);
                traj.states.push(step.dense(theta));
                next += 1;
            }
        })?;
        traj.domain_exit = exit;
        Ok(traj)
    }

    fn run<F: VectorField, O: FnMut(&Step<'_>)>(
        &self,
        field: &F,
        y0: &[f64],
        t_end: f64,
        mut on_step: O,
    ) -> Result<Option<DomainExit>, SolverError> {
        check_positive("rtol", self.rtol)?;
        check_positive("atol", self.atol)?;
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
        if t_end == 0.0 {
            return Ok(None);
        }

        let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| alloc::vec![0.0; n]);
        let mut y = y0.to_vec();
        let mut y1 = alloc::vec![0.0; n];
        let mut tmp = alloc::vec![0.0; n];
        let mut err = alloc::vec![0.0; n];
        if let Err(e) = field.eval(&y, &mut k[0]) {
            return Err(SolverError::InitialState(ExitReason::Eval(e)));
        }
        let mut h = match self.h0 {
            Some(h) => {
                check_positive("h0", h)?;
                h
            }
            None => self.initial_step(field, &y, &k[0], t_end),
        }
        .min(self.h_max)
        .min(t_end);

        let mut t = 0.0;
        let mut rejected = false;
        let mut last_exit: Option<ExitReason> = None;
        for _ in 0..self.max_steps {
            if t >= t_end {
                return Ok(None);
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let h_min = 16.0 * f64::EPSILON * libm::fabs(t).max(1.0);
            if h < h_min {
                return match last_exit {
                    Some(reason) => Ok(Some(DomainExit { time: t, reason })),
                    None => Err(SolverError::StepUnderflow { t, h }),
                };
            }

            // stages 2..7
            let mut failure = None;
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    tmp[i] = y[i] + h * acc;
                }
                if let Err(e) = field.eval(&tmp, &mut k[s]) {
                    failure = Some(ExitReason::Eval(e));
                    break;
                }
                if s == 6 {
                    y1.copy_from_slice(&tmp);
                }
            }
            if failure.is_none() && self.nonneg_guard {
                failure = first_negative(&y1);
            }
            if let Some(reason) = failure {
                last_exit = Some(reason);
                h *= 0.5;
                rejected = true;
                continue;
            }

            let mut sum = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                err[i] = h * e;
                let sk = self.atol + self.rtol * libm::fabs(y[i]).max(libm::fabs(y1[i]));
                sum += (err[i] / sk) * (err[i] / sk);
            }
            let norm = libm::sqrt(sum / n.max(1) as f64);
            if norm <= 1.0 {
                on_step(&Step {
                    t,
                    h,
                    y0: &y,
                    y1: &y1,
                    k: &k,
                });
                t = if last { t_end } else { t + h };
                y.copy_from_slice(&y1);
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                last_exit = None;
                let mut fac = if norm == 0.0 { 10.0 } else { 0.9 * libm::pow(norm, -0.2) };
                fac = fac.clamp(0.2, 10.0);
                if rejected {
                    fac = fac.min(1.0);
                }
                rejected = false;
                h = (h * fac).min(self.h_max);
            } else {
                let fac = (0.9 * libm::pow(norm, -0.2)).clamp(0.2, 1.0);
                h *= fac;
                rejected = true;
            }
        }
        if t >= t_end {
            return Ok(None);
        }
        Err(SolverError::TooManySteps {
            steps: self.max_steps,
            t,
        })
    }

    fn initial_step<F: VectorField>(&self, field: &F, y: &[f64], f0: &[f64], t_end: f64) -> f64 {
        let n = y.len().max(1) as f64;
        let scale: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * libm::fabs(*v)).collect();
        let norm = |v: &[f64]| {
            libm::sqrt(v.iter().zip(&scale).map(|(x, s)| (x / s) * (x / s)).sum::<f64>() / n)
        };
        let (d0, d1) = (norm(y), norm(f0));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(t_end);
        let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
        let f1 = match field.eval_vec(&y1) {
            Ok(f1) => f1,
            Err(_) => return h0 * 1e-3,
        };
        let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
        let d2 = norm(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            libm::pow(0.01 / d1.max(d2), 0.2)
        };
        (100.0 * h0).min(h1)
    }
}

/// An accepted step with what the continuous extension needs.
struct Step<'a> {
    t: f64,
    h: f64,
    y0: &'a [f64],
    y1: &'a [f64],
    k: &'a [Vec<f64>; 7],
}

impl Step<'_> {
    /// Fourth-order interpolant at `t + θh`.
    fn dense(&self, theta: f64) -> Vec<f64> {
        if theta >= 1.0 {
            return self.y1.to_vec();
        }
        let h = self.h;
        let k = self.k;
        (0..self.y0.len())
            .map(|i| {
                let ydiff = self.y1[i] - self.y0[i];
                let bspl = h * k[0][i] - ydiff;
                let c3 = ydiff - h * k[6][i] - bspl;
                let c4 = h * D.iter().zip(k.iter()).map(|(d, kj)| d * kj[i]).sum::<f64>();
                let eta = 1.0 - theta;
                self.y0[i] + theta * (ydiff + eta * (bspl + theta * (c3 + eta * c4)))
            })
            .collect()
    }
}

/// [`Dopri5`] with the non-negativity guard on, storing every step.
pub fn integrate_adaptive<F: VectorField>(
    field: &F,
    y0: &[f64],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<Trajectory, SolverError> {
    Dopri5::new(rtol, atol).integrate(field, y0, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, ParamMap};
    use crate::field::CompiledField;
    use crate::solver::integrate_rk4;
    use alloc::string::String;

    fn field(vars: &[&str], rhs: &[&str]) -> CompiledField {
        let names: Vec<String> = vars.iter().map(|v| String::from(*v)).collect();
        let exprs: Vec<_> = rhs.iter().map(|r| parse(r, vars).unwrap()).collect();
        let mut p = ParamMap::new();
        p.insert("alpha".into(), 0.1);
        p.insert("beta".into(), 1.0);
        p.insert("mu".into(), 0.1);
        CompiledField::new(&names, &exprs, &p).unwrap()
    }

    #[test]
    fn tableau_is_consistent() {
        for (s, row) in A.iter().enumerate() {
            assert!((row.iter().sum::<f64>() - C[s]).abs() < 1e-14, "row {s}");
        }
        assert!(E.iter().sum::<f64>().abs() < 1e-15);
        assert!(D.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn exponential_decay_within_tolerance() {
        let f = field(&["I"], &["-alpha*I"]);
        let rtol = 1e-9;
        let times: Vec<f64> = (0..=50).map(|k| k as f64).collect();
        let traj = Dopri5::new(rtol, 1e-14).integrate_at(&f, &[0.5], &times).unwrap();
        assert_eq!(traj.times, times);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = 0.5 * libm::exp(-0.1 * t);
            assert!((s[0] - exact).abs() <= rtol * 10.0 * exact, "t={t}");
        }
    }

    #[test]
    fn dense_output_is_accurate_between_steps() {
        let f = field(&["x", "y"], &["y", "-x"]);
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let traj = Dopri5::new(1e-10, 1e-12).integrate_at(&f, &[1.0, 0.0], &times).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            assert!((s[0] - libm::cos(*t)).abs() < 1e-8, "t={t}");
            assert!((s[1] + libm::sin(*t)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn agrees_with_fine_rk4_on_sirs() {
        let f = field(
            &["S", "I", "R"],
            &["-beta*S*I + mu*I", "beta*S*I - (alpha+mu)*I", "alpha*I"],
        );
        let y0 = [0.99, 0.01, 0.0];
        let reference = integrate_rk4(&f, &y0, 40.0, 1e-3).unwrap();
        let traj = Dopri5::new(1e-10, 1e-12)
            .integrate_at(&f, &y0, &[10.0, 20.0, 40.0])
            .unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let k = (t / 1e-3).round() as usize;
            for (a, b) in s.iter().zip(&reference.states[k]) {
                assert!((a - b).abs() < 1e-7, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn invalid_tolerances_rejected() {
        let f = field(&["x"], &["-x"]);
        assert!(matches!(
            integrate_adaptive(&f, &[1.0], 1.0, 0.0, 1e-10),
            Err(SolverError::InvalidOption { name: "rtol", .. })
        ));
        assert!(matches!(
            integrate_adaptive(&f, &[1.0], 1.0, 1e-6, -1.0),
            Err(SolverError::InvalidOption { name: "atol", .. })
        ));
        assert!(matches!(
            Dopri5::new(1e-6, 1e-9).integrate_at(&f, &[1.0], &[1.0, 0.5]),
            Err(SolverError::BadOutputTimes)
        ));
    }

    #[test]
    fn crossing_zero_is_a_domain_exit() {
        // x' = −1 from 0.5 hits zero at t = 0.5
        let f = field(&["x"], &["-1"]);
        let traj = integrate_adaptive(&f, &[0.5], 2.0, 1e-8, 1e-10).unwrap();
        let exit = traj.domain_exit.clone().expect("exit");
        assert!((exit.time - 0.5).abs() < 1e-6, "{exit:?}");
        assert!(traj.states.iter().all(|s| s[0] >= 0.0));
        let open = Dopri5::new(1e-8, 1e-10).without_guard().integrate(&f, &[0.5], 2.0).unwrap();
        assert!(open.domain_exit.is_none());
        assert!((open.states.last().unwrap()[0] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn evaluation_failure_is_a_domain_exit() {
        // x' = log(x) − 1 drives x through zero, where log fails
        let f = field(&["x"], &["log(x) - 1"]);
        let traj = Dopri5::new(1e-8, 1e-10).without_guard().integrate(&f, &[0.5], 5.0).unwrap();
        let exit = traj.domain_exit.clone().expect("exit");
        assert!(matches!(exit.reason, ExitReason::Eval(_)));
        assert!(traj.states.iter().all(|s| s[0] > 0.0));
        assert!(traj.last_time().unwrap() < 5.0);
    }
}
