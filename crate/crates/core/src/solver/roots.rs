//! Bracketed scalar root finding.

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum RootError {
    #[error("no sign change on [{a}, {b}] (f = {fa}, {fb})")]
    NoSignChange { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("no convergence after {iterations} iterations (last estimate {x})")]
    NotConverged { x: f64, iterations: usize },
    #[error("function is not finite at {x}")]
    NonFinite { x: f64 },
}

/// Stopping rules shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Stop when the bracket is narrower than this.
    pub xtol: f64,
    /// Stop when `|f| ≤ ftol`.
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-14,
            ftol: 1e-12,
            max_iter: 200,
        }
    }
}

fn bracket<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), RootError> {
    let (fa, fb) = (f(a), f(b));
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        return Err(RootError::NoSignChange { a, b, fa, fb });
    }
    Ok((fa, fb))
}

/// Plain bisection.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    opts: RootOptions,
) -> Result<f64, RootError> {
    let (mut fa, fb) = bracket(&mut f, a, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    for _ in 0..opts.max_iter {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if !fm.is_finite() {
            return Err(RootError::NonFinite { x: m });
        }
        if libm::fabs(fm) <= opts.ftol || libm::fabs(b - a) <= opts.xtol {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(RootError::NotConverged {
        x: 0.5 * (a + b),
        iterations: opts.max_iter,
    })
}

/// Brent's method: inverse quadratic and secant steps safeguarded by
/// bisection.
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: RootOptions,
) -> Result<f64, RootError> {
    let (fa, fb) = bracket(&mut f, a, b)?;
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa == 0.0 {
        return Ok(a);
    }
    let (mut c, mut fc) = (a, fa);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if libm::fabs(fc) < libm::fabs(fb) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * libm::fabs(b) + 0.5 * opts.xtol;
        let m = 0.5 * (c - b);
        if libm::fabs(fb) <= opts.ftol || libm::fabs(m) <= tol || fb == 0.0 {
            return Ok(b);
        }
        if libm::fabs(e) >= tol && libm::fabs(fa) > libm::fabs(fb) {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - libm::fabs(tol * q)).min(libm::fabs(e * q)) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if libm::fabs(d) > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite { x: b });
        }
    }
    Err(RootError::NotConverged {
        x: b,
        iterations: opts.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_square_root() {
        for solver in [brent::<fn(f64) -> f64>, bisect::<fn(f64) -> f64>] {
            let r = solver(|x| x * x - 2.0, 0.0, 2.0, RootOptions::default()).unwrap();
            assert!((r - core::f64::consts::SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn brent_is_fast_on_smooth_functions() {
        let mut calls = 0;
        let r = brent(
            |x| {
                calls += 1;
                libm::cos(x) - x
            },
            0.0,
            1.0,
            RootOptions { ftol: 0.0, ..Default::default() },
        )
        .unwrap();
        assert!((libm::cos(r) - r).abs() < 1e-15);
        assert!(calls < 15, "{calls}");
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let err = brent(|x| x * x + 1.0, -1.0, 1.0, RootOptions::default()).unwrap_err();
        assert!(matches!(err, RootError::NoSignChange { .. }));
    }

    #[test]
    fn endpoint_roots() {
        assert_eq!(brent(|x| x, 0.0, 1.0, RootOptions::default()).unwrap(), 0.0);
        assert_eq!(bisect(|x| x - 1.0, 0.0, 1.0, RootOptions::default()).unwrap(), 1.0);
    }
}
