//! Adaptive Simpson quadrature.

/// `∫_a^b f` to absolute tolerance `tol` by recursive interval bisection
/// with Richardson correction. Refinement also stops when the local error
/// is within a few ulps of the local value. Either order of `a`, `b` is
/// accepted.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = MAX_EVALS;
    recurse(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut budget, &mut |_, _| {})
}

/// As [`adaptive_simpson`], also reporting each accepted subinterval to
/// `leaf` in order from `a` to `b` as `(right endpoint, integral)`.
pub fn adaptive_simpson_leaves<F, L>(mut f: F, a: f64, b: f64, tol: f64, mut leaf: L) -> f64
where
    F: FnMut(f64) -> f64,
    L: FnMut(f64, f64),
{
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = MAX_EVALS;
    recurse(&mut f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut budget, &mut leaf)
}

const MAX_DEPTH: u32 = 48;
/// Caps the work on integrands whose rounding noise exceeds `tol`.
const MAX_EVALS: usize = 1 << 20;

#[allow(clippy::too_many_arguments)]
fn recurse<F: FnMut(f64) -> f64, L: FnMut(f64, f64) + ?Sized>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut usize,
    leaf: &mut L,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    *budget = budget.saturating_sub(2);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // the floor stops refinement once the estimate is resolved to rounding
    let floor = 64.0 * f64::EPSILON * libm::fabs(left + right);
    if depth == 0 || *budget == 0 || libm::fabs(delta) <= 15.0 * tol.max(floor) || !delta.is_finite() {
        let value = left + right + delta / 15.0;
        leaf(b, value);
        return value;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget, leaf)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget, leaf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let a = adaptive_simpson(libm::exp, 0.0, 1.0, 1e-12);
        let b = adaptive_simpson(libm::exp, 1.0, 0.0, 1e-12);
        assert!((a - (core::f64::consts::E - 1.0)).abs() < 1e-12);
        assert_eq!(a, -b);
    }

    #[test]
    fn near_singular_integrand() {
        // ∫_{1e-6}^{1} dx/x = ln 1e6
        let v = adaptive_simpson(|x| 1.0 / x, 1e-6, 1.0, 1e-12);
        assert!((v - libm::log(1e6)).abs() < 1e-9, "{v}");
    }
}
