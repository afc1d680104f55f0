//! One-dimensional numerical routines: golden-section minimisation and
//! adaptive Simpson quadrature.

use crate::math;

/// `(sqrt(5) - 1) / 2`
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimises a unimodal `f` on `[a, b]` until the bracket is narrower than
/// `tol`. Returns the best point seen and its value.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    // 200 iterations shrink any bracket by 1e-41.
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximises a unimodal `f` on `[a, b]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, fx) = golden_section_min(|x| -f(x), a, b, tol);
    (x, -fx)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute error
/// target `eps`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64, max_depth: u32) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, max_depth)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || math::abs(delta) <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section_min(|x| (x - 0.3) * (x - 0.3) + 2.0, -1.0, 4.0, 1e-10);
        // A smooth minimum is only located to about sqrt(machine epsilon).
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-7);
        assert_abs_diff_eq!(fx, 2.0, epsilon = 1e-15);
        let (x, _) = golden_section_max(|x| -(x + 1.0).abs(), -3.0, 3.0, 1e-10);
        assert_abs_diff_eq!(x, -1.0, epsilon = 1e-8);
    }

    #[test]
    fn simpson_integrates_kinked_log() {
        // ∫_0^2 max(0, ln x) dx = 2 ln 2 - 1
        let f = |x: f64| if x > 1.0 { x.ln() } else { 0.0 };
        let v = adaptive_simpson(&f, 0.0, 2.0, 1e-12, 50);
        assert_abs_diff_eq!(v, 2.0 * 2f64.ln() - 1.0, epsilon = 1e-10);
    }
}
