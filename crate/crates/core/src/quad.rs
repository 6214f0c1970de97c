//! Uniform quadrature on the unit circle with adaptive doubling.
//!
//! All contour integrals in this crate are averages against normalized
//! arc-length measure dθ/2π. For integrands that extend analytically (in θ)
//! to a strip around the real axis — rational functions of ω = e^{iθ} with no
//! poles on S¹ — the uniform rule converges geometrically, so doubling the
//! node count until two successive values agree is both cheap and reliable.

use num_complex::Complex64;

/// Default starting node count.
pub const N0: usize = 64;
/// Hard ceiling on node count; beyond this the integrand is treated as
/// effectively singular on the circle.
pub const N_MAX: usize = 1 << 21;

/// Mean of `f(ω)` over the unit circle, ω = e^{iθ}, refining from `n0` nodes
/// by doubling until successive values differ by less than `tol` (absolute).
/// Returns the value and the final node count.
pub fn circle_mean<F>(f: F, tol: f64, n0: usize) -> (Complex64, usize)
where
    F: Fn(Complex64) -> Complex64,
{
    let mut n = n0.max(8);
    let mut sum = nodes_sum(&f, n, 1, 0);
    let mut val = sum / n as f64;
    while n < N_MAX {
        // Doubling keeps old nodes: new nodes are the odd multiples of π/n.
        sum += nodes_sum(&f, 2 * n, 2, 1);
        n *= 2;
        let next = sum / n as f64;
        let err = (next - val).norm();
        val = next;
        if err < tol {
            return (val, n);
        }
    }
    (val, n)
}

/// Same as [`circle_mean`] but for a slice-valued integrand; the tolerance is
/// applied to the max-norm of the difference between refinements. `f` writes
/// its value into the scratch slice.
pub fn circle_mean_vec<F>(dim: usize, f: F, tol: f64, n0: usize) -> (Vec<Complex64>, usize)
where
    F: Fn(Complex64, &mut [Complex64]),
{
    let mut n = n0.max(8);
    let mut scratch = vec![Complex64::ZERO; dim];
    let mut sum = vec![Complex64::ZERO; dim];
    let mut add = |sum: &mut Vec<Complex64>, total: usize, step: usize, off: usize| {
        for k in (off..total).step_by(step) {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / total as f64;
            let omega = Complex64::from_polar(1.0, theta);
            f(omega, &mut scratch);
            for (s, v) in sum.iter_mut().zip(scratch.iter()) {
                *s += v;
            }
        }
    };
    add(&mut sum, n, 1, 0);
    let mut val: Vec<Complex64> = sum.iter().map(|s| s / n as f64).collect();
    while n < N_MAX {
        add(&mut sum, 2 * n, 2, 1);
        n *= 2;
        let mut err = 0.0_f64;
        for (i, s) in sum.iter().enumerate() {
            let next = s / n as f64;
            err = err.max((next - val[i]).norm());
            val[i] = next;
        }
        if err < tol {
            return (val, n);
        }
    }
    (val, n)
}

fn nodes_sum<F>(f: &F, total: usize, step: usize, off: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let mut s = Complex64::ZERO;
    for k in (off..total).step_by(step) {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / total as f64;
        s += f(Complex64::from_polar(1.0, theta));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand() {
        let (v, _) = circle_mean(|_| Complex64::new(3.0, -1.0), 1e-12, 8);
        assert!((v - Complex64::new(3.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn geometric_series_mean() {
        // mean of 1/(2-ω) = 1/2 (constant Fourier coefficient).
        let (v, n) = circle_mean(|w| 1.0 / (2.0 - w), 1e-12, 8);
        assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-12, "{v} at n={n}");
    }

    #[test]
    fn vector_integrand_matches_scalar() {
        let (v, _) = circle_mean_vec(
            2,
            |w, out| {
                out[0] = 1.0 / (2.0 - w);
                out[1] = w / (2.0 - w);
            },
            1e-12,
            8,
        );
        assert!((v[0] - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        // ω/(2-ω) has zero mean term? ω/(2-ω) = Σ_{j≥1} ω^j 2^{-j}: mean 0.
        assert!(v[1].norm() < 1e-12);
    }
}
