//! Deterministic limit objects: the matrix `H(z)` (quadrature and residue
//! paths), covariance kernels, their exact finite-n counterparts, Szegő
//! constants, and the quantitative convergence lemmas.
//!
//! The circulant resolvent `R'(z) = (z − C_n(a))^{-1}` has entries
//! `R'(z)_{ij} = γ_n(j−i)` where `γ_n` folds the Fourier coefficients `γ(ℓ)`
//! of `1/(z − a(·))` over period n. For simple roots of `Q_z` the γ(ℓ) have a
//! stable partial-fraction closed form, which this module prefers over node
//! sums: the wrap-around entries of `Q_n R'(z) P_n − H(z)` are exponentially
//! small in n and would otherwise be lost to cancellation.

use crate::error::Error;
use crate::matgen;
use crate::multilinear::{self, IndexedMatrix};
use crate::quad;
use crate::symbol::{LaurentSymbol, RootProfile};
use crate::Result;
use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use num_complex::Complex64;

/// Singular values of `I + H` below `KERNEL_SVD_TOL · (1 + ‖H‖)` count as 0.
pub const KERNEL_SVD_TOL: f64 = 1e-7;

/// Default quadrature tolerance for contour kernels.
pub const KERNEL_QUAD_TOL: f64 = 1e-10;

/// Roots closer than this are treated as repeated (residue path refuses).
pub const SIMPLE_ROOT_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Fourier coefficients of 1/(z - a(·)) and the folded circulant resolvent
// ---------------------------------------------------------------------------

/// Laurent coefficients of `ω ↦ 1/(z − a(ω))` on the unit circle, via partial
/// fractions over the (simple) roots of `Q_z`. `1/(z−a(ω)) = Σ_ℓ γ(ℓ) ω^ℓ`.
pub struct ResolventSymbol {
    profile: RootProfile,
    /// 1/Q'(λ_j) per root.
    inv_qp: Vec<Complex64>,
    r: usize,
}

impl ResolventSymbol {
    pub fn new(sym: &LaurentSymbol, z: Complex64) -> Result<Self> {
        let profile = sym.roots_at(z)?;
        if profile.unit_gap <= 1e-10 {
            return Err(Error::OnCriticalCurve { gap: profile.unit_gap, tol: 1e-10 });
        }
        if !profile.simple(SIMPLE_ROOT_TOL) {
            return Err(Error::MultipleRoot { sep: profile.min_separation() });
        }
        let inv_qp = profile
            .roots
            .iter()
            .map(|&l| Complex64::ONE / sym.q_prime(z, l))
            .collect();
        Ok(Self { profile, inv_qp, r: sym.r() })
    }

    pub fn profile(&self) -> &RootProfile {
        &self.profile
    }

    /// `γ(ℓ)`: the coefficient of `ω^ℓ`. Decays geometrically in |ℓ|.
    pub fn gamma(&self, ell: i64) -> Complex64 {
        // 1/(z-a(ω)) = -ω^r / Q_z(ω); coefficient of ω^m in 1/Q_z:
        //   m ≥ 0:  -Σ_{|λ|>1} λ^{-m-1}/Q'(λ)
        //   m < 0:   Σ_{|λ|<1} λ^{-m-1}/Q'(λ)
        let m = ell - self.r as i64;
        let mut c = Complex64::ZERO;
        if m >= 0 {
            for (j, &l) in self.profile.roots.iter().enumerate() {
                if l.norm() > 1.0 {
                    c -= l.powi(-(m as i32) - 1) * self.inv_qp[j];
                }
            }
        } else {
            for (j, &l) in self.profile.roots.iter().enumerate() {
                if l.norm() < 1.0 {
                    c += l.powi((-m) as i32 - 1) * self.inv_qp[j];
                }
            }
        }
        -c
    }

    /// Period-n folding `γ_n(ℓ) = Σ_t γ(ℓ + t·n)`; these are the exact
    /// entries of the circulant resolvent: `R'(z)_{ij} = γ_n(j−i)`.
    pub fn gamma_folded(&self, ell: i64, n: usize) -> Complex64 {
        let n = n as i64;
        let mut total = self.gamma(ell);
        let mut quiet = 0;
        for t in 1..=100_000i64 {
            let step = self.gamma(ell + t * n) + self.gamma(ell - t * n);
            total += step;
            if step.norm() <= 1e-18 * (1.0 + total.norm()) {
                quiet += 1;
                if quiet >= 2 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        total
    }
}

/// Entry exponent of the block integrand: the (p,q) entry of
/// `diag(ω^s I_s, ω^{-r} I_r)·F(ω)` is `ω^{α(p,q)}` (0-based p, q).
fn h_exponent(sym: &LaurentSymbol, p: usize, q: usize) -> i64 {
    let e = if p < sym.s() { sym.s() as i64 } else { -(sym.r() as i64) };
    e + p as i64 - q as i64
}

/// `𝓓 · M · 𝓔` with the block-diagonal factors `𝓓 = diag(I_s, D_r)`,
/// `𝓔 = diag(E_s, I_r)`.
fn sandwich_de(sym: &LaurentSymbol, m: &Array2<Complex64>) -> Array2<Complex64> {
    let d = block_diag(&Array2::eye(sym.s()), &matgen::d_block(sym));
    let e = block_diag(&matgen::e_block(sym), &Array2::eye(sym.r()));
    d.dot(m).dot(&e)
}

fn block_diag(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (n1, n2) = (a.nrows(), b.nrows());
    let mut out = Array2::zeros((n1 + n2, n1 + n2));
    for i in 0..n1 {
        for j in 0..n1 {
            out[(i, j)] = a[(i, j)];
        }
    }
    for i in 0..n2 {
        for j in 0..n2 {
            out[(n1 + i, n1 + j)] = b[(i, j)];
        }
    }
    out
}

/// Eigenvalue collision guard for the circulant spectrum.
fn check_off_circulant_spectrum(sym: &LaurentSymbol, n: usize, z: Complex64) -> Result<()> {
    let min = matgen::circulant_eigenvalues(sym, n)
        .iter()
        .map(|&w| (w - z).norm())
        .fold(f64::INFINITY, f64::min);
    if min <= 1e-10 {
        return Err(Error::Singular(format!(
            "z = {z} is within {min:.3e} of a circulant eigenvalue (n = {n})"
        )));
    }
    Ok(())
}

/// `Q_n (z − C_n)^{-1} P_n` through the circulant diagonalization, without
/// forming the n×n inverse. Prefers the stable folded-coefficient path
/// (simple roots); falls back to direct node sums otherwise.
pub fn restricted_resolvent(sym: &LaurentSymbol, n: usize, z: Complex64) -> Result<Array2<Complex64>> {
    if n <= sym.band() {
        return Err(Error::Size(format!("n = {n} ≤ r+s = {}", sym.band())));
    }
    check_off_circulant_spectrum(sym, n, z)?;
    let d = sym.band();
    let m = match ResolventSymbol::new(sym, z) {
        Ok(rs) => Array2::from_shape_fn((d, d), |(p, q)| {
            rs.gamma_folded(-h_exponent(sym, p, q), n)
        }),
        Err(Error::MultipleRoot { .. }) => restricted_resolvent_node_sums(sym, n, z),
        Err(e) => return Err(e),
    };
    Ok(sandwich_de(sym, &m))
}

/// Direct node-sum evaluation of the same quantity (exact up to rounding,
/// subject to cancellation for wrap-around-small entries). Kept as the
/// fallback for repeated roots and as a cross-check oracle in tests.
pub fn restricted_resolvent_node_sums(sym: &LaurentSymbol, n: usize, z: Complex64) -> Array2<Complex64> {
    let d = sym.band();
    let mut m = Array2::<Complex64>::zeros((d, d));
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let omega = Complex64::from_polar(1.0, theta);
        let g = Complex64::ONE / (z - sym.eval(omega).expect("|ω|=1"));
        for p in 0..d {
            for q in 0..d {
                m[(p, q)] += omega.powi(h_exponent(sym, p, q) as i32) * g;
            }
        }
    }
    sandwich_de(sym, &(m / n as f64))
}

// ---------------------------------------------------------------------------
// The limit matrix H(z)
// ---------------------------------------------------------------------------

/// `H(z)`, the kernel dimension of `I + H(z)`, and the adjugate factor of the
/// outlier functional.
#[derive(Debug, Clone)]
pub struct LimitMatrices {
    pub z: Complex64,
    pub h: Array2<Complex64>,
    /// `dim ker(I + H(z))` at the SVD threshold; equals |winding| in theory.
    pub kernel_dim: usize,
    /// `adj_{kernel_dim}(I + H(z))`; nonzero on the winding regions.
    pub adj_delta: IndexedMatrix,
}

/// `H(z)` by adaptive contour quadrature of the block integrand.
pub fn h_quadrature(sym: &LaurentSymbol, z: Complex64, tol: f64) -> Result<Array2<Complex64>> {
    let profile = sym.roots_at(z)?;
    if profile.unit_gap <= 1e-8 {
        return Err(Error::OnCriticalCurve { gap: profile.unit_gap, tol: 1e-8 });
    }
    let d = sym.band();
    let (vals, _) = quad::circle_mean_vec(
        d * d,
        |omega, out| {
            let g = Complex64::ONE / (z - sym.eval(omega).expect("|ω|=1"));
            for p in 0..d {
                for q in 0..d {
                    out[p * d + q] = omega.powi(h_exponent(sym, p, q) as i32) * g;
                }
            }
        },
        tol,
        quad::N0,
    );
    let m = Array2::from_shape_fn((d, d), |(p, q)| vals[p * d + q]);
    Ok(sandwich_de(sym, &m))
}

/// Full limit bundle at z: `H(z)` by quadrature, kernel dimension by SVD
/// thresholding, and the adjugate factor.
pub fn h_matrix(sym: &LaurentSymbol, z: Complex64, tol: f64) -> Result<LimitMatrices> {
    let h = h_quadrature(sym, z, tol)?;
    let d = sym.band();
    let iph = &h + &Array2::<Complex64>::eye(d);
    let h_norm = spectral_norm(&h)?;
    let (_, sv, _) = iph.svd(false, false)?;
    let cut = KERNEL_SVD_TOL * (1.0 + h_norm);
    let kernel_dim = sv.iter().filter(|&&s| s < cut).count();
    let adj_delta = multilinear::adjugate(&iph.view(), kernel_dim)?;
    Ok(LimitMatrices { z, h, kernel_dim, adj_delta })
}

fn spectral_norm(a: &Array2<Complex64>) -> Result<f64> {
    let (_, sv, _) = a.svd(false, false)?;
    Ok(sv.iter().cloned().fold(0.0, f64::max))
}

/// `H(z)` by the residue formula (simple roots only):
/// `H = −Σ_{j≤J} f_j g_jᵀ 𝓔 / Q'(λ_j) − 𝓣`.
pub fn h_residue(sym: &LaurentSymbol, z: Complex64) -> Result<Array2<Complex64>> {
    let profile = sym.roots_at(z)?;
    if profile.unit_gap <= 1e-8 {
        return Err(Error::OnCriticalCurve { gap: profile.unit_gap, tol: 1e-8 });
    }
    if !profile.simple(SIMPLE_ROOT_TOL) {
        return Err(Error::MultipleRoot { sep: profile.min_separation() });
    }
    let (r, s, d) = (sym.r(), sym.s(), sym.band());
    let dr = matgen::d_block(sym);
    let e = block_diag(&matgen::e_block(sym), &Array2::eye(r));
    let mut h = Array2::<Complex64>::zeros((d, d));
    for (j, &lam) in profile.roots.iter().enumerate() {
        if lam.norm() >= 1.0 {
            continue; // only roots inside the disk contribute residues
        }
        let f = f_vector(sym, &dr, lam);
        let g = g_vector(s, d, lam);
        let ge = g_times(&g, &e); // row vector gᵀ𝓔
        let w = Complex64::ONE / sym.q_prime(z, profile.roots[j]);
        for p in 0..d {
            for q in 0..d {
                h[(p, q)] -= w * f[p] * ge[q];
            }
        }
    }
    if r > 0 {
        // 𝓣 = diag-block(0_s, D_r·T) with T_{pq} = c_{q-p}, the Taylor
        // coefficients of 1/Q_z at 0.
        let c = inverse_series(&sym.q_poly(z), r);
        let mut t = Array2::<Complex64>::zeros((r, r));
        for p in 0..r {
            for q in p..r {
                t[(p, q)] = c[q - p];
            }
        }
        let drt = dr.dot(&t);
        for p in 0..r {
            for q in 0..r {
                h[(s + p, s + q)] -= drt[(p, q)];
            }
        }
    }
    Ok(h)
}

/// `f_j = (φ_j ; D_r ψ_j)` with `φ_j(p) = λ^{r+p-1}`, `ψ_j(p) = λ^{p-1}`.
fn f_vector(sym: &LaurentSymbol, dr: &Array2<Complex64>, lam: Complex64) -> Vec<Complex64> {
    let (r, s) = (sym.r(), sym.s());
    let mut f = vec![Complex64::ZERO; r + s];
    for p in 0..s {
        f[p] = lam.powi((r + p) as i32);
    }
    if r > 0 {
        let psi: Vec<Complex64> = (0..r).map(|p| lam.powi(p as i32)).collect();
        for p in 0..r {
            let mut acc = Complex64::ZERO;
            for q in 0..r {
                acc += dr[(p, q)] * psi[q];
            }
            f[s + p] = acc;
        }
    }
    f
}

/// `g_j(p) = λ^{s-p}` (1-based p), as a plain vector.
fn g_vector(s: usize, d: usize, lam: Complex64) -> Vec<Complex64> {
    (0..d).map(|p| lam.powi(s as i32 - (p + 1) as i32)).collect()
}

fn g_times(g: &[Complex64], m: &Array2<Complex64>) -> Vec<Complex64> {
    let d = g.len();
    (0..d)
        .map(|q| (0..d).map(|k| g[k] * m[(k, q)]).sum())
        .collect()
}

/// Taylor coefficients `c_0..c_{len-1}` of `1/Q` at 0 (requires `Q(0) ≠ 0`).
fn inverse_series(q: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::ZERO; len];
    c[0] = Complex64::ONE / q[0];
    for m in 1..len {
        let mut acc = Complex64::ZERO;
        for l in 1..=m.min(q.len() - 1) {
            acc += q[l] * c[m - l];
        }
        c[m] = -acc / q[0];
    }
    c
}

/// Bi-orthogonality data of the residue construction, exposed for
/// verification: returns the matrix `(g_jᵀ 𝓔 f̃_i)_{ji}`, which must equal
/// `diag(Q'(λ_j))` when all roots are simple.
pub fn biorthogonality_matrix(sym: &LaurentSymbol, z: Complex64) -> Result<Array2<Complex64>> {
    let profile = sym.roots_at(z)?;
    if !profile.simple(SIMPLE_ROOT_TOL) {
        return Err(Error::MultipleRoot { sep: profile.min_separation() });
    }
    let (r, s, d) = (sym.r(), sym.s(), sym.band());
    let dr = matgen::d_block(sym);
    let e = block_diag(&matgen::e_block(sym), &Array2::eye(r));
    let mut out = Array2::<Complex64>::zeros((d, d));
    for (j, &lj) in profile.roots.iter().enumerate() {
        let g = g_times(&g_vector(s, d, lj), &e);
        for (i, &li) in profile.roots.iter().enumerate() {
            // f̃_i = (φ_i ; −D_r ψ_i)
            let mut f = f_vector(sym, &dr, li);
            for p in 0..r {
                f[s + p] = -f[s + p];
            }
            out[(j, i)] = g.iter().zip(&f).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Covariance kernels (limit and finite-n)
// ---------------------------------------------------------------------------

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Theta,
    A,
    B,
    ThetaEps,
    AEps,
    BEps,
}

/// Scalar-or-matrix kernel value.
#[derive(Debug, Clone)]
pub enum KernelValue {
    Scalar(Complex64),
    Matrix(Array2<Complex64>),
}

/// Limit kernels of the matrix field at noise level σ. All contour integrals
/// are means against dθ/2π (the limits of the exact finite-n sums).
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub sym: LaurentSymbol,
    pub sigma: f64,
}

impl KernelSet {
    pub fn new(sym: LaurentSymbol, sigma: f64) -> Self {
        Self { sym, sigma }
    }

    fn guard(&self, z: Complex64) -> Result<()> {
        let profile = self.sym.roots_at(z)?;
        if profile.unit_gap <= 1e-8 {
            return Err(Error::OnCriticalCurve { gap: profile.unit_gap, tol: 1e-8 });
        }
        Ok(())
    }

    /// `θ(z,z') = mean_ω [ (z−a(ω))·conj(z'−a(ω)) ]^{-1}`.
    pub fn theta(&self, z: Complex64, zp: Complex64) -> Result<Complex64> {
        self.guard(z)?;
        self.guard(zp)?;
        let (v, _) = quad::circle_mean(
            |w| {
                let a = self.sym.eval(w).expect("|ω|=1");
                Complex64::ONE / ((z - a) * (zp - a).conj())
            },
            KERNEL_QUAD_TOL,
            quad::N0,
        );
        Ok(v)
    }

    /// The (r+s)×(r+s) kernel `𝓐(z,z')`.
    pub fn a(&self, z: Complex64, zp: Complex64) -> Result<Array2<Complex64>> {
        self.guard(z)?;
        self.guard(zp)?;
        let (r, s, d) = (self.sym.r(), self.sym.s(), self.sym.band());
        let u = |p: usize| if p < s { 0i64 } else { -((r + s) as i64) };
        let v = |q: usize| if q < s { 0i64 } else { (r + s) as i64 };
        let (vals, _) = quad::circle_mean_vec(
            d * d,
            |w, out| {
                let a = self.sym.eval(w).expect("|ω|=1");
                let g = Complex64::ONE / ((z - a) * (zp - a).conj());
                for p in 0..d {
                    for q in 0..d {
                        let e = u(p) + p as i64 - q as i64 + v(q);
                        out[p * d + q] = w.powi(e as i32) * g;
                    }
                }
            },
            KERNEL_QUAD_TOL,
            quad::N0,
        );
        let m = Array2::from_shape_fn((d, d), |(p, q)| vals[p * d + q]);
        let dd = block_diag(&Array2::eye(s), &matgen::d_block(&self.sym));
        let dd_star = dd.t().mapv(|c| c.conj());
        Ok(dd.dot(&m).dot(&dd_star))
    }

    /// The (r+s)×(r+s) kernel `𝓑(z,z')`.
    pub fn b(&self, z: Complex64, zp: Complex64) -> Result<Array2<Complex64>> {
        self.guard(z)?;
        self.guard(zp)?;
        let d = self.sym.band();
        let (vals, _) = quad::circle_mean_vec(
            d * d,
            |w, out| {
                let a = self.sym.eval(w).expect("|ω|=1");
                let g = Complex64::ONE / ((z - a) * (zp - a).conj());
                for p in 0..d {
                    for q in 0..d {
                        out[p * d + q] = w.powi(p as i32 - q as i32) * g;
                    }
                }
            },
            KERNEL_QUAD_TOL,
            quad::N0,
        );
        let m = Array2::from_shape_fn((d, d), |(p, q)| vals[p * d + q]);
        let ee = block_diag(&matgen::e_block(&self.sym), &Array2::eye(self.sym.r()));
        let ee_star = ee.t().mapv(|c| c.conj());
        Ok(ee_star.dot(&m).dot(&ee))
    }

    /// `θ_ε(z,z') = mean_ω [ (z−a(ω))(z'−a(ω^ε)) ]^{-1}`, ε ∈ {−1,+1}.
    pub fn theta_eps(&self, z: Complex64, zp: Complex64, eps: i8) -> Result<Complex64> {
        self.guard(z)?;
        self.guard(zp)?;
        let (v, _) = quad::circle_mean(
            |w| {
                let a = self.sym.eval(w).expect("|ω|=1");
                let aeps = self.sym.eval(flip(w, eps)).expect("|ω|=1");
                Complex64::ONE / ((z - a) * (zp - aeps))
            },
            KERNEL_QUAD_TOL,
            quad::N0,
        );
        Ok(v)
    }

    /// The ε-variant `𝓐_ε(z,z')` (pseudo-covariance side).
    pub fn a_eps(&self, z: Complex64, zp: Complex64, eps: i8) -> Result<Array2<Complex64>> {
        self.guard(z)?;
        self.guard(zp)?;
        let (r, s, d) = (self.sym.r(), self.sym.s(), self.sym.band());
        let u = |p: usize| if p < s { 0i64 } else { -((r + s) as i64) };
        let w_right = |q: usize| if q < s { 0i64 } else { -(eps as i64) * (r + s) as i64 };
        let (vals, _) = quad::circle_mean_vec(
            d * d,
            |w, out| {
                let a = self.sym.eval(w).expect("|ω|=1");
                let aeps = self.sym.eval(flip(w, eps)).expect("|ω|=1");
                let g = Complex64::ONE / ((z - a) * (zp - aeps));
                for p in 0..d {
                    for q in 0..d {
                        let fexp = if eps == 1 {
                            p as i64 + q as i64 // ω^{p+q-2}, 0-based
                        } else {
                            p as i64 - q as i64
                        };
                        let e = u(p) + fexp + w_right(q);
                        out[p * d + q] = w.powi(e as i32) * g;
                    }
                }
            },
            KERNEL_QUAD_TOL,
            quad::N0,
        );
        let m = Array2::from_shape_fn((d, d), |(p, q)| vals[p * d + q]);
        let dd = block_diag(&Array2::eye(s), &matgen::d_block(&self.sym));
        let dd_t = dd.t().to_owned();
        Ok(dd.dot(&m).dot(&dd_t))
    }

    /// The ε-variant `𝓑_ε(z,z')`.
    pub fn b_eps(&self, z: Complex64, zp: Complex64, eps: i8) -> Result<Array2<Complex64>> {
        self.guard(z)?;
        self.guard(zp)?;
        let (s, d) = (self.sym.s(), self.sym.band());
        let (vals, _) = quad::circle_mean_vec(
            d * d,
            |w, out| {
                let a = self.sym.eval(w).expect("|ω|=1");
                let aeps = self.sym.eval(flip(w, eps)).expect("|ω|=1");
                let g = Complex64::ONE / ((z - a) * (zp - aeps));
                for p in 0..d {
                    for q in 0..d {
                        let fexp = if eps == 1 {
                            2 * s as i64 - p as i64 - q as i64 // ω^{2s+2-(p+q)}, 0-based
                        } else {
                            p as i64 - q as i64
                        };
                        out[p * d + q] = w.powi(fexp as i32) * g;
                    }
                }
            },
            KERNEL_QUAD_TOL,
            quad::N0,
        );
        let m = Array2::from_shape_fn((d, d), |(p, q)| vals[p * d + q]);
        let ee = block_diag(&matgen::e_block(&self.sym), &Array2::eye(self.sym.r()));
        let ee_t = ee.t().to_owned();
        Ok(ee_t.dot(&m).dot(&ee))
    }
}

fn flip(w: Complex64, eps: i8) -> Complex64 {
    if eps == 1 {
        w
    } else {
        w.conj() // ω^{-1} on the unit circle
    }
}

/// Dispatch by kernel kind (ε ignored for the plain kernels).
pub fn kernel_eval(
    sym: &LaurentSymbol,
    which: KernelKind,
    sigma: f64,
    z: Complex64,
    zp: Complex64,
    eps: i8,
) -> Result<KernelValue> {
    let ks = KernelSet::new(sym.clone(), sigma);
    Ok(match which {
        KernelKind::Theta => KernelValue::Scalar(ks.theta(z, zp)?),
        KernelKind::A => KernelValue::Matrix(ks.a(z, zp)?),
        KernelKind::B => KernelValue::Matrix(ks.b(z, zp)?),
        KernelKind::ThetaEps => KernelValue::Scalar(ks.theta_eps(z, zp, eps)?),
        KernelKind::AEps => KernelValue::Matrix(ks.a_eps(z, zp, eps)?),
        KernelKind::BEps => KernelValue::Matrix(ks.b_eps(z, zp, eps)?),
    })
}

/// `(Q_n F)` as an (r+s)×n matrix (rows of the Fourier basis weighted by the
/// Q-block structure).
pub fn qf_matrix(sym: &LaurentSymbol, n: usize) -> Array2<Complex64> {
    let (r, s, d) = (sym.r(), sym.s(), sym.band());
    let dr = matgen::d_block(sym);
    let scale = 1.0 / (n as f64).sqrt();
    let omega = |row: usize, k: usize| {
        let phase = 2.0 * std::f64::consts::PI * ((row * k) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    };
    Array2::from_shape_fn((d, n), |(p, k)| {
        if p < s {
            omega(p, k)
        } else {
            let i = p - s;
            (0..r).map(|m| dr[(i, m)] * omega(n - r + m, k)).sum()
        }
    })
}

/// `(F* P_n)` as an n×(r+s) matrix.
pub fn fstar_p_matrix(sym: &LaurentSymbol, n: usize) -> Array2<Complex64> {
    let (r, s, d) = (sym.r(), sym.s(), sym.band());
    let es = matgen::e_block(sym);
    let scale = 1.0 / (n as f64).sqrt();
    let omega_conj = |row: usize, k: usize| {
        let phase = 2.0 * std::f64::consts::PI * ((row * k) % n) as f64 / n as f64;
        Complex64::from_polar(scale, -phase)
    };
    Array2::from_shape_fn((n, d), |(k, q)| {
        if q < s {
            (0..s).map(|m| omega_conj(n - s + m, k) * es[(m, q)]).sum()
        } else {
            omega_conj(q - s, k)
        }
    })
}

/// Diagonal of `(z − C_n)^{-1}` in the Fourier basis.
fn delta_diag(sym: &LaurentSymbol, n: usize, z: Complex64) -> Array1<Complex64> {
    Array1::from_iter(
        matgen::circulant_eigenvalues(sym, n)
            .iter()
            .map(|&a| Complex64::ONE / (z - a)),
    )
}

/// Exact finite-n kernel `θ_n(z,z') = (1/n)·Tr R'(z) R'(z')^*`.
pub fn finite_theta(sym: &LaurentSymbol, n: usize, z: Complex64, zp: Complex64) -> Result<Complex64> {
    check_off_circulant_spectrum(sym, n, z)?;
    check_off_circulant_spectrum(sym, n, zp)?;
    let mut acc = Complex64::ZERO;
    for a in matgen::circulant_eigenvalues(sym, n).iter() {
        acc += Complex64::ONE / ((z - a) * (zp - a).conj());
    }
    Ok(acc / n as f64)
}

/// Exact finite-n kernel `𝓐_n(z,z') = Q_n R'(z) R'(z')^* Q_n^*`.
pub fn finite_a(sym: &LaurentSymbol, n: usize, z: Complex64, zp: Complex64) -> Result<Array2<Complex64>> {
    check_off_circulant_spectrum(sym, n, z)?;
    check_off_circulant_spectrum(sym, n, zp)?;
    let qf = qf_matrix(sym, n);
    let w: Array1<Complex64> = delta_diag(sym, n, z)
        .iter()
        .zip(delta_diag(sym, n, zp).iter())
        .map(|(a, b)| a * b.conj())
        .collect();
    let d = sym.band();
    Ok(Array2::from_shape_fn((d, d), |(p, q)| {
        (0..n).map(|k| qf[(p, k)] * w[k] * qf[(q, k)].conj()).sum()
    }))
}

/// Exact finite-n kernel `𝓑_n(z,z') = P_n^* R'(z')^* R'(z) P_n`.
pub fn finite_b(sym: &LaurentSymbol, n: usize, z: Complex64, zp: Complex64) -> Result<Array2<Complex64>> {
    check_off_circulant_spectrum(sym, n, z)?;
    check_off_circulant_spectrum(sym, n, zp)?;
    let fp = fstar_p_matrix(sym, n);
    let w: Array1<Complex64> = delta_diag(sym, n, z)
        .iter()
        .zip(delta_diag(sym, n, zp).iter())
        .map(|(a, b)| a * b.conj())
        .collect();
    let d = sym.band();
    Ok(Array2::from_shape_fn((d, d), |(p, q)| {
        (0..n).map(|k| fp[(k, p)].conj() * w[k] * fp[(k, q)]).sum()
    }))
}

/// Finite-n primed kernels for an explicit basis matrix `U` (dense path;
/// intended for moderate n). Returns `(θ'_n, 𝓐'_n, 𝓑'_n)`.
pub fn finite_primed_kernels(
    sym: &LaurentSymbol,
    n: usize,
    z: Complex64,
    zp: Complex64,
    u: &Array2<Complex64>,
) -> Result<(Complex64, Array2<Complex64>, Array2<Complex64>)> {
    check_off_circulant_spectrum(sym, n, z)?;
    check_off_circulant_spectrum(sym, n, zp)?;
    let f = matgen::fourier_matrix(n);
    let fstar = f.t().mapv(|c| c.conj());
    let rp = |zz: Complex64| {
        let dd = delta_diag(sym, n, zz);
        let mut fd = f.clone();
        for (k, mut col) in fd.columns_mut().into_iter().enumerate() {
            for v in col.iter_mut() {
                *v *= dd[k];
            }
        }
        fd.dot(&fstar)
    };
    let rz = rp(z);
    let rzp = rp(zp);
    let uut = u.dot(&u.t());
    let ubar_ustar = uut.t().mapv(|c| c.conj());
    let (p, q) = matgen::pq_factors(sym, n)?;
    // θ'_n = (1/n) Tr U* R'(z) U Uᵀ R'(z')ᵀ Ū
    let ustar = u.t().mapv(|c| c.conj());
    let ubar = u.mapv(|c| c.conj());
    let big = ustar.dot(&rz).dot(u).dot(&u.t()).dot(&rzp.t()).dot(&ubar);
    let theta_p = (0..n).map(|i| big[(i, i)]).sum::<Complex64>() / n as f64;
    // 𝓐'_n = Q R'(z) U Uᵀ R'(z')ᵀ Qᵀ
    let a_p = q.dot(&rz).dot(&uut).dot(&rzp.t()).dot(&q.t());
    // 𝓑'_n = Pᵀ R'(z')ᵀ Ū U* R'(z) P
    let b_p = p.t().dot(&rzp.t()).dot(&ubar_ustar).dot(&rz).dot(&p);
    Ok((theta_p, a_p, b_p))
}

// ---------------------------------------------------------------------------
// Szegő constants, circulant determinant, determinant ratio
// ---------------------------------------------------------------------------

/// Szegő constants of the zero-winding symbol `a − z`:
/// `G = a_s (−1)^s Π_{k>r} λ_k(z)` and
/// `E = Π_{i≤r} Π_{j>r} (1 − λ_i/λ_j)^{-1}`.
pub fn szego_constants(sym: &LaurentSymbol, z: Complex64) -> Result<(Complex64, Complex64)> {
    let wind = sym.winding(z, 1e-8)?;
    if wind != 0 {
        return Err(Error::Domain(format!(
            "Szegő constants need winding 0, a − z has winding {wind}"
        )));
    }
    let profile = sym.roots_at(z)?;
    let r = sym.r();
    let sign = if sym.s() % 2 == 0 { 1.0 } else { -1.0 };
    let mut g = sym.coeff(sym.s() as i64) * sign;
    for &l in &profile.roots[r..] {
        g *= l;
    }
    let mut e = Complex64::ONE;
    for &li in &profile.roots[..r] {
        for &lj in &profile.roots[r..] {
            e *= Complex64::ONE - li / lj;
        }
    }
    Ok((g, Complex64::ONE / e))
}

/// Closed-form circulant determinant
/// `det(C_n(a) − z) = a_s^n (−1)^{s(n−1)} Π_k (1 − λ_k(z)^n)`.
pub fn circulant_det(sym: &LaurentSymbol, z: Complex64, n: usize) -> Result<Complex64> {
    if n <= sym.band() {
        return Err(Error::Size(format!("n = {n} ≤ r+s = {}", sym.band())));
    }
    let profile = sym.roots_at(z)?;
    let sign = if (sym.s() * (n - 1)) % 2 == 0 { 1.0 } else { -1.0 };
    let mut out = sym.coeff(sym.s() as i64).powi(n as i32) * sign;
    for &l in &profile.roots {
        out *= Complex64::ONE - l.powi(n as i32);
    }
    Ok(out)
}

/// `det(I_{r+s} + Q_n R'(z) P_n) = det(z − T_n)/det(z − C_n)`, through the
/// small determinant.
pub fn det_ratio(sym: &LaurentSymbol, z: Complex64, n: usize) -> Result<Complex64> {
    let qrp = restricted_resolvent(sym, n, z)?;
    let m = &qrp + &Array2::<Complex64>::eye(sym.band());
    Ok(multilinear::det(&m.view()))
}

// ---------------------------------------------------------------------------
// Riemann sums of rational functions; resolvent entry decay
// ---------------------------------------------------------------------------

/// Roots of an arbitrary complex polynomial (increasing-degree coefficients)
/// via the companion matrix; trailing zero coefficients are trimmed.
fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
    }
    if c.is_empty() {
        return Err(Error::Domain("zero polynomial".into()));
    }
    let d = c.len() - 1;
    if d == 0 {
        return Ok(vec![]);
    }
    let lead = c[d];
    let mut comp = Array2::<Complex64>::zeros((d, d));
    for i in 1..d {
        comp[(i, i - 1)] = Complex64::ONE;
    }
    for i in 0..d {
        comp[(i, d - 1)] = -c[i] / lead;
    }
    use ndarray_linalg::Eig;
    let (eigs, _) = comp.eig().map_err(|e| Error::Linalg(e.to_string()))?;
    Ok(eigs.to_vec())
}

fn poly_eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Synthetic division of `p` by `(x − root)`; returns the quotient
/// (the remainder is dropped — callers only deflate at actual roots).
fn deflate(p: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let d = p.len() - 1;
    let mut q = vec![Complex64::ZERO; d];
    let mut carry = p[d];
    for k in (0..d).rev() {
        q[k] = carry;
        carry = p[k] + carry * root;
    }
    q
}

/// Taylor coefficients of `p(x)` around `x = a`, lowest order first.
fn taylor_shift(p: &[Complex64], a: Complex64) -> Vec<Complex64> {
    let mut out = p.to_vec();
    let n = out.len();
    // repeated synthetic division by (x - a)
    for i in 0..n {
        let mut carry = Complex64::ZERO;
        for k in (i..n).rev() {
            let t = out[k];
            out[k] = carry;
            carry = t + carry * a;
        }
        out[i] = carry;
    }
    out
}

/// Series quotient `num/den` to `order+1` coefficients (den[0] ≠ 0).
fn series_div(num: &[Complex64], den: &[Complex64], order: usize) -> Vec<Complex64> {
    let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or(Complex64::ZERO);
    let mut out = vec![Complex64::ZERO; order + 1];
    for m in 0..=order {
        let mut acc = get(num, m);
        for l in 1..=m {
            acc -= get(den, l) * out[m - l];
        }
        out[m] = acc / den[0];
    }
    out
}

/// `(1/n) Σ_k P(ω_n^k)/Q(ω_n^k)` together with its limit
/// `(1/2πi)∮ P/(ωQ) dω`, the latter by residue summation over the poles of
/// `P/(ωQ)` inside the unit disk (multiplicities handled by series division).
pub fn riemann_rational(
    p_coeffs: &[Complex64],
    q_coeffs: &[Complex64],
    n: usize,
) -> Result<(Complex64, Complex64)> {
    let q_roots = poly_roots(q_coeffs)?;
    for root in &q_roots {
        if (root.norm() - 1.0).abs() < 1e-8 {
            return Err(Error::Domain(format!("Q has a root {root} on the unit circle")));
        }
    }
    // finite node sum
    let mut sum = Complex64::ZERO;
    for k in 0..n {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
        sum += poly_eval(p_coeffs, w) / poly_eval(q_coeffs, w);
    }
    sum /= n as f64;

    // poles of P/(ω·Q): the roots of Q plus ω = 0, clustered to recover
    // multiplicities.
    let mut den: Vec<Complex64> = vec![Complex64::ZERO; q_coeffs.len() + 1];
    for (i, &c) in q_coeffs.iter().enumerate() {
        den[i + 1] = c;
    }
    let mut poles: Vec<Complex64> = q_roots;
    poles.push(Complex64::ZERO);
    // cluster
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    'next: for pole in poles {
        for (center, mult) in clusters.iter_mut() {
            if (*center - pole).norm() < 1e-8 {
                *mult += 1;
                continue 'next;
            }
        }
        clusters.push((pole, 1));
    }
    let mut target = Complex64::ZERO;
    for (center, mult) in clusters {
        if center.norm() >= 1.0 {
            continue;
        }
        // deflate den by (ω − center)^mult, then residue = [w^{mult-1}] of
        // the series P(center+w)/den_red(center+w).
        let mut reduced = den.clone();
        for _ in 0..mult {
            reduced = deflate(&reduced, center);
        }
        let num_series = taylor_shift(p_coeffs, center);
        let den_series = taylor_shift(&reduced, center);
        let quot = series_div(&num_series, &den_series, mult - 1);
        target += quot[mult - 1];
    }
    Ok((sum, target))
}

/// Max modulus of circulant-resolvent entries by circular lag, and the
/// fitted geometric decay rate κ (slope of log|entry| against lag).
#[derive(Debug, Clone)]
pub struct ResolventDecay {
    /// `(lag d, max |R'(z)_{ij}| over d_n(i,j) = d)`.
    pub lags: Vec<(usize, f64)>,
    /// e^{slope} of the log-linear fit; < 1 off the critical curve.
    pub kappa_fit: f64,
}

/// Entry-decay profile of `R'(z)` for lags `0..n/2`.
pub fn resolvent_decay(sym: &LaurentSymbol, z: Complex64, n: usize) -> Result<ResolventDecay> {
    check_off_circulant_spectrum(sym, n, z)?;
    let gamma_n: Vec<Complex64> = match ResolventSymbol::new(sym, z) {
        Ok(rs) => (0..n).map(|l| rs.gamma_folded(l as i64, n)).collect(),
        Err(Error::MultipleRoot { .. }) => {
            // direct DFT fallback
            (0..n)
                .map(|l| {
                    let mut acc = Complex64::ZERO;
                    for k in 0..n {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                        let w = Complex64::from_polar(1.0, th);
                        acc += w.powi(l as i32) / (z - sym.eval(w).expect("|ω|=1"));
                    }
                    acc / n as f64
                })
                .collect()
        }
        Err(e) => return Err(e),
    };
    // R'(z)_{ij} = γ_n(j−i); circular lag d realizes entries γ_n(d), γ_n(n−d)
    let mut lags = Vec::new();
    for d in 0..=n / 2 {
        let fwd = gamma_n[d].norm();
        let bwd = gamma_n[(n - d) % n].norm();
        lags.push((d, fwd.max(bwd)));
    }
    let peak = lags.iter().map(|&(_, v)| v).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = lags
        .iter()
        .filter(|&&(_, v)| v > peak * 1e-13)
        .map(|&(d, v)| (d as f64, v.ln()))
        .collect();
    let kappa_fit = fit_slope(&pts).exp();
    Ok(ResolventDecay { lags, kappa_fit })
}

/// Least-squares slope of y against x.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// r² of the least-squares line through the points.
pub fn fit_r_squared(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 3 {
        return 1.0;
    }
    let slope = fit_slope(pts);
    let mx: f64 = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my: f64 = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::gallery;
    use approx::assert_abs_diff_eq;
    use ndarray_linalg::OperationNorm;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn random_symbol(rng: &mut SmallRng, rmax: usize, smax: usize) -> LaurentSymbol {
        loop {
            let r = rng.random_range(0..=rmax);
            let s = rng.random_range(1..=smax);
            let coeffs: Vec<Complex64> = (0..r + s + 1)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let mut coeffs = coeffs;
            // keep a_s and a_{-r} away from zero
            let d = r + s;
            if coeffs[d].norm() < 0.3 {
                coeffs[d] = c(0.5 + rng.random_range(0.0..0.5), rng.random_range(-0.5..0.5));
            }
            if r > 0 && coeffs[0].norm() < 0.3 {
                coeffs[0] = c(rng.random_range(-0.5..0.5), 0.5 + rng.random_range(0.0..0.5));
            }
            if let Ok(sym) = LaurentSymbol::new(r, s, coeffs) {
                return sym;
            }
        }
    }

    #[test]
    fn gamma_shift_closed_forms() {
        // 1/(2−ω) = Σ_{ℓ≥0} 2^{−ℓ−1} ω^ℓ
        let rs = ResolventSymbol::new(&gallery::shift(), c(2.0, 0.0)).unwrap();
        for l in 0..10i64 {
            let want = 0.5f64.powi(l as i32 + 1);
            assert!((rs.gamma(l) - c(want, 0.0)).norm() < 1e-15);
            assert!(rs.gamma(-l - 1).norm() == 0.0);
        }
        // 1/(0.5−ω) = −Σ_{k≥0} 0.5^k ω^{−k−1}
        let rs = ResolventSymbol::new(&gallery::shift(), c(0.5, 0.0)).unwrap();
        for k in 0..10i32 {
            let want = -(0.5f64.powi(k));
            assert!((rs.gamma(-(k as i64) - 1) - c(want, 0.0)).norm() < 1e-15);
            assert!(rs.gamma(k as i64).norm() == 0.0);
        }
    }

    #[test]
    fn restricted_resolvent_shift_geometric() {
        // a(λ)=λ, z=2: value is exactly 1/(2^n − 1).
        for n in [10usize, 20, 40] {
            let m = restricted_resolvent(&gallery::shift(), n, c(2.0, 0.0)).unwrap();
            let want = 1.0 / (2f64.powi(n as i32) - 1.0);
            let got = m[(0, 0)];
            assert!(
                (got.re - want).abs() / want < 1e-12 && got.im.abs() < want * 1e-12,
                "n={n}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn restricted_resolvent_matches_node_sums() {
        let mut rng = SmallRng::seed_from_u64(21);
        for _ in 0..10 {
            let sym = random_symbol(&mut rng, 2, 2);
            let z = c(rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            if sym.roots_at(z).unwrap().unit_gap < 0.1 {
                continue;
            }
            let n = rng.random_range(sym.band() + 2..40);
            if restricted_resolvent(&sym, n, z).is_err() {
                continue;
            }
            let stable = restricted_resolvent(&sym, n, z).unwrap();
            let direct = restricted_resolvent_node_sums(&sym, n, z);
            assert!(
                max_abs_diff(&stable, &direct) < 1e-9,
                "stable vs node sums differ by {}", max_abs_diff(&stable, &direct)
            );
        }
    }

    #[test]
    fn restricted_resolvent_matches_dense_inverse() {
        use ndarray_linalg::Inverse;
        let sym = gallery::tridiag_asym();
        let n = 24;
        let z = c(1.7, 0.9);
        let (p, q) = matgen::pq_factors(&sym, n).unwrap();
        let cm = matgen::circulant(&sym, n).unwrap();
        let zm = Array2::<Complex64>::eye(n) * z - &cm;
        let inv = zm.inv().unwrap();
        let dense = q.dot(&inv).dot(&p);
        let fast = restricted_resolvent(&sym, n, z).unwrap();
        assert!(max_abs_diff(&dense, &fast) < 1e-10);
    }

    #[test]
    fn h_matrix_shift_values() {
        let lm = h_matrix(&gallery::shift(), c(0.5, 0.0), 1e-11).unwrap();
        assert!((lm.h[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-10);
        assert_eq!(lm.kernel_dim, 1);

        let lm = h_matrix(&gallery::shift(), c(2.0, 0.0), 1e-11).unwrap();
        assert!(lm.h[(0, 0)].norm() < 1e-10);
        assert_eq!(lm.kernel_dim, 0);
    }

    #[test]
    fn h_matrix_shift2_inside() {
        // winding 2 forces ker dim 2 in dimension 2: I + H = 0, H = −I₂.
        let lm = h_matrix(&gallery::shift2(), c(0.25, 0.0), 1e-11).unwrap();
        let want = Array2::<Complex64>::eye(2) * c(-1.0, 0.0);
        assert!(max_abs_diff(&lm.h, &want) < 1e-9);
        assert_eq!(lm.kernel_dim, 2);
        assert!(lm.adj_delta.max_abs() > 0.5);
    }

    #[test]
    fn h_residue_matches_quadrature() {
        let cases: Vec<(LaurentSymbol, Complex64)> = vec![
            (gallery::shift(), c(0.5, 0.0)),
            (gallery::jacobi(), c(3.0, 0.0)),
            (gallery::jacobi(), c(0.3, 0.7)),
            (gallery::tridiag_asym(), c(0.4, -0.6)),
            (gallery::twisted(), c(0.8, 0.9)),
        ];
        for (sym, z) in cases {
            let hq = h_quadrature(&sym, z, 1e-11).unwrap();
            let hr = h_residue(&sym, z).unwrap();
            assert!(
                max_abs_diff(&hq, &hr) < 1e-8,
                "residue vs quadrature mismatch at z={z}"
            );
        }
    }

    #[test]
    fn h_residue_refuses_repeated_roots() {
        // a(λ)=λ², z=0: double root at 0.
        assert!(matches!(
            h_residue(&gallery::shift2(), Complex64::ZERO),
            Err(Error::MultipleRoot { .. })
        ));
    }

    #[test]
    fn biorthogonality() {
        let mut rng = SmallRng::seed_from_u64(33);
        for _ in 0..10 {
            let sym = random_symbol(&mut rng, 2, 2);
            let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let profile = sym.roots_at(z).unwrap();
            if !profile.simple(1e-3) {
                continue;
            }
            let m = biorthogonality_matrix(&sym, z).unwrap();
            for (j, &lj) in profile.roots.iter().enumerate() {
                for i in 0..profile.roots.len() {
                    let want = if i == j { sym.q_prime(z, lj) } else { Complex64::ZERO };
                    let scale = sym.q_prime(z, lj).norm().max(1.0);
                    assert!(
                        (m[(j, i)] - want).norm() / scale < 1e-9,
                        "biorthogonality failed at ({j},{i})"
                    );
                }
            }
        }
    }

    #[test]
    fn rank_theorem_spot_checks() {
        // dim ker(I+H(z)) = |wind(a − z)| on the gallery.
        let cases: Vec<(LaurentSymbol, Complex64)> = vec![
            (gallery::shift(), c(0.5, 0.2)),
            (gallery::shift(), c(2.0, 0.0)),
            (gallery::shift2(), c(0.3, 0.1)),
            (gallery::jacobi(), c(0.0, 0.5)),
            (gallery::jacobi(), c(3.0, 0.0)),
            (gallery::tridiag_asym(), c(0.2, 0.3)),
            (gallery::three_band(), c(0.0, 0.2)),
        ];
        for (sym, z) in cases {
            let lm = h_matrix(&sym, z, 1e-10).unwrap();
            let wind = sym.winding_default(z).unwrap().unsigned_abs() as usize;
            assert_eq!(lm.kernel_dim, wind, "rank mismatch at z={z}");
            assert!(lm.adj_delta.max_abs() > 1e-10, "adjugate vanished at z={z}");
        }
    }

    #[test]
    fn theta_shift_closed_forms() {
        let ks = KernelSet::new(gallery::shift(), 0.0);
        let t22 = ks.theta(c(2.0, 0.0), c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(t22.re, 1.0 / 3.0, epsilon = 1e-10);
        assert!(t22.im.abs() < 1e-12);
        let t23 = ks.theta(c(2.0, 0.0), c(3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(t23.re, 0.2, epsilon = 1e-10);
        // inside the disk: θ(z,z') = 1/(1 − z·conj(z'))
        let (z, zp) = (c(0.3, 0.2), c(-0.1, 0.4));
        let t = ks.theta(z, zp).unwrap();
        let want = Complex64::ONE / (Complex64::ONE - z * zp.conj());
        assert!((t - want).norm() < 1e-10);
    }

    #[test]
    fn finite_kernels_converge_to_limit() {
        let sym = gallery::tridiag_asym();
        let ks = KernelSet::new(sym.clone(), 0.0);
        let (z, zp) = (c(2.5, 1.2), c(2.2, -0.8));
        let a_inf = ks.a(z, zp).unwrap();
        let b_inf = ks.b(z, zp).unwrap();
        let t_inf = ks.theta(z, zp).unwrap();
        let a_n = finite_a(&sym, 256, z, zp).unwrap();
        let b_n = finite_b(&sym, 256, z, zp).unwrap();
        let t_n = finite_theta(&sym, 256, z, zp).unwrap();
        assert!((t_n - t_inf).norm() < 1e-8, "theta: {}", (t_n - t_inf).norm());
        assert!(max_abs_diff(&a_n, &a_inf) < 1e-8, "A: {}", max_abs_diff(&a_n, &a_inf));
        assert!(max_abs_diff(&b_n, &b_inf) < 1e-8, "B: {}", max_abs_diff(&b_n, &b_inf));
    }

    #[test]
    fn finite_theta_shift_converges() {
        let t = finite_theta(&gallery::shift(), 64, c(2.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((t.re - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn finite_a_hermitian_at_diagonal() {
        let sym = gallery::twisted();
        let a = finite_a(&sym, 48, c(3.5, 0.5), c(3.5, 0.5)).unwrap();
        let dev = max_abs_diff(&a, &a.t().mapv(|v| v.conj()));
        assert!(dev < 1e-12);
    }

    #[test]
    fn kernel_positive_definite_outside_support() {
        use ndarray_linalg::Eigh;
        use ndarray_linalg::UPLO;
        let sym = gallery::jacobi();
        let ks = KernelSet::new(sym.clone(), 0.4);
        let mut rng = SmallRng::seed_from_u64(8);
        let mut tested = 0;
        while tested < 10 {
            let z = c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            if crate::regions::in_support(&sym, 0.4, z).unwrap() {
                continue;
            }
            if sym.roots_at(z).unwrap().unit_gap < 0.05 {
                continue;
            }
            for m in [ks.a(z, z).unwrap(), ks.b(z, z).unwrap()] {
                let herm = (&m + &m.t().mapv(|v: Complex64| v.conj())) / c(2.0, 0.0);
                let (eigs, _) = herm.eigh(UPLO::Lower).unwrap();
                assert!(eigs.iter().all(|&e| e > 0.0), "kernel not PD at z={z}: {eigs}");
            }
            // θ consistency: σ²θ(z,z) < 1 strictly outside the support
            let t = ks.theta(z, z).unwrap().re;
            assert!(0.4 * 0.4 * t < 1.0);
            tested += 1;
        }
    }

    #[test]
    fn theta_eps_reduces_to_theta_for_real_symbols_on_real_axis() {
        // for a real-coefficient symbol and real z, conj(z'−a(ω)) over the
        // circle matches (z'−a(ω^{-1})), so θ and θ_{−1} agree.
        let ks = KernelSet::new(gallery::jacobi(), 0.0);
        let (z, zp) = (c(3.0, 0.0), c(2.6, 0.0));
        let t = ks.theta(z, zp).unwrap();
        let tm = ks.theta_eps(z, zp, -1).unwrap();
        assert!((t - tm).norm() < 1e-10);
    }

    #[test]
    fn primed_kernels_identity_vs_fourier() {
        // identity basis is orthogonal: θ'_n matches the ε=−1 kernel as
        // n grows; Fourier basis matches ε=+1.
        let sym = gallery::shift();
        let ks = KernelSet::new(sym.clone(), 0.0);
        let n = 128;
        let (z, zp) = (c(2.0, 0.0), c(2.5, 0.5));
        let id = Array2::<Complex64>::eye(n);
        let (tp, _, _) = finite_primed_kernels(&sym, n, z, zp, &id).unwrap();
        let want = ks.theta_eps(z, zp, -1).unwrap();
        assert!((tp - want).norm() < 1e-8, "identity: {tp} vs {want}");

        let u = matgen::fourier_matrix(n).t().mapv(|c| c.conj()); // U = F*
        let (tp, _, _) = finite_primed_kernels(&sym, n, z, zp, &u).unwrap();
        let want = ks.theta_eps(z, zp, 1).unwrap();
        assert!((tp - want).norm() < 1e-8, "fourier: {tp} vs {want}");
    }

    #[test]
    fn szego_witness_constants() {
        let (g, e) = szego_constants(&gallery::szego_witness(), Complex64::ZERO).unwrap();
        assert!((g - Complex64::ONE).norm() < 1e-10, "G = {g}");
        assert!((e - c(4.0 / 3.0, 0.0)).norm() < 1e-10, "E = {e}");
    }

    #[test]
    fn szego_e_is_one_for_r_zero() {
        let (_, e) = szego_constants(&gallery::shift(), c(2.0, 0.0)).unwrap();
        assert!((e - Complex64::ONE).norm() < 1e-14);
    }

    #[test]
    fn szego_rejects_nonzero_winding() {
        assert!(szego_constants(&gallery::shift(), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn szego_determinant_convergence() {
        // det T_n(b) → G^n E with geometric error; here G = 1, E = 4/3.
        let sym = gallery::szego_witness();
        let t30 = matgen::toeplitz(&sym, 30).unwrap();
        let det30 = multilinear::det(&t30.view());
        assert!((det30 - c(4.0 / 3.0, 0.0)).norm() < 1e-6, "det T_30 = {det30}");
    }

    #[test]
    fn circulant_det_closed_form() {
        let d = circulant_det(&gallery::shift(), c(2.0, 0.0), 4).unwrap();
        assert!((d - c(15.0, 0.0)).norm() < 1e-10);
        // cyclic shift: det(C_3 − 0) = 1
        let d = circulant_det(&gallery::shift(), Complex64::ZERO, 3).unwrap();
        assert!((d - Complex64::ONE).norm() < 1e-12);
    }

    #[test]
    fn circulant_det_matches_lu() {
        let mut rng = SmallRng::seed_from_u64(77);
        for _ in 0..10 {
            let sym = random_symbol(&mut rng, 2, 2);
            let n = rng.random_range(sym.band() + 1..=40);
            let z = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let closed = circulant_det(&sym, z, n).unwrap();
            let cm = matgen::circulant(&sym, n).unwrap();
            let shifted = &cm - &(Array2::<Complex64>::eye(n) * z);
            let lu = multilinear::det(&shifted.view());
            let scale = closed.norm().max(lu.norm()).max(1e-12);
            assert!(
                (closed - lu).norm() / scale < 1e-9,
                "n={n} z={z}: {closed} vs {lu}"
            );
        }
    }

    #[test]
    fn det_ratio_stable_region_bound_and_sylvester() {
        // a(λ)=λ: r=0, s=1 → bound 1/(2^{rs}·2^{r+s+1}) = 1/4.
        for z in [c(2.0, 0.0), c(1.5, 1.0)] {
            let ratio = det_ratio(&gallery::shift(), z, 200).unwrap();
            assert!(ratio.norm() > 0.25, "|ratio| = {} at z = {z}", ratio.norm());
        }
        // Sylvester cross-check against the LU determinant ratio at n = 50.
        let mut rng = SmallRng::seed_from_u64(99);
        let sym = random_symbol(&mut rng, 1, 2);
        let z = c(2.8, 1.3);
        let n = 50;
        let ratio = det_ratio(&sym, z, n).unwrap();
        let t = matgen::toeplitz(&sym, n).unwrap();
        let cm = matgen::circulant(&sym, n).unwrap();
        let (lt, pt) = multilinear::log_det(&(&(Array2::<Complex64>::eye(n) * z) - &t).view());
        let (lc, pc) = multilinear::log_det(&(&(Array2::<Complex64>::eye(n) * z) - &cm).view());
        let oracle = pt / pc * Complex64::new((lt - lc).exp(), 0.0);
        assert!(
            (ratio - oracle).norm() / oracle.norm() < 1e-8,
            "{ratio} vs {oracle}"
        );
    }

    #[test]
    fn det_ratio_decays_in_unstable_region() {
        // a(λ)=λ, z = 0.5: true ratio is z^n/(z^n − 1), geometric to 0. In
        // doubles the decay is resolvable down to the eps·‖I‖ floor, after
        // which the computed value underflows to exactly 0.
        let mut prev = f64::INFINITY;
        for n in [20usize, 30, 40, 50] {
            let v = det_ratio(&gallery::shift(), c(0.5, 0.0), n).unwrap().norm();
            let want = 0.5f64.powi(n as i32) / (1.0 - 0.5f64.powi(n as i32));
            if want > 1e-14 {
                assert!((v - want).abs() / want < 1e-2, "n={n}: {v} vs {want}");
            }
            assert!(v < prev * 0.51f64.powi(9), "not decaying at n={n}");
            prev = v.max(1e-18);
        }
        let floor = det_ratio(&gallery::shift(), c(0.5, 0.0), 90).unwrap().norm();
        assert!(floor < 1e-15);
    }

    #[test]
    fn riemann_rational_geometric() {
        // P=1, Q=x−2: target −1/2, |sum − target| ≤ 4·2^{-n}.
        let p = [Complex64::ONE];
        let q = [c(-2.0, 0.0), Complex64::ONE];
        for n in [8usize, 16, 32] {
            let (sum, target) = riemann_rational(&p, &q, n).unwrap();
            assert!((target - c(-0.5, 0.0)).norm() < 1e-12);
            assert!(
                (sum - target).norm() <= 4.0 * 2f64.powi(-(n as i32)),
                "n={n}: err {}",
                (sum - target).norm()
            );
        }
    }

    #[test]
    fn riemann_rational_trivial_and_quadrature_check() {
        let one = [Complex64::ONE];
        let (sum, target) = riemann_rational(&one, &one, 8).unwrap();
        assert!((sum - Complex64::ONE).norm() < 1e-14);
        assert!((target - Complex64::ONE).norm() < 1e-14);

        // P=x, Q=x−2: target from a high-n node sum.
        let p = [Complex64::ZERO, Complex64::ONE];
        let q = [c(-2.0, 0.0), Complex64::ONE];
        let (_, target) = riemann_rational(&p, &q, 8).unwrap();
        let (sum512, _) = riemann_rational(&p, &q, 512).unwrap();
        assert!((sum512 - target).norm() < 1e-12, "{sum512} vs {target}");
    }

    #[test]
    fn riemann_rational_multiple_pole() {
        // P=1, Q=(x−2)²: residue of 1/(ω(ω−2)²) at 0 is 1/4.
        let p = [Complex64::ONE];
        let q = [c(4.0, 0.0), c(-4.0, 0.0), Complex64::ONE];
        let (sum, target) = riemann_rational(&p, &q, 256).unwrap();
        assert!((target - c(0.25, 0.0)).norm() < 1e-10, "target {target}");
        assert!((sum - target).norm() < 1e-10);
    }

    #[test]
    fn riemann_rational_rejects_unit_circle_roots() {
        let p = [Complex64::ONE];
        let q = [c(-1.0, 0.0), Complex64::ONE]; // root at 1
        assert!(riemann_rational(&p, &q, 8).is_err());
    }

    #[test]
    fn resolvent_decay_shift() {
        let dec = resolvent_decay(&gallery::shift(), c(2.0, 0.0), 64).unwrap();
        assert!((dec.kappa_fit - 0.5).abs() < 0.01, "κ = {}", dec.kappa_fit);
        // lag-d entry is 2^{−d−1}/(1−2^{−n})
        let want = 0.5f64.powi(4) / (1.0 - 0.5f64.powi(64));
        assert!((dec.lags[3].1 - want).abs() / want < 1e-12);

        let dec = resolvent_decay(&gallery::shift(), c(1.1, 0.0), 96).unwrap();
        assert!((dec.kappa_fit - 1.0 / 1.1).abs() < 0.01, "κ = {}", dec.kappa_fit);
    }

    #[test]
    fn resolvent_decay_random_symbols_subgeometric() {
        let mut rng = SmallRng::seed_from_u64(13);
        let mut tested = 0;
        while tested < 20 {
            let sym = random_symbol(&mut rng, 2, 2);
            let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let profile = sym.roots_at(z).unwrap();
            if profile.unit_gap < 0.1 {
                continue;
            }
            let dec = resolvent_decay(&sym, z, 64).unwrap();
            assert!(dec.kappa_fit < 1.0, "κ = {} for z={z}", dec.kappa_fit);
            tested += 1;
        }
    }

    #[test]
    fn convergence_rate_prop_convh() {
        // error ‖Q R' P − H‖ is ~ κ_pred^n with
        // κ_pred = max(|λ_r|, 1/|λ_{r+1}|) ... |λ_J|-style gap at the circle.
        let sym = gallery::jacobi();
        let z = c(3.0, 0.0);
        let h = h_quadrature(&sym, z, 1e-12).unwrap();
        let mut errs = Vec::new();
        for n in [16usize, 24, 32, 40] {
            let m = restricted_resolvent(&sym, n, z).unwrap();
            errs.push(((n as f64), max_abs_diff(&m, &h).ln()));
        }
        let kappa = fit_slope(&errs).exp();
        let profile = sym.roots_at(z).unwrap();
        let inside = profile.roots[sym.r() - 1].norm(); // |λ_r|
        let outside = 1.0 / profile.roots[sym.r()].norm(); // 1/|λ_{r+1}|
        let kappa_pred = inside.max(outside);
        assert!(
            (kappa - kappa_pred).abs() < 0.05,
            "κ = {kappa}, predicted {kappa_pred}"
        );
    }

    #[test]
    fn h_norm_convergence_is_halving() {
        // error shrinks at least by half every Δn = ⌈ln2/|ln κ_pred|⌉ steps
        let mut rng = SmallRng::seed_from_u64(55);
        let mut tested = 0;
        while tested < 5 {
            let sym = random_symbol(&mut rng, 2, 2);
            let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let profile = sym.roots_at(z).unwrap();
            if profile.unit_gap < 0.15 || !profile.simple(1e-3) {
                continue;
            }
            let r = sym.r();
            let kappa_pred = if r == 0 {
                1.0 / profile.roots[0].norm()
            } else {
                profile.roots[r - 1]
                    .norm()
                    .max(1.0 / profile.roots[r].norm())
            };
            if kappa_pred > 0.9 {
                continue;
            }
            let h = h_quadrature(&sym, z, 1e-12).unwrap();
            let dn = ((2f64).ln() / kappa_pred.ln().abs()).ceil() as usize;
            let n0 = sym.band() + 6;
            let mut prev = max_abs_diff(&restricted_resolvent(&sym, n0, z).unwrap(), &h);
            for step in 1..=4 {
                let n = n0 + step * dn;
                let cur = max_abs_diff(&restricted_resolvent(&sym, n, z).unwrap(), &h);
                if prev < 1e-13 {
                    break; // at the noise floor
                }
                assert!(cur <= prev * 0.55, "error failed to halve: {prev} → {cur}");
                prev = cur;
            }
            tested += 1;
        }
    }
}
