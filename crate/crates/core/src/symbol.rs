//! Laurent-polynomial symbols and root/winding queries.
//!
//! The symbol `a(λ) = Σ_{k=-r}^{s} a_k λ^k` is the generating function of a
//! banded Toeplitz matrix. Everything downstream — winding regions, the limit
//! matrix `H(z)`, Szegő constants — is driven by the roots of
//! `Q_z(λ) = λ^r (a(λ) - z)`, a polynomial of degree exactly `r + s`.

use crate::error::Error;
use crate::Result;
use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Modulus ties closer than this are broken by argument.
const TIE_TOL: f64 = 1e-12;

/// A finite Laurent polynomial `Σ_{k=-r}^{s} a_k λ^k` with `a_s ≠ 0` and, when
/// `r > 0`, `a_{-r} ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSymbol {
    r: usize,
    s: usize,
    /// Coefficients from index `-r` up to `s`, length `r + s + 1`.
    coeffs: Vec<Complex64>,
}

impl LaurentSymbol {
    /// Builds a symbol from the coefficient window `[-r ..= s]`.
    pub fn new(r: usize, s: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if s == 0 {
            return Err(Error::Domain("top degree s must be positive".into()));
        }
        if coeffs.len() != r + s + 1 {
            return Err(Error::Domain(format!(
                "expected {} coefficients for r={r}, s={s}, got {}",
                r + s + 1,
                coeffs.len()
            )));
        }
        if coeffs[r + s] == Complex64::ZERO {
            return Err(Error::Domain("leading coefficient a_s must be nonzero".into()));
        }
        if r > 0 && coeffs[0] == Complex64::ZERO {
            return Err(Error::Domain("a_{-r} must be nonzero when r > 0".into()));
        }
        Ok(Self { r, s, coeffs })
    }

    /// Convenience constructor from real coefficients.
    pub fn from_real(r: usize, s: usize, coeffs: &[f64]) -> Result<Self> {
        Self::new(r, s, coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Order of the pole at 0.
    pub fn r(&self) -> usize {
        self.r
    }

    /// Top degree.
    pub fn s(&self) -> usize {
        self.s
    }

    /// Band width `r + s`, which is also `deg Q_z`.
    pub fn band(&self) -> usize {
        self.r + self.s
    }

    /// Coefficient `a_k` for `-r ≤ k ≤ s`, zero outside the band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k + self.r as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// All coefficients, indexed from `-r` to `s`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Evaluates `a(ω)`. Fails for `ω = 0` when the symbol has a pole there.
    pub fn eval(&self, omega: Complex64) -> Result<Complex64> {
        if omega == Complex64::ZERO {
            return Err(Error::Domain("symbol evaluated at 0".into()));
        }
        // Horner on the polynomial λ^r a(λ), then divide by ω^r.
        let mut acc = Complex64::ZERO;
        for &c in self.coeffs.iter().rev() {
            acc = acc * omega + c;
        }
        Ok(acc / omega.powi(self.r as i32))
    }

    /// Samples `a(e^{2πik/N})` for `k = 0..N`.
    pub fn curve_points(&self, n: usize) -> Result<Vec<Complex64>> {
        if n < 8 {
            return Err(Error::Domain(format!("need at least 8 curve samples, got {n}")));
        }
        (0..n)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                self.eval(Complex64::from_polar(1.0, theta))
            })
            .collect()
    }

    /// `max_{ω∈S¹} |a(ω)|`, a crude scale for tolerances (sampled at 512
    /// points; the curve is a trigonometric polynomial of low degree).
    pub fn scale(&self) -> f64 {
        self.curve_points(512)
            .expect("512 >= 8")
            .iter()
            .map(|w| w.norm())
            .fold(0.0, f64::max)
    }

    /// Coefficients of `Q_z(λ) = Σ_{k=0}^{r+s} a_{k-r} λ^k - z λ^r` in
    /// increasing degree.
    pub fn q_poly(&self, z: Complex64) -> Vec<Complex64> {
        let mut q = self.coeffs.clone();
        q[self.r] -= z;
        q
    }

    /// Derivative value `Q_z'(λ)`.
    pub fn q_prime(&self, z: Complex64, lambda: Complex64) -> Complex64 {
        let q = self.q_poly(z);
        let mut acc = Complex64::ZERO;
        for k in (1..q.len()).rev() {
            acc = acc * lambda + q[k] * k as f64;
        }
        acc
    }

    /// Roots of `Q_z`, with multiplicity, sorted by nondecreasing modulus
    /// (argument in `[0, 2π)` breaks ties).
    pub fn roots_at(&self, z: Complex64) -> Result<RootProfile> {
        let q = self.q_poly(z);
        let d = self.band();
        debug_assert_eq!(q.len(), d + 1);
        // Companion matrix of the monic polynomial Q_z / a_s.
        let lead = q[d];
        let mut comp = Array2::<Complex64>::zeros((d, d));
        for i in 1..d {
            comp[(i, i - 1)] = Complex64::ONE;
        }
        for i in 0..d {
            comp[(i, d - 1)] = -q[i] / lead;
        }
        let (eigs, _) = comp
            .eig()
            .map_err(|e| Error::Linalg(format!("companion eigensolve: {e}")))?;
        let mut roots: Vec<Complex64> = eigs.to_vec();
        sort_roots(&mut roots);
        let unit_gap = roots
            .iter()
            .map(|l| (l.norm() - 1.0).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(RootProfile { z, roots, unit_gap })
    }

    /// Winding number of `a - z` around 0: the number of roots of `Q_z` in
    /// the open unit disk minus `r`.
    pub fn winding(&self, z: Complex64, tol: f64) -> Result<i64> {
        let profile = self.roots_at(z)?;
        if profile.unit_gap < tol {
            return Err(Error::OnCriticalCurve { gap: profile.unit_gap, tol });
        }
        Ok(profile.inside_count() as i64 - self.r as i64)
    }

    /// Winding with the default critical-curve tolerance of 1e-8.
    pub fn winding_default(&self, z: Complex64) -> Result<i64> {
        self.winding(z, 1e-8)
    }
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    // Break near-ties in modulus by argument in [0, 2π).
    let mut i = 0;
    while i < roots.len() {
        let mut j = i + 1;
        while j < roots.len() && (roots[j].norm() - roots[i].norm()).abs() <= TIE_TOL {
            j += 1;
        }
        if j - i > 1 {
            roots[i..j].sort_by(|a, b| {
                arg_2pi(*a)
                    .partial_cmp(&arg_2pi(*b))
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        }
        i = j;
    }
}

fn arg_2pi(w: Complex64) -> f64 {
    let a = w.arg();
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// Roots of `Q_z` for one query point, sorted by modulus.
#[derive(Debug, Clone)]
pub struct RootProfile {
    /// The query point.
    pub z: Complex64,
    /// The `r + s` roots, with multiplicity, `|roots[k]| ≤ |roots[k+1]|`.
    pub roots: Vec<Complex64>,
    /// Minimum distance of any `|λ_k|` to 1.
    pub unit_gap: f64,
}

impl RootProfile {
    /// Number of roots strictly inside the unit disk.
    pub fn inside_count(&self) -> usize {
        self.roots.iter().filter(|l| l.norm() < 1.0).count()
    }

    /// Smallest pairwise distance between roots (`∞` for fewer than 2 roots).
    pub fn min_separation(&self) -> f64 {
        let mut sep = f64::INFINITY;
        for i in 0..self.roots.len() {
            for j in i + 1..self.roots.len() {
                sep = sep.min((self.roots[i] - self.roots[j]).norm());
            }
        }
        sep
    }

    /// True when all roots are pairwise separated by more than `tol`.
    pub fn simple(&self, tol: f64) -> bool {
        self.min_separation() > tol
    }
}

/// JSON wire form of a symbol: `{"r": int, "s": int, "coeffs": [[re,im],..]}`
/// with coefficients listed from index `-r` to `s`.
#[derive(Serialize, Deserialize)]
struct SymbolJson {
    r: usize,
    s: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for LaurentSymbol {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        SymbolJson {
            r: self.r,
            s: self.s,
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for LaurentSymbol {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = SymbolJson::deserialize(de)?;
        LaurentSymbol::new(
            raw.r,
            raw.s,
            raw.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Ready-made symbols used throughout the tests and the verification battery.
pub mod gallery {
    use super::LaurentSymbol;
    use num_complex::Complex64;

    /// `a(λ) = λ` (the shift; nilpotent Toeplitz matrix).
    pub fn shift() -> LaurentSymbol {
        LaurentSymbol::from_real(0, 1, &[0.0, 1.0]).unwrap()
    }

    /// `a(λ) = λ²`.
    pub fn shift2() -> LaurentSymbol {
        LaurentSymbol::from_real(0, 2, &[0.0, 0.0, 1.0]).unwrap()
    }

    /// `a(λ) = λ + λ⁻¹` (free Jacobi symbol).
    pub fn jacobi() -> LaurentSymbol {
        LaurentSymbol::from_real(1, 1, &[1.0, 0.0, 1.0]).unwrap()
    }

    /// `a(t) = t + 2t² + t⁻¹`.
    pub fn tridiag_asym() -> LaurentSymbol {
        LaurentSymbol::from_real(1, 2, &[1.0, 0.0, 1.0, 2.0]).unwrap()
    }

    /// `a(t) = t² + 2t + i t⁻² − 0.5i t⁻³` (a genuinely complex band).
    pub fn twisted() -> LaurentSymbol {
        LaurentSymbol::new(
            3,
            2,
            vec![
                Complex64::new(0.0, -0.5),
                Complex64::new(0.0, 1.0),
                Complex64::ZERO,
                Complex64::ZERO,
                Complex64::new(2.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        )
        .unwrap()
    }

    /// `a(t) = -¾t + (5/4)i t² + ¾t³ + ¾t⁻¹ − i t⁻² − ¾t⁻³` (three bands on
    /// each side; its curve bounds a zero-winding lake).
    pub fn three_band() -> LaurentSymbol {
        LaurentSymbol::new(
            3,
            3,
            vec![
                Complex64::new(-0.75, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(0.75, 0.0),
                Complex64::ZERO,
                Complex64::new(-0.75, 0.0),
                Complex64::new(0.0, 1.25),
                Complex64::new(0.75, 0.0),
            ],
        )
        .unwrap()
    }

    /// `b(t) = (1 − t/2)(1 − 1/(2t)) = −t/2 + 5/4 − t⁻¹/2`, the classical
    /// zero-winding test symbol with `G(b) = 1`, `E(b) = 4/3`.
    pub fn szego_witness() -> LaurentSymbol {
        LaurentSymbol::from_real(1, 1, &[-0.5, 1.25, -0.5]).unwrap()
    }
}
