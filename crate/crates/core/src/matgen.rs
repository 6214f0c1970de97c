//! Finite-n matrices of the model: Toeplitz, circulant, the rank-(r+s)
//! correction factors, Fourier basis, and noise.
//!
//! The load-bearing identity is the circulant split
//! `T_n(a) = C_n(a) - P_n Q_n`, which lets the whole outlier analysis run
//! through the normal matrix `C_n(a)` plus a fixed-rank perturbation.

use crate::error::Error;
use crate::symbol::LaurentSymbol;
use crate::Result;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Entry distribution of the iid noise matrix `X`. Every choice has mean 0
/// and `E|X|² = 1`; `ρ = E X²` is derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDist {
    /// Standard complex Gaussian (ρ = 0).
    ComplexGaussian,
    /// Standard real Gaussian (ρ = 1).
    RealGaussian,
    /// Uniform on {−1, +1} (ρ = 1).
    SymmetricRademacher,
    /// Uniform on {±1, ±i} (ρ = 0).
    SymmetricComplexRademacher,
}

impl NoiseDist {
    /// `ρ = E X²`.
    pub fn rho(self) -> f64 {
        match self {
            NoiseDist::ComplexGaussian | NoiseDist::SymmetricComplexRademacher => 0.0,
            NoiseDist::RealGaussian | NoiseDist::SymmetricRademacher => 1.0,
        }
    }

    fn draw(self, rng: &mut SmallRng) -> Complex64 {
        match self {
            NoiseDist::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            }
            NoiseDist::RealGaussian => Complex64::new(rng.sample(StandardNormal), 0.0),
            NoiseDist::SymmetricRademacher => {
                Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
            }
            NoiseDist::SymmetricComplexRademacher => match rng.random_range(0..4u8) {
                0 => Complex64::new(1.0, 0.0),
                1 => Complex64::new(-1.0, 0.0),
                2 => Complex64::new(0.0, 1.0),
                _ => Complex64::new(0.0, -1.0),
            },
        }
    }
}

/// Conjugation basis `U_n` of the noise: `Y = U (X/√n) U*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NoiseBasis {
    /// `U = I` (canonical basis; not flat at the border).
    Identity,
    /// `U = F_n*` (Fourier basis; flat at the border).
    Fourier,
    /// An explicit unitary matrix.
    ExplicitUnitary {
        #[serde(skip, default = "empty_matrix")]
        matrix: Array2<Complex64>,
    },
}

fn empty_matrix() -> Array2<Complex64> {
    Array2::zeros((0, 0))
}

/// σ-schedule: constant or power-law `σ_n = c·n^{−γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum SigmaSchedule {
    Const { value: f64 },
    Power { c: f64, gamma: f64 },
}

impl SigmaSchedule {
    /// σ_n for a given dimension.
    pub fn at(&self, n: usize) -> f64 {
        match *self {
            SigmaSchedule::Const { value } => value,
            SigmaSchedule::Power { c, gamma } => c * (n as f64).powf(-gamma),
        }
    }

    /// The limit σ = lim σ_n (zero for any power law).
    pub fn limit(&self) -> f64 {
        match *self {
            SigmaSchedule::Const { value } => value,
            SigmaSchedule::Power { .. } => 0.0,
        }
    }
}

/// Full description of the noise term `σ_n·U (X/√n) U*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub dist: NoiseDist,
    pub basis: NoiseBasis,
    pub sigma: SigmaSchedule,
}

impl NoiseModel {
    pub fn new(dist: NoiseDist, basis: NoiseBasis, sigma: SigmaSchedule) -> Result<Self> {
        if let NoiseBasis::ExplicitUnitary { matrix } = &basis {
            let n = matrix.nrows();
            if matrix.ncols() != n || n == 0 {
                return Err(Error::Domain("explicit basis must be square and nonempty".into()));
            }
            let mut dev = 0.0_f64;
            let gram = matrix.t().mapv(|c| c.conj()).dot(matrix);
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
                    dev = dev.max((gram[(i, j)] - target).norm());
                }
            }
            if dev > 1e-10 {
                return Err(Error::Domain(format!(
                    "explicit basis is not unitary (entrywise deviation {dev:.3e})"
                )));
            }
        }
        Ok(Self { dist, basis, sigma })
    }

    /// `ρ = E X²` of the entry distribution.
    pub fn rho(&self) -> f64 {
        self.dist.rho()
    }
}

/// One realization of the model `M_n = T_n(a) + σ_n Y_n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelInstance {
    pub sym: LaurentSymbol,
    pub n: usize,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl ModelInstance {
    pub fn new(sym: LaurentSymbol, n: usize, noise: NoiseModel, seed: u64) -> Result<Self> {
        check_size(&sym, n)?;
        Ok(Self { sym, n, noise, seed })
    }
}

fn check_size(sym: &LaurentSymbol, n: usize) -> Result<()> {
    if n <= sym.band() {
        return Err(Error::Size(format!(
            "n = {n} must exceed the band width r+s = {}",
            sym.band()
        )));
    }
    Ok(())
}

/// The banded Toeplitz matrix `T_n(a)`: entry `(i,j) = a_{j-i}`.
pub fn toeplitz(sym: &LaurentSymbol, n: usize) -> Result<Array2<Complex64>> {
    check_size(sym, n)?;
    let mut t = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            t[(i, j)] = sym.coeff(j as i64 - i as i64);
        }
    }
    Ok(t)
}

/// The circulant matrix `C_n(a)` with first row
/// `(a_0, a_1, …, a_s, 0, …, 0, a_{-r}, …, a_{-1})`, each subsequent row
/// rotated one step to the right.
pub fn circulant(sym: &LaurentSymbol, n: usize) -> Result<Array2<Complex64>> {
    check_size(sym, n)?;
    let mut first = vec![Complex64::ZERO; n];
    for k in 0..=sym.s() as i64 {
        first[k as usize] = sym.coeff(k);
    }
    for k in 1..=sym.r() as i64 {
        first[n - k as usize] = sym.coeff(-k);
    }
    let mut c = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            c[(i, j)] = first[(j + n - i) % n];
        }
    }
    Ok(c)
}

/// The upper-triangular `r×r` block `D_r` with `a_{-r}` on the diagonal:
/// `(D_r)_{pq} = a_{-r+q-p}` for `q ≥ p`.
pub fn d_block(sym: &LaurentSymbol) -> Array2<Complex64> {
    let r = sym.r();
    let mut d = Array2::zeros((r, r));
    for p in 0..r {
        for q in p..r {
            d[(p, q)] = sym.coeff(-(sym.r() as i64) + (q - p) as i64);
        }
    }
    d
}

/// The lower-triangular `s×s` block `E_s` with `a_s` on the diagonal:
/// `(E_s)_{pq} = a_{s-p+q}` for `p ≥ q`.
pub fn e_block(sym: &LaurentSymbol) -> Array2<Complex64> {
    let s = sym.s();
    let mut e = Array2::zeros((s, s));
    for p in 0..s {
        for q in 0..=p {
            e[(p, q)] = sym.coeff(sym.s() as i64 - (p - q) as i64);
        }
    }
    e
}

/// The factors of the circulant split `T_n = C_n − P·Q`, with
/// `P ∈ M_{n,r+s}`, `Q ∈ M_{r+s,n}`.
pub fn pq_factors(sym: &LaurentSymbol, n: usize) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    check_size(sym, n)?;
    let (r, s) = (sym.r(), sym.s());
    let e = e_block(sym);
    let d = d_block(sym);

    // P = [ 0_{r×s}  I_r ; 0 ; E_s  0_{s×r} ]
    let mut p = Array2::zeros((n, r + s));
    for i in 0..r {
        p[(i, s + i)] = Complex64::ONE;
    }
    for i in 0..s {
        for j in 0..s {
            p[(n - s + i, j)] = e[(i, j)];
        }
    }

    // Q = [ I_s  0  0_{s×r} ; 0_{r×s}  0  D_r ]
    let mut q = Array2::zeros((r + s, n));
    for i in 0..s {
        q[(i, i)] = Complex64::ONE;
    }
    for i in 0..r {
        for j in 0..r {
            q[(s + i, n - r + j)] = d[(i, j)];
        }
    }
    Ok((p, q))
}

/// The unitary DFT matrix `F(i,j) = ω_n^{(i-1)(j-1)}/√n`.
pub fn fourier_matrix(n: usize) -> Array2<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let phase = 2.0 * std::f64::consts::PI * ((i * j) % n) as f64 / n as f64;
        Complex64::from_polar(scale, phase)
    })
}

/// Eigenvalues of `C_n(a)`: the symbol evaluated at the n-th roots of unity,
/// `a(ω_n^l)`, `l = 0..n`.
pub fn circulant_eigenvalues(sym: &LaurentSymbol, n: usize) -> Array1<Complex64> {
    Array1::from_iter((0..n).map(|l| {
        let theta = 2.0 * std::f64::consts::PI * l as f64 / n as f64;
        sym.eval(Complex64::from_polar(1.0, theta)).expect("ω ≠ 0")
    }))
}

fn mix64(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Per-entry stream key. The draw at (i, j) depends only on (seed, i, j), so
/// realizations are reproducible independent of iteration order and threads.
pub fn entry_key(seed: u64, i: usize, j: usize) -> u64 {
    mix64(mix64(seed ^ 0x746f65706c69747a) ^ (((i as u64) << 32) | j as u64))
}

/// Derives an independent sub-seed for a tagged stream (trials, field
/// components, refinements).
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ tag.rotate_left(17)) ^ index)
}

/// Draws the iid matrix `X` entrywise from the counter-based stream.
pub fn sample_x(dist: NoiseDist, n: usize, seed: u64) -> Array2<Complex64> {
    Array2::from_shape_fn((n, n), |(i, j)| {
        let mut rng = SmallRng::seed_from_u64(entry_key(seed, i, j));
        dist.draw(&mut rng)
    })
}

/// Draws `Y = U (X/√n) U*` for the configured basis.
pub fn sample_noise(noise: &NoiseModel, n: usize, seed: u64) -> Result<Array2<Complex64>> {
    let x = sample_x(noise.dist, n, seed);
    let scale = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    Ok(match &noise.basis {
        NoiseBasis::Identity => x.mapv(|v| v * scale),
        NoiseBasis::Fourier => {
            // U = F* : Y = F* (X/√n) F
            let f = fourier_matrix(n);
            let fstar = f.t().mapv(|c| c.conj());
            fstar.dot(&x.mapv(|v| v * scale)).dot(&f)
        }
        NoiseBasis::ExplicitUnitary { matrix } => {
            if matrix.nrows() != n {
                return Err(Error::Size(format!(
                    "explicit basis is {}×{}, model wants n = {n}",
                    matrix.nrows(),
                    matrix.ncols()
                )));
            }
            let ustar = matrix.t().mapv(|c| c.conj());
            matrix.dot(&x.mapv(|v| v * scale)).dot(&ustar)
        }
    })
}

/// Assembles `M = T + σ_n Y` and `S = C + σ_n Y` with a shared noise draw.
pub fn assemble(model: &ModelInstance) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let t = toeplitz(&model.sym, model.n)?;
    let c = circulant(&model.sym, model.n)?;
    let sigma_n = model.noise.sigma.at(model.n);
    let y = sample_noise(&model.noise, model.n, model.seed)?;
    let scaled = y.mapv(|v| v * sigma_n);
    Ok((&t + &scaled, &c + &scaled))
}
