//! Classification of the complex plane for a noisy symbol: support of the
//! limit spectral measure β_σ, its density, and the winding regions outside.
//!
//! The support condition is an integral threshold,
//! `I(z) = mean_θ |a(e^{iθ}) − z|^{-2} ≥ σ^{-2}`, with `I = ∞` on the curve
//! itself, so `supp β_0 = a(S¹)`. Off the support, points are labelled by the
//! winding number δ of `a − z`; the regions `R_{σ,δ}` with δ ≠ 0 are where
//! outlier eigenvalues may appear.

use crate::error::Error;
use crate::quad;
use crate::symbol::LaurentSymbol;
use crate::Result;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Relative curve-proximity tolerance: closer than this (times the symbol
/// scale) the integral is treated as +∞ and winding counts are meaningless.
pub const CURVE_TOL_REL: f64 = 1e-6;

/// Number of samples of a(S¹) used for distance queries.
const CURVE_SAMPLES: usize = 4096;

/// Default quadrature tolerance for `I(z)` and the density expectations.
pub const QUAD_TOL: f64 = 1e-9;

/// Value of the support integral `I(z)`; infinity is an in-band flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointIntegral {
    Finite(f64),
    Infinite,
}

impl PointIntegral {
    /// Finite value, or `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            PointIntegral::Finite(v) => v,
            PointIntegral::Infinite => f64::INFINITY,
        }
    }
}

/// Where a point sits relative to the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Support,
    Outside,
}

/// Full classification report for one point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionQuery {
    pub z: (f64, f64),
    pub kind: RegionKind,
    /// Winding index δ; present exactly when `kind == Outside`.
    pub delta: Option<i64>,
    /// `I(z)` (`f64::INFINITY` ↔ the in-band flag).
    pub i_value: f64,
    /// Distance from z to the sampled curve a(S¹).
    pub curve_dist: f64,
}

/// Subordination value and density of β_σ at one interior point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BrownPoint {
    pub z: (f64, f64),
    /// The unique ω(z) > 0 solving the subordination equation.
    pub omega: f64,
    /// Density ρ(z) of β_σ with respect to Lebesgue measure.
    pub density: f64,
}

/// Axis-aligned query window in ℂ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        Self { re_min, re_max, im_min, im_max }
    }

    /// Square window centered at the origin with half-width `h`.
    pub fn centered_square(h: f64) -> Self {
        Self::new(-h, h, -h, h)
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

/// Caches the sampled curve and symbol scale so that sweeps over many points
/// do not resample `a(S¹)` each time. All the free functions below build one
/// on the fly.
pub struct RegionClassifier {
    sym: LaurentSymbol,
    sigma: f64,
    curve: Vec<Complex64>,
    scale: f64,
}

impl RegionClassifier {
    pub fn new(sym: &LaurentSymbol, sigma: f64) -> Result<Self> {
        if sigma < 0.0 {
            return Err(Error::Domain("σ must be nonnegative".into()));
        }
        let curve = sym.curve_points(CURVE_SAMPLES)?;
        let scale = curve.iter().map(|w| w.norm()).fold(0.0, f64::max).max(1e-12);
        Ok(Self { sym: sym.clone(), sigma, curve, scale })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn symbol(&self) -> &LaurentSymbol {
        &self.sym
    }

    /// Distance from z to the sampled curve a(S¹).
    pub fn curve_dist(&self, z: Complex64) -> f64 {
        self.curve.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Absolute curve tolerance.
    pub fn curve_tol(&self) -> f64 {
        CURVE_TOL_REL * self.scale
    }

    /// The support integral `I(z)` with adaptive quadrature.
    pub fn point_integral(&self, z: Complex64, tol: f64) -> PointIntegral {
        if self.curve_dist(z) < self.curve_tol() {
            return PointIntegral::Infinite;
        }
        let (v, _) = quad::circle_mean(
            |w| {
                let d = self.sym.eval(w).expect("|ω|=1") - z;
                Complex64::new(1.0 / d.norm_sqr(), 0.0)
            },
            tol,
            quad::N0,
        );
        PointIntegral::Finite(v.re)
    }

    /// Is z in the support of β_σ?
    pub fn in_support(&self, z: Complex64) -> bool {
        match self.point_integral(z, QUAD_TOL) {
            PointIntegral::Infinite => true,
            PointIntegral::Finite(v) => {
                if self.sigma == 0.0 {
                    false
                } else {
                    v >= self.sigma.powi(-2)
                }
            }
        }
    }

    /// The unique ω ∈ (0, σ] solving
    /// `mean_θ (|a(e^{iθ})−z|² + ω²)^{-1} = σ^{-2}`, for z strictly inside
    /// the open region `A = {I(z) > σ^{-2}}`.
    pub fn subordination_omega(&self, z: Complex64) -> Result<f64> {
        if self.sigma <= 0.0 {
            return Err(Error::Domain("subordination needs σ > 0".into()));
        }
        if self.curve_dist(z) < self.curve_tol() {
            return Err(Error::OnCriticalCurve {
                gap: self.curve_dist(z),
                tol: self.curve_tol(),
            });
        }
        let target = self.sigma.powi(-2);
        let g = |w: f64| {
            let (v, _) = quad::circle_mean(
                |om| {
                    let d = self.sym.eval(om).expect("|ω|=1") - z;
                    Complex64::new(1.0 / (d.norm_sqr() + w * w), 0.0)
                },
                QUAD_TOL,
                quad::N0,
            );
            v.re - target
        };
        if g(0.0) <= 0.0 {
            return Err(Error::Domain(format!(
                "z = {z} is not strictly inside the support interior"
            )));
        }
        // g is strictly decreasing, and g(σ) < 0 since the integrand < σ^{-2}.
        let (mut lo, mut hi) = (0.0_f64, self.sigma);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Subordination value ω(z) and density ρ(z) of β_σ at z ∈ Int(A).
    pub fn brown_density(&self, z: Complex64) -> Result<BrownPoint> {
        let omega = self.subordination_omega(z)?;
        let w2 = omega * omega;
        // Both expectations with the shared quadrature rule:
        // E2 = E[(|a−z|²+ω²)^{-2}] and E1 = E[(a−z)·(|a−z|²+ω²)^{-2}].
        let (vals, _) = quad::circle_mean_vec(
            2,
            |om, out| {
                let d = self.sym.eval(om).expect("|ω|=1") - z;
                let den = d.norm_sqr() + w2;
                let inv2 = 1.0 / (den * den);
                out[0] = Complex64::new(inv2, 0.0);
                out[1] = d * inv2;
            },
            QUAD_TOL,
            quad::N0,
        );
        let e2 = vals[0].re;
        let e1 = vals[1];
        let density = (w2 * e2 + e1.norm_sqr() / e2) / std::f64::consts::PI;
        Ok(BrownPoint { z: (z.re, z.im), omega, density })
    }

    /// Support/winding classification of one point. Points numerically on
    /// the curve classify as support.
    pub fn classify(&self, z: Complex64) -> Result<RegionQuery> {
        let curve_dist = self.curve_dist(z);
        let i_value = self.point_integral(z, QUAD_TOL).value();
        if self.in_support(z) {
            return Ok(RegionQuery {
                z: (z.re, z.im),
                kind: RegionKind::Support,
                delta: None,
                i_value,
                curve_dist,
            });
        }
        let delta = self.sym.winding(z, 1e-8)?;
        Ok(RegionQuery {
            z: (z.re, z.im),
            kind: RegionKind::Outside,
            delta: Some(delta),
            i_value,
            curve_dist,
        })
    }

    /// Marching-squares level set of `I(z) = σ^{-2}` on the window grid,
    /// returned as chained polylines. Works on the bounded transform
    /// `h = σ² − 1/I` (h ≥ 0 on the support), so the curve singularity of I
    /// is harmless.
    pub fn boundary_grid(&self, window: Window, resolution: usize) -> Result<Vec<Vec<(f64, f64)>>> {
        if resolution < 16 {
            return Err(Error::Domain(format!(
                "boundary grid resolution must be ≥ 16, got {resolution}"
            )));
        }
        let nx = resolution;
        let ny = resolution;
        let dx = (window.re_max - window.re_min) / nx as f64;
        let dy = (window.im_max - window.im_min) / ny as f64;
        let mut h = vec![vec![0.0_f64; ny + 1]; nx + 1];
        let sig2 = self.sigma * self.sigma;
        for (i, row) in h.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let z = Complex64::new(
                    window.re_min + i as f64 * dx,
                    window.im_min + j as f64 * dy,
                );
                let inv_i = match self.point_integral(z, 1e-7) {
                    PointIntegral::Infinite => 0.0,
                    PointIntegral::Finite(v) => 1.0 / v,
                };
                *cell = sig2 - inv_i;
            }
        }
        let mut segments: Vec<((f64, f64), (f64, f64))> = Vec::new();
        let point = |i: usize, j: usize| {
            (window.re_min + i as f64 * dx, window.im_min + j as f64 * dy)
        };
        let lerp = |p: (f64, f64), q: (f64, f64), vp: f64, vq: f64| {
            let t = if (vq - vp).abs() < 1e-300 { 0.5 } else { -vp / (vq - vp) };
            let t = t.clamp(0.0, 1.0);
            (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
        };
        for i in 0..nx {
            for j in 0..ny {
                // corner order: 00, 10, 11, 01
                let c = [point(i, j), point(i + 1, j), point(i + 1, j + 1), point(i, j + 1)];
                let v = [h[i][j], h[i + 1][j], h[i + 1][j + 1], h[i][j + 1]];
                let mut crossings: Vec<(f64, f64)> = Vec::new();
                for e in 0..4 {
                    let (a, b) = (e, (e + 1) % 4);
                    if (v[a] >= 0.0) != (v[b] >= 0.0) {
                        crossings.push(lerp(c[a], c[b], v[a], v[b]));
                    }
                }
                // 2 crossings: one segment; 4: ambiguous saddle, pair them
                // along the sweep order (adequate for rendering).
                if crossings.len() == 2 {
                    segments.push((crossings[0], crossings[1]));
                } else if crossings.len() == 4 {
                    segments.push((crossings[0], crossings[1]));
                    segments.push((crossings[2], crossings[3]));
                }
            }
        }
        Ok(chain_segments(segments, dx.hypot(dy) * 1e-6))
    }
}

/// Greedily chains loose segments into polylines by matching endpoints.
fn chain_segments(
    mut segs: Vec<((f64, f64), (f64, f64))>,
    tol: f64,
) -> Vec<Vec<(f64, f64)>> {
    let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).hypot(a.1 - b.1) <= tol;
    let mut polys = Vec::new();
    while let Some((a, b)) = segs.pop() {
        let mut poly = vec![a, b];
        loop {
            let tail = *poly.last().unwrap();
            let head = poly[0];
            if let Some(idx) = segs.iter().position(|(p, q)| {
                close(*p, tail) || close(*q, tail) || close(*p, head) || close(*q, head)
            }) {
                let (p, q) = segs.swap_remove(idx);
                if close(p, tail) {
                    poly.push(q);
                } else if close(q, tail) {
                    poly.push(p);
                } else if close(p, head) {
                    poly.insert(0, q);
                } else {
                    poly.insert(0, p);
                }
            } else {
                break;
            }
        }
        polys.push(poly);
    }
    polys
}

/// `I(z)` for a one-off query (builds a throwaway classifier).
pub fn point_integral(sym: &LaurentSymbol, z: Complex64, tol: f64) -> Result<PointIntegral> {
    Ok(RegionClassifier::new(sym, 0.0)?.point_integral(z, tol))
}

/// Support membership for a one-off query.
pub fn in_support(sym: &LaurentSymbol, sigma: f64, z: Complex64) -> Result<bool> {
    Ok(RegionClassifier::new(sym, sigma)?.in_support(z))
}

/// Subordination value for a one-off query.
pub fn subordination_omega(sym: &LaurentSymbol, sigma: f64, z: Complex64) -> Result<f64> {
    RegionClassifier::new(sym, sigma)?.subordination_omega(z)
}

/// Brown density for a one-off query.
pub fn brown_density(sym: &LaurentSymbol, sigma: f64, z: Complex64) -> Result<BrownPoint> {
    RegionClassifier::new(sym, sigma)?.brown_density(z)
}

/// Classification for a one-off query.
pub fn classify(sym: &LaurentSymbol, sigma: f64, z: Complex64) -> Result<RegionQuery> {
    RegionClassifier::new(sym, sigma)?.classify(z)
}

/// Total mass of β_σ restricted to its absolutely continuous part, by a
/// tensor midpoint rule on a polar grid clipped to the support interior.
/// Radial cells straddling the support boundary are subdivided, since the
/// density jumps there. For σ > 0 the measure has no atoms, so this should
/// return ≈ 1.
pub fn brown_mass(sym: &LaurentSymbol, sigma: f64, radial: usize, angular: usize) -> Result<f64> {
    use rayon::prelude::*;
    let cls = RegionClassifier::new(sym, sigma)?;
    // Radial extent: supp β_σ sits inside a disk of this radius.
    let r_max = cls.scale * 1.5 + 2.0 * sigma + 0.5;
    let dr = r_max / radial as f64;
    let dth = 2.0 * std::f64::consts::PI / angular as f64;
    let cell_mass = |rm: f64, th: f64, dr: f64| -> f64 {
        let z = Complex64::from_polar(rm, th);
        if cls.curve_dist(z) < 2.0 * cls.curve_tol() {
            return 0.0;
        }
        match cls.brown_density(z) {
            Ok(bp) => bp.density * rm * dr * dth,
            Err(_) => 0.0,
        }
    };
    let mass: f64 = (0..angular)
        .into_par_iter()
        .map(|j| {
            let th = (j as f64 + 0.5) * dth;
            let inside: Vec<bool> = (0..=radial)
                .map(|i| cls.in_support(Complex64::from_polar(i as f64 * dr, th)))
                .collect();
            let mut acc = 0.0;
            for i in 0..radial {
                let rm = (i as f64 + 0.5) * dr;
                if inside[i] == inside[i + 1] {
                    if inside[i] {
                        acc += cell_mass(rm, th, dr);
                    }
                } else {
                    // boundary cell: subdivide radially
                    let sub = 16;
                    let ddr = dr / sub as f64;
                    for k in 0..sub {
                        let rs = i as f64 * dr + (k as f64 + 0.5) * ddr;
                        acc += cell_mass(rs, th, ddr);
                    }
                }
            }
            acc
        })
        .sum();
    Ok(mass)
}
