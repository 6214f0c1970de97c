//! Compound matrices, higher adjugates, and the determinant expansion
//! `det(A+B) = Σ_k Tr(adj_k(A) ⋀^k(B))`.
//!
//! Row/column index sets are k-subsets of {1..n} enumerated in lexicographic
//! order. Dimensions here are tiny (n = r+s ≤ ~8), so every minor is computed
//! by LU with partial pivoting and no fast exterior-algebra tricks are used.

use crate::error::Error;
use crate::Result;
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

/// A `binom(n,k) × binom(n,k)` matrix whose rows/columns are indexed by
/// k-subsets of {1..n} in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedMatrix {
    /// Exterior power.
    pub k: usize,
    /// Ambient dimension.
    pub n: usize,
    /// The subsets indexing rows and columns (0-based elements, lex order).
    pub subsets: Vec<Vec<usize>>,
    /// Entries, `dim × dim` with `dim = binom(n,k)`.
    pub mat: Array2<Complex64>,
}

impl IndexedMatrix {
    /// Number of rows (= columns).
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Max entry modulus; handy for "is this the zero matrix" checks.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// All k-subsets of {0..n-1} in lexicographic order.
pub fn subsets_lex(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Determinant by LU with partial pivoting. Returns 0 for the empty matrix's
/// complement convention handled by callers; `det` of a 0×0 matrix is 1.
pub fn det(a: &ArrayView2<Complex64>) -> Complex64 {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    if n == 0 {
        return Complex64::ONE;
    }
    let mut lu = a.to_owned();
    let mut sign = Complex64::ONE;
    for col in 0..n {
        let mut piv = col;
        let mut best = lu[(col, col)].norm();
        for row in col + 1..n {
            let v = lu[(row, col)].norm();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return Complex64::ZERO;
        }
        if piv != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            sign = -sign;
        }
        let d = lu[(col, col)];
        for row in col + 1..n {
            let f = lu[(row, col)] / d;
            if f != Complex64::ZERO {
                for j in col..n {
                    let v = lu[(col, j)];
                    lu[(row, j)] -= f * v;
                }
            }
        }
    }
    let mut out = sign;
    for i in 0..n {
        out *= lu[(i, i)];
    }
    out
}

/// Log-magnitude and phase of `det A`, immune to under/overflow. Returns
/// `(ln |det|, det/|det|)`; the phase is `0` when the determinant vanishes.
pub fn log_det(a: &ArrayView2<Complex64>) -> (f64, Complex64) {
    let n = a.nrows();
    if n == 0 {
        return (0.0, Complex64::ONE);
    }
    let mut lu = a.to_owned();
    let mut phase = Complex64::ONE;
    let mut log_mag = 0.0_f64;
    for col in 0..n {
        let mut piv = col;
        let mut best = lu[(col, col)].norm();
        for row in col + 1..n {
            let v = lu[(row, col)].norm();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 {
            return (f64::NEG_INFINITY, Complex64::ZERO);
        }
        if piv != col {
            for j in 0..n {
                let tmp = lu[(col, j)];
                lu[(col, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            phase = -phase;
        }
        let d = lu[(col, col)];
        log_mag += d.norm().ln();
        phase *= d / d.norm();
        for row in col + 1..n {
            let f = lu[(row, col)] / d;
            if f != Complex64::ZERO {
                for j in col..n {
                    let v = lu[(col, j)];
                    lu[(row, j)] -= f * v;
                }
            }
        }
    }
    (log_mag, phase)
}

fn minor(a: &ArrayView2<Complex64>, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    let sub = Array2::from_shape_fn((k, k), |(i, j)| a[(rows[i], cols[j])]);
    det(&sub.view())
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::Domain(format!("exterior power k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// The k-th compound matrix `⋀^k(A)`: entry `(I,J) = det A(I|J)` over retained
/// rows `I` and columns `J`. `⋀^0(A) = [1]`, `⋀^n(A) = [det A]`.
pub fn compound(a: &ArrayView2<Complex64>, k: usize) -> Result<IndexedMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Domain("compound of a non-square matrix".into()));
    }
    check_k(n, k)?;
    let subsets = subsets_lex(n, k);
    let dim = subsets.len();
    let mut mat = Array2::zeros((dim, dim));
    for (bi, rows) in subsets.iter().enumerate() {
        for (bj, cols) in subsets.iter().enumerate() {
            mat[(bi, bj)] = minor(a, rows, cols);
        }
    }
    Ok(IndexedMatrix { k, n, subsets, mat })
}

fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    (0..n).filter(|v| !set.contains(v)).collect()
}

/// Sum of 1-based indices of a 0-based subset.
fn index_sum(set: &[usize]) -> usize {
    set.iter().map(|v| v + 1).sum()
}

/// The k-th adjugate `adj_k(A)`: entry
/// `(I,J) = (−1)^{Σ_{i∈I} i + Σ_{j∈J} j} · det A(Jᶜ|Iᶜ)` (1-based index sums).
/// `adj_0(A) = [det A]`; `adj_1` is the classical adjugate. It vanishes
/// exactly when `rank(A) ≤ n − k − 1`.
pub fn adjugate(a: &ArrayView2<Complex64>, k: usize) -> Result<IndexedMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Domain("adjugate of a non-square matrix".into()));
    }
    check_k(n, k)?;
    let subsets = subsets_lex(n, k);
    let dim = subsets.len();
    let mut mat = Array2::zeros((dim, dim));
    for (bi, set_i) in subsets.iter().enumerate() {
        let comp_i = complement(n, set_i);
        for (bj, set_j) in subsets.iter().enumerate() {
            let comp_j = complement(n, set_j);
            let sign = if (index_sum(set_i) + index_sum(set_j)) % 2 == 0 {
                Complex64::ONE
            } else {
                -Complex64::ONE
            };
            mat[(bi, bj)] = sign * minor(a, &comp_j, &comp_i);
        }
    }
    Ok(IndexedMatrix { k, n, subsets, mat })
}

/// Compound-matrix expression of the adjugate:
/// `adj_k(A) = Σ · ⋀^{n−k}(S A S)ᵀ · Σ` with `S = diag(1,−1,…)` and `Σ` the
/// exchange (anti-diagonal) matrix. Used as an independent cross-check of
/// [`adjugate`].
pub fn adjugate_via_compound(a: &ArrayView2<Complex64>, k: usize) -> Result<IndexedMatrix> {
    let n = a.nrows();
    check_k(n, k)?;
    let sas = Array2::from_shape_fn((n, n), |(i, j)| {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        a[(i, j)] * sign
    });
    let comp = compound(&sas.view(), n - k)?;
    let dim = comp.dim();
    // Σ Mᵀ Σ: reverse both indices of the transpose.
    let mat = Array2::from_shape_fn((dim, dim), |(i, j)| comp.mat[(dim - 1 - j, dim - 1 - i)]);
    Ok(IndexedMatrix { k, n, subsets: subsets_lex(n, k), mat })
}

/// `Tr(adj_k(A) ⋀^k(B))` summed over k: equals `det(A+B)`.
pub fn det_sum(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> Result<Complex64> {
    let n = a.nrows();
    if a.dim() != b.dim() || a.ncols() != n {
        return Err(Error::Domain("det_sum needs two square matrices of equal size".into()));
    }
    let mut total = Complex64::ZERO;
    for k in 0..=n {
        let adj = adjugate(a, k)?;
        let pow = compound(b, k)?;
        total += trace_product(&adj, &pow)?;
    }
    Ok(total)
}

/// `Tr(L·R)` for two indexed matrices of the same shape.
pub fn trace_product(l: &IndexedMatrix, r: &IndexedMatrix) -> Result<Complex64> {
    if l.dim() != r.dim() {
        return Err(Error::Domain("trace of mismatched indexed matrices".into()));
    }
    let mut t = Complex64::ZERO;
    for i in 0..l.dim() {
        for j in 0..l.dim() {
            t += l.mat[(i, j)] * r.mat[(j, i)];
        }
    }
    Ok(t)
}
