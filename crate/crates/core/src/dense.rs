//! Double-precision dense helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::C64;

/// Row/column of mode `k` in a `(2n+1)`-dimensional coefficient matrix.
#[inline]
pub fn slot(k: i64, n: usize) -> usize {
    (k + n as i64) as usize
}

/// Mode of row/column `i`.
#[inline]
pub fn mode(i: usize, n: usize) -> i64 {
    i as i64 - n as i64
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a general complex matrix via the Schur form.
pub fn eigenvalues(m: &DMatrix<C64>) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = Schur::new(m.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Largest real part of the eigenvalues.
pub fn spectral_abscissa(m: &DMatrix<C64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Principal submatrix without the row and column of mode 0.
pub fn drop_mode_zero(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let keep: Vec<usize> = (0..2 * n + 1).filter(|&i| i != n).collect();
    m.select_rows(&keep).select_columns(&keep)
}

/// Embeds a mean-zero block back into `(2n+1)` dimensions with zero row/column at mode 0.
pub fn pad_mode_zero(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let dim = 2 * n + 1;
    let map = |i: usize| if i < n { i } else { i + 1 };
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[(map(i), map(j))] = m[(i, j)];
        }
    }
    out
}

/// Largest `|m_ij − conj(m_ji)|`.
pub fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `∫₀ᵗ e^{zτ} dτ` in double precision; series for `|zt| < 1e−6`.
pub fn exp_integral(z: C64, t: f64) -> C64 {
    let zt = z * t;
    if zt.norm() < 1e-6 {
        return C64::new(t, 0.0) * (C64::new(1.0, 0.0) + zt / 2.0 + zt * zt / 6.0 + zt * zt * zt / 24.0);
    }
    // e^{zt} − 1 = expm1(a)·cos b − 2 sin²(b/2) + i e^a sin b, free of cancellation.
    let (a, b) = (zt.re, zt.im);
    let half = (b / 2.0).sin();
    let em1 = C64::new(a.exp_m1() * b.cos() - 2.0 * half * half, a.exp() * b.sin());
    em1 / z
}
