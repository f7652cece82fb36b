//! Extended-precision complex matrices (MPFR via `rug`).
//!
//! Gram matrices of exponentials `∫ e^{i(λ_k−λ_m)t} dt` over short horizons
//! have condition numbers far beyond `1e16`, so they are assembled, factored
//! and inverted here at a working precision chosen from the observed
//! conditioning. Inputs (eigenvalues, m-matrix entries) are `f64` and are
//! treated as exact data.

use nalgebra::DMatrix;
use rug::{Assign, Complex, Float};

use crate::dense;
use crate::C64;

/// First precision tried, in bits.
pub const START_PREC: u32 = 256;
/// Largest precision tried before giving up.
pub const MAX_PREC: u32 = 4096;
/// Bits that must survive after losing `log2(cond · dim)` to rounding.
pub const GUARD_BITS: u32 = 64;

pub fn zero(prec: u32) -> Complex {
    Complex::new(prec)
}

pub fn from_c64(prec: u32, z: C64) -> Complex {
    Complex::with_val(prec, (z.re, z.im))
}

pub fn to_c64(z: &Complex) -> C64 {
    C64::new(z.real().to_f64(), z.imag().to_f64())
}

/// `e^{iθ}`.
pub fn cis(theta: &Float) -> Complex {
    let prec = theta.prec();
    let (s, c) = theta.clone().sin_cos(Float::new(prec));
    Complex::with_val(prec, (c, s))
}

/// `e^{−iλt}` correctly rounded to double, with `λ·t` formed exactly.
pub fn phase_f64(lambda: f64, t: f64) -> C64 {
    let prec = 192;
    let theta = Float::with_val(prec, Float::with_val(prec, lambda) * t);
    let z = cis(&(-theta));
    to_c64(&z)
}

/// `e^{iλt}` at precision `prec`.
pub fn cis_mul(prec: u32, lambda: f64, t: f64) -> Complex {
    let theta = Float::with_val(prec + 32, Float::with_val(prec + 32, lambda) * t);
    Complex::with_val(prec, cis(&theta))
}

/// `∫₀ᵗ e^{i(a−b)τ} dτ` with `a − b` formed exactly.
pub fn exp_integral(prec: u32, a: f64, b: f64, t: f64) -> Complex {
    if a == b {
        return Complex::with_val(prec, (t, 0));
    }
    // Extra bits absorb the cancellation in e^{idt} − 1 when |dt| is small.
    let work = prec + 64;
    let d = Float::with_val(work, a) - Float::with_val(work, b);
    let theta = Float::with_val(work, &d * t);
    let e = cis(&theta) - 1u32;
    let denom = Complex::with_val(work, (0, &d));
    Complex::with_val(prec, e / denom)
}

/// `∫₀ᵗ e^{(−2ρ + i(a−b))τ} dτ`.
pub fn damped_exp_integral(prec: u32, rho: f64, a: f64, b: f64, t: f64) -> Complex {
    if rho == 0.0 {
        return exp_integral(prec, a, b, t);
    }
    let work = prec + 64;
    let d = Float::with_val(work, a) - Float::with_val(work, b);
    let re = Float::with_val(work, -2.0 * rho);
    let z = Complex::with_val(work, (re, d));
    let zt = Complex::with_val(work, &z * t);
    let e = zt.exp() - 1u32;
    Complex::with_val(prec, e / z)
}

/// Dense row-major complex matrix at a fixed precision.
#[derive(Clone, Debug)]
pub struct MpMatrix {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Complex>,
}

impl MpMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        Self {
            rows,
            cols,
            prec,
            data: vec![Complex::new(prec); rows * cols],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        prec: u32,
        mut f: impl FnMut(usize, usize) -> Complex,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            prec,
            data,
        }
    }

    /// Hermitian matrix from its upper triangle (diagonal made real).
    pub fn hermitian_from_fn(
        dim: usize,
        prec: u32,
        mut f: impl FnMut(usize, usize) -> Complex,
    ) -> Self {
        let mut m = Self::zeros(dim, dim, prec);
        for i in 0..dim {
            for j in i..dim {
                let mut z = f(i, j);
                if i == j {
                    z.mut_imag().assign(0.0);
                } else {
                    m.data[j * dim + i] = z.clone().conj();
                }
                m.data[i * dim + j] = z;
            }
        }
        m
    }

    pub fn from_c64(m: &DMatrix<C64>, prec: u32) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), prec, |i, j| from_c64(prec, m[(i, j)]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn get(&self, i: usize, j: usize) -> &Complex {
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_c64(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| to_c64(self.get(i, j)))
    }

    /// `self · v`.
    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = Complex::new(self.prec);
                let mut tmp = Complex::new(self.prec);
                for (a, x) in self.row(i).iter().zip(v) {
                    tmp.assign(a * x);
                    acc += &tmp;
                }
                acc
            })
            .collect()
    }

    /// `self · other`.
    pub fn mul(&self, other: &MpMatrix) -> MpMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = MpMatrix::zeros(self.rows, other.cols, self.prec);
        let mut tmp = Complex::new(self.prec);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    tmp.assign(a * other.get(l, j));
                    out.data[i * other.cols + j] += &tmp;
                }
            }
        }
        out
    }

    /// `self · otherᴴ`.
    pub fn mul_adjoint(&self, other: &MpMatrix) -> MpMatrix {
        assert_eq!(self.cols, other.cols);
        let adj = other.adjoint();
        self.mul(&adj)
    }

    pub fn adjoint(&self) -> MpMatrix {
        MpMatrix::from_fn(self.cols, self.rows, self.prec, |i, j| {
            self.get(j, i).clone().conj()
        })
    }

    /// Principal submatrix on `idx`.
    pub fn select(&self, idx: &[usize]) -> MpMatrix {
        MpMatrix::from_fn(idx.len(), idx.len(), self.prec, |i, j| {
            self.get(idx[i], idx[j]).clone()
        })
    }
}

/// `A = L Lᴴ` for Hermitian positive definite `A`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: MpMatrix,
    lh: MpMatrix,
}

impl Cholesky {
    /// Returns `None` when a pivot is not strictly positive.
    pub fn factor(a: &MpMatrix) -> Option<Self> {
        assert_eq!(a.rows, a.cols);
        let n = a.rows;
        let prec = a.prec;
        let mut l = MpMatrix::zeros(n, n, prec);
        let mut sum = Complex::new(prec);
        let mut tmp = Complex::new(prec);
        let mut sq = Float::new(prec);
        let mut conj_row: Vec<Complex> = Vec::with_capacity(n);
        for j in 0..n {
            let mut d = a.get(j, j).real().clone();
            for k in 0..j {
                let z = l.get(j, k);
                sq.assign(z.real() * z.real());
                d -= &sq;
                sq.assign(z.imag() * z.imag());
                d -= &sq;
            }
            if !(d.is_sign_positive() && !d.is_zero()) || d.is_nan() {
                return None;
            }
            let djj = d.sqrt();
            *l.get_mut(j, j) = Complex::with_val(prec, (&djj, 0));
            conj_row.clear();
            conj_row.extend((0..j).map(|k| l.get(j, k).clone().conj()));
            for i in j + 1..n {
                sum.assign(a.get(i, j));
                for (k, c) in conj_row.iter().enumerate() {
                    tmp.assign(l.get(i, k) * c);
                    sum -= &tmp;
                }
                *l.get_mut(i, j) = Complex::with_val(prec, &sum / &djj);
            }
        }
        let lh = l.adjoint();
        Some(Self { l, lh })
    }

    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn prec(&self) -> u32 {
        self.l.prec
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        let n = self.dim();
        let prec = self.prec();
        let mut y: Vec<Complex> = Vec::with_capacity(n);
        let mut tmp = Complex::new(prec);
        for i in 0..n {
            let mut s = Complex::with_val(prec, &b[i]);
            for (k, yk) in y.iter().enumerate() {
                tmp.assign(self.l.get(i, k) * yk);
                s -= &tmp;
            }
            s /= self.l.get(i, i);
            y.push(s);
        }
        for i in (0..n).rev() {
            let mut s = y[i].clone();
            for k in i + 1..n {
                tmp.assign(self.lh.get(i, k) * &y[k]);
                s -= &tmp;
            }
            s /= self.l.get(i, i);
            y[i] = s;
        }
        y
    }

    /// `A⁻¹ = L⁻ᴴ L⁻¹`.
    pub fn inverse(&self) -> MpMatrix {
        let n = self.dim();
        let prec = self.prec();
        // Columns of L⁻¹ by forward substitution; lower triangular.
        let mut linv = MpMatrix::zeros(n, n, prec);
        let mut tmp = Complex::new(prec);
        for j in 0..n {
            *linv.get_mut(j, j) = Complex::with_val(prec, 1u32) / self.l.get(j, j);
            for i in j + 1..n {
                let mut s = Complex::new(prec);
                for k in j..i {
                    tmp.assign(self.l.get(i, k) * linv.get(k, j));
                    s -= &tmp;
                }
                s /= self.l.get(i, i);
                *linv.get_mut(i, j) = s;
            }
        }
        let linv_conj = MpMatrix::from_fn(n, n, prec, |i, j| linv.get(i, j).clone().conj());
        MpMatrix::hermitian_from_fn(n, prec, |i, j| {
            let mut s = Complex::new(prec);
            let mut t = Complex::new(prec);
            for k in j.max(i)..n {
                t.assign(linv_conj.get(k, i) * linv.get(k, j));
                s += &t;
            }
            s
        })
    }
}

/// Factored Hermitian system with its inverse and measured conditioning.
#[derive(Clone, Debug)]
pub struct HermitianSystem {
    pub matrix: MpMatrix,
    pub factor: Cholesky,
    pub inverse: MpMatrix,
    /// `λ_max(A) · λ_max(A⁻¹)`.
    pub cond: f64,
    /// Precision actually used, in bits.
    pub prec: u32,
}

impl HermitianSystem {
    pub fn solve(&self, b: &[Complex]) -> Vec<Complex> {
        self.factor.solve(b)
    }

    /// Smallest eigenvalue of `A`, as `1 / λ_max(A⁻¹)`.
    pub fn lambda_min(&self) -> f64 {
        1.0 / dense::hermitian_eigen(&self.inverse.to_c64()).0.max()
    }
}

/// Why an adaptive factorization gave up.
#[derive(Clone, Debug)]
pub struct Breakdown {
    /// Last condition estimate (infinite if factorization never succeeded).
    pub cond: f64,
    pub prec: u32,
}

/// Factors the Hermitian matrix produced by `build(prec)`, raising the
/// precision until `log2(cond · dim) + GUARD_BITS` bits fit.
pub fn factor_adaptive(
    build: impl Fn(u32) -> MpMatrix,
) -> Result<HermitianSystem, Breakdown> {
    let mut prec = START_PREC;
    let mut cond = f64::INFINITY;
    loop {
        let matrix = build(prec);
        let dim = matrix.rows().max(1);
        let next = match Cholesky::factor(&matrix) {
            Some(factor) => {
                let inverse = factor.inverse();
                cond = estimate_cond(&matrix, &inverse);
                let needed = bits_needed(cond, dim);
                if cond.is_finite() && needed <= prec {
                    return Ok(HermitianSystem {
                        matrix,
                        factor,
                        inverse,
                        cond,
                        prec,
                    });
                }
                if cond.is_finite() {
                    round_up(needed + GUARD_BITS).max(prec + 64)
                } else {
                    prec * 2
                }
            }
            None => prec * 2,
        };
        if next > MAX_PREC {
            return Err(Breakdown { cond, prec });
        }
        log::debug!("raising working precision {prec} -> {next} bits (cond ≈ {cond:e})");
        prec = next;
    }
}

fn estimate_cond(a: &MpMatrix, inv: &MpMatrix) -> f64 {
    let top = dense::hermitian_eigen(&a.to_c64()).0.max();
    let inv_top = dense::hermitian_eigen(&inv.to_c64()).0.max();
    let c = top * inv_top;
    if c.is_finite() && c > 0.0 {
        c.max(1.0)
    } else {
        f64::INFINITY
    }
}

fn bits_needed(cond: f64, dim: usize) -> u32 {
    if !cond.is_finite() {
        return u32::MAX;
    }
    (cond.log2() + (dim as f64).log2()).ceil().max(0.0) as u32 + GUARD_BITS
}

fn round_up(bits: u32) -> u32 {
    bits.div_ceil(64) * 64
}

/// Gaussian elimination with partial pivoting for small general systems.
pub fn solve_general(a: &MpMatrix, b: &[Complex]) -> Option<Vec<Complex>> {
    let n = a.rows;
    assert_eq!(n, a.cols);
    let prec = a.prec;
    let mut m = a.clone();
    let mut x: Vec<Complex> = b.iter().map(|z| Complex::with_val(prec, z)).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            to_c64(m.get(i, col))
                .norm()
                .total_cmp(&to_c64(m.get(j, col)).norm())
        })?;
        if m.get(pivot, col).is_zero() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                m.data.swap(pivot * n + j, col * n + j);
            }
            x.swap(pivot, col);
        }
        for i in col + 1..n {
            let f = Complex::with_val(prec, m.get(i, col) / m.get(col, col));
            for j in col..n {
                let t = Complex::with_val(prec, &f * m.get(col, j));
                *m.get_mut(i, j) -= t;
            }
            let t = Complex::with_val(prec, &f * &x[col]);
            x[i] -= t;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i].clone();
        for j in i + 1..n {
            s -= m.get(i, j) * &x[j];
        }
        s /= m.get(i, i);
        x[i] = s;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hilbert(n: usize, prec: u32) -> MpMatrix {
        MpMatrix::hermitian_from_fn(n, prec, |i, j| {
            Complex::with_val(prec, 1) / Complex::with_val(prec, (i + j + 1) as u32)
        })
    }

    #[test]
    fn cholesky_solves_ill_conditioned_hilbert() {
        // cond(H_20) ≈ 1e28
        let sys = factor_adaptive(|p| hilbert(20, p)).unwrap();
        assert!(sys.cond > 1e26 && sys.cond < 1e31, "{}", sys.cond);
        let ones: Vec<Complex> = (0..20).map(|_| Complex::with_val(sys.prec, 1)).collect();
        let b = sys.matrix.mul_vec(&ones);
        let x = sys.solve(&b);
        for xi in &x {
            assert!((to_c64(xi) - C64::new(1.0, 0.0)).norm() < 1e-20);
        }
        let id = sys.matrix.mul(&sys.inverse);
        for i in 0..20 {
            for j in 0..20 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((to_c64(id.get(i, j)) - C64::new(e, 0.0)).norm() < 1e-20);
            }
        }
    }

    #[test]
    fn precision_escalates_for_very_ill_conditioned() {
        // cond(H_40) ≈ 1e58 needs more than the starting precision
        let sys = factor_adaptive(|p| hilbert(40, p)).unwrap();
        assert!(sys.prec > START_PREC);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let m = MpMatrix::hermitian_from_fn(2, 128, |i, j| {
            Complex::with_val(128, if i == j { 1.0 } else { 2.0 })
        });
        assert!(Cholesky::factor(&m).is_none());
        assert!(factor_adaptive(|_| m.clone()).is_err());
    }

    #[test]
    fn exp_integral_matches_series() {
        let z = exp_integral(128, 3.0, 1.0, 0.5);
        let expect = (C64::new(0.0, 1.0).exp() - 1.0) / C64::new(0.0, 2.0);
        assert!((to_c64(&z) - expect).norm() < 1e-15);
        let z = exp_integral(128, 1e-12, 0.0, 1.0);
        assert!((to_c64(&z) - C64::new(1.0, 0.5e-12)).norm() < 1e-20);
        let d = damped_exp_integral(128, 1.0, 2.0, 2.0, 1.0);
        assert!((to_c64(&d).re - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn general_solve_with_pivoting() {
        let prec = 128;
        let a = MpMatrix::from_fn(3, 3, prec, |i, j| {
            let v = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]][i][j];
            Complex::with_val(prec, (v, 0.5 * (i as f64 - j as f64)))
        });
        let b: Vec<Complex> = (0..3).map(|i| Complex::with_val(prec, (i + 1) as u32)).collect();
        let x = solve_general(&a, &b).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((to_c64(ri) - to_c64(bi)).norm() < 1e-30);
        }
    }
}
