//! Truncated Fourier representation of periodic functions on `[0, 2π)`.
//!
//! A [`TorusFunction`] of order `n` stores the coefficients `f̂(k)` of
//!
//! ```text
//! f(x) = Σ_{|k| ≤ n} f̂(k) e^{ikx},    f̂(k) = (1/2π) ∫ f(x) e^{−ikx} dx,
//! ```
//!
//! so `f̂(0)` is the mean `[f]`. The orthonormal basis `ψ_k = e^{ikx}/√(2π)`
//! carries coefficients `√(2π)·f̂(k)`; matrices elsewhere in the crate act on
//! those ψ-coefficients.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Hermitian defect above which a function declared real is rejected.
pub const REAL_DEFECT_TOLERANCE: f64 = 1e-10;

/// Truncated Fourier series with modes `−n..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusFunction {
    n: usize,
    coeffs: Vec<C64>,
    real: bool,
}

/// One `[k, re, im]` entry of a serialized coefficient list.
pub type CoefficientTriple = (i64, f64, f64);

impl TorusFunction {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![C64::new(0.0, 0.0); 2 * n + 1],
            real: true,
        }
    }

    /// Builds a function from `2n+1` coefficients ordered `k = −n..=n`.
    ///
    /// With `real = true` the coefficients must be Hermitian symmetric up to
    /// [`REAL_DEFECT_TOLERANCE`] (relative to the largest coefficient); the
    /// stored coefficients are then symmetrized exactly.
    pub fn from_coeffs(n: usize, coeffs: Vec<C64>, real: bool) -> Result<Self> {
        if coeffs.len() != 2 * n + 1 {
            return Err(Error::validation(
                "coeffs",
                format!("expected {} coefficients, got {}", 2 * n + 1, coeffs.len()),
            ));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::validation("coeffs", "non-finite coefficient"));
        }
        let mut f = Self { n, coeffs, real };
        if real {
            let defect = f.hermitian_defect();
            if defect > REAL_DEFECT_TOLERANCE {
                return Err(Error::NotReal { defect });
            }
            f.symmetrize_in_place();
        }
        Ok(f)
    }

    /// Like [`from_coeffs`](Self::from_coeffs), but declares the result real
    /// only when `want_real` and the Hermitian defect is within tolerance.
    pub fn from_coeffs_auto(n: usize, coeffs: Vec<C64>, want_real: bool) -> Result<Self> {
        let f = Self::from_coeffs(n, coeffs, false)?;
        if want_real && f.hermitian_defect() <= REAL_DEFECT_TOLERANCE {
            f.into_real()
        } else {
            Ok(f)
        }
    }

    /// Builds a function from `(k, f̂(k))` pairs; unspecified modes are zero.
    pub fn from_modes(n: usize, modes: &[(i64, C64)], real: bool) -> Result<Self> {
        let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for &(k, c) in modes {
            if k.unsigned_abs() as usize > n {
                return Err(Error::validation(
                    "coeffs",
                    format!("mode {k} exceeds truncation order {n}"),
                ));
            }
            coeffs[(k + n as i64) as usize] += c;
        }
        Self::from_coeffs(n, coeffs, real)
    }

    /// Builds a function from coefficients in the orthonormal ψ basis.
    pub fn from_psi_coeffs(n: usize, psi: &[C64], real: bool) -> Result<Self> {
        let scale = 1.0 / (2.0 * PI).sqrt();
        Self::from_coeffs(n, psi.iter().map(|c| c * scale).collect(), real)
    }

    pub fn from_psi_coeffs_auto(n: usize, psi: &[C64], want_real: bool) -> Result<Self> {
        let scale = 1.0 / (2.0 * PI).sqrt();
        Self::from_coeffs_auto(n, psi.iter().map(|c| c * scale).collect(), want_real)
    }

    /// The basis element `ψ_k = e^{ikx}/√(2π)` at truncation `n`.
    pub fn psi(k: i64, n: usize) -> Self {
        let mut f = Self::zeros(n);
        f.coeffs[(k + n as i64) as usize] = C64::new(1.0 / (2.0 * PI).sqrt(), 0.0);
        f.real = k == 0;
        f
    }

    pub fn constant(value: f64, n: usize) -> Self {
        let mut f = Self::zeros(n);
        f.coeffs[n] = C64::new(value, 0.0);
        f
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Coefficients ordered `k = −n..=n`.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// `f̂(k)`, zero outside the stored band.
    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.n {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.n as i64) as usize]
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, C64)> + '_ {
        let n = self.n as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n, c))
    }

    /// Coefficients in the orthonormal ψ basis, ordered `k = −n..=n`.
    pub fn psi_coeffs(&self) -> Vec<C64> {
        let scale = (2.0 * PI).sqrt();
        self.coeffs.iter().map(|c| c * scale).collect()
    }

    /// `max_k |f̂(−k) − conj f̂(k)|`, relative to `max(1, max_k |f̂(k)|)`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(1.0_f64, f64::max);
        let n = self.n as i64;
        (0..=n)
            .map(|k| (self.coeff(-k) - self.coeff(k).conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    fn symmetrize_in_place(&mut self) {
        let n = self.n as i64;
        for k in 0..=n {
            let avg = (self.coeff(k) + self.coeff(-k).conj()) * 0.5;
            self.coeffs[(k + n) as usize] = avg;
            self.coeffs[(n - k) as usize] = avg.conj();
        }
    }

    /// Returns the same coefficients re-declared as real (checked).
    pub fn into_real(self) -> Result<Self> {
        Self::from_coeffs(self.n, self.coeffs, true)
    }

    /// `sqrt(2π Σ_k (1+k²)^s |f̂(k)|²)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        (2.0 * PI * self.sobolev_weighted_sum(s)).sqrt()
    }

    fn sobolev_weighted_sum(&self, s: f64) -> f64 {
        self.modes()
            .map(|(k, c)| sobolev_weight(k, s) * c.norm_sqr())
            .sum()
    }

    /// L² inner product `∫ f conj(g) dx = 2π Σ f̂(k) conj ĝ(k)`.
    pub fn inner(&self, other: &Self) -> C64 {
        let n = self.n.max(other.n) as i64;
        (-n..=n)
            .map(|k| self.coeff(k) * other.coeff(k).conj())
            .sum::<C64>()
            * (2.0 * PI)
    }

    /// Multiplier `−i·sgn(k)`; mode 0 is annihilated.
    pub fn hilbert_transform(&self) -> Self {
        let coeffs = self
            .modes()
            .map(|(k, c)| c * C64::new(0.0, -(k.signum() as f64)))
            .collect();
        Self {
            n: self.n,
            coeffs,
            real: self.real,
        }
    }

    /// `[f] = f̂(0)`.
    pub fn mean(&self) -> C64 {
        self.coeffs[self.n]
    }

    pub fn project_mean_zero(&self) -> Self {
        let mut f = self.clone();
        f.coeffs[self.n] = C64::new(0.0, 0.0);
        f
    }

    /// Re-truncates (or zero-pads) to order `n`.
    pub fn resized(&self, n: usize) -> Self {
        let mut f = Self::zeros(n);
        for k in -(n as i64)..=(n as i64) {
            f.coeffs[(k + n as i64) as usize] = self.coeff(k);
        }
        f.real = self.real;
        f
    }

    /// Coefficientwise map `f̂(k) ↦ m(k)·f̂(k)`; the real flag is kept only
    /// if the caller asserts the multiplier preserves it.
    pub fn map_modes(&self, keep_real: bool, m: impl Fn(i64) -> C64) -> Self {
        let coeffs = self.modes().map(|(k, c)| m(k) * c).collect();
        Self {
            n: self.n,
            coeffs,
            real: self.real && keep_real,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_modes(true, |_| C64::new(a, 0.0))
    }

    /// `self + other`, at the larger of the two truncations.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.n.max(other.n);
        let coeffs = (-(n as i64)..=(n as i64))
            .map(|k| self.coeff(k) + other.coeff(k))
            .collect();
        Self {
            n,
            coeffs,
            real: self.real && other.real,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Values `f(x_j)` on the uniform grid `x_j = 2πj/m`, `j = 0..m`.
    pub fn synthesize(&self, m: usize) -> Vec<C64> {
        let twiddle = Twiddles::new(m);
        (0..m)
            .map(|j| {
                self.modes()
                    .map(|(k, c)| c * twiddle.exp_i(k, j as i64))
                    .sum()
            })
            .collect()
    }

    /// Real parts of [`synthesize`](Self::synthesize), for real functions.
    pub fn synthesize_real(&self, m: usize) -> Vec<f64> {
        self.synthesize(m).into_iter().map(|z| z.re).collect()
    }

    /// Uniform-grid quadrature for `f̂(k)`, `|k| ≤ n`, from `m` samples.
    ///
    /// Exact for band-limited inputs when `m ≥ 2n+1`; fewer samples alias and
    /// are rejected.
    pub fn analyze(samples: &[C64], n: usize, real: bool) -> Result<Self> {
        let m = samples.len();
        if m < 2 * n + 1 {
            return Err(Error::Aliasing {
                samples: m,
                order: n,
                needed: 2 * n + 1,
            });
        }
        let twiddle = Twiddles::new(m);
        let coeffs = (-(n as i64)..=(n as i64))
            .map(|k| {
                samples
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v * twiddle.exp_i(-k, j as i64))
                    .sum::<C64>()
                    / m as f64
            })
            .collect();
        Self::from_coeffs(n, coeffs, real)
    }

    pub fn analyze_real(samples: &[f64], n: usize) -> Result<Self> {
        let z: Vec<C64> = samples.iter().map(|&v| C64::new(v, 0.0)).collect();
        Self::analyze(&z, n, true)
    }

    /// Coefficient list as `[k, re, im]` triples.
    pub fn to_triples(&self) -> Vec<CoefficientTriple> {
        self.modes().map(|(k, c)| (k, c.re, c.im)).collect()
    }

    /// Parses `[k, re, im]` triples; the order is `max |k|` unless `n` is given.
    pub fn from_triples(
        triples: &[CoefficientTriple],
        n: Option<usize>,
        real: bool,
    ) -> Result<Self> {
        let n = n.unwrap_or_else(|| {
            triples
                .iter()
                .map(|t| t.0.unsigned_abs() as usize)
                .max()
                .unwrap_or(0)
        });
        let modes: Vec<(i64, C64)> = triples
            .iter()
            .map(|&(k, re, im)| (k, C64::new(re, im)))
            .collect();
        Self::from_modes(n, &modes, real)
    }

    /// CSV with header `x,value` (real) or `x,re,im` (complex) on `m` points.
    pub fn samples_csv(&self, m: usize) -> String {
        let values = self.synthesize(m);
        let mut out = String::new();
        if self.real {
            out.push_str("x,value\n");
        } else {
            out.push_str("x,re,im\n");
        }
        for (j, v) in values.iter().enumerate() {
            let x = 2.0 * PI * j as f64 / m as f64;
            if self.real {
                let _ = writeln!(out, "{x:.17e},{:.17e}", v.re);
            } else {
                let _ = writeln!(out, "{x:.17e},{:.17e},{:.17e}", v.re, v.im);
            }
        }
        out
    }
}

/// Serialized form: `{"n": .., "real": .., "coeffs": [[k, re, im], ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusFunctionRecord {
    pub n: usize,
    pub real: bool,
    pub coeffs: Vec<CoefficientTriple>,
}

impl From<&TorusFunction> for TorusFunctionRecord {
    fn from(f: &TorusFunction) -> Self {
        Self {
            n: f.n,
            real: f.real,
            coeffs: f.to_triples(),
        }
    }
}

impl TryFrom<TorusFunctionRecord> for TorusFunction {
    type Error = Error;

    fn try_from(r: TorusFunctionRecord) -> Result<Self> {
        TorusFunction::from_triples(&r.coeffs, Some(r.n), r.real)
    }
}

/// `(1 + k²)^s`.
pub fn sobolev_weight(k: i64, s: f64) -> f64 {
    (1.0 + (k * k) as f64).powf(s)
}

/// Roots of unity `e^{2πi r/m}` tabulated once; the phase of `e^{ikx_j}` is
/// reduced modulo `m` before lookup so large `k·j` do not lose accuracy.
struct Twiddles {
    table: Vec<C64>,
}

impl Twiddles {
    fn new(m: usize) -> Self {
        let table = (0..m)
            .map(|r| C64::from_polar(1.0, 2.0 * PI * r as f64 / m as f64))
            .collect();
        Self { table }
    }

    fn exp_i(&self, k: i64, j: i64) -> C64 {
        let m = self.table.len() as i64;
        self.table[(k * j).rem_euclid(m) as usize]
    }
}
