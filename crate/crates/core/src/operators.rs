//! The localizer `g`, the input operator `G h = g·(h − ∫ g h)`, its matrix
//! `m_{j,k}` in the ψ basis, and the free group `U(t)`.
//!
//! All matrices act on ψ-coefficients ordered `k = −n..=n` (see
//! [`dense::slot`]). In that basis `m_{j,k}` is the `k`-th coefficient of
//! `G ψ_j`, so the matrix of `G` is `mᵀ`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::{self, slot};
use crate::error::{Error, Result};
use crate::mp::MpMatrix;
use crate::quadrature::{self, GaussLegendre};
use crate::spectral::TorusFunction;
use crate::spectrum::{eigenvalue, Spectrum};
use crate::C64;

/// Default raised-cosine width.
pub const DEFAULT_WIDTH: f64 = PI / 2.0;
/// Default raised-cosine center.
pub const DEFAULT_CENTER: f64 = PI;

/// Shape of the localizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BumpKind {
    /// `g = 1/(2π)` on the whole torus.
    Uniform,
    /// `g(x) = (2/w) cos²(π(x − x₀)/w)` for `|x − x₀| < w/2`.
    RaisedCosine { center: f64, width: f64 },
    /// `g(x) = c·exp(−1/(1 − u²))`, `u = 2(x − x₀)/w`.
    SmoothExpBump { center: f64, width: f64 },
    /// Caller-supplied `ĝ(k)` as `[k, re, im]`; unlisted modes are zero.
    Explicit { coeffs: Vec<(i64, f64, f64)> },
}

impl Default for BumpKind {
    fn default() -> Self {
        BumpKind::RaisedCosine {
            center: DEFAULT_CENTER,
            width: DEFAULT_WIDTH,
        }
    }
}

/// The localizer with its Fourier coefficients `ĝ(k)`, `|k| ≤ max_mode`.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    kind: BumpKind,
    max_mode: usize,
    coeffs: Vec<C64>,
    tail_l1: f64,
    smooth_scale: f64,
}

impl BumpProfile {
    pub fn new(kind: BumpKind, max_mode: usize) -> Result<Self> {
        let mut profile = Self {
            kind,
            max_mode,
            coeffs: Vec::new(),
            tail_l1: 0.0,
            smooth_scale: 1.0,
        };
        match &profile.kind {
            BumpKind::Uniform => {}
            BumpKind::RaisedCosine { center, width } | BumpKind::SmoothExpBump { center, width } => {
                if !center.is_finite() {
                    return Err(Error::validation("bump.center", "must be finite"));
                }
                if !(*width > 0.0 && *width <= 2.0 * PI) {
                    return Err(Error::validation("bump.width", "must lie in (0, 2π]"));
                }
            }
            BumpKind::Explicit { coeffs } => validate_explicit(coeffs)?,
        }
        if let BumpKind::SmoothExpBump { width, .. } = profile.kind {
            let half = width / 2.0;
            let mass = smooth_rule().integrate_real(-half, half, SMOOTH_PANELS, |u| {
                smooth_shape(u / half)
            });
            profile.smooth_scale = 1.0 / mass;
        }
        let m = max_mode as i64;
        profile.coeffs = (-m..=m).map(|k| profile.compute_coeff(k)).collect();
        let tail_end = (8 * max_mode + 256) as i64;
        profile.tail_l1 = match profile.kind {
            BumpKind::Uniform => 0.0,
            BumpKind::Explicit { ref coeffs } => coeffs
                .iter()
                .filter(|c| c.0.unsigned_abs() as usize > max_mode)
                .map(|c| C64::new(c.1, c.2).norm())
                .sum(),
            _ => (m + 1..=tail_end)
                .map(|k| 2.0 * profile.compute_coeff(k).norm())
                .sum(),
        };
        if profile.kind != BumpKind::Uniform {
            let samples = profile.synthesize_samples(4096);
            let peak = samples.iter().cloned().fold(0.0, f64::max);
            let low = samples.iter().cloned().fold(f64::INFINITY, f64::min);
            if low < -1e-12 * peak.max(1.0) {
                return Err(Error::validation("bump", format!("g takes negative value {low:e}")));
            }
        }
        Ok(profile)
    }

    /// The default raised-cosine bump (`w = π/2`, `x₀ = π`).
    pub fn default_bump(max_mode: usize) -> Self {
        Self::new(BumpKind::default(), max_mode).expect("default bump is valid")
    }

    pub fn uniform(max_mode: usize) -> Self {
        Self::new(BumpKind::Uniform, max_mode).expect("uniform bump is valid")
    }

    pub fn kind(&self) -> &BumpKind {
        &self.kind
    }

    pub fn max_mode(&self) -> usize {
        self.max_mode
    }

    /// `ĝ(k)`; zero beyond the tabulated band.
    pub fn coeff(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.max_mode {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.max_mode as i64) as usize]
        }
    }

    /// `Σ_{|k| > max_mode} |ĝ(k)|` (estimated over a finite range for
    /// non-band-limited profiles).
    pub fn tail_l1(&self) -> f64 {
        self.tail_l1
    }

    /// `∫₀^{2π} g dx = 2π ĝ(0)`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.coeff(0).re
    }

    /// Pointwise value `g(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            BumpKind::Uniform => 1.0 / (2.0 * PI),
            BumpKind::RaisedCosine { center, width } => {
                let u = periodic_offset(x, *center);
                if u.abs() >= width / 2.0 {
                    0.0
                } else {
                    let c = (PI * u / width).cos();
                    2.0 / width * c * c
                }
            }
            BumpKind::SmoothExpBump { center, width } => {
                let u = periodic_offset(x, *center) / (width / 2.0);
                self.smooth_scale * smooth_shape(u)
            }
            BumpKind::Explicit { coeffs } => coeffs
                .iter()
                .map(|&(k, re, im)| C64::new(re, im) * C64::new(0.0, k as f64 * x).exp())
                .sum::<C64>()
                .re,
        }
    }

    /// Interval carrying the support (may extend past `2π`; read periodically).
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            BumpKind::RaisedCosine { center, width } | BumpKind::SmoothExpBump { center, width } => {
                (center - width / 2.0, center + width / 2.0)
            }
            _ => (0.0, 2.0 * PI),
        }
    }

    /// `∫ f(x) dx` over the support, by composite Gauss–Legendre.
    pub fn integrate_over_support(&self, f: impl Fn(f64) -> C64) -> C64 {
        let (a, b) = self.support();
        let panels = match self.kind {
            BumpKind::SmoothExpBump { .. } => SMOOTH_PANELS,
            _ => 64,
        };
        quadrature::default_rule().integrate(a, b, panels, f)
    }

    fn synthesize_samples(&self, m: usize) -> Vec<f64> {
        (0..m).map(|j| self.eval(2.0 * PI * j as f64 / m as f64)).collect()
    }

    fn compute_coeff(&self, k: i64) -> C64 {
        match &self.kind {
            BumpKind::Uniform => {
                if k == 0 {
                    C64::new(1.0 / (2.0 * PI), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            BumpKind::RaisedCosine { center, width } => raised_cosine_coeff(k, *center, *width),
            BumpKind::SmoothExpBump { center, .. } => {
                let (a, b) = self.support();
                let kf = k as f64;
                let c = *center;
                smooth_rule().integrate(a, b, SMOOTH_PANELS, |x| {
                    C64::new(0.0, -kf * (x - c)).exp() * self.eval(x)
                }) * C64::new(0.0, -kf * c).exp()
                    / (2.0 * PI)
            }
            BumpKind::Explicit { coeffs } => coeffs
                .iter()
                .filter(|c| c.0 == k)
                .map(|&(_, re, im)| C64::new(re, im))
                .sum(),
        }
    }
}

const SMOOTH_PANELS: usize = 256;

fn smooth_rule() -> GaussLegendre {
    quadrature::default_rule()
}

fn smooth_shape(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `x − x₀` reduced to `(−π, π]`.
fn periodic_offset(x: f64, x0: f64) -> f64 {
    let d = (x - x0).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0 + x.powi(4) / 120.0
    } else {
        x.sin() / x
    }
}

/// Closed form of `(1/2π) ∫ g e^{−ikx} dx` for the raised cosine.
fn raised_cosine_coeff(k: i64, center: f64, width: f64) -> C64 {
    let a = width / 2.0;
    let omega = 2.0 * PI / width;
    let kf = k as f64;
    // ∫_{−a}^{a} ½(1 + cos ωu) e^{−iku} du, written with sinc so k = ±ω is regular
    let constant = 2.0 * a * sinc(kf * a);
    let cosine = a * sinc((omega - kf) * a) + a * sinc((omega + kf) * a);
    let integral = 0.5 * (constant + cosine);
    C64::new(0.0, -kf * center).exp() * (2.0 / width) * integral / (2.0 * PI)
}

fn validate_explicit(coeffs: &[(i64, f64, f64)]) -> Result<()> {
    let get = |k: i64| -> C64 {
        coeffs
            .iter()
            .filter(|c| c.0 == k)
            .map(|&(_, re, im)| C64::new(re, im))
            .sum()
    };
    if coeffs.iter().any(|c| !c.1.is_finite() || !c.2.is_finite()) {
        return Err(Error::validation("bump.coeffs", "non-finite coefficient"));
    }
    let g0 = get(0);
    if (g0 - C64::new(1.0 / (2.0 * PI), 0.0)).norm() > 1e-12 {
        return Err(Error::validation(
            "bump.coeffs",
            format!("ĝ(0) must equal 1/(2π) so that ∫g = 1; got {g0}"),
        ));
    }
    for &(k, _, _) in coeffs {
        if (get(-k) - get(k).conj()).norm() > 1e-12 {
            return Err(Error::validation(
                "bump.coeffs",
                format!("g must be real: ĝ({}) ≠ conj ĝ({k})", -k),
            ));
        }
    }
    Ok(())
}

/// `m_{j,k} = ĝ(k−j) − 2π ĝ(−j) ĝ(k)` for `|j|, |k| ≤ n`.
#[derive(Clone, Debug)]
pub struct MMatrix {
    n: usize,
    entries: DMatrix<C64>,
    beta: f64,
    delta_k: Vec<f64>,
}

impl MMatrix {
    /// Needs `ĝ` up to mode `2n`.
    pub fn new(g: &BumpProfile, n: usize) -> Result<Self> {
        if g.max_mode() < 2 * n {
            return Err(Error::Configuration(format!(
                "bump coefficients tabulated to {} but the m-matrix at order {n} needs {}",
                g.max_mode(),
                2 * n
            )));
        }
        let dim = 2 * n + 1;
        let entries = DMatrix::from_fn(dim, dim, |r, c| {
            let (j, k) = (dense::mode(r, n), dense::mode(c, n));
            g.coeff(k - j) - 2.0 * PI * g.coeff(-j) * g.coeff(k)
        });
        let ni = n as i64;
        let beta = (-ni..=ni)
            .filter(|&k| k != 0)
            .map(|k| entries[(slot(k, n), slot(k, n))].re)
            .fold(f64::INFINITY, f64::min);
        if !(beta > 0.0) {
            return Err(Error::Configuration(format!(
                "min_k m_kk = {beta:e} ≤ 0: the bump does not satisfy the diagonal bound at order {n}"
            )));
        }
        let delta_k = (-ni..=ni).map(|k| g_psi_norm_sqr(g, k)).collect();
        Ok(Self {
            n,
            entries,
            beta,
            delta_k,
        })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn entry(&self, j: i64, k: i64) -> C64 {
        self.entries[(slot(j, self.n), slot(k, self.n))]
    }

    /// Rows `j`, columns `k`.
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// `min_{k≠0} m_{k,k}`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `δ_k = ‖G ψ_k‖²_{L²}` (exact, by quadrature on the support).
    pub fn delta_k(&self, k: i64) -> f64 {
        self.delta_k[slot(k, self.n)]
    }

    /// `min_{0<|k|≤n} δ_k`.
    pub fn delta(&self) -> f64 {
        let n = self.n as i64;
        (-n..=n)
            .filter(|&k| k != 0)
            .map(|k| self.delta_k(k))
            .fold(f64::INFINITY, f64::min)
    }

    /// `max_j |m_{j,0}|`.
    pub fn column_zero_max(&self) -> f64 {
        self.entries.column(self.n).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        dense::hermitian_defect(&self.entries)
    }

    /// `m_{j,k} = ⟨G ψ_j, ψ_k⟩` by direct quadrature of `G ψ_j` on the support.
    pub fn quadrature_entry(g: &BumpProfile, j: i64, k: i64) -> C64 {
        let psi = |m: i64, x: f64| C64::new(0.0, m as f64 * x).exp() / (2.0 * PI).sqrt();
        let s_j = g.integrate_over_support(|x| psi(j, x) * g.eval(x));
        g.integrate_over_support(|x| g.eval(x) * (psi(j, x) - s_j) * psi(k, x).conj())
    }

    /// Largest deviation between closed form and quadrature on the given pairs.
    pub fn quadrature_defect(&self, g: &BumpProfile, pairs: &[(i64, i64)]) -> f64 {
        pairs
            .iter()
            .map(|&(j, k)| (self.entry(j, k) - Self::quadrature_entry(g, j, k)).norm())
            .fold(0.0, f64::max)
    }
}

/// `‖G ψ_k‖² = ∫ g² |ψ_k − ∫ g ψ_k|² dx`.
fn g_psi_norm_sqr(g: &BumpProfile, k: i64) -> f64 {
    let psi = |x: f64| C64::new(0.0, k as f64 * x).exp() / (2.0 * PI).sqrt();
    let s = g.integrate_over_support(|x| psi(x) * g.eval(x));
    g.integrate_over_support(|x| {
        let v = g.eval(x);
        C64::new(v * v * (psi(x) - s).norm_sqr(), 0.0)
    })
    .re
}

/// `G` at a fixed truncation, with `GG*` in double and extended precision.
#[derive(Debug)]
pub struct ControlOperator {
    g: BumpProfile,
    m: MMatrix,
    /// Matrix of `G` on ψ-coefficients: `(G)_{k,j} = m_{j,k}`; the mode-0 row is
    /// exactly zero because `G` removes the mean.
    matrix: DMatrix<C64>,
    gg: DMatrix<C64>,
    gg_mp: Mutex<HashMap<u32, Arc<MpMatrix>>>,
}

impl ControlOperator {
    pub fn new(g: BumpProfile, n: usize) -> Result<Self> {
        let m = MMatrix::new(&g, n)?;
        let mut matrix = m.entries().transpose();
        matrix.row_mut(n).fill(C64::new(0.0, 0.0));
        matrix.column_mut(n).fill(C64::new(0.0, 0.0));
        let gg = &matrix * matrix.adjoint();
        Ok(Self {
            g,
            m,
            matrix,
            gg,
            gg_mp: Mutex::new(HashMap::new()),
        })
    }

    pub fn order(&self) -> usize {
        self.m.order()
    }

    pub fn bump(&self) -> &BumpProfile {
        &self.g
    }

    pub fn m_matrix(&self) -> &MMatrix {
        &self.m
    }

    /// Matrix of `G` on ψ-coefficients.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Matrix of `GG* = G²` on ψ-coefficients.
    pub fn gg_star(&self) -> &DMatrix<C64> {
        &self.gg
    }

    /// `GG*` formed exactly from the `f64` entries of `G`, at precision `prec`.
    pub fn gg_star_mp(&self, prec: u32) -> Arc<MpMatrix> {
        if let Some(m) = self.gg_mp.lock().expect("cache lock").get(&prec) {
            return Arc::clone(m);
        }
        let g = MpMatrix::from_c64(&self.matrix, prec);
        let gg = Arc::new(g.mul_adjoint(&g));
        self.gg_mp
            .lock()
            .expect("cache lock")
            .insert(prec, Arc::clone(&gg));
        gg
    }

    /// `G h` truncated to order `n`, on ψ-coefficients.
    pub fn apply_psi(&self, h: &[C64]) -> Vec<C64> {
        let v = nalgebra::DVector::from_column_slice(h);
        (&self.matrix * v).iter().cloned().collect()
    }

    /// `‖G u‖²_{L²}` for ψ-coefficients `u`.
    pub fn image_norm_sqr(&self, u: &[C64]) -> f64 {
        self.apply_psi(u).iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Result of [`apply_g`].
#[derive(Clone, Debug)]
pub struct GImage {
    pub image: TorusFunction,
    /// L² norm of the product's modes beyond the output order (within the
    /// tabulated band of `ĝ`).
    pub spillover: f64,
}

/// `G h = g·(h − ∫ g h)` truncated to order `n_out`.
pub fn apply_g(g: &BumpProfile, h: &TorusFunction, n_out: usize) -> Result<GImage> {
    let nh = h.order() as i64;
    let reach = (n_out as i64).max(nh + g.max_mode() as i64);
    let integral: C64 = h
        .modes()
        .map(|(j, c)| 2.0 * PI * g.coeff(-j) * c)
        .sum();
    let coeff = |k: i64| -> C64 {
        let product: C64 = h.modes().map(|(j, c)| g.coeff(k - j) * c).sum();
        product - integral * g.coeff(k)
    };
    let mut coeffs: Vec<C64> = (-(n_out as i64)..=(n_out as i64)).map(coeff).collect();
    // ∫g = 1 makes the mean vanish; remove the rounding residue.
    coeffs[n_out] = C64::new(0.0, 0.0);
    let spill: f64 = (n_out as i64 + 1..=reach)
        .map(|k| coeff(k).norm_sqr() + coeff(-k).norm_sqr())
        .sum();
    let image = TorusFunction::from_coeffs_auto(n_out, coeffs, h.is_real())?;
    Ok(GImage {
        image,
        spillover: (2.0 * PI * spill).sqrt(),
    })
}

/// `e^{−iλ_k t}`.
pub fn propagator_multiplier(k: i64, t: f64, alpha: f64, mu: f64) -> C64 {
    phase(-eigenvalue(k, alpha, mu) * t)
}

/// `e^{iθ}`.
pub fn phase(theta: f64) -> C64 {
    let (s, c) = theta.sin_cos();
    C64::new(c, s)
}

/// `U(t) u₀`: mode `k` is multiplied by `e^{−iλ_k t}`.
pub fn evolve_free(u0: &TorusFunction, t: f64, alpha: f64, mu: f64) -> TorusFunction {
    u0.map_modes(true, |k| propagator_multiplier(k, t, alpha, mu))
}

/// `U(t) u₀` with the (cluster-snapped) eigenvalues of `spec`.
pub fn evolve_free_with(u0: &TorusFunction, t: f64, spec: &Spectrum) -> TorusFunction {
    let n = spec.order() as i64;
    u0.map_modes(true, |k| {
        if k.abs() <= n {
            phase(-spec.lambda(k) * t)
        } else {
            phase(-eigenvalue(k, spec.alpha(), spec.mu()) * t)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn raised_cosine_is_normalized_and_matches_quadrature() {
        let g = BumpProfile::default_bump(64);
        assert!((g.coeff(0).re - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((g.mass() - 1.0).abs() < 1e-14);
        for k in [-9, -4, -1, 1, 3, 4, 17] {
            let q = g.integrate_over_support(|x| C64::new(0.0, -(k as f64) * x).exp() * g.eval(x))
                / (2.0 * PI);
            assert!((q - g.coeff(k)).norm() < 1e-14, "k={k}");
            assert!((g.coeff(-k) - g.coeff(k).conj()).norm() < 1e-16);
        }
        assert!(g.tail_l1() > 0.0 && g.tail_l1() < 1e-3);
    }

    #[test]
    fn smooth_bump_is_normalized() {
        let g = BumpProfile::new(BumpKind::SmoothExpBump { center: 1.0, width: 2.0 }, 16).unwrap();
        assert!((g.mass() - 1.0).abs() < 1e-12);
        assert!(g.eval(1.0) > 0.0 && g.eval(2.5) == 0.0);
    }

    #[test]
    fn explicit_bump_validation() {
        let ok = BumpKind::Explicit {
            coeffs: vec![(0, 1.0 / (2.0 * PI), 0.0), (1, 0.05, 0.0), (-1, 0.05, 0.0)],
        };
        assert!(BumpProfile::new(ok, 4).is_ok());
        let bad_mass = BumpKind::Explicit {
            coeffs: vec![(0, 0.2, 0.0)],
        };
        assert!(BumpProfile::new(bad_mass, 4).is_err());
        let negative = BumpKind::Explicit {
            coeffs: vec![(0, 1.0 / (2.0 * PI), 0.0), (1, 0.5, 0.0), (-1, 0.5, 0.0)],
        };
        assert!(BumpProfile::new(negative, 4).is_err());
    }

    #[test]
    fn uniform_m_matrix_is_scaled_identity() {
        let g = BumpProfile::uniform(16);
        let m = MMatrix::new(&g, 8).unwrap();
        for j in -8..=8i64 {
            for k in -8..=8i64 {
                let expect = if j == k && j != 0 { 1.0 / (2.0 * PI) } else { 0.0 };
                assert!((m.entry(j, k) - c(expect, 0.0)).norm() < 1e-16);
            }
        }
        assert!((m.delta() - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn m_matrix_structure_for_raised_cosine() {
        let g = BumpProfile::default_bump(32);
        let m = MMatrix::new(&g, 16).unwrap();
        assert!(m.column_zero_max() < 1e-12);
        assert!(m.hermitian_defect() < 1e-16);
        let g1 = g.coeff(1);
        let expect = 1.0 / (2.0 * PI) - 2.0 * PI * g1.norm_sqr();
        assert!((m.entry(1, 1).re - expect).abs() < 1e-15 && expect > 0.0);
        assert!(m.beta() > 0.0 && m.delta() > 0.0);
        let pairs = [(0, 0), (1, 1), (-3, 5), (7, -2), (16, -16), (0, 9)];
        assert!(m.quadrature_defect(&g, &pairs) < 1e-12);
    }

    #[test]
    fn apply_g_examples() {
        let g = BumpProfile::uniform(8);
        let image = apply_g(&g, &TorusFunction::psi(2, 4), 4).unwrap().image;
        let expect = TorusFunction::psi(2, 4).scaled(1.0 / (2.0 * PI));
        for (a, b) in image.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-16);
        }
        let zero = apply_g(&g, &TorusFunction::psi(0, 4), 4).unwrap().image;
        assert!(zero.coeffs().iter().all(|z| z.norm() < 1e-16));

        let g = BumpProfile::default_bump(16);
        let constant = apply_g(&g, &TorusFunction::constant(3.0, 4), 4).unwrap().image;
        assert!(constant.coeffs().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn apply_g_matches_matrix() {
        let g = BumpProfile::default_bump(16);
        let op = ControlOperator::new(g.clone(), 8).unwrap();
        let h = TorusFunction::from_modes(8, &[(1, c(0.3, -0.2)), (-1, c(0.3, 0.2)), (5, c(0.0, 1.0)), (-5, c(0.0, -1.0))], true).unwrap();
        let direct = apply_g(&g, &h, 8).unwrap();
        let via_matrix = op.apply_psi(&h.psi_coeffs());
        for (a, b) in direct.image.psi_coeffs().iter().zip(&via_matrix) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!(direct.spillover > 0.0);
        assert!(direct.image.is_real());
    }

    #[test]
    fn propagator_examples() {
        assert_eq!(propagator_multiplier(0, 3.0, 1.0, 0.2), c(1.0, 0.0));
        assert_eq!(propagator_multiplier(5, 0.0, 1.0, 0.2), c(1.0, 0.0));
        let z = propagator_multiplier(2, PI / 4.0, 1.0, 0.0);
        assert!((z - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gg_star_uniform_and_psd() {
        let op = ControlOperator::new(BumpProfile::uniform(16), 8).unwrap();
        for k in -8..=8i64 {
            let expect = if k == 0 { 0.0 } else { 1.0 / (4.0 * PI * PI) };
            assert!((op.gg_star()[(slot(k, 8), slot(k, 8))].re - expect).abs() < 1e-16);
        }
        let op = ControlOperator::new(BumpProfile::default_bump(32), 16).unwrap();
        let (vals, _) = dense::hermitian_eigen(op.gg_star());
        assert!(vals[0] >= -1e-12);
        let hp = op.gg_star_mp(128).to_c64();
        assert!((hp - op.gg_star()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn hp_conversion_roundtrip() {
        let z = c(0.1, -3.5);
        assert_eq!(mp::to_c64(&mp::from_c64(200, z)), z);
    }
}
