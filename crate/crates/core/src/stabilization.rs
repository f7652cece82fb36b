//! Feedback laws on the truncated coefficient space.
//!
//! The free generator is `A = diag(−iλ_k)` on ψ-coefficients (so that
//! `U(t) = e^{tA}`). Two laws are provided:
//!
//! - damping, `K = GG*`;
//! - rapid decay, `K_λ = GG* L_λ⁻¹` with
//!   `L_λ = ∫₀ᵀ e^{−2λτ} U(−τ) GG* U(−τ)* dτ` on the mean-zero modes.
//!
//! For the second law, `L_λ` solves
//! `(A + λ)L_λ + L_λ(A + λ)* = GG* − e^{−2λT} U(−T)GG*U(−T)*`, which gives
//! `(A − K_λ + λ)L_λ + L_λ(A − K_λ + λ)* ≤ −GG*`; hence every closed-loop
//! eigenvalue has real part at most `−λ`, already at truncation.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rug::Complex;
use serde::Serialize;

use crate::dense::{self, slot};
use crate::error::{Error, Result};
use crate::moment::{mean_zero_modes, GramianSystem};
use crate::mp::{self, HermitianSystem, MpMatrix};
use crate::operators::ControlOperator;
use crate::quadrature;
use crate::spectral::TorusFunction;
use crate::spectrum::Spectrum;
use crate::C64;

/// Condition number of `L_λ` above which a warning is attached to the law.
pub const ILL_CONDITIONED: f64 = 1e12;

/// `e^{−2λτ}`-weighted Gramian on `[0, T]`, factored on the mean-zero modes.
#[derive(Clone, Debug)]
pub struct GramianWeighted {
    n: usize,
    lambda: f64,
    horizon: f64,
    system: HermitianSystem,
}

impl GramianWeighted {
    /// Entry `(k, l)` is `(GG*)_{k,l} ∫₀ᵀ e^{(−2λ + i(λ_k−λ_l))τ} dτ`.
    pub fn build(op: &ControlOperator, spec: &Spectrum, lambda: f64, horizon: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::validation("lambda", "decay rate must be positive and finite"));
        }
        Self::build_unchecked(op, spec, lambda, horizon)
    }

    /// Same as [`build`](Self::build) but also accepts `λ = 0`.
    pub fn build_unchecked(op: &ControlOperator, spec: &Spectrum, lambda: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::validation("T", "horizon must be positive and finite"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::validation("lambda", "decay rate must be nonnegative"));
        }
        let n = spec.order();
        let system = mp::factor_adaptive(|prec| weighted_gramian(op, spec, lambda, horizon, prec))
            .map_err(|b| {
                Error::Observability(format!(
                    "L_λ (λ = {lambda}, T = {horizon}) is not positive definite on the mean-zero modes \
                     at {} bits (cond ≈ {:e})",
                    b.prec, b.cond
                ))
            })?;
        log::debug!(
            "L_λ with λ = {lambda}, T = {horizon}: cond ≈ {:e}, {} bits",
            system.cond,
            system.prec
        );
        Ok(Self {
            n,
            lambda,
            horizon,
            system,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn cond(&self) -> f64 {
        self.system.cond
    }

    pub fn precision(&self) -> u32 {
        self.system.prec
    }

    /// Smallest eigenvalue on the mean-zero modes.
    pub fn lambda_min(&self) -> f64 {
        self.system.lambda_min()
    }

    /// `L_λ` on all `2n+1` modes (mode 0 row and column zero).
    pub fn matrix(&self) -> DMatrix<C64> {
        dense::pad_mode_zero(&self.system.matrix.to_c64(), self.n)
    }

    /// `L_λ⁻¹` on the mean-zero modes, padded with zeros at mode 0.
    pub fn inverse(&self) -> DMatrix<C64> {
        dense::pad_mode_zero(&self.system.inverse.to_c64(), self.n)
    }

    pub(crate) fn inverse_mp(&self) -> &MpMatrix {
        &self.system.inverse
    }

    /// Largest entrywise deviation of the closed form from composite
    /// Gauss–Legendre with `panels` 20-point panels, relative to `max |L_λ|`.
    pub fn quadrature_defect(&self, op: &ControlOperator, spec: &Spectrum, panels: usize) -> f64 {
        let closed = self.matrix();
        let quad = weighted_gramian_by_quadrature(op, spec, self.lambda, self.horizon, panels);
        dense::max_abs(&(&closed - &quad)) / dense::max_abs(&closed)
    }
}

fn weighted_gramian(op: &ControlOperator, spec: &Spectrum, lambda: f64, horizon: f64, prec: u32) -> MpMatrix {
    let n = spec.order();
    let modes = mean_zero_modes(n);
    let gg = op.gg_star_mp(prec);
    let mut table: HashMap<(usize, usize), Complex> = HashMap::new();
    let clusters: Vec<usize> = modes.iter().map(|&k| spec.cluster_of(k)).collect();
    let lam = spec.distinct_lambdas();
    MpMatrix::hermitian_from_fn(modes.len(), prec, |i, j| {
        let key = (clusters[i], clusters[j]);
        let e = table
            .entry(key)
            .or_insert_with(|| mp::damped_exp_integral(prec, lambda, lam[key.0], lam[key.1], horizon));
        Complex::with_val(prec, gg.get(slot(modes[i], n), slot(modes[j], n)) * &*e)
    })
}

/// `L_λ` by composite Gauss–Legendre in `τ`, on all `2n+1` modes.
pub fn weighted_gramian_by_quadrature(
    op: &ControlOperator,
    spec: &Spectrum,
    lambda: f64,
    horizon: f64,
    panels: usize,
) -> DMatrix<C64> {
    let n = spec.order();
    let dim = 2 * n + 1;
    let gg = op.gg_star();
    let nodes = quadrature::default_rule().composite(0.0, horizon, panels);
    let lambdas = spec.lambdas();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for (tau, w) in nodes {
        let weight = w * (-2.0 * lambda * tau).exp();
        let u: Vec<C64> = lambdas.iter().map(|&l| mp::phase_f64(-l, tau)).collect();
        for k in 0..dim {
            for l in 0..dim {
                out[(k, l)] += gg[(k, l)] * u[k] * u[l].conj() * weight;
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackKind {
    /// No feedback: the free group.
    None,
    /// `K = GG*`.
    Simple,
    /// `K_λ = GG* L_λ⁻¹`.
    Gramian,
}

/// A feedback `u ↦ −K u` and its closed-loop generator `A − K`.
#[derive(Clone, Debug)]
pub struct FeedbackLaw {
    kind: FeedbackKind,
    lambda: f64,
    n: usize,
    matrix: DMatrix<C64>,
    closed_loop: DMatrix<C64>,
    abscissa: f64,
    warnings: Vec<String>,
}

impl FeedbackLaw {
    pub fn none(spec: &Spectrum) -> Self {
        let n = spec.order();
        Self::assemble(FeedbackKind::None, 0.0, spec, DMatrix::zeros(2 * n + 1, 2 * n + 1), Vec::new())
    }

    /// `K = GG*`.
    pub fn simple(op: &ControlOperator, spec: &Spectrum) -> Result<Self> {
        check_orders(op, spec)?;
        Ok(Self::assemble(FeedbackKind::Simple, 0.0, spec, op.gg_star().clone(), Vec::new()))
    }

    /// `K_λ = GG* L_λ⁻¹` on the mean-zero modes.
    pub fn gramian(op: &ControlOperator, spec: &Spectrum, l: &GramianWeighted) -> Result<Self> {
        check_orders(op, spec)?;
        if l.order() != spec.order() {
            return Err(Error::Configuration(format!(
                "L_λ has order {} but the spectrum has order {}",
                l.order(),
                spec.order()
            )));
        }
        let n = spec.order();
        let keep: Vec<usize> = mean_zero_modes(n).iter().map(|&k| slot(k, n)).collect();
        let gg = op.gg_star_mp(l.precision()).select(&keep);
        let k = dense::pad_mode_zero(&gg.mul(l.inverse_mp()).to_c64(), n);
        let mut warnings = Vec::new();
        if l.cond() > ILL_CONDITIONED {
            let w = format!(
                "L_λ is ill-conditioned (cond ≈ {:e}); closed-loop checks carry degraded tolerance",
                l.cond()
            );
            log::warn!("{w}");
            warnings.push(w);
        }
        Ok(Self::assemble(FeedbackKind::Gramian, l.lambda(), spec, k, warnings))
    }

    fn assemble(kind: FeedbackKind, lambda: f64, spec: &Spectrum, matrix: DMatrix<C64>, warnings: Vec<String>) -> Self {
        let n = spec.order();
        let generator = DMatrix::from_diagonal(&DVector::from_iterator(
            2 * n + 1,
            spec.lambdas().iter().map(|&l| C64::new(0.0, -l)),
        ));
        let closed_loop = generator - &matrix;
        let abscissa = dense::spectral_abscissa(&dense::drop_mode_zero(&closed_loop, n));
        Self {
            kind,
            lambda,
            n,
            matrix,
            closed_loop,
            abscissa,
            warnings,
        }
    }

    pub fn kind(&self) -> FeedbackKind {
        self.kind
    }

    /// Requested decay rate (0 unless the law is [`FeedbackKind::Gramian`]).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// `K` on ψ-coefficients.
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// `A − K` on ψ-coefficients.
    pub fn closed_loop(&self) -> &DMatrix<C64> {
        &self.closed_loop
    }

    /// Largest real part of the closed-loop eigenvalues on the mean-zero modes.
    pub fn spectral_abscissa(&self) -> f64 {
        self.abscissa
    }

    /// Closed-loop eigenvalues on the mean-zero modes.
    pub fn eigenvalues(&self) -> Vec<C64> {
        dense::eigenvalues(&dense::drop_mode_zero(&self.closed_loop, self.n))
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `d/dt ½‖u‖² = Re⟨u, (A − K)u⟩`.
    pub fn energy_rate(&self, u: &[C64]) -> f64 {
        let v = DVector::from_column_slice(u);
        (v.adjoint() * &self.closed_loop * &v)[(0, 0)].re
    }

    /// `(‖u(t+h)‖² − ‖u(t−h)‖²) / (4h)` for the trajectory through `u` at time
    /// `t`, formed as `Re⟨cosh(hM)u, sinh(hM)u⟩ / h` to avoid cancellation.
    pub fn centered_energy_rate(&self, u: &[C64], h: f64) -> f64 {
        let v = DVector::from_column_slice(u);
        let (c, s) = cosh_sinh(&(&self.closed_loop * C64::new(h, 0.0)));
        let cu = &c * &v;
        let su = &s * &v;
        cu.dotc(&su).re / h
    }
}

fn check_orders(op: &ControlOperator, spec: &Spectrum) -> Result<()> {
    if op.order() != spec.order() {
        return Err(Error::Configuration(format!(
            "control operator has order {} but the spectrum has order {}",
            op.order(),
            spec.order()
        )));
    }
    Ok(())
}

/// `(cosh X, sinh X)` by Taylor series; intended for `‖X‖ ≪ 1`.
fn cosh_sinh(x: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let dim = x.nrows();
    let mut c = DMatrix::<C64>::identity(dim, dim);
    let mut s = DMatrix::<C64>::zeros(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for j in 1..40 {
        term = &term * x * C64::new(1.0 / j as f64, 0.0);
        if j % 2 == 1 {
            s += &term;
        } else {
            c += &term;
        }
        if dense::max_abs(&term) < 1e-300 {
            break;
        }
    }
    (c, s)
}

/// States of a closed-loop run, with norm histories.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TorusFunction>,
    pub mean: C64,
}

impl Trajectory {
    /// `‖u(t) − [u₀]‖_{H^s}` at each time.
    pub fn fluctuation_norms(&self, s: f64) -> Vec<f64> {
        self.states
            .iter()
            .map(|u| u.project_mean_zero().sobolev_norm(s))
            .collect()
    }

    pub fn norms(&self, s: f64) -> Vec<f64> {
        self.states.iter().map(|u| u.sobolev_norm(s)).collect()
    }

    /// `max_t |[u(t)] − [u₀]|`.
    pub fn mean_drift(&self) -> f64 {
        self.states
            .iter()
            .map(|u| (u.mean() - self.mean).norm())
            .fold(0.0, f64::max)
    }

    /// `(t, norm)` pairs of the fluctuation in `H^s`.
    pub fn norm_history(&self, s: f64) -> Vec<(f64, f64)> {
        self.times.iter().cloned().zip(self.fluctuation_norms(s)).collect()
    }

    /// CSV with header `t,L2_norm,Hs_norm`.
    pub fn decay_csv(&self, s: f64) -> String {
        let mut out = String::from("t,L2_norm,Hs_norm\n");
        for ((t, a), b) in self.times.iter().zip(self.fluctuation_norms(0.0)).zip(self.fluctuation_norms(s)) {
            out.push_str(&format!("{t:e},{a:e},{b:e}\n"));
        }
        out
    }
}

/// Runs `u' = (A − K)u` from `u₀`: the mean is split off and re-added, and the
/// fluctuation is advanced by `exp((t_{i+1} − t_i)(A − K))`, reusing the
/// exponential when steps repeat.
pub fn simulate_closed_loop(u0: &TorusFunction, law: &FeedbackLaw, times: &[f64]) -> Result<Trajectory> {
    let n = law.order();
    if u0.order() > n {
        return Err(Error::validation(
            "u0",
            format!("state of order {} exceeds the law's order {n}", u0.order()),
        ));
    }
    let mut prev = 0.0;
    for &t in times {
        if !(t.is_finite() && t >= prev) {
            return Err(Error::validation("times", "output times must be finite, nonnegative and nondecreasing"));
        }
        prev = t;
    }
    let u0 = u0.resized(n);
    let mean = u0.mean();
    let fluct = u0.project_mean_zero();
    let real = u0.is_real();
    let m = dense::drop_mode_zero(law.closed_loop(), n);
    let keep: Vec<usize> = mean_zero_modes(n).iter().map(|&k| slot(k, n)).collect();
    let psi = fluct.psi_coeffs();
    let mut v = DVector::from_iterator(keep.len(), keep.iter().map(|&i| psi[i]));
    let mut cache: HashMap<u64, DMatrix<C64>> = HashMap::new();
    let mean_psi = mean * (2.0 * std::f64::consts::PI).sqrt();
    let mut states = Vec::with_capacity(times.len());
    let mut t_prev = 0.0;
    for &t in times {
        let dt = t - t_prev;
        if dt > 0.0 {
            let step = cache
                .entry(dt.to_bits())
                .or_insert_with(|| (&m * C64::new(dt, 0.0)).exp());
            v = &*step * v;
        }
        t_prev = t;
        let mut full = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for (j, &i) in keep.iter().enumerate() {
            full[i] = v[j];
        }
        full[n] = mean_psi;
        let mut u = TorusFunction::from_psi_coeffs_auto(n, &full, real)?;
        if u.mean() != mean {
            u = u.project_mean_zero().add(&TorusFunction::from_modes(n, &[(0, mean)], u.is_real())?);
        }
        states.push(u);
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        mean,
    })
}

/// Energy-identity defects `|d/dt ½‖u‖² + ‖Gu‖²|` at the given states, each
/// derivative taken as a centered difference with step `h`.
pub fn energy_identity_defects(op: &ControlOperator, law: &FeedbackLaw, states: &[TorusFunction], h: f64) -> Vec<f64> {
    states
        .iter()
        .map(|u| {
            let psi = u.resized(law.order()).psi_coeffs();
            (law.centered_energy_rate(&psi, h) + op.image_norm_sqr(&psi)).abs()
        })
        .collect()
}

/// `δ` with `∫₀ᵀ ‖G U(−τ)φ‖² dτ ≥ δ² ‖φ‖²` on mean-zero `φ`.
#[derive(Clone, Debug, Serialize)]
pub struct Observability {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub delta: f64,
    pub cond: f64,
    /// Unit ψ-coefficients of the minimizing `φ`, as `[k, re, im]`.
    pub minimizer: Vec<(i64, f64, f64)>,
}

pub fn observability_constant(op: &ControlOperator, spec: &Spectrum, horizon: f64) -> Result<Observability> {
    let system = GramianSystem::new(op, spec, horizon)?;
    observability_from(&system)
}

pub fn observability_from(system: &GramianSystem) -> Result<Observability> {
    let lmin = system.lambda_min();
    let phi = system.minimizer();
    let n = (phi.len() - 1) / 2;
    let minimizer: Vec<(i64, f64, f64)> = phi
        .iter()
        .enumerate()
        .map(|(i, z)| (dense::mode(i, n), z.re, z.im))
        .collect();
    if !(lmin > 0.0) {
        let (k, _, _) = minimizer
            .iter()
            .cloned()
            .max_by(|a, b| (a.1.hypot(a.2)).total_cmp(&b.1.hypot(b.2)))
            .unwrap_or((0, 0.0, 0.0));
        return Err(Error::Observability(format!(
            "smallest Gramian eigenvalue {lmin:e} on [0, {}]; near-null vector concentrated on mode {k}",
            system.horizon()
        )));
    }
    Ok(Observability {
        horizon: system.horizon(),
        delta: lmin.sqrt(),
        cond: system.cond(),
        minimizer,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::operators::{evolve_free_with, BumpProfile};
    use crate::random::random_state;

    fn setup(n: usize, alpha: f64, mu: f64) -> (ControlOperator, Spectrum) {
        let op = ControlOperator::new(BumpProfile::default_bump(2 * n), n).unwrap();
        let spec = Spectrum::new(alpha, mu, n).unwrap();
        (op, spec)
    }

    #[test]
    fn uniform_simple_law_is_diagonal() {
        let n = 6;
        let op = ControlOperator::new(BumpProfile::uniform(2 * n), n).unwrap();
        let spec = Spectrum::new(1.0, 0.3, n).unwrap();
        let law = FeedbackLaw::simple(&op, &spec).unwrap();
        let damp = 1.0 / (4.0 * PI * PI);
        for k in mean_zero_modes(n) {
            let i = slot(k, n);
            let z = law.closed_loop()[(i, i)];
            assert!((z - C64::new(-damp, -spec.lambda(k))).norm() < 1e-15);
        }
        assert!((law.spectral_abscissa() + damp).abs() < 1e-12);
    }

    #[test]
    fn uniform_weighted_gramian_and_feedback() {
        let n = 8;
        let op = ControlOperator::new(BumpProfile::uniform(2 * n), n).unwrap();
        let spec = Spectrum::new(1.0, 0.0, n).unwrap();
        let (lambda, t) = (1.0, 1.0);
        let l = GramianWeighted::build(&op, &spec, lambda, t).unwrap();
        let m = l.matrix();
        let inv = l.inverse();
        let d = 1.0 / (4.0 * PI * PI) * (1.0 - (-2.0 * lambda * t).exp()) / (2.0 * lambda);
        for i in 0..2 * n + 1 {
            for j in 0..2 * n + 1 {
                if i == j && i != n {
                    assert!((m[(i, i)].re - d).abs() < 1e-15);
                    assert!((inv[(i, i)].re - 1.0 / d).abs() < 1e-12 / d);
                } else {
                    assert!(m[(i, j)].norm() < 1e-17);
                }
            }
        }
        let law = FeedbackLaw::gramian(&op, &spec, &l).unwrap();
        let expected = -2.0 * lambda / (1.0 - (-2.0 * lambda * t).exp());
        assert!((law.spectral_abscissa() - expected).abs() < 1e-10);
        assert!(law.matrix().column(n).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn weighted_gramian_matches_quadrature() {
        let (op, spec) = setup(6, 1.0, 0.3);
        let l = GramianWeighted::build(&op, &spec, 1.0, 1.0).unwrap();
        assert!(l.quadrature_defect(&op, &spec, 200) < 1e-9);
        assert!(dense::hermitian_defect(&l.matrix()) < 1e-15);
        assert!(l.lambda_min() > 0.0);
    }

    #[test]
    fn small_lambda_approaches_unweighted() {
        let (op, spec) = setup(5, 7.0 / 3.0, 0.0);
        let l = GramianWeighted::build(&op, &spec, 1e-8, 1.0).unwrap();
        let q = weighted_gramian_by_quadrature(&op, &spec, 0.0, 1.0, 200);
        assert!(dense::max_abs(&(l.matrix() - q)) < 1e-8);
    }

    #[test]
    fn prescribed_decay_bound_holds() {
        let (op, spec) = setup(8, 1.0, 0.0);
        for lambda in [0.5, 2.0] {
            let l = GramianWeighted::build(&op, &spec, lambda, 1.0).unwrap();
            let law = FeedbackLaw::gramian(&op, &spec, &l).unwrap();
            assert!(law.spectral_abscissa() <= -lambda * (1.0 - 1e-6), "{}", law.spectral_abscissa());
        }
    }

    #[test]
    fn zero_feedback_matches_free_flow() {
        let (_, spec) = setup(8, 7.0 / 3.0, 0.3);
        let u0 = random_state(4, 8, 1.0, 1.0).add(&TorusFunction::constant(0.7, 8));
        let law = FeedbackLaw::none(&spec);
        let times = [0.0, 0.3, 0.5, 1.7];
        let traj = simulate_closed_loop(&u0, &law, &times).unwrap();
        for (t, u) in times.iter().zip(&traj.states) {
            let free = evolve_free_with(&u0, *t, &spec);
            assert!(u.sub(&free).sobolev_norm(0.0) < 1e-10);
        }
    }

    #[test]
    fn simple_law_decays_and_conserves_energy_identity() {
        let n = 8;
        let (op, spec) = setup(n, 1.0, 0.0);
        let law = FeedbackLaw::simple(&op, &spec).unwrap();
        assert!(law.spectral_abscissa() < 0.0);
        let u0 = random_state(11, n, 0.0, 1.0).add(&TorusFunction::constant(-0.4, n));
        let times: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let traj = simulate_closed_loop(&u0, &law, &times).unwrap();
        assert!(traj.mean_drift() <= 1e-12);
        let norms = traj.fluctuation_norms(0.0);
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        let fluct: Vec<TorusFunction> = traj.states.iter().map(|u| u.project_mean_zero()).collect();
        let defects = energy_identity_defects(&op, &law, &fluct, 1e-9);
        assert!(defects.iter().all(|&d| d < 1e-10), "{defects:?}");
        let rate = law.energy_rate(&fluct[3].psi_coeffs());
        assert!(rate < 0.0);
    }

    #[test]
    fn constant_and_zero_states_are_fixed() {
        let n = 5;
        let (op, spec) = setup(n, 1.0, 0.0);
        let law = FeedbackLaw::simple(&op, &spec).unwrap();
        let c = TorusFunction::constant(2.0, n);
        let traj = simulate_closed_loop(&c, &law, &[0.0, 1.0, 5.0]).unwrap();
        assert!(traj.states.iter().all(|u| u == &c));
        let z = TorusFunction::zeros(n);
        let traj = simulate_closed_loop(&z, &law, &[2.0]).unwrap();
        assert_eq!(traj.states[0], z);
    }

    #[test]
    fn observability_uniform_and_monotone() {
        let n = 6;
        let op = ControlOperator::new(BumpProfile::uniform(2 * n), n).unwrap();
        let spec = Spectrum::new(1.0, 0.0, n).unwrap();
        for t in [0.5, 1.0] {
            let o = observability_constant(&op, &spec, t).unwrap();
            assert!((o.delta - t.sqrt() / (2.0 * PI)).abs() < 1e-12);
        }
        let (op, spec) = setup(8, 1.0, 0.0);
        let d: Vec<f64> = [0.01, 0.1, 1.0]
            .iter()
            .map(|&t| observability_constant(&op, &spec, t).unwrap().delta)
            .collect();
        assert!(d[0] > 0.0 && d[0] <= d[1] && d[1] <= d[2], "{d:?}");
    }
}
