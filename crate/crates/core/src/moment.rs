//! Exact controls by the moment method, and a minimal-norm Gramian control
//! used as an independent oracle.
//!
//! With `c = u₁ − U(T)u₀` (ψ-coefficients) the control
//! `h(x,t) = Σ_j h_j conj(q_{[j]}(t)) ψ_j(x)` reaches `u₁` when
//!
//! ```text
//! Σ_{j ∈ I(k)} h_j m_{j,k} = c_k e^{iλ_k T}   for every k ≠ 0,
//! ```
//!
//! where `I(k)` is the cluster of `k` and `q_r = Σ_m a_{r,m} e^{iλ_m t}` is the
//! family biorthogonal to `{e^{iλ_r t}}` over `[0, T]` (one exponential per
//! cluster), so `a = Γ⁻¹` for the Gram matrix `Γ_{r,m} = ∫₀ᵀ e^{i(λ_r−λ_m)t} dt`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rug::{Assign, Complex, Float};
use serde::Serialize;

use crate::dense::{self, slot};
use crate::error::{Error, Result};
use crate::mp::{self, HermitianSystem, MpMatrix};
use crate::operators::ControlOperator;
use crate::quadrature;
use crate::spectral::{sobolev_weight, TorusFunction};
use crate::spectrum::Spectrum;
use crate::C64;

/// Tolerance on `|[u₀] − [u₁]|`.
pub const MEAN_TOLERANCE: f64 = 1e-12;

/// Condition numbers beyond this are reported as a singular Gram matrix.
pub const MAX_GRAM_COND: f64 = 1e250;

/// Steer `u₀` to `u₁` in time `T` for the system with parameters `α`, `μ`.
#[derive(Clone, Debug)]
pub struct ControlProblem {
    pub alpha: f64,
    pub mu: f64,
    pub horizon: f64,
    /// Sobolev index used for residuals and norms.
    pub s: f64,
    pub u0: TorusFunction,
    pub u1: TorusFunction,
}

impl ControlProblem {
    pub fn new(
        alpha: f64,
        mu: f64,
        horizon: f64,
        s: f64,
        u0: TorusFunction,
        u1: TorusFunction,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::validation("alpha", "must be positive and finite"));
        }
        if !mu.is_finite() {
            return Err(Error::validation("mu", "must be finite"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::validation("T", "horizon must be positive and finite"));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::validation("s", "Sobolev index must be nonnegative"));
        }
        let n = u0.order().max(u1.order());
        let (u0, u1) = (u0.resized(n), u1.resized(n));
        if (u0.mean() - u1.mean()).norm() > MEAN_TOLERANCE {
            return Err(Error::MeanMismatch {
                mean0: format!("{}", u0.mean()),
                mean1: format!("{}", u1.mean()),
            });
        }
        Ok(Self {
            alpha,
            mu,
            horizon,
            s,
            u0,
            u1,
        })
    }

    pub fn order(&self) -> usize {
        self.u0.order()
    }

    /// ψ-coefficients `c_k` of `u₁ − U(T)u₀`.
    pub fn reduce_to_zero_start(&self, spec: &Spectrum) -> Vec<C64> {
        let n = self.order() as i64;
        let u0 = self.u0.psi_coeffs();
        let u1 = self.u1.psi_coeffs();
        (-n..=n)
            .map(|k| {
                let i = (k + n) as usize;
                u1[i] - mp::phase_f64(spec.lambda(k), self.horizon) * u0[i]
            })
            .collect()
    }
}

/// Gram matrix of `{e^{iλ_r t}}` on `[0, T]`, its inverse, and the verified
/// biorthogonality matrix.
#[derive(Clone, Debug)]
pub struct BiorthogonalFamily {
    horizon: f64,
    lambdas: Vec<f64>,
    system: HermitianSystem,
    /// `B_{k,r} = ∫₀ᵀ e^{iλ_k t} conj(q_r(t)) dt = (Γ Γ⁻¹)_{k,r}`, formed at
    /// the working precision and rounded.
    biorth: DMatrix<C64>,
    residual: f64,
}

impl BiorthogonalFamily {
    /// One exponential per cluster of `spec`, in cluster order.
    pub fn build(spec: &Spectrum, horizon: f64) -> Result<Self> {
        Self::from_lambdas(spec.distinct_lambdas(), horizon)
    }

    pub fn from_lambdas(lambdas: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::validation("T", "horizon must be positive and finite"));
        }
        let dim = lambdas.len();
        let built = mp::factor_adaptive(|prec| {
            MpMatrix::hermitian_from_fn(dim, prec, |r, m| {
                mp::exp_integral(prec, lambdas[r], lambdas[m], horizon)
            })
        });
        let system = match built {
            Ok(s) if s.cond <= MAX_GRAM_COND => s,
            other => {
                let cond = match other {
                    Ok(s) => s.cond,
                    Err(b) => b.cond,
                };
                let (a, b) = closest_pair(&lambdas);
                return Err(Error::GramSingular {
                    cond,
                    lambda_a: a,
                    lambda_b: b,
                });
            }
        };
        let biorth = system.matrix.mul(&system.inverse).to_c64();
        let residual = (&biorth - DMatrix::<C64>::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        log::debug!(
            "Gram matrix of {dim} exponentials on [0, {horizon}]: cond ≈ {:e}, {} bits",
            system.cond,
            system.prec
        );
        Ok(Self {
            horizon,
            lambdas,
            system,
            biorth,
            residual,
        })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `λ_max(Γ) · λ_max(Γ⁻¹)`.
    pub fn cond(&self) -> f64 {
        self.system.cond
    }

    /// Working precision of the Gram solve, in bits.
    pub fn precision(&self) -> u32 {
        self.system.prec
    }

    pub fn gram(&self) -> DMatrix<C64> {
        self.system.matrix.to_c64()
    }

    /// Row `r` holds the coefficients of `q_r` in `{e^{iλ_m t}}`.
    pub fn dual_coefficients(&self) -> DMatrix<C64> {
        self.system.inverse.to_c64()
    }

    /// `max |B − I|` from the closed-form integrals.
    pub fn biorthogonality_residual(&self) -> f64 {
        self.residual
    }

    pub fn biorthogonality_matrix(&self) -> &DMatrix<C64> {
        &self.biorth
    }

    /// `‖q_r‖²_{L²(0,T)} = (Γ⁻¹)_{r,r}`.
    pub fn q_norm_sqr_mp(&self, r: usize) -> Float {
        self.system.inverse.get(r, r).real().clone()
    }

    pub fn q_norm_sqr(&self, r: usize) -> f64 {
        self.q_norm_sqr_mp(r).to_f64()
    }

    /// `q_r(t)` for every `r`, evaluated at the working precision.
    pub fn eval_q_mp(&self, t: f64) -> Vec<Complex> {
        let prec = self.precision();
        let waves: Vec<Complex> = self.lambdas.iter().map(|&l| mp::cis_mul(prec, l, t)).collect();
        self.system.inverse.mul_vec(&waves)
    }

    pub fn eval_q(&self, t: f64) -> Vec<C64> {
        self.eval_q_mp(t).iter().map(mp::to_c64).collect()
    }

    /// `max_{k,r} |∫₀ᵀ e^{iλ_k t} conj(q_r(t)) dt − δ_{kr}|` by composite
    /// Gauss–Legendre with `panels` 20-point panels.
    pub fn biorthogonality_by_quadrature(&self, panels: usize) -> f64 {
        let rule = quadrature::default_rule();
        let nodes = rule.composite(0.0, self.horizon, panels);
        let dim = self.len();
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for (t, w) in nodes {
            let q = self.eval_q(t);
            for (k, &lk) in self.lambdas.iter().enumerate() {
                let e = mp::phase_f64(-lk, t) * w;
                for r in 0..dim {
                    acc[(k, r)] += e * q[r].conj();
                }
            }
        }
        let mut worst = 0.0f64;
        for k in 0..dim {
            for r in 0..dim {
                let e = if k == r { 1.0 } else { 0.0 };
                worst = worst.max((acc[(k, r)] - C64::new(e, 0.0)).norm());
            }
        }
        worst
    }

    /// `P_{k,r}(t) = ∫₀ᵗ e^{iλ_k s} conj(q_r(s)) ds` for cluster eigenvalues `λ_k`.
    fn partial_biorth(&self, t: f64) -> MpMatrix {
        let prec = self.precision();
        let dim = self.len();
        let e = MpMatrix::from_fn(dim, dim, prec, |k, m| {
            mp::exp_integral(prec, self.lambdas[k], self.lambdas[m], t)
        });
        // Σ_m E_{k,m} conj(a_{r,m}) = Σ_m E_{k,m} a_{m,r}
        e.mul(&self.system.inverse)
    }
}

fn closest_pair(lambdas: &[f64]) -> (f64, f64) {
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted
        .windows(2)
        .min_by(|a, b| (a[1] - a[0]).total_cmp(&(b[1] - b[0])))
        .map(|w| (w[0], w[1]))
        .unwrap_or((f64::NAN, f64::NAN))
}

/// Moment-method control `h(x,t) = Σ_j h_j conj(q_{[j]}(t)) ψ_j(x)`.
#[derive(Clone, Debug)]
pub struct ControlSignal {
    n: usize,
    horizon: f64,
    coeffs: Vec<Complex>,
    clusters: Vec<usize>,
}

impl ControlSignal {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `h_j`, ordered `j = −n..=n`.
    pub fn coefficients(&self) -> Vec<C64> {
        self.coeffs.iter().map(mp::to_c64).collect()
    }

    pub fn coefficient(&self, j: i64) -> C64 {
        mp::to_c64(&self.coeffs[slot(j, self.n)])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| z.is_zero())
    }

    /// `max_j |h_{−j} − conj(h_j)|` relative to `max_j |h_j|`; zero for a real control.
    pub fn symmetry_defect(&self) -> f64 {
        let h = self.coefficients();
        let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.n as i64;
        (0..=n)
            .map(|j| (h[slot(-j, self.n)] - h[slot(j, self.n)].conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    /// `h_j ↦ (h_j + conj(h_{−j}))/2`.
    pub fn symmetrized(&self) -> ControlSignal {
        let n = self.n as i64;
        let mut out = self.clone();
        for j in -n..=n {
            let a = &self.coeffs[slot(j, self.n)];
            let b = self.coeffs[slot(-j, self.n)].clone().conj();
            out.coeffs[slot(j, self.n)] = Complex::with_val(a.prec(), a + &b) / 2u32;
        }
        out
    }

    /// `‖h‖²_{L²(0,T; H^s)} = Σ_j (1+j²)^s |h_j|² ‖q_{[j]}‖²`.
    pub fn norm_sqr_mp(&self, family: &BiorthogonalFamily, s: f64) -> Float {
        let prec = family.precision();
        let mut acc = Float::new(prec);
        let n = self.n as i64;
        for j in -n..=n {
            let h = &self.coeffs[slot(j, self.n)];
            if h.is_zero() {
                continue;
            }
            let abs2 = Float::with_val(prec, h.clone().norm().real());
            let q = family.q_norm_sqr_mp(self.clusters[slot(j, self.n)]);
            acc += abs2 * q * sobolev_weight(j, s);
        }
        acc
    }

    pub fn norm(&self, family: &BiorthogonalFamily, s: f64) -> f64 {
        self.norm_sqr_mp(family, s).sqrt().to_f64()
    }

    /// ψ-coefficients of `h(·, t)`.
    pub fn mode_values(&self, family: &BiorthogonalFamily, t: f64) -> Vec<C64> {
        let q = family.eval_q_mp(t);
        self.coeffs
            .iter()
            .zip(&self.clusters)
            .map(|(h, &r)| mp::to_c64(&Complex::with_val(h.prec(), h * &q[r].clone().conj())))
            .collect()
    }
}

/// Residual diagnostics for one synthesized control.
#[derive(Clone, Debug, Serialize)]
pub struct MomentReport {
    /// `‖u(T) − u₁‖_{H^s} / ‖u₁‖_{H^s}`.
    pub terminal_residual: f64,
    /// `max_k |moment_k − c_k|`, closed form.
    pub moment_residual: f64,
    /// `|c_0|`.
    pub c0: f64,
    /// `‖h‖_{L²(0,T;H^s)} / (‖u₀‖_{H^s} + ‖u₁‖_{H^s})`.
    pub nu: f64,
    pub control_norm: f64,
    pub cond_gamma: f64,
    pub precision_bits: u32,
    pub biorthogonality_residual: f64,
    pub symmetry_defect: f64,
    /// Change in the moment residual after symmetrizing `h`.
    pub symmetrized_moment_change: f64,
}

/// Moment-method synthesis for one `(G, spectrum, T)`; reusable across targets.
#[derive(Debug)]
pub struct MomentControl<'a> {
    op: &'a ControlOperator,
    spec: Spectrum,
    family: BiorthogonalFamily,
    cluster_of: Vec<usize>,
}

impl<'a> MomentControl<'a> {
    pub fn new(op: &'a ControlOperator, spec: &Spectrum, horizon: f64) -> Result<Self> {
        if op.order() != spec.order() {
            return Err(Error::Configuration(format!(
                "operator order {} differs from spectrum order {}",
                op.order(),
                spec.order()
            )));
        }
        let family = BiorthogonalFamily::build(spec, horizon)?;
        let n = spec.order() as i64;
        let cluster_of = (-n..=n).map(|k| spec.cluster_of(k)).collect();
        Ok(Self {
            op,
            spec: spec.clone(),
            family,
            cluster_of,
        })
    }

    pub fn family(&self) -> &BiorthogonalFamily {
        &self.family
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spec
    }

    pub fn horizon(&self) -> f64 {
        self.family.horizon()
    }

    fn n(&self) -> usize {
        self.spec.order()
    }

    /// Solves `Σ_{j∈I(k)} h_j m_{j,k} = c_k e^{iλ_k T}` cluster by cluster; `h_0 = 0`.
    pub fn solve_coefficients(&self, c: &[C64]) -> Result<ControlSignal> {
        let n = self.n();
        if c.len() != 2 * n + 1 {
            return Err(Error::validation("c", "target length does not match order"));
        }
        let prec = self.family.precision();
        let t = self.horizon();
        let m = self.op.m_matrix();
        let mut h: Vec<Complex> = vec![Complex::new(prec); 2 * n + 1];
        for cluster in self.spec.clusters() {
            let idx: Vec<i64> = cluster.iter().copied().filter(|&k| k != 0).collect();
            if idx.is_empty() {
                continue;
            }
            let rhs: Vec<Complex> = idx
                .iter()
                .map(|&k| {
                    let ck = mp::from_c64(prec, c[slot(k, n)]);
                    Complex::with_val(prec, ck * mp::cis_mul(prec, self.spec.lambda(k), t))
                })
                .collect();
            // Row system: matrix entry (k, j) = m_{j,k}.
            let block = MpMatrix::from_fn(idx.len(), idx.len(), prec, |r, col| {
                mp::from_c64(prec, m.entry(idx[col], idx[r]))
            });
            let sol = mp::solve_general(&block, &rhs).ok_or_else(|| Error::SingularClusterBlock {
                indices: cluster.clone(),
            })?;
            for (&k, v) in idx.iter().zip(sol) {
                h[slot(k, n)] = v;
            }
        }
        Ok(ControlSignal {
            n,
            horizon: t,
            coeffs: h,
            clusters: self.cluster_of.clone(),
        })
    }

    pub fn synthesize(&self, problem: &ControlProblem) -> Result<ControlSignal> {
        self.check_problem(problem)?;
        self.solve_coefficients(&problem.reduce_to_zero_start(&self.spec))
    }

    fn check_problem(&self, problem: &ControlProblem) -> Result<()> {
        if problem.order() != self.n() {
            return Err(Error::Configuration(format!(
                "problem order {} differs from operator order {}",
                problem.order(),
                self.n()
            )));
        }
        if problem.horizon != self.horizon() || problem.alpha != self.spec.alpha() || problem.mu != self.spec.mu() {
            return Err(Error::Configuration(
                "problem parameters differ from the synthesizer's (α, μ, T)".into(),
            ));
        }
        Ok(())
    }

    /// `∫₀ᵗ U(t−s) G h(s) ds` on ψ-coefficients, evaluated in closed form.
    ///
    /// At `t = T` the biorthogonality matrix is the identity to working
    /// precision and the sum is formed in double precision; at interior times
    /// the partial integrals of `q_r` are large and cancel, so the sum is
    /// carried at the family's precision.
    fn forced(&self, signal: &ControlSignal, t: f64) -> Vec<C64> {
        let n = self.n();
        let g = self.op.matrix();
        let active: Vec<usize> = (0..2 * n + 1).filter(|&l| !signal.coeffs[l].is_zero()).collect();
        if t == self.horizon() {
            let h = signal.coefficients();
            let b = self.family.biorthogonality_matrix();
            return (0..2 * n + 1)
                .map(|k| {
                    let ck = self.cluster_of[k];
                    let acc: C64 = active
                        .iter()
                        .map(|&l| g[(k, l)] * h[l] * b[(ck, signal.clusters[l])])
                        .sum();
                    mp::phase_f64(self.spec.lambda(dense::mode(k, n)), t) * acc
                })
                .collect();
        }
        let prec = self.family.precision();
        let p = self.family.partial_biorth(t);
        let mut tmp = Complex::new(prec);
        (0..2 * n + 1)
            .map(|k| {
                let ck = self.cluster_of[k];
                let mut acc = Complex::new(prec);
                for &l in &active {
                    let gkl = g[(k, l)];
                    if gkl == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let w = Complex::with_val(prec, &signal.coeffs[l] * p.get(ck, signal.clusters[l]));
                    tmp.assign(mp::from_c64(prec, gkl) * &w);
                    acc += &tmp;
                }
                let lambda = self.spec.lambda(dense::mode(k, n));
                mp::to_c64(&Complex::with_val(prec, acc * mp::cis_mul(prec, -lambda, t)))
            })
            .collect()
    }

    /// Closed-form moments `∫₀ᵀ e^{−iλ_k(T−t)} (G h(t))_k dt`.
    pub fn moments(&self, signal: &ControlSignal) -> Vec<C64> {
        self.forced(signal, self.horizon())
    }

    /// The same moments by composite Gauss–Legendre quadrature in time.
    pub fn moments_by_quadrature(&self, signal: &ControlSignal, panels: usize) -> Vec<C64> {
        let n = self.n();
        let t_end = self.horizon();
        let g = self.op.matrix();
        let rule = quadrature::default_rule();
        let mut acc = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for (t, w) in rule.composite(0.0, t_end, panels) {
            let h = nalgebra::DVector::from_vec(signal.mode_values(&self.family, t));
            let gh = g * h;
            for k in 0..2 * n + 1 {
                let lambda = self.spec.lambda(dense::mode(k, n));
                acc[k] += mp::phase_f64(lambda, t_end - t) * gh[k] * w;
            }
        }
        acc
    }

    /// `u(t)` under the control, `0 ≤ t ≤ T`.
    pub fn evolve_controlled(
        &self,
        u0: &TorusFunction,
        signal: &ControlSignal,
        t: f64,
    ) -> Result<TorusFunction> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::validation("t", "must lie in [0, T]"));
        }
        let n = self.n();
        let u0 = u0.resized(n);
        let psi = u0.psi_coeffs();
        let forced = if signal.is_zero() {
            vec![C64::new(0.0, 0.0); 2 * n + 1]
        } else {
            self.forced(signal, t)
        };
        let coeffs: Vec<C64> = (0..2 * n + 1)
            .map(|k| {
                let lambda = self.spec.lambda(dense::mode(k, n));
                mp::phase_f64(lambda, t) * psi[k] + forced[k]
            })
            .collect();
        TorusFunction::from_psi_coeffs_auto(n, &coeffs, u0.is_real())
    }

    pub fn terminal_state(&self, u0: &TorusFunction, signal: &ControlSignal) -> Result<TorusFunction> {
        self.evolve_controlled(u0, signal, self.horizon())
    }

    /// Full residual report for `signal` as the control of `problem`.
    pub fn report(&self, problem: &ControlProblem, signal: &ControlSignal) -> Result<MomentReport> {
        let c = problem.reduce_to_zero_start(&self.spec);
        let moments = self.moments(signal);
        let moment_residual = max_diff(&moments, &c, true, self.n());
        let symmetry_defect = signal.symmetry_defect();
        let sym_residual = if symmetry_defect > 0.0 {
            max_diff(&self.moments(&signal.symmetrized()), &c, true, self.n())
        } else {
            moment_residual
        };
        let u_t = self.terminal_state(&problem.u0, signal)?;
        let denom = problem.u1.sobolev_norm(problem.s);
        let diff = u_t.sub(&problem.u1).sobolev_norm(problem.s);
        let terminal_residual = if denom > 0.0 { diff / denom } else { diff };
        let control_norm = signal.norm(&self.family, problem.s);
        let data = problem.u0.sobolev_norm(problem.s) + problem.u1.sobolev_norm(problem.s);
        Ok(MomentReport {
            terminal_residual,
            moment_residual,
            c0: c[self.n()].norm(),
            nu: if data > 0.0 { control_norm / data } else { 0.0 },
            control_norm,
            cond_gamma: self.family.cond(),
            precision_bits: self.family.precision(),
            biorthogonality_residual: self.family.biorthogonality_residual(),
            symmetry_defect,
            symmetrized_moment_change: (sym_residual - moment_residual).abs(),
        })
    }
}

fn max_diff(a: &[C64], b: &[C64], skip_zero: bool, n: usize) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(i, _)| !(skip_zero && *i == n))
        .map(|(_, (x, y))| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `W_T = ∫₀ᵀ U(σ) GG* U(σ)* dσ` on the mean-zero modes (`k ≠ 0`, ascending),
/// entry `(GG*)_{k,l} ∫₀ᵀ e^{−i(λ_k−λ_l)σ} dσ`. The same matrix is the
/// observability Gramian `∫₀ᵀ U(−τ)* GG* U(−τ) dτ`.
pub fn controllability_gramian(op: &ControlOperator, spec: &Spectrum, horizon: f64, prec: u32) -> MpMatrix {
    let n = spec.order();
    let modes = mean_zero_modes(n);
    let gg = op.gg_star_mp(prec);
    // Integrals depend only on the cluster pair.
    let lam = spec.distinct_lambdas();
    let nc = lam.len();
    let mut table: Vec<Option<Complex>> = vec![None; nc * nc];
    let mut integral = |a: usize, b: usize| -> Complex {
        let key = a * nc + b;
        if table[key].is_none() {
            table[key] = Some(mp::exp_integral(prec, lam[b], lam[a], horizon));
        }
        table[key].clone().expect("filled")
    };
    let clusters: Vec<usize> = modes.iter().map(|&k| spec.cluster_of(k)).collect();
    let mut w = MpMatrix::zeros(modes.len(), modes.len(), prec);
    for i in 0..modes.len() {
        for j in i..modes.len() {
            let e = integral(clusters[i], clusters[j]);
            let v = Complex::with_val(prec, gg.get(slot(modes[i], n), slot(modes[j], n)) * &e);
            if i != j {
                *w.get_mut(j, i) = v.clone().conj();
            }
            *w.get_mut(i, j) = v;
        }
    }
    for i in 0..modes.len() {
        let re = w.get(i, i).real().clone();
        *w.get_mut(i, i) = Complex::with_val(prec, (re, 0));
    }
    w
}

/// Mean-zero modes `−n..=n` without `0`.
pub fn mean_zero_modes(n: usize) -> Vec<i64> {
    let n = n as i64;
    (-n..=n).filter(|&k| k != 0).collect()
}

/// Factored controllability Gramian; shared by the minimal-norm control and
/// the observability constant.
#[derive(Debug)]
pub struct GramianSystem {
    n: usize,
    horizon: f64,
    system: HermitianSystem,
}

impl GramianSystem {
    pub fn new(op: &ControlOperator, spec: &Spectrum, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::validation("T", "horizon must be positive and finite"));
        }
        let system = mp::factor_adaptive(|prec| controllability_gramian(op, spec, horizon, prec))
            .map_err(|b| {
                Error::Observability(format!(
                    "Gramian on [0, {horizon}] is not positive definite at {} bits (cond ≈ {:e})",
                    b.prec, b.cond
                ))
            })?;
        Ok(Self {
            n: spec.order(),
            horizon,
            system,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn cond(&self) -> f64 {
        self.system.cond
    }

    pub fn precision(&self) -> u32 {
        self.system.prec
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        self.system.matrix.to_c64()
    }

    /// Smallest eigenvalue `δ²`.
    pub fn lambda_min(&self) -> f64 {
        self.system.lambda_min()
    }

    /// Unit eigenvector for the smallest eigenvalue, as ψ-coefficients on `−n..=n`.
    pub fn minimizer(&self) -> Vec<C64> {
        let (_, vecs) = dense::hermitian_eigen(&self.system.inverse.to_c64());
        let top = vecs.ncols() - 1;
        let mut out = vec![C64::new(0.0, 0.0); 2 * self.n + 1];
        for (i, &k) in mean_zero_modes(self.n).iter().enumerate() {
            out[slot(k, self.n)] = vecs[(i, top)];
        }
        out
    }

    pub(crate) fn solve(&self, c: &[Complex]) -> Vec<Complex> {
        self.system.solve(c)
    }

    pub(crate) fn apply(&self, x: &[Complex]) -> Vec<Complex> {
        self.system.matrix.mul_vec(x)
    }
}

/// Minimal-norm control `h(t) = G U(T−t)* x`, `W_T x = c`.
#[derive(Clone, Debug)]
pub struct HumControl {
    n: usize,
    horizon: f64,
    /// `x` on mean-zero modes.
    x: Vec<Complex>,
    /// `W_T x` on ψ-coefficients `−n..=n` (the forced response at `T`).
    reached: Vec<C64>,
    norm_sqr: Float,
}

impl HumControl {
    pub fn solve(gramian: &GramianSystem, c: &[C64]) -> Self {
        let n = gramian.n;
        let prec = gramian.precision();
        let modes = mean_zero_modes(n);
        let rhs: Vec<Complex> = modes.iter().map(|&k| mp::from_c64(prec, c[slot(k, n)])).collect();
        let x = gramian.solve(&rhs);
        let wx = gramian.apply(&x);
        let mut norm_sqr = Float::new(prec);
        for (xi, wi) in x.iter().zip(&wx) {
            let p = Complex::with_val(prec, xi.clone().conj() * wi);
            norm_sqr += p.real();
        }
        let mut reached = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for (i, &k) in modes.iter().enumerate() {
            reached[slot(k, n)] = mp::to_c64(&wx[i]);
        }
        Self {
            n,
            horizon: gramian.horizon(),
            x,
            reached,
            norm_sqr,
        }
    }

    /// `‖h‖²_{L²(0,T;L²)} = xᴴ W_T x`.
    pub fn norm_sqr_mp(&self) -> &Float {
        &self.norm_sqr
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr.clone().sqrt().to_f64()
    }

    /// `∫₀ᵀ U(T−s) G h(s) ds` on ψ-coefficients.
    pub fn forced_response(&self) -> &[C64] {
        &self.reached
    }

    /// `u(T) = U(T)u₀ + W_T x`.
    pub fn terminal_state(&self, u0: &TorusFunction, spec: &Spectrum) -> Result<TorusFunction> {
        let n = self.n;
        let psi = u0.resized(n).psi_coeffs();
        let coeffs: Vec<C64> = (0..2 * n + 1)
            .map(|k| mp::phase_f64(spec.lambda(dense::mode(k, n)), self.horizon) * psi[k] + self.reached[k])
            .collect();
        TorusFunction::from_psi_coeffs_auto(n, &coeffs, u0.is_real())
    }

    /// ψ-coefficients of `h(·, t) = G (e^{iλ_k(T−t)} x_k)_k`.
    pub fn mode_values(&self, op: &ControlOperator, spec: &Spectrum, t: f64) -> Vec<C64> {
        let n = self.n;
        let prec = self.norm_sqr.prec();
        let mut y = vec![Complex::new(prec); 2 * n + 1];
        for (i, &k) in mean_zero_modes(n).iter().enumerate() {
            let ph = mp::cis_mul(prec, spec.lambda(k), self.horizon - t);
            y[slot(k, n)] = Complex::with_val(prec, &self.x[i] * ph);
        }
        MpMatrix::from_c64(op.matrix(), prec)
            .mul_vec(&y)
            .iter()
            .map(mp::to_c64)
            .collect()
    }
}

/// `‖h_HUM‖ ≤ ‖h_moment‖ + slack`, decided at extended precision.
pub fn hum_not_larger(hum: &HumControl, moment: &ControlSignal, family: &BiorthogonalFamily, slack: f64) -> bool {
    let prec = hum.norm_sqr.prec().max(family.precision());
    let a = Float::with_val(prec, hum.norm_sqr_mp()).sqrt();
    let b = Float::with_val(prec, moment.norm_sqr_mp(family, 0.0)).sqrt();
    a <= b + slack
}

/// Uniform-grid samples `(t, x, h)` of a control, `h` taken as real part.
pub fn control_samples_csv(
    times: &[f64],
    grid: usize,
    mut modes_at: impl FnMut(f64) -> Vec<C64>,
) -> Result<String> {
    use std::fmt::Write as _;
    let mut out = String::from("t,x,h\n");
    for &t in times {
        let psi = modes_at(t);
        let n = (psi.len() - 1) / 2;
        let f = TorusFunction::from_psi_coeffs(n, &psi, false)?;
        for (j, v) in f.synthesize(grid).iter().enumerate() {
            let x = 2.0 * PI * j as f64 / grid as f64;
            let _ = writeln!(out, "{t:.17e},{x:.17e},{:.17e}", v.re);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::BumpProfile;
    use crate::random::random_pair;

    fn setup(alpha: f64, n: usize) -> (ControlOperator, Spectrum) {
        let op = ControlOperator::new(BumpProfile::default_bump(2 * n), n).unwrap();
        (op, Spectrum::new(alpha, 0.0, n).unwrap())
    }

    #[test]
    fn single_exponential_family() {
        let fam = BiorthogonalFamily::from_lambdas(vec![0.0], 1.0).unwrap();
        assert!((fam.dual_coefficients()[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let q = fam.eval_q(0.3);
        assert!((q[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn gram_diagonal_is_horizon() {
        let spec = Spectrum::new(1.0, 0.0, 6).unwrap();
        let fam = BiorthogonalFamily::build(&spec, 0.7).unwrap();
        let g = fam.gram();
        for i in 0..fam.len() {
            assert_eq!(g[(i, i)], C64::new(0.7, 0.0));
        }
    }

    #[test]
    fn biorthogonality_by_fine_quadrature() {
        let spec = Spectrum::new(1.0, 0.0, 8).unwrap();
        let fam = BiorthogonalFamily::build(&spec, 1.0).unwrap();
        assert!(fam.biorthogonality_residual() < 1e-30);
        let quad = fam.biorthogonality_by_quadrature(500);
        assert!(quad < 1e-8, "quadrature biorthogonality defect {quad:e}");
    }

    #[test]
    fn uniform_singletons_closed_form() {
        let n = 6;
        let op = ControlOperator::new(BumpProfile::uniform(2 * n), n).unwrap();
        let spec = Spectrum::new(0.1, 0.0, n).unwrap();
        let mc = MomentControl::new(&op, &spec, 1.0).unwrap();
        let c: Vec<C64> = (0..2 * n + 1)
            .map(|i| if i == n { C64::new(0.0, 0.0) } else { C64::new(0.1 * i as f64, -0.05) })
            .collect();
        let sig = mc.solve_coefficients(&c).unwrap();
        for k in -(n as i64)..=(n as i64) {
            let expect = if k == 0 {
                C64::new(0.0, 0.0)
            } else {
                2.0 * PI * c[slot(k, n)] * mp::phase_f64(-spec.lambda(k), 1.0)
            };
            assert!((sig.coefficient(k) - expect).norm() < 1e-13);
        }
        let zero = mc.solve_coefficients(&vec![C64::new(0.0, 0.0); 2 * n + 1]).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn clustered_control_reaches_target() {
        let n = 16;
        let (op, spec) = setup(1.0, n);
        let mc = MomentControl::new(&op, &spec, 1.0).unwrap();
        let (u0, u1) = random_pair(11, n, 1.0);
        let p = ControlProblem::new(1.0, 0.0, 1.0, 1.0, u0, u1).unwrap();
        let sig = mc.synthesize(&p).unwrap();
        assert_eq!(sig.coefficient(0), C64::new(0.0, 0.0));
        let r = mc.report(&p, &sig).unwrap();
        assert!(r.terminal_residual < 1e-8, "{r:?}");
        assert!(r.moment_residual < 1e-9, "{r:?}");
        assert!(r.symmetry_defect < 1e-12, "{r:?}");
        assert!(r.symmetrized_moment_change < 1e-9);
        let quad = mc.moments_by_quadrature(&sig, 500);
        let closed = mc.moments(&sig);
        let gap = max_diff(&quad, &closed, false, n);
        assert!(gap < 1e-8, "closed form vs quadrature {gap:e}");
    }

    #[test]
    fn free_flow_target_needs_no_control() {
        let n = 8;
        let (op, spec) = setup(1.0, n);
        let mc = MomentControl::new(&op, &spec, 0.5).unwrap();
        let (u0, _) = random_pair(3, n, 0.0);
        let u1 = crate::operators::evolve_free_with(&u0, 0.5, &spec);
        let p = ControlProblem::new(1.0, 0.0, 0.5, 0.0, u0, u1).unwrap();
        let sig = mc.synthesize(&p).unwrap();
        assert!(sig.norm(mc.family(), 0.0) < 1e-10);
    }

    #[test]
    fn mean_mismatch_rejected() {
        let u0 = TorusFunction::constant(1.0, 4);
        let u1 = TorusFunction::constant(2.0, 4);
        assert!(matches!(
            ControlProblem::new(1.0, 0.0, 1.0, 0.0, u0, u1),
            Err(Error::MeanMismatch { .. })
        ));
    }

    #[test]
    fn hum_is_not_larger_and_reaches_target() {
        let n = 8;
        let (op, spec) = setup(7.0 / 3.0, n);
        let t = 0.5;
        let mc = MomentControl::new(&op, &spec, t).unwrap();
        let gram = GramianSystem::new(&op, &spec, t).unwrap();
        let (u0, u1) = random_pair(5, n, 0.0);
        let p = ControlProblem::new(7.0 / 3.0, 0.0, t, 0.0, u0.clone(), u1.clone()).unwrap();
        let c = p.reduce_to_zero_start(&spec);
        let sig = mc.synthesize(&p).unwrap();
        let hum = HumControl::solve(&gram, &c);
        let reached = hum.terminal_state(&u0, &spec).unwrap();
        assert!(reached.sub(&u1).sobolev_norm(0.0) / u1.sobolev_norm(0.0) < 1e-8);
        assert!(hum_not_larger(&hum, &sig, mc.family(), 1e-8));
        assert!(hum.norm() <= sig.norm(mc.family(), 0.0) + 1e-8);
    }

    #[test]
    fn gramian_closed_form_matches_quadrature() {
        let n = 6;
        let (op, spec) = setup(1.0, n);
        let t = 0.8;
        let w = controllability_gramian(&op, &spec, t, 128).to_c64();
        let modes = mean_zero_modes(n);
        let rule = quadrature::default_rule();
        let gg = op.gg_star();
        for (i, &k) in modes.iter().enumerate().step_by(3) {
            for (j, &l) in modes.iter().enumerate().step_by(2) {
                let dl = spec.lambda(k) - spec.lambda(l);
                let q = rule.integrate(0.0, t, 400, |s| C64::new(0.0, -dl * s).exp())
                    * gg[(slot(k, n), slot(l, n))];
                assert!((q - w[(i, j)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn intermediate_state_is_continuous_and_mean_preserving() {
        let n = 8;
        let (op, spec) = setup(1.0, n);
        let mc = MomentControl::new(&op, &spec, 1.0).unwrap();
        let (u0, u1) = random_pair(9, n, 0.0);
        let p = ControlProblem::new(1.0, 0.0, 1.0, 0.0, u0.clone(), u1.clone()).unwrap();
        let sig = mc.synthesize(&p).unwrap();
        let near_end = mc.evolve_controlled(&u0, &sig, 1.0 - 1e-9).unwrap();
        let end = mc.terminal_state(&u0, &sig).unwrap();
        assert!(near_end.sub(&end).sobolev_norm(0.0) < 1e-5);
        for t in [0.0, 0.25, 0.5] {
            let u = mc.evolve_controlled(&u0, &sig, t).unwrap();
            assert!((u.mean() - u0.mean()).norm() < 1e-12);
        }
        let start = mc.evolve_controlled(&u0, &sig, 0.0).unwrap();
        assert!(start.sub(&u0).sobolev_norm(0.0) < 1e-12);
    }

    #[test]
    fn linearity_in_target() {
        let n = 8;
        let (op, spec) = setup(0.1, n);
        let mc = MomentControl::new(&op, &spec, 1.0).unwrap();
        let (_, u1) = random_pair(21, n, 0.0);
        let zero = TorusFunction::constant(u1.mean().re, n);
        let p1 = ControlProblem::new(0.1, 0.0, 1.0, 0.0, zero.clone(), u1.clone()).unwrap();
        let scaled = u1.project_mean_zero().scaled(2.5).add(&zero);
        let p2 = ControlProblem::new(0.1, 0.0, 1.0, 0.0, zero, scaled).unwrap();
        let h1 = mc.synthesize(&p1).unwrap().coefficients();
        let h2 = mc.synthesize(&p2).unwrap().coefficients();
        for (a, b) in h1.iter().zip(&h2) {
            assert!((a * 2.5 - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
    }
}
