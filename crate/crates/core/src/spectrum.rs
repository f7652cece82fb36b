//! Dispersion values `λ_k = k³ + 2μk − α k|k|` of the free generator, their
//! clusters (indices sharing one value) and the minimal gap `γ`.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance used to merge floating-point eigenvalues.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;

/// Pairs closer than this (relative to `max(1, |λ|)`) but not merged are
/// reported as near-resonant.
pub const NEAR_CLUSTER_FACTOR: f64 = 1e-3;

/// `k³ + 2μk − α k|k|`.
pub fn eigenvalue(k: i64, alpha: f64, mu: f64) -> f64 {
    let kf = k as f64;
    kf * kf * kf + 2.0 * mu * kf - alpha * kf * kf.abs()
}

/// Exact rational eigenvalue, for resonance decisions.
pub fn eigenvalue_exact(k: i64, alpha: Ratio<i128>, mu: Ratio<i128>) -> Ratio<i128> {
    let kk = Ratio::from_integer(k as i128);
    let abs_k = Ratio::from_integer(k.abs() as i128);
    kk * kk * kk + Ratio::from_integer(2) * mu * kk - alpha * kk * abs_k
}

/// How cluster membership is decided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exactness {
    /// Floating comparison with relative tolerance `tol`.
    Float { tol: f64 },
    /// Exact rational arithmetic on `α = p/q`, `μ = r/s`.
    Rational { alpha: Ratio<i64>, mu: Ratio<i64> },
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    alpha: f64,
    mu: f64,
    n: usize,
    exactness: Exactness,
    /// `λ_k` for `k = −n..=n`, snapped so that cluster members are bitwise equal.
    lambdas: Vec<f64>,
    /// Clusters ordered by increasing eigenvalue; indices ascending within.
    clusters: Vec<Vec<i64>>,
    cluster_of: Vec<usize>,
    gamma: f64,
    window_gamma: Option<f64>,
    warnings: Vec<String>,
}

/// JSON shape emitted by the `spectrum` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub alpha: f64,
    pub mu: f64,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub clusters: Vec<Vec<i64>>,
    pub gamma: f64,
    pub window_bound: i64,
    pub window_gamma: Option<f64>,
    pub window_consistent: bool,
    pub warnings: Vec<String>,
}

impl Spectrum {
    /// Floating-point spectrum with the default cluster tolerance.
    pub fn new(alpha: f64, mu: f64, n: usize) -> Result<Self> {
        Self::build(alpha, mu, n, Exactness::Float { tol: DEFAULT_CLUSTER_TOL })
    }

    pub fn with_tolerance(alpha: f64, mu: f64, n: usize, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::validation("tol", "cluster tolerance must be nonnegative"));
        }
        Self::build(alpha, mu, n, Exactness::Float { tol })
    }

    /// Spectrum with rational `α` and `μ`; clusters are decided exactly.
    pub fn exact(alpha: Ratio<i64>, mu: Ratio<i64>, n: usize) -> Result<Self> {
        let a = alpha
            .to_f64()
            .ok_or_else(|| Error::validation("alpha", "not representable"))?;
        let m = mu
            .to_f64()
            .ok_or_else(|| Error::validation("mu", "not representable"))?;
        Self::build(a, m, n, Exactness::Rational { alpha, mu })
    }

    fn build(alpha: f64, mu: f64, n: usize, exactness: Exactness) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::validation("alpha", "must be positive and finite"));
        }
        if !mu.is_finite() {
            return Err(Error::validation("mu", "must be finite"));
        }
        if n == 0 {
            return Err(Error::validation("n", "truncation order must be at least 1"));
        }
        let ni = n as i64;
        let clusters = partition(alpha, mu, n, exactness);
        if let Some(big) = clusters.iter().find(|c| c.len() > 3) {
            return Err(Error::ClusterTooLarge {
                indices: big.clone(),
            });
        }

        let mut lambdas = vec![0.0; 2 * n + 1];
        let mut cluster_of = vec![0; 2 * n + 1];
        for (ci, members) in clusters.iter().enumerate() {
            // Representative: smallest |k|, then smallest k.
            let rep = *members
                .iter()
                .min_by_key(|&&k| (k.abs(), k))
                .expect("clusters are nonempty");
            let value = match exactness {
                Exactness::Float { .. } => eigenvalue(rep, alpha, mu),
                Exactness::Rational { alpha, mu } => {
                    let v = eigenvalue_exact(rep, widen(alpha), widen(mu));
                    v.to_f64().unwrap_or_else(|| eigenvalue(rep, alpha_f(alpha), mu_f(mu)))
                }
            };
            for &k in members {
                lambdas[(k + ni) as usize] = value;
                cluster_of[(k + ni) as usize] = ci;
            }
        }

        let distinct: Vec<f64> = clusters
            .iter()
            .map(|c| lambdas[(c[0] + ni) as usize])
            .collect();
        let gamma = brute_force_gap(&distinct).ok_or_else(|| {
            Error::Configuration("spectrum has fewer than two distinct eigenvalues".into())
        })?;

        let bound = window_bound(alpha);
        let windowed: Vec<f64> = clusters
            .iter()
            .filter(|c| c.iter().any(|k| k.abs() <= bound))
            .map(|c| lambdas[(c[0] + ni) as usize])
            .collect();
        let window_gamma = brute_force_gap(&windowed);

        let mut warnings = Vec::new();
        let mut sorted = distinct.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        for w in sorted.windows(2) {
            let gap = w[1] - w[0];
            if gap > 0.0 && gap < NEAR_CLUSTER_FACTOR * w[0].abs().max(w[1].abs()).max(1.0) {
                let msg = format!(
                    "near-resonant eigenvalues {} and {} (gap {gap:e}); Gram matrix will be ill-conditioned",
                    w[0], w[1]
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        for c in clusters.iter().filter(|c| c.len() == 3 && !c.contains(&0)) {
            let msg = format!("three-member cluster without mode 0: {c:?}");
            log::info!("{msg}");
            warnings.push(msg);
        }

        Ok(Self {
            alpha,
            mu,
            n,
            exactness,
            lambdas,
            clusters,
            cluster_of,
            gamma,
            window_gamma,
            warnings,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    /// `λ_k` for `|k| ≤ n`.
    pub fn lambda(&self, k: i64) -> f64 {
        self.lambdas[(k + self.n as i64) as usize]
    }

    /// All `λ_k`, ordered `k = −n..=n`.
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn clusters(&self) -> &[Vec<i64>] {
        &self.clusters
    }

    /// Index into [`clusters`](Self::clusters) of the cluster holding `k`.
    pub fn cluster_of(&self, k: i64) -> usize {
        self.cluster_of[(k + self.n as i64) as usize]
    }

    /// One eigenvalue per cluster, in cluster order.
    pub fn distinct_lambdas(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| self.lambda(c[0])).collect()
    }

    /// Minimum spacing between distinct eigenvalues over all stored modes.
    pub fn gap_gamma(&self) -> f64 {
        self.gamma
    }

    /// Minimum spacing restricted to clusters meeting the window `|k| ≤ ⌊3α/2⌋+1`.
    pub fn window_gamma(&self) -> Option<f64> {
        self.window_gamma
    }

    /// `⌊3α/2⌋ + 1`.
    pub fn window_bound(&self) -> i64 {
        window_bound(self.alpha)
    }

    /// Whether the windowed minimum reproduces the full pairwise scan.
    pub fn window_consistent(&self) -> bool {
        self.window_gamma == Some(self.gamma)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Largest cluster size found.
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks that `|λ_{k+1} − λ_k|` increases for `window_bound ≤ k < n`.
    pub fn gaps_eventually_increasing(&self) -> bool {
        let start = self.window_bound().max(0);
        let n = self.n as i64;
        let gaps: Vec<f64> = (start..n)
            .map(|k| (eigenvalue(k + 1, self.alpha, self.mu) - eigenvalue(k, self.alpha, self.mu)).abs())
            .collect();
        gaps.windows(2).all(|w| w[1] > w[0])
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            alpha: self.alpha,
            mu: self.mu,
            n: self.n,
            lambdas: self.lambdas.clone(),
            clusters: self.clusters.clone(),
            gamma: self.gamma,
            window_bound: self.window_bound(),
            window_gamma: self.window_gamma,
            window_consistent: self.window_consistent(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Partition of `−n..=n` into groups of equal eigenvalue, ordered by value.
pub fn clusters(alpha: f64, mu: f64, n: usize, exactness: Exactness) -> Result<Vec<Vec<i64>>> {
    let parts = partition(alpha, mu, n, exactness);
    if let Some(big) = parts.iter().find(|c| c.len() > 3) {
        return Err(Error::ClusterTooLarge {
            indices: big.clone(),
        });
    }
    Ok(parts)
}

fn partition(alpha: f64, mu: f64, n: usize, exactness: Exactness) -> Vec<Vec<i64>> {
    let ni = n as i64;
    match exactness {
        Exactness::Rational { alpha, mu } => {
            let (a, m) = (widen(alpha), widen(mu));
            let mut groups: BTreeMap<Ratio<i128>, Vec<i64>> = BTreeMap::new();
            for k in -ni..=ni {
                groups.entry(eigenvalue_exact(k, a, m)).or_default().push(k);
            }
            groups.into_values().collect()
        }
        Exactness::Float { tol } => {
            let mut idx: Vec<(f64, i64)> = (-ni..=ni).map(|k| (eigenvalue(k, alpha, mu), k)).collect();
            idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut out: Vec<Vec<i64>> = Vec::new();
            let mut anchor = f64::NAN;
            for (v, k) in idx {
                let close = out.last().is_some()
                    && (v - anchor).abs() <= tol * v.abs().max(anchor.abs()).max(1.0);
                if close {
                    out.last_mut().unwrap().push(k);
                } else {
                    out.push(vec![k]);
                    anchor = v;
                }
            }
            for c in &mut out {
                c.sort_unstable();
            }
            out
        }
    }
}

/// `⌊3α/2⌋ + 1`.
pub fn window_bound(alpha: f64) -> i64 {
    (1.5 * alpha).floor() as i64 + 1
}

/// Minimum `|a − b|` over all pairs of distinct entries, by full pairwise scan.
pub fn brute_force_gap(values: &[f64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            let d = (a - b).abs();
            if d > 0.0 {
                best = Some(best.map_or(d, |x: f64| x.min(d)));
            }
        }
    }
    best
}

fn widen(r: Ratio<i64>) -> Ratio<i128> {
    Ratio::new(*r.numer() as i128, *r.denom() as i128)
}

fn alpha_f(r: Ratio<i64>) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn mu_f(r: Ratio<i64>) -> f64 {
    alpha_f(r)
}

/// Parses `"7/3"`, `"0.3"` or `"2"` into a rational when exactly representable
/// as a short fraction (decimal strings become `digits / 10^d`).
pub fn parse_rational(s: &str) -> Option<Ratio<i64>> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().ok()?;
        let q: i64 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Ratio::new(p, q));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if frac.len() > 12 {
        return None;
    }
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    let denom = 10_i64.checked_pow(frac.len() as u32)?;
    Some(Ratio::new(sign * digits, denom))
}
