//! Scenario files.
//!
//! A scenario is a TOML document. Every key except `experiment`,
//! `[system].alpha` and `[discretization].n` has a default.
//!
//! ```toml
//! experiment = "control"      # spectrum | simulate | control | stabilize | observability
//! seed = 7                    # drives every random draw (ChaCha8)
//! output = "out/control"      # directory for report.json and CSVs
//! T = 1.0                     # horizon
//! sobolev_s = 1.0             # norm used for residuals and decay histories
//!
//! [system]
//! alpha = 2.3333333333333335
//! mu = 0.3
//! mean_shift = false          # states are u = v + mu; the core runs on v
//!
//! [discretization]
//! n = 16                      # modes -n..=n
//! n_sim = 256                 # grid points for sampled CSV output
//!
//! [bump]                      # uniform | raised_cosine | smooth_exp_bump | explicit
//! kind = "raised_cosine"
//! center = 3.141592653589793
//! width = 1.5707963267948966
//!
//! [initial]                   # preset | coefficients | random
//! kind = "random"
//! norm = 1.0
//! mean = 0.25
//!
//! [target]                    # also: rest (constant [u0]) | free_flow (U(T)u0)
//! kind = "preset"
//! name = "cos"
//! k = 2
//! amplitude = 0.5
//! mean = 0.25
//!
//! [simulate]
//! t_end = 2.0
//! samples = 101
//!
//! [stabilize]
//! law = "gramian"             # simple | gramian
//! lambda = 1.0
//! samples = 201               # t_end defaults to a span fitted to the decay rate
//!
//! [observability]
//! horizons = [0.01, 0.1, 1.0]
//!
//! [sweep]                     # used by `sweep`; empty lists keep the base value
//! alpha = [0.1, 1.0]
//! mu = [0.0, 0.3]
//! T = [0.05, 1.0]
//! n = [8, 16]
//! replicates = 2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::operators::{BumpKind, BumpProfile};
use crate::random::{derive_seed, random_state};
use crate::spectral::TorusFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Spectrum,
    Simulate,
    Control,
    Stabilize,
    Observability,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Control => "control",
            ExperimentKind::Stabilize => "stabilize",
            ExperimentKind::Observability => "observability",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub alpha: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub mean_shift: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub n: usize,
    #[serde(default = "default_n_sim")]
    pub n_sim: usize,
}

fn default_n_sim() -> usize {
    256
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Zero,
    Cos,
    Sin,
    /// `ψ_k`.
    Psi,
}

/// How a state is specified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Preset {
        name: PresetName,
        #[serde(default = "one_i64")]
        k: i64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        mean: f64,
    },
    /// `f̂(k)` as `[k, re, im]`.
    Coefficients { coeffs: Vec<(i64, f64, f64)> },
    /// Seeded mean-zero state with `H^s` norm `norm` (`s` defaults to
    /// `sobolev_s`), plus the constant `mean`.
    Random {
        #[serde(default = "one")]
        norm: f64,
        #[serde(default)]
        s: Option<f64>,
        #[serde(default)]
        mean: f64,
    },
    /// Target only: the constant `[u₀]`.
    Rest,
    /// Target only: `U(T)u₀`.
    FreeFlow,
}

fn one() -> f64 {
    1.0
}

fn one_i64() -> i64 {
    1
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec::Random {
            norm: 1.0,
            s: None,
            mean: 0.0,
        }
    }
}

fn default_target() -> StateSpec {
    StateSpec::Rest
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    101
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            t_end: None,
            samples: default_samples(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawName {
    Simple,
    Gramian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizeConfig {
    #[serde(default = "default_law")]
    pub law: LawName,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_decay_samples")]
    pub samples: usize,
}

fn default_law() -> LawName {
    LawName::Gramian
}

fn default_decay_samples() -> usize {
    201
}

impl Default for StabilizeConfig {
    fn default() -> Self {
        Self {
            law: default_law(),
            lambda: 1.0,
            t_end: None,
            samples: default_decay_samples(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilityConfig {
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
}

fn default_horizons() -> Vec<f64> {
    vec![0.01, 0.1, 1.0]
}

impl Default for ObservabilityConfig {
    fn default() -> Self {
        Self {
            horizons: default_horizons(),
        }
    }
}

/// Parameter grid for `sweep`; empty lists keep the base scenario's value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub mu: Vec<f64>,
    #[serde(default, rename = "T")]
    pub horizon: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default = "one_usize")]
    pub replicates: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(rename = "T", default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub sobolev_s: f64,
    pub system: SystemConfig,
    pub discretization: Discretization,
    #[serde(default)]
    pub bump: BumpKind,
    #[serde(default)]
    pub initial: StateSpec,
    #[serde(default = "default_target")]
    pub target: StateSpec,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub stabilize: StabilizeConfig,
    #[serde(default)]
    pub observability: ObservabilityConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that replace scenario keys when present.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub n: Option<usize>,
    pub horizon: Option<f64>,
    pub s: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub law: Option<LawName>,
    pub lambda: Option<f64>,
    pub horizons: Option<Vec<f64>>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// A scenario with every optional key at its default.
    pub fn new(experiment: ExperimentKind, alpha: f64, mu: f64, n: usize) -> Self {
        Self {
            experiment,
            seed: 0,
            output: default_output(),
            horizon: 1.0,
            sobolev_s: 0.0,
            system: SystemConfig {
                alpha,
                mu,
                mean_shift: false,
            },
            discretization: Discretization {
                n,
                n_sim: default_n_sim(),
            },
            bump: BumpKind::default(),
            initial: StateSpec::default(),
            target: default_target(),
            simulate: SimulateConfig::default(),
            stabilize: StabilizeConfig::default(),
            observability: ObservabilityConfig::default(),
            sweep: None,
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.alpha {
            self.system.alpha = v;
        }
        if let Some(v) = o.mu {
            self.system.mu = v;
        }
        if let Some(v) = o.n {
            self.discretization.n = v;
        }
        if let Some(v) = o.horizon {
            self.horizon = v;
        }
        if let Some(v) = o.s {
            self.sobolev_s = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.output {
            self.output = v.clone();
        }
        if let Some(v) = o.law {
            self.stabilize.law = v;
        }
        if let Some(v) = o.lambda {
            self.stabilize.lambda = v;
        }
        if let Some(v) = &o.horizons {
            self.observability.horizons = v.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("system.alpha", self.system.alpha)?;
        finite("system.mu", self.system.mu)?;
        positive("T", self.horizon)?;
        if !(self.sobolev_s >= 0.0 && self.sobolev_s.is_finite()) {
            return Err(Error::validation("sobolev_s", "must be finite and ≥ 0"));
        }
        let n = self.discretization.n;
        if n < 1 {
            return Err(Error::validation("discretization.n", "must be at least 1"));
        }
        if self.discretization.n_sim < 2 * n + 1 {
            return Err(Error::validation(
                "discretization.n_sim",
                format!("must be at least 2n+1 = {}", 2 * n + 1),
            ));
        }
        BumpProfile::new(self.bump.clone(), 2 * n).map_err(|e| Error::validation("bump", e.to_string()))?;
        validate_state("initial", &self.initial, false)?;
        validate_state("target", &self.target, true)?;
        if let Some(t) = self.simulate.t_end {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::validation("simulate.t_end", "must be finite and ≥ 0"));
            }
        }
        if self.simulate.samples < 2 {
            return Err(Error::validation("simulate.samples", "must be at least 2"));
        }
        positive("stabilize.lambda", self.stabilize.lambda)?;
        if let Some(t) = self.stabilize.t_end {
            positive("stabilize.t_end", t)?;
        }
        if self.stabilize.samples < 10 {
            return Err(Error::validation("stabilize.samples", "must be at least 10"));
        }
        if self.observability.horizons.is_empty() {
            return Err(Error::validation("observability.horizons", "must not be empty"));
        }
        for &t in &self.observability.horizons {
            positive("observability.horizons", t)?;
        }
        if let Some(sw) = &self.sweep {
            for &a in &sw.alpha {
                positive("sweep.alpha", a)?;
            }
            for &m in &sw.mu {
                finite("sweep.mu", m)?;
            }
            for &t in &sw.horizon {
                positive("sweep.T", t)?;
            }
            if sw.n.contains(&0) {
                return Err(Error::validation("sweep.n", "entries must be at least 1"));
            }
            if sw.replicates == 0 {
                return Err(Error::validation("sweep.replicates", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Canonical JSON of the resolved scenario.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn bump_profile(&self) -> Result<BumpProfile> {
        BumpProfile::new(self.bump.clone(), 2 * self.discretization.n)
    }

    /// The state `u` described by `spec` (before any mean shift).
    pub fn build_state(&self, spec: &StateSpec, stream: u64) -> Result<TorusFunction> {
        let n = self.discretization.n;
        match spec {
            StateSpec::Preset {
                name,
                k,
                amplitude,
                mean,
            } => {
                let k = *k;
                if k.unsigned_abs() as usize > n {
                    return Err(Error::validation("preset.k", format!("|k| must not exceed n = {n}")));
                }
                let base = TorusFunction::constant(*mean, n);
                let a = *amplitude;
                let wave = match name {
                    PresetName::Zero => TorusFunction::zeros(n),
                    PresetName::Cos => TorusFunction::from_modes(
                        n,
                        &[(k, (a / 2.0).into()), (-k, (a / 2.0).into())],
                        true,
                    )?,
                    PresetName::Sin => TorusFunction::from_modes(
                        n,
                        &[(k, crate::C64::new(0.0, -a / 2.0)), (-k, crate::C64::new(0.0, a / 2.0))],
                        true,
                    )?,
                    PresetName::Psi => TorusFunction::psi(k, n).scaled(a),
                };
                if k == 0 && *name != PresetName::Zero && *name != PresetName::Psi {
                    return Err(Error::validation("preset.k", "cos/sin presets need k ≠ 0"));
                }
                Ok(base.add(&wave))
            }
            StateSpec::Coefficients { coeffs } => {
                let symmetric = coeffs.iter().all(|&(k, re, im)| {
                    coeffs
                        .iter()
                        .any(|&(j, r2, i2)| j == -k && r2 == re && i2 == -im)
                });
                TorusFunction::from_triples(coeffs, Some(n), symmetric)
            }
            StateSpec::Random { norm, s, mean } => {
                let s = s.unwrap_or(self.sobolev_s);
                let f = random_state(derive_seed(self.seed, stream), n, s, *norm);
                Ok(f.add(&TorusFunction::constant(*mean, n)))
            }
            StateSpec::Rest | StateSpec::FreeFlow => Err(Error::validation(
                "initial",
                "rest and free_flow describe targets only",
            )),
        }
    }

    /// All scenarios of the sweep grid, with per-run seeds and output
    /// subdirectories `run_0000`, `run_0001`, ….
    pub fn expand_sweep(&self) -> Vec<Scenario> {
        let sw = self.sweep.clone().unwrap_or_default();
        let pick = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
        let alphas = pick(&sw.alpha, self.system.alpha);
        let mus = pick(&sw.mu, self.system.mu);
        let horizons = pick(&sw.horizon, self.horizon);
        let ns = if sw.n.is_empty() {
            vec![self.discretization.n]
        } else {
            sw.n.clone()
        };
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &mu in &mus {
                for &t in &horizons {
                    for &n in &ns {
                        for _ in 0..sw.replicates.max(1) {
                            let index = out.len();
                            let mut s = self.clone();
                            s.sweep = None;
                            s.system.alpha = alpha;
                            s.system.mu = mu;
                            s.horizon = t;
                            s.discretization.n = n;
                            s.discretization.n_sim = s.discretization.n_sim.max(2 * n + 1);
                            s.seed = derive_seed(self.seed, index as u64);
                            s.output = self.output.join(format!("run_{index:04}"));
                            out.push(s);
                        }
                    }
                }
            }
        }
        out
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, "must be positive and finite"))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, "must be finite"))
    }
}

fn validate_state(field: &str, s: &StateSpec, target: bool) -> Result<()> {
    match s {
        StateSpec::Rest | StateSpec::FreeFlow if !target => {
            Err(Error::validation(field, "rest and free_flow describe targets only"))
        }
        StateSpec::Random { norm, s, mean } => {
            if !(*norm >= 0.0 && norm.is_finite()) {
                return Err(Error::validation(format!("{field}.norm"), "must be finite and ≥ 0"));
            }
            if let Some(s) = s {
                if !(*s >= 0.0 && s.is_finite()) {
                    return Err(Error::validation(format!("{field}.s"), "must be finite and ≥ 0"));
                }
            }
            finite(&format!("{field}.mean"), *mean)
        }
        StateSpec::Preset { amplitude, mean, .. } => {
            finite(&format!("{field}.amplitude"), *amplitude)?;
            finite(&format!("{field}.mean"), *mean)
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "spectrum"
[system]
alpha = 1.0
[discretization]
n = 8
"#;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_toml(MINIMAL).unwrap();
        assert_eq!(s.discretization.n_sim, 256);
        assert_eq!(s.horizon, 1.0);
        assert_eq!(s.target, StateSpec::Rest);
        assert_eq!(s.bump, BumpKind::default());
    }

    #[test]
    fn field_level_errors() {
        let bad = MINIMAL.replace("alpha = 1.0", "alpha = -1.0");
        match Scenario::from_toml(&bad) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "system.alpha"),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{MINIMAL}\nbogus = 1\n");
        assert!(matches!(Scenario::from_toml(&unknown), Err(Error::Toml(_))));
    }

    #[test]
    fn overrides_change_hash() {
        let mut s = Scenario::from_toml(MINIMAL).unwrap();
        let h0 = s.sha256();
        assert_eq!(h0, Scenario::from_toml(MINIMAL).unwrap().sha256());
        s.apply(&Overrides {
            mu: Some(0.3),
            ..Default::default()
        });
        assert_eq!(s.system.mu, 0.3);
        assert_ne!(s.sha256(), h0);
    }

    #[test]
    fn states_and_sweep() {
        let mut s = Scenario::from_toml(MINIMAL).unwrap();
        let u = s.build_state(&StateSpec::default(), 0).unwrap();
        assert!((u.sobolev_norm(0.0) - 1.0).abs() < 1e-12);
        let c = s
            .build_state(
                &StateSpec::Preset {
                    name: PresetName::Cos,
                    k: 1,
                    amplitude: 1.0,
                    mean: 0.5,
                },
                0,
            )
            .unwrap();
        assert!((c.synthesize_real(8)[0] - 1.5).abs() < 1e-14);
        s.sweep = Some(SweepConfig {
            alpha: vec![0.1, 1.0],
            n: vec![4, 8],
            replicates: 2,
            ..Default::default()
        });
        let runs = s.expand_sweep();
        assert_eq!(runs.len(), 8);
        assert_ne!(runs[0].seed, runs[1].seed);
        assert!(runs[7].output.ends_with("run_0007"));
    }
}
