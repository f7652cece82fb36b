//! Runs a [`Scenario`] and collects its report and CSV files.
//!
//! Every report carries `schema_version`, the experiment name, a provenance
//! block (toolkit version, SHA-256 of the resolved scenario, seed), the
//! resolved scenario itself and an experiment-specific `result`. Nothing
//! time- or host-dependent is recorded, so identical scenarios give
//! byte-identical `report.json` files.
//!
//! CSV schemas (schema version 1):
//!
//! | file | columns |
//! |------|---------|
//! | `spectrum.csv` | `k,lambda,cluster` |
//! | `norms.csv` | `t,L2_norm,Hs_norm,mean` |
//! | `final_state.csv`, `terminal_state.csv` | `x,value` (or `x,re,im`) |
//! | `control.csv` | `t,x,h` |
//! | `trajectory.csv` | `t,L2_distance,Hs_distance,mean` |
//! | `decay.csv` | `t,L2_norm,Hs_norm` |
//! | `observability.csv` | `T,delta` |

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::decay::{estimate_decay_rate, DecayFit};
use crate::error::{Error, Result};
use crate::moment::{control_samples_csv, hum_not_larger, ControlProblem, GramianSystem, HumControl, MomentControl, MomentReport};
use crate::operators::{evolve_free_with, ControlOperator};
use crate::parallel::par_map;
use crate::scenario::{ExperimentKind, LawName, Scenario, StateSpec};
use crate::spectral::TorusFunction;
use crate::spectrum::{Spectrum, SpectrumReport};
use crate::stabilization::{
    energy_identity_defects, observability_constant, observability_from, simulate_closed_loop, FeedbackLaw,
    GramianWeighted, Observability,
};
use crate::TOOLKIT_VERSION;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub toolkit_version: &'static str,
    pub scenario_sha256: String,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub provenance: Provenance,
    pub scenario: Scenario,
    pub result: serde_json::Value,
    pub warnings: Vec<String>,
}

/// A report and the CSV files that go next to it.
#[derive(Clone, Debug)]
pub struct Artifacts {
    pub report: Report,
    pub files: Vec<(String, String)>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

impl Artifacts {
    pub fn report_json(&self) -> String {
        to_json_pretty(&self.report)
    }

    /// Writes `report.json` and the CSV files into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.report_json())?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

pub fn run(scenario: &Scenario) -> Result<Artifacts> {
    scenario.validate()?;
    let mut warnings = Vec::new();
    let (result, files) = match scenario.experiment {
        ExperimentKind::Spectrum => run_spectrum(scenario, &mut warnings)?,
        ExperimentKind::Simulate => run_simulate(scenario)?,
        ExperimentKind::Control => run_control(scenario, &mut warnings)?,
        ExperimentKind::Stabilize => run_stabilize(scenario, &mut warnings)?,
        ExperimentKind::Observability => run_observability(scenario)?,
    };
    Ok(Artifacts {
        report: Report {
            schema_version: SCHEMA_VERSION,
            experiment: scenario.experiment.name(),
            provenance: Provenance {
                toolkit_version: TOOLKIT_VERSION,
                scenario_sha256: scenario.sha256(),
                seed: scenario.seed,
            },
            scenario: scenario.clone(),
            result,
            warnings,
        },
        files,
    })
}

/// One row of a sweep summary.
#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub alpha: f64,
    pub mu: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
    pub output: String,
    pub status: String,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub experiment: &'static str,
    pub provenance: Provenance,
    pub runs: Vec<SweepEntry>,
}

/// Runs every point of the sweep grid concurrently; results keep grid order.
pub fn run_sweep(base: &Scenario) -> Result<(SweepSummary, Vec<Result<Artifacts>>)> {
    base.validate()?;
    let runs = base.expand_sweep();
    let results = par_map(&runs, run);
    let entries = runs
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(index, (s, r))| SweepEntry {
            index,
            alpha: s.system.alpha,
            mu: s.system.mu,
            horizon: s.horizon,
            n: s.discretization.n,
            seed: s.seed,
            output: s.output.display().to_string(),
            status: match r {
                Ok(_) => "ok".into(),
                Err(e) => e.to_string(),
            },
            exit_code: r.as_ref().map(|_| 0).unwrap_or_else(|e| e.exit_code()),
        })
        .collect();
    let summary = SweepSummary {
        schema_version: SCHEMA_VERSION,
        experiment: base.experiment.name(),
        provenance: Provenance {
            toolkit_version: TOOLKIT_VERSION,
            scenario_sha256: base.sha256(),
            seed: base.seed,
        },
        runs: entries,
    };
    Ok((summary, results))
}

type Outcome = (serde_json::Value, Vec<(String, String)>);

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("result serializes")
}

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| if i + 1 == m { b } else { a + (b - a) * i as f64 / (m - 1) as f64 })
        .collect()
}

fn spectrum_of(s: &Scenario) -> Result<Spectrum> {
    Spectrum::new(s.system.alpha, s.system.mu, s.discretization.n)
}

/// Constant subtracted from user states before the core runs (`v = u − μ`).
fn shift(s: &Scenario) -> f64 {
    if s.system.mean_shift {
        s.system.mu
    } else {
        0.0
    }
}

fn shifted(u: &TorusFunction, by: f64) -> TorusFunction {
    if by == 0.0 {
        u.clone()
    } else {
        u.add(&TorusFunction::constant(by, u.order()))
    }
}

fn initial_state(s: &Scenario) -> Result<TorusFunction> {
    Ok(shifted(&s.build_state(&s.initial, 0)?, -shift(s)))
}

fn run_spectrum(s: &Scenario, warnings: &mut Vec<String>) -> Result<Outcome> {
    let spec = spectrum_of(s)?;
    let report: SpectrumReport = spec.report();
    warnings.extend(report.warnings.iter().cloned());
    let n = s.discretization.n as i64;
    let mut csv = String::from("k,lambda,cluster\n");
    for k in -n..=n {
        let _ = writeln!(csv, "{k},{:.17e},{}", spec.lambda(k), spec.cluster_of(k));
    }
    Ok((to_value(&report), vec![("spectrum.csv".into(), csv)]))
}

#[derive(Serialize)]
struct SimulateResult {
    t_end: f64,
    samples: usize,
    mean: (f64, f64),
    initial_norm_l2: f64,
    initial_norm_hs: f64,
    /// `max_t |‖u(t)‖ − ‖u₀‖|` in `H^0` and `H^s`.
    isometry_defect_l2: f64,
    isometry_defect_hs: f64,
    /// `‖U(−t)U(t)u₀ − u₀‖_{L²}` at `t_end`.
    group_law_defect: f64,
    mean_drift: f64,
}

fn run_simulate(s: &Scenario) -> Result<Outcome> {
    let spec = spectrum_of(s)?;
    let u0 = initial_state(s)?;
    let t_end = s.simulate.t_end.unwrap_or(s.horizon);
    let times = linspace(0.0, t_end, s.simulate.samples);
    let sv = s.sobolev_s;
    let (n0, ns) = (u0.sobolev_norm(0.0), u0.sobolev_norm(sv));
    let mut csv = String::from("t,L2_norm,Hs_norm,mean\n");
    let (mut d0, mut ds, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    let mut last = u0.clone();
    for &t in &times {
        let u = evolve_free_with(&u0, t, &spec);
        let (a, b) = (u.sobolev_norm(0.0), u.sobolev_norm(sv));
        d0 = d0.max((a - n0).abs());
        ds = ds.max((b - ns).abs());
        drift = drift.max((u.mean() - u0.mean()).norm());
        let m = u.mean().re + shift(s);
        let _ = writeln!(csv, "{t:.17e},{a:.17e},{b:.17e},{m:.17e}");
        last = u;
    }
    let back = evolve_free_with(&last, -t_end, &spec);
    let result = SimulateResult {
        t_end,
        samples: times.len(),
        mean: (u0.mean().re + shift(s), u0.mean().im),
        initial_norm_l2: n0,
        initial_norm_hs: ns,
        isometry_defect_l2: d0,
        isometry_defect_hs: ds,
        group_law_defect: back.sub(&u0).sobolev_norm(0.0),
        mean_drift: drift,
    };
    let files = vec![
        ("norms.csv".into(), csv),
        ("final_state.csv".into(), shifted(&last, shift(s)).samples_csv(s.discretization.n_sim)),
    ];
    Ok((to_value(&result), files))
}

#[derive(Serialize)]
struct ControlResult {
    moment: MomentReport,
    hum_control_norm: f64,
    hum_terminal_residual: f64,
    /// `‖h_HUM‖ ≤ ‖h_moment‖ + 1e−8`.
    hum_not_larger: bool,
    gamma: f64,
    clusters: Vec<Vec<i64>>,
    /// `max_t |[u(t)] − [u₀]|` over the sampled trajectory.
    mean_drift: f64,
    mean_shift: f64,
}

fn run_control(s: &Scenario, warnings: &mut Vec<String>) -> Result<Outcome> {
    let n = s.discretization.n;
    let spec = spectrum_of(s)?;
    warnings.extend(spec.warnings().iter().cloned());
    let op = ControlOperator::new(s.bump_profile()?, n)?;
    let u0 = initial_state(s)?;
    let u1 = match &s.target {
        StateSpec::Rest => TorusFunction::constant(u0.mean().re, n),
        StateSpec::FreeFlow => evolve_free_with(&u0, s.horizon, &spec),
        other => shifted(&s.build_state(other, 1)?, -shift(s)),
    };
    let problem = ControlProblem::new(s.system.alpha, s.system.mu, s.horizon, s.sobolev_s, u0.clone(), u1.clone())?;
    let mc = MomentControl::new(&op, &spec, s.horizon)?;
    let signal = mc.synthesize(&problem)?;
    let moment = mc.report(&problem, &signal)?;

    let gram = GramianSystem::new(&op, &spec, s.horizon)?;
    let hum = HumControl::solve(&gram, &problem.reduce_to_zero_start(&spec));
    let hum_end = hum.terminal_state(&u0, &spec)?;
    let denom = u1.sobolev_norm(s.sobolev_s);
    let hum_diff = hum_end.sub(&u1).sobolev_norm(s.sobolev_s);

    let times = linspace(0.0, s.horizon, 11);
    let mut traj = String::from("t,L2_distance,Hs_distance,mean\n");
    let mut drift = 0.0f64;
    let mut terminal = u0.clone();
    for &t in &times {
        let u = mc.evolve_controlled(&u0, &signal, t)?;
        drift = drift.max((u.mean() - u0.mean()).norm());
        let d = u.sub(&u1);
        let _ = writeln!(
            traj,
            "{t:.17e},{:.17e},{:.17e},{:.17e}",
            d.sobolev_norm(0.0),
            d.sobolev_norm(s.sobolev_s),
            u.mean().re + shift(s)
        );
        terminal = u;
    }
    let control_csv = control_samples_csv(&times, s.discretization.n_sim, |t| signal.mode_values(mc.family(), t))?;
    if !signal.is_zero() && moment.symmetry_defect > 1e-8 {
        warnings.push(format!("control coefficients deviate from real symmetry by {:e}", moment.symmetry_defect));
    }
    let result = ControlResult {
        hum_control_norm: hum.norm(),
        hum_terminal_residual: if denom > 0.0 { hum_diff / denom } else { hum_diff },
        hum_not_larger: hum_not_larger(&hum, &signal, mc.family(), 1e-8),
        gamma: spec.gap_gamma(),
        clusters: spec.clusters().to_vec(),
        mean_drift: drift,
        mean_shift: shift(s),
        moment,
    };
    let files = vec![
        ("trajectory.csv".into(), traj),
        ("control.csv".into(), control_csv),
        ("terminal_state.csv".into(), shifted(&terminal, shift(s)).samples_csv(s.discretization.n_sim)),
    ];
    Ok((to_value(&result), files))
}

#[derive(Serialize)]
struct StabilizeResult {
    law: LawName,
    lambda: Option<f64>,
    #[serde(rename = "T")]
    horizon: f64,
    fitted_rate: f64,
    #[serde(rename = "M")]
    constant: f64,
    fit: DecayFit,
    spectral_abscissa: f64,
    delta: f64,
    cond_l: Option<f64>,
    mean_drift: f64,
    /// Simple law: `max |d/dt ½‖u‖² + ‖Gu‖²| / ‖u₀‖²` at 20 interior times.
    energy_identity_defect: Option<f64>,
    /// Simple law: `‖u(t) − [u₀]‖_{L²}` nonincreasing (relative slack 1e−12).
    monotone: Option<bool>,
    /// Gramian law: abscissa ≤ −λ(1 − 1e−6).
    abscissa_bound_holds: Option<bool>,
    /// Gramian law: fitted rate ≥ 0.99 λ.
    rate_bound_holds: Option<bool>,
}

fn run_stabilize(s: &Scenario, warnings: &mut Vec<String>) -> Result<Outcome> {
    let n = s.discretization.n;
    let spec = spectrum_of(s)?;
    let op = ControlOperator::new(s.bump_profile()?, n)?;
    let lambda = s.stabilize.lambda;
    let (law, cond_l) = match s.stabilize.law {
        LawName::Simple => (FeedbackLaw::simple(&op, &spec)?, None),
        LawName::Gramian => {
            let l = GramianWeighted::build(&op, &spec, lambda, s.horizon)?;
            (FeedbackLaw::gramian(&op, &spec, &l)?, Some(l.cond()))
        }
    };
    warnings.extend(law.warnings().iter().cloned());
    let abscissa = law.spectral_abscissa();
    if !(abscissa < 0.0) {
        return Err(Error::Numerical(format!(
            "closed-loop spectral abscissa {abscissa:e} is not negative"
        )));
    }
    let t_end = s.stabilize.t_end.unwrap_or(25.0 / -abscissa);
    let times = linspace(0.0, t_end, s.stabilize.samples);
    let u0 = initial_state(s)?;
    let traj = simulate_closed_loop(&u0, &law, &times)?;
    let fit = estimate_decay_rate(&traj.norm_history(0.0))?;
    let delta = observability_constant(&op, &spec, s.horizon)?.delta;
    let u0_sq = u0.project_mean_zero().sobolev_norm(0.0).powi(2);
    let (energy, monotone) = if s.stabilize.law == LawName::Simple {
        let fluct: Vec<TorusFunction> = traj.states.iter().map(|u| u.project_mean_zero()).collect();
        let step = (fluct.len() / 21).max(1);
        let picked: Vec<TorusFunction> = fluct.iter().skip(step).step_by(step).take(20).cloned().collect();
        let defects = energy_identity_defects(&op, &law, &picked, 1e-9);
        let worst = defects.iter().cloned().fold(0.0, f64::max);
        let norms = traj.fluctuation_norms(0.0);
        let mono = norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        (Some(if u0_sq > 0.0 { worst / u0_sq } else { worst }), Some(mono))
    } else {
        (None, None)
    };
    let (abs_ok, rate_ok) = if s.stabilize.law == LawName::Gramian {
        let a = abscissa <= -lambda * (1.0 - 1e-6);
        let r = fit.rate >= 0.99 * lambda;
        if a != r {
            warnings.push(format!(
                "abscissa check ({a}) and trajectory-fit check ({r}) disagree for λ = {lambda}"
            ));
        }
        (Some(a), Some(r))
    } else {
        (None, None)
    };
    let result = StabilizeResult {
        law: s.stabilize.law,
        lambda: (s.stabilize.law == LawName::Gramian).then_some(lambda),
        horizon: s.horizon,
        fitted_rate: fit.rate,
        constant: fit.constant,
        spectral_abscissa: abscissa,
        delta,
        cond_l,
        mean_drift: traj.mean_drift(),
        energy_identity_defect: energy,
        monotone,
        abscissa_bound_holds: abs_ok,
        rate_bound_holds: rate_ok,
        fit,
    };
    Ok((to_value(&result), vec![("decay.csv".into(), traj.decay_csv(s.sobolev_s))]))
}

#[derive(Serialize)]
struct ObservabilityResult {
    pairs: Vec<Observability>,
    /// `δ(T)` nondecreasing over the horizons sorted ascending.
    monotone: bool,
}

fn run_observability(s: &Scenario) -> Result<Outcome> {
    let n = s.discretization.n;
    let spec = spectrum_of(s)?;
    let op = ControlOperator::new(s.bump_profile()?, n)?;
    let mut horizons = s.observability.horizons.clone();
    horizons.sort_by(f64::total_cmp);
    let pairs = horizons
        .iter()
        .map(|&t| GramianSystem::new(&op, &spec, t).and_then(|g| observability_from(&g)))
        .collect::<Result<Vec<_>>>()?;
    let monotone = pairs.windows(2).all(|w| w[0].delta <= w[1].delta);
    let mut csv = String::from("T,delta\n");
    for p in &pairs {
        let _ = writeln!(csv, "{:.17e},{:.17e}", p.horizon, p.delta);
    }
    Ok((
        to_value(&ObservabilityResult { pairs, monotone }),
        vec![("observability.csv".into(), csv)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ExperimentKind;

    #[test]
    fn spectrum_report_lists_cluster() {
        let s = Scenario::new(ExperimentKind::Spectrum, 7.0 / 3.0, 0.0, 8);
        let a = run(&s).unwrap();
        let clusters = &a.report.result["clusters"];
        assert!(clusters.as_array().unwrap().iter().any(|c| c == &serde_json::json!([1, 2])));
        assert_eq!(a.report.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn free_flow_target_needs_no_control() {
        let mut s = Scenario::new(ExperimentKind::Control, 1.0, 0.3, 6);
        s.target = StateSpec::FreeFlow;
        s.sobolev_s = 1.0;
        let a = run(&s).unwrap();
        let norm = a.report.result["moment"]["control_norm"].as_f64().unwrap();
        assert!(norm <= 1e-10);
    }

    #[test]
    fn reports_are_reproducible() {
        let mut s = Scenario::new(ExperimentKind::Stabilize, 1.0, 0.0, 6);
        s.seed = 99;
        let a = run(&s).unwrap().report_json();
        let b = run(&s).unwrap().report_json();
        assert_eq!(a, b);
    }
}
