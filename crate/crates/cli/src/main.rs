use std::path::{Path, PathBuf};
use std::process::ExitCode;

use benjamin_core::experiment::{self, Artifacts};
use benjamin_core::scenario::{ExperimentKind, LawName, Overrides, Scenario};
use benjamin_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Spectral simulation, exact control and feedback stabilization of the
/// linearized Benjamin equation on the torus.
///
/// Each subcommand reads an optional TOML scenario; flags override its keys.
/// Results go to `<output>/report.json` plus CSV files.
/// Exit codes: 0 success, 2 invalid input, 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "benjamin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, clusters and gaps.
    Spectrum(Common),
    /// Free evolution `U(t)u0`.
    Simulate(Common),
    /// Moment-method control from `u0` to `u1`, checked against the minimal-norm control.
    Control(Common),
    /// Closed-loop decay under `−GG*` or `−GG* L_λ⁻¹`.
    Stabilize(StabilizeArgs),
    /// Observability constant `δ(T)`.
    Observability(Common),
    /// Runs the scenario's `[sweep]` grid, one output directory per point.
    Sweep(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, short)]
    scenario: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Truncation order: modes -n..=n.
    #[arg(long)]
    n: Option<usize>,
    /// Horizon; `observability` accepts a comma-separated list.
    #[arg(long = "T", value_delimiter = ',')]
    horizon: Vec<f64>,
    /// Sobolev index for residuals and norms.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Law {
    Simple,
    Gramian,
}

#[derive(Args, Debug)]
struct StabilizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    law: Option<Law>,
    /// Requested decay rate for the Gramian law.
    #[arg(long)]
    lambda: Option<f64>,
}

fn overrides(c: &Common) -> Overrides {
    Overrides {
        alpha: c.alpha,
        mu: c.mu,
        n: c.n,
        horizon: c.horizon.first().copied(),
        s: c.s,
        seed: c.seed,
        output: c.out.clone(),
        ..Default::default()
    }
}

fn load(kind: ExperimentKind, c: &Common, extra: Overrides) -> Result<Scenario, Error> {
    if c.horizon.len() > 1 && kind != ExperimentKind::Observability {
        return Err(Error::validation("T", "a list of horizons is only accepted by `observability`"));
    }
    let mut scenario = match &c.scenario {
        Some(path) => Scenario::load(path)?,
        None => {
            let alpha = c
                .alpha
                .ok_or_else(|| Error::validation("alpha", "required when no scenario file is given"))?;
            let n = c
                .n
                .ok_or_else(|| Error::validation("n", "required when no scenario file is given"))?;
            Scenario::new(kind, alpha, c.mu.unwrap_or(0.0), n)
        }
    };
    scenario.experiment = kind;
    scenario.apply(&overrides(c));
    scenario.apply(&extra);
    scenario.validate()?;
    Ok(scenario)
}

fn write(artifacts: &Artifacts, dir: &Path) -> Result<(), Error> {
    artifacts.write_to(dir)?;
    for w in &artifacts.report.warnings {
        log::warn!("{w}");
    }
    println!("{}", dir.join("report.json").display());
    Ok(())
}

fn single(kind: ExperimentKind, c: &Common, extra: Overrides) -> Result<(), Error> {
    let scenario = load(kind, c, extra)?;
    let artifacts = experiment::run(&scenario)?;
    write(&artifacts, &scenario.output)
}

fn sweep(c: &Common) -> Result<(), Error> {
    let path = c
        .scenario
        .as_ref()
        .ok_or_else(|| Error::validation("scenario", "sweep needs a scenario file with a [sweep] table"))?;
    let mut scenario = Scenario::load(path)?;
    scenario.apply(&overrides(c));
    scenario.validate()?;
    let (summary, results) = experiment::run_sweep(&scenario)?;
    let mut worst = 0;
    for (entry, result) in summary.runs.iter().zip(&results) {
        match result {
            Ok(a) => a.write_to(Path::new(&entry.output))?,
            Err(e) => {
                log::error!("run {} failed: {e}", entry.index);
                worst = worst.max(e.exit_code());
            }
        }
    }
    std::fs::create_dir_all(&scenario.output)?;
    let file = scenario.output.join("sweep_summary.json");
    std::fs::write(&file, experiment::to_json_pretty(&summary))?;
    println!("{}", file.display());
    if worst != 0 {
        return Err(Error::Numerical(format!(
            "{} of {} sweep runs failed",
            results.iter().filter(|r| r.is_err()).count(),
            results.len()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let none = Overrides::default;
    let outcome = match &cli.command {
        Command::Spectrum(c) => single(ExperimentKind::Spectrum, c, none()),
        Command::Simulate(c) => single(ExperimentKind::Simulate, c, none()),
        Command::Control(c) => single(ExperimentKind::Control, c, none()),
        Command::Stabilize(a) => single(
            ExperimentKind::Stabilize,
            &a.common,
            Overrides {
                law: a.law.map(|l| match l {
                    Law::Simple => LawName::Simple,
                    Law::Gramian => LawName::Gramian,
                }),
                lambda: a.lambda,
                ..Default::default()
            },
        ),
        Command::Observability(c) => single(
            ExperimentKind::Observability,
            c,
            Overrides {
                horizons: (!c.horizon.is_empty()).then(|| c.horizon.clone()),
                ..Default::default()
            },
        ),
        Command::Sweep(c) => sweep(c),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
