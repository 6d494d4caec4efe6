//! Command-line front end: simulate monitored trajectories, solve steady
//! states, validate record files and dilate channels.
//!
//! Exit codes signal the error category: 0 success, 1 I/O, 2 malformed
//! input, 3 physics violation, 4 instability or non-convergence,
//! 5 numerical degeneracy.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use gaussdyne::channel::DILATION_EPSILON;
use gaussdyne::dynamics::{evolve_unconditional_path, steady_state_lyapunov};
use gaussdyne::error::Error;
use gaussdyne::filtering::{
    simulate_trajectory_stream, steady_state_riccati, MonitoredModel, TrajectoryRecord,
};
use gaussdyne::io::{
    covariance_csv, format_float, trajectory_csv, Record, StateRecord, SymplecticRecord,
};
use gaussdyne::scenario::{
    BuiltScenario, MeasurementKind, MeasurementSection, Preset, ScenarioConfig, ScenarioSection,
};
use gaussdyne::state::GaussianState;

/// Environment variable naming the default output directory for relative
/// output paths.
const OUT_DIR_ENV: &str = "GAUSSDYNE_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "gaussdyne",
    version,
    about = "Gaussian quantum dynamics: monitored trajectories, steady states, channel tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate monitored quantum trajectories (or the unconditional moment
    /// flow when no measurement is configured) and write CSV output.
    Simulate(RunArgs),
    /// Solve for the steady state of the configured dynamics and print it
    /// with its certification report.
    SteadyState(RunArgs),
    /// Validate a record file (state, channel, drift_diffusion or
    /// symplectic) and report diagnostics.
    Validate {
        /// TOML record file.
        file: PathBuf,
    },
    /// Synthesize a symplectic dilation of a Gaussian channel record.
    Dilate {
        /// TOML channel record file.
        file: PathBuf,
        /// Output path for the symplectic record (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset override: opo | scattering.
    #[arg(long)]
    preset: Option<String>,
    /// Output path stem (directory resolved against $GAUSSDYNE_OUT_DIR).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Trajectory count override.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Integration step override.
    #[arg(long)]
    dt: Option<f64>,
    /// Run duration override.
    #[arg(long)]
    duration: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, category) = classify(&e);
            eprintln!("error[{category}]: {e}");
            ExitCode::from(code)
        }
    }
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Lib(Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(msg) => write!(f, "{msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn classify(e: &CliError) -> (u8, &'static str) {
    let err = match e {
        CliError::Io(_) => return (1, "io"),
        CliError::Lib(err) => err,
    };
    match err {
        Error::Parse(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::NotSquare { .. }
        | Error::OddDimension(_)
        | Error::ModeOutOfRange { .. }
        | Error::NotSymmetric(_)
        | Error::NotAntisymmetric(_)
        | Error::Unsupported(_) => (2, "config"),
        Error::UncertaintyViolation(_)
        | Error::NotPositiveSemidefinite(_)
        | Error::NotSymplectic(_)
        | Error::InvalidChannel(_)
        | Error::UnphysicalBath(_)
        | Error::InadmissibleDrift(_) => (3, "physics"),
        Error::Unstable(_) | Error::NoConvergence(_) | Error::CertificationFailed { .. } => {
            (4, "stability")
        }
        Error::Singular(_) | Error::DegenerateCompletion(_) | Error::StepRejected { .. } => {
            (5, "numerics")
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::SteadyState(args) => steady_state(args),
        Command::Validate { file } => validate(&file),
        Command::Dilate { file, out } => dilate(&file, out.as_deref()),
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Relative output paths land in $GAUSSDYNE_OUT_DIR (default: cwd).
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn default_config(preset: Preset) -> ScenarioConfig {
    ScenarioConfig {
        scenario: ScenarioSection {
            preset,
            chi: 0.25,
            gamma: 1.0,
            n_th: 0.0,
            omega: 1.0,
            rate: 0.7,
        },
        model: None,
        measurement: Some(MeasurementSection {
            kind: MeasurementKind::HomodyneX,
            s: None,
            efficiency: None,
            dark_noise: None,
            sigma_m: None,
        }),
        run: Default::default(),
    }
}

fn parse_preset(name: &str) -> Result<Preset, CliError> {
    match name {
        "opo" => Ok(Preset::Opo),
        "scattering" => Ok(Preset::Scattering),
        other => Err(CliError::Lib(Error::InvalidParameter(format!(
            "unknown preset '{other}' (expected opo or scattering)"
        )))),
    }
}

fn load_scenario(args: &RunArgs) -> Result<BuiltScenario, CliError> {
    let mut config = match &args.config {
        Some(path) => ScenarioConfig::from_toml_str(&read_to_string(path)?)?,
        None => {
            let preset = args
                .preset
                .as_deref()
                .ok_or_else(|| {
                    CliError::Lib(Error::InvalidParameter(
                        "either --config or --preset is required".into(),
                    ))
                })
                .and_then(parse_preset)?;
            default_config(preset)
        }
    };
    if let (Some(name), Some(_)) = (&args.preset, &args.config) {
        config.scenario.preset = parse_preset(name)?;
    }
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(n) = args.trajectories {
        config.run.trajectories = n;
    }
    if let Some(dt) = args.dt {
        config.run.dt = dt;
    }
    if let Some(duration) = args.duration {
        config.run.duration = duration;
    }
    Ok(config.build()?)
}

fn simulate(args: RunArgs) -> Result<(), CliError> {
    let built = load_scenario(&args)?;
    let run = &built.run;
    let stem = resolve_out(args.out.as_deref().unwrap_or(Path::new("trajectory")));
    let initial = GaussianState::vacuum(built.model.n_modes())?;

    match &built.measurement {
        Some(meas) => {
            let mm = MonitoredModel::new(built.model.clone(), meas.clone())?;
            for index in 0..run.trajectories {
                let record = simulate_trajectory_stream(
                    &mm,
                    &initial,
                    run.duration,
                    run.dt,
                    run.seed,
                    index as u64,
                )?;
                let (csv_path, cov_path) = output_paths(&stem, run.trajectories, index);
                write_file(&csv_path, &trajectory_csv(&record))?;
                write_file(&cov_path, &covariance_csv(&record))?;
                println!(
                    "trajectory {index}: {} steps -> {}",
                    record.times.len() - 1,
                    csv_path.display()
                );
            }
        }
        None => {
            // No monitoring: the moment flow is deterministic.
            let dd = built.model.drift_diffusion();
            let path = evolve_unconditional_path(&initial, &dd, run.duration, run.dt, 1)?;
            let record = TrajectoryRecord {
                times: path.iter().map(|(t, _)| *t).collect(),
                means: path.iter().map(|(_, s)| s.mean().clone()).collect(),
                currents: path.iter().map(|_| DVector::zeros(0)).collect(),
                cov_snapshots: path
                    .iter()
                    .step_by((path.len() / 128).max(1))
                    .map(|(t, s)| (*t, s.cov().clone()))
                    .collect(),
                seed: run.seed,
                stream: 0,
            };
            let (csv_path, cov_path) = output_paths(&stem, 1, 0);
            write_file(&csv_path, &trajectory_csv(&record))?;
            write_file(&cov_path, &covariance_csv(&record))?;
            println!(
                "unconditional run: {} steps -> {}",
                record.times.len() - 1,
                csv_path.display()
            );
        }
    }
    Ok(())
}

fn output_paths(stem: &Path, trajectories: usize, index: usize) -> (PathBuf, PathBuf) {
    let base = stem.with_extension("");
    if trajectories == 1 {
        (
            base.with_extension("csv"),
            PathBuf::from(format!("{}_cov.csv", base.display())),
        )
    } else {
        (
            PathBuf::from(format!("{}_traj{index:04}.csv", base.display())),
            PathBuf::from(format!("{}_traj{index:04}_cov.csv", base.display())),
        )
    }
}

fn print_matrix(m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_float(m[(i, j)])).collect();
        println!("  [{}]", row.join(", "));
    }
}

fn steady_state(args: RunArgs) -> Result<(), CliError> {
    let built = load_scenario(&args)?;
    let cov = match &built.measurement {
        Some(meas) => {
            let mm = MonitoredModel::new(built.model.clone(), meas.clone())?;
            let ss = steady_state_riccati(&mm)?;
            println!("monitored steady-state covariance:");
            print_matrix(&ss.cov);
            println!(
                "certification: riccati residual {:.3e}, lyapunov min eig {:.3e}, uncertainty min eig {:.3e}",
                ss.residual, ss.lyapunov_min_eig, ss.uncertainty_min_eig
            );
            ss.cov
        }
        None => {
            let dd = built.model.drift_diffusion();
            let cov = steady_state_lyapunov(&dd)?;
            println!("unconditional steady-state covariance:");
            print_matrix(&cov);
            cov
        }
    };
    if let Some(out) = &args.out {
        let state = GaussianState::new(DVector::zeros(cov.nrows()), cov)?;
        let record = Record::State(StateRecord::from_state(&state));
        let path = resolve_out(out);
        write_file(&path, &record.to_toml_string()?)?;
        println!("written to {}", path.display());
    }
    Ok(())
}

fn validate(file: &Path) -> Result<(), CliError> {
    let record = Record::from_toml_str(&read_to_string(file)?)?;
    match record {
        Record::State(r) => {
            let state = r.to_state()?;
            let report = state.validity(1e-9);
            println!(
                "state: {} modes, min eigenvalue of sigma + i*Omega = {:.6e}",
                state.n_modes(),
                report.min_uncertainty_eig
            );
            if !report.physical {
                return Err(Error::UncertaintyViolation(report.min_uncertainty_eig).into());
            }
            println!("state satisfies the uncertainty relation");
        }
        Record::Channel(r) => {
            let ch = r.to_channel()?;
            let report = ch.validity(1e-8);
            println!(
                "channel: {} modes, min eigenvalue of Y + i(Omega - X Omega X^T) = {:.6e}",
                ch.n_modes(),
                report.min_cp_eig
            );
            if !report.valid {
                return Err(Error::InvalidChannel(report.min_cp_eig).into());
            }
            println!("channel is completely positive");
        }
        Record::DriftDiffusion(r) => {
            let dd = r.to_drift_diffusion()?;
            let report = dd.validity(1e-9);
            println!(
                "drift/diffusion: {} modes, min eigenvalue of D + i*Omega A_a Omega^T = {:.6e}",
                dd.n_modes(),
                report.min_eig
            );
            if let (Some(det_d), Some(det_a)) = (report.det_d, report.det_a_a) {
                println!("single mode check: det D = {det_d:.6e}, det A_a = {det_a:.6e}");
            }
            if !report.admissible {
                return Err(Error::InadmissibleDrift(report.min_eig).into());
            }
            println!("pair is an admissible diffusive generator");
        }
        Record::Symplectic(r) => {
            let s = r.to_matrix()?;
            let residual = gaussdyne::symplectic::symplectic_residual(&s)?;
            println!(
                "symplectic candidate: {} modes, residual {:.6e}",
                s.nrows() / 2,
                residual
            );
            if residual > 1e-8 {
                return Err(Error::NotSymplectic(residual).into());
            }
            println!("matrix is symplectic");
        }
    }
    Ok(())
}

fn dilate(file: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let record = Record::from_toml_str(&read_to_string(file)?)?;
    let channel = match record {
        Record::Channel(r) => r.to_channel()?,
        _ => {
            return Err(CliError::Lib(Error::InvalidParameter(
                "dilate expects a channel record".into(),
            )))
        }
    };
    let dilation = channel.dilate(DILATION_EPSILON)?;
    let residual = dilation.symplectic_residual();
    println!(
        "dilation: system {} modes + environment {} vacuum modes, symplectic residual {:.6e}",
        dilation.n_system_modes(),
        dilation.n_environment_modes(),
        residual
    );
    let rec = Record::Symplectic(SymplecticRecord::from_matrix(
        dilation.matrix(),
        Some(residual),
    ));
    let text = rec.to_toml_string()?;
    match out {
        Some(path) => {
            let path = resolve_out(path);
            write_file(&path, &text)?;
            println!("written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
