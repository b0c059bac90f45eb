use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use driven_ising::DriveEnvelope;
use sim::{run_experiment, ExperimentConfig, ExperimentKind, HarnessError};

/// Driven disordered Ising chain experiments.
#[derive(Parser, Debug)]
#[command(name = "sim", version)]
struct Cli {
    /// supremacy | magnus | mbl-probe | phase-diagram | train | memory
    experiment: String,
    #[command(flatten)]
    overrides: Overrides,
}

/// Every flag overrides the config file, which overrides the experiment defaults.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML file with any of the keys below.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Chain length(s), comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    sites: Option<Vec<usize>>,
    #[arg(long = "J")]
    coupling: Option<f64>,
    #[arg(long = "F")]
    drive_amplitude: Option<f64>,
    /// Disorder width(s), comma separated.
    #[arg(long = "W", value_delimiter = ',')]
    disorder_widths: Option<Vec<f64>>,
    /// Drive frequency(ies), comma separated.
    #[arg(long, value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    /// Drive cycles (circuit layers, training cycles).
    #[arg(long)]
    m: Option<usize>,
    /// Realizations per sweep point.
    #[arg(long = "D")]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// sinusoidal | constant-half | zero
    #[arg(long)]
    envelope: Option<DriveEnvelope>,
    /// Shorthand for `--envelope constant-half`.
    #[arg(long)]
    no_modulation: bool,
    /// Run the random-circuit baseline next to the analog sweep.
    #[arg(long)]
    digital: Option<Option<bool>>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    convergence_tol: Option<f64>,
    #[arg(long)]
    max_substeps: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    layers_per_cycle: Option<f64>,
    #[arg(long)]
    spectra: Option<bool>,
    #[arg(long)]
    no_repeat: Option<Option<bool>>,
    #[arg(long)]
    final_hadamard: Option<Option<bool>>,
    /// Candidate realizations per training cycle.
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    datasets: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long = "kT")]
    temperature: Option<f64>,
    #[arg(long)]
    shots: Option<usize>,
    /// Reference window `first,last` of the memory metric.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    memory_window: Option<Vec<usize>>,
    #[arg(long)]
    max_lag: Option<usize>,
}

fn set<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

fn flag(target: &mut bool, value: Option<Option<bool>>) {
    if let Some(v) = value {
        *target = v.unwrap_or(true);
    }
}

fn resolve(cli: Cli) -> Result<ExperimentConfig, HarnessError> {
    let kind: ExperimentKind = cli.experiment.parse()?;
    let o = cli.overrides;
    let mut c = match &o.config {
        Some(path) => ExperimentConfig::from_file(path, kind)?,
        None => ExperimentConfig::defaults(kind),
    };
    set(&mut c.sites, o.sites);
    set(&mut c.coupling, o.coupling);
    set(&mut c.drive_amplitude, o.drive_amplitude);
    set(&mut c.disorder_widths, o.disorder_widths);
    set(&mut c.omega, o.omega);
    set(&mut c.m, o.m);
    set(&mut c.realizations, o.realizations);
    set(&mut c.seed, o.seed);
    set(&mut c.out, o.out);
    set(&mut c.envelope, o.envelope);
    if o.no_modulation {
        c.envelope = DriveEnvelope::ConstantHalf;
    }
    flag(&mut c.digital, o.digital);
    set(&mut c.substeps, o.substeps);
    set(&mut c.convergence_tol, o.convergence_tol);
    set(&mut c.max_substeps, o.max_substeps);
    set(&mut c.bins, o.bins);
    set(&mut c.x_max, o.x_max);
    set(&mut c.layers_per_cycle, o.layers_per_cycle);
    set(&mut c.spectra, o.spectra);
    flag(&mut c.no_repeat, o.no_repeat);
    flag(&mut c.final_hadamard, o.final_hadamard);
    set(&mut c.candidates, o.candidates);
    set(&mut c.datasets, o.datasets);
    set(&mut c.samples, o.samples);
    set(&mut c.temperature, o.temperature);
    if o.shots.is_some() {
        c.shots = o.shots;
    }
    if let Some(w) = o.memory_window {
        c.memory_window = [w[0], w[1]];
    }
    set(&mut c.max_lag, o.max_lag);
    c.validate()?;
    Ok(c)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = resolve(cli).and_then(|config| {
        run_experiment(&config)?;
        eprintln!("wrote {}", config.out.display());
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
