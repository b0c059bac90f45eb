//! Experiment configuration: per-experiment defaults, TOML files and CLI
//! overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use driven_ising::circuit::CircuitOptions;
use driven_ising::evolution::DEFAULT_SUBSTEPS;
use driven_ising::stats::Binning;
use driven_ising::{DriveEnvelope, IntegratorConfig, ModelParams};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Supremacy,
    Magnus,
    MblProbe,
    PhaseDiagram,
    Train,
    Memory,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Supremacy,
        ExperimentKind::Magnus,
        ExperimentKind::MblProbe,
        ExperimentKind::PhaseDiagram,
        ExperimentKind::Train,
        ExperimentKind::Memory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Supremacy => "supremacy",
            ExperimentKind::Magnus => "magnus",
            ExperimentKind::MblProbe => "mbl-probe",
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::Train => "train",
            ExperimentKind::Memory => "memory",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment `{s}`")))
    }
}

/// Fully resolved settings of one run. Every field is written to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Chain lengths; experiments other than `supremacy` use the first entry.
    #[serde(rename = "L")]
    pub sites: Vec<usize>,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(rename = "F")]
    pub drive_amplitude: f64,
    /// Disorder widths swept (single entry for fixed-W experiments).
    #[serde(rename = "W")]
    pub disorder_widths: Vec<f64>,
    /// Drive frequencies swept (single entry for fixed-ω experiments).
    pub omega: Vec<f64>,
    /// Disorder / circuit / trajectory realizations per sweep point.
    #[serde(rename = "D")]
    pub realizations: usize,
    /// Drive cycles (or circuit layers).
    pub m: usize,
    pub seed: u64,
    pub out: PathBuf,
    #[serde(with = "envelope_serde")]
    pub envelope: DriveEnvelope,
    /// Also run the random-circuit baseline (supremacy).
    pub digital: bool,
    pub substeps: usize,
    pub convergence_tol: f64,
    /// Upper bound for automatic substep doubling.
    pub max_substeps: usize,
    pub bins: usize,
    pub x_max: f64,
    /// Digital layers matched to one analog drive cycle.
    pub layers_per_cycle: f64,
    /// Compute Floquet level statistics (dense eigendecomposition per realization).
    pub spectra: bool,
    pub no_repeat: bool,
    pub final_hadamard: bool,
    /// Candidate realizations per training cycle.
    pub candidates: usize,
    /// Independent Boltzmann datasets.
    pub datasets: usize,
    pub samples: usize,
    #[serde(rename = "kT")]
    pub temperature: f64,
    pub shots: Option<usize>,
    pub memory_window: [usize; 2],
    pub max_lag: usize,
}

mod envelope_serde {
    use driven_ising::DriveEnvelope;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(e: &DriveEnvelope, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(e.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DriveEnvelope, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

impl ExperimentConfig {
    /// Defaults taken from the parameter set of the corresponding figure.
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            sites: vec![9],
            coupling: 1.0,
            drive_amplitude: 2.5,
            disorder_widths: vec![5.0],
            omega: vec![8.0],
            realizations: 100,
            m: 10,
            seed: 0,
            out: PathBuf::from(format!("results/{}", experiment.name())),
            envelope: DriveEnvelope::Sinusoidal,
            digital: false,
            substeps: DEFAULT_SUBSTEPS,
            convergence_tol: 1e-9,
            max_substeps: 1 << 14,
            bins: Binning::default().bins,
            x_max: Binning::default().x_max,
            layers_per_cycle: 1.0,
            spectra: true,
            no_repeat: false,
            final_hadamard: false,
            candidates: 140,
            datasets: 50,
            samples: 3000,
            temperature: 1.0,
            shots: None,
            memory_window: [80, 90],
            max_lag: 20,
        };
        match experiment {
            ExperimentKind::Supremacy => Self {
                sites: vec![7, 9, 11],
                disorder_widths: vec![5.0],
                realizations: 500,
                m: 40,
                digital: true,
                ..base
            },
            ExperimentKind::Magnus => {
                Self { disorder_widths: vec![2.0], omega: vec![2.0, 4.0, 8.0, 16.0, 32.0], realizations: 500, ..base }
            }
            ExperimentKind::MblProbe => {
                Self { disorder_widths: vec![1.5, 2.5, 5.0, 7.5, 10.0, 15.0, 20.0], realizations: 100, ..base }
            }
            ExperimentKind::PhaseDiagram => Self {
                disorder_widths: vec![1.0, 2.0, 5.0, 10.0, 20.0],
                omega: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
                realizations: 20,
                ..base
            },
            ExperimentKind::Train => {
                Self { disorder_widths: vec![2.0, 5.0, 10.0, 15.0, 20.0, 25.0], realizations: 1, m: 500, ..base }
            }
            ExperimentKind::Memory => Self { disorder_widths: vec![2.0, 20.0], realizations: 100, m: 100, ..base },
        }
    }

    /// Reads a TOML file; keys absent from the file keep the experiment defaults.
    pub fn from_file(path: &Path, experiment: ExperimentKind) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text, experiment)
    }

    pub fn from_toml(text: &str, experiment: ExperimentKind) -> Result<Self, HarnessError> {
        let mut table: toml::Table = text.parse().map_err(|e| HarnessError::Config(format!("config file: {e}")))?;
        if let Some(named) = table.get("experiment").and_then(|v| v.as_str()) {
            if named != experiment.name() {
                return Err(HarnessError::Config(format!("config file is for `{named}`, command is `{experiment}`")));
            }
        }
        let defaults =
            toml::Table::try_from(Self::defaults(experiment)).map_err(|e| HarnessError::Config(e.to_string()))?;
        for (key, value) in defaults {
            table.entry(key).or_insert(value);
        }
        let config: Self =
            table.try_into().map_err(|e: toml::de::Error| HarnessError::Config(format!("config file: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.sites.is_empty() || self.disorder_widths.is_empty() || self.omega.is_empty() {
            return fail("L, W and omega lists must be non-empty".into());
        }
        for &l in &self.sites {
            for &w in &self.disorder_widths {
                for &om in &self.omega {
                    ModelParams::new(l, self.coupling, self.drive_amplitude, w, om)
                        .map_err(|e| HarnessError::Config(e.to_string()))?;
                }
            }
        }
        if self.realizations == 0 || self.m == 0 {
            return fail("D and m must be at least 1".into());
        }
        self.integrator().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.max_substeps < self.substeps {
            return fail("max-substeps must be >= substeps".into());
        }
        self.binning().validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if !(self.layers_per_cycle > 0.0 && self.layers_per_cycle.is_finite()) {
            return fail("layers-per-cycle must be positive".into());
        }
        if self.experiment == ExperimentKind::Train {
            if self.candidates == 0 || self.datasets == 0 || self.samples == 0 {
                return fail("candidates, datasets and samples must be at least 1".into());
            }
            if !(self.temperature > 0.0) {
                return fail("kT must be positive".into());
            }
        }
        if self.experiment == ExperimentKind::Memory {
            let [lo, hi] = self.memory_window;
            if lo < 1 || lo > hi {
                return fail(format!("memory window {lo}..{hi} is invalid"));
            }
        }
        if let Some(0) = self.shots {
            return fail("shots must be at least 1".into());
        }
        Ok(())
    }

    pub fn params(&self, sites: usize, disorder_width: f64, omega: f64) -> Result<ModelParams, HarnessError> {
        ModelParams::new(sites, self.coupling, self.drive_amplitude, disorder_width, omega)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            substeps_per_cycle: self.substeps,
            convergence_tol: self.convergence_tol,
            ..IntegratorConfig::default()
        }
    }

    pub fn binning(&self) -> Binning {
        Binning { bins: self.bins, x_max: self.x_max }
    }

    pub fn circuit_options(&self) -> CircuitOptions {
        CircuitOptions { no_repeat: self.no_repeat, final_hadamard: self.final_hadamard }
    }

    pub fn primary_sites(&self) -> usize {
        self.sites[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in ExperimentKind::ALL {
            ExperimentConfig::defaults(kind).validate().unwrap();
        }
    }

    #[test]
    fn figure_defaults() {
        let s = ExperimentConfig::defaults(ExperimentKind::Supremacy);
        assert_eq!((s.disorder_widths[0], s.drive_amplitude, s.omega[0], s.realizations), (5.0, 2.5, 8.0, 500));
        let p = ExperimentConfig::defaults(ExperimentKind::MblProbe);
        assert_eq!((p.drive_amplitude, p.m, p.omega[0], p.realizations), (2.5, 10, 8.0, 100));
        let t = ExperimentConfig::defaults(ExperimentKind::Train);
        assert_eq!((t.candidates, t.temperature, t.sites[0], t.samples), (140, 1.0, 9, 3000));
    }

    #[test]
    fn toml_overrides_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "L = [5]\nW = [1.5, 20.0]\nseed = 7\nenvelope = \"constant-half\"\n",
            ExperimentKind::MblProbe,
        )
        .unwrap();
        assert_eq!(cfg.sites, vec![5]);
        assert_eq!(cfg.disorder_widths, vec![1.5, 20.0]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.envelope, DriveEnvelope::ConstantHalf);
        assert_eq!(cfg.realizations, 100);
    }

    #[test]
    fn toml_rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("bogus = 1", ExperimentKind::Magnus).is_err());
        assert!(ExperimentConfig::from_toml("experiment = \"train\"", ExperimentKind::Magnus).is_err());
        assert!(ExperimentConfig::from_toml("W = [-1.0]", ExperimentKind::Magnus).is_err());
        assert!(ExperimentConfig::from_toml("substeps = 7", ExperimentKind::Magnus).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::defaults(ExperimentKind::Memory);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text, ExperimentKind::Memory).unwrap(), cfg);
    }
}
