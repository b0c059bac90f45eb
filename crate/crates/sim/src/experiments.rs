//! The six experiments and the checkpointed realization runner.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use driven_ising::circuit::{build_circuit_with, simulate_circuit_prefixes};
use driven_ising::evolution::{converge_substeps, eigenphases, evolve_quenched, floquet_unitary, DriveSchedule};
use driven_ising::genmodel::{memory_curve, sample_dataset, train, BoltzmannModel, TrainingConfig};
use driven_ising::magnus::{fidelity, truncated_evolve};
use driven_ising::model::{initial_state, output_probs};
use driven_ising::stats::{mean_and_stderr, pt_entropy, shannon_entropy, spacing_ratios, ScaledHistogram};
use driven_ising::{realization_rng, DisorderRealization, DriveEnvelope, IntegratorConfig, ModelParams, StateVector};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{write_atomic, write_manifest, Table, Value};
use crate::{worker_count, HarnessError};

type Result<T> = std::result::Result<T, HarnessError>;

/// Realizations computed between two checkpoint writes.
pub const CHECKPOINT_EVERY: usize = 10;

/// Number of batches used for the standard error of pooled KL estimates.
const KL_BATCHES: usize = 10;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: ExperimentConfig,
    sweeps: BTreeMap<String, Vec<serde_json::Value>>,
}

/// Runs realization sweeps, optionally persisting finished realizations so an
/// interrupted run resumes where it stopped.
pub struct Runner {
    config: ExperimentConfig,
    checkpoint: Option<PathBuf>,
    sweeps: BTreeMap<String, Vec<serde_json::Value>>,
    substeps: Vec<(String, usize)>,
    verbose: bool,
}

impl Runner {
    pub fn in_memory(config: ExperimentConfig) -> Self {
        Self { config, checkpoint: None, sweeps: BTreeMap::new(), substeps: Vec::new(), verbose: false }
    }

    /// Resumes from `path` when it holds a checkpoint of the same config.
    pub fn with_checkpoint(config: ExperimentConfig, path: PathBuf) -> Result<Self> {
        let mut runner = Self::in_memory(config);
        if path.exists() {
            let text = fs::read_to_string(&path)?;
            match serde_json::from_str::<Checkpoint>(&text) {
                Ok(saved) if saved.config == runner.config => {
                    runner.sweeps = saved.sweeps;
                    eprintln!("resuming from {}", path.display());
                }
                _ => eprintln!("ignoring stale checkpoint {}", path.display()),
            }
        }
        runner.checkpoint = Some(path);
        Ok(runner)
    }

    pub fn verbose(mut self, on: bool) -> Self {
        self.verbose = on;
        self
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Substep counts chosen per sweep point, in the order they were resolved.
    pub fn substeps(&self) -> &[(String, usize)] {
        &self.substeps
    }

    /// Evaluates `f(0..count)` in parallel chunks, keeping results in index order.
    pub fn sweep<T, F>(&mut self, key: &str, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Serialize + DeserializeOwned + Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        let mut done: Vec<T> = self
            .sweeps
            .get(key)
            .map(|saved| {
                saved
                    .iter()
                    .take(count)
                    .map(|v| serde_json::from_value(v.clone()))
                    .collect::<std::result::Result<Vec<T>, _>>()
            })
            .transpose()
            .map_err(|e| HarnessError::Io(format!("corrupt checkpoint entry `{key}`: {e}")))?
            .unwrap_or_default();
        while done.len() < count {
            let start = done.len();
            let end = (start + CHECKPOINT_EVERY).min(count);
            let chunk: Vec<T> = (start..end).into_par_iter().map(|i| f(i as u64)).collect::<Result<_>>()?;
            done.extend(chunk);
            if self.verbose {
                eprintln!("{key}: {}/{count}", done.len());
            }
            if self.checkpoint.is_some() {
                let values = done
                    .iter()
                    .map(serde_json::to_value)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| HarnessError::Io(e.to_string()))?;
                self.sweeps.insert(key.to_string(), values);
                self.save()?;
            }
        }
        Ok(done)
    }

    fn save(&self) -> Result<()> {
        let Some(path) = &self.checkpoint else { return Ok(()) };
        let saved = Checkpoint { config: self.config.clone(), sweeps: self.sweeps.clone() };
        let text = serde_json::to_string(&saved).map_err(|e| HarnessError::Io(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }

    /// Doubles the configured substep count until the one-cycle self-convergence
    /// test passes on a probe realization.
    pub fn integrator_for(
        &mut self,
        label: &str,
        params: &ModelParams,
        envelope: DriveEnvelope,
    ) -> Result<IntegratorConfig> {
        let probe = DisorderRealization::sample(params, &mut realization_rng(self.config.seed, 0, "substep-probe"));
        let config = converge_substeps(
            &initial_state(params.sites())?,
            params,
            &probe,
            envelope,
            &self.config.integrator(),
            self.config.max_substeps,
        )?;
        self.substeps.push((label.to_string(), config.substeps_per_cycle));
        Ok(config)
    }
}

/// Histogram counts of one realization, as stored in checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HistCounts {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl HistCounts {
    fn of(config: &ExperimentConfig, state: &StateVector) -> Result<Self> {
        let mut hist = ScaledHistogram::new(config.binning())?;
        hist.add(state.dim(), &output_probs(state)?);
        Ok(Self { counts: hist.counts().to_vec(), total: hist.total() })
    }
}

/// Pooled KL to Porter-Thomas with a standard error from contiguous batches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PooledKl {
    pub value: f64,
    pub stderr: f64,
    pub low_statistics: bool,
}

fn pooled_kl(config: &ExperimentConfig, parts: &[&HistCounts]) -> Result<PooledKl> {
    let binning = config.binning();
    let merge = |slice: &[&HistCounts]| -> Result<ScaledHistogram> {
        let mut hist = ScaledHistogram::new(binning)?;
        for part in slice {
            hist.merge(&ScaledHistogram::from_counts(binning, part.counts.clone(), part.total)?)?;
        }
        Ok(hist)
    };
    let all = merge(parts)?.kl_to_pt()?;
    let n = parts.len();
    let batches = KL_BATCHES.min(n);
    let stderr = if batches < 2 {
        f64::NAN
    } else {
        let kls = (0..batches)
            .map(|b| {
                merge(&parts[b * n / batches..(b + 1) * n / batches])?.kl_to_pt().map(|k| k.value).map_err(Into::into)
            })
            .collect::<Result<Vec<f64>>>()?;
        mean_and_stderr(&kls).1
    };
    Ok(PooledKl { value: all.value, stderr, low_statistics: all.low_statistics })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Analog,
    Digital,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Analog => "analog",
            Source::Digital => "digital",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupremacyRow {
    pub source: Source,
    pub sites: usize,
    pub m: usize,
    pub kl: PooledKl,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagnusRow {
    pub omega: f64,
    pub fidelity_n0: (f64, f64),
    pub fidelity_n2: (f64, f64),
    pub kl: PooledKl,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub disorder_width: f64,
    pub omega: f64,
    /// Mean spacing ratio and its standard error; NaN without spectra.
    pub ratio: (f64, f64),
    pub kl: PooledKl,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainRun {
    pub dataset: usize,
    pub chosen: Vec<usize>,
    pub chosen_costs: Vec<f64>,
    pub entropy_mean: Vec<f64>,
    pub entropy_min: Vec<f64>,
    pub entropy_max: Vec<f64>,
    /// Fraction of candidate entropies within 0.5 nat of the Porter-Thomas value.
    pub near_pt_fraction: Vec<f64>,
    pub target_entropy: f64,
    /// `(costs, entropies)` of every candidate per cycle; kept for dataset 0 only.
    pub candidates: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl TrainRun {
    pub fn final_cost(&self) -> f64 {
        *self.chosen_costs.last().expect("at least one cycle")
    }
}

#[derive(Clone, Debug)]
pub struct TrainGroup {
    pub disorder_width: f64,
    pub runs: Vec<TrainRun>,
}

impl TrainGroup {
    pub fn final_cost(&self) -> (f64, f64) {
        mean_and_stderr(&self.runs.iter().map(TrainRun::final_cost).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryRow {
    pub disorder_width: f64,
    /// `(mean, stderr)` of the divergence per lag `δm = 0..=max_lag`.
    pub curve: Vec<(f64, f64)>,
    /// Pooled KL to Porter-Thomas at the listed cycle counts.
    pub pt: Vec<(usize, PooledKl)>,
}

/// Typed result of one experiment.
#[derive(Clone, Debug)]
pub enum ExperimentOutput {
    Supremacy(Vec<SupremacyRow>),
    Magnus(Vec<MagnusRow>),
    Probe(Vec<ProbeRow>),
    Train(Vec<TrainGroup>),
    Memory(Vec<MemoryRow>),
}

fn kl_cells(kl: &PooledKl) -> Vec<Value> {
    vec![kl.value.into(), kl.stderr.into(), kl.low_statistics.into()]
}

impl ExperimentOutput {
    pub fn tables(&self, config: &ExperimentConfig) -> Result<Vec<Table>> {
        let mut tables = Vec::new();
        match self {
            ExperimentOutput::Supremacy(rows) => {
                let mut t = Table::new("supremacy", &["source", "L", "m", "kl", "stderr", "low_statistics"]);
                for r in rows {
                    let mut row = vec![r.source.name().into(), r.sites.into(), r.m.into()];
                    row.extend(kl_cells(&r.kl));
                    t.push(row);
                }
                tables.push(t);
            }
            ExperimentOutput::Magnus(rows) => {
                let mut t = Table::new(
                    "magnus",
                    &[
                        "omega",
                        "fidelity_n0",
                        "fidelity_n0_stderr",
                        "fidelity_n2",
                        "fidelity_n2_stderr",
                        "kl",
                        "kl_stderr",
                        "low_statistics",
                    ],
                );
                for r in rows {
                    let mut row = vec![
                        r.omega.into(),
                        r.fidelity_n0.0.into(),
                        r.fidelity_n0.1.into(),
                        r.fidelity_n2.0.into(),
                        r.fidelity_n2.1.into(),
                    ];
                    row.extend(kl_cells(&r.kl));
                    t.push(row);
                }
                tables.push(t);
            }
            ExperimentOutput::Probe(rows) => {
                let mut t = Table::new(
                    config.experiment.name(),
                    &["W", "omega", "r_mean", "r_stderr", "kl", "kl_stderr", "low_statistics"],
                );
                for r in rows {
                    let mut row = vec![r.disorder_width.into(), r.omega.into(), r.ratio.0.into(), r.ratio.1.into()];
                    row.extend(kl_cells(&r.kl));
                    t.push(row);
                }
                tables.push(t);
            }
            ExperimentOutput::Train(groups) => {
                let s_pt = pt_entropy(config.primary_sites())?;
                let mut summary = Table::new(
                    "train_summary",
                    &["W", "datasets", "final_cost", "final_cost_stderr", "target_entropy", "pt_entropy"],
                );
                let mut trace = Table::new(
                    "train",
                    &[
                        "W",
                        "dataset",
                        "m",
                        "chosen",
                        "chosen_cost",
                        "entropy_mean",
                        "entropy_min",
                        "entropy_max",
                        "near_pt_fraction",
                    ],
                );
                let mut candidates = Table::new("train_candidates", &["W", "m", "candidate", "cost", "entropy"]);
                for g in groups {
                    let (cost, err) = g.final_cost();
                    let targets: Vec<f64> = g.runs.iter().map(|r| r.target_entropy).collect();
                    summary.push(vec![
                        g.disorder_width.into(),
                        g.runs.len().into(),
                        cost.into(),
                        err.into(),
                        mean_and_stderr(&targets).0.into(),
                        s_pt.into(),
                    ]);
                    for run in &g.runs {
                        for m in 0..run.chosen_costs.len() {
                            trace.push(vec![
                                g.disorder_width.into(),
                                run.dataset.into(),
                                (m + 1).into(),
                                run.chosen[m].into(),
                                run.chosen_costs[m].into(),
                                run.entropy_mean[m].into(),
                                run.entropy_min[m].into(),
                                run.entropy_max[m].into(),
                                run.near_pt_fraction[m].into(),
                            ]);
                        }
                        for (m, (costs, entropies)) in run.candidates.iter().flatten().enumerate() {
                            for (k, (c, s)) in costs.iter().zip(entropies).enumerate() {
                                candidates.push(vec![
                                    g.disorder_width.into(),
                                    (m + 1).into(),
                                    k.into(),
                                    (*c).into(),
                                    (*s).into(),
                                ]);
                            }
                        }
                    }
                }
                tables.extend([summary, trace, candidates]);
            }
            ExperimentOutput::Memory(rows) => {
                let mut curve = Table::new("memory", &["W", "dm", "kl", "stderr"]);
                let mut pt = Table::new("memory_pt", &["W", "m", "kl", "kl_stderr", "low_statistics"]);
                for r in rows {
                    for (dm, (kl, err)) in r.curve.iter().enumerate() {
                        curve.push(vec![r.disorder_width.into(), dm.into(), (*kl).into(), (*err).into()]);
                    }
                    for (m, kl) in &r.pt {
                        let mut row = vec![r.disorder_width.into(), (*m).into()];
                        row.extend(kl_cells(kl));
                        pt.push(row);
                    }
                }
                tables.extend([curve, pt]);
            }
        }
        Ok(tables)
    }
}

/// Runs the configured experiment without touching the filesystem.
pub fn execute(runner: &mut Runner) -> Result<ExperimentOutput> {
    runner.config().validate()?;
    match runner.config().experiment {
        ExperimentKind::Supremacy => supremacy(runner).map(ExperimentOutput::Supremacy),
        ExperimentKind::Magnus => magnus(runner).map(ExperimentOutput::Magnus),
        ExperimentKind::MblProbe | ExperimentKind::PhaseDiagram => probe(runner).map(ExperimentOutput::Probe),
        ExperimentKind::Train => training(runner).map(ExperimentOutput::Train),
        ExperimentKind::Memory => memory(runner).map(ExperimentOutput::Memory),
    }
}

/// Runs the experiment and writes its tables, manifest and checkpoints under `config.out`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let dir: &Path = &config.out;
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("creating {}: {e}", dir.display())))?;
    let checkpoint = dir.join("checkpoint.json");
    let mut runner = Runner::with_checkpoint(config.clone(), checkpoint.clone())?.verbose(true);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let output = pool.install(|| execute(&mut runner))?;
    let tables = output.tables(config)?;
    for table in &tables {
        table.write_csv(dir)?;
    }
    write_manifest(dir, config, &tables, runner.substeps())?;
    if checkpoint.exists() {
        fs::remove_file(&checkpoint)?;
    }
    Ok(output)
}

fn layers_for(config: &ExperimentConfig, cycles: usize) -> usize {
    ((cycles as f64 * config.layers_per_cycle).round() as usize).max(1)
}

fn supremacy(runner: &mut Runner) -> Result<Vec<SupremacyRow>> {
    let config = runner.config().clone();
    let (width, omega, cycles) = (config.disorder_widths[0], config.omega[0], config.m);
    let mut rows = Vec::new();
    for &sites in &config.sites {
        let params = config.params(sites, width, omega)?;
        let integrator = runner.integrator_for(&format!("L={sites}"), &params, config.envelope)?;
        let schedule = DriveSchedule::new(&params, config.envelope, &integrator)?;
        let tag = format!("supremacy/analog/L{sites}");
        let analog: Vec<Vec<HistCounts>> = runner.sweep(&tag, config.realizations, |r| {
            let disorder = DisorderRealization::sample(&params, &mut realization_rng(config.seed, r, &tag));
            let propagator = schedule.propagator(&params, &disorder)?;
            let mut state = initial_state(sites)?;
            (0..cycles)
                .map(|_| {
                    propagator.apply_in_place(state.amplitudes_mut());
                    HistCounts::of(&config, &state)
                })
                .collect()
        })?;
        rows.extend(supremacy_rows(&config, Source::Analog, sites, &analog)?);

        if config.digital {
            let tag = format!("supremacy/digital/L{sites}");
            let depth = layers_for(&config, cycles);
            let digital: Vec<Vec<HistCounts>> = runner.sweep(&tag, config.realizations, |r| {
                let circuit = build_circuit_with(
                    sites,
                    depth,
                    config.circuit_options(),
                    &mut realization_rng(config.seed, r, &tag),
                )?;
                let prefixes = simulate_circuit_prefixes(&circuit)?;
                (1..=cycles).map(|m| HistCounts::of(&config, &prefixes[layers_for(&config, m) - 1])).collect()
            })?;
            rows.extend(supremacy_rows(&config, Source::Digital, sites, &digital)?);
        }
    }
    Ok(rows)
}

fn supremacy_rows(
    config: &ExperimentConfig,
    source: Source,
    sites: usize,
    per_realization: &[Vec<HistCounts>],
) -> Result<Vec<SupremacyRow>> {
    (0..config.m)
        .map(|k| {
            let parts: Vec<&HistCounts> = per_realization.iter().map(|r| &r[k]).collect();
            Ok(SupremacyRow { source, sites, m: k + 1, kl: pooled_kl(config, &parts)? })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct MagnusSample {
    fidelity_n0: f64,
    fidelity_n2: f64,
    hist: HistCounts,
}

fn magnus(runner: &mut Runner) -> Result<Vec<MagnusRow>> {
    let config = runner.config().clone();
    let (sites, width) = (config.primary_sites(), config.disorder_widths[0]);
    let mut rows = Vec::new();
    for &omega in &config.omega {
        let params = config.params(sites, width, omega)?;
        let integrator = runner.integrator_for(&format!("omega={omega}"), &params, config.envelope)?;
        let schedule = DriveSchedule::new(&params, config.envelope, &integrator)?;
        let samples: Vec<MagnusSample> = runner.sweep(&format!("magnus/omega{omega}"), config.realizations, |r| {
            let disorder = DisorderRealization::sample(&params, &mut realization_rng(config.seed, r, "magnus"));
            let propagator = schedule.propagator(&params, &disorder)?;
            let psi0 = initial_state(sites)?;
            let exact = propagator.apply(&psi0)?;
            let fidelity_n0 = fidelity(&exact, &truncated_evolve(&psi0, &params, &disorder, 0)?)?;
            let fidelity_n2 = fidelity(&exact, &truncated_evolve(&psi0, &params, &disorder, 2)?)?;
            let mut state = exact;
            for _ in 1..config.m {
                propagator.apply_in_place(state.amplitudes_mut());
            }
            Ok(MagnusSample { fidelity_n0, fidelity_n2, hist: HistCounts::of(&config, &state)? })
        })?;
        let f0: Vec<f64> = samples.iter().map(|s| s.fidelity_n0).collect();
        let f2: Vec<f64> = samples.iter().map(|s| s.fidelity_n2).collect();
        let parts: Vec<&HistCounts> = samples.iter().map(|s| &s.hist).collect();
        rows.push(MagnusRow {
            omega,
            fidelity_n0: mean_and_stderr(&f0),
            fidelity_n2: mean_and_stderr(&f2),
            kl: pooled_kl(&config, &parts)?,
        });
    }
    Ok(rows)
}

#[derive(Serialize, Deserialize)]
struct ProbeSample {
    ratio: Option<f64>,
    hist: HistCounts,
}

fn probe(runner: &mut Runner) -> Result<Vec<ProbeRow>> {
    let config = runner.config().clone();
    let sites = config.primary_sites();
    let mut rows = Vec::new();
    for &width in &config.disorder_widths {
        for &omega in &config.omega {
            let params = config.params(sites, width, omega)?;
            let integrator = runner.integrator_for(&format!("W={width},omega={omega}"), &params, config.envelope)?;
            let schedule = DriveSchedule::new(&params, config.envelope, &integrator)?;
            let key = format!("probe/W{width}/omega{omega}");
            let samples: Vec<ProbeSample> = runner.sweep(&key, config.realizations, |r| {
                let disorder = DisorderRealization::sample(&params, &mut realization_rng(config.seed, r, "probe"));
                let propagator = schedule.propagator(&params, &disorder)?;
                let mut state = initial_state(sites)?;
                for _ in 0..config.m {
                    propagator.apply_in_place(state.amplitudes_mut());
                }
                let ratio = if config.spectra {
                    let u = floquet_unitary(&params, &disorder, config.envelope, &integrator)?;
                    Some(spacing_ratios(&eigenphases(&u)?)?.mean())
                } else {
                    None
                };
                Ok(ProbeSample { ratio, hist: HistCounts::of(&config, &state)? })
            })?;
            let ratios: Vec<f64> = samples.iter().filter_map(|s| s.ratio).collect();
            let parts: Vec<&HistCounts> = samples.iter().map(|s| &s.hist).collect();
            rows.push(ProbeRow {
                disorder_width: width,
                omega,
                ratio: if ratios.is_empty() { (f64::NAN, f64::NAN) } else { mean_and_stderr(&ratios) },
                kl: pooled_kl(&config, &parts)?,
            });
        }
    }
    Ok(rows)
}

fn training(runner: &mut Runner) -> Result<Vec<TrainGroup>> {
    let config = runner.config().clone();
    let (sites, omega) = (config.primary_sites(), config.omega[0]);
    let s_pt = pt_entropy(sites)?;
    let mut groups = Vec::new();
    for &width in &config.disorder_widths {
        let params = config.params(sites, width, omega)?;
        let integrator = runner.integrator_for(&format!("W={width}"), &params, config.envelope)?;
        let training_config =
            TrainingConfig { candidates: config.candidates, cycles: config.m, integrator, shots: config.shots };
        let key = format!("train/W{width}");
        let runs: Vec<TrainRun> = runner.sweep(&key, config.datasets, |ds| {
            let mut data_rng = realization_rng(config.seed, ds, "train/boltzmann");
            let model = BoltzmannModel::random(sites, config.coupling, config.temperature, &mut data_rng)?;
            let dataset = sample_dataset(&model, config.samples, &mut data_rng)?;
            let trace = train(
                &params,
                config.envelope,
                &dataset,
                &training_config,
                &mut realization_rng(config.seed, ds, "train/candidates"),
            )?;
            let mut run = TrainRun {
                dataset: ds as usize,
                chosen: Vec::new(),
                chosen_costs: Vec::new(),
                entropy_mean: Vec::new(),
                entropy_min: Vec::new(),
                entropy_max: Vec::new(),
                near_pt_fraction: Vec::new(),
                target_entropy: shannon_entropy(dataset.empirical_hist()),
                candidates: (ds == 0).then(Vec::new),
            };
            for cycle in trace.cycles {
                let s = &cycle.candidate_entropies;
                run.chosen.push(cycle.chosen);
                run.chosen_costs.push(cycle.chosen_cost);
                run.entropy_mean.push(s.iter().sum::<f64>() / s.len() as f64);
                run.entropy_min.push(s.iter().copied().fold(f64::INFINITY, f64::min));
                run.entropy_max.push(s.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                let near = s.iter().filter(|x| (*x - s_pt).abs() <= 0.5).count();
                run.near_pt_fraction.push(near as f64 / s.len() as f64);
                if let Some(all) = run.candidates.as_mut() {
                    all.push((cycle.candidate_costs, cycle.candidate_entropies));
                }
            }
            Ok(run)
        })?;
        groups.push(TrainGroup { disorder_width: width, runs });
    }
    Ok(groups)
}

/// Cycle counts at which the quenched trajectories are compared with Porter-Thomas.
fn pt_checkpoints(cycles: usize) -> Vec<usize> {
    let mut marks: Vec<usize> = [1, 2, 5].into_iter().filter(|m| *m <= cycles).collect();
    marks.extend((1..).map(|k| 10 * k).take_while(|m| *m <= cycles));
    if marks.last() != Some(&cycles) {
        marks.push(cycles);
    }
    marks
}

#[derive(Serialize, Deserialize)]
struct MemorySample {
    curve: Vec<f64>,
    hists: Vec<HistCounts>,
}

fn memory(runner: &mut Runner) -> Result<Vec<MemoryRow>> {
    let config = runner.config().clone();
    let (sites, omega) = (config.primary_sites(), config.omega[0]);
    let [first, last] = config.memory_window;
    let window = first..=last;
    let cycles = config.m.max(last + config.max_lag);
    let marks = pt_checkpoints(config.m);
    let mut rows = Vec::new();
    for &width in &config.disorder_widths {
        let params = config.params(sites, width, omega)?;
        let integrator = runner.integrator_for(&format!("W={width}"), &params, config.envelope)?;
        let samples: Vec<MemorySample> = runner.sweep(&format!("memory/W{width}"), config.realizations, |r| {
            let mut rng = realization_rng(config.seed, r, "memory");
            let disorders: Vec<DisorderRealization> =
                (0..cycles).map(|_| DisorderRealization::sample(&params, &mut rng)).collect();
            let trajectory =
                evolve_quenched(&initial_state(sites)?, &params, &disorders, config.envelope, &integrator)?;
            let probs = trajectory.iter().map(output_probs).collect::<driven_ising::Result<Vec<_>>>()?;
            let curve = memory_curve(&probs, window.clone(), config.max_lag)?;
            let hists = marks.iter().map(|m| HistCounts::of(&config, &trajectory[m - 1])).collect::<Result<_>>()?;
            Ok(MemorySample { curve, hists })
        })?;
        let curve = (0..=config.max_lag)
            .map(|lag| mean_and_stderr(&samples.iter().map(|s| s.curve[lag]).collect::<Vec<_>>()))
            .collect();
        let pt = marks
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let parts: Vec<&HistCounts> = samples.iter().map(|s| &s.hists[k]).collect();
                Ok((*m, pooled_kl(&config, &parts)?))
            })
            .collect::<Result<_>>()?;
        rows.push(MemoryRow { disorder_width: width, curve, pt });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoint_marks() {
        assert_eq!(pt_checkpoints(1), vec![1]);
        assert_eq!(pt_checkpoints(25), vec![1, 2, 5, 10, 20, 25]);
        assert_eq!(pt_checkpoints(30), vec![1, 2, 5, 10, 20, 30]);
    }

    #[test]
    fn layer_matching() {
        let mut c = ExperimentConfig::defaults(ExperimentKind::Supremacy);
        assert_eq!(layers_for(&c, 7), 7);
        c.layers_per_cycle = 0.5;
        assert_eq!(layers_for(&c, 1), 1);
        assert_eq!(layers_for(&c, 8), 4);
    }
}
