//! Boltzmann-machine training data and the quenched-disorder training loop.
//!
//! Training greedily picks, every drive cycle, the disorder realization whose
//! one-cycle evolution of the committed state lands closest (in KL) to the
//! data histogram. Committed states are never revisited.

use std::ops::RangeInclusive;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::evolution::{evolve_quenched, DriveSchedule, IntegratorConfig};
use crate::model::{
    initial_state, output_probs, spin_of, DisorderRealization, DriveEnvelope, ModelParams, StateVector,
};
use crate::stats::{kl_discrete, shannon_entropy};

/// Largest chain for which the Gibbs distribution is enumerated.
pub const MAX_ENUMERATED_SITES: usize = 20;

/// Classical all-to-all Ising energy with Gibbs weights at `temperature`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoltzmannModel {
    biases: Vec<f64>,
    /// Row-major packed `b_ij` for `i < j`.
    couplings: Vec<f64>,
    temperature: f64,
}

fn pair_index(sites: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < sites);
    i * (2 * sites - i - 1) / 2 + (j - i - 1)
}

impl BoltzmannModel {
    /// `couplings` lists `b_ij` for `i < j` in row-major order.
    pub fn new(biases: Vec<f64>, couplings: Vec<f64>, temperature: f64) -> Result<Self> {
        let sites = biases.len();
        if sites < 1 {
            bail!(Argument, "model needs at least one spin");
        }
        if couplings.len() != sites * (sites - 1) / 2 {
            bail!(Argument, "{} couplings for {sites} spins", couplings.len());
        }
        if !(temperature > 0.0) {
            bail!(Argument, "temperature must be positive, got {temperature}");
        }
        Ok(Self { biases, couplings, temperature })
    }

    /// Biases and couplings uniform on `[−scale/2, scale/2]`.
    pub fn random<R: Rng + ?Sized>(sites: usize, scale: f64, temperature: f64, rng: &mut R) -> Result<Self> {
        let mut draw = || scale * (rng.random::<f64>() - 0.5);
        let biases = (0..sites).map(|_| draw()).collect();
        let couplings = (0..sites * sites.saturating_sub(1) / 2).map(|_| draw()).collect();
        Self::new(biases, couplings, temperature)
    }

    pub fn sites(&self) -> usize {
        self.biases.len()
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.couplings[pair_index(self.sites(), i, j)]
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn energy_of_index(&self, index: usize) -> f64 {
        let sites = self.sites();
        let z: Vec<f64> = (0..sites).map(|b| f64::from(spin_of(index, b))).collect();
        let mut e: f64 = self.biases.iter().zip(&z).map(|(a, z)| a * z).sum();
        let mut k = 0;
        for i in 0..sites {
            for j in i + 1..sites {
                e += self.couplings[k] * z[i] * z[j];
                k += 1;
            }
        }
        e
    }
}

/// `E(z) = Σ a_i z_i + Σ_{i<j} b_ij z_i z_j`
pub fn boltzmann_energy(z: &[i8], model: &BoltzmannModel) -> Result<f64> {
    if z.len() != model.sites() {
        bail!(Argument, "configuration has {} spins, model has {}", z.len(), model.sites());
    }
    if let Some(s) = z.iter().find(|s| **s != 1 && **s != -1) {
        bail!(Argument, "spin value {s} is not ±1");
    }
    let mut e = 0.0;
    for i in 0..z.len() {
        e += model.biases[i] * f64::from(z[i]);
        for j in i + 1..z.len() {
            e += model.coupling(i, j) * f64::from(z[i] * z[j]);
        }
    }
    Ok(e)
}

/// Gibbs probabilities `e^{−E/k_BT} / Z` over all `2^L` configurations,
/// indexed with the chain's basis convention.
pub fn exact_boltzmann(model: &BoltzmannModel) -> Result<Vec<f64>> {
    let sites = model.sites();
    if sites > MAX_ENUMERATED_SITES {
        bail!(Resource, "enumeration limited to L <= {MAX_ENUMERATED_SITES}, got {sites}");
    }
    let log_weights: Vec<f64> = (0..1usize << sites).map(|z| -model.energy_of_index(z) / model.temperature).collect();
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    let partition: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / partition).collect())
}

/// Training samples and their normalized histogram `q̃(z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    sites: usize,
    /// Configurations packed as basis indices.
    samples: Vec<usize>,
    empirical: Vec<f64>,
}

impl Dataset {
    pub fn from_samples(sites: usize, samples: Vec<usize>) -> Result<Self> {
        if samples.is_empty() {
            bail!(Argument, "dataset needs at least one sample");
        }
        let dim = 1usize << sites;
        let mut counts = vec![0usize; dim];
        for &s in &samples {
            if s >= dim {
                bail!(Argument, "sample {s} out of range for L = {sites}");
            }
            counts[s] += 1;
        }
        let total = samples.len() as f64;
        let empirical = counts.into_iter().map(|c| c as f64 / total).collect();
        Ok(Self { sites, samples, empirical })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_indices(&self) -> &[usize] {
        &self.samples
    }

    /// The `k`-th sample as spins `z ∈ {+1, −1}^L`.
    pub fn configuration(&self, k: usize) -> Vec<i8> {
        (0..self.sites).map(|b| spin_of(self.samples[k], b)).collect()
    }

    pub fn empirical_hist(&self) -> &[f64] {
        &self.empirical
    }

    /// Pseudo-count `1 / (2 n_samples)`.
    pub fn default_smoothing(&self) -> f64 {
        1.0 / (2.0 * self.samples.len() as f64)
    }

    /// `(q̃ + ε) / (1 + ε·2^L)`, strictly positive.
    pub fn smoothed_target(&self, epsilon: f64) -> Vec<f64> {
        let norm = 1.0 + epsilon * self.empirical.len() as f64;
        self.empirical.iter().map(|q| (q + epsilon) / norm).collect()
    }
}

/// I.i.d. draws from the exact Gibbs distribution by inverse CDF.
pub fn sample_dataset<R: Rng + ?Sized>(model: &BoltzmannModel, n_samples: usize, rng: &mut R) -> Result<Dataset> {
    let probs = exact_boltzmann(model)?;
    Dataset::from_samples(model.sites(), sample_indices(&probs, n_samples, rng))
}

fn sample_indices<R: Rng + ?Sized>(probs: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    let last = probs.len() - 1;
    (0..n)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            cdf.partition_point(|c| *c <= u).min(last)
        })
        .collect()
}

/// `KL(p ‖ q̃')` with the target smoothed by `epsilon`.
pub fn training_cost(state: &StateVector, dataset: &Dataset, epsilon: f64) -> Result<f64> {
    if state.dim() != 1 << dataset.sites() {
        bail!(Argument, "state dimension {} != 2^{}", state.dim(), dataset.sites());
    }
    if !(epsilon > 0.0) {
        bail!(Argument, "smoothing must be positive, got {epsilon}");
    }
    kl_discrete(&output_probs(state)?, &dataset.smoothed_target(epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    /// Candidate disorder realizations per cycle, `D`.
    pub candidates: usize,
    /// Number of drive cycles, `m_max`.
    pub cycles: usize,
    pub integrator: IntegratorConfig,
    /// Estimate each candidate's cost from this many measurement shots
    /// instead of the exact output distribution.
    pub shots: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self { candidates: 140, cycles: 500, integrator: IntegratorConfig::default(), shots: None }
    }
}

/// One cycle of the greedy search.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleRecord {
    pub chosen: usize,
    pub chosen_cost: f64,
    pub candidate_costs: Vec<f64>,
    pub candidate_entropies: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainingTrace {
    pub cycles: Vec<CycleRecord>,
    /// Committed disorder realization of every cycle, in order.
    pub chosen_disorder: Vec<DisorderRealization>,
    pub final_state: StateVector,
}

impl TrainingTrace {
    pub fn final_cost(&self) -> Option<f64> {
        self.cycles.last().map(|c| c.chosen_cost)
    }
}

/// Index of the smallest cost; ties go to the lowest index.
fn argmin(costs: &[f64]) -> usize {
    let mut best = 0;
    for (k, c) in costs.iter().enumerate().skip(1) {
        if *c < costs[best] {
            best = k;
        }
    }
    best
}

/// Greedy quenched-disorder training from the all-up state.
pub fn train<R: Rng + ?Sized>(
    params: &ModelParams,
    envelope: DriveEnvelope,
    dataset: &Dataset,
    config: &TrainingConfig,
    rng: &mut R,
) -> Result<TrainingTrace> {
    if config.candidates < 1 {
        bail!(Argument, "need at least one candidate per cycle");
    }
    if dataset.sites() != params.sites() {
        bail!(Argument, "dataset has L = {}, chain has L = {}", dataset.sites(), params.sites());
    }
    let schedule = DriveSchedule::new(params, envelope, &config.integrator)?;
    let target = dataset.smoothed_target(dataset.default_smoothing());
    let mut state = initial_state(params.sites())?;
    let mut cycles = Vec::with_capacity(config.cycles);
    let mut chosen_disorder = Vec::with_capacity(config.cycles);

    for _ in 0..config.cycles {
        let disorders: Vec<DisorderRealization> =
            (0..config.candidates).map(|_| DisorderRealization::sample(params, rng)).collect();
        let candidates: Vec<(StateVector, Vec<f64>)> = disorders
            .par_iter()
            .map(|disorder| {
                let mut next = state.clone();
                schedule.propagator(params, disorder)?.apply_in_place(next.amplitudes_mut());
                let probs = output_probs(&next)?;
                Ok((next, probs))
            })
            .collect::<Result<_>>()?;

        let mut costs = Vec::with_capacity(candidates.len());
        let mut entropies = Vec::with_capacity(candidates.len());
        for (_, probs) in &candidates {
            let measured = match config.shots {
                Some(shots) => shot_histogram(probs, shots, rng),
                None => probs.clone(),
            };
            costs.push(kl_discrete(&measured, &target)?);
            entropies.push(shannon_entropy(probs));
        }
        let chosen = argmin(&costs);
        cycles.push(CycleRecord {
            chosen,
            chosen_cost: costs[chosen],
            candidate_costs: costs,
            candidate_entropies: entropies,
        });
        state = candidates.into_iter().nth(chosen).map(|(s, _)| s).expect("chosen candidate exists");
        chosen_disorder.push(disorders.into_iter().nth(chosen).expect("chosen disorder exists"));
    }
    Ok(TrainingTrace { cycles, chosen_disorder, final_state: state })
}

/// Multinomial resampling of `probs` with `shots` draws.
fn shot_histogram<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Vec<f64> {
    let mut hist = vec![0.0; probs.len()];
    let shots = shots.max(1);
    for k in sample_indices(probs, shots, rng) {
        hist[k] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= shots as f64);
    hist
}

/// Smoothing applied to the reference distribution of [`memory_divergence`].
pub const MEMORY_SMOOTHING: f64 = 1e-12;

/// `KL(p_{m+δm} ‖ p_m)` for `δm = 0..=max_lag`, averaged over `m` in
/// `reference_window`, along one unconditional quenched trajectory.
pub fn memory_divergence<R: Rng + ?Sized>(
    params: &ModelParams,
    envelope: DriveEnvelope,
    reference_window: RangeInclusive<usize>,
    max_lag: usize,
    integrator: &IntegratorConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_window(&reference_window)?;
    let cycles = reference_window.end() + max_lag;
    let disorders: Vec<DisorderRealization> = (0..cycles).map(|_| DisorderRealization::sample(params, rng)).collect();
    let trajectory = evolve_quenched(&initial_state(params.sites())?, params, &disorders, envelope, integrator)?;
    let probs = trajectory.iter().map(output_probs).collect::<Result<Vec<_>>>()?;
    memory_curve(&probs, reference_window, max_lag)
}

fn check_window(window: &RangeInclusive<usize>) -> Result<()> {
    let (first, last) = (*window.start(), *window.end());
    if first < 1 || first > last {
        bail!(Argument, "reference window {first}..={last} must be non-empty and start at m >= 1");
    }
    Ok(())
}

/// Memory curve from stored output distributions, `probs[m - 1] = p_m`.
pub fn memory_curve(probs: &[Vec<f64>], reference_window: RangeInclusive<usize>, max_lag: usize) -> Result<Vec<f64>> {
    check_window(&reference_window)?;
    let (first, last) = (*reference_window.start(), *reference_window.end());
    if probs.len() < last + max_lag {
        bail!(Argument, "need {} cycles of output, got {}", last + max_lag, probs.len());
    }
    let smooth = |p: &[f64]| -> Vec<f64> {
        let norm = 1.0 + MEMORY_SMOOTHING * p.len() as f64;
        p.iter().map(|x| (x + MEMORY_SMOOTHING) / norm).collect()
    };
    let references: Vec<Vec<f64>> = probs[first - 1..last].iter().map(|p| smooth(p)).collect();
    let window = references.len() as f64;
    (0..=max_lag)
        .map(|lag| {
            let mut total = 0.0;
            for (offset, reference) in references.iter().enumerate() {
                total += kl_discrete(&probs[first - 1 + offset + lag], reference)?;
            }
            Ok(total / window)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_spin() -> BoltzmannModel {
        BoltzmannModel::new(vec![0.1, -0.2], vec![0.3], 1.0).unwrap()
    }

    #[test]
    fn pair_indexing() {
        let sites = 5;
        let mut k = 0;
        for i in 0..sites {
            for j in i + 1..sites {
                assert_eq!(pair_index(sites, i, j), k);
                k += 1;
            }
        }
    }

    #[test]
    fn energy_examples() {
        let m = two_spin();
        assert!((boltzmann_energy(&[1, 1], &m).unwrap() - 0.2).abs() < 1e-15);
        let zero = BoltzmannModel::new(vec![0.0; 3], vec![0.0; 3], 1.0).unwrap();
        assert_eq!(boltzmann_energy(&[1, -1, 1], &zero).unwrap(), 0.0);
        assert!(boltzmann_energy(&[1], &m).is_err());
        assert!(boltzmann_energy(&[1, 0], &m).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = BoltzmannModel::random(6, 1.0, 1.0, &mut rng).unwrap();
        let z = [1, -1, -1, 1, 1, -1];
        let flipped: Vec<i8> = z.iter().map(|s| -s).collect();
        let bias: f64 = r.biases().iter().zip(z).map(|(a, s)| a * f64::from(s)).sum();
        let e = boltzmann_energy(&z, &r).unwrap();
        let ef = boltzmann_energy(&flipped, &r).unwrap();
        assert!((ef - (e - 2.0 * bias)).abs() < 1e-12);
    }

    #[test]
    fn random_model_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = BoltzmannModel::random(9, 1.0, 1.0, &mut rng).unwrap();
        assert!(m.biases().iter().all(|a| a.abs() <= 0.5));
        for i in 0..9 {
            for j in i + 1..9 {
                assert!(m.coupling(i, j).abs() <= 0.5);
                assert_eq!(m.coupling(i, j), m.coupling(j, i));
            }
        }
        assert!(BoltzmannModel::new(vec![0.0], vec![], 0.0).is_err());
        assert!(BoltzmannModel::new(vec![0.0; 3], vec![0.0; 2], 1.0).is_err());
    }

    #[test]
    fn gibbs_limits() {
        let zero = BoltzmannModel::new(vec![0.0; 3], vec![0.0; 3], 1.0).unwrap();
        assert!(exact_boltzmann(&zero).unwrap().iter().all(|p| (p - 0.125).abs() < 1e-15));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hot = BoltzmannModel::random(5, 1.0, 1e6, &mut rng).unwrap();
        let q = exact_boltzmann(&hot).unwrap();
        assert!(q.iter().all(|p| (p - 1.0 / 32.0).abs() < 1e-5));
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let big = BoltzmannModel::new(vec![0.0; 21], vec![0.0; 210], 1.0).unwrap();
        assert!(matches!(exact_boltzmann(&big), Err(crate::SimError::Resource(_))));
    }

    #[test]
    fn datasets_are_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = BoltzmannModel::random(9, 1.0, 1.0, &mut rng).unwrap();
        let a = sample_dataset(&m, 3000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_dataset(&m, 3000, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3000);
        assert!((a.empirical_hist().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(a.empirical_hist().iter().filter(|q| **q > 0.0).count() <= 512);
        assert_eq!(a.configuration(0).len(), 9);
    }

    #[test]
    fn empirical_histogram_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = BoltzmannModel::random(4, 1.0, 1.0, &mut rng).unwrap();
        let q = exact_boltzmann(&m).unwrap();
        let mut previous = f64::INFINITY;
        for n in [1_000, 4_000, 16_000, 64_000, 256_000, 1_024_000] {
            let d = sample_dataset(&m, n, &mut rng).unwrap();
            let kl = kl_discrete(d.empirical_hist(), &q).unwrap();
            assert!(kl < previous * 1.5, "n={n}: {kl} vs {previous}");
            previous = kl;
        }
        assert!(previous < 1e-4, "{previous}");
    }

    #[test]
    fn cost_examples() {
        let sites = 3;
        let uniform = Dataset::from_samples(sites, (0..8).collect()).unwrap();
        let eps = uniform.default_smoothing();
        let s0 = initial_state(sites).unwrap();
        let cost = training_cost(&s0, &uniform, eps).unwrap();
        let target = uniform.smoothed_target(eps);
        assert!((cost + target[0].ln()).abs() < 1e-14);
        assert!((cost - 8f64.ln()).abs() < 1e-12);

        // A state whose probabilities equal the smoothed target costs nothing.
        let skewed = Dataset::from_samples(sites, vec![0, 0, 1, 5, 5, 5, 7]).unwrap();
        let eps = skewed.default_smoothing();
        let target = skewed.smoothed_target(eps);
        let matched =
            StateVector::from_amplitudes(target.iter().map(|q| num_complex::Complex64::new(q.sqrt(), 0.0)).collect())
                .unwrap();
        assert!(training_cost(&matched, &skewed, eps).unwrap() < 1e-14);

        let p0 = output_probs(&s0).unwrap();
        let base = kl_discrete(&p0, &target).unwrap();
        for lambda in [0.1, 0.5, 1.0] {
            let mix: Vec<f64> = p0.iter().zip(&target).map(|(p, q)| (1.0 - lambda) * p + lambda * q).collect();
            assert!(kl_discrete(&mix, &target).unwrap() < base);
        }
    }

    #[test]
    fn single_candidate_training_is_quenched_evolution() {
        let params = ModelParams::new(4, 1.0, 2.5, 5.0, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = BoltzmannModel::random(4, 1.0, 1.0, &mut rng).unwrap();
        let data = sample_dataset(&model, 500, &mut rng).unwrap();
        let config = TrainingConfig { candidates: 1, cycles: 5, ..Default::default() };
        let trace = train(&params, DriveEnvelope::Sinusoidal, &data, &config, &mut rng).unwrap();
        let replay = crate::evolution::evolve_quenched(
            &initial_state(4).unwrap(),
            &params,
            &trace.chosen_disorder,
            DriveEnvelope::Sinusoidal,
            &config.integrator,
        )
        .unwrap();
        for (record, state) in trace.cycles.iter().zip(&replay) {
            assert_eq!(record.chosen, 0);
            assert_eq!(record.candidate_costs.len(), 1);
            let cost = training_cost(state, &data, data.default_smoothing()).unwrap();
            assert!((record.chosen_cost - cost).abs() < 1e-12);
        }
    }

    #[test]
    fn chosen_cost_is_cycle_minimum() {
        let params = ModelParams::new(4, 1.0, 2.5, 10.0, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = BoltzmannModel::random(4, 1.0, 1.0, &mut rng).unwrap();
        let data = sample_dataset(&model, 500, &mut rng).unwrap();
        let config = TrainingConfig { candidates: 8, cycles: 6, ..Default::default() };
        let trace = train(&params, DriveEnvelope::Sinusoidal, &data, &config, &mut rng).unwrap();
        assert_eq!(trace.cycles.len(), 6);
        assert_eq!(trace.chosen_disorder.len(), 6);
        for record in &trace.cycles {
            assert!(record.candidate_costs.iter().all(|c| record.chosen_cost <= *c));
            assert_eq!(record.candidate_entropies.len(), 8);
        }
    }

    #[test]
    fn argmin_breaks_ties_low() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), 1);
        assert_eq!(argmin(&[0.5]), 0);
    }

    #[test]
    fn shot_mode_runs() {
        let params = ModelParams::new(3, 1.0, 2.5, 5.0, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = Dataset::from_samples(3, vec![0, 1, 2, 3]).unwrap();
        let config = TrainingConfig { candidates: 4, cycles: 2, shots: Some(1000), ..Default::default() };
        let trace = train(&params, DriveEnvelope::Sinusoidal, &data, &config, &mut rng).unwrap();
        assert!(trace.final_cost().unwrap().is_finite());
    }

    #[test]
    fn memory_curve_starts_at_zero() {
        let params = ModelParams::new(4, 1.0, 2.5, 5.0, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let curve =
            memory_divergence(&params, DriveEnvelope::Sinusoidal, 3..=5, 4, &Default::default(), &mut rng).unwrap();
        assert_eq!(curve.len(), 5);
        assert!(curve[0].abs() < 1e-9);
        assert!(curve[1..].iter().all(|v| *v > 0.0));
    }
}
