//! Distributional diagnostics: Porter-Thomas comparison, KL divergences,
//! eigenphase spacing ratios and reference ensembles, entropies and
//! Haar-random states.

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{bail, Result};
use crate::evolution::FloquetSpectrum;
use crate::model::StateVector;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Basis-state probabilities pooled over `D` realizations of a `N`-dim system.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbSampleSet {
    values: Vec<f64>,
    dim: usize,
    realizations: usize,
}

impl ProbSampleSet {
    pub fn new(dim: usize) -> Self {
        Self { values: Vec::new(), dim, realizations: 0 }
    }

    /// Appends one realization's full output distribution.
    pub fn push(&mut self, probs: &[f64]) -> Result<()> {
        if probs.len() != self.dim {
            bail!(Argument, "expected {} probabilities, got {}", self.dim, probs.len());
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!(Argument, "probability {p} outside [0, 1]");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-8 {
            bail!(Argument, "realization sums to {total}, not 1");
        }
        self.values.extend_from_slice(probs);
        self.realizations += 1;
        Ok(())
    }

    /// Loose samples of `p` (not grouped into full distributions), e.g. draws
    /// from a reference density.
    pub fn from_raw(dim: usize, values: Vec<f64>) -> Self {
        Self { values, dim, realizations: 0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn realizations(&self) -> usize {
        self.realizations
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Uniform bins on the scaled variable `x = N·p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Binning {
    pub bins: usize,
    pub x_max: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self { bins: 48, x_max: 12.0 }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || !(self.x_max > 0.0 && self.x_max.is_finite()) {
            bail!(Config, "binning needs bins >= 1 and a positive window, got {self:?}");
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|k| k as f64 * self.width()).collect()
    }

    fn index(&self, x: f64) -> Option<usize> {
        if !(0.0..self.x_max).contains(&x) {
            return None;
        }
        Some(((x / self.width()) as usize).min(self.bins - 1))
    }
}

/// Histogram masses over `edges`, as fractions of all samples.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedDistribution {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl BinnedDistribution {
    /// Fraction of samples inside the window.
    pub fn captured(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Counts of `x = N·p` per bin; mergeable across partial sums.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledHistogram {
    binning: Binning,
    counts: Vec<u64>,
    total: u64,
}

impl ScaledHistogram {
    pub fn new(binning: Binning) -> Result<Self> {
        binning.validate()?;
        Ok(Self { binning, counts: vec![0; binning.bins], total: 0 })
    }

    pub fn add(&mut self, dim: usize, probs: &[f64]) {
        let n = dim as f64;
        for p in probs {
            if let Some(k) = self.binning.index(n * p) {
                self.counts[k] += 1;
            }
        }
        self.total += probs.len() as u64;
    }

    pub fn merge(&mut self, other: &ScaledHistogram) -> Result<()> {
        if self.binning != other.binning {
            bail!(Argument, "cannot merge histograms with different binning");
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.total += other.total;
        Ok(())
    }

    /// Rebuilds a histogram from stored counts, e.g. a checkpoint.
    pub fn from_counts(binning: Binning, counts: Vec<u64>, total: u64) -> Result<Self> {
        binning.validate()?;
        if counts.len() != binning.bins || counts.iter().sum::<u64>() > total {
            bail!(Argument, "counts do not match the binning or exceed the total");
        }
        Ok(Self { binning, counts, total })
    }

    pub fn binning(&self) -> Binning {
        self.binning
    }

    /// In-window counts per bin.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// All samples added, including those outside the window.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distribution(&self) -> BinnedDistribution {
        let total = self.total.max(1) as f64;
        BinnedDistribution {
            edges: self.binning.edges(),
            masses: self.counts.iter().map(|c| *c as f64 / total).collect(),
        }
    }

    /// KL of the in-window histogram against Porter-Thomas, both renormalized
    /// to the window.
    pub fn kl_to_pt(&self) -> Result<KlEstimate> {
        let captured: u64 = self.counts.iter().sum();
        if captured == 0 {
            bail!(Argument, "no samples fall inside the binning window");
        }
        let empirical: Vec<f64> = self.counts.iter().map(|c| *c as f64 / captured as f64).collect();
        let reference = pt_bin_masses(&self.binning);
        Ok(KlEstimate {
            value: kl_discrete(&empirical, &reference)?,
            low_statistics: self.total < 10 * self.binning.bins as u64,
        })
    }
}

/// Result of a binned KL estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KlEstimate {
    pub value: f64,
    /// Fewer than ten samples per bin on average.
    pub low_statistics: bool,
}

/// Porter-Thomas density of `x = N·p`: `e^{−x}`.
pub fn pt_density(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        bail!(Argument, "scaled probability must be non-negative, got {x}");
    }
    Ok((-x).exp())
}

/// Porter-Thomas bin masses renormalized to the window.
pub fn pt_bin_masses(binning: &Binning) -> Vec<f64> {
    let edges = binning.edges();
    let window = -(-binning.x_max).exp_m1();
    edges.windows(2).map(|e| ((-e[0]).exp() - (-e[1]).exp()) / window).collect()
}

/// `Σ P_i ln(P_i / Q_i)` in nats, with `0 ln 0 = 0`.
pub fn kl_discrete(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        bail!(Argument, "length mismatch: {} vs {}", p.len(), q.len());
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        bail!(Argument, "P sums to {total}, not 1");
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if !(qi > 0.0) {
                bail!(Divergence, "P[{i}] = {pi} but Q[{i}] = {qi}");
            }
            kl += pi * (pi / qi).ln();
        }
    }
    // Rounding can push a true zero slightly negative.
    Ok(kl.max(0.0))
}

/// Binned `KL(Pr(p) ‖ PT)` over `x = N·p`.
pub fn kl_to_pt(samples: &ProbSampleSet, binning: &Binning) -> Result<KlEstimate> {
    if samples.is_empty() {
        bail!(Argument, "no probability samples");
    }
    let mut hist = ScaledHistogram::new(*binning)?;
    hist.add(samples.dim(), samples.values());
    hist.kl_to_pt()
}

/// Consecutive-gap ratios `r_n ∈ [0, 1]` of an eigenphase spectrum.
#[derive(Clone, Debug, PartialEq)]
pub struct SpacingRatios {
    ratios: Vec<f64>,
}

impl SpacingRatios {
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn mean(&self) -> f64 {
        self.ratios.iter().sum::<f64>() / self.ratios.len() as f64
    }
}

/// `r_n = min(δ_n, δ_{n+1}) / max(δ_n, δ_{n+1})` on the circle, including
/// the wrap-around gap `2π − θ_N + θ_1`; returns `N` ratios.
pub fn spacing_ratios(spectrum: &FloquetSpectrum) -> Result<SpacingRatios> {
    let phases = spectrum.phases();
    let n = phases.len();
    if n < 3 {
        bail!(Argument, "need at least 3 phases, got {n}");
    }
    let gaps: Vec<f64> =
        (0..n).map(|k| if k + 1 < n { phases[k + 1] - phases[k] } else { TAU - phases[n - 1] + phases[0] }).collect();
    let ratios = (0..n)
        .map(|k| {
            let (a, b) = (gaps[k], gaps[(k + 1) % n]);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            if hi == 0.0 {
                1.0
            } else {
                lo / hi
            }
        })
        .collect();
    Ok(SpacingRatios { ratios })
}

/// Reference distributions of the spacing ratio.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ensemble {
    /// Circular orthogonal ensemble (chaotic driven systems).
    Coe,
    /// Uncorrelated levels.
    Poisson,
    /// Gaussian orthogonal ensemble (chaotic static systems).
    Goe,
}

/// Closed-form density `P(r)` on `[0, 1]`.
pub fn ensemble_density(kind: Ensemble, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        bail!(Argument, "ratio {r} outside [0, 1]");
    }
    Ok(match kind {
        Ensemble::Poisson => 2.0 / ((1.0 + r) * (1.0 + r)),
        Ensemble::Goe => 6.75 * (r + r * r) / (1.0 + r + r * r).powf(2.5),
        Ensemble::Coe => coe_density(r),
    })
}

const COE_SERIES_CUTOFF: f64 = 1e-3;

fn coe_density(r: f64) -> f64 {
    if r < COE_SERIES_CUTOFF {
        // The closed form cancels catastrophically near 0; P(0) = 0 and the
        // density is matched by a quadratic through two exact points.
        let (r1, r2) = (COE_SERIES_CUTOFF, 2.0 * COE_SERIES_CUTOFF);
        let (p1, p2) = (coe_closed_form(r1) / r1, coe_closed_form(r2) / r2);
        let slope = p1 - (p2 - p1) / (r2 - r1) * r1;
        let curvature = (p2 - p1) / (r2 - r1);
        return r * (slope + curvature * r);
    }
    coe_closed_form(r)
}

fn coe_closed_form(r: f64) -> f64 {
    let a = TAU * r / (r + 1.0);
    let b = TAU / (r + 1.0);
    (2.0 / 3.0)
        * (a.sin() / (2.0 * PI * r * r) + 1.0 / ((r + 1.0) * (r + 1.0)) + b.sin() / (2.0 * PI)
            - b.cos() / (r + 1.0)
            - a.cos() / (r * (r + 1.0)))
}

/// `∫₀¹ r^moment P(r) dr` by composite Simpson on `intervals` (even) panels.
pub fn ensemble_moment(kind: Ensemble, moment: i32, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = 1.0 / n as f64;
    let f = |r: f64| r.powi(moment) * ensemble_density(kind, r).unwrap_or(0.0);
    let mut acc = f(0.0) + f(1.0);
    for k in 1..n {
        acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// `−Σ p ln p` with `0 ln 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// Mean Shannon entropy of Porter-Thomas distributed outputs: `L ln 2 − 1 + γ`.
pub fn pt_entropy(sites: usize) -> Result<f64> {
    if sites < 1 {
        bail!(Argument, "need L >= 1");
    }
    Ok(sites as f64 * LN_2 - 1.0 + EULER_GAMMA)
}

/// Haar-random pure state: normalized i.i.d. complex Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<StateVector> {
    if dim < 2 || !dim.is_power_of_two() {
        bail!(Argument, "dimension must be 2^L with L >= 1, got {dim}");
    }
    let amplitudes = (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    StateVector::from_amplitudes(amplitudes)?.normalized()
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::output_probs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1};

    #[test]
    fn pt_density_examples() {
        assert_eq!(pt_density(0.0).unwrap(), 1.0);
        assert!((pt_density(LN_2).unwrap() - 0.5).abs() < 1e-15);
        assert!(pt_density(-0.1).is_err());
        let captured = 1.0 - (-12.0f64).exp();
        assert!((captured - 0.999_993_856).abs() < 1e-9);
        let masses = pt_bin_masses(&Binning::default());
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_discrete_examples() {
        assert_eq!(kl_discrete(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!((kl_discrete(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        assert!(matches!(kl_discrete(&[0.5, 0.5], &[1.0, 0.0]), Err(crate::SimError::Divergence(_))));
        assert!(kl_discrete(&[0.5, 0.4], &[0.5, 0.5]).is_err());
        assert!(kl_discrete(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kl_is_non_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let n = rng.random_range(2..8);
            let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            assert!(kl_discrete(&p, &q).unwrap() >= 0.0);
        }
    }

    #[test]
    fn kl_to_pt_of_exponential_draws_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dim = 512;
        let values: Vec<f64> =
            (0..1_000_000).map(|_| { let e: f64 = Exp1.sample(&mut rng); e } / dim as f64).collect();
        let kl = kl_to_pt(&ProbSampleSet::from_raw(dim, values), &Binning::default()).unwrap();
        assert!(kl.value < 0.002, "{}", kl.value);
        assert!(!kl.low_statistics);
    }

    #[test]
    fn kl_to_pt_of_concentrated_samples() {
        let dim = 256;
        let mut uniform = ProbSampleSet::new(dim);
        uniform.push(&vec![1.0 / dim as f64; dim]).unwrap();
        assert!(kl_to_pt(&uniform, &Binning::default()).unwrap().value > 1.0);

        let mut localized = ProbSampleSet::new(dim);
        let probs = output_probs(&crate::model::initial_state(8).unwrap()).unwrap();
        localized.push(&probs).unwrap();
        assert!(kl_to_pt(&localized, &Binning::default()).unwrap().value > 1.0);

        let mut tiny = ProbSampleSet::new(4);
        tiny.push(&[0.25; 4]).unwrap();
        assert!(kl_to_pt(&tiny, &Binning::default()).unwrap().low_statistics);
        assert!(kl_to_pt(&ProbSampleSet::new(4), &Binning::default()).is_err());
    }

    #[test]
    fn sample_set_validation() {
        let mut s = ProbSampleSet::new(2);
        assert!(s.push(&[0.5, 0.6]).is_err());
        assert!(s.push(&[1.5, -0.5]).is_err());
        assert!(s.push(&[0.5]).is_err());
        s.push(&[0.3, 0.7]).unwrap();
        assert_eq!(s.realizations(), 1);
    }

    #[test]
    fn histogram_merge_matches_single_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let chunks: Vec<Vec<f64>> = (0..4).map(|_| (0..1000).map(|_| rng.random::<f64>() / 64.0).collect()).collect();
        let mut whole = ScaledHistogram::new(Binning::default()).unwrap();
        let mut merged = ScaledHistogram::new(Binning::default()).unwrap();
        for c in &chunks {
            whole.add(64, c);
            let mut part = ScaledHistogram::new(Binning::default()).unwrap();
            part.add(64, c);
            merged.merge(&part).unwrap();
        }
        assert_eq!(whole, merged);
        let dist = whole.distribution();
        assert_eq!(dist.edges.len(), 49);
        assert!(dist.captured() <= 1.0);
    }

    #[test]
    fn spacing_examples() {
        let equal = FloquetSpectrum::from_phases((0..8).map(|k| k as f64 * TAU / 8.0));
        let r = spacing_ratios(&equal).unwrap();
        assert!(r.ratios().iter().all(|x| (x - 1.0).abs() < 1e-12));

        let three = FloquetSpectrum::from_phases([0.0, PI / 2.0, 3.0 * PI / 2.0]);
        let r = spacing_ratios(&three).unwrap();
        let expect = [0.5, 0.5, 1.0];
        for (a, e) in r.ratios().iter().zip(expect) {
            assert!((a - e).abs() < 1e-12);
        }

        assert!(spacing_ratios(&FloquetSpectrum::from_phases([0.0, 1.0])).is_err());

        let degenerate = FloquetSpectrum::from_phases([1.0, 1.0, 1.0, 2.0]);
        let r = spacing_ratios(&degenerate).unwrap();
        assert_eq!(r.ratios()[0], 1.0);
        assert_eq!(r.ratios()[1], 0.0);
    }

    #[test]
    fn poisson_phases_mean_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let spec = FloquetSpectrum::from_phases((0..10_000).map(|_| TAU * rng.random::<f64>()));
        let mean = spacing_ratios(&spec).unwrap().mean();
        assert!((mean - 0.386).abs() < 0.01, "{mean}");
    }

    #[test]
    fn ensemble_examples() {
        assert_eq!(ensemble_density(Ensemble::Poisson, 0.0).unwrap(), 2.0);
        assert_eq!(ensemble_density(Ensemble::Poisson, 1.0).unwrap(), 0.5);
        assert_eq!(ensemble_density(Ensemble::Coe, 0.0).unwrap(), 0.0);
        assert!(ensemble_density(Ensemble::Goe, 1.5).is_err());

        for kind in [Ensemble::Coe, Ensemble::Poisson, Ensemble::Goe] {
            assert!((ensemble_moment(kind, 0, 4000) - 1.0).abs() < 1e-6, "{kind:?}");
        }
        assert!((ensemble_moment(Ensemble::Coe, 1, 4000) - 0.527).abs() < 0.003);
        assert!((ensemble_moment(Ensemble::Poisson, 1, 4000) - 0.386).abs() < 0.001);
        assert!((ensemble_moment(Ensemble::Goe, 1, 4000) - 0.536).abs() < 0.001);
    }

    #[test]
    fn coe_density_is_continuous_at_series_cutoff() {
        let below = coe_density(COE_SERIES_CUTOFF * (1.0 - 1e-9));
        let above = coe_density(COE_SERIES_CUTOFF);
        assert!((below - above).abs() < 1e-9);
        // Frozen from the closed form at r = 0.01 in extended precision.
        assert!((coe_density(0.01) - 0.073_261_870_3).abs() < 1e-8);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]), 0.0);
        assert!((shannon_entropy(&[0.125; 8]) - 8.0f64.ln()).abs() < 1e-14);
        assert!((shannon_entropy(&[0.5, 0.5, 0.0, 0.0]) - LN_2).abs() < 1e-15);

        assert!((pt_entropy(9).unwrap() - 5.8155).abs() < 1e-4);
        assert!((pt_entropy(1).unwrap() - 0.2704).abs() < 1e-4);
        for l in 1..20 {
            assert!(pt_entropy(l + 1).unwrap() > pt_entropy(l).unwrap());
        }
    }

    #[test]
    fn haar_state_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = haar_state(64, &mut rng).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(haar_state(3, &mut rng).is_err());
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, e) = mean_and_stderr(&[2.0; 5]);
        assert_eq!(m, 2.0);
        assert_eq!(e, 0.0);
    }
}
