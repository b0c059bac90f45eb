//! Chain model, basis conventions and matrix-free operator application.
//!
//! Basis state `index` encodes the spin configuration `z = [z_1, ..., z_L]`
//! with site 1 in the least-significant bit. A cleared bit is `z = +1`, a set
//! bit is `z = -1`, so index 0 is the all-up product state.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{bail, Result, SimError};

/// Tolerance on `sum |c_i|^2 = 1` for a state to count as normalized.
pub const NORM_TOL: f64 = 1e-10;

/// Static parameters of the driven chain. Energies are in units where `J`
/// sets the scale (the defaults use `J = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    sites: usize,
    coupling: f64,
    drive_amplitude: f64,
    disorder_width: f64,
    omega: f64,
}

impl ModelParams {
    pub fn new(sites: usize, coupling: f64, drive_amplitude: f64, disorder_width: f64, omega: f64) -> Result<Self> {
        if sites < 1 {
            bail!(Argument, "chain needs at least one site");
        }
        if sites >= usize::BITS as usize {
            bail!(Argument, "L = {sites} does not fit a basis index");
        }
        if !(coupling > 0.0 && coupling.is_finite()) {
            bail!(Argument, "coupling J must be positive, got {coupling}");
        }
        if !(drive_amplitude >= 0.0 && drive_amplitude.is_finite()) {
            bail!(Argument, "drive amplitude F must be non-negative, got {drive_amplitude}");
        }
        if !(disorder_width >= 0.0 && disorder_width.is_finite()) {
            bail!(Argument, "disorder width W must be non-negative, got {disorder_width}");
        }
        if !(omega > 0.0 && omega.is_finite()) {
            bail!(Argument, "drive frequency must be positive, got {omega}");
        }
        Ok(Self { sites, coupling, drive_amplitude, disorder_width, omega })
    }

    /// Number of sites `L`.
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Hilbert-space dimension `N = 2^L`.
    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn drive_amplitude(&self) -> f64 {
        self.drive_amplitude
    }

    pub fn disorder_width(&self) -> f64 {
        self.disorder_width
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Drive period `T = 2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn with_disorder_width(self, disorder_width: f64) -> Result<Self> {
        Self::new(self.sites, self.coupling, self.drive_amplitude, disorder_width, self.omega)
    }

    pub fn with_omega(self, omega: f64) -> Result<Self> {
        Self::new(self.sites, self.coupling, self.drive_amplitude, self.disorder_width, omega)
    }

    pub fn with_drive_amplitude(self, drive_amplitude: f64) -> Result<Self> {
        Self::new(self.sites, self.coupling, drive_amplitude, self.disorder_width, self.omega)
    }

    pub fn with_sites(self, sites: usize) -> Result<Self> {
        Self::new(sites, self.coupling, self.drive_amplitude, self.disorder_width, self.omega)
    }
}

/// One draw of the on-site longitudinal fields `h_i ∈ [0, W]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderRealization {
    fields: Vec<f64>,
}

impl DisorderRealization {
    pub fn new(fields: Vec<f64>, params: &ModelParams) -> Result<Self> {
        if fields.len() != params.sites() {
            bail!(Argument, "disorder has {} fields for a chain of {} sites", fields.len(), params.sites());
        }
        let width = params.disorder_width();
        if let Some(h) = fields.iter().find(|h| !(**h >= 0.0 && **h <= width)) {
            bail!(Argument, "field {h} outside [0, {width}]");
        }
        Ok(Self { fields })
    }

    /// Fields drawn i.i.d. uniform on `[0, W]`.
    pub fn sample<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Self {
        let width = params.disorder_width();
        let fields = (0..params.sites()).map(|_| width * rng.random::<f64>()).collect();
        Self { fields }
    }

    /// All fields zero (valid for any `W`).
    pub fn clean(params: &ModelParams) -> Self {
        Self { fields: vec![0.0; params.sites()] }
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

/// Time profile `f(t)` multiplying the transverse drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DriveEnvelope {
    /// `f(t) = [1 - cos(ωt)] / 2`
    #[default]
    Sinusoidal,
    /// `f(t) = 1/2`, the unmodulated field.
    ConstantHalf,
    /// `f(t) = 0`, undriven.
    Zero,
}

impl DriveEnvelope {
    pub fn value(self, t: f64, omega: f64) -> f64 {
        match self {
            DriveEnvelope::Sinusoidal => 0.5 * (1.0 - (omega * t).cos()),
            DriveEnvelope::ConstantHalf => 0.5,
            DriveEnvelope::Zero => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriveEnvelope::Sinusoidal => "sinusoidal",
            DriveEnvelope::ConstantHalf => "constant-half",
            DriveEnvelope::Zero => "zero",
        }
    }
}

impl fmt::Display for DriveEnvelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DriveEnvelope {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinusoidal" => Ok(DriveEnvelope::Sinusoidal),
            "constant-half" => Ok(DriveEnvelope::ConstantHalf),
            "zero" => Ok(DriveEnvelope::Zero),
            other => Err(SimError::Argument(format!("unknown envelope `{other}`"))),
        }
    }
}

/// Complex amplitudes over the computational basis, length `2^L`.
///
/// Propagated states are normalized; intermediate results of operator
/// application (see [`apply_transverse`]) need not be.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() < 2 || !amplitudes.len().is_power_of_two() {
            bail!(Argument, "state length {} is not 2^L with L >= 1", amplitudes.len());
        }
        Ok(Self { amplitudes })
    }

    /// Basis state `|index⟩` of an `L`-site chain.
    pub fn basis(sites: usize, index: usize) -> Result<Self> {
        let dim = 1usize << sites;
        if sites < 1 || index >= dim {
            bail!(Argument, "basis index {index} out of range for L = {sites}");
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn sites(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            bail!(Argument, "dimension mismatch: {} vs {}", self.dim(), other.dim());
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let deviation = (self.norm_sqr() - 1.0).abs();
        if deviation > tol {
            bail!(State, "state norm deviates from 1 by {deviation:e}");
        }
        Ok(())
    }

    /// Rescales to unit norm; fails on the zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            bail!(State, "cannot normalize a state of norm {norm}");
        }
        self.amplitudes.iter_mut().for_each(|c| *c /= norm);
        Ok(self)
    }
}

/// Spin `z_site ∈ {+1, -1}` of a basis state, with sites counted from 1.
pub fn basis_spin(index: usize, site: usize, sites: usize) -> Result<i8> {
    if site < 1 || site > sites {
        bail!(Argument, "site {site} outside 1..={sites}");
    }
    if index >> sites != 0 {
        bail!(Argument, "basis index {index} out of range for L = {sites}");
    }
    Ok(spin_of(index, site - 1))
}

/// Spin at zero-based bit position, unchecked.
#[inline]
pub(crate) fn spin_of(index: usize, bit: usize) -> i8 {
    1 - 2 * ((index >> bit) & 1) as i8
}

/// `⟨z|H₀|z⟩ = Σ h_i z_i + J Σ z_i z_{i+1}` with open boundaries.
pub fn diagonal_energy(index: usize, params: &ModelParams, disorder: &DisorderRealization) -> Result<f64> {
    if disorder.len() != params.sites() {
        bail!(Argument, "disorder length {} != L = {}", disorder.len(), params.sites());
    }
    if index >= params.dim() {
        bail!(Argument, "basis index {index} out of range for L = {}", params.sites());
    }
    Ok(energy_unchecked(index, params.coupling(), disorder.fields()))
}

#[inline]
fn energy_unchecked(index: usize, coupling: f64, fields: &[f64]) -> f64 {
    let field: f64 = fields.iter().enumerate().map(|(bit, h)| h * f64::from(spin_of(index, bit))).sum();
    // Anti-aligned neighbours are the set bits of index ^ (index >> 1).
    let bonds = fields.len() - 1;
    let mask = (1usize << bonds) - 1;
    let anti = ((index ^ (index >> 1)) & mask).count_ones() as f64;
    field + coupling * (bonds as f64 - 2.0 * anti)
}

/// Diagonal of `H₀` for every basis state.
pub fn diagonal_energies(params: &ModelParams, disorder: &DisorderRealization) -> Result<Vec<f64>> {
    if disorder.len() != params.sites() {
        bail!(Argument, "disorder length {} != L = {}", disorder.len(), params.sites());
    }
    Ok((0..params.dim()).map(|index| energy_unchecked(index, params.coupling(), disorder.fields())).collect())
}

/// `coefficient · Σ_i X_i |state⟩`, one output buffer, no normalization.
pub fn apply_transverse(state: &StateVector, coefficient: f64) -> Result<StateVector> {
    if !coefficient.is_finite() {
        bail!(Argument, "coefficient must be finite, got {coefficient}");
    }
    let input = state.amplitudes();
    let sites = state.sites();
    let amplitudes = (0..input.len())
        .map(|index| {
            let gathered: Complex64 = (0..sites).map(|bit| input[index ^ (1 << bit)]).sum();
            gathered * coefficient
        })
        .collect();
    Ok(StateVector { amplitudes })
}

/// All spins along `+z`.
pub fn initial_state(sites: usize) -> Result<StateVector> {
    StateVector::basis(sites, 0)
}

/// Born probabilities `|c_i|^2`.
pub fn output_probs(state: &StateVector) -> Result<Vec<f64>> {
    state.check_normalized(NORM_TOL)?;
    Ok(state.amplitudes().iter().map(|c| c.norm_sqr()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(sites: usize) -> ModelParams {
        ModelParams::new(sites, 1.0, 2.5, 5.0, 8.0).unwrap()
    }

    #[test]
    fn spin_convention() {
        assert_eq!(basis_spin(0, 3, 3).unwrap(), 1);
        assert_eq!(basis_spin(1, 1, 3).unwrap(), -1);
        assert_eq!(basis_spin(5, 2, 3).unwrap(), 1);
        assert_eq!(basis_spin(5, 3, 3).unwrap(), -1);
        assert!(basis_spin(0, 0, 3).is_err());
        assert!(basis_spin(0, 4, 3).is_err());
        assert!(basis_spin(8, 1, 3).is_err());
    }

    #[test]
    fn diagonal_energy_examples() {
        let p = ModelParams::new(2, 1.0, 0.0, 2.0, 8.0).unwrap();
        let d = DisorderRealization::new(vec![1.0, 2.0], &p).unwrap();
        assert_eq!(diagonal_energy(0, &p, &d).unwrap(), 4.0);
        let d0 = DisorderRealization::clean(&p);
        assert_eq!(diagonal_energy(1, &p, &d0).unwrap(), -1.0);

        let p1 = ModelParams::new(1, 3.7, 0.0, 1.0, 8.0).unwrap();
        let d1 = DisorderRealization::new(vec![0.7], &p1).unwrap();
        assert_eq!(diagonal_energy(0, &p1, &d1).unwrap(), 0.7);
    }

    #[test]
    fn diagonal_energy_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for sites in 1..=6 {
            let p = ModelParams::new(sites, 1.3, 1.0, 4.0, 8.0).unwrap();
            let d = DisorderRealization::sample(&p, &mut rng);
            for index in 0..p.dim() {
                let z: Vec<f64> = (1..=sites).map(|s| f64::from(basis_spin(index, s, sites).unwrap())).collect();
                let mut e: f64 = z.iter().zip(d.fields()).map(|(z, h)| z * h).sum();
                for i in 0..sites.saturating_sub(1) {
                    e += 1.3 * z[i] * z[i + 1];
                }
                let got = diagonal_energy(index, &p, &d).unwrap();
                assert!((got - e).abs() < 1e-12, "L={sites} index={index}");
            }
        }
    }

    #[test]
    fn disorder_validation() {
        let p = params(3);
        assert!(DisorderRealization::new(vec![0.0, 1.0], &p).is_err());
        assert!(DisorderRealization::new(vec![0.0, 1.0, 5.1], &p).is_err());
        assert!(DisorderRealization::new(vec![0.0, -0.1, 2.0], &p).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let d = DisorderRealization::sample(&p, &mut rng);
            assert!(d.fields().iter().all(|h| (0.0..=5.0).contains(h)));
        }
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(3, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1.0, 1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(3, 1.0, 1.0, 1.0, 0.0).is_err());
        let p = params(4);
        assert!((p.period() * p.omega() - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn transverse_examples() {
        let one = initial_state(1).unwrap();
        let out = apply_transverse(&one, 2.5).unwrap();
        assert_eq!(out.amplitudes(), &[Complex64::new(0.0, 0.0), Complex64::new(2.5, 0.0)]);

        let two = initial_state(2).unwrap();
        let out = apply_transverse(&two, 1.0).unwrap();
        let expect = [0.0, 1.0, 1.0, 0.0];
        for (a, e) in out.amplitudes().iter().zip(expect) {
            assert_eq!(*a, Complex64::new(e, 0.0));
        }

        let zero = apply_transverse(&two, 0.0).unwrap();
        assert!(zero.amplitudes().iter().all(|c| c.norm() == 0.0));
        assert!(apply_transverse(&two, f64::NAN).is_err());
    }

    #[test]
    fn initial_and_probs() {
        let s = initial_state(1).unwrap();
        assert_eq!(s.amplitudes(), &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
        let s3 = initial_state(3).unwrap();
        assert_eq!(s3.dim(), 8);
        assert_eq!(s3.norm_sqr(), 1.0);
        assert_eq!(output_probs(&initial_state(2).unwrap()).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);

        let uniform = StateVector::from_amplitudes(vec![Complex64::new(0.5, 0.0); 4]).unwrap();
        assert_eq!(output_probs(&uniform).unwrap(), vec![0.25; 4]);

        // Hadamard on site 1 of |00⟩.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(vec![
            Complex64::new(r, 0.0),
            Complex64::new(r, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let p = output_probs(&plus).unwrap();
        for (a, e) in p.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((a - e).abs() < 1e-15);
        }

        let bad = StateVector::from_amplitudes(vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        assert!(matches!(output_probs(&bad), Err(SimError::State(_))));
    }

    #[test]
    fn envelope_range() {
        for k in 0..100 {
            let t = k as f64 * 0.037;
            let f = DriveEnvelope::Sinusoidal.value(t, 8.0);
            assert!((0.0..=1.0).contains(&f));
        }
        assert_eq!(DriveEnvelope::ConstantHalf.value(1.3, 8.0), 0.5);
        assert_eq!(DriveEnvelope::Zero.value(1.3, 8.0), 0.0);
        assert_eq!("constant-half".parse::<DriveEnvelope>().unwrap(), DriveEnvelope::ConstantHalf);
        assert!("square".parse::<DriveEnvelope>().is_err());
    }
}
