//! Stroboscopic propagation over one drive period and Floquet spectra.
//!
//! One cycle is integrated with symmetric (Strang) splitting on `K` uniform
//! substeps. Each substep applies `exp(-i H₀ Δt/2)`, then the transverse
//! rotation `exp(-i f(t_mid) F Δt Σ X_i)` as a product of single-qubit
//! rotations, then `exp(-i H₀ Δt/2)`. Adjacent half steps are fused, so a
//! cycle costs `K` diagonal phase passes and `K·L` rotation sweeps, all
//! `O(N)` and in place.

use std::f64::consts::TAU;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{bail, Result};
use crate::model::{diagonal_energies, DisorderRealization, DriveEnvelope, ModelParams, StateVector, NORM_TOL};

pub const MIN_SUBSTEPS: usize = 8;
pub const DEFAULT_SUBSTEPS: usize = 256;
pub const DEFAULT_DENSE_LIMIT: usize = 12;

/// Tolerance for unitarity of dense propagators.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Substep count and self-convergence target for the cycle integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub substeps_per_cycle: usize,
    /// Accepted fidelity deficit between `K` and `2K` substeps.
    pub convergence_tol: f64,
    /// Largest `L` for which dense `N×N` propagators are built.
    pub dense_limit: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { substeps_per_cycle: DEFAULT_SUBSTEPS, convergence_tol: 1e-9, dense_limit: DEFAULT_DENSE_LIMIT }
    }
}

impl IntegratorConfig {
    pub fn with_substeps(substeps_per_cycle: usize) -> Self {
        Self { substeps_per_cycle, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.substeps_per_cycle;
        if k < MIN_SUBSTEPS || !k.is_multiple_of(2) {
            bail!(Config, "substeps per cycle must be even and >= {MIN_SUBSTEPS}, got {k}");
        }
        if !(self.convergence_tol > 0.0) {
            bail!(Config, "convergence tolerance must be positive");
        }
        Ok(())
    }
}

/// Transverse rotation angles of every substep, shared by all disorder
/// realizations with the same drive.
#[derive(Clone, Debug)]
pub struct DriveSchedule {
    sites: usize,
    substeps: usize,
    dt: f64,
    /// `(cos θ_k, sin θ_k)` with `θ_k = f(t_k) F Δt`, `t_k` the substep midpoint.
    rotations: Vec<(f64, f64)>,
}

impl DriveSchedule {
    pub fn new(params: &ModelParams, envelope: DriveEnvelope, integrator: &IntegratorConfig) -> Result<Self> {
        integrator.validate()?;
        let substeps = integrator.substeps_per_cycle;
        let dt = params.period() / substeps as f64;
        let rotations = (0..substeps)
            .map(|k| {
                let t_mid = (k as f64 + 0.5) * dt;
                let theta = envelope.value(t_mid, params.omega()) * params.drive_amplitude() * dt;
                (theta.cos(), theta.sin())
            })
            .collect();
        Ok(Self { sites: params.sites(), substeps, dt, rotations })
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Binds a disorder realization, precomputing its diagonal phases.
    pub fn propagator(&self, params: &ModelParams, disorder: &DisorderRealization) -> Result<CyclePropagator<'_>> {
        let energies = diagonal_energies(params, disorder)?;
        let phase = |scale: f64| -> Vec<Complex64> {
            energies.iter().map(|e| Complex64::from_polar(1.0, -e * scale)).collect()
        };
        Ok(CyclePropagator { schedule: self, half: phase(0.5 * self.dt), full: phase(self.dt) })
    }
}

/// One-cycle propagator for a fixed drive and disorder realization.
#[derive(Clone, Debug)]
pub struct CyclePropagator<'a> {
    schedule: &'a DriveSchedule,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl CyclePropagator<'_> {
    /// Applies one drive cycle in place; `amps` must have length `2^L`.
    pub fn apply_in_place(&self, amps: &mut [Complex64]) {
        debug_assert_eq!(amps.len(), self.half.len());
        let rotations = &self.schedule.rotations;
        multiply_diagonal(amps, &self.half);
        for (k, &(c, s)) in rotations.iter().enumerate() {
            rotate_all_sites(amps, self.schedule.sites, c, s);
            let phases = if k + 1 == rotations.len() { &self.half } else { &self.full };
            multiply_diagonal(amps, phases);
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.half.len() {
            bail!(Argument, "state dimension {} != {}", state.dim(), self.half.len());
        }
        state.check_normalized(NORM_TOL)?;
        let mut out = state.clone();
        self.apply_in_place(out.amplitudes_mut());
        Ok(out)
    }
}

#[inline]
fn multiply_diagonal(amps: &mut [Complex64], phases: &[Complex64]) {
    for (a, p) in amps.iter_mut().zip(phases) {
        *a *= p;
    }
}

/// `Π_i (cos θ − i sin θ X_i)` applied in place.
#[inline]
fn rotate_all_sites(amps: &mut [Complex64], sites: usize, c: f64, s: f64) {
    for bit in 0..sites {
        let stride = 1usize << bit;
        for block in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                // c·x − i s·y
                *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                *b = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
            }
        }
    }
}

/// `Û|state⟩` for one drive period.
pub fn propagate_cycle(
    state: &StateVector,
    params: &ModelParams,
    disorder: &DisorderRealization,
    envelope: DriveEnvelope,
    integrator: &IntegratorConfig,
) -> Result<StateVector> {
    if state.dim() != params.dim() {
        bail!(Argument, "state dimension {} != 2^{}", state.dim(), params.sites());
    }
    let schedule = DriveSchedule::new(params, envelope, integrator)?;
    schedule.propagator(params, disorder)?.apply(state)
}

/// Dense one-cycle unitary, column `j` being the propagated basis state `|j⟩`.
pub fn floquet_unitary(
    params: &ModelParams,
    disorder: &DisorderRealization,
    envelope: DriveEnvelope,
    integrator: &IntegratorConfig,
) -> Result<Mat<Complex64>> {
    if params.sites() > integrator.dense_limit {
        bail!(
            Resource,
            "dense propagator for L = {} exceeds the limit L <= {}",
            params.sites(),
            integrator.dense_limit
        );
    }
    let schedule = DriveSchedule::new(params, envelope, integrator)?;
    let propagator = schedule.propagator(params, disorder)?;
    let dim = params.dim();
    let columns: Vec<Vec<Complex64>> = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut column = vec![Complex64::new(0.0, 0.0); dim];
            column[j] = Complex64::new(1.0, 0.0);
            propagator.apply_in_place(&mut column);
            column
        })
        .collect();
    Ok(Mat::from_fn(dim, dim, |i, j| columns[j][i]))
}

/// `max |(U†U − I)_ij|`
pub fn unitarity_residual(u: &Mat<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Eigenphases `θ_n ∈ [0, 2π)` of a one-cycle unitary, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct FloquetSpectrum {
    phases: Vec<f64>,
    moduli_error: f64,
}

impl FloquetSpectrum {
    /// Builds a spectrum from raw phases; they are wrapped into `[0, 2π)` and sorted.
    pub fn from_phases(phases: impl IntoIterator<Item = f64>) -> Self {
        let mut phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        phases.sort_by(f64::total_cmp);
        Self { phases, moduli_error: 0.0 }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Largest `| |λ_n| − 1 |` over the eigenvalues.
    pub fn moduli_error(&self) -> f64 {
        self.moduli_error
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

fn wrap_phase(theta: f64) -> f64 {
    let wrapped = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Dense eigendecomposition of a unitary matrix.
pub fn eigenphases(u: &Mat<Complex64>) -> Result<FloquetSpectrum> {
    if u.nrows() != u.ncols() {
        bail!(Argument, "matrix is {}x{}, not square", u.nrows(), u.ncols());
    }
    let residual = unitarity_residual(u);
    if !(residual < UNITARITY_TOL) {
        bail!(Numeric, "matrix is not unitary: max |U†U − I| = {residual:e}");
    }
    let values =
        u.eigenvalues().map_err(|e| crate::error::SimError::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let moduli_error = values.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    if !(moduli_error < UNITARITY_TOL) {
        bail!(Numeric, "eigenvalue moduli deviate from 1 by {moduli_error:e}");
    }
    let mut spectrum = FloquetSpectrum::from_phases(values.iter().map(|z| z.arg()));
    spectrum.moduli_error = moduli_error;
    Ok(spectrum)
}

/// `|ψ⟩_m = Û_m ⋯ Û_1 |ψ⟩_0`, one realization per cycle; returns every `|ψ⟩_m`.
pub fn evolve_quenched(
    state0: &StateVector,
    params: &ModelParams,
    realizations: &[DisorderRealization],
    envelope: DriveEnvelope,
    integrator: &IntegratorConfig,
) -> Result<Vec<StateVector>> {
    if state0.dim() != params.dim() {
        bail!(Argument, "state dimension {} != 2^{}", state0.dim(), params.sites());
    }
    state0.check_normalized(NORM_TOL)?;
    let schedule = DriveSchedule::new(params, envelope, integrator)?;
    let mut current = state0.clone();
    let mut trajectory = Vec::with_capacity(realizations.len());
    for disorder in realizations {
        schedule.propagator(params, disorder)?.apply_in_place(current.amplitudes_mut());
        trajectory.push(current.clone());
    }
    Ok(trajectory)
}

/// `1 − |⟨a|b⟩|²` between the `K`- and `2K`-substep propagation of `state`.
pub fn self_convergence_deficit(
    state: &StateVector,
    params: &ModelParams,
    disorder: &DisorderRealization,
    envelope: DriveEnvelope,
    integrator: &IntegratorConfig,
) -> Result<f64> {
    let coarse = propagate_cycle(state, params, disorder, envelope, integrator)?;
    let fine_config = IntegratorConfig { substeps_per_cycle: 2 * integrator.substeps_per_cycle, ..*integrator };
    let fine = propagate_cycle(state, params, disorder, envelope, &fine_config)?;
    Ok(1.0 - coarse.inner(&fine)?.norm_sqr())
}

/// Doubles `K` from the configured value until the `K`/`2K` fidelity deficit
/// on `state` falls below `convergence_tol`, giving up past `max_substeps`.
pub fn converge_substeps(
    state: &StateVector,
    params: &ModelParams,
    disorder: &DisorderRealization,
    envelope: DriveEnvelope,
    integrator: &IntegratorConfig,
    max_substeps: usize,
) -> Result<IntegratorConfig> {
    let mut config = *integrator;
    loop {
        let deficit = self_convergence_deficit(state, params, disorder, envelope, &config)?;
        if deficit < config.convergence_tol {
            return Ok(config);
        }
        if 2 * config.substeps_per_cycle > max_substeps {
            bail!(Numeric, "integrator did not converge: deficit {deficit:e} at K = {}", config.substeps_per_cycle);
        }
        config.substeps_per_cycle *= 2;
    }
}
