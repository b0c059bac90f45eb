//! Closed-form Magnus terms of the Floquet Hamiltonian (reference time
//! `t₀ = 0` unless stated) and the truncated stroboscopic evolution.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{bail, Result, SimError};
use crate::evolution::DEFAULT_DENSE_LIMIT;
use crate::model::{DisorderRealization, ModelParams, StateVector, NORM_TOL};

const HERMITIAN_TOL: f64 = 1e-10;

/// Single-site Pauli factor of a Pauli string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Dense `N×N` operator in the computational basis.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: Mat<Complex64>,
    hermitian: bool,
}

impl DenseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { matrix: Mat::zeros(dim, dim), hermitian: true }
    }

    /// Wraps a matrix; `hermitian` is verified when set.
    pub fn new(matrix: Mat<Complex64>, hermitian: bool) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            bail!(Argument, "operator must be square");
        }
        let op = Self { matrix, hermitian };
        if hermitian {
            let dev = op.hermiticity_error();
            if dev >= HERMITIAN_TOL {
                bail!(Numeric, "operator flagged hermitian deviates by {dev:e}");
            }
        }
        Ok(op)
    }

    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |M − M†|`
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| self.matrix[(i, j)].norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// Adds `coefficient · P_1 ⊗ P_2 ⊗ ⋯` where `factors` lists `(bit, Pauli)`
    /// with zero-based bit positions (bit 0 is site 1).
    pub fn add_pauli_string(&mut self, coefficient: f64, factors: &[(usize, Pauli)]) {
        let dim = self.dim();
        let mut flip = 0usize;
        for &(bit, pauli) in factors {
            if matches!(pauli, Pauli::X | Pauli::Y) {
                flip |= 1 << bit;
            }
        }
        for col in 0..dim {
            let row = col ^ flip;
            let mut amp = Complex64::new(coefficient, 0.0);
            for &(bit, pauli) in factors {
                let set = (col >> bit) & 1 == 1;
                match pauli {
                    Pauli::X => {}
                    // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                    Pauli::Y => amp *= if set { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                    Pauli::Z => {
                        if set {
                            amp = -amp;
                        }
                    }
                }
            }
            self.matrix[(row, col)] += amp;
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        let n = self.dim();
        for j in 0..n {
            for i in 0..n {
                self.matrix[(i, j)] *= factor;
            }
        }
        self
    }

    pub fn sum(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.dim() != other.dim() {
            bail!(Argument, "dimension mismatch: {} vs {}", self.dim(), other.dim());
        }
        Ok(DenseOperator { matrix: &self.matrix + &other.matrix, hermitian: self.hermitian && other.hermitian })
    }

    /// `exp(−i self · time) |state⟩` via the hermitian eigendecomposition.
    pub fn evolve(&self, state: &StateVector, time: f64) -> Result<StateVector> {
        if !self.hermitian {
            bail!(Argument, "time evolution needs a hermitian generator");
        }
        if state.dim() != self.dim() {
            bail!(Argument, "state dimension {} != {}", state.dim(), self.dim());
        }
        let eig = self
            .matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| SimError::Numeric(format!("hermitian eigendecomposition failed: {e:?}")))?;
        let vectors = eig.U();
        let values = eig.S().column_vector();
        let n = self.dim();
        let amps = state.amplitudes();
        // coefficients in the eigenbasis, rotated by their phases
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let overlap: Complex64 = (0..n).map(|i| vectors[(i, k)].conj() * amps[i]).sum();
                overlap * Complex64::from_polar(1.0, -values[k].re * time)
            })
            .collect();
        let out = (0..n).map(|i| (0..n).map(|k| vectors[(i, k)] * coeffs[k]).sum()).collect();
        StateVector::from_amplitudes(out)
    }
}

fn check_dense(params: &ModelParams) -> Result<()> {
    if params.sites() > DEFAULT_DENSE_LIMIT {
        bail!(Resource, "dense operators limited to L <= {DEFAULT_DENSE_LIMIT}, got {}", params.sites());
    }
    Ok(())
}

fn check_disorder(params: &ModelParams, disorder: &DisorderRealization) -> Result<()> {
    if disorder.len() != params.sites() {
        bail!(Argument, "disorder length {} != L = {}", disorder.len(), params.sites());
    }
    Ok(())
}

/// `H₀` as a dense operator.
pub fn static_hamiltonian(params: &ModelParams, disorder: &DisorderRealization) -> Result<DenseOperator> {
    check_dense(params)?;
    check_disorder(params, disorder)?;
    let mut op = DenseOperator::zeros(params.dim());
    let h = disorder.fields();
    for (j, hj) in h.iter().enumerate() {
        op.add_pauli_string(*hj, &[(j, Pauli::Z)]);
    }
    for j in 0..params.sites() - 1 {
        op.add_pauli_string(params.coupling(), &[(j, Pauli::Z), (j + 1, Pauli::Z)]);
    }
    Ok(op)
}

/// `H_d = F Σ X_i` as a dense operator.
pub fn drive_hamiltonian(params: &ModelParams) -> Result<DenseOperator> {
    check_dense(params)?;
    let mut op = DenseOperator::zeros(params.dim());
    for j in 0..params.sites() {
        op.add_pauli_string(params.drive_amplitude(), &[(j, Pauli::X)]);
    }
    Ok(op)
}

/// Zeroth order: the period average `H₀ + ½ H_d`.
pub fn hf0(params: &ModelParams, disorder: &DisorderRealization) -> Result<DenseOperator> {
    static_hamiltonian(params, disorder)?.sum(&drive_hamiltonian(params)?.scaled(0.5))
}

/// First order at reference time `t0`:
/// `(F sin ωt₀ / ω) [Σ h_j Y_j + J Σ (Y_j Z_{j+1} + Z_j Y_{j+1})]`.
pub fn hf1(params: &ModelParams, disorder: &DisorderRealization, t0: f64) -> Result<DenseOperator> {
    check_dense(params)?;
    check_disorder(params, disorder)?;
    let mut op = DenseOperator::zeros(params.dim());
    let phase = params.omega() * t0;
    // sin(π) is ~1e-16 in floating point
    let sine = match phase.sin() {
        s if s.abs() < 1e-14 => 0.0,
        s => s,
    };
    let prefactor = params.drive_amplitude() * sine / params.omega();
    if prefactor == 0.0 {
        return Ok(op);
    }
    let j_c = params.coupling();
    for (j, hj) in disorder.fields().iter().enumerate() {
        op.add_pauli_string(prefactor * hj, &[(j, Pauli::Y)]);
    }
    for j in 0..params.sites() - 1 {
        op.add_pauli_string(prefactor * j_c, &[(j, Pauli::Y), (j + 1, Pauli::Z)]);
        op.add_pauli_string(prefactor * j_c, &[(j, Pauli::Z), (j + 1, Pauli::Y)]);
    }
    Ok(op)
}

/// Second order at `t₀ = 0`, including the three-body `Z X Z` terms.
pub fn hf2(params: &ModelParams, disorder: &DisorderRealization) -> Result<DenseOperator> {
    check_dense(params)?;
    check_disorder(params, disorder)?;
    let sites = params.sites();
    let (f, w, j_c) = (params.drive_amplitude(), params.omega(), params.coupling());
    let h = disorder.fields();
    let mut op = DenseOperator::zeros(params.dim());
    if f == 0.0 {
        return Ok(op);
    }

    let a = 2.0 * f / (w * w);
    for (j, hj) in h.iter().enumerate() {
        op.add_pauli_string(a * hj * hj, &[(j, Pauli::X)]);
    }
    for j in 0..sites.saturating_sub(1) {
        op.add_pauli_string(a * 2.0 * j_c * h[j], &[(j, Pauli::X), (j + 1, Pauli::Z)]);
        op.add_pauli_string(a * 2.0 * j_c * h[j + 1], &[(j, Pauli::Z), (j + 1, Pauli::X)]);
        op.add_pauli_string(a * j_c * j_c, &[(j, Pauli::X)]);
        op.add_pauli_string(a * j_c * j_c, &[(j + 1, Pauli::X)]);
    }
    for j in 0..sites.saturating_sub(2) {
        op.add_pauli_string(a * 2.0 * j_c * j_c, &[(j, Pauli::Z), (j + 1, Pauli::X), (j + 2, Pauli::Z)]);
    }

    let b = -5.0 * f * f / (4.0 * w * w);
    for (j, hj) in h.iter().enumerate() {
        op.add_pauli_string(b * hj, &[(j, Pauli::Z)]);
    }
    for j in 0..sites.saturating_sub(1) {
        op.add_pauli_string(b * 2.0 * j_c, &[(j, Pauli::Z), (j + 1, Pauli::Z)]);
        op.add_pauli_string(-b * 2.0 * j_c, &[(j, Pauli::Y), (j + 1, Pauli::Y)]);
    }
    Ok(op)
}

/// Truncation order of the Magnus series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MagnusOrder {
    Zeroth,
    Second,
}

impl TryFrom<usize> for MagnusOrder {
    type Error = SimError;

    fn try_from(order: usize) -> Result<Self> {
        match order {
            0 => Ok(MagnusOrder::Zeroth),
            2 => Ok(MagnusOrder::Second),
            n => Err(SimError::Argument(format!("unsupported Magnus order {n}; use 0 or 2"))),
        }
    }
}

/// Effective Hamiltonian truncated at `order` (the first-order term vanishes at `t₀ = 0`).
pub fn truncated_hamiltonian(
    params: &ModelParams,
    disorder: &DisorderRealization,
    order: MagnusOrder,
) -> Result<DenseOperator> {
    let zeroth = hf0(params, disorder)?;
    match order {
        MagnusOrder::Zeroth => Ok(zeroth),
        MagnusOrder::Second => zeroth.sum(&hf2(params, disorder)?),
    }
}

/// `exp(−i Σ_{l≤n} H_F^{(l)} T) |state0⟩`.
pub fn truncated_evolve(
    state0: &StateVector,
    params: &ModelParams,
    disorder: &DisorderRealization,
    order: usize,
) -> Result<StateVector> {
    let order = MagnusOrder::try_from(order)?;
    state0.check_normalized(NORM_TOL)?;
    truncated_hamiltonian(params, disorder, order)?.evolve(state0, params.period())
}

/// `|⟨a|b⟩|²`
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}
