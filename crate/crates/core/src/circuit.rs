//! One-dimensional random quantum circuits used as the digital baseline.
//!
//! Every layer is a sub-layer of single-qubit gates followed by a brickwork
//! sub-layer of nearest-neighbour CZ gates. Layer 1 is all Hadamards; later
//! layers draw each gate uniformly from `{√X, √Y, T}`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{bail, Result};
use crate::model::{initial_state, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H,
    SqrtX,
    SqrtY,
    T,
}

/// The random single-qubit gate set of layers 2..m.
pub const RANDOM_GATES: [Gate; 3] = [Gate::SqrtX, Gate::SqrtY, Gate::T];

impl Gate {
    /// Row-major 2×2 matrix, basis order `(|0⟩, |1⟩)`.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let c = Complex64::new;
        match self {
            Gate::H => {
                let r = FRAC_1_SQRT_2;
                [[c(r, 0.0), c(r, 0.0)], [c(r, 0.0), c(-r, 0.0)]]
            }
            Gate::SqrtX => [[c(0.5, 0.5), c(0.5, -0.5)], [c(0.5, -0.5), c(0.5, 0.5)]],
            Gate::SqrtY => [[c(0.5, 0.5), c(-0.5, -0.5)], [c(0.5, 0.5), c(0.5, 0.5)]],
            Gate::T => {
                [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]]
            }
        }
    }
}

/// One circuit layer: a gate per qubit then CZ on disjoint bonds.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitLayer {
    pub single_qubit_gates: Vec<Gate>,
    /// Zero-based `(i, i+1)` qubit pairs.
    pub cz_bonds: Vec<(usize, usize)>,
}

/// Sampling toggles whose use in the reference numerics is unknown; both off by default.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CircuitOptions {
    /// Forbid drawing the same gate on a qubit as in its previous layer.
    pub no_repeat: bool,
    /// Append a closing layer of Hadamards (no CZ).
    pub final_hadamard: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    sites: usize,
    layers: Vec<CircuitLayer>,
    final_hadamard: bool,
}

impl Circuit {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn layers(&self) -> &[CircuitLayer] {
        &self.layers
    }

    pub fn final_hadamard(&self) -> bool {
        self.final_hadamard
    }
}

/// Brickwork bonds of the 1-based layer `layer`: even bonds `(1,2),(3,4),…`
/// on odd layers, odd bonds `(2,3),(4,5),…` on even layers.
pub fn brickwork_bonds(sites: usize, layer: usize) -> Vec<(usize, usize)> {
    let first = if layer % 2 == 1 { 0 } else { 1 };
    (first..sites.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect()
}

pub fn build_circuit<R: Rng + ?Sized>(sites: usize, depth: usize, rng: &mut R) -> Result<Circuit> {
    build_circuit_with(sites, depth, CircuitOptions::default(), rng)
}

pub fn build_circuit_with<R: Rng + ?Sized>(
    sites: usize,
    depth: usize,
    options: CircuitOptions,
    rng: &mut R,
) -> Result<Circuit> {
    if depth < 1 {
        bail!(Argument, "circuit needs at least one layer");
    }
    if sites < 1 {
        bail!(Argument, "circuit needs at least one qubit");
    }
    let mut layers: Vec<CircuitLayer> = Vec::with_capacity(depth);
    for layer in 1..=depth {
        let single_qubit_gates = if layer == 1 {
            vec![Gate::H; sites]
        } else {
            let previous = &layers[layer - 2].single_qubit_gates;
            (0..sites)
                .map(|q| {
                    if options.no_repeat && previous[q] != Gate::H {
                        let allowed: Vec<Gate> = RANDOM_GATES.iter().copied().filter(|g| *g != previous[q]).collect();
                        allowed[rng.random_range(0..allowed.len())]
                    } else {
                        RANDOM_GATES[rng.random_range(0..RANDOM_GATES.len())]
                    }
                })
                .collect()
        };
        layers.push(CircuitLayer { single_qubit_gates, cz_bonds: brickwork_bonds(sites, layer) });
    }
    Ok(Circuit { sites, layers, final_hadamard: options.final_hadamard })
}

fn apply_single(amps: &mut [Complex64], bit: usize, m: &[[Complex64; 2]; 2]) {
    let stride = 1usize << bit;
    for block in amps.chunks_exact_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    }
}

fn apply_cz(amps: &mut [Complex64], i: usize, j: usize) {
    let mask = (1usize << i) | (1usize << j);
    for (index, a) in amps.iter_mut().enumerate() {
        if index & mask == mask {
            *a = -*a;
        }
    }
}

fn apply_layer(amps: &mut [Complex64], layer: &CircuitLayer) {
    for (bit, gate) in layer.single_qubit_gates.iter().enumerate() {
        apply_single(amps, bit, &gate.matrix());
    }
    for &(i, j) in &layer.cz_bonds {
        apply_cz(amps, i, j);
    }
}

fn apply_closing_hadamards(amps: &mut [Complex64], sites: usize) {
    let h = Gate::H.matrix();
    for bit in 0..sites {
        apply_single(amps, bit, &h);
    }
}

/// Runs the circuit from `|0…0⟩`.
pub fn simulate_circuit(circuit: &Circuit) -> Result<StateVector> {
    let mut state = initial_state(circuit.sites)?;
    let amps = state.amplitudes_mut();
    for layer in &circuit.layers {
        apply_layer(amps, layer);
    }
    if circuit.final_hadamard {
        apply_closing_hadamards(amps, circuit.sites);
    }
    Ok(state)
}

/// Output state of every depth-`m` prefix, `m = 1..=layers`; the closing
/// Hadamards (if enabled) are applied to each prefix.
pub fn simulate_circuit_prefixes(circuit: &Circuit) -> Result<Vec<StateVector>> {
    let mut state = initial_state(circuit.sites)?;
    let mut out = Vec::with_capacity(circuit.layers.len());
    for layer in &circuit.layers {
        apply_layer(state.amplitudes_mut(), layer);
        let mut snapshot = state.clone();
        if circuit.final_hadamard {
            apply_closing_hadamards(snapshot.amplitudes_mut(), circuit.sites);
        }
        out.push(snapshot);
    }
    Ok(out)
}
