//! Dense statevector simulation of a neutral-atom register.
//!
//! Basis convention: bit `j` of a basis index is qubit `j`, and `|0⟩` is the
//! `+1` eigenstate of `Z`.

mod circuit;
mod evolve;
pub mod gates;
mod hamiltonian;
mod layout;

pub use circuit::{run_layers, Circuit, DriveParams, LayerScope, ParamMap, Propagator, PulseLayer};
pub use evolve::{evolve, evolve_reference, evolve_taylor};
pub use hamiltonian::{build_hamiltonian, Hamiltonian, HermitianOperator, NumberConvention};
pub use layout::{coupling_matrix, GeometryPreset, RegisterLayout};

use nalgebra::Complex;

use crate::{Error, Result};

pub type C64 = Complex<f64>;

/// Hard ceiling on register size for dense simulation.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    n_qubits: usize,
}

impl StateVector {
    /// `|0⟩^⊗n`.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Self { amps, n_qubits }
    }

    /// `|+⟩^⊗n`.
    pub fn plus_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = 1.0 / (dim as f64).sqrt();
        Self {
            amps: vec![C64::new(a, 0.0); dim],
            n_qubits,
        }
    }

    /// Wraps amplitudes that are already normalized (to 1e-10).
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::Circuit(format!("state length {dim} is not 2^N with N >= 1")));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        let s = Self { amps, n_qubits };
        let norm = s.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!("state norm {norm} is not 1")));
        }
        Ok(s)
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numerical("cannot normalize a zero or non-finite vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Relabels qubits: qubit `q` of `self` becomes qubit `perm[q]` of the result.
    pub fn permute_qubits(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n_qubits);
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (i, a) in self.amps.iter().enumerate() {
            let mut j = 0usize;
            for (q, &p) in perm.iter().enumerate() {
                if i >> q & 1 == 1 {
                    j |= 1 << p;
                }
            }
            out[j] = *a;
        }
        Self {
            amps: out,
            n_qubits: self.n_qubits,
        }
    }

    /// Largest amplitude-wise distance.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
