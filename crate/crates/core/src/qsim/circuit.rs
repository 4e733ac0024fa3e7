use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{detuning_energy, drive_terms, interaction_diagonal};
use super::{coupling_matrix, evolve, evolve_taylor, Hamiltonian, NumberConvention, RegisterLayout, StateVector};
use crate::{Error, Result};

/// How a layer's unitary `exp(-iHτ)` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagator {
    /// Dense Hermitian eigendecomposition, `O(8^N)`.
    Eigen,
    /// Scaled Taylor series on the sparse operator, `O(N 2^N ‖H‖τ)`.
    #[default]
    Taylor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    pub omega: f64,
    pub delta: f64,
    pub phi: f64,
}

/// Smooth bounded map from an encoded triple to drive parameters:
/// `Ω ∈ [0, Ω_max]`, `δ ∈ (-δ_max, δ_max)`, `φ ∈ (-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamMap {
    pub omega_max: f64,
    pub delta_max: f64,
}

impl ParamMap {
    pub fn map(&self, y: &[f64]) -> DriveParams {
        DriveParams {
            omega: self.omega_max * (1.0 + y[0].tanh()) / 2.0,
            delta: self.delta_max * y[1].tanh(),
            phi: PI * y[2].tanh(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerScope {
    /// One `(Ω, δ, φ)` triple for every atom; consumes 3 inputs.
    Global,
    /// One triple per group; consumes 6 inputs.
    Local { groups: [Vec<usize>; 2] },
}

impl LayerScope {
    /// Even- and odd-indexed atoms addressed separately.
    pub fn even_odd(n_qubits: usize) -> Self {
        let even = (0..n_qubits).step_by(2).collect();
        let odd = (1..n_qubits).step_by(2).collect();
        LayerScope::Local { groups: [even, odd] }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            LayerScope::Global => 3,
            LayerScope::Local { .. } => 6,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        if let LayerScope::Local { groups } = self {
            let mut seen = vec![false; n_qubits];
            for &q in groups.iter().flatten() {
                if q >= n_qubits || seen[q] {
                    return Err(Error::Circuit(format!(
                        "local partition must be disjoint and within 0..{n_qubits}; offending index {q}"
                    )));
                }
                seen[q] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::Circuit("local partition does not cover every atom".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseLayer {
    pub scope: LayerScope,
    pub duration: f64,
    pub param_map: ParamMap,
}

impl PulseLayer {
    pub fn global(duration: f64, param_map: ParamMap) -> Self {
        Self {
            scope: LayerScope::Global,
            duration,
            param_map,
        }
    }

    pub fn local_even_odd(n_qubits: usize, duration: f64, param_map: ParamMap) -> Self {
        Self {
            scope: LayerScope::even_odd(n_qubits),
            duration,
            param_map,
        }
    }

    /// Per-site `(Ω, δ, φ)` arrays for this layer.
    fn site_params(&self, n: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut omega = vec![0.0; n];
        let mut delta = vec![0.0; n];
        let mut phi = vec![0.0; n];
        let mut fill = |sites: &mut dyn Iterator<Item = usize>, p: DriveParams| {
            for q in sites {
                omega[q] = p.omega;
                delta[q] = p.delta;
                phi[q] = p.phi;
            }
        };
        match &self.scope {
            LayerScope::Global => fill(&mut (0..n), self.param_map.map(&y[0..3])),
            LayerScope::Local { groups } => {
                fill(&mut groups[0].iter().copied(), self.param_map.map(&y[0..3]));
                fill(&mut groups[1].iter().copied(), self.param_map.map(&y[3..6]));
            }
        }
        (omega, delta, phi)
    }
}

/// A fixed register plus pulse schedule; reusable across time steps.
#[derive(Debug, Clone)]
pub struct Circuit {
    n_qubits: usize,
    coupling: DMatrix<f64>,
    interaction: Vec<f64>,
    layers: Vec<PulseLayer>,
    convention: NumberConvention,
    propagator: Propagator,
}

impl Circuit {
    pub fn new(
        layout: &RegisterLayout,
        layers: Vec<PulseLayer>,
        convention: NumberConvention,
        propagator: Propagator,
    ) -> Result<Self> {
        let n = layout.n_qubits();
        if layers.is_empty() {
            return Err(Error::Circuit("at least one pulse layer is required".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if !(l.duration > 0.0 && l.duration.is_finite()) {
                return Err(Error::Circuit(format!("layer {i} duration must be > 0")));
            }
            if !(l.param_map.omega_max > 0.0 && l.param_map.delta_max > 0.0) {
                return Err(Error::Circuit(format!("layer {i} needs omega_max > 0 and delta_max > 0")));
            }
            l.scope.validate(n)?;
        }
        let coupling = coupling_matrix(layout)?;
        let interaction = interaction_diagonal(&coupling, convention);
        Ok(Self {
            n_qubits: n,
            coupling,
            interaction,
            layers,
            convention,
            propagator,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layers(&self) -> &[PulseLayer] {
        &self.layers
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    /// Input sizes the encoder must produce, one per layer.
    pub fn layer_input_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.scope.input_dim()).collect()
    }

    /// Hamiltonian of layer `i` driven by `y`.
    pub fn layer_hamiltonian(&self, i: usize, y: &[f64]) -> Result<Hamiltonian> {
        let layer = &self.layers[i];
        if y.len() != layer.scope.input_dim() {
            return Err(Error::Circuit(format!(
                "layer {i} expects {} parameters, got {}",
                layer.scope.input_dim(),
                y.len()
            )));
        }
        let (omega, delta, phi) = layer.site_params(self.n_qubits, y);
        let diag = self
            .interaction
            .iter()
            .enumerate()
            .map(|(idx, e)| e + detuning_energy(&delta, idx, self.convention))
            .collect();
        Ok(Hamiltonian::from_parts(self.n_qubits, diag, drive_terms(&omega, &phi)))
    }

    /// Applies every layer in order to `|0⟩^⊗N`.
    pub fn run(&self, ys: &[Vec<f64>]) -> Result<StateVector> {
        if ys.len() != self.layers.len() {
            return Err(Error::Circuit(format!(
                "{} layers but {} parameter vectors",
                self.layers.len(),
                ys.len()
            )));
        }
        let mut state = StateVector::zero_state(self.n_qubits);
        for (i, (layer, y)) in self.layers.iter().zip(ys).enumerate() {
            let h = self.layer_hamiltonian(i, y)?;
            state = match self.propagator {
                Propagator::Taylor => evolve_taylor(&state, &h, layer.duration)?,
                Propagator::Eigen => evolve(&state, &h.to_dense(), layer.duration)?,
            };
        }
        Ok(state)
    }
}

/// One-shot form of [`Circuit::run`].
pub fn run_layers(
    layout: &RegisterLayout,
    layers: &[PulseLayer],
    ys: &[Vec<f64>],
    convention: NumberConvention,
    propagator: Propagator,
) -> Result<StateVector> {
    Circuit::new(layout, layers.to_vec(), convention, propagator)?.run(ys)
}
