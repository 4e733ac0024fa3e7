//! Classical pre-processing: fixed random linear maps followed by
//! elementwise activations, producing one pulse-parameter vector per
//! data-dependent circuit layer. Also hosts the one- and two-qubit
//! feature-map demonstrations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::qsim::{gates, StateVector};
use crate::rng::{counter_symmetric, streams};
use crate::{observables, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Cos,
    /// `arccos` on the argument clamped to [-1, 1].
    ArccosClamped,
}

impl Activation {
    pub const ALL: [Activation; 4] = [
        Activation::Identity,
        Activation::Tanh,
        Activation::Cos,
        Activation::ArccosClamped,
    ];

    #[inline]
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Cos => x.cos(),
            Activation::ArccosClamped => x.clamp(-1.0, 1.0).acos(),
        }
    }

    pub fn apply_in_place(self, v: &mut [f64]) {
        if self != Activation::Identity {
            v.iter_mut().for_each(|x| *x = self.eval(*x));
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Cos => "cos",
            Activation::ArccosClamped => "arccos_clamped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingLayer {
    pub weights: DMatrix<f64>,
    pub activation: Activation,
}

/// Immutable stack of `(W_i, f_i)` pairs; layer `i` feeds circuit layer `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingStack {
    layers: Vec<EncodingLayer>,
    d_input: usize,
    seed: u64,
    weight_scale: f64,
}

impl EncodingStack {
    pub fn layers(&self) -> &[EncodingLayer] {
        &self.layers
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn d_input(&self) -> usize {
        self.d_input
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weight_scale(&self) -> f64 {
        self.weight_scale
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.weights.nrows()).collect()
    }

    /// `Y_i = f_i(W_i u)` for every layer.
    pub fn encode(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        if u.len() != self.d_input {
            return Err(Error::Encoding {
                expected: self.d_input,
                got: u.len(),
            });
        }
        let u = DVector::from_column_slice(u);
        Ok(self
            .layers
            .iter()
            .map(|layer| {
                let mut y: Vec<f64> = (&layer.weights * &u).iter().copied().collect();
                layer.activation.apply_in_place(&mut y);
                y
            })
            .collect())
    }
}

/// Draws every `W_i` entry uniformly from `[-weight_scale, weight_scale]`,
/// keyed by `(seed, layer, row, col)`.
pub fn build_encoding_stack(
    seed: u64,
    n_layers: usize,
    d_input: usize,
    layer_dims: &[usize],
    activations: &[Activation],
    weight_scale: f64,
) -> Result<EncodingStack> {
    if n_layers == 0 || layer_dims.len() != n_layers || activations.len() != n_layers {
        return Err(Error::Config(format!(
            "encoder expects n_layers >= 1 and matching lists: n_layers={n_layers}, dims={}, activations={}",
            layer_dims.len(),
            activations.len()
        )));
    }
    if !(weight_scale > 0.0 && weight_scale.is_finite()) {
        return Err(Error::Config(format!("encoder weight_scale must be > 0, got {weight_scale}")));
    }
    if d_input == 0 || layer_dims.contains(&0) {
        return Err(Error::Config("encoder dimensions must be >= 1".into()));
    }
    let layers = layer_dims
        .iter()
        .zip(activations)
        .enumerate()
        .map(|(i, (&rows, &activation))| {
            let stream = streams::ENCODER_BASE + i as u64;
            let weights = DMatrix::from_fn(rows, d_input, |r, c| {
                counter_symmetric(seed, stream, r as u64, c as u64, weight_scale)
            });
            EncodingLayer { weights, activation }
        })
        .collect();
    Ok(EncodingStack {
        layers,
        d_input,
        seed,
        weight_scale,
    })
}

/// `⟨X⟩` of `R_Z(f(u))|+⟩`, evaluated on the simulator (analytically `cos f(u)`).
pub fn single_qubit_feature_demo(u: f64, f: Activation) -> f64 {
    let a = f.eval(u);
    let mut psi = StateVector::plus_state(1);
    gates::rz(&mut psi, 0, a);
    x_string(&psi, &[0])
}

/// `(⟨X₁⟩, ⟨X₁X₂⟩)` after `|++⟩ → R_Z(a)⊗R_Z(a) → CX(1→2)` with `a = f(u)`.
///
/// Analytically `(cos² a, cos a)`.
pub fn two_qubit_feature_demo(u: f64, f: Activation) -> (f64, f64) {
    let a = f.eval(u);
    let mut psi = StateVector::plus_state(2);
    gates::rz(&mut psi, 0, a);
    gates::rz(&mut psi, 1, a);
    gates::cx(&mut psi, 0, 1);
    (x_string(&psi, &[0]), x_string(&psi, &[0, 1]))
}

// X-string expectation by rotating the measured qubits into the Z basis.
fn x_string(psi: &StateVector, qubits: &[usize]) -> f64 {
    let mut rotated = psi.clone();
    for &q in qubits {
        gates::hadamard(&mut rotated, q);
    }
    observables::expectation(&rotated, qubits)
}
