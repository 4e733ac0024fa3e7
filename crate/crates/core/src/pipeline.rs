//! Input-to-measurement map: encoder, layered circuit and Z-string protocol.

use crate::encoder::EncodingStack;
use crate::observables::{estimate_from_shots, measurement_vector, sample_bitstrings, MeasurementProtocol};
use crate::qsim::{Circuit, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QuantumPipeline {
    encoder: EncodingStack,
    circuit: Circuit,
    protocol: MeasurementProtocol,
    /// 0 = exact expectations.
    shots: usize,
    shot_seed: u64,
}

impl QuantumPipeline {
    pub fn new(
        encoder: EncodingStack,
        circuit: Circuit,
        protocol: MeasurementProtocol,
        shots: usize,
        shot_seed: u64,
    ) -> Result<Self> {
        if encoder.layer_dims() != circuit.layer_input_dims() {
            return Err(Error::Config(format!(
                "encoder layer dims {:?} do not match circuit layer inputs {:?}",
                encoder.layer_dims(),
                circuit.layer_input_dims()
            )));
        }
        if protocol.n_qubits() != circuit.n_qubits() {
            return Err(Error::Config(format!(
                "protocol is for {} qubits, register has {}",
                protocol.n_qubits(),
                circuit.n_qubits()
            )));
        }
        Ok(Self {
            encoder,
            circuit,
            protocol,
            shots,
            shot_seed,
        })
    }

    pub fn measurement_dim(&self) -> usize {
        self.protocol.len()
    }

    pub fn encoder(&self) -> &EncodingStack {
        &self.encoder
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn protocol(&self) -> &MeasurementProtocol {
        &self.protocol
    }

    /// `|ψ(u)⟩` after all layers.
    pub fn prepare(&self, u: &[f64]) -> Result<StateVector> {
        let ys = self.encoder.encode(u)?;
        self.circuit.run(&ys)
    }

    /// `M_t` for input `u`. With finite shots, `step` keys the sampler so
    /// repeated calls are reproducible.
    pub fn measure(&self, u: &[f64], step: u64) -> Result<Vec<f64>> {
        let psi = self.prepare(u)?;
        if self.shots == 0 {
            return Ok(measurement_vector(&psi, &self.protocol).values);
        }
        let seed = crate::rng::counter_u64(self.shot_seed, 0x5107, step, 0);
        let samples = sample_bitstrings(&psi, self.shots, seed)?;
        Ok(estimate_from_shots(&samples, &self.protocol)?.values)
    }
}
