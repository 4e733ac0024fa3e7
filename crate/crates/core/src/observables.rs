//! Z-string measurement protocols, exact expectations and finite-shot
//! estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par::{map_slice, Parallelism};
use crate::qsim::StateVector;
use crate::{Error, Result};

/// Ordered list of Z-string supports (0-based qubit indices), sorted by
/// `(size, indices)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementProtocol {
    terms: Vec<Vec<usize>>,
    masks: Vec<usize>,
    n_qubits: usize,
    max_order: usize,
}

impl MeasurementProtocol {
    /// Protocol from an explicit list of supports.
    pub fn from_terms(n_qubits: usize, mut terms: Vec<Vec<usize>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Protocol("protocol needs at least one term".into()));
        }
        for t in terms.iter_mut() {
            t.sort_unstable();
            if t.is_empty() {
                return Err(Error::Protocol("empty Z-string support".into()));
            }
            if t.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Protocol(format!("repeated qubit in term {t:?}")));
            }
            if let Some(q) = t.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::Protocol(format!("qubit {q} out of range for N = {n_qubits}")));
            }
        }
        terms.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        terms.dedup();
        let max_order = terms.iter().map(Vec::len).max().unwrap_or(0);
        let masks = terms.iter().map(|t| t.iter().fold(0usize, |m, q| m | 1 << q)).collect();
        Ok(Self {
            terms,
            masks,
            n_qubits,
            max_order,
        })
    }

    pub fn terms(&self) -> &[Vec<usize>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }
}

/// Every support of size `1..=max_order` on `n_qubits` qubits.
pub fn enumerate_z_protocol(n_qubits: usize, max_order: usize) -> Result<MeasurementProtocol> {
    if max_order < 1 || max_order > n_qubits {
        return Err(Error::Protocol(format!(
            "max_order must be in 1..={n_qubits}, got {max_order}"
        )));
    }
    let mut terms = Vec::new();
    for k in 1..=max_order {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            terms.push(comb.clone());
            // next k-combination in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| comb[i] < n_qubits - k + i) else {
                break;
            };
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    MeasurementProtocol::from_terms(n_qubits, terms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub values: Vec<f64>,
    /// 0 for exact expectations.
    pub shot_count: usize,
}

#[inline]
fn parity_sign(index: usize, mask: usize) -> f64 {
    if (index & mask).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn expectation_from_probs(probs: &[f64], mask: usize) -> f64 {
    let v: f64 = probs.iter().enumerate().map(|(i, p)| p * parity_sign(i, mask)).sum();
    v.clamp(-1.0, 1.0)
}

/// `⟨Π_{q∈subset} Z_q⟩`.
pub fn expectation(state: &StateVector, subset: &[usize]) -> f64 {
    let mask = subset.iter().fold(0usize, |m, q| m | 1 << q);
    expectation_from_probs(&state.probabilities(), mask)
}

/// Exact expectations for every protocol term, in protocol order.
pub fn measurement_vector(state: &StateVector, protocol: &MeasurementProtocol) -> MeasurementVector {
    measurement_vector_with(state, protocol, Parallelism::Sequential)
}

pub fn measurement_vector_with(
    state: &StateVector,
    protocol: &MeasurementProtocol,
    mode: Parallelism,
) -> MeasurementVector {
    let probs = state.probabilities();
    let values = map_slice(mode, &protocol.masks, |&m| expectation_from_probs(&probs, m));
    MeasurementVector { values, shot_count: 0 }
}

/// Basis-state indices drawn i.i.d. from `|ψ_i|²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Samples {
    pub n_qubits: usize,
    pub outcomes: Vec<usize>,
}

impl Samples {
    /// Bitstring of outcome `k`, qubit 0 first.
    pub fn bitstring(&self, k: usize) -> String {
        (0..self.n_qubits)
            .map(|q| if self.outcomes[k] >> q & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

pub fn sample_bitstrings(state: &StateVector, shots: usize, seed: u64) -> Result<Samples> {
    if shots == 0 {
        return Err(Error::Protocol("shots must be >= 1".into()));
    }
    let mut cdf = Vec::with_capacity(state.dim());
    let mut acc = 0.0;
    for p in state.probabilities() {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = state.dim() - 1;
    let outcomes = (0..shots)
        .map(|_| {
            let r = rng.gen::<f64>() * total;
            cdf.partition_point(|&c| c <= r).min(last)
        })
        .collect();
    Ok(Samples {
        n_qubits: state.n_qubits(),
        outcomes,
    })
}

/// Sample means of `Π z_q` per term.
pub fn estimate_from_shots(samples: &Samples, protocol: &MeasurementProtocol) -> Result<MeasurementVector> {
    if samples.outcomes.is_empty() {
        return Err(Error::Protocol("no samples".into()));
    }
    let n = samples.outcomes.len() as f64;
    let values = protocol
        .masks
        .iter()
        .map(|&m| samples.outcomes.iter().map(|&i| parity_sign(i, m)).sum::<f64>() / n)
        .collect();
    Ok(MeasurementVector {
        values,
        shot_count: samples.outcomes.len(),
    })
}
