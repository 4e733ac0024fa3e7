use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{StateVector, C64, MAX_QUBITS};
use crate::{Error, Result};

/// Which basis state the number operator `n_j` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumberConvention {
    /// `n = (1 + Z)/2`: counts `|0⟩`.
    #[default]
    Paper,
    /// `n = (1 - Z)/2`: counts `|1⟩`.
    Standard,
}

impl NumberConvention {
    /// Eigenvalue of `n_q` on basis state `index`.
    #[inline]
    pub fn occupation(self, index: usize, q: usize) -> f64 {
        let bit = index >> q & 1;
        match (self, bit) {
            (NumberConvention::Paper, 0) | (NumberConvention::Standard, 1) => 1.0,
            _ => 0.0,
        }
    }
}

/// Rydberg-type Hamiltonian kept in its natural sparse form:
///
/// `H = Σ_j Ω_j (cos φ_j X_j + sin φ_j Y_j) + Σ_j δ_j n_j + Σ_{i<j} U_ij n_i n_j`
///
/// The detuning and interaction terms are diagonal; each drive term couples
/// basis states differing in one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    diag: Vec<f64>,
    /// `Ω_j e^{-iφ_j}`: the `⟨..0_j..|H|..1_j..⟩` element.
    drive: Vec<C64>,
}

impl Hamiltonian {
    pub fn new(
        omega: &[f64],
        delta: &[f64],
        phi: &[f64],
        coupling: &DMatrix<f64>,
        convention: NumberConvention,
    ) -> Result<Self> {
        let n = omega.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Assembly(format!("need 1..={MAX_QUBITS} sites, got {n}")));
        }
        if delta.len() != n || phi.len() != n || coupling.nrows() != n || coupling.ncols() != n {
            return Err(Error::Assembly(format!(
                "site arrays disagree: omega {n}, delta {}, phi {}, U {}x{}",
                delta.len(),
                phi.len(),
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        for i in 0..n {
            if coupling[(i, i)] != 0.0 {
                return Err(Error::Assembly(format!("U has nonzero diagonal at {i}")));
            }
            for j in i + 1..n {
                if coupling[(i, j)] != coupling[(j, i)] {
                    return Err(Error::Assembly(format!("U is not symmetric at ({i}, {j})")));
                }
            }
        }
        let diag = interaction_diagonal(coupling, convention)
            .into_iter()
            .enumerate()
            .map(|(idx, v)| v + detuning_energy(delta, idx, convention))
            .collect();
        Ok(Self::from_parts(n, diag, drive_terms(omega, phi)))
    }

    pub(crate) fn from_parts(n_qubits: usize, diag: Vec<f64>, drive: Vec<C64>) -> Self {
        debug_assert_eq!(diag.len(), 1 << n_qubits);
        debug_assert_eq!(drive.len(), n_qubits);
        Self {
            n_qubits,
            diag,
            drive,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// `out = (H + shift) ψ`.
    pub(crate) fn apply_shifted(&self, psi: &[C64], out: &mut [C64], shift: f64) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = psi[i] * (self.diag[i] + shift);
            for (q, d) in self.drive.iter().enumerate() {
                let k = i ^ (1 << q);
                acc += if i >> q & 1 == 0 { d * psi[k] } else { d.conj() * psi[k] };
            }
            *o = acc;
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_shifted(psi.amplitudes(), &mut out, 0.0);
        out
    }

    /// Midpoint of the diagonal's range; subtracting it shrinks the norm bound.
    pub(crate) fn diagonal_center(&self) -> f64 {
        let lo = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo + hi) / 2.0
    }

    /// Max-row-sum bound on `‖H + shift‖`.
    pub(crate) fn norm_bound(&self, shift: f64) -> f64 {
        let off: f64 = self.drive.iter().map(|d| d.norm()).sum();
        self.diag
            .iter()
            .map(|d| (d + shift).abs())
            .fold(0.0, f64::max)
            + off
    }

    pub fn to_dense(&self) -> HermitianOperator {
        let dim = self.dim();
        let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for i in 0..dim {
            m[(i, i)] = C64::new(self.diag[i], 0.0);
            for (q, d) in self.drive.iter().enumerate() {
                let k = i ^ (1 << q);
                m[(i, k)] = if i >> q & 1 == 0 { *d } else { d.conj() };
            }
        }
        HermitianOperator(m)
    }
}

pub(crate) fn drive_terms(omega: &[f64], phi: &[f64]) -> Vec<C64> {
    omega
        .iter()
        .zip(phi)
        .map(|(&w, &p)| C64::from_polar(w, -p))
        .collect()
}

#[inline]
pub(crate) fn detuning_energy(delta: &[f64], index: usize, convention: NumberConvention) -> f64 {
    delta
        .iter()
        .enumerate()
        .map(|(q, d)| d * convention.occupation(index, q))
        .sum()
}

/// `Σ_{i<j} U_ij n_i n_j` on every basis state.
pub(crate) fn interaction_diagonal(coupling: &DMatrix<f64>, convention: NumberConvention) -> Vec<f64> {
    let n = coupling.nrows();
    (0..1usize << n)
        .map(|idx| {
            let mut e = 0.0;
            for i in 0..n {
                if convention.occupation(idx, i) == 0.0 {
                    continue;
                }
                for j in i + 1..n {
                    e += coupling[(i, j)] * convention.occupation(idx, j);
                }
            }
            e
        })
        .collect()
}

/// Dense Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(pub DMatrix<C64>);

impl HermitianOperator {
    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `max |H - H†|`.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.0;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn matvec(&self, psi: &[C64]) -> Vec<C64> {
        let m = &self.0;
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * psi[j]).sum())
            .collect()
    }
}

/// Dense `H` for per-site drive `(Ω, δ, φ)` and couplings `U`.
pub fn build_hamiltonian(
    omega: &[f64],
    delta: &[f64],
    phi: &[f64],
    coupling: &DMatrix<f64>,
    convention: NumberConvention,
) -> Result<HermitianOperator> {
    Ok(Hamiltonian::new(omega, delta, phi, coupling, convention)?.to_dense())
}
