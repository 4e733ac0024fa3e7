use nalgebra::{DVector, SymmetricEigen};

use super::{Hamiltonian, HermitianOperator, StateVector, C64};
use crate::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_SWEEPS: usize = 10_000;

/// `exp(-iHt) ψ` through a full Hermitian eigendecomposition.
pub fn evolve(state: &StateVector, h: &HermitianOperator, duration: f64) -> Result<StateVector> {
    check_dims(state, h.dim(), duration)?;
    if duration == 0.0 {
        return Ok(state.clone());
    }
    let herm_err = h.hermiticity_error();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), EIGEN_EPS, EIGEN_MAX_SWEEPS).ok_or_else(|| {
        Error::Numerical(format!(
            "eigendecomposition did not converge (dim {}, hermiticity error {herm_err:.3e}, max |H_ij| {:.3e})",
            h.dim(),
            h.matrix().iter().map(|v| v.norm()).fold(0.0, f64::max)
        ))
    })?;
    let psi = DVector::from_column_slice(state.amplitudes());
    let mut coeffs = eig.eigenvectors.adjoint() * psi;
    for (c, &lambda) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= C64::from_polar(1.0, -lambda * duration);
    }
    let out = &eig.eigenvectors * coeffs;
    finish(out.iter().copied().collect())
}

/// Test oracle: `substeps` repeated applications of a Taylor series of
/// `exp(-iH dt)` with dense matrix-vector products, each summed until
/// the next term drops below round-off.
pub fn evolve_reference(
    state: &StateVector,
    h: &HermitianOperator,
    duration: f64,
    substeps: usize,
) -> Result<StateVector> {
    check_dims(state, h.dim(), duration)?;
    if substeps == 0 {
        return Err(Error::Numerical("substeps must be >= 1".into()));
    }
    let dt = duration / substeps as f64;
    let mut psi = state.amplitudes().to_vec();
    for _ in 0..substeps {
        let mut term = psi.clone();
        let mut acc = psi.clone();
        for k in 1..=60 {
            let next = h.matvec(&term);
            let factor = C64::new(0.0, -dt / k as f64);
            term = next.into_iter().map(|v| v * factor).collect();
            acc.iter_mut().zip(&term).for_each(|(a, t)| *a += t);
            if term.iter().map(|t| t.norm()).sum::<f64>() < 1e-18 {
                break;
            }
        }
        psi = acc;
    }
    StateVector::from_amplitudes(psi)
}

/// `exp(-iHt) ψ` by a scaled Taylor series on the sparse Hamiltonian.
///
/// The diagonal is re-centred to shrink `‖H‖` and the resulting global
/// phase is restored at the end, so amplitudes match [`evolve`] exactly
/// up to round-off.
pub fn evolve_taylor(state: &StateVector, h: &Hamiltonian, duration: f64) -> Result<StateVector> {
    check_dims(state, h.dim(), duration)?;
    if duration == 0.0 {
        return Ok(state.clone());
    }
    let center = h.diagonal_center();
    let bound = h.norm_bound(-center);
    // each substep keeps ‖H τ‖ <= 1
    let substeps = (bound * duration.abs()).ceil().max(1.0) as usize;
    let tau = duration / substeps as f64;
    let dim = h.dim();
    let mut psi = state.amplitudes().to_vec();
    let mut term = vec![C64::new(0.0, 0.0); dim];
    let mut next = vec![C64::new(0.0, 0.0); dim];
    for _ in 0..substeps {
        term.copy_from_slice(&psi);
        for k in 1..=40 {
            h.apply_shifted(&term, &mut next, -center);
            let factor = C64::new(0.0, -tau / k as f64);
            let mut size = 0.0;
            for ((t, n), p) in term.iter_mut().zip(&next).zip(psi.iter_mut()) {
                *t = n * factor;
                *p += *t;
                size += t.norm_sqr();
            }
            if size < 1e-34 {
                break;
            }
        }
    }
    let phase = C64::from_polar(1.0, -center * duration);
    psi.iter_mut().for_each(|a| *a *= phase);
    finish(psi)
}

fn check_dims(state: &StateVector, dim: usize, duration: f64) -> Result<()> {
    if state.dim() != dim {
        return Err(Error::Circuit(format!(
            "state dimension {} does not match operator dimension {dim}",
            state.dim()
        )));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::Circuit(format!("duration must be finite and >= 0, got {duration}")));
    }
    Ok(())
}

fn finish(amps: Vec<C64>) -> Result<StateVector> {
    let s = StateVector::from_amplitudes(amps);
    s.map_err(|e| Error::Numerical(format!("evolution lost normalization: {e}")))
}
