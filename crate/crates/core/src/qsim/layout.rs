use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::MAX_QUBITS;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryPreset {
    Chain,
    Ring,
    Explicit,
}

/// Atom positions in the plane plus the van der Waals coefficient `C6`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterLayout {
    pub positions: Vec<[f64; 2]>,
    pub c6: f64,
    pub preset: GeometryPreset,
}

impl RegisterLayout {
    pub fn chain(n: usize, spacing: f64, c6: f64) -> Result<Self> {
        let positions = (0..n).map(|k| [k as f64 * spacing, 0.0]).collect();
        Self::validated(positions, c6, GeometryPreset::Chain)
    }

    /// Regular polygon with nearest-neighbour distance `spacing`.
    pub fn ring(n: usize, spacing: f64, c6: f64) -> Result<Self> {
        let radius = if n < 2 {
            0.0
        } else {
            spacing / (2.0 * (PI / n as f64).sin())
        };
        let positions = (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                [radius * th.cos(), radius * th.sin()]
            })
            .collect();
        Self::validated(positions, c6, GeometryPreset::Ring)
    }

    pub fn explicit(positions: Vec<[f64; 2]>, c6: f64) -> Result<Self> {
        Self::validated(positions, c6, GeometryPreset::Explicit)
    }

    /// Spacing at which nearest neighbours interact with strength `target`.
    pub fn spacing_for_coupling(c6: f64, target: f64) -> f64 {
        (c6 / target).powf(1.0 / 6.0)
    }

    pub fn n_qubits(&self) -> usize {
        self.positions.len()
    }

    fn validated(positions: Vec<[f64; 2]>, c6: f64, preset: GeometryPreset) -> Result<Self> {
        if positions.is_empty() || positions.len() > MAX_QUBITS {
            return Err(Error::Layout(format!(
                "register must hold 1..={MAX_QUBITS} atoms, got {}",
                positions.len()
            )));
        }
        if !(c6 >= 0.0 && c6.is_finite()) {
            return Err(Error::Layout(format!("C6 must be finite and >= 0, got {c6}")));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Layout("non-finite atom position".into()));
        }
        let layout = Self {
            positions,
            c6,
            preset,
        };
        coupling_matrix(&layout)?;
        Ok(layout)
    }
}

/// `U_ij = C6 / |r_i - r_j|^6` off the diagonal, zero on it.
pub fn coupling_matrix(layout: &RegisterLayout) -> Result<DMatrix<f64>> {
    let n = layout.n_qubits();
    let mut u = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let [xi, yi] = layout.positions[i];
            let [xj, yj] = layout.positions[j];
            let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
            if !(d2 > 0.0) {
                return Err(Error::Layout(format!("atoms {i} and {j} coincide")));
            }
            let v = layout.c6 / (d2 * d2 * d2);
            u[(i, j)] = v;
            u[(j, i)] = v;
        }
    }
    Ok(u)
}
