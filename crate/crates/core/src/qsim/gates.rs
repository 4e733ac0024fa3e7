//! Minimal gate set used by the feature-map demonstrations.

use super::{StateVector, C64};

/// `R_Z(θ) = exp(-iθZ/2)` on qubit `q`.
pub fn rz(psi: &mut StateVector, q: usize, theta: f64) {
    let lo = C64::from_polar(1.0, -theta / 2.0);
    let hi = C64::from_polar(1.0, theta / 2.0);
    for (i, a) in psi.amplitudes_mut().iter_mut().enumerate() {
        *a *= if i >> q & 1 == 0 { lo } else { hi };
    }
}

/// `R_X(θ) = exp(-iθX/2)` on qubit `q`.
pub fn rx(psi: &mut StateVector, q: usize, theta: f64) {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = C64::new(0.0, -(theta / 2.0).sin());
    let bit = 1usize << q;
    let amps = psi.amplitudes_mut();
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = c * a0 + s * a1;
            amps[i | bit] = s * a0 + c * a1;
        }
    }
}

pub fn hadamard(psi: &mut StateVector, q: usize) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bit = 1usize << q;
    let amps = psi.amplitudes_mut();
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = (a0 + a1) * h;
            amps[i | bit] = (a0 - a1) * h;
        }
    }
}

/// Controlled-X with `control` and `target` qubit indices.
pub fn cx(psi: &mut StateVector, control: usize, target: usize) {
    assert_ne!(control, target);
    let (cb, tb) = (1usize << control, 1usize << target);
    let amps = psi.amplitudes_mut();
    for i in 0..amps.len() {
        if i & cb != 0 && i & tb == 0 {
            amps.swap(i, i | tb);
        }
    }
}
