use std::f64::consts::PI;

use hqcrc::observables::{enumerate_z_protocol, measurement_vector};
use hqcrc::qsim::{
    build_hamiltonian, coupling_matrix, evolve, evolve_reference, evolve_taylor, run_layers, Hamiltonian,
    NumberConvention, ParamMap, Propagator, PulseLayer, RegisterLayout, StateVector, C64,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn eye2() -> DMatrix<C64> {
    DMatrix::identity(2, 2)
}

/// `O` on qubit `q` of `n`, qubit 0 being the least significant index bit.
fn embed(op: &DMatrix<C64>, q: usize, n: usize) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for k in (0..n).rev() {
        let f = if k == q { op.clone() } else { eye2() };
        out = out.kronecker(&f);
    }
    out
}

/// H assembled term by term from Pauli Kronecker products.
fn kronecker_hamiltonian(
    omega: &[f64],
    delta: &[f64],
    phi: &[f64],
    u: &DMatrix<f64>,
    conv: NumberConvention,
) -> DMatrix<C64> {
    let n = omega.len();
    let x = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    let y = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]);
    let num = match conv {
        NumberConvention::Paper => DMatrix::from_diagonal(&nalgebra::dvector![c(1., 0.), c(0., 0.)]),
        NumberConvention::Standard => DMatrix::from_diagonal(&nalgebra::dvector![c(0., 0.), c(1., 0.)]),
    };
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for j in 0..n {
        let drive = &x * c(phi[j].cos(), 0.0) + &y * c(phi[j].sin(), 0.0);
        h += embed(&drive, j, n) * c(omega[j], 0.0);
        h += embed(&num, j, n) * c(delta[j], 0.0);
        for i in 0..j {
            h += embed(&num, i, n) * embed(&num, j, n) * c(u[(i, j)], 0.0);
        }
    }
    h
}

fn random_layout(rng: &mut ChaCha8Rng, n: usize) -> RegisterLayout {
    let spacing = rng.gen_range(0.8..1.5);
    if rng.gen_bool(0.5) {
        RegisterLayout::chain(n, spacing, 1.0).unwrap()
    } else {
        RegisterLayout::ring(n, spacing, 1.0).unwrap()
    }
}

fn random_site_params(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let omega = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let delta = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let phi = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
    (omega, delta, phi)
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps = (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::normalized(amps).unwrap()
}

#[test]
fn hamiltonian_matches_kronecker_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        for conv in [NumberConvention::Paper, NumberConvention::Standard] {
            let layout = random_layout(&mut rng, n);
            let u = coupling_matrix(&layout).unwrap();
            let (omega, delta, phi) = random_site_params(&mut rng, n);
            let h = build_hamiltonian(&omega, &delta, &phi, &u, conv).unwrap();
            let oracle = kronecker_hamiltonian(&omega, &delta, &phi, &u, conv);
            let err = (h.matrix() - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "n={n} {conv:?}: {err}");
            assert!(h.hermiticity_error() < 1e-12);
        }
    }
}

#[test]
fn ring_coupling_is_rotation_invariant() {
    let layout = RegisterLayout::ring(4, 1.3, 1.0).unwrap();
    let u = coupling_matrix(&layout).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert!((u[(i, j)] - u[((i + 1) % 4, (j + 1) % 4)]).abs() < 1e-12);
        }
    }
}

#[test]
fn propagators_agree_with_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 2..=4 {
        let layout = random_layout(&mut rng, n);
        let u = coupling_matrix(&layout).unwrap();
        let (omega, delta, phi) = random_site_params(&mut rng, n);
        let sparse = Hamiltonian::new(&omega, &delta, &phi, &u, NumberConvention::Paper).unwrap();
        let dense = sparse.to_dense();
        let psi = random_state(&mut rng, n);
        let reference = evolve_reference(&psi, &dense, 1.0, 1000).unwrap();
        let eig = evolve(&psi, &dense, 1.0).unwrap();
        let tay = evolve_taylor(&psi, &sparse, 1.0).unwrap();
        assert!(eig.max_abs_diff(&reference) < 1e-8);
        assert!(tay.max_abs_diff(&reference) < 1e-8);
        assert!((eig.norm() - 1.0).abs() < 1e-10);
        assert!((tay.norm() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn reference_converges_with_substeps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let layout = RegisterLayout::chain(3, 1.0, 1.0).unwrap();
    let u = coupling_matrix(&layout).unwrap();
    let (omega, delta, phi) = random_site_params(&mut rng, 3);
    let h = build_hamiltonian(&omega, &delta, &phi, &u, NumberConvention::Paper).unwrap();
    let psi = random_state(&mut rng, 3);
    let exact = evolve(&psi, &h, 1.0).unwrap();
    // truncated Taylor steps: few substeps leave a visible error
    let errs: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|&s| evolve_reference(&psi, &h, 1.0, s).unwrap().max_abs_diff(&exact))
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] + 1e-13, "{errs:?}");
    }
}

#[test]
fn pi_half_x_rotation_flips_z() {
    let h = build_hamiltonian(&[1.0], &[0.0], &[0.0], &DMatrix::zeros(1, 1), NumberConvention::Paper).unwrap();
    let out = evolve(&StateVector::zero_state(1), &h, PI / 2.0).unwrap();
    assert!((out.amplitudes()[0] - c(0.0, 0.0)).norm() < 1e-12);
    assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-12);
}

#[test]
fn zero_duration_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let psi = random_state(&mut rng, 2);
    let u = coupling_matrix(&RegisterLayout::chain(2, 1.0, 1.0).unwrap()).unwrap();
    let h = build_hamiltonian(&[0.3, 0.6], &[0.1, -0.2], &[0.0, 1.0], &u, NumberConvention::Paper).unwrap();
    assert!(evolve(&psi, &h, 0.0).unwrap().max_abs_diff(&psi) < 1e-14);
    assert!(evolve_reference(&psi, &h, 0.0, 10).unwrap().max_abs_diff(&psi) < 1e-14);
}

#[test]
fn global_layers_commute_with_ring_relabeling() {
    let map = ParamMap {
        omega_max: 1.0,
        delta_max: 1.0,
    };
    let layout = RegisterLayout::ring(3, 1.0, 1.0).unwrap();
    let layers = vec![PulseLayer::global(0.7, map), PulseLayer::global(1.1, map)];
    let ys = vec![vec![0.4, -0.3, 0.8], vec![-0.2, 0.9, -0.5]];
    let psi = run_layers(&layout, &layers, &ys, NumberConvention::Paper, Propagator::Eigen).unwrap();
    let protocol = enumerate_z_protocol(3, 3).unwrap();
    let base = measurement_vector(&psi, &protocol).values;
    // every relabeling of an equilateral triangle is a symmetry
    for perm in [[1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1]] {
        let permuted = psi.permute_qubits(&perm);
        assert!(permuted.max_abs_diff(&psi) < 1e-10, "{perm:?}");
        let m = measurement_vector(&permuted, &protocol).values;
        for (term, v) in protocol.terms().iter().zip(&base) {
            let mut image: Vec<usize> = term.iter().map(|&q| perm[q]).collect();
            image.sort_unstable();
            let k = protocol.terms().iter().position(|t| *t == image).unwrap();
            assert!((m[k] - v).abs() < 1e-10);
        }
    }
}

fn layer_strategy() -> impl Strategy<Value = (usize, Vec<f64>, f64, f64)> {
    (1usize..=4, prop::collection::vec(-3.0f64..3.0, 12), 0.1f64..2.0, 0.7f64..1.6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn composition((n, ys, t1, spacing) in layer_strategy(), t2 in 0.1f64..2.0) {
        let u = coupling_matrix(&RegisterLayout::chain(n, spacing, 1.0).unwrap()).unwrap();
        let omega: Vec<f64> = ys[..n].iter().map(|v| (1.0 + v.tanh()) / 2.0).collect();
        let delta: Vec<f64> = ys[4..4 + n].iter().map(|v| v.tanh()).collect();
        let phi: Vec<f64> = ys[8..8 + n].iter().map(|v| PI * v.tanh()).collect();
        let sparse = Hamiltonian::new(&omega, &delta, &phi, &u, NumberConvention::Paper).unwrap();
        let h = sparse.to_dense();
        let psi = StateVector::plus_state(n);
        let two = evolve(&evolve(&psi, &h, t1).unwrap(), &h, t2).unwrap();
        let one = evolve(&psi, &h, t1 + t2).unwrap();
        prop_assert!(two.max_abs_diff(&one) < 1e-10);
        let two = evolve_taylor(&evolve_taylor(&psi, &sparse, t1).unwrap(), &sparse, t2).unwrap();
        prop_assert!(two.max_abs_diff(&one) < 1e-10);
    }

    #[test]
    fn layered_runs_preserve_norm(n in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = ParamMap { omega_max: 1.0, delta_max: 1.0 };
        let layout = random_layout(&mut rng, n);
        let layers = vec![
            PulseLayer::global(rng.gen_range(0.2..1.5), map),
            PulseLayer::local_even_odd(n, rng.gen_range(0.2..1.5), map),
            PulseLayer::global(rng.gen_range(0.2..1.5), map),
        ];
        let ys: Vec<Vec<f64>> = [3, 6, 3]
            .iter()
            .map(|&d| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let psi = run_layers(&layout, &layers, &ys, NumberConvention::Paper, Propagator::Taylor).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
    }
}
