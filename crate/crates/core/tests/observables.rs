use hqcrc::observables::{
    enumerate_z_protocol, estimate_from_shots, expectation, measurement_vector, sample_bitstrings, MeasurementProtocol,
};
use hqcrc::qsim::{gates, StateVector, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn ghz(n: usize) -> StateVector {
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amps[(1 << n) - 1] = amps[0];
    StateVector::from_amplitudes(amps).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let amps = (0..1 << n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector::normalized(amps).unwrap()
}

#[test]
fn protocol_sizes_are_binomial_sums() {
    for n in 1..=10 {
        for k in 1..=n.min(4) {
            let expected: usize = (1..=k).map(|j| binomial(n, j)).sum();
            assert_eq!(enumerate_z_protocol(n, k).unwrap().len(), expected);
        }
    }
    assert_eq!(enumerate_z_protocol(8, 3).unwrap().len(), 92);
}

#[test]
fn ghz_parities() {
    let psi = ghz(2);
    assert!((expectation(&psi, &[0, 1]) - 1.0).abs() < 1e-12);
    assert!(expectation(&psi, &[0]).abs() < 1e-12);
    let samples = sample_bitstrings(&psi, 10_000, 3).unwrap();
    let protocol = MeasurementProtocol::from_terms(2, vec![vec![0, 1]]).unwrap();
    assert_eq!(estimate_from_shots(&samples, &protocol).unwrap().values, vec![1.0]);
}

#[test]
fn product_states_factorize() {
    let angles = [0.3, 1.1, 2.4];
    let mut psi = StateVector::zero_state(3);
    for (q, a) in angles.iter().enumerate() {
        gates::rx(&mut psi, q, *a);
    }
    let protocol = enumerate_z_protocol(3, 3).unwrap();
    let m = measurement_vector(&psi, &protocol);
    for (term, v) in protocol.terms().iter().zip(&m.values) {
        let expected: f64 = term.iter().map(|&q| angles[q].cos()).product();
        assert!((v - expected).abs() < 1e-12, "{term:?}");
    }
}

#[test]
fn single_plus_sampling_is_balanced() {
    let samples = sample_bitstrings(&StateVector::plus_state(1), 100_000, 17).unwrap();
    let p0 = samples.outcomes.iter().filter(|&&o| o == 0).count() as f64 / 1e5;
    assert!((0.494..=0.506).contains(&p0), "{p0}");
}

#[test]
fn estimator_is_five_sigma_consistent() {
    let shots = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let protocol = enumerate_z_protocol(3, 3).unwrap();
    let (mut total, mut bad) = (0usize, 0usize);
    for s in 0..50 {
        let psi = random_state(&mut rng, 3);
        let exact = measurement_vector(&psi, &protocol).values;
        let est = estimate_from_shots(&sample_bitstrings(&psi, shots, s).unwrap(), &protocol).unwrap();
        for (e, x) in est.values.iter().zip(&exact) {
            total += 1;
            let sigma = ((1.0 - x * x) / shots as f64).sqrt();
            if (e - x).abs() > 5.0 * sigma + 1e-12 {
                bad += 1;
            }
        }
    }
    assert!(bad as f64 <= 0.01 * total as f64, "{bad}/{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expectations_are_bounded(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, n);
        let protocol = enumerate_z_protocol(n, n.min(3)).unwrap();
        let m = measurement_vector(&psi, &protocol);
        prop_assert!(m.values.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn subset_permutation(seed in any::<u64>(), perm_seed in any::<u64>(), mask in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(&mut rng, 4);
        let mut perm: Vec<usize> = (0..4).collect();
        let mut prng = ChaCha8Rng::seed_from_u64(perm_seed);
        for i in (1..4).rev() {
            perm.swap(i, prng.gen_range(0..=i));
        }
        let subset: Vec<usize> = (0..4).filter(|q| mask >> q & 1 == 1).collect();
        let image: Vec<usize> = subset.iter().map(|&q| perm[q]).collect();
        let a = expectation(&psi, &subset);
        let b = expectation(&psi.permute_qubits(&perm), &image);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn protocol_is_pure(n in 1usize..=8, k in 1usize..=3) {
        let k = k.min(n);
        prop_assert_eq!(enumerate_z_protocol(n, k).unwrap(), enumerate_z_protocol(n, k).unwrap());
    }
}
