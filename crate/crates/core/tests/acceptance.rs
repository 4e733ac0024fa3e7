//! Acceptance gate: one pass/fail line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so that the report is
//! always printed.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use hqcrc::dynamics::{integrate_lorenz63, normalize, Lorenz63Params, NormalizationScheme};
use hqcrc::encoder::{single_qubit_feature_demo, two_qubit_feature_demo, Activation};
use hqcrc::experiment::{parse_config, run_experiment, ExperimentConfig};
use hqcrc::observables::{enumerate_z_protocol, estimate_from_shots, measurement_vector, sample_bitstrings};
use hqcrc::qsim::{
    evolve, evolve_reference, evolve_taylor, Circuit, NumberConvention, ParamMap, Propagator, PulseLayer,
    RegisterLayout, StateVector, C64,
};
use hqcrc::readout::fit_ridge;
use hqcrc::reservoir::{build_reservoir, HybridReservoirConfig, ReservoirMode};
use hqcrc::rng::counter_symmetric;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// -- 1 ---------------------------------------------------------------------

fn feature_maps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let u = rng.gen_range(-2.0 * PI..2.0 * PI);
        for f in Activation::ALL {
            let a = f.eval(u);
            e1 = e1.max((single_qubit_feature_demo(u, f) - a.cos()).abs());
            let (x1, x1x2) = two_qubit_feature_demo(u, f);
            e2 = e2.max((x1 - a.cos().powi(2)).abs()).max((x1x2 - a.cos()).abs());
        }
    }
    outcome(e1 <= 1e-12 && e2 <= 1e-12, format!("max |<X>-cos f(u)| = {e1:.2e}, two-qubit {e2:.2e} (tol 1e-12)"))
}

// -- 2 ---------------------------------------------------------------------

fn quantum_evolution() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let map = ParamMap {
        omega_max: 1.0,
        delta_max: 1.0,
    };
    let (mut worst, mut worst_taylor, mut norm_err) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..50 {
        let n = 2 + k % 3;
        let spacing = rng.gen_range(0.7..1.6);
        let layout = if rng.gen_bool(0.5) {
            RegisterLayout::chain(n, spacing, 1.0)
        } else {
            RegisterLayout::ring(n, spacing, 1.0)
        }
        .unwrap();
        let duration = rng.gen_range(0.2..2.0);
        let layer = if rng.gen_bool(0.5) {
            PulseLayer::global(duration, map)
        } else {
            PulseLayer::local_even_odd(n, duration, map)
        };
        let dim = layer.scope.input_dim();
        let circuit = Circuit::new(&layout, vec![layer], NumberConvention::Paper, Propagator::Eigen).unwrap();
        let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let h = circuit.layer_hamiltonian(0, &y).unwrap();
        let amps = (0..1 << n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi = StateVector::normalized(amps).unwrap();
        let dense = h.to_dense();
        let reference = evolve_reference(&psi, &dense, duration, 1000).unwrap();
        let eig = evolve(&psi, &dense, duration).unwrap();
        let tay = evolve_taylor(&psi, &h, duration).unwrap();
        worst = worst.max(eig.max_abs_diff(&reference));
        worst_taylor = worst_taylor.max(tay.max_abs_diff(&reference));
        for s in [&eig, &tay, &reference] {
            norm_err = norm_err.max((s.norm() - 1.0).abs());
        }
    }
    outcome(
        worst <= 1e-8 && worst_taylor <= 1e-8 && norm_err <= 1e-10,
        format!(
            "max amplitude error eigen {worst:.2e}, taylor {worst_taylor:.2e} (tol 1e-8); norm error {norm_err:.2e} (tol 1e-10)"
        ),
    )
}

// -- 3 ---------------------------------------------------------------------

fn measurement_suite() -> Outcome {
    let count = enumerate_z_protocol(8, 3).unwrap().len();
    let shots = 10_000;
    let protocol = enumerate_z_protocol(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut total, mut bad) = (0usize, 0usize);
    for s in 0..50 {
        let amps = (0..8)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi = StateVector::normalized(amps).unwrap();
        let exact = measurement_vector(&psi, &protocol).values;
        let est = estimate_from_shots(&sample_bitstrings(&psi, shots, 1000 + s).unwrap(), &protocol).unwrap();
        for (e, x) in est.values.iter().zip(&exact) {
            total += 1;
            if (e - x).abs() > 5.0 * ((1.0 - x * x) / shots as f64).sqrt() + 1e-12 {
                bad += 1;
            }
        }
    }
    let frac = bad as f64 / total as f64;
    outcome(
        count == 92 && frac <= 0.01,
        format!("N=8 protocol has {count} terms (want 92); 5σ violations {bad}/{total} = {:.2}% (max 1%)", 100.0 * frac),
    )
}

// -- 4 ---------------------------------------------------------------------

fn lorenz_inputs(n: usize) -> Vec<Vec<f64>> {
    let ts = integrate_lorenz63(&Lorenz63Params {
        steps: 500 + n,
        ..Default::default()
    })
    .unwrap();
    let ts = ts.slice(501..ts.len()).unwrap();
    let (ts, _) = normalize(&ts, NormalizationScheme::MinmaxSymmetric).unwrap();
    ts.rows().map(|r| r.to_vec()).collect()
}

fn noise(seed: u64, t: usize, dim: usize) -> Vec<f64> {
    (0..dim).map(|i| counter_symmetric(seed, 91, t as u64, i as u64, 1.0)).collect()
}

fn reservoir_algebra() -> Outcome {
    let inputs = lorenz_inputs(500);
    let base = |seed, mode| HybridReservoirConfig {
        seed,
        mode,
        ..Default::default()
    };

    // standard_esn against an independently written leaky-ESN step
    let mut esn = build_reservoir(&base(4, ReservoirMode::StandardEsn), 3, 0).unwrap();
    let (w_in, w) = (esn.w_x().clone(), esn.w_r().clone());
    let alpha = esn.config().leak_rate;
    let mut r = DVector::zeros(esn.state_dim());
    let mut esn_err = 0.0f64;
    for u in &inputs[..100] {
        let pre = &w_in * DVector::from_column_slice(u) + &w * &r;
        r = &r * (1.0 - alpha) + pre.map(f64::tanh) * alpha;
        esn_err = esn_err.max(max_abs(&esn.update(u, &[]).unwrap().r, r.as_slice()));
    }

    // classical_only vs hybrid with W_M = 0
    let mut hybrid = build_reservoir(&base(5, ReservoirMode::Hybrid), 3, 92).unwrap();
    hybrid.set_measurement_weights(DMatrix::zeros(hybrid.state_dim(), 92)).unwrap();
    let mut classical = build_reservoir(&base(5, ReservoirMode::ClassicalOnly), 3, 92).unwrap();
    let mut identical = true;
    for (t, u) in inputs.iter().enumerate() {
        let m = noise(5, t, 92);
        identical &= hybrid.update(u, &m).unwrap().r == classical.update(u, &m).unwrap().r;
    }

    // echo-state contraction
    let mut worst_sep = 0.0f64;
    for seed in 0..20 {
        for (rho, alpha) in [(0.5, 1.0), (0.9, 0.3), (0.95, 0.5)] {
            let cfg = HybridReservoirConfig {
                spectral_radius: rho,
                leak_rate: alpha,
                ..base(seed, ReservoirMode::Hybrid)
            };
            let mut a = build_reservoir(&cfg, 3, 92).unwrap();
            let mut b = a.clone();
            let n = a.state_dim() as u64;
            a.set_state((0..n).map(|i| counter_symmetric(seed, 1, i, 0, 1.0)).collect()).unwrap();
            b.set_state((0..n).map(|i| counter_symmetric(seed, 2, i, 0, 1.0)).collect()).unwrap();
            for (t, u) in inputs.iter().enumerate() {
                let m = noise(seed, t, 92);
                a.update(u, &m).unwrap();
                b.update(u, &m).unwrap();
            }
            let sep = a.state().r.iter().zip(&b.state().r).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            worst_sep = worst_sep.max(sep);
        }
    }
    outcome(
        esn_err <= 1e-12 && identical && worst_sep < 1e-8,
        format!(
            "standard_esn vs textbook {esn_err:.2e} (tol 1e-12); classical_only == hybrid(W_M=0): {identical}; \
             max separation after 500 steps {worst_sep:.2e} (tol 1e-8, 20 seeds, rho<=0.95)"
        ),
    )
}

// -- 5 ---------------------------------------------------------------------

fn ridge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut optimal = true;
    for _ in 0..20 {
        let f = rng.gen_range(3..40);
        let n = rng.gen_range(f + 5..f + 200);
        let r = DMatrix::from_fn(f, n, |_, _| rng.gen_range(-1.0..1.0));
        let u = DMatrix::from_fn(3, n, |_, _| rng.gen_range(-1.0..1.0));
        let eta = 10f64.powf(rng.gen_range(-6.0..1.0));
        let w = fit_ridge(&r, &u, eta).unwrap().w_out;
        // normal equations solved by LU with partial pivoting
        let a = &r * r.transpose() + DMatrix::identity(f, f) * eta;
        let oracle = a.lu().solve(&(&r * u.transpose())).unwrap().transpose();
        worst = worst.max((&w - &oracle).norm() / oracle.norm());

        let loss = |w: &DMatrix<f64>| (&u - w * &r).norm_squared() + eta * w.norm_squared();
        let base = loss(&w);
        for _ in 0..100 {
            let d = DMatrix::from_fn(3, f, |_, _| rng.gen_range(-1.0..1.0));
            let d = &d * (1e-3 / d.norm());
            optimal &= base <= loss(&(&w + d));
        }
    }
    outcome(
        worst <= 1e-8 && optimal,
        format!("max relative deviation from normal-equation solver {worst:.2e} (tol 1e-8); perturbation optimality: {optimal}"),
    )
}

// -- 6 & 7 -------------------------------------------------------------------

fn acceptance_config(out: &Path) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.toml");
    let mut cfg = parse_config(&path).expect("acceptance config");
    cfg.run.output_dir = out.to_path_buf();
    cfg
}

fn end_to_end(out: &Path) -> Outcome {
    let cfg = acceptance_config(out);
    let started = Instant::now();
    let result = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let minutes = started.elapsed().as_secs_f64() / 60.0;
    let n_obs = cfg.protocol().map(|p| p.len()).unwrap_or(0);
    let seeds = cfg.run.seeds.len();
    let complete = result.failures.is_empty() && result.records.len() == seeds * cfg.reservoir.modes.len();
    let good = |mode: ReservoirMode| {
        result
            .records
            .iter()
            .filter(|r| r.mode == mode)
            .filter(|r| r.mean_nrmse().is_finite() && r.mean_nrmse() < 1.0)
            .count()
    };
    let (hyb, cls, qo) = (good(ReservoirMode::Hybrid), good(ReservoirMode::ClassicalOnly), good(ReservoirMode::QuantumOnly));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap_or_default();
    let summarized = cfg
        .reservoir
        .modes
        .iter()
        .all(|m| summary.lines().any(|l| l.starts_with(&format!("{m},"))));
    let shape = cfg.quantum.n_qubits == 8
        && n_obs == 92
        && cfg.reservoir.state_dim == 300
        && cfg.data.train_length == 2000
        && seeds == 20;
    outcome(
        shape && complete && hyb >= 15 && cls >= 15 && summarized && minutes <= 30.0,
        format!(
            "{seeds} seeds x {} modes complete: {complete}; NRMSE<1 over 100 steps: hybrid {hyb}/20, classical_only {cls}/20 \
             (need 15), quantum_only {qo}/20 (reported); summary rows: {summarized}; {minutes:.1} min (max 30)",
            cfg.reservoir.modes.len()
        ),
    )
}

fn reproducible(first: &Path, second: &Path) -> Outcome {
    let cfg = acceptance_config(second);
    if let Err(e) = run_experiment(&cfg) {
        return outcome(false, format!("rerun failed: {e}"));
    }
    let a = std::fs::read(first.join("metrics.csv")).unwrap_or_default();
    let b = std::fs::read(second.join("metrics.csv")).unwrap_or_default();
    outcome(
        !a.is_empty() && a == b,
        format!("metrics.csv byte-identical across reruns: {} ({} bytes)", a == b, a.len()),
    )
}

fn main() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("feature-map oracle", Box::new(feature_maps)),
        ("quantum-evolution oracle", Box::new(quantum_evolution)),
        ("measurement suite", Box::new(measurement_suite)),
        ("reservoir algebra", Box::new(reservoir_algebra)),
        ("ridge correctness", Box::new(ridge)),
        ("Lorenz63 end-to-end baseline", Box::new(|| end_to_end(dir_a.path()))),
        ("reproducibility", Box::new(|| reproducible(dir_a.path(), dir_b.path()))),
    ];
    let limits = [5.0, 60.0, 60.0, f64::INFINITY, f64::INFINITY, 1800.0, 1800.0];

    println!("acceptance suite");
    let mut failed = 0;
    for (i, ((name, check), limit)) in checks.iter().zip(limits).enumerate() {
        let started = Instant::now();
        let mut o = check();
        let secs = started.elapsed().as_secs_f64();
        if secs > limit {
            o.pass = false;
            o.detail.push_str(&format!("; runtime {secs:.1}s exceeds {limit}s"));
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] criterion {}: {name} ({secs:.1}s) - {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
