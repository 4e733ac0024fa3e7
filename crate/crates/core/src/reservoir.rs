//! Classical leaky reservoir fed by inputs and quantum measurement vectors.
//!
//! ```text
//! r_t = (1-α) r_{t-1} + α g(W_g [f_X(W_X u_t) + f_r(W_r r_{t-1}) + f_M(W_M M_t)])
//! R_t = (1, f_u(u_t), f_R(r_t))
//! ```
//!
//! A branch whose activation is `None` contributes an all-zero vector
//! (`f ≡ 0`), which is how the ablation modes switch off the input or the
//! quantum stream.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::encoder::Activation;
use crate::readout::fit_ridge;
use crate::rng::{counter_symmetric, counter_unit, streams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirMode {
    #[default]
    Hybrid,
    ClassicalOnly,
    QuantumOnly,
    StandardEsn,
}

impl ReservoirMode {
    pub const ALL: [ReservoirMode; 4] = [
        ReservoirMode::Hybrid,
        ReservoirMode::ClassicalOnly,
        ReservoirMode::QuantumOnly,
        ReservoirMode::StandardEsn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReservoirMode::Hybrid => "hybrid",
            ReservoirMode::ClassicalOnly => "classical_only",
            ReservoirMode::QuantumOnly => "quantum_only",
            ReservoirMode::StandardEsn => "standard_esn",
        }
    }

    /// Whether the quantum measurement stream feeds the update.
    pub fn uses_quantum(self) -> bool {
        matches!(self, ReservoirMode::Hybrid | ReservoirMode::QuantumOnly)
    }
}

impl std::fmt::Display for ReservoirMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ReservoirMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReservoirMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingKind {
    /// `W_g = I`.
    #[default]
    Identity,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridReservoirConfig {
    pub state_dim: usize,
    pub leak_rate: f64,
    pub spectral_radius: f64,
    pub seed: u64,
    pub mode: ReservoirMode,
    /// Scale of the uniform entries of `W_X`.
    pub input_scale: f64,
    /// Scale of the uniform entries of `W_M`.
    pub measurement_scale: f64,
    pub f_x: Option<Activation>,
    pub f_r: Option<Activation>,
    pub f_m: Option<Activation>,
    pub g: Activation,
    pub mixing: MixingKind,
    pub f_u: Activation,
    pub f_state: Activation,
    /// Keep `f_u(u_t)` in `R_t`.
    pub features_include_input: bool,
}

impl Default for HybridReservoirConfig {
    fn default() -> Self {
        Self {
            state_dim: 300,
            leak_rate: 0.3,
            spectral_radius: 0.9,
            seed: 0,
            mode: ReservoirMode::Hybrid,
            input_scale: 1.0,
            measurement_scale: 1.0,
            f_x: Some(Activation::Tanh),
            f_r: Some(Activation::Tanh),
            f_m: Some(Activation::Tanh),
            g: Activation::Tanh,
            mixing: MixingKind::Identity,
            f_u: Activation::Identity,
            f_state: Activation::Identity,
            features_include_input: true,
        }
    }
}

impl HybridReservoirConfig {
    /// The configuration with the mode's forced activations applied.
    pub fn effective(&self) -> Self {
        let mut c = self.clone();
        match c.mode {
            ReservoirMode::Hybrid => {}
            ReservoirMode::ClassicalOnly => c.f_m = None,
            ReservoirMode::QuantumOnly => c.f_x = None,
            ReservoirMode::StandardEsn => {
                c.f_x = Some(Activation::Identity);
                c.f_r = Some(Activation::Identity);
                c.f_m = None;
                c.g = Activation::Tanh;
            }
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 {
            return Err(Error::Config("reservoir state_dim must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.leak_rate) {
            return Err(Error::Config(format!("leak_rate must lie in [0, 1], got {}", self.leak_rate)));
        }
        if !(self.spectral_radius >= 0.0 && self.spectral_radius.is_finite()) {
            return Err(Error::Config(format!(
                "spectral_radius must be finite and >= 0, got {}",
                self.spectral_radius
            )));
        }
        for (name, v) in [("input_scale", self.input_scale), ("measurement_scale", self.measurement_scale)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub r: Vec<f64>,
    pub t: usize,
}

#[derive(Debug, Clone)]
pub struct HybridReservoir {
    config: HybridReservoirConfig,
    input_dim: usize,
    measurement_dim: usize,
    w_x: DMatrix<f64>,
    w_r: DMatrix<f64>,
    w_m: DMatrix<f64>,
    w_g: Option<DMatrix<f64>>,
    state: ReservoirState,
}

fn uniform_matrix(rows: usize, cols: usize, seed: u64, stream: u64, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |r, c| counter_symmetric(seed, stream, r as u64, c as u64, scale))
}

/// Largest eigenvalue modulus of a real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Draws all weights from `config.seed` and rescales `W_r` to the target
/// spectral radius. The state starts at `r_0 = 0`.
pub fn build_reservoir(config: &HybridReservoirConfig, input_dim: usize, measurement_dim: usize) -> Result<HybridReservoir> {
    config.validate()?;
    if input_dim == 0 {
        return Err(Error::Config("reservoir input dimension must be >= 1".into()));
    }
    let config = config.effective();
    if config.f_m.is_some() && measurement_dim == 0 {
        return Err(Error::Config(format!(
            "mode {} consumes measurement vectors but the measurement dimension is 0",
            config.mode
        )));
    }
    let n = config.state_dim;
    let seed = config.seed;
    let w_x = uniform_matrix(n, input_dim, seed, streams::RES_INPUT, config.input_scale);
    let mut w_r = uniform_matrix(n, n, seed, streams::RES_RECURRENT, 1.0);
    let rho = spectral_radius(&w_r);
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Numerical(format!("recurrent matrix has spectral radius {rho}; cannot rescale")));
    }
    w_r *= config.spectral_radius / rho;
    let w_m = uniform_matrix(n, measurement_dim, seed, streams::RES_MEASUREMENT, config.measurement_scale);
    let w_g = match config.mixing {
        MixingKind::Identity => None,
        MixingKind::Random => Some(uniform_matrix(n, n, seed, streams::RES_OUTPUT_MIX, 1.0)),
    };
    Ok(HybridReservoir {
        config,
        input_dim,
        measurement_dim,
        w_x,
        w_r,
        w_m,
        w_g,
        state: ReservoirState { r: vec![0.0; n], t: 0 },
    })
}

fn branch(act: Option<Activation>, w: &DMatrix<f64>, x: &[f64], out: &mut DVector<f64>) {
    match act {
        Some(f) if w.ncols() > 0 => {
            let v = w * DVector::from_column_slice(x);
            out.iter_mut().zip(v.iter()).for_each(|(o, v)| *o = f.eval(*v));
        }
        // f ≡ 0, or an empty input whose image is the zero vector
        Some(f) => out.iter_mut().for_each(|o| *o = f.eval(0.0)),
        None => out.fill(0.0),
    }
}

impl HybridReservoir {
    pub fn config(&self) -> &HybridReservoirConfig {
        &self.config
    }

    pub fn state(&self) -> &ReservoirState {
        &self.state
    }

    pub fn state_dim(&self) -> usize {
        self.config.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn measurement_dim(&self) -> usize {
        self.measurement_dim
    }

    pub fn w_x(&self) -> &DMatrix<f64> {
        &self.w_x
    }

    pub fn w_r(&self) -> &DMatrix<f64> {
        &self.w_r
    }

    pub fn w_m(&self) -> &DMatrix<f64> {
        &self.w_m
    }

    pub fn w_g(&self) -> Option<&DMatrix<f64>> {
        self.w_g.as_ref()
    }

    pub fn set_measurement_weights(&mut self, w_m: DMatrix<f64>) -> Result<()> {
        if w_m.shape() != self.w_m.shape() {
            return Err(Error::Config(format!("W_M shape {:?} expected, got {:?}", self.w_m.shape(), w_m.shape())));
        }
        self.w_m = w_m;
        Ok(())
    }

    pub fn set_state(&mut self, r: Vec<f64>) -> Result<()> {
        if r.len() != self.state_dim() {
            return Err(Error::Config(format!("state of length {} expected, got {}", self.state_dim(), r.len())));
        }
        self.state = ReservoirState { r, t: 0 };
        Ok(())
    }

    pub fn reset(&mut self) {
        self.state = ReservoirState {
            r: vec![0.0; self.state_dim()],
            t: 0,
        };
    }

    /// One step of the leaky recursion. `m` may be empty when the mode
    /// does not use measurements.
    pub fn update(&mut self, u: &[f64], m: &[f64]) -> Result<&ReservoirState> {
        if u.len() != self.input_dim {
            return Err(Error::Config(format!("input of dimension {} expected, got {}", self.input_dim, u.len())));
        }
        let uses_m = self.config.f_m.is_some();
        if uses_m && m.len() != self.measurement_dim {
            return Err(Error::Config(format!(
                "measurement vector of dimension {} expected, got {}",
                self.measurement_dim,
                m.len()
            )));
        }
        let n = self.state_dim();
        let c = &self.config;
        let mut x_term = DVector::zeros(n);
        let mut r_term = DVector::zeros(n);
        let mut m_term = DVector::zeros(n);
        branch(c.f_x, &self.w_x, u, &mut x_term);
        branch(c.f_r, &self.w_r, &self.state.r, &mut r_term);
        if uses_m {
            branch(c.f_m, &self.w_m, m, &mut m_term);
        }
        let mut pre = x_term + r_term + m_term;
        if let Some(w_g) = &self.w_g {
            pre = w_g * pre;
        }
        let alpha = c.leak_rate;
        let step = self.state.t + 1;
        for (r, p) in self.state.r.iter_mut().zip(pre.iter()) {
            *r = (1.0 - alpha) * *r + alpha * c.g.eval(*p);
            if !r.is_finite() {
                return Err(Error::ReservoirDivergence { step });
            }
        }
        self.state.t = step;
        Ok(&self.state)
    }

    pub fn feature_len(&self) -> usize {
        1 + if self.config.features_include_input { self.input_dim } else { 0 } + self.state_dim()
    }

    /// `R_t = (1, f_u(u_t), f_R(r_t))` for the current state.
    pub fn feature_vector(&self, u: &[f64]) -> Vec<f64> {
        feature_vector(u, &self.state.r, &self.config)
    }
}

pub fn feature_vector(u: &[f64], r: &[f64], config: &HybridReservoirConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(1 + u.len() + r.len());
    out.push(1.0);
    if config.features_include_input {
        out.extend(u.iter().map(|v| config.f_u.eval(*v)));
    }
    out.extend(r.iter().map(|v| config.f_state.eval(*v)));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryDiagnostics {
    /// Exponential decay rate of the separation of two trajectories, per step.
    pub esp_decay: f64,
    /// Steps until the separation falls below `threshold` times its initial value.
    pub fading_memory_time: f64,
    pub memory_capacity: f64,
    pub echo_state_violation: bool,
    /// `‖r_t - r'_t‖` for `t = 0..=T`.
    pub separations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub threshold: f64,
    /// Delays summed in the capacity; `None` means `2 N_res`.
    pub mc_delays: Option<usize>,
    pub mc_train: usize,
    pub mc_test: usize,
    pub mc_ridge: f64,
    pub mc_seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            threshold: 1e-6,
            mc_delays: None,
            mc_train: 2000,
            mc_test: 1000,
            mc_ridge: 1e-6,
            mc_seed: 0,
        }
    }
}

// separations below this are round-off and excluded from the decay fit
const SEPARATION_FLOOR: f64 = 1e-13;

/// Drives two copies of `reservoir` from `r0_a` and `r0_b` with the same
/// inputs and fits the separation decay; then measures short-term memory
/// capacity on white noise fed into the first input component.
///
/// `measure` maps an input to its measurement vector; it is only called
/// when the mode uses the quantum stream.
pub fn fading_memory_probe<F>(
    reservoir: &HybridReservoir,
    inputs: &[Vec<f64>],
    r0_a: &[f64],
    r0_b: &[f64],
    measure: F,
    opts: &ProbeOptions,
) -> Result<MemoryDiagnostics>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if r0_a == r0_b {
        return Err(Error::Config("probe needs two distinct initial states".into()));
    }
    let uses_m = reservoir.config.f_m.is_some();
    let m_of = |u: &[f64]| -> Result<Vec<f64>> { if uses_m { measure(u) } else { Ok(Vec::new()) } };

    let mut a = reservoir.clone();
    let mut b = reservoir.clone();
    a.set_state(r0_a.to_vec())?;
    b.set_state(r0_b.to_vec())?;
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let mut separations = vec![dist(r0_a, r0_b)];
    for u in inputs {
        let m = m_of(u)?;
        a.update(u, &m)?;
        b.update(u, &m)?;
        separations.push(dist(&a.state.r, &b.state.r));
    }

    let d0 = separations[0];
    let pts: Vec<(f64, f64)> = separations
        .iter()
        .enumerate()
        .filter(|(_, d)| **d > SEPARATION_FLOOR)
        .map(|(t, d)| (t as f64, d.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        cov / var
    } else if separations.len() >= 2 && separations[1] <= SEPARATION_FLOOR {
        // collapsed within one step
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let decay = (-slope).max(0.0);
    let violation = !(decay > 1e-12);
    let esp_decay = if violation { 0.0 } else { decay };
    let fading_memory_time = match separations.iter().position(|d| *d <= opts.threshold * d0) {
        Some(t) => t as f64,
        None if !violation && esp_decay.is_finite() => (1.0 / opts.threshold).ln() / esp_decay,
        None => f64::INFINITY,
    };

    let memory_capacity = memory_capacity(reservoir, &m_of, opts)?;
    Ok(MemoryDiagnostics {
        esp_decay,
        fading_memory_time,
        memory_capacity,
        echo_state_violation: violation,
        separations,
    })
}

fn memory_capacity<F>(reservoir: &HybridReservoir, m_of: &F, opts: &ProbeOptions) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let delays = opts.mc_delays.unwrap_or(2 * reservoir.state_dim());
    let washout = delays.max(100);
    let total = washout + opts.mc_train + opts.mc_test;
    let noise: Vec<f64> = (0..total)
        .map(|t| 2.0 * counter_unit(opts.mc_seed, streams::PROBE, t as u64, 0) - 1.0)
        .collect();
    let mut res = reservoir.clone();
    res.reset();
    let mut states = Vec::with_capacity(total);
    let mut u = vec![0.0; res.input_dim()];
    for &s in &noise {
        u[0] = s;
        let m = m_of(&u)?;
        let st = res.update(&u, &m)?;
        let mut f = Vec::with_capacity(1 + st.r.len());
        f.push(1.0);
        f.extend_from_slice(&st.r);
        states.push(f);
    }
    let feat = states[0].len();
    let train = washout..washout + opts.mc_train;
    let test = washout + opts.mc_train..total;
    let r_train = DMatrix::from_fn(feat, train.len(), |i, j| states[train.start + j][i]);
    let y_train = DMatrix::from_fn(delays, train.len(), |k, j| noise[train.start + j - (k + 1)]);
    let model = fit_ridge(&r_train, &y_train, opts.mc_ridge)?;
    let r_test = DMatrix::from_fn(feat, test.len(), |i, j| states[test.start + j][i]);
    let pred = &model.w_out * r_test;
    let mut mc = 0.0;
    for k in 0..delays {
        let y: Vec<f64> = test.clone().map(|t| noise[t - (k + 1)]).collect();
        let p: Vec<f64> = pred.row(k).iter().copied().collect();
        mc += squared_correlation(&p, &y);
    }
    Ok(mc)
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov * cov / (va * vb)
    }
}
