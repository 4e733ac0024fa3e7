//! Experiment orchestration: configuration, the seed × mode sweep, and
//! CSV outputs.
//!
//! A run is fully determined by the resolved configuration and the seed.
//! Per seed, the quantum measurement vectors of the teacher-forced
//! training phase are computed once and shared by every mode that uses
//! them; each mode then trains its own readout and forecasts in closed
//! loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{fmt_f64, integrate_lorenz63, split, Lorenz63Params, NormalizationParams, NormalizationScheme, TimeSeries};
use crate::encoder::{build_encoding_stack, single_qubit_feature_demo, two_qubit_feature_demo, Activation};
use crate::observables::{enumerate_z_protocol, MeasurementProtocol};
use crate::par::{map_slice, with_pool, Parallelism};
use crate::pipeline::QuantumPipeline;
use crate::qsim::{Circuit, NumberConvention, ParamMap, Propagator, PulseLayer, RegisterLayout};
use crate::readout::{closed_loop, collect, fit_ridge, nrmse, valid_time, ForecastMetrics};
use crate::reservoir::{
    build_reservoir, fading_memory_probe, HybridReservoirConfig, MemoryDiagnostics, MixingKind, ProbeOptions,
    ReservoirMode,
};
use crate::rng::{counter_symmetric, streams};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub quantum: QuantumConfig,
    pub encoder: EncoderConfig,
    pub reservoir: ReservoirConfig,
    pub readout: ReadoutConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub benchmark: String,
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: [f64; 3],
    pub dt: f64,
    /// Integration steps discarded before the series starts.
    pub transient: usize,
    /// Index `d` of the last training sample.
    pub train_length: usize,
    /// `p`: the first `p - 1` feature vectors are dropped before the fit.
    pub washout: usize,
    pub horizon: usize,
    pub normalization: NormalizationScheme,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            benchmark: "lorenz63".into(),
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            x0: [1.0, 1.0, 1.0],
            dt: 0.02,
            transient: 500,
            train_length: 2000,
            washout: 200,
            horizon: 400,
            normalization: NormalizationScheme::MinmaxSymmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeKind {
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub scope: ScopeKind,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    Chain,
    Ring,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumConfig {
    pub n_qubits: usize,
    pub layout: LayoutKind,
    /// Nearest-neighbour distance; defaults to the spacing at which the
    /// nearest-neighbour coupling equals `omega_max`.
    pub spacing: Option<f64>,
    pub positions: Option<Vec<[f64; 2]>>,
    pub c6: f64,
    pub layers: Vec<LayerConfig>,
    pub omega_max: f64,
    pub delta_max: f64,
    pub max_order: usize,
    /// Explicit Z-string supports, 1-based; overrides `max_order`.
    pub terms: Option<Vec<Vec<usize>>>,
    /// 0 = exact expectations.
    pub shots: usize,
    pub number_convention: NumberConvention,
    pub propagator: Propagator,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            n_qubits: 8,
            layout: LayoutKind::Chain,
            spacing: None,
            positions: None,
            c6: 1.0,
            layers: vec![
                LayerConfig {
                    scope: ScopeKind::Global,
                    duration: 1.0,
                },
                LayerConfig {
                    scope: ScopeKind::Local,
                    duration: 1.0,
                },
                LayerConfig {
                    scope: ScopeKind::Global,
                    duration: 1.0,
                },
            ],
            omega_max: 1.0,
            delta_max: 1.0,
            max_order: 3,
            terms: None,
            shots: 0,
            number_convention: NumberConvention::Paper,
            propagator: Propagator::Taylor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncoderConfig {
    /// One per circuit layer; empty means `tanh` everywhere.
    pub activations: Vec<Activation>,
    pub weight_scale: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            activations: Vec::new(),
            weight_scale: 1.0,
        }
    }
}

/// Activation of a reservoir branch; `zero` switches the branch off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchActivation {
    Zero,
    Identity,
    Tanh,
    Cos,
    ArccosClamped,
}

impl BranchActivation {
    pub fn to_activation(self) -> Option<Activation> {
        match self {
            BranchActivation::Zero => None,
            BranchActivation::Identity => Some(Activation::Identity),
            BranchActivation::Tanh => Some(Activation::Tanh),
            BranchActivation::Cos => Some(Activation::Cos),
            BranchActivation::ArccosClamped => Some(Activation::ArccosClamped),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReservoirConfig {
    pub state_dim: usize,
    pub leak_rate: f64,
    pub spectral_radius: f64,
    pub input_scale: f64,
    pub measurement_scale: f64,
    pub f_x: BranchActivation,
    pub f_r: BranchActivation,
    pub f_m: BranchActivation,
    pub g: Activation,
    pub mixing: MixingKind,
    pub f_u: Activation,
    pub f_state: Activation,
    pub features_include_input: bool,
    pub modes: Vec<ReservoirMode>,
}

impl Default for ReservoirConfig {
    fn default() -> Self {
        Self {
            state_dim: 300,
            leak_rate: 0.3,
            spectral_radius: 0.9,
            input_scale: 1.0,
            measurement_scale: 1.0,
            f_x: BranchActivation::Tanh,
            f_r: BranchActivation::Tanh,
            f_m: BranchActivation::Tanh,
            g: Activation::Tanh,
            mixing: MixingKind::Identity,
            f_u: Activation::Identity,
            f_state: Activation::Identity,
            features_include_input: true,
            modes: ReservoirMode::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReadoutConfig {
    pub eta: f64,
    /// Valid-time error threshold.
    pub theta: f64,
    /// Forecast steps over which NRMSE is reported.
    pub nrmse_window: usize,
    /// Forecasts stop once `|y|` exceeds this multiple of the training range.
    pub divergence_factor: f64,
}

impl Default for ReadoutConfig {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            theta: 0.4,
            nrmse_window: 100,
            divergence_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub parallelism: Parallelism,
    /// When false, `wall_ms` is written as 0 so that outputs are byte-stable.
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: (0..20).collect(),
            output_dir: PathBuf::from("results"),
            threads: 0,
            parallelism: Parallelism::Rayon,
            record_wall_time: true,
        }
    }
}

fn invalid(key: &str, constraint: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {constraint}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Short digest of every section that affects results. The `run`
    /// section (seeds, paths, threading) is excluded so that the hash is
    /// the same across machines and seed subsets.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&(&self.data, &self.quantum, &self.encoder, &self.reservoir, &self.readout))
            .expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        if d.benchmark != "lorenz63" {
            return Err(invalid("data.benchmark", format!("only `lorenz63` is supported, got `{}`", d.benchmark)));
        }
        if !(d.dt > 0.0 && d.dt.is_finite()) {
            return Err(invalid("data.dt", format!("must be > 0, got {}", d.dt)));
        }
        if d.washout < 1 || d.washout >= d.train_length {
            return Err(invalid(
                "data.washout",
                format!("must satisfy 1 <= washout < train_length ({}), got {}", d.train_length, d.washout),
            ));
        }
        if d.horizon < 1 {
            return Err(invalid("data.horizon", "must be >= 1"));
        }

        let q = &self.quantum;
        if q.n_qubits < 1 || q.n_qubits > crate::qsim::MAX_QUBITS {
            return Err(invalid("quantum.n_qubits", format!("must be in 1..={}, got {}", crate::qsim::MAX_QUBITS, q.n_qubits)));
        }
        if q.layers.is_empty() {
            return Err(invalid("quantum.layers", "at least one layer is required"));
        }
        if let Some(l) = q.layers.iter().find(|l| !(l.duration > 0.0 && l.duration.is_finite())) {
            return Err(invalid("quantum.layers.duration", format!("must be > 0, got {}", l.duration)));
        }
        if !(q.omega_max > 0.0) {
            return Err(invalid("quantum.omega_max", format!("must be > 0, got {}", q.omega_max)));
        }
        if !(q.delta_max > 0.0) {
            return Err(invalid("quantum.delta_max", format!("must be > 0, got {}", q.delta_max)));
        }
        if !(q.c6 > 0.0 && q.c6.is_finite()) {
            return Err(invalid("quantum.c6", format!("must be > 0, got {}", q.c6)));
        }
        if let Some(s) = q.spacing {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("quantum.spacing", format!("must be > 0, got {s}")));
            }
        }
        match (q.layout, &q.positions) {
            (LayoutKind::Explicit, None) => {
                return Err(invalid("quantum.positions", "required when layout = \"explicit\""))
            }
            (LayoutKind::Explicit, Some(p)) if p.len() != q.n_qubits => {
                return Err(invalid("quantum.positions", format!("expected {} positions, got {}", q.n_qubits, p.len())))
            }
            (LayoutKind::Chain | LayoutKind::Ring, Some(_)) => {
                return Err(invalid("quantum.positions", "only allowed when layout = \"explicit\""))
            }
            _ => {}
        }
        if q.terms.is_none() && (q.max_order < 1 || q.max_order > q.n_qubits) {
            return Err(invalid("quantum.max_order", format!("must be in 1..={}, got {}", q.n_qubits, q.max_order)));
        }
        if let Some(terms) = &q.terms {
            if terms.iter().flatten().any(|&i| i < 1 || i > q.n_qubits) {
                return Err(invalid("quantum.terms", format!("qubit indices are 1-based and must lie in 1..={}", q.n_qubits)));
            }
        }

        let e = &self.encoder;
        if !e.activations.is_empty() && e.activations.len() != q.layers.len() {
            return Err(invalid(
                "encoder.activations",
                format!("needs one entry per circuit layer ({}), got {}", q.layers.len(), e.activations.len()),
            ));
        }
        if !(e.weight_scale > 0.0 && e.weight_scale.is_finite()) {
            return Err(invalid("encoder.weight_scale", format!("must be > 0, got {}", e.weight_scale)));
        }

        let r = &self.reservoir;
        if r.state_dim < 1 {
            return Err(invalid("reservoir.state_dim", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&r.leak_rate) {
            return Err(invalid("reservoir.leak_rate", format!("must lie in [0, 1], got {}", r.leak_rate)));
        }
        if !(r.spectral_radius >= 0.0 && r.spectral_radius.is_finite()) {
            return Err(invalid("reservoir.spectral_radius", format!("must be >= 0, got {}", r.spectral_radius)));
        }
        if !(r.input_scale >= 0.0 && r.input_scale.is_finite()) {
            return Err(invalid("reservoir.input_scale", format!("must be >= 0, got {}", r.input_scale)));
        }
        if !(r.measurement_scale >= 0.0 && r.measurement_scale.is_finite()) {
            return Err(invalid("reservoir.measurement_scale", format!("must be >= 0, got {}", r.measurement_scale)));
        }
        if r.modes.is_empty() {
            return Err(invalid("reservoir.modes", "at least one mode is required"));
        }

        let o = &self.readout;
        if !(o.eta >= 0.0 && o.eta.is_finite()) {
            return Err(invalid("readout.eta", format!("must be >= 0, got {}", o.eta)));
        }
        if !(o.theta > 0.0) {
            return Err(invalid("readout.theta", format!("must be > 0, got {}", o.theta)));
        }
        if o.nrmse_window < 2 {
            return Err(invalid("readout.nrmse_window", "must be >= 2"));
        }
        if !(o.divergence_factor > 0.0) {
            return Err(invalid("readout.divergence_factor", "must be > 0"));
        }
        if self.run.seeds.is_empty() {
            return Err(invalid("run.seeds", "at least one seed is required"));
        }
        Ok(())
    }

    pub fn lorenz_params(&self) -> Lorenz63Params {
        let d = &self.data;
        Lorenz63Params {
            sigma: d.sigma,
            rho: d.rho,
            beta: d.beta,
            x0: d.x0,
            dt: d.dt,
            steps: d.transient + d.train_length + d.horizon,
        }
    }

    pub fn layout(&self) -> Result<RegisterLayout> {
        let q = &self.quantum;
        let spacing = q
            .spacing
            .unwrap_or_else(|| RegisterLayout::spacing_for_coupling(q.c6, q.omega_max));
        match q.layout {
            LayoutKind::Chain => RegisterLayout::chain(q.n_qubits, spacing, q.c6),
            LayoutKind::Ring => RegisterLayout::ring(q.n_qubits, spacing, q.c6),
            LayoutKind::Explicit => RegisterLayout::explicit(q.positions.clone().unwrap_or_default(), q.c6),
        }
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let q = &self.quantum;
        let map = ParamMap {
            omega_max: q.omega_max,
            delta_max: q.delta_max,
        };
        let layers = q
            .layers
            .iter()
            .map(|l| match l.scope {
                ScopeKind::Global => PulseLayer::global(l.duration, map),
                ScopeKind::Local => PulseLayer::local_even_odd(q.n_qubits, l.duration, map),
            })
            .collect();
        Circuit::new(&self.layout()?, layers, q.number_convention, q.propagator)
    }

    pub fn protocol(&self) -> Result<MeasurementProtocol> {
        let q = &self.quantum;
        match &q.terms {
            Some(terms) => MeasurementProtocol::from_terms(
                q.n_qubits,
                terms.iter().map(|t| t.iter().map(|i| i - 1).collect()).collect(),
            ),
            None => enumerate_z_protocol(q.n_qubits, q.max_order),
        }
    }

    pub fn pipeline(&self, seed: u64) -> Result<QuantumPipeline> {
        let circuit = self.circuit()?;
        let dims = circuit.layer_input_dims();
        let activations = if self.encoder.activations.is_empty() {
            vec![Activation::Tanh; dims.len()]
        } else {
            self.encoder.activations.clone()
        };
        let stack = build_encoding_stack(seed, dims.len(), 3, &dims, &activations, self.encoder.weight_scale)?;
        QuantumPipeline::new(stack, circuit, self.protocol()?, self.quantum.shots, seed)
    }

    pub fn reservoir_config(&self, seed: u64, mode: ReservoirMode) -> HybridReservoirConfig {
        let r = &self.reservoir;
        HybridReservoirConfig {
            state_dim: r.state_dim,
            leak_rate: r.leak_rate,
            spectral_radius: r.spectral_radius,
            seed,
            mode,
            input_scale: r.input_scale,
            measurement_scale: r.measurement_scale,
            f_x: r.f_x.to_activation(),
            f_r: r.f_r.to_activation(),
            f_m: r.f_m.to_activation(),
            g: r.g,
            mixing: r.mixing,
            f_u: r.f_u,
            f_state: r.f_state,
            features_include_input: r.features_include_input,
        }
    }
}

/// Reads, validates and default-resolves a TOML experiment file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_toml_str(&text)
}

// ---------------------------------------------------------------------------
// data

/// Normalized series plus its partition.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub series: TimeSeries,
    pub normalization: NormalizationParams,
    pub train_end: usize,
    pub horizon: usize,
    pub washout: usize,
    /// Largest `|u|` over the training samples.
    pub train_range: f64,
}

impl PreparedData {
    pub fn rows(&self, range: std::ops::Range<usize>) -> Vec<Vec<f64>> {
        range.map(|t| self.series.row(t).to_vec()).collect()
    }

    pub fn truth(&self) -> Vec<Vec<f64>> {
        self.rows(self.train_end + 1..self.train_end + self.horizon + 1)
    }
}

/// Integrates Lorenz63, drops the transient, and normalizes with
/// parameters fitted on samples `0..=d` only.
pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    let d = &config.data;
    let raw = integrate_lorenz63(&config.lorenz_params())?;
    let series = raw.slice(d.transient..raw.len())?;
    let parts = split(series.len(), d.washout, d.train_length, d.horizon)?;
    let fit_on = series.slice(0..parts.train.end)?;
    let normalization = NormalizationParams::fit(&fit_on, d.normalization)?;
    let series = normalization.apply(&series)?;
    let train_range = (0..parts.train.end)
        .flat_map(|t| series.row(t).to_vec())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(PreparedData {
        series,
        normalization,
        train_end: d.train_length,
        horizon: d.horizon,
        washout: d.washout,
        train_range,
    })
}

// ---------------------------------------------------------------------------
// running

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub mode: ReservoirMode,
    pub metrics: ForecastMetrics,
    pub wall_ms: u128,
    pub config_hash: String,
    /// Forecast step at which the prediction left the divergence bound.
    pub diverged_at: Option<usize>,
    pub predictions: Vec<Vec<f64>>,
}

impl RunRecord {
    pub fn mean_nrmse(&self) -> f64 {
        self.metrics.nrmse.iter().sum::<f64>() / self.metrics.nrmse.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct RunFailure {
    pub seed: u64,
    pub mode: Option<ReservoirMode>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub output_dir: PathBuf,
}

impl ExperimentOutcome {
    /// 0 when everything succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

/// Training and forecasting for one seed across `modes`.
pub fn run_seed(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
    modes: &[ReservoirMode],
) -> Vec<std::result::Result<RunRecord, RunFailure>> {
    let hash = config.hash();
    let d = data.train_end;
    let inputs = data.rows(0..d);
    let targets = data.rows(1..d + 1);
    let truth = data.truth();
    let fail = |mode: Option<ReservoirMode>, e: Error| RunFailure {
        seed,
        mode,
        message: e.to_string(),
    };

    // shared quantum stream for the teacher-forced phase
    let quantum = if modes.iter().any(|m| m.uses_quantum()) {
        let started = Instant::now();
        let built = config.pipeline(seed).and_then(|p| {
            let ms = inputs
                .iter()
                .enumerate()
                .map(|(t, u)| p.measure(u, t as u64))
                .collect::<Result<Vec<_>>>()?;
            Ok((p, ms))
        });
        match built {
            Ok((p, ms)) => Some(Ok((p, ms, started.elapsed().as_millis()))),
            Err(e) => Some(Err(e.to_string())),
        }
    } else {
        None
    };

    modes
        .iter()
        .map(|&mode| {
            let started = Instant::now();
            let (pipeline, train_ms, shared_ms) = match (&quantum, mode.uses_quantum()) {
                (Some(Ok((p, ms, t))), true) => (Some(p), Some(ms), *t),
                (Some(Err(msg)), true) => {
                    return Err(RunFailure {
                        seed,
                        mode: Some(mode),
                        message: msg.clone(),
                    })
                }
                _ => (None, None, 0),
            };
            let m_dim = pipeline.map(|p| p.measurement_dim()).unwrap_or(0);
            let run = || -> Result<RunRecord> {
                let mut res = build_reservoir(&config.reservoir_config(seed, mode), 3, m_dim)?;
                let mut features = Vec::with_capacity(d);
                for (t, u) in inputs.iter().enumerate() {
                    let m: &[f64] = train_ms.map(|ms| ms[t].as_slice()).unwrap_or(&[]);
                    res.update(u, m)?;
                    features.push(res.feature_vector(u));
                }
                let (r, u) = collect(&features, &targets, data.washout)?;
                let model = fit_ridge(&r, &u, config.readout.eta)?;
                let mut step = d as u64;
                let forecast = closed_loop(
                    &model,
                    &mut res,
                    |u| {
                        let p = pipeline.expect("quantum mode has a pipeline");
                        step += 1;
                        p.measure(u, step)
                    },
                    data.series.row(d),
                    data.horizon,
                    config.readout.divergence_factor * data.train_range,
                )?;
                let metrics = forecast_metrics(config, &forecast.predictions, &truth)?;
                let wall_ms = if config.run.record_wall_time {
                    started.elapsed().as_millis() + shared_ms
                } else {
                    0
                };
                Ok(RunRecord {
                    seed,
                    mode,
                    metrics,
                    wall_ms,
                    config_hash: hash.clone(),
                    diverged_at: forecast.diverged_at,
                    predictions: forecast.predictions,
                })
            };
            run().map_err(|e| fail(Some(mode), e))
        })
        .collect()
}

/// NRMSE over the first `nrmse_window` steps (infinite when the forecast
/// diverged inside the window) and valid time over the whole forecast.
fn forecast_metrics(config: &ExperimentConfig, pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<ForecastMetrics> {
    let window = config.readout.nrmse_window.min(truth.len());
    let nrmse = if pred.len() >= window {
        nrmse(&pred[..window], &truth[..window])?
    } else {
        vec![f64::INFINITY; truth[0].len()]
    };
    let valid_prediction_time = if pred.is_empty() {
        0.0
    } else {
        valid_time(pred, &truth[..pred.len()], config.readout.theta, config.data.dt)?
    };
    Ok(ForecastMetrics {
        nrmse,
        valid_prediction_time,
        horizon: truth.len(),
    })
}

/// Runs every seed × mode, writes all CSV outputs into the configured
/// output directory, and returns the records in (seed, mode) order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let data = prepare_data(config)?;
    let seeds = &config.run.seeds;
    let modes = &config.reservoir.modes;
    let results = with_pool(config.run.parallelism, config.run.threads, || {
        map_slice(config.run.parallelism, seeds, |&seed| run_seed(config, &data, seed, modes))
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results.into_iter().flatten() {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    let outcome = ExperimentOutcome {
        records,
        failures,
        output_dir: config.run.output_dir.clone(),
    };
    write_outputs(config, &data, &outcome)?;
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// outputs

pub const METRICS_HEADER: &str = "seed,mode,nrmse_x,nrmse_y,nrmse_z,valid_time,wall_ms";
pub const TRAJECTORY_HEADER: &str = "step,t,x_true,y_true,z_true,x_pred,y_pred,z_pred";
pub const TRAJECTORY_DIR: &str = "trajectories";

pub fn trajectory_file_name(mode: ReservoirMode, seed: u64) -> String {
    format!("{}_seed{seed:04}.csv", mode.name())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn metrics_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        let _ = write!(out, "{},{}", r.seed, r.mode);
        for v in &r.metrics.nrmse {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        let _ = writeln!(out, ",{},{}", fmt_f64(r.metrics.valid_prediction_time), r.wall_ms);
    }
    out
}

pub fn trajectory_csv(data: &PreparedData, record: &RunRecord) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    let dt = data.series.dt();
    for (k, pred) in record.predictions.iter().enumerate() {
        let t = data.train_end + 1 + k;
        let _ = write!(out, "{k},{}", fmt_f64(t as f64 * dt));
        for v in data.series.row(t).iter().chain(pred) {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-mode mean and (population) standard deviation across seeds.
pub fn summary_csv(modes: &[ReservoirMode], records: &[RunRecord], failures: &[RunFailure]) -> String {
    let mut out = String::from(
        "mode,n_ok,n_failed,nrmse_x_mean,nrmse_x_std,nrmse_y_mean,nrmse_y_std,nrmse_z_mean,nrmse_z_std,\
         nrmse_mean,nrmse_mean_std,valid_time_mean,valid_time_std\n",
    );
    for &mode in modes {
        let recs: Vec<&RunRecord> = records.iter().filter(|r| r.mode == mode).collect();
        let failed = failures.iter().filter(|f| f.mode == Some(mode) || f.mode.is_none()).count();
        let _ = write!(out, "{mode},{},{failed}", recs.len());
        for j in 0..3 {
            let (m, s) = mean_std(&recs.iter().map(|r| r.metrics.nrmse[j]).collect::<Vec<_>>());
            let _ = write!(out, ",{},{}", fmt_f64(m), fmt_f64(s));
        }
        let (m, s) = mean_std(&recs.iter().map(|r| r.mean_nrmse()).collect::<Vec<_>>());
        let _ = write!(out, ",{},{}", fmt_f64(m), fmt_f64(s));
        let (m, s) = mean_std(&recs.iter().map(|r| r.metrics.valid_prediction_time).collect::<Vec<_>>());
        let _ = writeln!(out, ",{},{}", fmt_f64(m), fmt_f64(s));
    }
    out
}

/// Forecast mean ± std across seeds at every step, per mode.
pub fn forecast_band_csv(data: &PreparedData, modes: &[ReservoirMode], records: &[RunRecord]) -> String {
    let mut out = String::from("mode,step,t,x_true,y_true,z_true,x_mean,x_std,y_mean,y_std,z_mean,z_std,n_seeds\n");
    let dt = data.series.dt();
    for &mode in modes {
        let recs: Vec<&RunRecord> = records.iter().filter(|r| r.mode == mode).collect();
        for k in 0..data.horizon {
            let alive: Vec<&Vec<f64>> = recs.iter().filter_map(|r| r.predictions.get(k)).collect();
            if alive.is_empty() {
                break;
            }
            let t = data.train_end + 1 + k;
            let _ = write!(out, "{mode},{k},{}", fmt_f64(t as f64 * dt));
            for v in data.series.row(t) {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            for j in 0..3 {
                let (m, s) = mean_std(&alive.iter().map(|p| p[j]).collect::<Vec<_>>());
                let _ = write!(out, ",{},{}", fmt_f64(m), fmt_f64(s));
            }
            let _ = writeln!(out, ",{}", alive.len());
        }
    }
    out
}

fn failures_csv(failures: &[RunFailure]) -> String {
    let mut out = String::from("seed,mode,error\n");
    for f in failures {
        let mode = f.mode.map(|m| m.name()).unwrap_or("all");
        let _ = writeln!(out, "{},{mode},\"{}\"", f.seed, f.message.replace('"', "'"));
    }
    out
}

fn write_outputs(config: &ExperimentConfig, data: &PreparedData, outcome: &ExperimentOutcome) -> Result<()> {
    let dir = &config.run.output_dir;
    let traj_dir = dir.join(TRAJECTORY_DIR);
    std::fs::create_dir_all(&traj_dir).map_err(|e| Error::io(&traj_dir, e))?;
    write_file(&dir.join("config.resolved.toml"), &config.to_toml_string())?;
    write_file(&dir.join("metrics.csv"), &metrics_csv(&outcome.records))?;
    write_file(
        &dir.join("summary.csv"),
        &summary_csv(&config.reservoir.modes, &outcome.records, &outcome.failures),
    )?;
    write_file(
        &dir.join("forecast_band.csv"),
        &forecast_band_csv(data, &config.reservoir.modes, &outcome.records),
    )?;
    write_file(&dir.join("failures.csv"), &failures_csv(&outcome.failures))?;
    let mut runs = String::from("seed,mode,config_hash,diverged_at,wall_ms\n");
    for r in &outcome.records {
        let div = r.diverged_at.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(runs, "{},{},{},{div},{}", r.seed, r.mode, r.config_hash, r.wall_ms);
    }
    write_file(&dir.join("runs.csv"), &runs)?;
    for r in &outcome.records {
        write_file(&traj_dir.join(trajectory_file_name(r.mode, r.seed)), &trajectory_csv(data, r))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// diagnostics and demos

/// Fading-memory probe for each configured mode at the first seed, driven
/// by the normalized training inputs from a zero state and a random state.
pub fn diagnose_memory(config: &ExperimentConfig, opts: &ProbeOptions) -> Result<Vec<(ReservoirMode, MemoryDiagnostics)>> {
    config.validate()?;
    let data = prepare_data(config)?;
    let seed = config.run.seeds[0];
    let inputs = data.rows(0..data.train_end);
    let needs_quantum = config.reservoir.modes.iter().any(|m| m.uses_quantum());
    let pipeline = if needs_quantum { Some(config.pipeline(seed)?) } else { None };
    let m_dim = pipeline.as_ref().map(|p| p.measurement_dim()).unwrap_or(0);
    config
        .reservoir
        .modes
        .iter()
        .map(|&mode| {
            let res = build_reservoir(&config.reservoir_config(seed, mode), 3, m_dim)?;
            let n = res.state_dim();
            let r0_b: Vec<f64> = (0..n)
                .map(|i| counter_symmetric(seed, streams::PROBE + 1, i as u64, 0, 1.0))
                .collect();
            let measure = |u: &[f64]| match &pipeline {
                Some(p) => p.measure(u, 0),
                None => Ok(Vec::new()),
            };
            let diag = fading_memory_probe(&res, &inputs, &vec![0.0; n], &r0_b, measure, opts)?;
            Ok((mode, diag))
        })
        .collect()
}

pub fn memory_csv(rows: &[(ReservoirMode, MemoryDiagnostics)]) -> String {
    let mut out = String::from("mode,esp_decay,fading_memory_time,memory_capacity,echo_state_violation\n");
    for (mode, d) in rows {
        let _ = writeln!(
            out,
            "{mode},{},{},{},{}",
            fmt_f64(d.esp_decay),
            fmt_f64(d.fading_memory_time),
            fmt_f64(d.memory_capacity),
            d.echo_state_violation
        );
    }
    out
}

/// One- and two-qubit feature-map curves for every activation on
/// `points` inputs evenly spaced over `[-π, π]`.
pub fn feature_map_curves(points: usize) -> String {
    let mut out = String::from("u");
    for a in Activation::ALL {
        let n = a.name();
        let _ = write!(out, ",x_{n},x1_{n},x1x2_{n}");
    }
    out.push('\n');
    let pi = std::f64::consts::PI;
    for k in 0..points {
        let u = if points == 1 {
            0.0
        } else {
            -pi + 2.0 * pi * k as f64 / (points - 1) as f64
        };
        out.push_str(&fmt_f64(u));
        for a in Activation::ALL {
            let single = single_qubit_feature_demo(u, a);
            let (x1, x1x2) = two_qubit_feature_demo(u, a);
            let _ = write!(out, ",{},{},{}", fmt_f64(single), fmt_f64(x1), fmt_f64(x1x2));
        }
        out.push('\n');
    }
    out
}

/// Groups `(mode, seed)` trajectory files found under `dir/trajectories`.
pub fn list_trajectories(dir: &Path) -> Result<BTreeMap<String, Vec<PathBuf>>> {
    let traj = dir.join(TRAJECTORY_DIR);
    let expected = || format!("{TRAJECTORY_DIR}/<mode>_seedNNNN.csv");
    let entries = std::fs::read_dir(&traj).map_err(|_| Error::MissingInputs {
        dir: dir.to_path_buf(),
        expected: expected(),
    })?;
    let mut groups: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&traj, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some((mode, _)) = name.strip_suffix(".csv").and_then(|s| s.rsplit_once("_seed")) {
            groups.entry(mode.to_string()).or_default().push(path.clone());
        }
    }
    if groups.is_empty() {
        return Err(Error::MissingInputs {
            dir: dir.to_path_buf(),
            expected: expected(),
        });
    }
    for files in groups.values_mut() {
        files.sort();
    }
    Ok(groups)
}
