//! Benchmark time series: Lorenz63 generation, normalization and
//! washout/train/test partitioning.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ordered multivariate samples with a fixed step, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: Vec<f64>,
    dim: usize,
    dt: f64,
    labels: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(rows: Vec<Vec<f64>>, dt: f64) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::TimeSeries("ragged rows".into()));
        }
        Self::from_flat(rows.into_iter().flatten().collect(), dim, dt)
    }

    pub fn from_flat(data: Vec<f64>, dim: usize, dt: f64) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::TimeSeries("need at least one sample of dimension >= 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::TimeSeries("data length is not a multiple of dim".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::TimeSeries(format!("dt must be positive, got {dt}")));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::TimeSeries(format!("non-finite entry at sample {}", i / dim)));
        }
        Ok(Self {
            data,
            dim,
            dt,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        if labels.len() == self.dim {
            self.labels = Some(labels.iter().map(|s| s.to_string()).collect());
        }
        self
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Copy of the samples in `range`. Fails on an empty range.
    pub fn slice(&self, range: Range<usize>) -> Result<TimeSeries> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::Partition(format!(
                "slice {range:?} invalid for series of length {}",
                self.len()
            )));
        }
        let data = self.data[range.start * self.dim..range.end * self.dim].to_vec();
        Ok(Self {
            data,
            dim: self.dim,
            dt: self.dt,
            labels: self.labels.clone(),
        })
    }

    /// Writes `t,<labels...>` CSV with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push('t');
        let default_labels: Vec<String>;
        let labels = match &self.labels {
            Some(l) => l.as_slice(),
            None => {
                default_labels = match self.dim {
                    3 => vec!["x".into(), "y".into(), "z".into()],
                    d => (0..d).map(|j| format!("u{j}")).collect(),
                };
                default_labels.as_slice()
            }
        };
        for l in labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (t, row) in self.rows().enumerate() {
            out.push_str(&fmt_f64(t as f64 * self.dt));
            for v in row {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Decimal rendering with 17 significant digits, exact for round-tripping.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lorenz63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: [f64; 3],
    pub dt: f64,
    pub steps: usize,
}

impl Default for Lorenz63Params {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            x0: [1.0, 1.0, 1.0],
            dt: 0.02,
            steps: 5000,
        }
    }
}

impl Lorenz63Params {
    fn rhs(&self, s: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = s;
        [
            self.sigma * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        ]
    }

    fn rk4_step(&self, s: [f64; 3], h: f64) -> [f64; 3] {
        let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
        let k1 = self.rhs(s);
        let k2 = self.rhs(add(s, k1, h / 2.0));
        let k3 = self.rhs(add(s, k2, h / 2.0));
        let k4 = self.rhs(add(s, k3, h));
        let mut out = s;
        for i in 0..3 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out
    }
}

/// Fixed-step RK4 trajectory with `steps + 1` samples (the initial
/// condition included).
pub fn integrate_lorenz63(params: &Lorenz63Params) -> Result<TimeSeries> {
    if !(params.dt > 0.0) || params.steps == 0 {
        return Err(Error::Config(format!(
            "lorenz63 needs dt > 0 and steps >= 1 (dt={}, steps={})",
            params.dt, params.steps
        )));
    }
    if params.x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationDivergence { step: 0 });
    }
    let mut data = Vec::with_capacity(3 * (params.steps + 1));
    let mut s = params.x0;
    data.extend_from_slice(&s);
    for step in 1..=params.steps {
        s = params.rk4_step(s, params.dt);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDivergence { step });
        }
        data.extend_from_slice(&s);
    }
    Ok(TimeSeries::from_flat(data, 3, params.dt)?.with_labels(&["x", "y", "z"]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScheme {
    /// Each component's range mapped onto [-1, 1].
    #[default]
    MinmaxSymmetric,
    Zscore,
}

/// Per-component affine map `(x - offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl NormalizationParams {
    pub fn fit(ts: &TimeSeries, scheme: NormalizationScheme) -> Result<Self> {
        if ts.len() < 2 {
            return Err(Error::TimeSeries("normalization needs at least 2 samples".into()));
        }
        let n = ts.len() as f64;
        let mut offset = Vec::with_capacity(ts.dim());
        let mut scale = Vec::with_capacity(ts.dim());
        for j in 0..ts.dim() {
            let col = ts.column(j);
            let (o, s) = match scheme {
                NormalizationScheme::MinmaxSymmetric => {
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    ((hi + lo) / 2.0, (hi - lo) / 2.0)
                }
                NormalizationScheme::Zscore => {
                    let mean = col.iter().sum::<f64>() / n;
                    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (mean, var.sqrt())
                }
            };
            if !(s > 0.0) {
                return Err(Error::DegenerateScale { component: j });
            }
            offset.push(o);
            scale.push(s);
        }
        Ok(Self { offset, scale })
    }

    pub fn apply(&self, ts: &TimeSeries) -> Result<TimeSeries> {
        self.map(ts, |v, o, s| (v - o) / s)
    }

    pub fn invert(&self, ts: &TimeSeries) -> Result<TimeSeries> {
        self.map(ts, |v, o, s| v * s + o)
    }

    fn map(&self, ts: &TimeSeries, f: impl Fn(f64, f64, f64) -> f64) -> Result<TimeSeries> {
        if ts.dim() != self.offset.len() {
            return Err(Error::TimeSeries(format!(
                "normalization fitted for dim {}, got {}",
                self.offset.len(),
                ts.dim()
            )));
        }
        let dim = ts.dim();
        let data = ts
            .data
            .iter()
            .enumerate()
            .map(|(k, &v)| f(v, self.offset[k % dim], self.scale[k % dim]))
            .collect();
        Ok(TimeSeries {
            data,
            dim,
            dt: ts.dt,
            labels: ts.labels.clone(),
        })
    }
}

/// Fits the scheme on `ts` and applies it.
pub fn normalize(ts: &TimeSeries, scheme: NormalizationScheme) -> Result<(TimeSeries, NormalizationParams)> {
    let params = NormalizationParams::fit(ts, scheme)?;
    Ok((params.apply(ts)?, params))
}

/// Index ranges of a washout/train/test partition.
///
/// Index 0 is the initial sample and belongs to no segment; the washout
/// holds the `p - 1` samples `1..p`, training covers `p..=d` and the test
/// segment `d+1..=d+h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub washout: Range<usize>,
    pub train: Range<usize>,
    pub test: Range<usize>,
}

pub fn split(len: usize, washout: usize, train_end: usize, horizon: usize) -> Result<Split> {
    if washout < 1 || washout >= train_end {
        return Err(Error::Partition(format!(
            "need 1 <= p < d, got p={washout}, d={train_end}"
        )));
    }
    // the last test index is d + h, which must exist
    if train_end + horizon >= len {
        return Err(Error::Partition(format!(
            "d + h = {} exceeds the last index {} of a series of length {len}",
            train_end + horizon,
            len.saturating_sub(1)
        )));
    }
    Ok(Split {
        washout: 1..washout,
        train: washout..train_end + 1,
        test: train_end + 1..train_end + horizon + 1,
    })
}
