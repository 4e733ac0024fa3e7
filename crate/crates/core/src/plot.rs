//! SVG forecast figures built from the per-seed trajectory files of a run.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::experiment::list_trajectories;
use crate::{Error, Result};

const COMPONENTS: [&str; 3] = ["x", "y", "z"];
const PALETTE: [RGBColor; 4] = [
    RGBColor(0xd6, 0x27, 0x28),
    RGBColor(0x1f, 0x77, 0xb4),
    RGBColor(0x2c, 0xa0, 0x2c),
    RGBColor(0x94, 0x67, 0xbd),
];

/// One trajectory file: time, truth and prediction rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub truth: Vec<[f64; 3]>,
    pub pred: Vec<[f64; 3]>,
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize| Error::Plot(format!("{}: malformed row {line}", path.display()));
    let mut out = Trajectory {
        t: Vec::new(),
        truth: Vec::new(),
        pred: Vec::new(),
    };
    for (i, line) in text.lines().enumerate().skip(1) {
        let v: Vec<f64> = line
            .split(',')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i))?;
        if v.len() != 8 {
            return Err(bad(i));
        }
        out.t.push(v[1]);
        out.truth.push([v[2], v[3], v[4]]);
        out.pred.push([v[5], v[6], v[7]]);
    }
    Ok(out)
}

/// Mean and population std of component `j` across trajectories, for the
/// steps every trajectory reached.
fn band(trajs: &[Trajectory], j: usize) -> Vec<(f64, f64)> {
    let len = trajs.iter().map(|t| t.pred.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| {
            let n = trajs.len() as f64;
            let mean = trajs.iter().map(|t| t.pred[k][j]).sum::<f64>() / n;
            let var = trajs.iter().map(|t| (t.pred[k][j] - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

/// Writes `forecast_{x,y,z}.svg` into `out_dir`: ground truth plus, per
/// mode, the mean forecast across seeds and a ±1 std band.
pub fn emit_plots(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let groups = list_trajectories(out_dir)?;
    let mut modes = Vec::new();
    for (mode, files) in &groups {
        let trajs = files.iter().map(|f| read_trajectory(f)).collect::<Result<Vec<_>>>()?;
        modes.push((mode.clone(), trajs));
    }
    // the longest trajectory carries the most truth samples
    let reference = modes
        .iter()
        .flat_map(|(_, t)| t.iter())
        .max_by_key(|t| t.t.len())
        .cloned()
        .ok_or_else(|| Error::Plot("no trajectory rows".into()))?;
    if reference.t.is_empty() {
        return Err(Error::Plot("all trajectories are empty".into()));
    }

    let mut written = Vec::new();
    for (j, name) in COMPONENTS.iter().enumerate() {
        let path = out_dir.join(format!("forecast_{name}.svg"));
        draw_component(&path, name, j, &reference, &modes).map_err(|e| Error::Plot(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

fn draw_component(
    path: &Path,
    name: &str,
    j: usize,
    reference: &Trajectory,
    modes: &[(String, Vec<Trajectory>)],
) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let bands: Vec<(&str, Vec<(f64, f64)>)> = modes.iter().map(|(m, t)| (m.as_str(), band(t, j))).collect();
    let truth: Vec<(f64, f64)> = reference.t.iter().zip(&reference.truth).map(|(t, v)| (*t, v[j])).collect();

    let (mut lo, mut hi) = truth.iter().fold((f64::MAX, f64::MIN), |(l, h), p| (l.min(p.1), h.max(p.1)));
    for (_, b) in &bands {
        for (m, s) in b {
            lo = lo.min(m - s);
            hi = hi.max(m + s);
        }
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    let (t0, t1) = (reference.t[0], *reference.t.last().unwrap());

    let root = SVGBackend::new(path, (960, 400)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("closed-loop forecast, {name}"), ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(50)
        .build_cartesian_2d(t0..t1.max(t0 + 1e-9), (lo - pad)..(hi + pad))?;
    chart.configure_mesh().x_desc("t").y_desc(name).draw()?;

    chart
        .draw_series(LineSeries::new(truth, BLACK.stroke_width(2)))?
        .label("truth")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));

    for (i, (mode, b)) in bands.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ts = &reference.t[..b.len()];
        let mut area: Vec<(f64, f64)> = ts.iter().zip(b).map(|(t, (m, s))| (*t, m + s)).collect();
        area.extend(ts.iter().zip(b).rev().map(|(t, (m, s))| (*t, m - s)));
        if !area.is_empty() {
            chart.draw_series(std::iter::once(Polygon::new(area, color.mix(0.2).filled())))?;
        }
        chart
            .draw_series(LineSeries::new(ts.iter().zip(b).map(|(t, (m, _))| (*t, *m)), color.stroke_width(2)))?
            .label(*mode)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}
