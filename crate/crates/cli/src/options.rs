//! Parsing of option values and input files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dst_core::graph::WeightPolicy;
use dst_core::{NoiseModel, WeightedGraph};

pub fn read_graph(path: &Path) -> anyhow::Result<WeightedGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read graph file {}", path.display()))?;
    // Design output may carry zero weights; connectivity is still checked.
    WeightedGraph::parse_with(&text, WeightPolicy::AllowZero)
        .with_context(|| format!("invalid graph file {}", path.display()))
}

/// `iid:SIGMA`, `indep:S1,S2,...` or `file:PATH`.
pub fn parse_noise(spec: &str, gamma_scaling: bool) -> anyhow::Result<NoiseModel> {
    let (kind, rest) = spec
        .split_once(':')
        .with_context(|| format!("noise spec `{spec}` must look like iid:SIGMA, indep:S1,S2 or file:PATH"))?;
    let model = match kind {
        "iid" => NoiseModel::iid(parse_f64(rest)?, gamma_scaling)?,
        "indep" => {
            let sigmas = rest.split(',').map(parse_f64).collect::<anyhow::Result<Vec<_>>>()?;
            NoiseModel::independent(sigmas, gamma_scaling)?
        }
        "file" => {
            let text =
                std::fs::read_to_string(rest).with_context(|| format!("cannot read covariance file {rest}"))?;
            NoiseModel::general_from_text(&text, gamma_scaling)
                .with_context(|| format!("invalid covariance file {rest}"))?
        }
        other => bail!("unknown noise kind `{other}` (expected iid, indep or file)"),
    };
    Ok(model)
}

fn parse_f64(s: &str) -> anyhow::Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        bail!("`{s}` is not finite");
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Gamma,
    EdgeWeightScale,
    GraphFileList,
    Seed,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::EdgeWeightScale => "edge-weight-scale",
            SweepAxis::GraphFileList => "graph-file-list",
            SweepAxis::Seed => "seed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepValue {
    Number(f64),
    Seed(u64),
    Path(PathBuf),
}

impl SweepValue {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            SweepValue::Number(v) => serde_json::json!(v),
            SweepValue::Seed(s) => serde_json::json!(s),
            SweepValue::Path(p) => serde_json::json!(p.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<SweepValue>,
}

/// Linear grid with both end points; a single point is `start`.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()
}

pub fn parse_sweep(spec: &str) -> anyhow::Result<SweepSpec> {
    let (axis, values) = spec.split_once('=').with_context(|| format!("sweep `{spec}` must look like AXIS=VALUES"))?;
    let axis = match axis.trim() {
        "gamma" => SweepAxis::Gamma,
        "edge-weight-scale" => SweepAxis::EdgeWeightScale,
        "graph-file-list" => SweepAxis::GraphFileList,
        "seed" => SweepAxis::Seed,
        other => bail!("unknown sweep axis `{other}`"),
    };
    let values = values.trim();
    let values: Vec<SweepValue> = if axis == SweepAxis::GraphFileList {
        values.split(',').filter(|s| !s.is_empty()).map(|s| SweepValue::Path(PathBuf::from(s.trim()))).collect()
    } else if let Some(grid) = values.strip_prefix("lin:") {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            bail!("linear grid must be lin:START:STOP:COUNT");
        }
        let count: usize = parts[2].trim().parse().context("grid count must be a positive integer")?;
        if count < 1 {
            bail!("grid count must be >= 1");
        }
        let points = linspace(parse_f64(parts[0])?, parse_f64(parts[1])?, count);
        if axis == SweepAxis::Seed {
            points.into_iter().map(|p| SweepValue::Seed(p.round() as u64)).collect()
        } else {
            points.into_iter().map(SweepValue::Number).collect()
        }
    } else if axis == SweepAxis::Seed {
        values
            .split(',')
            .map(|s| s.trim().parse::<u64>().map(SweepValue::Seed).with_context(|| format!("bad seed `{s}`")))
            .collect::<anyhow::Result<_>>()?
    } else {
        values.split(',').map(|s| parse_f64(s).map(SweepValue::Number)).collect::<anyhow::Result<_>>()?
    };
    if values.is_empty() {
        bail!("sweep needs at least one value");
    }
    Ok(SweepSpec { axis, values })
}
