use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use dst_core::design::{self, SolverConfig};
use dst_core::dynamics::{simulate as run_scenario, SimSummary};
use dst_core::measures::{self, NoiseModel, PhiSs};
use dst_core::{DstScenario, LoadModel};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::options::{parse_noise, parse_sweep, read_graph, SweepAxis, SweepValue};
use crate::{Cli, Toggle, EXIT_INFINITE, EXIT_OK};

fn require<'a, T>(value: &'a Option<T>, flag: &str) -> anyhow::Result<&'a T> {
    value.as_ref().with_context(|| format!("missing required option --{flag}"))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn scaling(cli: &Cli, default: bool) -> bool {
    cli.gamma_scaling.map_or(default, |t| t == Toggle::On)
}

pub fn analyze(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    let g = read_graph(require(&cli.graph, "graph")?)?;
    let gamma = *require(&cli.gamma, "gamma")?;
    let noise = parse_noise(cli.noise.as_deref().unwrap_or("iid:1"), scaling(cli, true))?;
    let report = measures::analyze(&g, gamma, &noise)?;
    let json = report.to_json();
    writeln!(out, "{json}")?;
    if let Some(dir) = &cli.out {
        write_file(dir, "report.json", &format!("{json}\n"))?;
    }
    Ok(if report.phi_ss.is_finite() { EXIT_OK } else { EXIT_INFINITE })
}

fn solver_config(cli: &Cli) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(m) = cli.max_iters {
        cfg.max_iters = m;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    cfg
}

pub fn design(cli: &Cli, mode: Option<&str>, out: &mut dyn Write) -> anyhow::Result<i32> {
    let mode = mode.context("missing required option --mode (fastest, robust, gamma-steady, gamma-nonsteady)")?;
    let g = read_graph(require(&cli.graph, "graph")?)?;
    let cfg = solver_config(cli);
    let noise = || -> anyhow::Result<NoiseModel> {
        parse_noise(require(&cli.noise, "noise")?, scaling(cli, false))
    };
    let result = match mode {
        "gamma-steady" | "steady" => design::optimal_gamma_steady(&g)?,
        "gamma-nonsteady" | "nonsteady" => design::optimal_gamma_nonsteady(&g, &noise()?, &cfg)?,
        "fastest" => design::fastest_weights(&g, *require(&cli.gamma, "gamma")?, &cfg)?,
        "robust" => design::robust_weights(&g, *require(&cli.gamma, "gamma")?, &noise()?, &cfg)?,
        other => bail!("unknown design mode `{other}`"),
    };
    if !result.converged {
        warn!(
            "solver stopped after {} iterations without meeting tol (kkt residual {:e}); best iterate reported",
            result.iterations, result.kkt_residual
        );
    }
    let json = result.to_json();
    writeln!(out, "{json}")?;
    if let Some(dir) = &cli.out {
        write_file(dir, "design.json", &format!("{json}\n"))?;
        if let Some(w) = result.weights() {
            write_file(dir, "graph.txt", &g.with_weights(w)?.to_text())?;
        }
    }
    Ok(EXIT_OK)
}

fn load_scenario(cli: &Cli) -> anyhow::Result<DstScenario> {
    let path = require(&cli.scenario, "scenario")?;
    let mut sc = DstScenario::from_file(path).with_context(|| format!("cannot load scenario {}", path.display()))?;
    if let Some(seed) = cli.seed {
        sc.seed = seed;
    }
    if let Some(gamma) = cli.gamma {
        sc.gamma = gamma;
    }
    sc.validate()?;
    Ok(sc)
}

#[derive(Debug, Serialize)]
struct SimulateRecord {
    phi_cr: f64,
    #[serde(flatten)]
    summary: SimSummary,
}

pub fn simulate(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    let sc = load_scenario(cli)?;
    info!("simulating {} nodes for {} steps (case {:?})", sc.graph.n(), sc.horizon, sc.case);
    let traj = run_scenario(&sc)?;
    let record = SimulateRecord { phi_cr: measures::phi_cr(&sc.graph, sc.gamma)?, summary: traj.summary() };
    let json = serde_json::to_string(&record)?;
    writeln!(out, "{json}")?;
    if let Some(dir) = &cli.out {
        write_file(dir, "trajectory.csv", &traj.to_csv())?;
        write_file(dir, "summary.json", &format!("{json}\n"))?;
        if cli.emit_plot_data {
            write_file(dir, "plot_data.csv", &traj.plot_data_csv())?;
        }
    } else if cli.emit_plot_data {
        warn!("--emit-plot-data needs --out; nothing written");
    }
    Ok(EXIT_OK)
}

/// Noise implied by a scenario's load model, for the closed-form dispersion.
fn scenario_noise(sc: &DstScenario) -> Option<NoiseModel> {
    match &sc.load {
        LoadModel::RandomWalk { sigma, gamma_scaling, .. } => NoiseModel::independent(sigma.clone(), *gamma_scaling).ok(),
        _ => None,
    }
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub value: serde_json::Value,
    pub phi_cr: Option<f64>,
    pub phi_ss: Option<PhiSs>,
    pub summary: Option<SimSummary>,
    pub error: Option<String>,
}

struct RowOutcome {
    phi_cr: Option<f64>,
    phi_ss: Option<PhiSs>,
    result: anyhow::Result<SimSummary>,
}

fn sweep_row(base: &DstScenario, axis: SweepAxis, value: &SweepValue, noise: Option<&NoiseModel>) -> RowOutcome {
    let configured = (|| -> anyhow::Result<DstScenario> {
        let mut sc = base.clone();
        match (axis, value) {
            (SweepAxis::Gamma, SweepValue::Number(g)) => sc.gamma = *g,
            (SweepAxis::EdgeWeightScale, SweepValue::Number(s)) => sc.graph = sc.graph.scaled(*s)?,
            (SweepAxis::GraphFileList, SweepValue::Path(p)) => sc.graph = read_graph(p)?,
            (SweepAxis::Seed, SweepValue::Seed(s)) => sc.seed = *s,
            _ => bail!("sweep value does not match its axis"),
        }
        sc.validate()?;
        Ok(sc)
    })();
    let sc = match configured {
        Ok(sc) => sc,
        Err(e) => return RowOutcome { phi_cr: None, phi_ss: None, result: Err(e) },
    };
    let phi_cr = measures::phi_cr(&sc.graph, sc.gamma).ok();
    let phi_ss = noise.and_then(|n| measures::phi_ss_closed(&sc.graph, sc.gamma, n).ok());
    let result = run_scenario(&sc).map(|t| t.summary()).map_err(anyhow::Error::from);
    RowOutcome { phi_cr, phi_ss, result }
}

/// One row per sweep value, in input order; rows run in parallel.
pub fn sweep_rows(cli: &Cli) -> anyhow::Result<Vec<SweepRow>> {
    let base = load_scenario(cli)?;
    let spec = parse_sweep(require(&cli.sweep, "sweep")?)?;
    let noise = match &cli.noise {
        Some(s) => Some(parse_noise(s, scaling(cli, false))?),
        None => scenario_noise(&base),
    };
    let rows = spec
        .values
        .par_iter()
        .map(|v| {
            let o = sweep_row(&base, spec.axis, v, noise.as_ref());
            let (summary, error) = match o.result {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(format!("{e:#}"))),
            };
            SweepRow { axis: spec.axis.name(), value: v.to_json(), phi_cr: o.phi_cr, phi_ss: o.phi_ss, summary, error }
        })
        .collect();
    Ok(rows)
}

pub fn sweep(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<i32> {
    let rows = sweep_rows(cli)?;
    let mut text = String::new();
    for row in &rows {
        if let Some(e) = &row.error {
            warn!("sweep row {} failed: {e}", row.value);
        }
        text.push_str(&serde_json::to_string(row)?);
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    if let Some(dir) = &cli.out {
        write_file(dir, "sweep.jsonl", &text)?;
    }
    Ok(EXIT_OK)
}

