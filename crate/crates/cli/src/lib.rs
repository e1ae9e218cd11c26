//! `dst` command-line front end.
//!
//! ```text
//! dst <verb> [--graph PATH] [--scenario PATH] [--gamma F] [--noise SPEC]
//!            [--gamma-scaling on|off] [--mode M] [--sweep SPEC] [--seed N]
//!            [--out DIR] [--emit-plot-data]
//! ```
//!
//! Exit codes: 0 success, 1 input error, 2 infinite dispersion, 3 infeasible
//! design, 4 runtime domain violation.

pub mod commands;
pub mod options;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use dst_core::{DesignError, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFINITE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_DOMAIN: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    /// Convergence factor, steady-state dispersion and centrality.
    Analyze,
    /// Optimal update cycle or link weights (`--mode`).
    Design,
    /// `design` restricted to the update cycle.
    DesignGamma,
    /// `design` restricted to link weights.
    DesignWeights,
    /// Run a scenario and write its trajectory.
    Simulate,
    /// Run a scenario once per value of a swept parameter.
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "dst", version, about = "Analyze, design and simulate distributed system throttlers")]
pub struct Cli {
    #[arg(value_enum)]
    pub verb: Verb,
    /// Graph file: header `n m`, then `i j w` per edge.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Update cycle.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// `iid:SIGMA`, `indep:S1,S2,...` or `file:PATH` (covariance matrix).
    #[arg(long)]
    pub noise: Option<String>,
    /// Whether the demand-increment covariance carries a factor gamma.
    /// Defaults to `on` for analyze and `off` for design.
    #[arg(long, value_enum)]
    pub gamma_scaling: Option<Toggle>,
    /// Design mode: fastest, robust, gamma-steady or gamma-nonsteady.
    #[arg(long)]
    pub mode: Option<String>,
    /// `AXIS=V1,V2,...` or `AXIS=lin:START:STOP:COUNT`; axes are gamma,
    /// edge-weight-scale, graph-file-list and seed.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write long-format `k,series,value` CSV of the aggregate curves.
    #[arg(long)]
    pub emit_plot_data: bool,
    /// Solver iteration budget.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Maps an error to its exit code by inspecting the source chain.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<SimError>() {
            return match e {
                SimError::CaseDomainViolation { .. } | SimError::NumericalBlowup { .. } => EXIT_DOMAIN,
                _ => EXIT_INPUT,
            };
        }
        if let Some(e) = cause.downcast_ref::<DesignError>() {
            return match e {
                DesignError::InfeasibleStart(_) | DesignError::NoInteriorOptimum { .. } => EXIT_INFEASIBLE,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INPUT
}

/// Runs one invocation, writing records to `stdout`. Returns the exit code
/// for successful runs (2 flags an infinite dispersion).
pub fn run(cli: &Cli, stdout: &mut dyn std::io::Write) -> anyhow::Result<i32> {
    match cli.verb {
        Verb::Analyze => commands::analyze(cli, stdout),
        Verb::Design => commands::design(cli, cli.mode.as_deref(), stdout),
        Verb::DesignGamma => commands::design(cli, Some(cli.mode.as_deref().unwrap_or("gamma-steady")), stdout),
        Verb::DesignWeights => commands::design(cli, Some(cli.mode.as_deref().unwrap_or("fastest")), stdout),
        Verb::Simulate => commands::simulate(cli, stdout),
        Verb::Sweep => commands::sweep(cli, stdout),
    }
}
