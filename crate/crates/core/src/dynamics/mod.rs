//! Discrete-time DST simulation.
//!
//! Server `i` updates its limit every cycle by
//! `x_i(k+1) = x_i(k) + γ Σ_j w_ij (p_i(k) - p_j(k))` where the nodal measure
//! `p_i` is one of:
//!
//! | case | `p_i`              |
//! |------|--------------------|
//! | I    | `r_i - x_i`        |
//! | II   | `(r_i - x_i)/r_i`  |
//! | III  | `ln(r_i / x_i)`    |
//! | IV   | `x_i` (frozen at the bounds `0` and `r_i`) |
//!
//! Served traffic is `a_i(k) = min(x_i(k), r_i(k))`; the ideal is
//! `min(l_total, r_total(k))`.

mod load;
mod scenario;
pub mod step;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use load::{generate_load, LoadGenerator, LoadModel};
pub use scenario::{ClientCounts, GraphSpec, ScenarioFile};
pub use step::{step_case1, step_case2, step_case3, step_case3_limits, step_case4, step_case4_detail, Case4Step};

use crate::graph::{GraphError, WeightedGraph};
use crate::numfmt::sig17;
use crate::rng::SplitMix64;
use crate::throttle::{self, ClientDemands};
use step::DomainViolation;

pub const MAX_HORIZON: usize = 10_000_000;
pub const BLOWUP_LIMIT: f64 = 1e15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("step {step}: node {node} has {quantity} = {value}, outside the domain of case {case:?}")]
    CaseDomainViolation { step: usize, node: usize, case: MeasureCase, quantity: &'static str, value: f64 },
    #[error("step {step}: node {node} limit {value:e} exceeds the blow-up guard")]
    NumericalBlowup { step: usize, node: usize, value: f64 },
    #[error("ideal served traffic is zero over the whole run")]
    ZeroIdeal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasureCase {
    I,
    II,
    III,
    IV,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeAlgorithm {
    #[default]
    Proportional,
    Waterfill,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DstScenario {
    pub graph: WeightedGraph,
    pub gamma: f64,
    pub case: MeasureCase,
    pub initial_limits: Vec<f64>,
    pub load: LoadModel,
    pub horizon: usize,
    pub seed: u64,
    /// Clients per server; empty means one each.
    pub clients_per_node: Vec<usize>,
    pub node_algorithm: NodeAlgorithm,
}

impl DstScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidScenario(msg));
        let n = self.graph.n();
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive and finite, got {}", self.gamma));
        }
        if self.initial_limits.len() != n {
            return bad(format!("expected {n} initial limits, got {}", self.initial_limits.len()));
        }
        if self.initial_limits.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("initial limits must be finite and >= 0".into());
        }
        if !(self.l_total() > 0.0) {
            return bad("initial limits must sum to a positive total".into());
        }
        if self.horizon > MAX_HORIZON {
            return bad(format!("horizon {} exceeds the cap of {MAX_HORIZON}", self.horizon));
        }
        if !self.clients_per_node.is_empty() {
            if self.clients_per_node.len() != n {
                return bad(format!("expected {n} client counts, got {}", self.clients_per_node.len()));
            }
            if self.clients_per_node.contains(&0) {
                return bad("every server needs at least one client".into());
            }
        }
        self.load.validate(n)?;
        match self.case {
            MeasureCase::II | MeasureCase::III if !(self.load.guaranteed_min() > 0.0) => {
                bad(format!("case {:?} needs loads bounded away from zero (clamp_min > 0)", self.case))
            }
            MeasureCase::III if self.initial_limits.iter().any(|&x| x <= 0.0) => {
                bad("case III needs strictly positive initial limits".into())
            }
            _ => Ok(()),
        }
    }

    pub fn l_total(&self) -> f64 {
        self.initial_limits.iter().sum()
    }

    pub fn clients(&self, node: usize) -> usize {
        self.clients_per_node.get(node).copied().unwrap_or(1)
    }
}

/// `p(k)` for the given case.
fn measure(case: MeasureCase, x: &[f64], r: &[f64]) -> Result<Vec<f64>, DomainViolation> {
    match case {
        MeasureCase::I => Ok(step::measure_case1(x, r)),
        MeasureCase::II => step::measure_case2(x, r),
        MeasureCase::III => step::measure_case3(x, r),
        MeasureCase::IV => Ok(x.to_vec()),
    }
}

/// Step-by-step runner; holds `x(k)` and `r(k)` for the current step.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    scenario: &'a DstScenario,
    k: usize,
    x: Vec<f64>,
    p: Vec<f64>,
    load: LoadGenerator,
    shares: Vec<Vec<f64>>,
    client_residual: f64,
    skipped_clusters: usize,
}

impl<'a> Simulator<'a> {
    pub fn new(scenario: &'a DstScenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let load = LoadGenerator::new(&scenario.load, scenario.gamma, scenario.seed);
        let mut rng = SplitMix64::new(scenario.seed).fork(1);
        let shares = (0..scenario.graph.n())
            .map(|i| {
                let raw: Vec<f64> = (0..scenario.clients(i)).map(|_| rng.uniform(0.05, 1.0)).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|s| s / total).collect()
            })
            .collect();
        let x = scenario.initial_limits.clone();
        let p = Self::measure_at(scenario, 0, &x, load.current())?;
        let mut sim = Self { scenario, k: 0, x, p, load, shares, client_residual: 0.0, skipped_clusters: 0 };
        sim.check_clients();
        Ok(sim)
    }

    fn measure_at(sc: &DstScenario, k: usize, x: &[f64], r: &[f64]) -> Result<Vec<f64>, SimError> {
        measure(sc.case, x, r).map_err(|v| SimError::CaseDomainViolation {
            step: k,
            node: v.node,
            case: sc.case,
            quantity: v.quantity,
            value: v.value,
        })
    }

    pub fn step(&self) -> usize {
        self.k
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn r(&self) -> &[f64] {
        self.load.current()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// `a_i(k) = min(x_i(k), r_i(k))`.
    pub fn accepted(&self) -> Vec<f64> {
        self.x.iter().zip(self.r()).map(|(x, r)| x.min(*r)).collect()
    }

    /// Largest `|Σ_j min(x^(j), r^(j)) - min(x_i, r_i)|` seen so far.
    pub fn client_residual(&self) -> f64 {
        self.client_residual
    }

    pub fn skipped_clusters(&self) -> usize {
        self.skipped_clusters
    }

    /// Splits every server limit among its clients with the configured
    /// node algorithm and checks that the full limit is used.
    fn check_clients(&mut self) {
        let r = self.load.current();
        for (i, shares) in self.shares.iter().enumerate() {
            let demands: Vec<f64> = shares.iter().map(|s| s * r[i]).collect();
            let Ok(d) = ClientDemands::new(demands, self.x[i].max(0.0)) else {
                continue;
            };
            let alloc = match self.scenario.node_algorithm {
                NodeAlgorithm::Proportional => throttle::proportional_split(&d),
                NodeAlgorithm::Waterfill => throttle::waterfill_split(&d),
            };
            let served = alloc.accepted_total(&d);
            let want = d.server_limit().min(d.total());
            self.client_residual = self.client_residual.max((served - want).abs());
        }
    }

    /// Moves to step `k + 1`.
    pub fn advance(&mut self) -> Result<(), SimError> {
        let sc = self.scenario;
        let next = match sc.case {
            MeasureCase::IV => {
                let out = step::step_case4_detail(&self.x, self.load.current(), &sc.graph, sc.gamma);
                self.skipped_clusters += out.skipped_clusters;
                out.x
            }
            _ => step::flux_update(&self.x, &self.p, &sc.graph, sc.gamma),
        };
        self.k += 1;
        if let Some((node, &value)) = next.iter().enumerate().find(|(_, v)| !(v.abs() <= BLOWUP_LIMIT)) {
            return Err(SimError::NumericalBlowup { step: self.k, node, value });
        }
        self.load.advance();
        self.p = Self::measure_at(sc, self.k, &next, self.load.current())?;
        self.x = next;
        self.check_clients();
        Ok(())
    }
}

/// Full per-step record of a run, rows `k = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub n: usize,
    pub l_total: f64,
    pub x: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub client_residual: f64,
    pub skipped_clusters: usize,
}

pub fn simulate(scenario: &DstScenario) -> Result<Trajectory, SimError> {
    let mut sim = Simulator::new(scenario)?;
    let rows = scenario.horizon + 1;
    let mut t = Trajectory {
        n: scenario.graph.n(),
        l_total: scenario.l_total(),
        x: Vec::with_capacity(rows),
        r: Vec::with_capacity(rows),
        p: Vec::with_capacity(rows),
        a: Vec::with_capacity(rows),
        client_residual: 0.0,
        skipped_clusters: 0,
    };
    loop {
        t.x.push(sim.x().to_vec());
        t.r.push(sim.r().to_vec());
        t.p.push(sim.p().to_vec());
        t.a.push(sim.accepted());
        if sim.step() == scenario.horizon {
            break;
        }
        sim.advance()?;
    }
    t.client_residual = sim.client_residual();
    t.skipped_clusters = sim.skipped_clusters();
    Ok(t)
}

/// `max_i p_i - min_i p_i`.
pub fn spread(p: &[f64]) -> f64 {
    let (lo, hi) = p.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// `(1/2n) Σ_{i,j} (p_i - p_j)²`, computed as the squared norm of the
/// centered vector.
pub fn dispersion(p: &[f64]) -> f64 {
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter().map(|v| (v - mean).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub steps: usize,
    pub l_total: f64,
    pub over_throttling_pct: Option<f64>,
    pub final_spread: f64,
    pub conservation_residual: f64,
    /// Mean dispersion over the second half of the run.
    pub mean_dispersion: f64,
    pub client_residual: f64,
    pub skipped_clusters: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn r_total(&self, k: usize) -> f64 {
        self.r[k].iter().sum()
    }

    pub fn a_total(&self, k: usize) -> f64 {
        self.a[k].iter().sum()
    }

    pub fn a_ideal(&self, k: usize) -> f64 {
        self.l_total.min(self.r_total(k))
    }

    /// `Σ_k (a_ideal - a_total) / Σ_k a_ideal × 100`.
    pub fn over_throttling_pct(&self) -> Result<f64, SimError> {
        let (mut gap, mut ideal) = (0.0, 0.0);
        for k in 0..self.len() {
            let (i, a) = (self.a_ideal(k), self.a_total(k));
            debug_assert!(a <= i * (1.0 + 1e-12) + 1e-12, "served {a} above ideal {i} at step {k}");
            gap += i - a;
            ideal += i;
        }
        if !(ideal > 0.0) {
            return Err(SimError::ZeroIdeal);
        }
        Ok(100.0 * gap / ideal)
    }

    /// `max_k |Σ_i x_i(k) - l_total|`.
    pub fn conservation_residual(&self) -> f64 {
        self.x
            .iter()
            .map(|x| (x.iter().sum::<f64>() - self.l_total).abs())
            .fold(0.0, f64::max)
    }

    pub fn final_spread(&self) -> f64 {
        self.p.last().map_or(0.0, |p| spread(p))
    }

    pub fn mean_dispersion(&self) -> f64 {
        let tail = &self.p[self.len() / 2..];
        tail.iter().map(|p| dispersion(p)).sum::<f64>() / tail.len() as f64
    }

    pub fn summary(&self) -> SimSummary {
        SimSummary {
            steps: self.len() - 1,
            l_total: self.l_total,
            over_throttling_pct: self.over_throttling_pct().ok(),
            final_spread: self.final_spread(),
            conservation_residual: self.conservation_residual(),
            mean_dispersion: self.mean_dispersion(),
            client_residual: self.client_residual,
            skipped_clusters: self.skipped_clusters,
        }
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["k".to_string()];
        for prefix in ["x", "r", "a"] {
            cols.extend((0..self.n).map(|i| format!("{prefix}_{i}")));
        }
        cols.extend(["r_total", "a_total", "a_ideal"].map(String::from));
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for k in 0..self.len() {
            let _ = write!(out, "{k}");
            for v in self.x[k].iter().chain(&self.r[k]).chain(&self.a[k]) {
                let _ = write!(out, ",{}", sig17(*v));
            }
            let _ = writeln!(
                out,
                ",{},{},{}",
                sig17(self.r_total(k)),
                sig17(self.a_total(k)),
                sig17(self.a_ideal(k))
            );
        }
        out
    }

    /// Long-format `k,series,value` rows for `r_total`, `l_total`,
    /// `a_total` and `a_ideal`.
    pub fn plot_data_csv(&self) -> String {
        let mut out = String::from("k,series,value\n");
        for k in 0..self.len() {
            for (name, v) in [
                ("r_total", self.r_total(k)),
                ("l_total", self.x[k].iter().sum()),
                ("a_total", self.a_total(k)),
                ("a_ideal", self.a_ideal(k)),
            ] {
                let _ = writeln!(out, "{k},{name},{}", sig17(v));
            }
        }
        out
    }
}
