//! Request-load models.

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadModel {
    /// Constant per-node demand.
    Steady { r: Vec<f64> },
    /// `r_i(k+1) = r_i(k) + v_i(k)`, `v_i(k) ~ N(0, s σ_i²)` with `s = γ` under
    /// the scaled convention and 1 otherwise. Values below `clamp_min` are
    /// reflected back above it.
    RandomWalk {
        r0: Vec<f64>,
        sigma: Vec<f64>,
        #[serde(default)]
        clamp_min: f64,
        #[serde(default)]
        gamma_scaling: bool,
    },
    /// Piecewise-linear profiles of `(step, value)` knots, one per node,
    /// held constant outside the first and last knot.
    UsageCurve { profiles: Vec<Vec<(f64, f64)>> },
}

impl LoadModel {
    pub fn n(&self) -> usize {
        match self {
            LoadModel::Steady { r } => r.len(),
            LoadModel::RandomWalk { r0, .. } => r0.len(),
            LoadModel::UsageCurve { profiles } => profiles.len(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidScenario(msg));
        if self.n() != n {
            return bad(format!("load model describes {} nodes, graph has {n}", self.n()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            LoadModel::Steady { r } => {
                if !finite(r) || r.iter().any(|&x| x < 0.0) {
                    return bad("steady loads must be finite and >= 0".into());
                }
            }
            LoadModel::RandomWalk { r0, sigma, clamp_min, .. } => {
                if sigma.len() != n {
                    return bad(format!("expected {n} sigmas, got {}", sigma.len()));
                }
                if !finite(sigma) || sigma.iter().any(|&s| s < 0.0) {
                    return bad("random-walk sigmas must be finite and >= 0".into());
                }
                if !(clamp_min.is_finite() && *clamp_min >= 0.0) {
                    return bad("clamp_min must be finite and >= 0".into());
                }
                if !finite(r0) || r0.iter().any(|x| x < clamp_min) {
                    return bad("random-walk start must be finite and >= clamp_min".into());
                }
            }
            LoadModel::UsageCurve { profiles } => {
                for (i, p) in profiles.iter().enumerate() {
                    if p.is_empty() {
                        return bad(format!("node {i}: empty usage profile"));
                    }
                    if p.iter().any(|(s, v)| !s.is_finite() || !v.is_finite() || *v < 0.0) {
                        return bad(format!("node {i}: knots must be finite with values >= 0"));
                    }
                    if p.windows(2).any(|w| w[1].0 <= w[0].0) {
                        return bad(format!("node {i}: knot steps must increase strictly"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Lower bound the model can guarantee for every `r_i(k)`.
    pub fn guaranteed_min(&self) -> f64 {
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        match self {
            LoadModel::Steady { r } => min(r),
            LoadModel::RandomWalk { clamp_min, .. } => *clamp_min,
            LoadModel::UsageCurve { profiles } => profiles
                .iter()
                .flat_map(|p| p.iter().map(|k| k.1))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let idx = knots.partition_point(|k| k.0 <= t);
    let (a, b) = (knots[idx - 1], knots[idx]);
    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
}

/// Streams `r(0), r(1), …` one step at a time.
#[derive(Debug, Clone)]
pub struct LoadGenerator {
    model: LoadModel,
    gamma: f64,
    rng: SplitMix64,
    k: usize,
    r: Vec<f64>,
}

impl LoadGenerator {
    pub fn new(model: &LoadModel, gamma: f64, seed: u64) -> Self {
        let rng = SplitMix64::new(seed).fork(0);
        let mut out = Self { model: model.clone(), gamma, rng, k: 0, r: Vec::new() };
        out.r = match model {
            LoadModel::Steady { r } => r.clone(),
            LoadModel::RandomWalk { r0, .. } => r0.clone(),
            LoadModel::UsageCurve { profiles } => profiles.iter().map(|p| interpolate(p, 0.0)).collect(),
        };
        out
    }

    pub fn step(&self) -> usize {
        self.k
    }

    /// `r(k)` at the current step.
    pub fn current(&self) -> &[f64] {
        &self.r
    }

    pub fn advance(&mut self) {
        self.k += 1;
        match &self.model {
            LoadModel::Steady { .. } => {}
            LoadModel::RandomWalk { sigma, clamp_min, gamma_scaling, .. } => {
                let scale = if *gamma_scaling { self.gamma.sqrt() } else { 1.0 };
                for (r, s) in self.r.iter_mut().zip(sigma) {
                    let mut next = *r + scale * s * self.rng.standard_normal();
                    if next < *clamp_min {
                        next = (2.0 * clamp_min - next).max(*clamp_min);
                    }
                    *r = next;
                }
            }
            LoadModel::UsageCurve { profiles } => {
                let t = self.k as f64;
                for (r, p) in self.r.iter_mut().zip(profiles) {
                    *r = interpolate(p, t);
                }
            }
        }
    }
}

/// `r(0..=horizon)`, one row per step.
pub fn generate_load(model: &LoadModel, gamma: f64, horizon: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut gen = LoadGenerator::new(model, gamma, seed);
    let mut rows = Vec::with_capacity(horizon + 1);
    rows.push(gen.current().to_vec());
    for _ in 0..horizon {
        gen.advance();
        rows.push(gen.current().to_vec());
    }
    rows
}
