//! One update cycle for each nodal performance measure.
//!
//! Every rule has the form `x(k+1) = x(k) + γ L p(k)`. It is applied edge by
//! edge as an antisymmetric flux `γ w_ij (p_i - p_j)`, so `Σ x_i` is
//! conserved up to rounding.

use crate::graph::WeightedGraph;

/// A state outside the domain of the chosen measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainViolation {
    pub node: usize,
    pub quantity: &'static str,
    pub value: f64,
}

/// `x + γ L p`, accumulated as per-edge fluxes.
pub fn flux_update(x: &[f64], p: &[f64], g: &WeightedGraph, gamma: f64) -> Vec<f64> {
    let mut out = x.to_vec();
    for e in g.edges() {
        let f = gamma * e.weight * (p[e.i] - p[e.j]);
        out[e.i] += f;
        out[e.j] -= f;
    }
    out
}

/// Case I measure: throttled amount `p = r - x`.
pub fn measure_case1(x: &[f64], r: &[f64]) -> Vec<f64> {
    r.iter().zip(x).map(|(r, x)| r - x).collect()
}

/// Case II measure: throttled ratio `p = (r - x) / r`.
pub fn measure_case2(x: &[f64], r: &[f64]) -> Result<Vec<f64>, DomainViolation> {
    check_positive(r, "r")?;
    Ok(r.iter().zip(x).map(|(r, x)| (r - x) / r).collect())
}

/// Case III measure: `p = ln(r / x)`.
pub fn measure_case3(x: &[f64], r: &[f64]) -> Result<Vec<f64>, DomainViolation> {
    check_positive(r, "r")?;
    check_positive(x, "x")?;
    Ok(r.iter().zip(x).map(|(r, x)| (r / x).ln()).collect())
}

fn check_positive(v: &[f64], quantity: &'static str) -> Result<(), DomainViolation> {
    match v.iter().position(|&a| !(a > 0.0)) {
        Some(node) => Err(DomainViolation { node, quantity, value: v[node] }),
        None => Ok(()),
    }
}

/// `x + γ L (r - x)`. The mismatch then evolves as
/// `p(k+1) = (I - γL) p(k) + (r(k+1) - r(k))`.
pub fn step_case1(x: &[f64], r: &[f64], g: &WeightedGraph, gamma: f64) -> Vec<f64> {
    flux_update(x, &measure_case1(x, r), g, gamma)
}

/// `x + γ L diag(r)⁻¹ (r - x)`.
pub fn step_case2(x: &[f64], r: &[f64], g: &WeightedGraph, gamma: f64) -> Result<Vec<f64>, DomainViolation> {
    Ok(flux_update(x, &measure_case2(x, r)?, g, gamma))
}

/// `x + γ L ln(r / x)`; fails if any limit leaves `(0, ∞)`.
pub fn step_case3_limits(
    x: &[f64],
    r: &[f64],
    g: &WeightedGraph,
    gamma: f64,
) -> Result<Vec<f64>, DomainViolation> {
    let next = flux_update(x, &measure_case3(x, r)?, g, gamma);
    check_positive(&next, "x")?;
    Ok(next)
}

/// Constant-load Case III in `p̄ = x / r` coordinates:
/// `p̄(k+1) = p̄(k) - (γ/r) L ln p̄(k)`.
pub fn step_case3(pbar: &[f64], g: &WeightedGraph, gamma: f64, r_const: f64) -> Result<Vec<f64>, DomainViolation> {
    check_positive(pbar, "pbar")?;
    let neg_log: Vec<f64> = pbar.iter().map(|v| -v.ln()).collect();
    let next = flux_update(pbar, &neg_log, g, gamma / r_const);
    check_positive(&next, "pbar")?;
    Ok(next)
}

/// Result of one Case IV cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Case4Step {
    pub x: Vec<f64>,
    pub frozen: Vec<bool>,
    /// Connected clusters whose step was cancelled because a boundary
    /// overshoot could not be absorbed by unfrozen neighbors.
    pub skipped_clusters: usize,
}

/// Case IV: `p = x`, i.e. `x(k+1) = (I + γL) x(k)` with freezing.
///
/// Node `i` is frozen when it sits at its upper bound with a positive update
/// or at zero with a negative one. Frozen nodes keep their limit and their
/// edges are dropped from the Laplacian for this cycle. The upper bound is
/// `max(r_i, x_i)`, so a limit left above a falling demand may still shrink.
pub fn step_case4(x: &[f64], r: &[f64], g: &WeightedGraph, gamma: f64) -> Vec<f64> {
    step_case4_detail(x, r, g, gamma).x
}

pub fn step_case4_detail(x: &[f64], r: &[f64], g: &WeightedGraph, gamma: f64) -> Case4Step {
    let n = x.len();
    let upper: Vec<f64> = x.iter().zip(r).map(|(x, r)| x.max(*r)).collect();
    let free_update = flux_update(&vec![0.0; n], x, g, gamma);
    let frozen: Vec<bool> = (0..n)
        .map(|i| (x[i] >= r[i] && free_update[i] > 0.0) || (x[i] <= 0.0 && free_update[i] < 0.0))
        .collect();

    let active: Vec<(usize, usize, f64)> = g
        .edges()
        .iter()
        .filter(|e| !frozen[e.i] && !frozen[e.j])
        .map(|e| (e.i, e.j, e.weight))
        .collect();
    let mut next = x.to_vec();
    for &(i, j, w) in &active {
        let f = gamma * w * (x[i] - x[j]);
        next[i] += f;
        next[j] -= f;
    }

    let mut neighbors = vec![Vec::new(); n];
    for &(i, j, _) in &active {
        neighbors[i].push(j);
        neighbors[j].push(i);
    }

    let mut failed = Vec::new();
    for i in 0..n {
        let excess = if next[i] > upper[i] {
            next[i] - upper[i]
        } else if next[i] < 0.0 {
            next[i]
        } else {
            continue;
        };
        let room = |j: usize, v: &[f64]| if excess > 0.0 { upper[j] - v[j] } else { v[j] };
        let takers: Vec<(usize, f64)> = neighbors[i]
            .iter()
            .map(|&j| (j, room(j, &next)))
            .filter(|&(_, space)| space > 0.0)
            .collect();
        let capacity: f64 = takers.iter().map(|t| t.1).sum();
        if capacity < excess.abs() {
            failed.push(i);
            continue;
        }
        for (j, space) in takers {
            next[j] += excess * space / capacity;
        }
        next[i] -= excess;
    }

    let mut skipped_clusters = 0;
    if !failed.is_empty() {
        let mut reverted = vec![false; n];
        for start in failed {
            if reverted[start] {
                continue;
            }
            skipped_clusters += 1;
            let mut stack = vec![start];
            reverted[start] = true;
            while let Some(u) = stack.pop() {
                next[u] = x[u];
                for &v in &neighbors[u] {
                    if !reverted[v] {
                        reverted[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
    }
    Case4Step { x: next, frozen, skipped_clusters }
}
