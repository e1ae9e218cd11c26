//! Optimal update cycle and optimal link weights.
//!
//! * [`optimal_gamma_steady`]: `γ* = 2 / (λ_2 + λ_n)` minimizes `Φ_cr`.
//! * [`optimal_gamma_nonsteady`]: golden-section search of the convex scalar
//!   function `γ ↦ Φ_ss(γ)` on the stability interval `(0, 2/λ_n)`.
//! * [`fastest_weights`]: projected subgradient descent of
//!   `max_{i≥2} |1 - γλ_i(w)|` over `w ≥ 0`.
//! * [`robust_weights`]: projected gradient descent of `Φ_ss(w)` over `w ≥ 0`
//!   with the strict stability constraint enforced by backtracking.
//!
//! Both weight problems are convex; the solvers return the best iterate they
//! visited together with a first-order optimality residual.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};
use crate::measures::{self, MeasureError, NoiseModel};
use crate::spectral::{SpectralData, SpectralError};

/// Iterates with `Φ_cr` above `1 - STABILITY_MARGIN` are rejected.
pub const STABILITY_MARGIN: f64 = 1e-9;
/// Eigenpairs whose `|1 - γλ_i|` is this close to the maximum count as active.
pub const TIE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("update cycle must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("objective is monotone on (0, 2/lambda_n): minimizer hits the {side} end at gamma = {gamma}")]
    NoInteriorOptimum { gamma: f64, side: &'static str },
    #[error("infeasible start: {0}")]
    InfeasibleStart(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum StepRule {
    /// Constant step length `eta`.
    Fixed { eta: f64 },
    /// Step length `eta0 / sqrt(k)` at iteration `k`.
    Diminishing { eta0: f64 },
    /// Armijo backtracking: shrink by `beta` until the decrease is at least
    /// `c` times the first-order prediction.
    Backtracking { beta: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// `None` selects the solver's own default rule.
    pub step_rule: Option<StepRule>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 5000, tol: 1e-9, step_rule: None }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DesignError> {
        if self.max_iters < 1 {
            return Err(DesignError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(DesignError::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        match self.step_rule {
            Some(StepRule::Fixed { eta }) | Some(StepRule::Diminishing { eta0: eta })
                if !(eta > 0.0 && eta.is_finite()) =>
            {
                Err(DesignError::InvalidConfig(format!("step length must be > 0, got {eta}")))
            }
            Some(StepRule::Backtracking { beta, c }) if !(beta > 0.0 && beta < 1.0 && c > 0.0 && c < 1.0) => {
                Err(DesignError::InvalidConfig("backtracking needs 0 < beta, c < 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignVariable {
    Gamma(f64),
    /// Per-edge weights in the edge order of the input graph.
    Weights(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    #[serde(flatten)]
    pub variable: DesignVariable,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// Objective value of every accepted iterate, starting point first.
    #[serde(skip)]
    pub history: Vec<f64>,
}

impl DesignResult {
    pub fn gamma(&self) -> Option<f64> {
        match self.variable {
            DesignVariable::Gamma(g) => Some(g),
            DesignVariable::Weights(_) => None,
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        match &self.variable {
            DesignVariable::Weights(w) => Some(w),
            DesignVariable::Gamma(_) => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("design result serializes")
    }
}

fn check_gamma(gamma: f64) -> Result<(), DesignError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(DesignError::InvalidGamma(gamma))
    }
}

/// `γ* = 2 / (λ_2 + λ_n)` with objective `Φ_cr(γ*) = (λ_n - λ_2) / (λ_n + λ_2)`.
pub fn optimal_gamma_steady(g: &WeightedGraph) -> Result<DesignResult, DesignError> {
    let spec = g.spectrum()?;
    let (l2, ln) = (spec.lambda2(), spec.lambda_max());
    let gamma = 2.0 / (l2 + ln);
    Ok(DesignResult {
        variable: DesignVariable::Gamma(gamma),
        objective: measures::phi_cr_spectral(&spec, gamma),
        iterations: 0,
        converged: true,
        kkt_residual: 0.0,
        history: Vec::new(),
    })
}

/// Modal form of `γ ↦ Φ_ss`: with `c_i = v_iᵀ C v_i` for the γ-free
/// covariance `C`, `Φ_ss(γ) = Σ_i s(γ) c_i / (γ λ_i (2 - γλ_i))` where
/// `s(γ) = γ` under the scaled convention and 1 otherwise.
struct ModalDispersion {
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    gamma_scaling: bool,
}

impl ModalDispersion {
    fn new(spec: &SpectralData, cov: &DMatrix<f64>, gamma_scaling: bool) -> Self {
        let weights = (1..spec.n())
            .map(|k| {
                let v = spec.vector(k);
                (v.transpose() * cov * v)[(0, 0)]
            })
            .collect();
        Self { lambdas: spec.nonzero().to_vec(), weights, gamma_scaling }
    }

    fn value(&self, gamma: f64) -> f64 {
        let s = if self.gamma_scaling { gamma } else { 1.0 };
        self.lambdas
            .iter()
            .zip(&self.weights)
            .map(|(&l, &c)| s * c / (gamma * l * (2.0 - gamma * l)))
            .sum()
    }

    fn derivative(&self, gamma: f64) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.weights)
            .map(|(&l, &c)| {
                if self.gamma_scaling {
                    c / (2.0 - gamma * l).powi(2)
                } else {
                    let u = gamma * l;
                    -c * l * (2.0 - 2.0 * u) / (u * (2.0 - u)).powi(2)
                }
            })
            .sum()
    }
}

/// Minimizes `Φ_ss` over the update cycle. Fails with
/// [`DesignError::NoInteriorOptimum`] when the minimizer sits on an end of the
/// stability interval (always the case under the γ-scaled convention).
pub fn optimal_gamma_nonsteady(
    g: &WeightedGraph,
    noise: &NoiseModel,
    cfg: &SolverConfig,
) -> Result<DesignResult, DesignError> {
    cfg.validate()?;
    let spec = g.spectrum()?;
    let cov = noise.base_covariance(g.n())?;
    let f = ModalDispersion::new(&spec, &cov, noise.gamma_scaling);

    let upper = 2.0 / spec.lambda_max();
    let edge = 1e-9 * upper;
    let (lo, hi) = (edge, upper - edge);
    // f is convex on the interval, so the end slopes decide interiority.
    if f.derivative(lo) >= 0.0 {
        return Err(DesignError::NoInteriorOptimum { gamma: lo, side: "lower" });
    }
    if f.derivative(hi) <= 0.0 {
        return Err(DesignError::NoInteriorOptimum { gamma: hi, side: "upper" });
    }
    let (mut a, mut b) = (lo, hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f.value(c), f.value(d));
    let mut iterations = 0;
    let mut history = Vec::new();
    let target = cfg.tol * upper;
    // Function values stop separating points once the bracket is ~sqrt(eps)
    // wide; the remaining digits come from the sign of the derivative.
    let coarse = target.max(1e-6 * upper);
    while iterations < cfg.max_iters && b - a > coarse {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f.value(d);
        }
        history.push(fc.min(fd));
    }
    while iterations < cfg.max_iters && b - a > target {
        iterations += 1;
        let m = 0.5 * (a + b);
        if f.derivative(m) > 0.0 {
            b = m;
        } else {
            a = m;
        }
        history.push(f.value(0.5 * (a + b)));
    }
    let gamma = 0.5 * (a + b);
    let width = b - a;
    Ok(DesignResult {
        variable: DesignVariable::Gamma(gamma),
        objective: f.value(gamma),
        iterations,
        converged: width <= target,
        kkt_residual: f.derivative(gamma).abs(),
        history,
    })
}

/// `(v[a] - v[b])²` for every edge: `∂λ/∂w_e` of a simple eigenvalue.
fn edge_sensitivities(g: &WeightedGraph, v: nalgebra::DVectorView<'_, f64>) -> Vec<f64> {
    g.edges().iter().map(|e| (v[e.i] - v[e.j]).powi(2)).collect()
}

struct FastestEval {
    objective: f64,
    /// Averaged subgradient over all active eigenpairs.
    subgradient: Vec<f64>,
    /// Averaged subgradients of the `1 - γλ` side and the `γλ - 1` side.
    low: Option<Vec<f64>>,
    high: Option<Vec<f64>>,
}

fn evaluate_fastest(g: &WeightedGraph, gamma: f64) -> Result<FastestEval, DesignError> {
    let spec = g.spectrum()?;
    let objective = measures::phi_cr_spectral(&spec, gamma);
    let m = g.num_edges();
    let (mut low, mut high) = (vec![0.0; m], vec![0.0; m]);
    let (mut n_low, mut n_high) = (0usize, 0usize);
    for k in 1..spec.n() {
        let term = 1.0 - gamma * spec.eigenvalues[k];
        if term.abs() < objective - TIE_TOL {
            continue;
        }
        let sens = edge_sensitivities(g, spec.vector(k));
        // |t| at t = 0 has subdifferential [-1, 1]: count both sides.
        if term >= -TIE_TOL {
            n_low += 1;
            low.iter_mut().zip(&sens).for_each(|(a, s)| *a -= gamma * s);
        }
        if term <= TIE_TOL {
            n_high += 1;
            high.iter_mut().zip(&sens).for_each(|(a, s)| *a += gamma * s);
        }
    }
    let total = (n_low + n_high) as f64;
    let subgradient = low.iter().zip(&high).map(|(l, h)| (l + h) / total).collect();
    let avg = |v: Vec<f64>, k: usize| (k > 0).then(|| v.into_iter().map(|x| x / k as f64).collect());
    Ok(FastestEval { objective, subgradient, low: avg(low, n_low), high: avg(high, n_high) })
}

/// Optimality residual for `w ≥ 0`: components on positive weights must
/// vanish, components on zero weights must be nonnegative.
fn projected_residual(w: &[f64], g: &[f64]) -> f64 {
    w.iter()
        .zip(g)
        .map(|(&wi, &gi)| if wi > 0.0 { gi * gi } else { gi.min(0.0).powi(2) })
        .sum::<f64>()
        .sqrt()
}

/// Smallest residual over convex combinations of the two branch subgradients.
fn fastest_kkt(w: &[f64], eval: &FastestEval) -> f64 {
    match (&eval.low, &eval.high) {
        (Some(lo), Some(hi)) => {
            let r = |alpha: f64| {
                let mix: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| alpha * l + (1.0 - alpha) * h).collect();
                projected_residual(w, &mix)
            };
            let (mut a, mut b) = (0.0f64, 1.0f64);
            let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..80 {
                let c = b - inv_phi * (b - a);
                let d = a + inv_phi * (b - a);
                if r(c) <= r(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            r(0.5 * (a + b)).min(r(0.0)).min(r(1.0))
        }
        (Some(only), None) | (None, Some(only)) => projected_residual(w, only),
        (None, None) => 0.0,
    }
}

/// Uniform weight making the unit-weight support optimal for `Φ_cr` among
/// uniform scalings: `2 / (γ (μ_2 + μ_n))` with `μ` the unit-weight spectrum.
pub fn best_uniform_weight(topology: &WeightedGraph, gamma: f64) -> Result<f64, DesignError> {
    check_gamma(gamma)?;
    let spec = topology.uniform(1.0)?.spectrum()?;
    Ok(2.0 / (gamma * (spec.lambda2() + spec.lambda_max())))
}

/// Fastest throttler on the edge support of `topology`, warm-started from the
/// best uniform weighting.
pub fn fastest_weights(topology: &WeightedGraph, gamma: f64, cfg: &SolverConfig) -> Result<DesignResult, DesignError> {
    let w0 = vec![best_uniform_weight(topology, gamma)?; topology.num_edges()];
    fastest_weights_from(topology, gamma, &w0, cfg)
}

pub fn fastest_weights_from(
    topology: &WeightedGraph,
    gamma: f64,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<DesignResult, DesignError> {
    check_gamma(gamma)?;
    cfg.validate()?;
    let mut g = topology.with_weights(start)?;
    let mut w = start.to_vec();
    let scale = best_uniform_weight(topology, gamma)?;
    let rule = cfg
        .step_rule
        .unwrap_or(StepRule::Diminishing { eta0: 0.1 * scale * (w.len() as f64).sqrt() });

    let mut eval = evaluate_fastest(&g, gamma)?;
    let mut best = (eval.objective, w.clone(), fastest_kkt(&w, &eval));
    let mut history = vec![eval.objective];
    let mut converged = best.2 <= cfg.tol;
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iters {
        iterations += 1;
        let norm = eval.subgradient.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        let dir: Vec<f64> = eval.subgradient.iter().map(|x| x / norm).collect();
        let project = |t: f64| -> Vec<f64> { w.iter().zip(&dir).map(|(wi, d)| (wi - t * d).max(0.0)).collect() };

        let candidate = match rule {
            StepRule::Fixed { eta } => try_weights(&g, project(eta))?,
            StepRule::Diminishing { eta0 } => try_weights(&g, project(eta0 / (iterations as f64).sqrt()))?,
            StepRule::Backtracking { beta, .. } => {
                // Nonsmooth objective: accept the first step that decreases it.
                let mut t = 0.5 * scale;
                let mut found = None;
                while t > 1e-14 * scale {
                    if let Some((gw, ww)) = try_weights(&g, project(t))? {
                        if measures::phi_cr_spectral(&gw.spectrum()?, gamma) < eval.objective {
                            found = Some((gw, ww));
                            break;
                        }
                    }
                    t *= beta;
                }
                match found {
                    Some(x) => Some(x),
                    None => try_weights(&g, project(scale / (iterations as f64).sqrt()))?,
                }
            }
        };
        let Some((gw, ww)) = candidate else {
            // Step disconnected the support; shrink it by keeping the iterate.
            continue;
        };
        g = gw;
        w = ww;
        eval = evaluate_fastest(&g, gamma)?;
        history.push(eval.objective);
        let kkt = fastest_kkt(&w, &eval);
        if eval.objective < best.0 || (eval.objective == best.0 && kkt < best.2) {
            best = (eval.objective, w.clone(), kkt);
        }
        converged = kkt <= cfg.tol;
    }

    Ok(DesignResult {
        variable: DesignVariable::Weights(best.1),
        objective: best.0,
        iterations,
        converged: best.2 <= cfg.tol,
        kkt_residual: best.2,
        history,
    })
}

// Weights -> graph, or None if the positive support disconnects.
fn try_weights(g: &WeightedGraph, w: Vec<f64>) -> Result<Option<(WeightedGraph, Vec<f64>)>, DesignError> {
    match g.with_weights(&w) {
        Ok(gw) => Ok(Some((gw, w))),
        Err(GraphError::Disconnected { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Analytic gradient of `Φ_ss` with respect to the edge weights:
/// `∂Φ_ss/∂w_e = -(1/2γ) tr[M† C M† (L_e - (γ/2)(L_e L + L L_e))]` with
/// `M = L - (γ/2)L²`.
pub fn phi_ss_weight_gradient(g: &WeightedGraph, gamma: f64, noise: &NoiseModel) -> Result<Vec<f64>, DesignError> {
    check_gamma(gamma)?;
    let spec = g.spectrum()?;
    let cov = noise.covariance(g.n(), gamma)?;
    let m_pinv = measures::shifted_pseudoinverse(&spec, gamma)?;
    Ok(gradient_from(g, gamma, &m_pinv, &cov))
}

fn gradient_from(g: &WeightedGraph, gamma: f64, m_pinv: &DMatrix<f64>, cov: &DMatrix<f64>) -> Vec<f64> {
    let lap = g.laplacian().into_matrix();
    let gm = m_pinv * cov * m_pinv;
    let h = &lap * &gm + &gm * &lap;
    // tr(X L_e) = X_aa + X_bb - X_ab - X_ba
    let edge_form = |x: &DMatrix<f64>, a: usize, b: usize| x[(a, a)] + x[(b, b)] - x[(a, b)] - x[(b, a)];
    g.edges()
        .iter()
        .map(|e| -(edge_form(&gm, e.i, e.j) - 0.5 * gamma * edge_form(&h, e.i, e.j)) / (2.0 * gamma))
        .collect()
}

/// `Φ_ss` at strictly stable weights, `None` otherwise.
fn robust_objective(
    g: &WeightedGraph,
    gamma: f64,
    cov: &DMatrix<f64>,
) -> Result<Option<(f64, SpectralData)>, DesignError> {
    let spec = g.spectrum()?;
    if spec.lambda2() <= crate::spectral::SINGULAR_TOL
        || measures::phi_cr_spectral(&spec, gamma) > 1.0 - STABILITY_MARGIN
    {
        return Ok(None);
    }
    match measures::phi_ss_with_covariance(&spec, gamma, cov) {
        measures::PhiSs::Finite(v) => Ok(Some((v, spec))),
        measures::PhiSs::Infinite => Ok(None),
    }
}

/// Most robust throttler on the edge support of `topology`, started from the
/// uniform weighting with `γ λ_n = 1`.
pub fn robust_weights(
    topology: &WeightedGraph,
    gamma: f64,
    noise: &NoiseModel,
    cfg: &SolverConfig,
) -> Result<DesignResult, DesignError> {
    check_gamma(gamma)?;
    let unit = topology.uniform(1.0)?.spectrum()?;
    let w0 = vec![1.0 / (gamma * unit.lambda_max()); topology.num_edges()];
    robust_weights_from(topology, gamma, noise, &w0, cfg)
}

pub fn robust_weights_from(
    topology: &WeightedGraph,
    gamma: f64,
    noise: &NoiseModel,
    start: &[f64],
    cfg: &SolverConfig,
) -> Result<DesignResult, DesignError> {
    check_gamma(gamma)?;
    cfg.validate()?;
    let cov = noise.covariance(topology.n(), gamma)?;
    let mut g = match topology.with_weights(start) {
        Ok(g) => g,
        Err(e) => return Err(DesignError::InfeasibleStart(e.to_string())),
    };
    let Some((mut f, mut spec)) = robust_objective(&g, gamma, &cov)? else {
        return Err(DesignError::InfeasibleStart(
            "starting weights are not strictly stable (phi_cr >= 1)".into(),
        ));
    };
    let rule = cfg.step_rule.unwrap_or(StepRule::Backtracking { beta: 0.5, c: 1e-4 });
    let mut w = start.to_vec();
    let mut history = vec![f];
    let mut grad = gradient_from(&g, gamma, &measures::shifted_pseudoinverse(&spec, gamma)?, &cov);
    let mut kkt = kkt_projected(&w, &grad);
    let mut iterations = 0;
    let mut t = w.iter().copied().fold(0.0, f64::max).max(1e-12)
        / grad.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);

    while kkt > cfg.tol && iterations < cfg.max_iters {
        iterations += 1;
        let mut step = match rule {
            StepRule::Fixed { eta } => eta,
            StepRule::Diminishing { eta0 } => eta0 / (iterations as f64).sqrt(),
            StepRule::Backtracking { .. } => t * 2.0,
        };
        let (beta, c) = match rule {
            StepRule::Backtracking { beta, c } => (beta, c),
            _ => (0.5, 0.0),
        };
        let mut accepted = None;
        while step > 1e-300 {
            let cand: Vec<f64> = w.iter().zip(&grad).map(|(wi, gi)| (wi - step * gi).max(0.0)).collect();
            if let Some((gc, wc)) = try_weights(&g, cand)? {
                if let Some((fc, sc)) = robust_objective(&gc, gamma, &cov)? {
                    let predicted: f64 = grad.iter().zip(&w).zip(&wc).map(|((gi, a), b)| gi * (a - b)).sum();
                    if fc <= f - c * predicted {
                        accepted = Some((gc, wc, fc, sc));
                        break;
                    }
                }
            }
            step *= beta;
        }
        let Some((gc, wc, fc, sc)) = accepted else {
            break;
        };
        t = step;
        g = gc;
        w = wc;
        f = fc;
        spec = sc;
        history.push(f);
        grad = gradient_from(&g, gamma, &measures::shifted_pseudoinverse(&spec, gamma)?, &cov);
        kkt = kkt_projected(&w, &grad);
    }

    Ok(DesignResult {
        variable: DesignVariable::Weights(w),
        objective: f,
        iterations,
        converged: kkt <= cfg.tol,
        kkt_residual: kkt,
        history,
    })
}

/// `‖w - P(w - ∇f)‖_∞` for the projection `P` onto `w ≥ 0`.
fn kkt_projected(w: &[f64], grad: &[f64]) -> f64 {
    w.iter()
        .zip(grad)
        .map(|(wi, gi)| (wi - (wi - gi).max(0.0)).abs())
        .fold(0.0, f64::max)
}
