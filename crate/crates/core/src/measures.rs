//! Network performance measures of a throttler.
//!
//! * `Φ_cr = max_{i≥2} |1 - γλ_i|`: asymptotic contraction factor of the
//!   steady-load dynamics `p(k+1) = (I - γL) p(k)`; consensus iff `Φ_cr < 1`.
//! * `Φ_ss = (1/2γ) tr[(L - (γ/2)L²)† Cov(v)]`: steady-state dispersion of the
//!   nodal measures under random-walk demand, with an independent oracle that
//!   solves the discrete Lyapunov equation by fixed-point iteration.
//!
//! Two covariance conventions are in use. With `gamma_scaling` on, the
//! per-step demand increments have covariance `γ · C` (the convention of the
//! i.i.d. spectral formula); with it off they have covariance `C` (the
//! convention under which the update-cycle optimization has an interior
//! optimum).

use nalgebra::DMatrix;
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::WeightedGraph;
use crate::spectral::{self, SpectralData, SpectralError};

/// Symmetry / PSD tolerance for user-supplied covariances.
pub const COV_TOL: f64 = 1e-10;
/// Stopping tolerance (max-norm of the update) of the Lyapunov iteration.
pub const LYAPUNOV_TOL: f64 = 1e-12;
/// Snap radius around the marginal value `Φ_cr = 1`.
pub const PHI_CR_SNAP: f64 = 1e-12;
pub const LYAPUNOV_MAX_ITERS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("update cycle must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("unstable: phi_cr = {phi_cr} is not below 1")]
    Unstable { phi_cr: f64 },
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("noise model has dimension {got}, graph has {expected} nodes")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Lyapunov iteration did not converge in {iterations} iterations")]
    LyapunovNotConverged { iterations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// Identical independent increments with standard deviation `sigma`.
    Iid { sigma: f64 },
    /// Independent increments with per-node standard deviations.
    Independent { sigmas: Vec<f64> },
    /// Arbitrary symmetric PSD covariance.
    General { cov: DMatrix<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Whether `Cov(v)` carries a factor `γ`.
    pub gamma_scaling: bool,
}

impl NoiseModel {
    pub fn iid(sigma: f64, gamma_scaling: bool) -> Result<Self, MeasureError> {
        check_sigma(sigma)?;
        Ok(Self { kind: NoiseKind::Iid { sigma }, gamma_scaling })
    }

    pub fn independent(sigmas: Vec<f64>, gamma_scaling: bool) -> Result<Self, MeasureError> {
        sigmas.iter().try_for_each(|&s| check_sigma(s))?;
        Ok(Self { kind: NoiseKind::Independent { sigmas }, gamma_scaling })
    }

    pub fn general(cov: DMatrix<f64>, gamma_scaling: bool) -> Result<Self, MeasureError> {
        if !cov.is_square() {
            return Err(MeasureError::InvalidNoise("covariance must be square".into()));
        }
        if cov.iter().any(|x| !x.is_finite()) {
            return Err(MeasureError::InvalidNoise("covariance has non-finite entries".into()));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > COV_TOL * scale {
            return Err(MeasureError::InvalidNoise("covariance is not symmetric".into()));
        }
        let min_eig = crate::jacobi::symmetric_eigen(&cov)
            .map_err(|e| MeasureError::Spectral(e.into()))?
            .values
            .first()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -COV_TOL * scale {
            return Err(MeasureError::InvalidNoise(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self { kind: NoiseKind::General { cov }, gamma_scaling })
    }

    /// Covariance from whitespace-separated rows; `#` starts a comment line.
    pub fn general_from_text(text: &str, gamma_scaling: bool) -> Result<Self, MeasureError> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MeasureError::InvalidNoise(format!("line {}: {e}", idx + 1)))?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(MeasureError::InvalidNoise("covariance file must hold a square matrix".into()));
        }
        Self::general(DMatrix::from_fn(n, n, |i, j| rows[i][j]), gamma_scaling)
    }

    /// Node count implied by the model, if any.
    pub fn dimension(&self) -> Option<usize> {
        match &self.kind {
            NoiseKind::Iid { .. } => None,
            NoiseKind::Independent { sigmas } => Some(sigmas.len()),
            NoiseKind::General { cov } => Some(cov.nrows()),
        }
    }

    /// The γ-free covariance `C`.
    pub fn base_covariance(&self, n: usize) -> Result<DMatrix<f64>, MeasureError> {
        if let Some(got) = self.dimension() {
            if got != n {
                return Err(MeasureError::DimensionMismatch { expected: n, got });
            }
        }
        Ok(match &self.kind {
            NoiseKind::Iid { sigma } => DMatrix::identity(n, n) * (sigma * sigma),
            NoiseKind::Independent { sigmas } => DMatrix::from_diagonal(
                &nalgebra::DVector::from_iterator(n, sigmas.iter().map(|s| s * s)),
            ),
            NoiseKind::General { cov } => cov.clone(),
        })
    }

    /// `Cov(v)` at update cycle `gamma`, honoring the scaling convention.
    pub fn covariance(&self, n: usize, gamma: f64) -> Result<DMatrix<f64>, MeasureError> {
        let c = self.base_covariance(n)?;
        Ok(if self.gamma_scaling { c * gamma } else { c })
    }

    /// Same model with the covariance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let root = factor.sqrt();
        let kind = match &self.kind {
            NoiseKind::Iid { sigma } => NoiseKind::Iid { sigma: sigma * root },
            NoiseKind::Independent { sigmas } => {
                NoiseKind::Independent { sigmas: sigmas.iter().map(|s| s * root).collect() }
            }
            NoiseKind::General { cov } => NoiseKind::General { cov: cov * factor },
        };
        Self { kind, gamma_scaling: self.gamma_scaling }
    }
}

fn check_sigma(s: f64) -> Result<(), MeasureError> {
    if s >= 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(MeasureError::InvalidNoise(format!("standard deviation {s} must be finite and >= 0")))
    }
}

fn check_gamma(gamma: f64) -> Result<(), MeasureError> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(MeasureError::InvalidGamma(gamma))
    }
}

/// Steady-state dispersion: finite, or infinite outside the stability window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiSs {
    Finite(f64),
    Infinite,
}

impl PhiSs {
    pub fn is_finite(&self) -> bool {
        matches!(self, PhiSs::Finite(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            PhiSs::Finite(v) => Some(v),
            PhiSs::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the infinite case.
    pub fn as_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl std::fmt::Display for PhiSs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhiSs::Finite(v) => write!(f, "{v}"),
            PhiSs::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for PhiSs {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PhiSs::Finite(v) => s.serialize_f64(*v),
            PhiSs::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PhiSs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct PhiVisitor;
        impl Visitor<'_> for PhiVisitor {
            type Value = PhiSs;
            fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<PhiSs, E> {
                Ok(PhiSs::Finite(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<PhiSs, E> {
                Ok(PhiSs::Finite(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<PhiSs, E> {
                Ok(PhiSs::Finite(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<PhiSs, E> {
                if v == "inf" {
                    Ok(PhiSs::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(PhiVisitor)
    }
}

/// `max_{i≥2} |1 - γλ_i|` from a precomputed spectrum.
///
/// Values within `PHI_CR_SNAP` of 1 are reported as exactly 1: eigenvalues
/// carry rounding error of a few ulps, and the marginal case must not flip
/// to convergent by accident.
pub fn phi_cr_spectral(spec: &SpectralData, gamma: f64) -> f64 {
    let phi = spec.nonzero().iter().map(|&l| (1.0 - gamma * l).abs()).fold(0.0, f64::max);
    if (phi - 1.0).abs() <= PHI_CR_SNAP {
        1.0
    } else {
        phi
    }
}

pub fn phi_cr(g: &WeightedGraph, gamma: f64) -> Result<f64, MeasureError> {
    check_gamma(gamma)?;
    Ok(phi_cr_spectral(&g.spectrum()?, gamma))
}

/// Consensus criterion `max{1 - γλ_2, γλ_n - 1} < 1`.
pub fn is_convergent(g: &WeightedGraph, gamma: f64) -> Result<bool, MeasureError> {
    Ok(phi_cr(g, gamma)? < 1.0)
}

/// `λ_i - (γ/2)λ_i²`, the spectrum of `L - (γ/2)L²`.
#[inline]
pub(crate) fn shifted(l: f64, gamma: f64) -> f64 {
    l - 0.5 * gamma * l * l
}

fn in_stability_window(spec: &SpectralData, gamma: f64) -> bool {
    phi_cr_spectral(spec, gamma) < 1.0
        && spec.nonzero().iter().all(|&l| l > 0.0 && shifted(l, gamma) > spectral::SINGULAR_TOL)
}

/// `(L - (γ/2)L²)†` computed spectrally.
pub fn shifted_pseudoinverse(spec: &SpectralData, gamma: f64) -> Result<DMatrix<f64>, MeasureError> {
    if !in_stability_window(spec, gamma) {
        return Err(MeasureError::Unstable { phi_cr: phi_cr_spectral(spec, gamma) });
    }
    Ok(spec.pseudoinverse_of(|l| shifted(l, gamma))?)
}

/// Closed form `(1/2γ) tr[(L - (γ/2)L²)† cov]` for an explicit covariance.
pub fn phi_ss_with_covariance(spec: &SpectralData, gamma: f64, cov: &DMatrix<f64>) -> PhiSs {
    if !in_stability_window(spec, gamma) {
        return PhiSs::Infinite;
    }
    // tr(M† C) = Σ_{i≥2} v_iᵀ C v_i / μ_i
    let total: f64 = (1..spec.n())
        .map(|k| {
            let v = spec.vector(k);
            (v.transpose() * cov * v)[(0, 0)] / shifted(spec.eigenvalues[k], gamma)
        })
        .sum();
    PhiSs::Finite(total / (2.0 * gamma))
}

pub fn phi_ss_closed(g: &WeightedGraph, gamma: f64, noise: &NoiseModel) -> Result<PhiSs, MeasureError> {
    check_gamma(gamma)?;
    let cov = noise.covariance(g.n(), gamma)?;
    Ok(phi_ss_with_covariance(&g.spectrum()?, gamma, &cov))
}

/// Expected total mismatch loss of a one-shot normally distributed demand
/// offset; numerically identical to [`phi_ss_closed`].
pub fn total_mismatch_loss(g: &WeightedGraph, gamma: f64, noise: &NoiseModel) -> Result<PhiSs, MeasureError> {
    phi_ss_closed(g, gamma, noise)
}

/// `Σ_{i≥2} σ² / (λ_i (2 - γλ_i))`, the i.i.d. formula under the γ-scaled
/// convention `r_i(k+1) - r_i(k) ~ N(0, γσ²)`.
pub fn phi_ss_iid(g: &WeightedGraph, gamma: f64, sigma: f64) -> Result<PhiSs, MeasureError> {
    check_gamma(gamma)?;
    check_sigma(sigma)?;
    let spec = g.spectrum()?;
    if !in_stability_window(&spec, gamma) {
        return Ok(PhiSs::Infinite);
    }
    Ok(PhiSs::Finite(spec.nonzero().iter().map(|&l| sigma * sigma / (l * (2.0 - gamma * l))).sum()))
}

/// Solution `Q` of `(I - γL) Q (I - γL)ᵀ - Q + (I - 11ᵀ/n) = 0`, obtained by
/// iterating `Q ← (I-γL) Q (I-γL)ᵀ + (I - 11ᵀ/n)` from zero and projecting
/// onto `1⊥` after every step. Uses no eigen-decomposition.
pub fn lyapunov_gramian(g: &WeightedGraph, gamma: f64) -> Result<DMatrix<f64>, MeasureError> {
    check_gamma(gamma)?;
    let phi = phi_cr(g, gamma)?;
    if phi >= 1.0 {
        return Err(MeasureError::Unstable { phi_cr: phi });
    }
    let n = g.n();
    let a = DMatrix::identity(n, n) - g.laplacian().into_matrix() * gamma;
    let proj = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let mut q = DMatrix::zeros(n, n);
    for _ in 0..LYAPUNOV_MAX_ITERS {
        let next = &a * &q * a.transpose() + &proj;
        let next = &proj * next * &proj;
        let delta = (&next - &q).amax();
        q = next;
        if delta <= LYAPUNOV_TOL {
            return Ok((&q + q.transpose()) * 0.5);
        }
    }
    Err(MeasureError::LyapunovNotConverged { iterations: LYAPUNOV_MAX_ITERS })
}

/// `Φ_ss = tr[Q Cov(v)]` with `Q` from [`lyapunov_gramian`].
pub fn phi_ss_lyapunov_oracle(g: &WeightedGraph, gamma: f64, noise: &NoiseModel) -> Result<f64, MeasureError> {
    let cov = noise.covariance(g.n(), gamma)?;
    let q = lyapunov_gramian(g, gamma)?;
    Ok((q * cov).trace())
}

/// Diagonal entries `c†_ii` of `(L - (γ/2)L²)†`: the weight of server `i`'s
/// demand variance in the overall dispersion.
pub fn centrality(g: &WeightedGraph, gamma: f64) -> Result<Vec<f64>, MeasureError> {
    check_gamma(gamma)?;
    let m = shifted_pseudoinverse(&g.spectrum()?, gamma)?;
    Ok(m.diagonal().iter().copied().collect())
}

/// Dispersion from the centrality decomposition for independent noise:
/// `(1/2) Σ c†_ii σ_i²` under the γ-scaled convention, `(1/2γ) Σ c†_ii σ_i²`
/// otherwise.
pub fn phi_ss_from_centrality(centrality: &[f64], sigmas: &[f64], gamma: f64, gamma_scaling: bool) -> f64 {
    let s: f64 = centrality.iter().zip(sigmas).map(|(c, s)| c * s * s).sum();
    if gamma_scaling {
        0.5 * s
    } else {
        0.5 * s / gamma
    }
}

/// Small-γ limit `(σ²/2n) Σ_{i>j} r_ij` of the γ-scaled i.i.d. dispersion.
pub fn resistance_limit(g: &WeightedGraph, sigma: f64) -> Result<f64, MeasureError> {
    check_sigma(sigma)?;
    let total = spectral::total_effective_resistance(g)?;
    Ok(sigma * sigma * total / (2.0 * g.n() as f64))
}

/// Small-γ limit `(1/2) tr(L† C)` of the γ-scaled dispersion for a general
/// noise model; reduces to [`resistance_limit`] for i.i.d. noise.
pub fn resistance_limit_for(g: &WeightedGraph, noise: &NoiseModel) -> Result<f64, MeasureError> {
    let c = noise.base_covariance(g.n())?;
    let pinv = g.laplacian().pseudoinverse()?;
    Ok(0.5 * (pinv * c).trace())
}

/// Everything `analyze` reports for one graph and update cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub phi_cr: f64,
    pub phi_ss: PhiSs,
    pub stable: bool,
    /// Empty when the network is unstable.
    pub centrality: Vec<f64>,
    pub resistance_limit: f64,
}

impl MeasureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

pub fn analyze(g: &WeightedGraph, gamma: f64, noise: &NoiseModel) -> Result<MeasureReport, MeasureError> {
    check_gamma(gamma)?;
    let spec = g.spectrum()?;
    let phi_cr = phi_cr_spectral(&spec, gamma);
    let cov = noise.covariance(g.n(), gamma)?;
    let phi_ss = phi_ss_with_covariance(&spec, gamma, &cov);
    let stable = phi_cr < 1.0;
    let centrality = match shifted_pseudoinverse(&spec, gamma) {
        Ok(m) if stable => m.diagonal().iter().copied().collect(),
        _ => Vec::new(),
    };
    Ok(MeasureReport { phi_cr, phi_ss, stable, centrality, resistance_limit: resistance_limit_for(g, noise)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_text_parsing() {
        let m = NoiseModel::general_from_text("# cov\n2 1\n1 2\n", false).unwrap();
        assert_eq!(m.dimension(), Some(2));
        assert!(NoiseModel::general_from_text("1 2\n3\n", false).is_err());
        assert!(NoiseModel::general_from_text("1 2\n2 1\n", false).is_err());
    }
    use crate::graph::generators::*;

    fn iid(sigma: f64, scaled: bool) -> NoiseModel {
        NoiseModel::iid(sigma, scaled).unwrap()
    }

    #[test]
    fn phi_cr_examples() {
        assert!(phi_cr(&complete(5, 0.2).unwrap(), 1.0).unwrap() < 1e-12);
        assert!(phi_cr(&path(2, 1.0).unwrap(), 0.5).unwrap() < 1e-12);
        assert!((phi_cr(&path(3, 1.0).unwrap(), 0.1).unwrap() - 0.9).abs() < 1e-12);
        assert!(matches!(phi_cr(&path(2, 1.0).unwrap(), 0.0), Err(MeasureError::InvalidGamma(_))));
    }

    #[test]
    fn convergence_criterion_examples() {
        let p2 = path(2, 1.0).unwrap();
        assert!(is_convergent(&p2, 0.5).unwrap());
        assert!(!is_convergent(&p2, 1.0).unwrap());
        assert!(!is_convergent(&path(3, 1.0).unwrap(), 0.7).unwrap());
    }

    #[test]
    fn phi_ss_examples() {
        let p2 = path(2, 1.0).unwrap();
        assert!((phi_ss_closed(&p2, 0.5, &iid(1.0, true)).unwrap().as_f64() - 0.5).abs() < 1e-12);
        assert_eq!(phi_ss_closed(&path(3, 1.0).unwrap(), 0.7, &iid(1.0, true)).unwrap(), PhiSs::Infinite);
        assert!((phi_ss_iid(&p2, 0.5, 1.0).unwrap().as_f64() - 0.5).abs() < 1e-12);
        let k5 = complete(5, 1.0).unwrap();
        assert!((phi_ss_iid(&k5, 0.1, 1.0).unwrap().as_f64() - 4.0 / 7.5).abs() < 1e-12);
        assert_eq!(phi_ss_iid(&p2, 1.0, 1.0).unwrap(), PhiSs::Infinite);
        assert_eq!(total_mismatch_loss(&p2, 0.5, &iid(1.0, true)).unwrap(), phi_ss_closed(&p2, 0.5, &iid(1.0, true)).unwrap());
    }

    #[test]
    fn lyapunov_oracle_on_p2() {
        let p2 = path(2, 1.0).unwrap();
        let cov = NoiseModel::general(DMatrix::identity(2, 2) * 0.5, false).unwrap();
        let v = phi_ss_lyapunov_oracle(&p2, 0.5, &cov).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        let q = lyapunov_gramian(&star(5, 1.0).unwrap(), 0.1).unwrap();
        let ones = nalgebra::DVector::from_element(5, 1.0);
        assert!((q * ones).amax() < 1e-9);
        assert!(matches!(
            phi_ss_lyapunov_oracle(&p2, 1.0, &cov),
            Err(MeasureError::Unstable { .. })
        ));
    }

    #[test]
    fn centrality_examples() {
        let c = centrality(&path(2, 1.0).unwrap(), 0.5).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);

        let c = centrality(&cycle(6, 1.0).unwrap(), 0.2).unwrap();
        assert!(c.iter().all(|x| (x - c[0]).abs() < 1e-12));

        let c = centrality(&star(5, 1.0).unwrap(), 0.1).unwrap();
        assert!(c.iter().all(|&x| x > 0.0));
        assert!(c[1..].iter().all(|&leaf| c[0] < leaf), "{c:?}");
        assert!(matches!(centrality(&path(2, 1.0).unwrap(), 1.0), Err(MeasureError::Unstable { .. })));
    }

    #[test]
    fn centrality_decomposes_independent_noise() {
        let g = star(5, 0.8).unwrap();
        let sigmas = vec![0.5, 1.0, 1.5, 2.0, 0.1];
        for scaled in [true, false] {
            let c = centrality(&g, 0.3).unwrap();
            let noise = NoiseModel::independent(sigmas.clone(), scaled).unwrap();
            let closed = phi_ss_closed(&g, 0.3, &noise).unwrap().as_f64();
            let decomposed = phi_ss_from_centrality(&c, &sigmas, 0.3, scaled);
            assert!((closed - decomposed).abs() <= 1e-10 * closed.max(1.0));
        }
    }

    #[test]
    fn resistance_limit_examples() {
        assert!((resistance_limit(&path(2, 1.0).unwrap(), 1.0).unwrap() - 0.25).abs() < 1e-12);
        assert!((resistance_limit(&complete(3, 1.0).unwrap(), 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(resistance_limit(&complete(3, 1.0).unwrap(), 0.0).unwrap(), 0.0);
        let g = star(6, 1.3).unwrap();
        let a = resistance_limit(&g, 0.7).unwrap();
        let b = resistance_limit_for(&g, &iid(0.7, true)).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::iid(-1.0, true).is_err());
        let not_psd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(NoiseModel::general(not_psd, true).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(NoiseModel::general(asym, true).is_err());
        let ind = NoiseModel::independent(vec![1.0; 3], true).unwrap();
        assert!(matches!(
            phi_ss_closed(&path(2, 1.0).unwrap(), 0.5, &ind),
            Err(MeasureError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn report_serializes_infinite_as_string() {
        let r = analyze(&path(2, 1.0).unwrap(), 1.0, &iid(1.0, true)).unwrap();
        assert!(!r.stable);
        let json = r.to_json();
        assert!(json.contains("\"phi_ss\":\"inf\""), "{json}");
        let back: MeasureReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);

        let r = analyze(&complete(5, 0.2).unwrap(), 1.0, &iid(1.0, true)).unwrap();
        assert!(r.stable && r.phi_cr < 1e-12 && r.centrality.len() == 5);
    }
}
