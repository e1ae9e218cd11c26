//! Laplacian spectra, pseudoinverses and effective resistance.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{Laplacian, WeightedGraph};
use crate::jacobi::{self, NoConvergence};

/// Eigenvalues at or below this are treated as zero when inverting.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("matrix is singular on the complement of 1: lambda_2 = {lambda2:e}")]
    Singular { lambda2: f64 },
    #[error("shifted eigenvalue mu_{index} = {mu:e} is not positive")]
    Unstable { index: usize, mu: f64 },
    #[error("effective resistance needs two distinct nodes, got {0} twice")]
    SameNode(usize),
    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: usize, n: usize },
}

impl From<NoConvergence> for SpectralError {
    fn from(e: NoConvergence) -> Self {
        SpectralError::NoConvergence { sweeps: e.sweeps, off_diagonal: e.off_diagonal }
    }
}

/// Ascending Laplacian eigenvalues `λ_1 = 0 ≤ λ_2 ≤ … ≤ λ_n` with
/// orthonormal eigenvectors as matrix columns.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Algebraic connectivity λ_2.
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.n() - 1]
    }

    /// The nonzero part `λ_2..λ_n`.
    pub fn nonzero(&self) -> &[f64] {
        &self.eigenvalues[1..]
    }

    /// Column `i` (0-based, paired with `eigenvalues[i]`).
    pub fn vector(&self, i: usize) -> nalgebra::DVectorView<'_, f64> {
        self.eigenvectors.column(i)
    }

    /// `Σ_{i≥2} v_i v_iᵀ / f(λ_i)`: the pseudoinverse of any matrix function
    /// `f(L)` that shares the null space `span{1}` with `L`. Fails when some
    /// `f(λ_i) ≤ 1e-10`.
    pub fn pseudoinverse_of<F: Fn(f64) -> f64>(&self, f: F) -> Result<DMatrix<f64>, SpectralError> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for k in 1..n {
            let mu = f(self.eigenvalues[k]);
            if !(mu > SINGULAR_TOL) {
                return Err(SpectralError::Unstable { index: k + 1, mu });
            }
            let v = self.vector(k);
            out.ger(1.0 / mu, &v, &v, 1.0);
        }
        Ok(out)
    }
}

pub fn spectrum(l: &Laplacian) -> Result<SpectralData, SpectralError> {
    let e = jacobi::symmetric_eigen(l.matrix())?;
    Ok(SpectralData { eigenvalues: e.values, eigenvectors: e.vectors })
}

/// `L† = (L + 11ᵀ/n)⁻¹ - 11ᵀ/n`, valid for connected-graph Laplacians.
pub fn laplacian_pseudoinverse(l: &Laplacian) -> Result<DMatrix<f64>, SpectralError> {
    let spec = spectrum(l)?;
    laplacian_pseudoinverse_checked(l, &spec)
}

pub(crate) fn laplacian_pseudoinverse_checked(
    l: &Laplacian,
    spec: &SpectralData,
) -> Result<DMatrix<f64>, SpectralError> {
    let lambda2 = spec.lambda2();
    if !(lambda2 > SINGULAR_TOL) {
        return Err(SpectralError::Singular { lambda2 });
    }
    let n = l.n();
    let j = DMatrix::from_element(n, n, 1.0 / n as f64);
    let shifted = l.matrix() + &j;
    let inv = shifted
        .cholesky()
        .ok_or(SpectralError::Singular { lambda2 })?
        .inverse();
    let mut out = inv - j;
    out = (&out + out.transpose()) * 0.5;
    Ok(out)
}

/// Pairwise effective resistances `r_ij = l†_ii + l†_jj - l†_ij - l†_ji`.
pub fn resistance_matrix(g: &WeightedGraph) -> Result<DMatrix<f64>, SpectralError> {
    let pinv = g.laplacian().pseudoinverse()?;
    let n = g.n();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            pinv[(i, i)] + pinv[(j, j)] - pinv[(i, j)] - pinv[(j, i)]
        }
    }))
}

pub fn effective_resistance(g: &WeightedGraph, i: usize, j: usize) -> Result<f64, SpectralError> {
    let n = g.n();
    for node in [i, j] {
        if node >= n {
            return Err(SpectralError::NodeOutOfRange { node, n });
        }
    }
    if i == j {
        return Err(SpectralError::SameNode(i));
    }
    Ok(resistance_matrix(g)?[(i, j)])
}

/// `Σ_{i>j} r_ij`, which equals `n Σ_{i≥2} 1/λ_i`.
pub fn total_effective_resistance(g: &WeightedGraph) -> Result<f64, SpectralError> {
    let r = resistance_matrix(g)?;
    let n = g.n();
    let total: f64 = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| r[(i, j)]).sum();
    if cfg!(debug_assertions) {
        let spec = g.spectrum()?;
        let via_spectrum = n as f64 * spec.nonzero().iter().map(|l| 1.0 / l).sum::<f64>();
        debug_assert!(
            (total - via_spectrum).abs() <= 1e-8 * via_spectrum.max(1.0),
            "pairwise {total} vs spectral {via_spectrum}"
        );
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spectra_of_small_graphs() {
        let p2 = path(2, 1.0).unwrap().spectrum().unwrap();
        assert!(close(p2.eigenvalues[0], 0.0, 1e-12) && close(p2.eigenvalues[1], 2.0, 1e-12));

        // λ(λ-1)(λ-3) for the unit path on three nodes.
        let p3 = path(3, 1.0).unwrap().spectrum().unwrap();
        for (got, want) in p3.eigenvalues.iter().zip([0.0, 1.0, 3.0]) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }

        let k5 = complete(5, 1.0).unwrap().spectrum().unwrap();
        assert!(close(k5.eigenvalues[0], 0.0, 1e-12));
        assert!(k5.nonzero().iter().all(|&l| close(l, 5.0, 1e-12)));
    }

    #[test]
    fn pseudoinverse_examples() {
        let p2 = path(2, 1.0).unwrap().laplacian();
        let pinv = p2.pseudoinverse().unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((pinv - want).amax() < 1e-15);

        // K5 unit: L† = (5I - 11ᵀ)/25.
        let l = complete(5, 1.0).unwrap().laplacian();
        let pinv = l.pseudoinverse().unwrap();
        let want = DMatrix::from_fn(5, 5, |i, j| if i == j { 4.0 / 25.0 } else { -1.0 / 25.0 });
        assert!((&pinv - want).amax() < 1e-14);
        assert!((l.matrix() * &pinv * l.matrix() - l.matrix()).amax() < 1e-12);
    }

    #[test]
    fn spectral_route_agrees_with_rank_one_shift() {
        let g = star(6, 0.7).unwrap();
        let spec = g.spectrum().unwrap();
        let a = spec.pseudoinverse_of(|l| l).unwrap();
        let b = g.laplacian().pseudoinverse().unwrap();
        assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn shifted_pseudoinverse_rejects_instability() {
        // P2 with gamma = 1: mu = 2 - 0.5 * 4 = 0.
        let spec = path(2, 1.0).unwrap().spectrum().unwrap();
        let err = spec.pseudoinverse_of(|l| l - 0.5 * l * l).unwrap_err();
        assert!(matches!(err, SpectralError::Unstable { index: 2, .. }));
    }

    #[test]
    fn resistance_examples() {
        let p3 = path(3, 1.0).unwrap();
        assert!(close(effective_resistance(&p3, 0, 2).unwrap(), 2.0, 1e-12));
        let tri = complete(3, 1.0).unwrap();
        assert!(close(effective_resistance(&tri, 0, 1).unwrap(), 2.0 / 3.0, 1e-12));
        let k5 = complete(5, 1.0).unwrap();
        assert!(close(effective_resistance(&k5, 1, 4).unwrap(), 0.4, 1e-12));
        assert_eq!(effective_resistance(&k5, 2, 2), Err(SpectralError::SameNode(2)));
    }

    #[test]
    fn total_resistance_examples() {
        assert!(close(total_effective_resistance(&path(2, 1.0).unwrap()).unwrap(), 1.0, 1e-12));
        assert!(close(total_effective_resistance(&complete(3, 1.0).unwrap()).unwrap(), 2.0, 1e-12));
        assert!(close(total_effective_resistance(&path(3, 1.0).unwrap()).unwrap(), 4.0, 1e-12));
    }
}
