//! Analysis, optimal design and simulation of distributed system throttlers.
//!
//! A distributed system throttler (DST) is a network of rate-limiting servers.
//! Server `i` holds a request limit `x_i(k)` and a nodal performance measure
//! `p_i(k)`, and every update cycle moves its limit by
//! `γ Σ_j w_ij (p_i(k) - p_j(k))` over a weighted communication graph. The sum
//! of limits is conserved, so the network enforces a global limit without a
//! central coordinator.
//!
//! Modules:
//!
//! * [`graph`], [`spectral`], [`jacobi`]: weighted graphs, Laplacians,
//!   spectra, pseudoinverses and effective resistance.
//! * [`measures`]: convergence factor `Φ_cr`, steady-state dispersion `Φ_ss`
//!   and per-server centrality.
//! * [`design`]: optimal update cycle and optimal link weights.
//! * [`dynamics`]: discrete-time simulation for the four nodal measures.
//! * [`throttle`]: per-server client limit assignment.

// `!(x > tol)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dynamics;
pub mod graph;
pub mod jacobi;
pub mod measures;
pub mod numfmt;
pub mod rng;
pub mod spectral;
pub mod throttle;

pub use design::{DesignError, DesignResult, DesignVariable, SolverConfig, StepRule};
pub use dynamics::{
    DstScenario, LoadModel, MeasureCase, NodeAlgorithm, SimError, Simulator, Trajectory,
};
pub use graph::{Edge, GraphError, Laplacian, WeightPolicy, WeightedGraph};
pub use measures::{MeasureError, MeasureReport, NoiseKind, NoiseModel, PhiSs};
pub use rng::SplitMix64;
pub use spectral::{SpectralData, SpectralError};
pub use throttle::{Allocation, ClientDemands};
