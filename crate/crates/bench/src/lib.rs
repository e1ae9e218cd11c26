//! Shared fixtures for the benchmarks.

use dst_core::dynamics::{DstScenario, LoadModel, MeasureCase, NodeAlgorithm};
use dst_core::graph::generators;
use dst_core::{SplitMix64, WeightedGraph};

/// Random connected graph with edge probability 0.3 and weights in [0.5, 2].
pub fn random_graph(n: usize, seed: u64) -> WeightedGraph {
    let mut rng = SplitMix64::new(seed);
    generators::random_connected(n, 0.3, 0.5, 2.0, &mut rng).expect("fixture graph")
}

/// Noisy Case I scenario on `g` at half the stability limit.
pub fn noisy_scenario(g: WeightedGraph, horizon: usize) -> DstScenario {
    let n = g.n();
    let gamma = 1.0 / g.spectrum().expect("spectrum").lambda_max();
    DstScenario {
        graph: g,
        gamma,
        case: MeasureCase::I,
        initial_limits: vec![100.0; n],
        load: LoadModel::RandomWalk { r0: vec![100.0; n], sigma: vec![1.0; n], clamp_min: 0.0, gamma_scaling: false },
        horizon,
        seed: 7,
        clients_per_node: vec![10; n],
        node_algorithm: NodeAlgorithm::Waterfill,
    }
}
