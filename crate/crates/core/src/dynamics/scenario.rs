//! Scenario file format.
//!
//! JSON object with the fields of [`DstScenario`]; the graph is either inline
//! (`{"n": 3, "edges": [[0, 1, 1.0], [1, 2, 1.0]]}`) or a path to a graph
//! text file (`{"path": "graph.txt"}`), resolved against the scenario's
//! directory. `clients_per_node` may be one count for all nodes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DstScenario, LoadModel, MeasureCase, NodeAlgorithm, SimError};
use crate::graph::WeightedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Inline { n: usize, edges: Vec<(usize, usize, f64)> },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClientCounts {
    Same(usize),
    PerNode(Vec<usize>),
}

impl Default for ClientCounts {
    fn default() -> Self {
        ClientCounts::Same(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub graph: GraphSpec,
    pub gamma: f64,
    pub case: MeasureCase,
    pub initial_limits: Vec<f64>,
    pub load: LoadModel,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub clients_per_node: ClientCounts,
    #[serde(default)]
    pub node_algorithm: NodeAlgorithm,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))
    }

    /// Loads the graph (relative paths against `base_dir`) and validates.
    pub fn resolve(self, base_dir: Option<&Path>) -> Result<DstScenario, SimError> {
        let graph = match self.graph {
            GraphSpec::Inline { n, edges } => WeightedGraph::new(n, edges)?,
            GraphSpec::File { path } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(&path),
                    _ => path,
                };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| SimError::InvalidScenario(format!("{}: {e}", full.display())))?;
                WeightedGraph::parse(&text)?
            }
        };
        let n = graph.n();
        let clients_per_node = match self.clients_per_node {
            ClientCounts::Same(c) => vec![c; n],
            ClientCounts::PerNode(v) => v,
        };
        let scenario = DstScenario {
            graph,
            gamma: self.gamma,
            case: self.case,
            initial_limits: self.initial_limits,
            load: self.load,
            horizon: self.horizon,
            seed: self.seed,
            clients_per_node,
            node_algorithm: self.node_algorithm,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

impl DstScenario {
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, SimError> {
        ScenarioFile::parse(text)?.resolve(base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidScenario(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    /// Self-contained file form with the graph inlined.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            graph: GraphSpec::Inline {
                n: self.graph.n(),
                edges: self.graph.edges().iter().map(|e| (e.i, e.j, e.weight)).collect(),
            },
            gamma: self.gamma,
            case: self.case,
            initial_limits: self.initial_limits.clone(),
            load: self.load.clone(),
            horizon: self.horizon,
            seed: self.seed,
            clients_per_node: ClientCounts::PerNode(self.clients_per_node.clone()),
            node_algorithm: self.node_algorithm,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("scenario serializes")
    }
}
