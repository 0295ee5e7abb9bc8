//! Decoding genomes into staged DAG topologies.
//!
//! Each stage gets two implicit nodes: a default input node that receives the
//! previous stage's pooled output and feeds every active node without a
//! predecessor, and a default output node that sums every active node
//! without a successor. An ordinary node with no intra-stage edge is inactive
//! and attaches to neither default node. A stage whose code is all zero
//! collapses to a single convolution.
//!
//! Every bit pattern decodes to a valid acyclic graph.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::genome::{Genome, SearchSpace};

/// Version of the JSON network document produced by [`export_graph`].
pub const NETWORK_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("unknown export format {0:?} (expected dot or json)")]
    UnknownFormat(String),
}

/// One decoded stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageGraph {
    pub stage: usize,
    pub node_count: usize,
    /// `active[k - 1]` tells whether ordinary node `k` takes part.
    pub active: Vec<bool>,
    /// Intra-stage edges `(i, j)`, `i < j`, in canonical bit order.
    pub edges: Vec<(usize, usize)>,
    /// Active nodes fed by the default input node, ascending.
    pub input_attached: Vec<usize>,
    /// Active nodes feeding the default output node, ascending.
    pub output_attached: Vec<usize>,
    pub collapsed: bool,
}

impl StageGraph {
    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.node_count).filter(|&k| self.active[k - 1])
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn is_active(&self, node: usize) -> bool {
        node >= 1 && node <= self.node_count && self.active[node - 1]
    }

    pub fn predecessors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(_, j)| j == node)
            .map(|&(i, _)| i)
    }

    /// Convolutions performed by this stage: one when collapsed, otherwise
    /// every active node plus both default nodes.
    pub fn conv_count(&self) -> usize {
        if self.collapsed {
            1
        } else {
            self.active_count() + 2
        }
    }
}

/// Decodes 1-based stage `stage` of `genome`.
///
/// Panics if `stage` is not in `1..=S`.
pub fn decode_stage(genome: &Genome, stage: usize) -> StageGraph {
    let space = genome.space();
    let node_count = space.nodes_in_stage(stage);
    let bits = genome.stage_bits(stage);

    let mut edges = Vec::new();
    let mut offset = 0;
    for target in 2..=node_count {
        for source in 1..target {
            if bits[offset] {
                edges.push((source, target));
            }
            offset += 1;
        }
    }

    let mut active = vec![false; node_count];
    let mut has_pred = vec![false; node_count];
    let mut has_succ = vec![false; node_count];
    for &(i, j) in &edges {
        active[i - 1] = true;
        active[j - 1] = true;
        has_succ[i - 1] = true;
        has_pred[j - 1] = true;
    }
    let input_attached = (1..=node_count)
        .filter(|&k| active[k - 1] && !has_pred[k - 1])
        .collect();
    let output_attached = (1..=node_count)
        .filter(|&k| active[k - 1] && !has_succ[k - 1])
        .collect();

    StageGraph {
        stage,
        node_count,
        active,
        collapsed: edges.is_empty(),
        edges,
        input_attached,
        output_attached,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    DefaultInput,
    Ordinary,
    DefaultOutput,
    Pooling,
}

impl NodeRole {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::DefaultInput => "default-input",
            NodeRole::Ordinary => "ordinary",
            NodeRole::DefaultOutput => "default-output",
            NodeRole::Pooling => "pooling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Convolution,
    Pooling,
}

/// A node of the assembled network. Ids are dense and already in
/// topological order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub id: usize,
    pub role: NodeRole,
    /// 1-based stage; a pooling node carries the stage it closes.
    pub stage: usize,
    /// Node label inside the stage: 0 for the default input, `1..=K_s` for
    /// ordinary nodes, `K_s + 1` for the default output. Absent on pooling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub op: Operation,
    /// The node sums several inputs element-wise before its convolution.
    pub sum_join: bool,
}

/// The whole decoded network: stages chained by pooling nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    pub genome: Genome,
    pub stages: Vec<StageGraph>,
    pub nodes: Vec<NetworkNode>,
    /// Directed `(from, to)` node-id pairs, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl NetworkGraph {
    pub fn space(&self) -> &SearchSpace {
        self.genome.space()
    }

    /// Id of the first default input node.
    pub fn entry(&self) -> usize {
        0
    }

    /// Id of the final pooling node.
    pub fn exit(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn conv_node_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.op == Operation::Convolution)
            .count()
    }

    pub fn predecessors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(_, to)| to == node)
            .map(|&(from, _)| from)
    }

    pub fn successors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(from, _)| from == node)
            .map(|&(_, to)| to)
    }
}

/// Decodes every stage and chains them with pooling nodes.
pub fn decode_network(genome: &Genome) -> NetworkGraph {
    let space = genome.space();
    let mut stages = Vec::with_capacity(space.stage_count());
    let mut nodes: Vec<NetworkNode> = Vec::new();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut previous_pool: Option<usize> = None;

    let push = |nodes: &mut Vec<NetworkNode>, role, stage, index, op| {
        let id = nodes.len();
        nodes.push(NetworkNode {
            id,
            role,
            stage,
            index,
            op,
            sum_join: false,
        });
        id
    };

    for stage in 1..=space.stage_count() {
        let graph = decode_stage(genome, stage);
        let input = push(
            &mut nodes,
            NodeRole::DefaultInput,
            stage,
            Some(0),
            Operation::Convolution,
        );
        if let Some(pool) = previous_pool {
            edges.insert((pool, input));
        }

        let stage_exit = if graph.collapsed {
            input
        } else {
            let mut ids = vec![usize::MAX; graph.node_count + 1];
            for k in graph.active_nodes() {
                ids[k] = push(
                    &mut nodes,
                    NodeRole::Ordinary,
                    stage,
                    Some(k),
                    Operation::Convolution,
                );
            }
            let output = push(
                &mut nodes,
                NodeRole::DefaultOutput,
                stage,
                Some(graph.node_count + 1),
                Operation::Convolution,
            );
            for &k in &graph.input_attached {
                edges.insert((input, ids[k]));
            }
            for &(i, j) in &graph.edges {
                edges.insert((ids[i], ids[j]));
            }
            for &k in &graph.output_attached {
                edges.insert((ids[k], output));
            }
            output
        };

        let pool = push(&mut nodes, NodeRole::Pooling, stage, None, Operation::Pooling);
        edges.insert((stage_exit, pool));
        previous_pool = Some(pool);
        stages.push(graph);
    }

    let mut in_degree = vec![0usize; nodes.len()];
    for &(_, to) in &edges {
        in_degree[to] += 1;
    }
    for node in &mut nodes {
        node.sum_join = in_degree[node.id] > 1;
    }

    NetworkGraph {
        genome: genome.clone(),
        stages,
        nodes,
        edges: edges.into_iter().collect(),
    }
}

/// Convolution nodes in the decoded network.
pub fn conv_node_count(genome: &Genome) -> usize {
    (1..=genome.space().stage_count())
        .map(|s| decode_stage(genome, s).conv_count())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = DecodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            _ => Err(DecodeError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Dot => "dot",
            ExportFormat::Json => "json",
        })
    }
}

/// JSON network document, schema version 1:
///
/// ```text
/// {"schema_version":1,
///  "genome":"1-01|...",
///  "space":{"stages":[3,4,5]},
///  "nodes":[{"id":0,"role":"default-input","stage":1,"index":0,
///            "op":"convolution","sum_join":false}, ...],
///  "edges":[[0,1], ...]}
/// ```
///
/// Node ids are dense, in topological order, and identical for identical
/// genomes. Roles are `default-input`, `ordinary`, `default-output` and
/// `pooling`; a collapsed stage is a single `default-input` node wired
/// straight to its pooling node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub schema_version: u32,
    pub genome: String,
    pub space: SearchSpace,
    pub nodes: Vec<NetworkNode>,
    pub edges: Vec<[usize; 2]>,
}

impl NetworkDocument {
    pub fn from_graph(net: &NetworkGraph) -> Self {
        NetworkDocument {
            schema_version: NETWORK_SCHEMA_VERSION,
            genome: net.genome.to_string(),
            space: net.space().clone(),
            nodes: net.nodes.clone(),
            edges: net.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    /// Rebuilds the graph and checks it matches the recorded topology.
    pub fn to_graph(&self) -> Option<NetworkGraph> {
        let genome = Genome::parse(Arc::new(self.space.clone()), &self.genome).ok()?;
        let net = decode_network(&genome);
        (NetworkDocument::from_graph(&net) == *self).then_some(net)
    }
}

pub fn export_graph(net: &NetworkGraph, format: ExportFormat) -> String {
    match format {
        ExportFormat::Dot => export_dot(net),
        ExportFormat::Json => {
            serde_json::to_string(&NetworkDocument::from_graph(net)).expect("plain data serializes")
        }
    }
}

/// Same as [`export_graph`] but with the format given by name.
pub fn export_graph_named(net: &NetworkGraph, format: &str) -> Result<String, DecodeError> {
    Ok(export_graph(net, format.parse()?))
}

fn export_dot(net: &NetworkGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph network {\n");
    let _ = writeln!(out, "  label=\"{}\";", net.genome);
    out.push_str("  rankdir=TB;\n");
    for node in &net.nodes {
        let (label, shape) = match node.role {
            NodeRole::DefaultInput => (format!("s{} in", node.stage), "box"),
            NodeRole::Ordinary => (
                format!("s{} v{}", node.stage, node.index.unwrap_or_default()),
                "ellipse",
            ),
            NodeRole::DefaultOutput => (format!("s{} out", node.stage), "box"),
            NodeRole::Pooling => (format!("pool {}", node.stage), "invtrapezium"),
        };
        let sum = if node.sum_join { ", style=bold" } else { "" };
        let _ = writeln!(out, "  n{} [label=\"{label}\", shape={shape}{sum}];", node.id);
    }
    for &(from, to) in &net.edges {
        let _ = writeln!(out, "  n{from} -> n{to};");
    }
    out.push_str("}\n");
    out
}

/// Named single-stage fixtures for well-known block shapes:
/// `chain` (VGG-like, four nodes in sequence), `residual` (three nodes with
/// a skip from node 1 to node 3) and `dense` (four nodes, every pair
/// connected).
pub fn encode_reference_structures() -> Vec<(&'static str, Genome)> {
    let stage = |k: usize| Arc::new(SearchSpace::new(vec![k]).expect("k >= 1"));
    let chain = Genome::parse(stage(4), "1-01-001").expect("valid fixture");
    let residual = Genome::parse(stage(3), "1-11").expect("valid fixture");
    let dense = Genome::ones(stage(4));
    vec![("chain", chain), ("residual", residual), ("dense", dense)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(stages: &[usize]) -> Arc<SearchSpace> {
        Arc::new(SearchSpace::new(stages.to_vec()).unwrap())
    }

    fn parse(stages: &[usize], text: &str) -> Genome {
        Genome::parse(space(stages), text).unwrap()
    }

    #[test]
    fn stage_with_isolated_node() {
        let g = parse(&[3, 4, 5], "0-01|0-01-111|0-11-010-0111");
        let st = decode_stage(&g, 1);
        assert_eq!(st.edges, vec![(2, 3)]);
        assert_eq!(st.active, vec![false, true, true]);
        assert_eq!(st.input_attached, vec![2]);
        assert_eq!(st.output_attached, vec![3]);
        assert!(!st.collapsed);
        assert_eq!(st.conv_count(), 4);
    }

    #[test]
    fn all_zero_stage_collapses() {
        for k in 1..=6 {
            let g = Genome::zeros(space(&[k]));
            let st = decode_stage(&g, 1);
            assert!(st.collapsed);
            assert!(st.edges.is_empty());
            assert_eq!(st.active_count(), 0);
            assert_eq!(st.conv_count(), 1);
        }
    }

    #[test]
    fn all_one_stage_is_complete() {
        let g = Genome::ones(space(&[4]));
        let st = decode_stage(&g, 1);
        assert_eq!(st.edges.len(), 6);
        assert_eq!(st.input_attached, vec![1]);
        assert_eq!(st.output_attached, vec![4]);
    }

    #[test]
    fn all_zero_network_is_a_chain() {
        let g = Genome::zeros(space(&[3, 4, 5]));
        let net = decode_network(&g);
        assert_eq!(net.nodes.len(), 6);
        assert_eq!(net.conv_node_count(), 3);
        assert_eq!(conv_node_count(&g), 3);
        let chain: Vec<_> = (0..5).map(|i| (i, i + 1)).collect();
        assert_eq!(net.edges, chain);
        let pools = net.nodes.iter().filter(|n| n.role == NodeRole::Pooling).count();
        assert_eq!(pools, 3);
    }

    #[test]
    fn table_genome_hand_decode() {
        // "1-01|0-01-111|0-11-010-0111"
        // stage 1: edges (1,2),(2,3); all three active            -> 3 + 2
        // stage 2: edges (2,3),(1,4),(2,4),(3,4); all active      -> 4 + 2
        // stage 3: edges (1,3),(2,3),(2,4),(2,5),(3,5),(4,5)       -> 5 + 2
        let g = parse(&[3, 4, 5], "1-01|0-01-111|0-11-010-0111");
        let net = decode_network(&g);
        let per_stage: Vec<_> = net.stages.iter().map(|s| s.conv_count()).collect();
        assert_eq!(per_stage, vec![5, 6, 7]);
        assert_eq!(net.conv_node_count(), 18);
        assert_eq!(net.stages[1].input_attached, vec![1, 2]);
        assert_eq!(net.stages[2].input_attached, vec![1, 2]);
        assert_eq!(net.stages[2].output_attached, vec![5]);
        assert!(net.edges.iter().all(|&(a, b)| a < b));
    }

    #[test]
    fn all_one_network_counts() {
        let g = Genome::ones(space(&[3, 4, 5]));
        let net = decode_network(&g);
        for (stage, k) in net.stages.iter().zip([3, 4, 5]) {
            assert_eq!(stage.conv_count(), k + 2);
        }
        assert_eq!(conv_node_count(&g), 18);
    }

    #[test]
    fn single_pair_space() {
        let g = Genome::new(space(&[2]), vec![true]).unwrap();
        assert_eq!(conv_node_count(&g), 4);
    }

    #[test]
    fn sum_join_annotations() {
        // residual block: node 3 sums nodes 1 and 2
        let (_, residual) = &encode_reference_structures()[1];
        let net = decode_network(residual);
        let v3 = net
            .nodes
            .iter()
            .find(|n| n.role == NodeRole::Ordinary && n.index == Some(3))
            .unwrap();
        assert!(v3.sum_join);
        let preds: Vec<_> = net
            .predecessors(v3.id)
            .map(|p| net.nodes[p].index)
            .collect();
        assert_eq!(preds, vec![Some(1), Some(2)]);
    }

    #[test]
    fn reference_structures() {
        let fixtures = encode_reference_structures();
        let names: Vec<_> = fixtures.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, vec!["chain", "residual", "dense"]);

        let chain = decode_stage(&fixtures[0].1, 1);
        assert_eq!(chain.edges, vec![(1, 2), (2, 3), (3, 4)]);
        assert_eq!(chain.input_attached, vec![1]);
        assert_eq!(chain.output_attached, vec![4]);

        let residual = decode_stage(&fixtures[1].1, 1);
        assert_eq!(residual.edges, vec![(1, 2), (1, 3), (2, 3)]);

        let dense = decode_stage(&fixtures[2].1, 1);
        assert_eq!(dense.edges.len(), 6);
    }

    #[test]
    fn export_is_deterministic_and_versioned() {
        let g = parse(&[3, 4, 5], "1-01|0-01-100|0-11-101-0001");
        let net = decode_network(&g);
        let json = export_graph(&net, ExportFormat::Json);
        assert_eq!(json, export_graph(&decode_network(&g), ExportFormat::Json));
        let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["genome"], "1-01|0-01-100|0-11-101-0001");
        assert_eq!(doc["space"]["stages"], serde_json::json!([3, 4, 5]));
        let parsed: NetworkDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.to_graph().unwrap(), net);
    }

    #[test]
    fn dot_export_of_chain() {
        let g = Genome::zeros(space(&[3, 5]));
        let dot = export_graph(&decode_network(&g), ExportFormat::Dot);
        assert_eq!(
            dot,
            "digraph network {\n  label=\"0-00|0-00-000-0000\";\n  rankdir=TB;\n\
             \x20 n0 [label=\"s1 in\", shape=box];\n\
             \x20 n1 [label=\"pool 1\", shape=invtrapezium];\n\
             \x20 n2 [label=\"s2 in\", shape=box];\n\
             \x20 n3 [label=\"pool 2\", shape=invtrapezium];\n\
             \x20 n0 -> n1;\n  n1 -> n2;\n  n2 -> n3;\n}\n"
        );
    }

    #[test]
    fn unknown_format() {
        let net = decode_network(&Genome::zeros(space(&[2])));
        assert_eq!(
            export_graph_named(&net, "svg"),
            Err(DecodeError::UnknownFormat("svg".into()))
        );
        assert!(export_graph_named(&net, "DOT").is_ok());
    }

    #[test]
    fn smaller_stage_graphs_embed_with_an_isolated_node() {
        // any K-1 node structure is reproduced by K nodes with one node left
        // isolated, wherever that node sits
        for k in 2..=5usize {
            let small = space(&[k - 1]);
            let large = space(&[k]);
            for value in 0..(1u64 << small.genome_length()) {
                let g = Genome::from_index(small.clone(), value);
                let st = decode_stage(&g, 1);
                for isolated in 1..=k {
                    let relabel = |n: usize| if n >= isolated { n + 1 } else { n };
                    let mut bits = vec![false; large.genome_length()];
                    for &(i, j) in &st.edges {
                        let edge = crate::genome::EdgeIndex {
                            stage: 1,
                            source: relabel(i),
                            target: relabel(j),
                        };
                        bits[large.bit_index(edge).unwrap()] = true;
                    }
                    let embedded = decode_stage(&Genome::new(large.clone(), bits).unwrap(), 1);
                    assert!(!embedded.is_active(isolated));
                    assert_eq!(embedded.collapsed, st.collapsed);
                    assert_eq!(embedded.conv_count(), st.conv_count());
                    let mapped: Vec<_> = st.edges.iter().map(|&(i, j)| (relabel(i), relabel(j))).collect();
                    assert_eq!(embedded.edges, mapped);
                    let ins: Vec<_> = st.input_attached.iter().map(|&n| relabel(n)).collect();
                    let outs: Vec<_> = st.output_attached.iter().map(|&n| relabel(n)).collect();
                    assert_eq!(embedded.input_attached, ins);
                    assert_eq!(embedded.output_attached, outs);
                }
            }
        }
    }
}
