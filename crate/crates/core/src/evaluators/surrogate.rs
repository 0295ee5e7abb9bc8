//! Deterministic structural stand-in for trained accuracy.
//!
//! The score combines four features of the decoded network:
//!
//! * active node fraction: active ordinary nodes over `Σ K_s`;
//! * path richness: `ln(1 + P) / ln(1 + P_max)` where `P` is the number of
//!   distinct entry-to-exit paths and `P_max` the count for the all-ones
//!   genome of the same space;
//! * depth: convolutions on the longest entry-to-exit path over `Σ (K_s + 2)`;
//! * edge fraction: set bits over `L`, entered with a negative weight.
//!
//! The weighted sum `x` lies in `[lo, hi] = [-w_edges, w_nodes + w_paths +
//! w_depth]` and is mapped to `[0, 1]` by `(σ(x) − σ(lo)) / (σ(hi) − σ(lo))`
//! with `σ` the logistic function.

use serde::{Deserialize, Serialize};

use super::{CostHint, EvalError, Evaluator, EvaluatorInfo};
use crate::decoder::{decode_stage, StageGraph};
use crate::genome::Genome;
use crate::scalar::Fitness;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateWeights<F> {
    pub w_nodes: F,
    pub w_paths: F,
    pub w_depth: F,
    pub w_edges: F,
}

impl<F: Fitness> Default for SurrogateWeights<F> {
    fn default() -> Self {
        SurrogateWeights {
            w_nodes: F::one(),
            w_paths: F::one(),
            w_depth: F::one(),
            w_edges: F::from_f64_lossy(1.5),
        }
    }
}

impl<F: Fitness> SurrogateWeights<F> {
    pub fn validate(&self) -> Result<(), String> {
        for (name, w) in [
            ("w_nodes", self.w_nodes),
            ("w_paths", self.w_paths),
            ("w_depth", self.w_depth),
            ("w_edges", self.w_edges),
        ] {
            if !w.is_finite() || w < F::zero() {
                return Err(format!("{name} must be finite and non-negative, got {w}"));
            }
        }
        Ok(())
    }

    /// Bounds `(lo, hi)` of the raw weighted sum.
    pub fn raw_bounds(&self) -> (F, F) {
        (-self.w_edges, self.w_nodes + self.w_paths + self.w_depth)
    }
}

/// Raw features of one genome, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateFeatures<F> {
    pub active_fraction: F,
    pub path_richness: F,
    pub depth_fraction: F,
    pub edge_fraction: F,
    pub path_count: F,
}

fn logistic<F: Fitness>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// Paths from the default input to the default output, and convolutions on
/// the longest such path.
fn stage_paths_and_depth<F: Fitness>(stage: &StageGraph) -> (F, usize) {
    if stage.collapsed {
        return (F::one(), 1);
    }
    let k = stage.node_count;
    let mut paths = vec![F::zero(); k + 1];
    let mut longest = vec![0usize; k + 1];
    // edges only point to higher labels, so ascending order is topological
    for node in stage.active_nodes() {
        let mut count = if stage.input_attached.contains(&node) {
            F::one()
        } else {
            F::zero()
        };
        let mut depth = 0;
        for pred in stage.predecessors(node) {
            count = count + paths[pred];
            depth = depth.max(longest[pred]);
        }
        paths[node] = count;
        longest[node] = depth + 1;
    }
    let total = stage
        .output_attached
        .iter()
        .fold(F::zero(), |acc, &n| acc + paths[n]);
    let deepest = stage
        .output_attached
        .iter()
        .map(|&n| longest[n])
        .max()
        .unwrap_or(0);
    (total, deepest + 2)
}

pub fn surrogate_features<F: Fitness>(genome: &Genome) -> SurrogateFeatures<F> {
    let space = genome.space();
    let mut active = 0usize;
    let mut paths = F::one();
    let mut max_paths = F::one();
    let mut depth = 0usize;
    for stage in 1..=space.stage_count() {
        let graph = decode_stage(genome, stage);
        active += graph.active_count();
        let (p, d) = stage_paths_and_depth::<F>(&graph);
        paths = paths * p;
        depth += d;
        let k = graph.node_count;
        if k >= 2 {
            // complete DAG on k nodes: 2^(k-2) source-to-sink paths
            max_paths = max_paths * F::from_f64_lossy(2f64.powi(k as i32 - 2));
        }
    }
    let total_nodes: usize = space.nodes_per_stage().iter().sum();
    let max_depth: usize = space.nodes_per_stage().iter().map(|k| k + 2).sum();
    let length = genome.len();
    let edge_fraction = if length == 0 {
        F::zero()
    } else {
        F::from_usize_lossy(genome.count_ones()) / F::from_usize_lossy(length)
    };
    SurrogateFeatures {
        active_fraction: F::from_usize_lossy(active) / F::from_usize_lossy(total_nodes),
        path_richness: paths.ln_1p() / max_paths.ln_1p(),
        depth_fraction: F::from_usize_lossy(depth) / F::from_usize_lossy(max_depth),
        edge_fraction,
        path_count: paths,
    }
}

/// Surrogate score of `genome` in `[0, 1]`.
pub fn surrogate_fitness<F: Fitness>(genome: &Genome, weights: &SurrogateWeights<F>) -> F {
    let f = surrogate_features::<F>(genome);
    let raw = weights.w_nodes * f.active_fraction + weights.w_paths * f.path_richness
        + weights.w_depth * f.depth_fraction
        - weights.w_edges * f.edge_fraction;
    let (lo, hi) = weights.raw_bounds();
    let (s_lo, s_hi) = (logistic(lo), logistic(hi));
    if s_hi <= s_lo {
        return F::from_f64_lossy(0.5);
    }
    ((logistic(raw) - s_lo) / (s_hi - s_lo)).clamp_unit()
}

#[derive(Debug, Clone, Copy)]
pub struct SurrogateEvaluator<F> {
    pub weights: SurrogateWeights<F>,
}

impl<F: Fitness> Default for SurrogateEvaluator<F> {
    fn default() -> Self {
        SurrogateEvaluator {
            weights: SurrogateWeights::default(),
        }
    }
}

impl<F: Fitness> SurrogateEvaluator<F> {
    pub fn new(weights: SurrogateWeights<F>) -> Self {
        SurrogateEvaluator { weights }
    }
}

impl<F: Fitness> Evaluator<F> for SurrogateEvaluator<F> {
    fn evaluate(&self, genome: &Genome) -> Result<F, EvalError> {
        Ok(surrogate_fitness(genome, &self.weights))
    }

    fn info(&self) -> EvaluatorInfo {
        EvaluatorInfo {
            deterministic: true,
            cost_hint: CostHint::Cheap,
        }
    }

    fn describe(&self) -> String {
        let w = &self.weights;
        format!(
            "surrogate(w_nodes={}, w_paths={}, w_depth={}, w_edges={})",
            w.w_nodes, w.w_paths, w.w_depth, w.w_edges
        )
    }
}
