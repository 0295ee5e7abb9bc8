//! Search spaces, fixed-length bit-string genomes, and the dash/pipe notation.
//!
//! A search space is a list of stages, stage `s` holding `K_s` ordered nodes.
//! Every ordered node pair `(i, j)` with `i < j` inside a stage owns one bit.
//! Bits are laid out stage by stage; inside a stage they are grouped by
//! target node `j = 2..=K_s`, and inside a group ordered by source node
//! `i = 1..j`. So for a stage with four nodes the order is
//! `(1,2) | (1,3) (2,3) | (1,4) (2,4) (3,4)`.
//!
//! The text form writes each group as a run of digits, separates groups with
//! `-` and stages with `|`, e.g. `0-01|0-01-111|0-11-010-0111` for stages of
//! 3, 4 and 5 nodes. A stage with a single node has no bits and renders as an
//! empty segment.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenomeError {
    #[error("a search space needs at least one stage")]
    NoStages,
    #[error("stage {stage} has zero nodes; every stage needs at least one")]
    EmptyStage { stage: usize },
    #[error("genome for this space needs {expected} bits, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("edge (stage {stage}, {from} -> {to}) is not valid for this space")]
    InvalidEdge { stage: usize, from: usize, to: usize },
    #[error("bit index {index} out of range for genome length {length}")]
    IndexOutOfRange { index: usize, length: usize },
    #[error("genomes belong to different search spaces")]
    SpaceMismatch,
    #[error("expected {expected} stages, found {found}")]
    StageCount { expected: usize, found: usize },
    #[error("stage {stage} (at position {position}): expected {expected} groups, found {found}")]
    GroupCount {
        stage: usize,
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error(
        "stage {stage}, group for node {target} (at position {position}): \
         expected {expected} digits, found {found}"
    )]
    GroupLength {
        stage: usize,
        target: usize,
        position: usize,
        expected: usize,
        found: usize,
    },
    #[error("illegal character {found:?} at position {position}")]
    IllegalCharacter { found: char, position: usize },
    #[error("invalid stage list {0:?}")]
    StageList(String),
}

/// Number of genomes in a search space, `2^L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceSize {
    Exact(u128),
    /// `2^L` does not fit in a `u128`.
    ExceedsNative { bits: usize },
}

impl SpaceSize {
    pub fn exact(self) -> Option<u128> {
        match self {
            SpaceSize::Exact(n) => Some(n),
            SpaceSize::ExceedsNative { .. } => None,
        }
    }
}

impl fmt::Display for SpaceSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSize::Exact(n) => write!(f, "{n}"),
            SpaceSize::ExceedsNative { bits } => write!(f, "2^{bits}"),
        }
    }
}

/// The stage layout that fixes the genome length.
///
/// Serializes as `{"stages": [K_1, ..., K_S]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct SearchSpace {
    nodes_per_stage: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    stages: Vec<usize>,
}

impl TryFrom<SpaceRepr> for SearchSpace {
    type Error = GenomeError;

    fn try_from(repr: SpaceRepr) -> Result<Self, Self::Error> {
        SearchSpace::new(repr.stages)
    }
}

impl From<SearchSpace> for SpaceRepr {
    fn from(space: SearchSpace) -> Self {
        SpaceRepr {
            stages: space.nodes_per_stage,
        }
    }
}

impl SearchSpace {
    pub fn new(nodes_per_stage: Vec<usize>) -> Result<Self, GenomeError> {
        if nodes_per_stage.is_empty() {
            return Err(GenomeError::NoStages);
        }
        if let Some(pos) = nodes_per_stage.iter().position(|&k| k == 0) {
            return Err(GenomeError::EmptyStage { stage: pos + 1 });
        }
        Ok(SearchSpace { nodes_per_stage })
    }

    pub fn stage_count(&self) -> usize {
        self.nodes_per_stage.len()
    }

    pub fn nodes_per_stage(&self) -> &[usize] {
        &self.nodes_per_stage
    }

    /// Node count `K_s` of 1-based stage `stage`.
    ///
    /// Panics if `stage` is not in `1..=S`.
    pub fn nodes_in_stage(&self, stage: usize) -> usize {
        self.nodes_per_stage[stage - 1]
    }

    /// Genome length `L = ½ Σ K_s (K_s − 1)`.
    pub fn genome_length(&self) -> usize {
        self.nodes_per_stage.iter().map(|&k| stage_bits(k)).sum()
    }

    pub fn size(&self) -> SpaceSize {
        let bits = self.genome_length();
        if bits < 128 {
            SpaceSize::Exact(1u128 << bits)
        } else {
            SpaceSize::ExceedsNative { bits }
        }
    }

    /// Bit range occupied by 1-based stage `stage`.
    pub fn stage_range(&self, stage: usize) -> std::ops::Range<usize> {
        let start: usize = self.nodes_per_stage[..stage - 1]
            .iter()
            .map(|&k| stage_bits(k))
            .sum();
        start..start + stage_bits(self.nodes_in_stage(stage))
    }

    /// Canonical bit position of `edge`.
    pub fn bit_index(&self, edge: EdgeIndex) -> Result<usize, GenomeError> {
        let invalid = GenomeError::InvalidEdge {
            stage: edge.stage,
            from: edge.source,
            to: edge.target,
        };
        if edge.stage == 0 || edge.stage > self.stage_count() {
            return Err(invalid);
        }
        let k = self.nodes_in_stage(edge.stage);
        if edge.source == 0 || edge.source >= edge.target || edge.target > k {
            return Err(invalid);
        }
        let group_start = (edge.target - 1) * (edge.target - 2) / 2;
        Ok(self.stage_range(edge.stage).start + group_start + edge.source - 1)
    }

    /// Inverse of [`SearchSpace::bit_index`].
    pub fn edge_at(&self, index: usize) -> Result<EdgeIndex, GenomeError> {
        let length = self.genome_length();
        if index >= length {
            return Err(GenomeError::IndexOutOfRange { index, length });
        }
        let mut offset = index;
        for (pos, &k) in self.nodes_per_stage.iter().enumerate() {
            let bits = stage_bits(k);
            if offset < bits {
                // group for target j starts at (j-1)(j-2)/2 and holds j-1 bits
                let mut target = 2;
                while (target - 1) * target / 2 <= offset {
                    target += 1;
                }
                let source = offset - (target - 1) * (target - 2) / 2 + 1;
                return Ok(EdgeIndex {
                    stage: pos + 1,
                    source,
                    target,
                });
            }
            offset -= bits;
        }
        unreachable!("index checked against genome length")
    }

    /// All edges of the space in canonical bit order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeIndex> + '_ {
        self.nodes_per_stage
            .iter()
            .enumerate()
            .flat_map(|(pos, &k)| {
                (2..=k).flat_map(move |target| {
                    (1..target).map(move |source| EdgeIndex {
                        stage: pos + 1,
                        source,
                        target,
                    })
                })
            })
    }
}

impl fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.nodes_per_stage.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses a comma-separated stage list such as `3,4,5`.
impl FromStr for SearchSpace {
    type Err = GenomeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let stages = s
            .split(',')
            .map(|part| part.trim().parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| GenomeError::StageList(s.to_string()))?;
        SearchSpace::new(stages)
    }
}

fn stage_bits(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// A directed intra-stage edge `source -> target`, 1-based as in node labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeIndex {
    pub stage: usize,
    pub source: usize,
    pub target: usize,
}

/// An immutable bit string bound to its search space.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Genome {
    space: Arc<SearchSpace>,
    bits: Vec<bool>,
}

impl Genome {
    pub fn new(space: Arc<SearchSpace>, bits: Vec<bool>) -> Result<Self, GenomeError> {
        let expected = space.genome_length();
        if bits.len() != expected {
            return Err(GenomeError::LengthMismatch {
                expected,
                found: bits.len(),
            });
        }
        Ok(Genome { space, bits })
    }

    pub fn zeros(space: Arc<SearchSpace>) -> Self {
        let bits = vec![false; space.genome_length()];
        Genome { space, bits }
    }

    pub fn ones(space: Arc<SearchSpace>) -> Self {
        let bits = vec![true; space.genome_length()];
        Genome { space, bits }
    }

    /// Genome whose bit `l` is bit `l` of `value` (bit 0 is the least
    /// significant). Used to walk a whole space in order.
    pub fn from_index(space: Arc<SearchSpace>, value: u64) -> Self {
        let bits = (0..space.genome_length())
            .map(|l| l < 64 && (value >> l) & 1 == 1)
            .collect();
        Genome { space, bits }
    }

    pub fn parse(space: Arc<SearchSpace>, text: &str) -> Result<Self, GenomeError> {
        parse_genome_string(space, text)
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<SearchSpace> {
        &self.space
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn has_edge(&self, edge: EdgeIndex) -> Result<bool, GenomeError> {
        Ok(self.bits[self.space.bit_index(edge)?])
    }

    pub fn stage_bits(&self, stage: usize) -> &[bool] {
        &self.bits[self.space.stage_range(stage)]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// A new genome with the given bits replaced.
    pub fn with_bits(&self, bits: Vec<bool>) -> Result<Self, GenomeError> {
        Genome::new(Arc::clone(&self.space), bits)
    }

    pub fn complement(&self) -> Self {
        Genome {
            space: Arc::clone(&self.space),
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn hamming_distance(&self, other: &Genome) -> Result<usize, GenomeError> {
        if self.space != other.space {
            return Err(GenomeError::SpaceMismatch);
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Edges whose bits are set, in canonical order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeIndex> + '_ {
        self.space
            .edges()
            .zip(&self.bits)
            .filter_map(|(edge, &set)| set.then_some(edge))
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_genome_string(self))
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({})", format_genome_string(self))
    }
}

/// Renders a genome in dash/pipe notation.
pub fn format_genome_string(genome: &Genome) -> String {
    let space = genome.space();
    let mut out = String::with_capacity(genome.len() * 2);
    for stage in 1..=space.stage_count() {
        if stage > 1 {
            out.push('|');
        }
        let bits = genome.stage_bits(stage);
        let mut offset = 0;
        for target in 2..=space.nodes_in_stage(stage) {
            if target > 2 {
                out.push('-');
            }
            for &bit in &bits[offset..offset + target - 1] {
                out.push(if bit { '1' } else { '0' });
            }
            offset += target - 1;
        }
    }
    out
}

/// Parses dash/pipe notation under `space`. Positions in errors are 0-based
/// character offsets into `text`.
pub fn parse_genome_string(space: Arc<SearchSpace>, text: &str) -> Result<Genome, GenomeError> {
    if let Some((position, found)) = text
        .chars()
        .enumerate()
        .find(|(_, c)| !matches!(c, '0' | '1' | '-' | '|'))
    {
        return Err(GenomeError::IllegalCharacter { found, position });
    }

    let segments: Vec<&str> = text.split('|').collect();
    if segments.len() != space.stage_count() {
        return Err(GenomeError::StageCount {
            expected: space.stage_count(),
            found: segments.len(),
        });
    }

    let mut bits = Vec::with_capacity(space.genome_length());
    let mut position = 0;
    for (pos, segment) in segments.iter().enumerate() {
        let stage = pos + 1;
        let k = space.nodes_in_stage(stage);
        let groups: Vec<&str> = if segment.is_empty() && k == 1 {
            Vec::new()
        } else {
            segment.split('-').collect()
        };
        if groups.len() != k - 1 {
            return Err(GenomeError::GroupCount {
                stage,
                position,
                expected: k - 1,
                found: groups.len(),
            });
        }
        let mut group_pos = position;
        for (g, group) in groups.iter().enumerate() {
            let target = g + 2;
            if group.len() != target - 1 {
                return Err(GenomeError::GroupLength {
                    stage,
                    target,
                    position: group_pos,
                    expected: target - 1,
                    found: group.len(),
                });
            }
            bits.extend(group.bytes().map(|b| b == b'1'));
            group_pos += group.len() + 1;
        }
        position += segment.len() + 1;
    }
    Genome::new(space, bits)
}
