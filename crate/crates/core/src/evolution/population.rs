use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::genome::Genome;
use crate::scalar::{mean, Fitness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Init,
    SelectionCopy,
    Mutation,
    Crossover,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Init => "init",
            Origin::SelectionCopy => "selection-copy",
            Origin::Mutation => "mutation",
            Origin::Crossover => "crossover",
        }
    }

    pub fn parse(s: &str) -> Option<Origin> {
        [
            Origin::Init,
            Origin::SelectionCopy,
            Origin::Mutation,
            Origin::Crossover,
        ]
        .into_iter()
        .find(|o| o.as_str() == s)
    }
}

/// How an individual came to be. Parent fitness values are the committed
/// values from the previous generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage<F> {
    pub origin: Origin,
    pub parents: Vec<String>,
    pub parent_fitness: Vec<F>,
    pub generation_born: usize,
}

impl<F> Lineage<F> {
    pub fn init() -> Self {
        Lineage {
            origin: Origin::Init,
            parents: Vec::new(),
            parent_fitness: Vec::new(),
            generation_born: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual<F> {
    pub genome: Genome,
    /// Mean over every evaluation of this genome so far.
    pub fitness: Option<F>,
    pub lineage: Lineage<F>,
}

impl<F: Fitness> Individual<F> {
    pub fn new(genome: Genome, lineage: Lineage<F>) -> Self {
        Individual {
            genome,
            fitness: None,
            lineage,
        }
    }

    /// Offspring of `self` (a selected copy) with the given origin.
    pub(crate) fn derive(&self, genome: Genome, origin: Origin, generation: usize) -> Self {
        Individual {
            genome,
            fitness: None,
            lineage: Lineage {
                origin,
                parents: self.lineage.parents.clone(),
                parent_fitness: self.lineage.parent_fitness.clone(),
                generation_born: generation,
            },
        }
    }
}

/// Summary statistics of one evaluated generation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats<F> {
    pub max: F,
    pub min: F,
    pub mean: F,
    /// Lower-middle order statistic for even sizes.
    pub median: F,
    /// Population standard deviation (divides by N).
    pub stddev: F,
    /// First individual in list order attaining `max`.
    pub best_genome: Genome,
}

impl<F: Fitness> GenerationStats<F> {
    pub fn from_values(values: &[F], genomes: &[&Genome]) -> Option<Self> {
        let mean = mean(values)?;
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let median = sorted[(sorted.len() - 1) / 2];
        let var = values
            .iter()
            .fold(F::zero(), |acc, &v| acc + (v - mean) * (v - mean))
            / F::from_usize_lossy(values.len());
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
        }
        Some(GenerationStats {
            max: sorted[sorted.len() - 1],
            min: sorted[0],
            mean,
            median,
            stddev: var.sqrt(),
            best_genome: genomes[best].clone(),
        })
    }
}

/// One population snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation<F> {
    pub index: usize,
    pub individuals: Vec<Individual<F>>,
}

impl<F: Fitness> Generation<F> {
    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn is_evaluated(&self) -> bool {
        self.individuals.iter().all(|i| i.fitness.is_some())
    }

    pub fn fitness_values(&self) -> Option<Vec<F>> {
        self.individuals.iter().map(|i| i.fitness).collect()
    }

    /// Recomputed on every call; `None` until every individual has fitness.
    pub fn stats(&self) -> Option<GenerationStats<F>> {
        let values = self.fitness_values()?;
        let genomes: Vec<&Genome> = self.individuals.iter().map(|i| &i.genome).collect();
        GenerationStats::from_values(&values, &genomes)
    }
}
