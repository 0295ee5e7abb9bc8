use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::genome::Genome;
use crate::scalar::{mean, Fitness};

/// Every measurement taken for every genome, keyed by the genome's string
/// form. A genome's fitness is the mean of its list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitnessCache<F> {
    entries: BTreeMap<String, Vec<F>>,
}

impl<F: Fitness> FitnessCache<F> {
    pub fn new() -> Self {
        FitnessCache {
            entries: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, genome: &Genome, measurement: F) -> F {
        let list = self.entries.entry(genome.to_string()).or_default();
        list.push(measurement);
        mean(list).expect("just pushed")
    }

    pub fn measurements(&self, genome: &Genome) -> &[F] {
        self.measurements_by_key(&genome.to_string())
    }

    pub fn measurements_by_key(&self, key: &str) -> &[F] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn mean(&self, genome: &Genome) -> Option<F> {
        mean(self.measurements(genome))
    }

    pub fn mean_by_key(&self, key: &str) -> Option<F> {
        mean(self.measurements_by_key(key))
    }

    /// Distinct genomes evaluated so far.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_evaluations(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[F])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Highest mean over all entries; ties go to the smallest key.
    pub fn best(&self) -> Option<(&str, F)> {
        let mut best: Option<(&str, F)> = None;
        for (key, list) in self.iter() {
            let m = mean(list)?;
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((key, m));
            }
        }
        best
    }
}
