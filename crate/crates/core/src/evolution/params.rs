use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvolutionError;
use crate::genome::SearchSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Every bit drawn independently with probability one half.
    #[default]
    BernoulliHalf,
    /// Every individual starts as the all-zero genome.
    AllZero,
}

/// Genetic search hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub generations: usize,
    pub mutation_prob: f64,
    pub mutation_bit_prob: f64,
    pub crossover_prob: f64,
    pub crossover_stage_prob: f64,
    pub seed: u64,
    #[serde(default)]
    pub init_mode: InitMode,
}

impl GaParams {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |msg: String| Err(EvolutionError::InvalidParams(msg));
        if self.population_size == 0 {
            return bad("population_size must be at least 1".into());
        }
        for (name, p) in [
            ("mutation_prob", self.mutation_prob),
            ("mutation_bit_prob", self.mutation_bit_prob),
            ("crossover_prob", self.crossover_prob),
            ("crossover_stage_prob", self.crossover_stage_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.crossover_prob > 0.0 && self.population_size < 2 {
            return bad("crossover needs population_size >= 2".into());
        }
        Ok(())
    }
}

/// Built-in hyperparameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Two stages of 3 and 5 nodes; N = 20, T = 50, p_M = 0.8, q_M = 0.1,
    /// p_C = 0.2, q_C = 0.3.
    #[serde(rename = "mnist-paper")]
    MnistPaper,
    /// Three stages of 3, 4 and 5 nodes; N = 20, T = 50, p_M = 0.8,
    /// q_M = 0.05, p_C = 0.2, q_C = 0.2.
    #[serde(rename = "cifar10-paper")]
    Cifar10Paper,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::MnistPaper, Preset::Cifar10Paper];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MnistPaper => "mnist-paper",
            Preset::Cifar10Paper => "cifar10-paper",
        }
    }

    pub fn space(self) -> SearchSpace {
        let stages = match self {
            Preset::MnistPaper => vec![3, 5],
            Preset::Cifar10Paper => vec![3, 4, 5],
        };
        SearchSpace::new(stages).expect("preset spaces are valid")
    }

    pub fn params(self, seed: u64) -> GaParams {
        let (q_m, q_c) = match self {
            Preset::MnistPaper => (0.1, 0.3),
            Preset::Cifar10Paper => (0.05, 0.2),
        };
        GaParams {
            population_size: 20,
            generations: 50,
            mutation_prob: 0.8,
            mutation_bit_prob: q_m,
            crossover_prob: 0.2,
            crossover_stage_prob: q_c,
            seed,
            init_mode: InitMode::BernoulliHalf,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = EvolutionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| EvolutionError::InvalidParams(format!("unknown preset {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let p = Preset::MnistPaper.params(1);
        assert_eq!(
            (p.population_size, p.generations, p.mutation_prob, p.mutation_bit_prob, p.crossover_prob, p.crossover_stage_prob),
            (20, 50, 0.8, 0.1, 0.2, 0.3)
        );
        assert_eq!(Preset::MnistPaper.space().genome_length(), 13);
        let c = Preset::Cifar10Paper.params(1);
        assert_eq!((c.mutation_bit_prob, c.crossover_stage_prob), (0.05, 0.2));
        assert_eq!(Preset::Cifar10Paper.space().genome_length(), 19);
        assert_eq!("cifar10-paper".parse::<Preset>().unwrap(), Preset::Cifar10Paper);
        assert!("imagenet".parse::<Preset>().is_err());
        assert!(p.validate().is_ok());
    }

    #[test]
    fn validation() {
        let mut p = Preset::MnistPaper.params(0);
        p.mutation_prob = 1.5;
        assert!(p.validate().is_err());
        let mut p = Preset::MnistPaper.params(0);
        p.population_size = 1;
        assert!(p.validate().is_err());
        p.crossover_prob = 0.0;
        assert!(p.validate().is_ok());
        p.population_size = 0;
        assert!(p.validate().is_err());
        let mut p = Preset::MnistPaper.params(0);
        p.crossover_stage_prob = f64::NAN;
        assert!(p.validate().is_err());
    }
}
