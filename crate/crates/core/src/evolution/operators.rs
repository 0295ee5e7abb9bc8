//! Initialization, roulette selection, stage-wise crossover and bit-flip
//! mutation.

use std::sync::Arc;

use rand::Rng;

use super::params::{GaParams, InitMode};
use super::population::{Generation, Individual, Lineage, Origin};
use super::EvolutionError;
use crate::genome::{Genome, SearchSpace};
use crate::rng::{phase_stream, Phase};
use crate::scalar::Fitness;

/// Generation 0, unevaluated.
pub fn init_population<F: Fitness>(space: &Arc<SearchSpace>, params: &GaParams) -> Generation<F> {
    let mut rng = phase_stream(params.seed, 0, Phase::Init);
    let length = space.genome_length();
    let individuals = (0..params.population_size)
        .map(|_| {
            let genome = match params.init_mode {
                InitMode::BernoulliHalf => {
                    let bits = (0..length).map(|_| rng.gen_bool(0.5)).collect();
                    Genome::new(Arc::clone(space), bits).expect("length matches space")
                }
                InitMode::AllZero => Genome::zeros(Arc::clone(space)),
            };
            Individual::new(genome, Lineage::init())
        })
        .collect();
    Generation {
        index: 0,
        individuals,
    }
}

/// Roulette weights `r_n - r_min`. Every individual tied at the minimum
/// gets weight zero.
pub fn selection_weights<F: Fitness>(fitness: &[F]) -> Vec<F> {
    let min = fitness.iter().copied().fold(F::infinity(), F::min);
    fitness.iter().map(|&r| r - min).collect()
}

/// Draws one index with probability proportional to `weights`, or uniformly
/// when every weight is zero.
pub fn roulette_draw<F: Fitness, R: Rng + ?Sized>(weights: &[F], rng: &mut R) -> usize {
    let total = weights.iter().fold(F::zero(), |acc, &w| acc + w);
    // also catches NaN totals
    if total.partial_cmp(&F::zero()) != Some(std::cmp::Ordering::Greater) {
        return rng.gen_range(0..weights.len());
    }
    let target = F::from_f64_lossy(rng.gen::<f64>()) * total;
    let mut acc = F::zero();
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > F::zero() {
            acc = acc + w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// N independent roulette draws over the evaluated `previous` generation.
pub fn select<F: Fitness, R: Rng + ?Sized>(
    previous: &Generation<F>,
    rng: &mut R,
) -> Result<Vec<Individual<F>>, EvolutionError> {
    let fitness = previous
        .fitness_values()
        .ok_or(EvolutionError::NotEvaluated(previous.index))?;
    let weights = selection_weights(&fitness);
    let generation = previous.index + 1;
    Ok((0..previous.len())
        .map(|_| {
            let pick = roulette_draw(&weights, rng);
            let parent = &previous.individuals[pick];
            Individual {
                genome: parent.genome.clone(),
                fitness: None,
                lineage: Lineage {
                    origin: Origin::SelectionCopy,
                    parents: vec![parent.genome.to_string()],
                    parent_fitness: vec![fitness[pick]],
                    generation_born: generation,
                },
            }
        })
        .collect())
}

/// Exchanges stage blocks between `a` and `b`; stage `s` is swapped when
/// `swap(s)` returns true.
pub fn swap_stages(a: &Genome, b: &Genome, mut swap: impl FnMut(usize) -> bool) -> (Genome, Genome) {
    let space = a.space();
    let mut left = a.bits().to_vec();
    let mut right = b.bits().to_vec();
    for stage in 1..=space.stage_count() {
        if swap(stage) {
            let range = space.stage_range(stage);
            left[range.clone()].swap_with_slice(&mut right[range]);
        }
    }
    (
        a.with_bits(left).expect("same space"),
        b.with_bits(right).expect("same space"),
    )
}

/// Pairs `(0,1), (2,3), ...` cross with probability `crossover_prob`; inside
/// a crossing pair each stage is exchanged with probability
/// `crossover_stage_prob`. A crossing pair is tagged even if no stage
/// happened to move. An odd last individual is left alone.
pub fn crossover_pass<F: Fitness, R: Rng + ?Sized>(
    selected: Vec<Individual<F>>,
    params: &GaParams,
    rng: &mut R,
) -> Vec<Individual<F>> {
    let mut out = Vec::with_capacity(selected.len());
    let mut iter = selected.into_iter();
    while let Some(a) = iter.next() {
        let Some(b) = iter.next() else {
            out.push(a);
            break;
        };
        if rng.gen::<f64>() < params.crossover_prob {
            let (ga, gb) = swap_stages(&a.genome, &b.genome, |_| {
                rng.gen::<f64>() < params.crossover_stage_prob
            });
            let generation = a.lineage.generation_born;
            let pa = (a.genome.to_string(), a.lineage.parent_fitness[0]);
            let pb = (b.genome.to_string(), b.lineage.parent_fitness[0]);
            let child = |genome, first: &(String, F), second: &(String, F)| Individual {
                genome,
                fitness: None,
                lineage: Lineage {
                    origin: Origin::Crossover,
                    parents: vec![first.0.clone(), second.0.clone()],
                    parent_fitness: vec![first.1, second.1],
                    generation_born: generation,
                },
            };
            out.push(child(ga, &pa, &pb));
            out.push(child(gb, &pb, &pa));
        } else {
            out.push(a);
            out.push(b);
        }
    }
    out
}

pub fn flip_bits<R: Rng + ?Sized>(genome: &Genome, bit_prob: f64, rng: &mut R) -> Genome {
    let bits = genome
        .bits()
        .iter()
        .map(|&b| if rng.gen::<f64>() < bit_prob { !b } else { b })
        .collect();
    genome.with_bits(bits).expect("same length")
}

/// Every individual not produced by crossover mutates with probability
/// `mutation_prob`, flipping each bit with probability `mutation_bit_prob`.
pub fn mutation_pass<F: Fitness, R: Rng + ?Sized>(
    individuals: Vec<Individual<F>>,
    params: &GaParams,
    rng: &mut R,
) -> Vec<Individual<F>> {
    individuals
        .into_iter()
        .map(|ind| {
            if ind.lineage.origin == Origin::Crossover {
                return ind;
            }
            if rng.gen::<f64>() < params.mutation_prob {
                let genome = flip_bits(&ind.genome, params.mutation_bit_prob, rng);
                let generation = ind.lineage.generation_born;
                ind.derive(genome, Origin::Mutation, generation)
            } else {
                ind
            }
        })
        .collect()
}

/// Selection, crossover and mutation for generation `previous.index + 1`,
/// each phase on its own random stream.
pub fn breed<F: Fitness>(
    previous: &Generation<F>,
    params: &GaParams,
) -> Result<Generation<F>, EvolutionError> {
    let index = previous.index + 1;
    let t = index as u64;
    let selected = select(previous, &mut phase_stream(params.seed, t, Phase::Select))?;
    let crossed = crossover_pass(selected, params, &mut phase_stream(params.seed, t, Phase::Crossover));
    let mutated = mutation_pass(crossed, params, &mut phase_stream(params.seed, t, Phase::Mutate));
    Ok(Generation {
        index,
        individuals: mutated,
    })
}
