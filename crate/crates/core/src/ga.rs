//! Budget-constrained genetic algorithm over HCF placement vectors.
//!
//! Individuals are binary vectors of length `|E|`; at most
//! `⌊b·|E|⌋` bits may be set. Selection is truncation: the top
//! `elite_fraction` of the population survives unchanged and supplies the
//! parents for uniform crossover; children mutate bitwise and a slice of
//! the offspring is replaced by fresh random individuals to keep
//! diversity. Any operator output that exceeds the budget is repaired by
//! clearing randomly chosen set bits. The loop stops after `patience`
//! generations without a strict best-fitness improvement, or at
//! `max_generations`.
//!
//! Everything is driven by one seeded RNG, so a fixed seed reproduces the
//! whole run bit for bit.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use serde::{Deserialize, Serialize};

use crate::net::{budget_links, Demand, PlacementVector, Topology};
use crate::provision::{Evaluator, FitnessBreakdown, FitnessWeights};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    /// Share of the population kept as parents/survivors each generation.
    pub elite_fraction: f64,
    /// Probability that a child comes from crossover rather than cloning.
    pub crossover_rate: f64,
    /// Per-bit flip probability; `None` means `1/|E|`.
    pub mutation_prob: Option<f64>,
    /// Share of each generation's offspring replaced by fresh randoms.
    pub injection_fraction: f64,
    /// Generations without strict best-fitness improvement before stopping.
    pub patience: usize,
    pub max_generations: usize,
    pub seed: u64,
    /// HCF budget fraction b.
    pub budget_fraction: f64,
    pub weights: FitnessWeights,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            elite_fraction: 0.4,
            crossover_rate: 0.9,
            mutation_prob: None,
            injection_fraction: 0.1,
            patience: 20,
            max_generations: 200,
            seed: 1,
            budget_fraction: 0.4,
            weights: FitnessWeights::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let fractions = [
            self.elite_fraction,
            self.crossover_rate,
            self.injection_fraction,
            self.budget_fraction,
            self.mutation_prob.unwrap_or(0.0),
        ];
        if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::Config("GA fractions must lie in [0,1]".into()));
        }
        if self.population < 2 {
            return Err(Error::Config("population must be at least 2".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.max_generations == 0 {
            return Err(Error::Config("max_generations must be at least 1".into()));
        }
        Ok(())
    }

    fn mutation_prob(&self, num_links: usize) -> f64 {
        self.mutation_prob.unwrap_or(1.0 / num_links as f64)
    }
}

/// Candidate solution with its cached objective.
#[derive(Debug, Clone)]
pub struct Individual {
    pub placement: PlacementVector,
    pub fitness: Option<FitnessBreakdown>,
}

impl Individual {
    fn fresh(placement: PlacementVector) -> Self {
        Self { placement, fitness: None }
    }

    pub fn fitness_value(&self) -> f64 {
        self.fitness.as_ref().expect("evaluated").fitness
    }
}

/// Per-generation trace of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    /// Best-ever fitness after this generation (non-increasing).
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Unserved kbps of the best-ever individual.
    pub best_unserved_kbps: f64,
    /// Module cost of the best-ever individual.
    pub best_cost: usize,
}

/// Clear randomly chosen set bits until the budget holds.
pub fn repair(bits: &mut [bool], budget: usize, rng: &mut ChaCha8Rng) {
    let mut ones: Vec<usize> =
        bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
    while ones.len() > budget {
        let k = rng.random_range(0..ones.len());
        bits[ones.swap_remove(k)] = false;
    }
}

/// Uniform crossover: each bit from either parent with probability 0.5,
/// then repair.
pub fn crossover(
    a: &PlacementVector,
    b: &PlacementVector,
    budget_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> PlacementVector {
    assert_eq!(a.len(), b.len());
    let mut bits: Vec<bool> = a
        .bits()
        .iter()
        .zip(b.bits())
        .map(|(&x, &y)| if rng.random_bool(0.5) { x } else { y })
        .collect();
    let budget = budget_links(budget_fraction, bits.len());
    repair(&mut bits, budget, rng);
    PlacementVector::new(bits, budget_fraction).expect("repaired to budget")
}

/// Independent per-bit flips with probability `p_mut`, then repair.
pub fn mutate(
    v: &PlacementVector,
    p_mut: f64,
    budget_fraction: f64,
    rng: &mut ChaCha8Rng,
) -> PlacementVector {
    let mut bits: Vec<bool> = v
        .bits()
        .iter()
        .map(|&b| if p_mut > 0.0 && rng.random_bool(p_mut) { !b } else { b })
        .collect();
    let budget = budget_links(budget_fraction, bits.len());
    repair(&mut bits, budget, rng);
    PlacementVector::new(bits, budget_fraction).expect("repaired to budget")
}

fn random_individual(num_links: usize, budget_fraction: f64, rng: &mut ChaCha8Rng) -> Individual {
    let budget = budget_links(budget_fraction, num_links);
    let ones = rng.random_range(0..=budget);
    // partial Fisher-Yates: first `ones` entries become the set bits
    let mut idx: Vec<usize> = (0..num_links).collect();
    for i in 0..ones {
        let j = rng.random_range(i..num_links);
        idx.swap(i, j);
    }
    let mut bits = vec![false; num_links];
    for &i in &idx[..ones] {
        bits[i] = true;
    }
    Individual::fresh(PlacementVector::new(bits, budget_fraction).expect("within budget"))
}

/// Seeded initial population: set-bit counts uniform in `[0, ⌊b·|E|⌋]`,
/// positions uniform without replacement.
pub fn init_population(cfg: &GaConfig, num_links: usize) -> Vec<Individual> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.population).map(|_| random_individual(num_links, cfg.budget_fraction, &mut rng)).collect()
}

/// Run the GA. Returns the best-ever individual and the per-generation
/// history. Deterministic for a fixed seed.
pub fn evolve(
    cfg: &GaConfig,
    topo: &Topology,
    demands: &[Demand],
    evaluator: &Evaluator<'_>,
) -> Result<(Individual, Vec<GenerationStats>)> {
    cfg.validate()?;
    let num_links = topo.num_links();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population: Vec<Individual> =
        (0..cfg.population).map(|_| random_individual(num_links, cfg.budget_fraction, &mut rng)).collect();

    let mut best: Option<Individual> = None;
    let mut history = Vec::new();
    let mut stale = 0usize;

    for generation in 0..cfg.max_generations {
        for ind in &mut population {
            if ind.fitness.is_none() {
                ind.fitness = Some(evaluator.evaluate_placement(topo, &ind.placement, demands)?);
            }
        }
        population.sort_by(|a, b| a.fitness_value().partial_cmp(&b.fitness_value()).unwrap());

        let gen_best = &population[0];
        let improved = match &best {
            None => true,
            Some(b) => gen_best.fitness_value() < b.fitness_value(),
        };
        if improved {
            best = Some(gen_best.clone());
            stale = 0;
        } else {
            stale += 1;
        }

        let best_ref = best.as_ref().unwrap();
        let best_breakdown = best_ref.fitness.as_ref().unwrap();
        history.push(GenerationStats {
            generation,
            best_fitness: best_ref.fitness_value(),
            mean_fitness: population.iter().map(|i| i.fitness_value()).sum::<f64>()
                / population.len() as f64,
            best_unserved_kbps: best_breakdown.total_unserved_kbps,
            best_cost: best_breakdown.total_cost,
        });

        if stale >= cfg.patience {
            break;
        }

        let elite = ((cfg.elite_fraction * cfg.population as f64).round() as usize)
            .clamp(1, cfg.population);
        let offspring = cfg.population - elite;
        let injected = (cfg.injection_fraction * offspring as f64).round() as usize;
        let bred = offspring - injected;

        let p_mut = cfg.mutation_prob(num_links);
        let mut next: Vec<Individual> = population[..elite].to_vec();
        for _ in 0..bred {
            let pa = &population[rng.random_range(0..elite)].placement;
            let pb = &population[rng.random_range(0..elite)].placement;
            let child = if rng.random_bool(cfg.crossover_rate) {
                crossover(pa, pb, cfg.budget_fraction, &mut rng)
            } else {
                pa.clone()
            };
            next.push(Individual::fresh(mutate(&child, p_mut, cfg.budget_fraction, &mut rng)));
        }
        for _ in 0..injected {
            next.push(random_individual(num_links, cfg.budget_fraction, &mut rng));
        }
        population = next;
    }

    Ok((best.expect("at least one generation ran"), history))
}
