//! The generational loop: initialization, elitism plus tournament-driven
//! variation, termination, convergence logging and Pareto reporting.
//!
//! Every random decision for a population slot comes from a stream derived
//! from `(seed, generation, slot)`, so results are bit-identical whatever
//! the thread count.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr_tree::{ExprTree, InitMethod};
use crate::genetic_ops::{
    exact_order, gene_crossover, subtree_crossover, subtree_mutation, tournament_select, Individual, Variation,
    VariationRates,
};
use crate::regression::{evaluate_individual, to_fitted_model, Dataset, FittedModel};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    Data(String),
    #[error("no individual produced a finite fit")]
    NoValidModel,
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub tournament_size: usize,
    pub target_fitness: f64,
    pub max_tree_depth: usize,
    pub max_genes: usize,
    pub rates: VariationRates,
    pub seed: u64,
    pub elitism_count: usize,
    /// Worker threads; 0 uses the global rayon pool. Does not affect results.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            population_size: 150,
            max_generations: 500,
            tournament_size: 4,
            target_fitness: 0.0,
            max_tree_depth: 4,
            max_genes: 4,
            rates: VariationRates::default(),
            seed: 1,
            elitism_count: 1,
            threads: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let fail = |m: String| Err(EvolutionError::Config(m));
        if self.population_size == 0 {
            return fail("population_size must be positive".into());
        }
        if self.max_generations == 0 {
            return fail("max_generations must be positive".into());
        }
        if self.tournament_size == 0 {
            return fail("tournament_size must be positive".into());
        }
        if self.max_genes == 0 {
            return fail("max_genes must be positive".into());
        }
        if self.target_fitness.is_nan() || self.target_fitness < 0.0 {
            return fail(format!("target_fitness = {} must be non-negative", self.target_fitness));
        }
        if self.elitism_count >= self.population_size {
            return fail(format!(
                "elitism_count = {} must be below population_size = {}",
                self.elitism_count, self.population_size
            ));
        }
        self.rates.validate().map_err(EvolutionError::Config)
    }

    /// Every run parameter as `(key, value)` in configuration-file syntax.
    pub fn echo(&self) -> Vec<(String, String)> {
        [
            ("population_size", self.population_size.to_string()),
            ("max_generations", self.max_generations.to_string()),
            ("tournament_size", self.tournament_size.to_string()),
            ("target_fitness", self.target_fitness.to_string()),
            ("max_tree_depth", self.max_tree_depth.to_string()),
            ("max_genes", self.max_genes.to_string()),
            ("p_crossover", self.rates.p_crossover.to_string()),
            ("p_mutation", self.rates.p_mutation.to_string()),
            ("p_reproduction", self.rates.p_reproduction.to_string()),
            ("p_gene_crossover", self.rates.p_gene_crossover.to_string()),
            ("seed", self.seed.to_string()),
            ("elitism_count", self.elitism_count.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    MaxGenerations,
    TargetReached,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::MaxGenerations => "MAX_GENERATIONS",
            TerminationReason::TargetReached => "TARGET_REACHED",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    /// 1-based; generation 1 is the initial population.
    pub generation: usize,
    pub best_fitness: f64,
    /// Mean over individuals with finite fitness.
    pub mean_fitness: f64,
    pub best_complexity: usize,
    /// Individuals carrying the worst-fitness sentinel.
    pub invalid_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// Effective parameters, echoed into exported logs.
    pub header: Vec<(String, String)>,
    pub records: Vec<GenerationRecord>,
    pub terminated_at: usize,
    pub termination_reason: TerminationReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoPoint {
    pub fitness: f64,
    pub complexity: usize,
    pub individual_id: usize,
    pub dominated: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: FittedModel,
    pub log: RunLog,
    pub population: Vec<Individual>,
}

fn slot_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

fn check_dataset(data: &Dataset) -> Result<(), EvolutionError> {
    let y = data.response().map_err(|e| EvolutionError::Data(e.to_string()))?;
    if data.rows() == 0 {
        return Err(EvolutionError::Data("dataset has no rows".into()));
    }
    if data.num_vars() == 0 {
        return Err(EvolutionError::Data("dataset has no predictor columns".into()));
    }
    if y.iter().chain(data.columns().iter().flatten()).any(|v| !v.is_finite()) {
        return Err(EvolutionError::Data("dataset contains non-finite values".into()));
    }
    Ok(())
}

/// Random evaluated population. Gene counts are uniform in `1..=max_genes`;
/// genes follow ramped half-and-half (depth limits cycle through
/// `1..=max_tree_depth`, alternating FULL and GROW).
pub fn initialize_population(config: &RunConfig, data: &Dataset) -> Vec<Individual> {
    let num_vars = data.num_vars();
    let ramp = config.max_tree_depth.max(1);
    (0..config.population_size)
        .into_par_iter()
        .map(|slot| {
            let mut rng = slot_rng(config.seed, 1, slot);
            let genes = rng.gen_range(1..=config.max_genes);
            let trees = (0..genes)
                .map(|j| {
                    let k = slot + j;
                    let method = if k % 2 == 0 { InitMethod::Full } else { InitMethod::Grow };
                    let depth = (1 + (k / 2) % ramp).min(config.max_tree_depth);
                    ExprTree::random(depth, method, num_vars, &mut rng)
                })
                .collect();
            evaluate_individual(&Individual::new(trees), data)
        })
        .collect()
}

/// Indices of the `n` best individuals by exact (fitness, complexity) order,
/// earlier index first on full ties.
pub fn best_indices(population: &[Individual], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| exact_order(&population[a], &population[b]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Produces generation `generation` from its predecessor.
pub fn step_generation(
    population: &[Individual],
    config: &RunConfig,
    data: &Dataset,
    generation: usize,
) -> Vec<Individual> {
    let elites = best_indices(population, config.elitism_count);
    let num_vars = data.num_vars();
    let offspring: Vec<Individual> = (elites.len()..config.population_size)
        .into_par_iter()
        .map(|slot| {
            let mut rng = slot_rng(config.seed, generation, slot);
            let parent = |rng: &mut ChaCha8Rng| {
                let i = tournament_select(population, config.tournament_size, rng).expect("non-empty population");
                &population[i]
            };
            let child = match config.rates.draw(&mut rng) {
                Variation::Reproduction => return parent(&mut rng).clone(),
                Variation::Mutation => {
                    let a = parent(&mut rng);
                    subtree_mutation(a, &mut rng, config.max_tree_depth, num_vars)
                }
                Variation::SubtreeCrossover => {
                    let (a, b) = (parent(&mut rng), parent(&mut rng));
                    let (c, d) = subtree_crossover(a, b, &mut rng, config.max_tree_depth);
                    if rng.gen_bool(0.5) { c } else { d }
                }
                Variation::GeneCrossover => {
                    let (a, b) = (parent(&mut rng), parent(&mut rng));
                    let (c, d) = gene_crossover(a, b, &mut rng, config.max_genes);
                    if rng.gen_bool(0.5) { c } else { d }
                }
            };
            evaluate_individual(&child, data)
        })
        .collect();

    let mut next: Vec<Individual> = elites.iter().map(|&i| population[i].clone()).collect();
    next.extend(offspring);
    next
}

/// Non-domination over (fitness, complexity), both minimized. Output is
/// sorted by complexity, then fitness, then index.
pub fn pareto_front(population: &[Individual]) -> Vec<ParetoPoint> {
    let mut points: Vec<ParetoPoint> = population
        .iter()
        .enumerate()
        .map(|(i, ind)| ParetoPoint {
            fitness: ind.fitness().unwrap_or(f64::INFINITY),
            complexity: ind.complexity(),
            individual_id: i,
            dominated: true,
        })
        .collect();
    points.sort_by(|a, b| {
        a.complexity
            .cmp(&b.complexity)
            .then(a.fitness.total_cmp(&b.fitness))
            .then(a.individual_id.cmp(&b.individual_id))
    });
    // best fitness among strictly smaller complexities
    let mut best_below = f64::INFINITY;
    let mut any_below = false;
    let mut start = 0;
    while start < points.len() {
        let c = points[start].complexity;
        let end = start + points[start..].iter().take_while(|p| p.complexity == c).count();
        let group_min = points[start].fitness;
        for p in &mut points[start..end] {
            let beats_smaller = !any_below || p.fitness < best_below;
            p.dominated = !(beats_smaller && p.fitness == group_min);
        }
        best_below = best_below.min(group_min);
        any_below = true;
        start = end;
    }
    points
}

fn record(population: &[Individual], generation: usize) -> GenerationRecord {
    let best = &population[best_indices(population, 1)[0]];
    let finite: Vec<f64> = population
        .iter()
        .filter_map(Individual::fitness)
        .filter(|f| f.is_finite())
        .collect();
    let mean = if finite.is_empty() {
        f64::INFINITY
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    GenerationRecord {
        generation,
        best_fitness: best.fitness().unwrap_or(f64::INFINITY),
        mean_fitness: mean,
        best_complexity: best.complexity(),
        invalid_count: population.len() - finite.len(),
    }
}

/// Step-by-step driver. [`run`] wraps it; use it directly to observe
/// intermediate generations.
pub struct Evolution<'a> {
    config: RunConfig,
    data: &'a Dataset,
    pool: Option<rayon::ThreadPool>,
    population: Vec<Individual>,
    generation: usize,
    best_ever: Individual,
    records: Vec<GenerationRecord>,
}

impl<'a> Evolution<'a> {
    /// Validates inputs and builds the evaluated initial population
    /// (generation 1).
    pub fn new(config: RunConfig, data: &'a Dataset) -> Result<Self, EvolutionError> {
        config.validate()?;
        check_dataset(data)?;
        let pool = if config.threads > 0 {
            Some(rayon::ThreadPoolBuilder::new().num_threads(config.threads).build()?)
        } else {
            None
        };
        let population = install(&pool, || initialize_population(&config, data));
        let best_ever = population[best_indices(&population, 1)[0]].clone();
        let records = vec![record(&population, 1)];
        Ok(Evolution {
            config,
            data,
            pool,
            population,
            generation: 1,
            best_ever,
            records,
        })
    }

    pub fn step(&mut self) {
        let next = self.generation + 1;
        let (config, data, population) = (&self.config, self.data, &self.population);
        self.population = install(&self.pool, || step_generation(population, config, data, next));
        self.generation = next;
        let best = &self.population[best_indices(&self.population, 1)[0]];
        if exact_order(best, &self.best_ever).is_lt() {
            self.best_ever = best.clone();
        }
        self.records.push(record(&self.population, next));
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Individual] {
        &self.population
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn records(&self) -> &[GenerationRecord] {
        &self.records
    }

    /// Best individual seen in any generation so far.
    pub fn best_ever(&self) -> &Individual {
        &self.best_ever
    }

    pub fn best_model(&self) -> Result<FittedModel, EvolutionError> {
        to_fitted_model(&self.best_ever, self.data).ok_or(EvolutionError::NoValidModel)
    }

    fn current_best_fitness(&self) -> f64 {
        self.records.last().map(|r| r.best_fitness).unwrap_or(f64::INFINITY)
    }

    /// Steps until the target fitness or the generation limit is reached.
    pub fn run_to_completion(mut self) -> Result<RunResult, EvolutionError> {
        let reason = loop {
            if self.current_best_fitness() <= self.config.target_fitness {
                break TerminationReason::TargetReached;
            }
            if self.generation >= self.config.max_generations {
                break TerminationReason::MaxGenerations;
            }
            self.step();
        };
        let best = self.best_model()?;
        Ok(RunResult {
            best,
            log: RunLog {
                header: self.config.echo(),
                records: self.records,
                terminated_at: self.generation,
                termination_reason: reason,
            },
            population: self.population,
        })
    }
}

fn install<T: Send>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

pub fn run(config: RunConfig, data: &Dataset) -> Result<RunResult, EvolutionError> {
    Evolution::new(config, data)?.run_to_completion()
}
