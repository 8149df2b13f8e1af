//! Generational GA over flat weight vectors.
//!
//! Each generation: evaluate, copy the elites, then fill the population with
//! tournament-selected parents recombined by one-point crossover and
//! perturbed by per-gene Gaussian mutation.
//!
//! Randomness comes from one master seed. ChaCha stream 0 initialises the
//! population; stream `g + 1` breeds generation `g + 1` from generation `g`.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::{Genome, NetworkError, NetworkSpec, NeuralController};
use crate::metrics::FitnessWeights;
use crate::scenario::ScenarioSpec;
use crate::sim::{run_simulation, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub crossover_probability: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    /// Initial genes are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub rng_seed: u64,
    /// Fan candidate evaluation out over a thread pool.
    pub parallel: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            generations: 200,
            tournament_size: 3,
            elitism_count: 1,
            crossover_probability: 0.9,
            mutation_rate: 0.05,
            mutation_sigma: 0.3,
            init_range: 1.0,
            rng_seed: 0,
            parallel: true,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        let bad = |msg: &str| Err(EvolutionError::InvalidConfig(msg.to_string()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.generations == 0 {
            return bad("generations must be positive");
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be smaller than population_size");
        }
        if self.tournament_size == 0 || self.tournament_size > self.population_size {
            return bad("tournament_size must lie in [1, population_size]");
        }
        for (name, p) in [
            ("crossover_probability", self.crossover_probability),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(EvolutionError::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.mutation_sigma >= 0.0 && self.mutation_sigma.is_finite()) {
            return bad("mutation_sigma must be finite and non-negative");
        }
        if !(self.init_range >= 0.0 && self.init_range.is_finite()) {
            return bad("init_range must be finite and non-negative");
        }
        Ok(())
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn init_population(cfg: &EvolutionConfig, spec: &NetworkSpec) -> Vec<Genome> {
    let mut rng = stream(cfg.rng_seed, 0);
    let r = cfg.init_range;
    (0..cfg.population_size)
        .map(|_| {
            Genome::new(
                (0..spec.genome_length())
                    .map(|_| if r == 0.0 { 0.0 } else { rng.random_range(-r..=r) })
                    .collect(),
            )
        })
        .collect()
}

/// Scores one candidate weight vector.
pub trait FitnessEvaluator: Sync {
    fn fitness(&self, genes: &[f64]) -> Result<f64, EvolutionError>;
}

/// Collective fitness of a deployment where every pole runs the same network.
#[derive(Debug, Clone)]
pub struct ScenarioEvaluator {
    pub scenario: ScenarioSpec,
    pub spec: NetworkSpec,
    pub weights: FitnessWeights,
}

impl FitnessEvaluator for ScenarioEvaluator {
    fn fitness(&self, genes: &[f64]) -> Result<f64, EvolutionError> {
        let genome = Arc::new(Genome::new(genes.to_vec()));
        let controller = NeuralController::new(self.spec, genome)?;
        let factory = |_| controller.clone();
        Ok(run_simulation(&self.scenario, &factory, &self.weights, false)?
            .metrics
            .fitness)
    }
}

/// Fills in every missing fitness. Results land by candidate index, so the
/// parallel and sequential paths agree exactly.
pub fn evaluate_population<E: FitnessEvaluator + ?Sized>(
    pop: &mut [Genome],
    evaluator: &E,
    parallel: bool,
) -> Result<(), EvolutionError> {
    let score = |g: &mut Genome| -> Result<(), EvolutionError> {
        if g.fitness.is_none() {
            g.fitness = Some(evaluator.fitness(&g.genes)?);
        }
        Ok(())
    };
    if parallel {
        pop.par_iter_mut().try_for_each(score)
    } else {
        pop.iter_mut().try_for_each(score)
    }
}

fn fitness_of(g: &Genome) -> f64 {
    g.fitness.unwrap_or(f64::NEG_INFINITY)
}

/// Index of the fittest of `k` distinct random members; ties go to the lowest index.
pub fn select_tournament<R: Rng + ?Sized>(pop: &[Genome], k: usize, rng: &mut R) -> usize {
    let mut picks = sample(rng, pop.len(), k.clamp(1, pop.len())).into_vec();
    picks.sort_unstable();
    let mut best = picks[0];
    for &i in &picks[1..] {
        if fitness_of(&pop[i]) > fitness_of(&pop[best]) {
            best = i;
        }
    }
    best
}

pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    probability: f64,
    rng: &mut R,
) -> Result<(Genome, Genome), NetworkError> {
    if a.genes.len() != b.genes.len() {
        return Err(NetworkError::LengthMismatch {
            expected: a.genes.len(),
            actual: b.genes.len(),
        });
    }
    let len = a.genes.len();
    if len < 2 || !rng.random_bool(probability) {
        return Ok((Genome::new(a.genes.clone()), Genome::new(b.genes.clone())));
    }
    let cut = rng.random_range(1..len);
    Ok(one_point(a, b, cut))
}

/// `a[..cut] + b[cut..]` and `b[..cut] + a[cut..]`.
pub fn one_point(a: &Genome, b: &Genome, cut: usize) -> (Genome, Genome) {
    let child = |x: &Genome, y: &Genome| {
        Genome::new(x.genes[..cut].iter().chain(&y.genes[cut..]).copied().collect())
    };
    (child(a, b), child(b, a))
}

pub fn mutate<R: Rng + ?Sized>(g: &Genome, cfg: &EvolutionConfig, rng: &mut R) -> Genome {
    let genes = g
        .genes
        .iter()
        .map(|&x| {
            if rng.random_bool(cfg.mutation_rate) {
                let noise: f64 = rng.sample(StandardNormal);
                let y = x + cfg.mutation_sigma * noise;
                if y.is_finite() {
                    y
                } else {
                    x
                }
            } else {
                x
            }
        })
        .collect();
    Genome::new(genes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_genes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolutionLog {
    pub generations: Vec<GenerationStats>,
}

impl EvolutionLog {
    /// `generation,best_fitness,mean_fitness` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness\n");
        for g in &self.generations {
            out.push_str(&format!("{},{},{}\n", g.generation, g.best_fitness, g.mean_fitness));
        }
        out
    }
}

/// Population members ordered best first; ties keep population order.
fn ranking(pop: &[Genome]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| fitness_of(&pop[b]).total_cmp(&fitness_of(&pop[a])));
    order
}

pub fn evolve<E: FitnessEvaluator + ?Sized>(
    cfg: &EvolutionConfig,
    spec: &NetworkSpec,
    evaluator: &E,
) -> Result<(Genome, EvolutionLog), EvolutionError> {
    cfg.validate()?;
    let mut pop = init_population(cfg, spec);
    let mut log = EvolutionLog::default();
    let mut champion: Option<Genome> = None;

    for generation in 0..cfg.generations {
        evaluate_population(&mut pop, evaluator, cfg.parallel)?;
        let order = ranking(&pop);
        let best = &pop[order[0]];
        let mean = pop.iter().map(fitness_of).sum::<f64>() / pop.len() as f64;
        log.generations.push(GenerationStats {
            generation,
            best_fitness: fitness_of(best),
            mean_fitness: mean,
            best_genes: best.genes.clone(),
        });
        if champion.as_ref().is_none_or(|c| fitness_of(best) > fitness_of(c)) {
            champion = Some(best.clone());
        }
        if generation + 1 == cfg.generations {
            break;
        }

        let mut rng = stream(cfg.rng_seed, generation as u64 + 1);
        let mut next: Vec<Genome> = order[..cfg.elitism_count].iter().map(|&i| pop[i].clone()).collect();
        while next.len() < cfg.population_size {
            let a = select_tournament(&pop, cfg.tournament_size, &mut rng);
            let b = select_tournament(&pop, cfg.tournament_size, &mut rng);
            let (c1, c2) = crossover(&pop[a], &pop[b], cfg.crossover_probability, &mut rng)?;
            next.push(mutate(&c1, cfg, &mut rng));
            if next.len() < cfg.population_size {
                next.push(mutate(&c2, cfg, &mut rng));
            }
        }
        pop = next;
    }

    // generations >= 1 is validated, so a champion exists.
    Ok((champion.unwrap_or_else(|| Genome::new(vec![])), log))
}

/// Evolves a homogeneous network deployment against the scenario's collective fitness.
pub fn run_evolution(
    cfg: &EvolutionConfig,
    spec: &NetworkSpec,
    scenario: &ScenarioSpec,
    weights: &FitnessWeights,
) -> Result<(Genome, EvolutionLog), EvolutionError> {
    scenario.validate().map_err(SimError::from)?;
    let evaluator = ScenarioEvaluator {
        scenario: scenario.clone(),
        spec: *spec,
        weights: *weights,
    };
    evolve(cfg, spec, &evaluator)
}
