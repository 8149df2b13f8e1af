//! Feedforward network controllers and the GA that evolves their weights.

pub mod ga;
pub mod network;

pub use ga::{
    crossover, evaluate_population, evolve, init_population, mutate, run_evolution, select_tournament,
    EvolutionConfig, EvolutionError, EvolutionLog, FitnessEvaluator, GenerationStats, ScenarioEvaluator,
};
pub use network::{forward, Genome, GenomeDocument, NetworkError, NetworkSpec, NeuralController};
