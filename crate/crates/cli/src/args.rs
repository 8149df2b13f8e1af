use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lumenloop_core::metrics::FitnessWeights;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "lumenloop", version, about = "Streetlight controller experiments: simulate, evolve, and language-model loops")]
pub struct Cli {
    /// Directory for the run manifest and result files.
    #[arg(long, global = true, default_value = "lumenloop-out")]
    pub out_dir: PathBuf,
    /// Fitness weights as PEOPLE,ENERGY,TRIP.
    #[arg(long, global = true, default_value = "1,0.4,0.6", value_parser = parse_weights)]
    pub weights: FitnessWeights,
    #[command(subcommand)]
    pub command: Command,
}

fn parse_weights(s: &str) -> Result<FitnessWeights, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [w_people, w_energy, w_trip] if parts.iter().all(|w| w.is_finite()) => Ok(FitnessWeights {
            w_people,
            w_energy,
            w_trip,
        }),
        _ => Err("expected three finite numbers PEOPLE,ENERGY,TRIP".into()),
    }
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    /// Run one controller on one scenario and print its metrics row.
    Simulate(SimulateArgs),
    /// Evolve a neural controller with the genetic algorithm.
    Evolve(EvolveArgs),
    /// Ask a language model for controllers until the fitness threshold is met.
    GptLoop(GptLoopArgs),
    /// Score every controller on every scenario as CSV.
    Compare(CompareArgs),
    /// Recompute fitness for a table of result rows.
    FitnessCheck(FitnessCheckArgs),
    /// Re-execute the run described by a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Built-in scenario name or scenario JSON file.
    #[arg(long, default_value = "scenario1")]
    pub scenario: String,
    /// Built-in controller name, rule file, or genome JSON file.
    #[arg(long)]
    pub controller: String,
    /// Overrides the scenario's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the per-tick trace as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvolveArgs {
    #[arg(long, default_value = "scenario1")]
    pub scenario: String,
    #[arg(long, default_value_t = 200)]
    pub generations: usize,
    #[arg(long, default_value_t = 50)]
    pub population: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub tournament: usize,
    #[arg(long, default_value_t = 1)]
    pub elitism: usize,
    #[arg(long, default_value_t = 0.9)]
    pub crossover: f64,
    #[arg(long, default_value_t = 0.05)]
    pub mutation_rate: f64,
    #[arg(long, default_value_t = 0.3)]
    pub mutation_sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub init_range: f64,
    #[arg(long, default_value_t = 6)]
    pub hidden: usize,
    /// Evaluate candidates on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    /// Score programs in the simulator.
    Simulation,
    /// Fixed scores for the three built-in iteration programs (offline testing).
    CalibrationStub,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GptLoopArgs {
    #[arg(long, default_value = "scenario1")]
    pub scenario: String,
    #[arg(long, default_value_t = 62.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 10)]
    pub max_iterations: u32,
    #[arg(long, default_value_t = 2)]
    pub max_repairs: u32,
    #[arg(long, default_value = "gpt-4")]
    pub model: String,
    #[arg(long, default_value_t = 0.7)]
    pub temperature: f64,
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    /// Chat-completion path appended to LUMENLOOP_API_BASE.
    #[arg(long, default_value = "/chat/completions")]
    pub endpoint_path: String,
    /// Replay canned responses from a JSONL file instead of calling a model.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = EvaluatorKind::Simulation)]
    pub evaluator: EvaluatorKind,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    /// Controllers as REF or LABEL=REF.
    #[arg(long = "controller", required = true, num_args = 1..)]
    pub controllers: Vec<String>,
    #[arg(long = "scenario", required = true, num_args = 1..)]
    pub scenarios: Vec<String>,
    /// Also write the CSV here.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitnessCheckArgs {
    /// CSV with columns label,energy,people,trip,fitness, or `reference` for the shipped table.
    #[arg(default_value = "reference")]
    pub table: String,
    #[arg(long, default_value_t = 0.03)]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}
