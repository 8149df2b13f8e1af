use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use lumenloop_core::metrics::{compute_fitness, derive_fitness_weights, FitnessWeights, ResultRow, SimulationMetrics};
use lumenloop_core::neuro::{run_evolution, EvolutionConfig, GenomeDocument, NetworkSpec};
use lumenloop_llm::{
    build_initial_prompt, default_dsl_reference, describe_scenario, run_loop, CalibrationStub, HttpProvider,
    JsonlSink, LoopConfig, LoopStatus, ProgramEvaluator, Provider, ReplayProvider, SimulationEvaluator,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;
use crate::resolve::{self, ControllerSource};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_PROVIDER_FAILURE: u8 = 3;
pub const EXIT_BUDGET_EXHAUSTED: u8 = 4;

const REFERENCE_TABLE: &str = include_str!("../fixtures/reference_rows.csv");

/// Everything needed to re-execute a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Command,
    pub out_dir: PathBuf,
    pub weights: FitnessWeights,
    pub resolved: Value,
    pub outputs: Vec<PathBuf>,
}

struct Ctx {
    out_dir: PathBuf,
    weights: FitnessWeights,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write_manifest(&self, command: &Command, resolved: Value, outputs: Vec<PathBuf>) -> Result<()> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("creating {}", self.out_dir.display()))?;
        let m = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.clone(),
            out_dir: self.out_dir.clone(),
            weights: self.weights,
            resolved,
            outputs,
        };
        let path = self.path("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

pub fn run(cli: Cli) -> Result<u8> {
    let ctx = Ctx {
        out_dir: cli.out_dir,
        weights: cli.weights,
    };
    dispatch(&ctx, &cli.command)
}

fn dispatch(ctx: &Ctx, command: &Command) -> Result<u8> {
    match command {
        Command::Simulate(a) => simulate(ctx, command, a),
        Command::Evolve(a) => evolve(ctx, command, a),
        Command::GptLoop(a) => gpt_loop(ctx, command, a),
        Command::Compare(a) => compare(ctx, command, a),
        Command::FitnessCheck(a) => fitness_check(ctx, command, a),
        Command::Rerun(a) => rerun(a),
    }
}

fn rerun(a: &RerunArgs) -> Result<u8> {
    let text = fs::read_to_string(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("{}: malformed manifest", a.manifest.display()))?;
    if matches!(m.command, Command::Rerun(_)) {
        bail!("a manifest cannot describe another rerun");
    }
    let ctx = Ctx {
        out_dir: m.out_dir,
        weights: m.weights,
    };
    dispatch(&ctx, &m.command)
}

/// One CSV line of results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub solution: String,
    pub energy: f64,
    pub people: f64,
    pub trip: f64,
    pub fitness: f64,
}

impl ComparisonRow {
    fn new(scenario: &str, solution: &str, m: &SimulationMetrics) -> Self {
        Self {
            scenario: scenario.to_string(),
            solution: solution.to_string(),
            energy: m.energy_pct,
            people: m.people_pct,
            trip: m.trip_pct,
            fitness: m.fitness,
        }
    }
}

fn rows_csv(rows: &[ComparisonRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["scenario", "solution", "energy", "people", "trip", "fitness"])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn print_stdout(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn simulate(ctx: &Ctx, command: &Command, a: &SimulateArgs) -> Result<u8> {
    let (mut scenario, scenario_origin) = resolve::scenario(&a.scenario)?;
    if let Some(seed) = a.seed {
        scenario.rng_seed = seed;
    }
    let controller = resolve::controller(&a.controller)?;
    ctx.write_manifest(
        command,
        json!({
            "scenario": scenario_origin,
            "controller": controller.origin,
            "rng_seed": scenario.rng_seed,
        }),
        a.trace.iter().cloned().collect(),
    )?;
    let outcome = controller.source.simulate(&scenario, &ctx.weights, a.trace.is_some())?;
    if let (Some(path), Some(trace)) = (&a.trace, &outcome.trace) {
        write_jsonl(path, trace)?;
    }
    print_stdout(&rows_csv(&[ComparisonRow::new(&a.scenario, &controller.label, &outcome.metrics)])?)?;
    Ok(EXIT_OK)
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn evolve(ctx: &Ctx, command: &Command, a: &EvolveArgs) -> Result<u8> {
    let (scenario, scenario_origin) = resolve::scenario(&a.scenario)?;
    let cfg = EvolutionConfig {
        population_size: a.population,
        generations: a.generations,
        tournament_size: a.tournament,
        elitism_count: a.elitism,
        crossover_probability: a.crossover,
        mutation_rate: a.mutation_rate,
        mutation_sigma: a.mutation_sigma,
        init_range: a.init_range,
        rng_seed: a.seed,
        parallel: !a.sequential,
    };
    cfg.validate()?;
    if a.hidden == 0 {
        bail!("--hidden must be at least 1");
    }
    let spec = NetworkSpec { n_hidden: a.hidden };
    let log_path = ctx.path("evolution.csv");
    let genome_path = ctx.path("best_genome.json");
    ctx.write_manifest(
        command,
        json!({ "scenario": scenario_origin, "evolution": cfg, "network": { "n_hidden": spec.n_hidden } }),
        vec![log_path.clone(), genome_path.clone()],
    )?;
    let (best, log) = run_evolution(&cfg, &spec, &scenario, &ctx.weights)?;
    fs::write(&log_path, log.to_csv())?;
    let doc = GenomeDocument::new(&spec, &best.genes);
    fs::write(&genome_path, serde_json::to_string_pretty(&doc)? + "\n")?;
    let m = ControllerSource::Network(spec, std::sync::Arc::new(best))
        .simulate(&scenario, &ctx.weights, false)?
        .metrics;
    print_stdout(&rows_csv(&[ComparisonRow::new(&a.scenario, "neuroevolution", &m)])?)?;
    Ok(EXIT_OK)
}

fn gpt_loop(ctx: &Ctx, command: &Command, a: &GptLoopArgs) -> Result<u8> {
    let (scenario, scenario_origin) = resolve::scenario(&a.scenario)?;
    let cfg = LoopConfig {
        fitness_threshold: a.threshold,
        max_iterations: a.max_iterations,
        max_repair_attempts: a.max_repairs,
        provider: if a.replay.is_some() { "replay" } else { "http" }.into(),
        model: a.model.clone(),
        temperature: a.temperature,
        request_timeout_secs: a.timeout_secs,
        scenario: a.scenario.clone(),
    };
    cfg.validate()?;
    let mut provider: Box<dyn Provider> = match &a.replay {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Box::new(ReplayProvider::from_jsonl(&text).with_context(|| format!("{}", path.display()))?)
        }
        None => Box::new(
            HttpProvider::from_env(&a.endpoint_path, Duration::from_secs(a.timeout_secs)).map_err(|e| {
                anyhow::anyhow!(
                    "{e}: export {} (and optionally {}) to call a model, or pass --replay FILE to run offline",
                    lumenloop_llm::http::API_KEY_VAR,
                    lumenloop_llm::http::API_BASE_VAR
                )
            })?,
        ),
    };
    let evaluator: Box<dyn ProgramEvaluator> = match a.evaluator {
        EvaluatorKind::Simulation => Box::new(SimulationEvaluator {
            scenario: scenario.clone(),
            weights: ctx.weights,
        }),
        EvaluatorKind::CalibrationStub => Box::new(CalibrationStub::reference()),
    };
    let system = build_initial_prompt(&describe_scenario(&scenario, &ctx.weights), &default_dsl_reference())?;

    let transcript_path = ctx.path("transcript.jsonl");
    let controller_path = ctx.path("controller.rules");
    ctx.write_manifest(
        command,
        json!({ "scenario": scenario_origin, "loop": cfg }),
        vec![transcript_path.clone(), controller_path.clone()],
    )?;
    let file = File::create(&transcript_path).with_context(|| format!("creating {}", transcript_path.display()))?;
    let mut sink = JsonlSink::new(BufWriter::new(file));
    let t = run_loop(&cfg, provider.as_mut(), evaluator.as_ref(), &system, Some(&mut sink))?;

    if let Some(program) = t.best().and_then(|r| r.program.as_deref()) {
        fs::write(&controller_path, format!("{program}\n"))?;
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "outcome", "energy", "people", "trip", "fitness"])?;
    for r in &t.records {
        let outcome = serde_json::to_value(r.outcome)?.as_str().unwrap_or_default().to_string();
        let m = r.metrics.map(|m| [m.energy_pct, m.people_pct, m.trip_pct, m.fitness].map(|x| x.to_string()));
        let cells = m.unwrap_or_default();
        w.write_record([r.index.to_string(), outcome].iter().chain(cells.iter()))?;
    }
    print_stdout(&String::from_utf8(w.into_inner()?)?)?;
    Ok(match t.status {
        LoopStatus::ThresholdMet => EXIT_OK,
        LoopStatus::IterationBudgetExhausted => {
            eprintln!("no controller reached fitness {} in {} iterations", cfg.fitness_threshold, cfg.max_iterations);
            EXIT_BUDGET_EXHAUSTED
        }
        LoopStatus::ProviderFailure => {
            eprintln!("provider failure: {}", t.failure.as_deref().unwrap_or("unknown"));
            EXIT_PROVIDER_FAILURE
        }
    })
}

fn compare(ctx: &Ctx, command: &Command, a: &CompareArgs) -> Result<u8> {
    let scenarios = a.scenarios.iter().map(|s| resolve::scenario(s)).collect::<Result<Vec<_>>>()?;
    let controllers = a.controllers.iter().map(|c| resolve::labelled_controller(c)).collect::<Result<Vec<_>>>()?;
    ctx.write_manifest(
        command,
        json!({
            "scenarios": scenarios.iter().map(|(_, o)| o.clone()).collect::<Vec<_>>(),
            "controllers": controllers.iter().map(|c| json!({ "label": c.label, "source": c.origin })).collect::<Vec<_>>(),
        }),
        a.output.iter().cloned().collect(),
    )?;
    let mut rows = Vec::new();
    for (name, (scenario, _)) in a.scenarios.iter().zip(&scenarios) {
        for c in &controllers {
            let m = c.source.simulate(scenario, &ctx.weights, false)?.metrics;
            rows.push(ComparisonRow::new(name, &c.label, &m));
        }
    }
    let text = rows_csv(&rows)?;
    if let Some(path) = &a.output {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    print_stdout(&text)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Deserialize)]
struct TableRow {
    label: String,
    energy: f64,
    people: f64,
    trip: f64,
    fitness: f64,
}

fn read_table(text: &str, source: &str) -> Result<Vec<TableRow>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, r) in reader.deserialize::<TableRow>().enumerate() {
        let row = r.with_context(|| format!("{source}: row {}", i + 1))?;
        if ![row.energy, row.people, row.trip, row.fitness].iter().all(|x| x.is_finite()) {
            bail!("{source}: row {} has a non-finite value", i + 1);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{source}: the table has no rows");
    }
    Ok(rows)
}

fn fitness_check(ctx: &Ctx, command: &Command, a: &FitnessCheckArgs) -> Result<u8> {
    let (text, origin) = if a.table == "reference" {
        (REFERENCE_TABLE.to_string(), json!({ "builtin": "reference" }))
    } else {
        let text = fs::read_to_string(&a.table).with_context(|| format!("reading {}", a.table))?;
        (text, json!({ "file": a.table }))
    };
    if !(a.tolerance.is_finite() && a.tolerance >= 0.0) {
        bail!("--tolerance must be a non-negative number");
    }
    let rows = read_table(&text, &a.table)?;
    ctx.write_manifest(command, json!({ "table": origin, "tolerance": a.tolerance }), vec![])?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "expected", "recomputed", "residual"])?;
    let mut failed = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        let got = compute_fitness(
            &lumenloop_core::metrics::MetricPercentages {
                energy_pct: r.energy,
                people_pct: r.people,
                trip_pct: r.trip,
            },
            &ctx.weights,
        );
        let residual = (got - r.fitness).abs();
        max_residual = max_residual.max(residual);
        w.write_record([r.label.clone(), r.fitness.to_string(), got.to_string(), residual.to_string()])?;
        if residual > a.tolerance {
            failed.push(format!(
                "row {} ({}): expected {}, recomputed {got:.4}, residual {residual:.4}",
                i + 1,
                r.label,
                r.fitness
            ));
        }
    }
    print_stdout(&String::from_utf8(w.into_inner()?)?)?;
    eprintln!("max residual {max_residual:.4} (tolerance {})", a.tolerance);
    let results: Vec<ResultRow> = rows
        .iter()
        .map(|r| ResultRow {
            energy: r.energy,
            people: r.people,
            trip: r.trip,
            fitness: r.fitness,
        })
        .collect();
    if let Ok(fit) = derive_fitness_weights(&results) {
        eprintln!(
            "least-squares weights: people {:.4}, energy {:.4}, trip {:.4}",
            fit.weights.w_people, fit.weights.w_energy, fit.weights.w_trip
        );
    }
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        for f in &failed {
            eprintln!("{f}");
        }
        Ok(EXIT_CHECK_FAILED)
    }
}
