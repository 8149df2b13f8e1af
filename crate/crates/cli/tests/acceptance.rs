//! Acceptance gate. Runs every criterion, prints one line each, and exits
//! non-zero if any fails.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use lumenloop_core::dsl::{
    builtin_program, builtin_source, evaluate, format_program, parse_source, validate, EvalContext, BUILTIN_PROGRAMS,
};
use lumenloop_core::metrics::{
    compute_fitness, derive_fitness_weights, FitnessWeights, MetricPercentages, ResultRow,
};
use lumenloop_core::neuro::network::{activate, network_inputs};
use lumenloop_core::neuro::{
    evaluate_population, evolve, init_population, EvolutionConfig, EvolutionError, FitnessEvaluator, NetworkSpec,
    ScenarioEvaluator,
};
use lumenloop_core::scenario::{builtin_scenario, PoleId, ScenarioSpec};
use lumenloop_core::sim::{
    run_simulation, ActuatorCommand, ConstantController, Controller, ControllerFault, SensorReading,
    SimulationOutcome,
};
use lumenloop_core::simulate_program;
use lumenloop_llm::prompt::render_metrics;
use lumenloop_llm::{
    build_initial_prompt, default_dsl_reference, describe_scenario, run_loop, CalibrationStub, LoopConfig,
    LoopStatus, Outcome, ReplayProvider,
};
use lumenloop_testkit::{random_program, random_reading, rng, two_pole_line, NativeBaseline, PROGRAM_CORPUS};

type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Rows as printed in the published tables, read from the shipped fixture.
fn table_rows() -> Vec<(String, ResultRow)> {
    let mut reader = csv::Reader::from_path(manifest_dir().join("fixtures/reference_rows.csv")).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            let f = |i: usize| r[i].parse::<f64>().unwrap();
            (
                r[0].to_string(),
                ResultRow {
                    energy: f(1),
                    people: f(2),
                    trip: f(3),
                    fitness: f(4),
                },
            )
        })
        .collect()
}

fn criterion_1() -> Check {
    let rows = table_rows();
    ensure(rows.len() == 10, || format!("expected 10 table rows, found {}", rows.len()))?;
    let w = FitnessWeights::default();
    for (label, r) in &rows {
        let got = compute_fitness(
            &MetricPercentages {
                energy_pct: r.energy,
                people_pct: r.people,
                trip_pct: r.trip,
            },
            &w,
        );
        ensure((got - r.fitness).abs() <= 0.03, || format!("{label}: recomputed {got}, printed {}", r.fitness))?;
    }
    Ok(())
}

fn criterion_2() -> Check {
    let rows: Vec<ResultRow> = table_rows().into_iter().map(|(_, r)| r).collect();
    let fit = derive_fitness_weights(&rows).map_err(|e| e.to_string())?;
    let w = fit.weights;
    ensure(
        (w.w_people - 1.0).abs() <= 0.01 && (w.w_energy - 0.4).abs() <= 0.01 && (w.w_trip - 0.6).abs() <= 0.01,
        || format!("least-squares weights {w:?}"),
    )?;
    ensure(fit.max_residual < 0.03, || format!("max residual {}", fit.max_residual))?;
    // Iterations 2 and 3 of the small scenario share people and trip.
    let (a, b) = (rows[1], rows[2]);
    let w_energy = (b.fitness - a.fitness) / (a.energy - b.energy);
    ensure((w_energy - 0.4).abs() < 1e-9, || format!("pair estimate {w_energy}"))
}

struct Beacon;
impl Controller for Beacon {
    fn decide(&mut self, r: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        Ok(ActuatorCommand {
            light: 0.0,
            listen: true,
            broadcast: if r.tick == 2 { 0.7 } else { 0.0 },
        })
    }
}

struct Listener(bool);
impl Controller for Listener {
    fn decide(&mut self, _: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        Ok(ActuatorCommand {
            light: 0.0,
            listen: self.0,
            broadcast: 0.0,
        })
    }
}

fn constant(s: &ScenarioSpec, light: f64) -> SimulationOutcome {
    let f = move |_: PoleId| {
        ConstantController(ActuatorCommand {
            light,
            listen: false,
            broadcast: 0.0,
        })
    };
    run_simulation(s, &f, &FitnessWeights::default(), false).unwrap()
}

fn criterion_4() -> Check {
    let w = FitnessWeights::default();
    let builtins = [builtin_scenario("scenario1").unwrap(), builtin_scenario("scenario2").unwrap()];
    for s in &builtins {
        let p = Arc::new(builtin_program("iteration3").unwrap());
        let a = simulate_program(s, &p, &w, true).unwrap();
        let b = simulate_program(s, &p, &w, true).unwrap();
        ensure(a == b && a.metrics.fitness.to_bits() == b.metrics.fitness.to_bits(), || {
            format!("{}: repeated runs differ", s.name)
        })?;

        let e: Vec<f64> = [0.2, 0.5, 1.0].iter().map(|&l| constant(s, l).metrics.energy_pct).collect();
        ensure(e[0] < e[1] && e[1] < e[2], || format!("{}: energy not monotone {e:?}", s.name))?;

        let full = constant(s, 1.0).metrics;
        ensure(full.people_pct == 100.0, || format!("{}: full light people_pct {}", s.name, full.people_pct))?;
    }

    let mut line = two_pole_line(6);
    line.people.clear();
    for listening in [true, false] {
        let f = move |pole: PoleId| -> Box<dyn Controller> {
            if pole == 0 {
                Box::new(Beacon)
            } else {
                Box::new(Listener(listening))
            }
        };
        let out = run_simulation(&line, &f, &w, true).unwrap();
        let seen: Vec<f64> = out.trace.unwrap().iter().map(|t| t.poles[1].reading.signal).collect();
        let expected = if listening { vec![0.0, 0.0, 0.0, 0.7, 0.0, 0.0] } else { vec![0.0; 6] };
        ensure(seen == expected, || format!("signal seen by listener={listening}: {seen:?}"))?;
    }

    let dark = constant(&two_pole_line(10), 0.0).metrics;
    ensure(dark.people_pct == 0.0 && dark.trip_pct == 100.0, || format!("all-off on the two-pole line: {dark:?}"))
}

fn criterion_5() -> Check {
    let mut corpus: Vec<&str> = PROGRAM_CORPUS.to_vec();
    corpus.extend(BUILTIN_PROGRAMS.iter().map(|n| builtin_source(n).unwrap()));
    ensure(corpus.len() >= 20, || "corpus too small".into())?;
    for src in &corpus {
        let p = parse_source(src).map_err(|e| format!("{src}: {e}"))?;
        let again = parse_source(&format_program(&p)).map_err(|e| e.to_string())?;
        ensure(again == p, || format!("round trip changed {src}"))?;
    }

    let mut r = rng(5);
    for _ in 0..10_000 {
        let p = random_program(&mut r);
        ensure(validate(&p).iter().all(|d| !d.is_error()), || format!("generator produced invalid {}", format_program(&p)))?;
        let mut ctx = EvalContext::for_program(&p);
        let cmd = evaluate(&p, &random_reading(&mut r), &mut ctx);
        ensure(
            (0.0..=1.0).contains(&cmd.light) && (0.0..=1.0).contains(&cmd.broadcast)
                && ctx.memory.values().all(|v| v.is_finite()),
            || format!("unclamped output {cmd:?} from {}", format_program(&p)),
        )?;
    }

    for name in BUILTIN_PROGRAMS {
        let p = builtin_program(name).unwrap();
        for _ in 0..1000 {
            let mut ctx = EvalContext::for_program(&p);
            let mut native = NativeBaseline::new(name);
            for _ in 0..20 {
                let s = random_reading(&mut r);
                let want = native.decide(&s).unwrap();
                let got = evaluate(&p, &s, &mut ctx);
                ensure(got == want, || format!("{name}: interpreter {got:?} vs oracle {want:?} on {s:?}"))?;
            }
        }
    }
    Ok(())
}

struct Imitation {
    spec: NetworkSpec,
    readings: Vec<SensorReading>,
}

impl FitnessEvaluator for Imitation {
    fn fitness(&self, genes: &[f64]) -> Result<f64, EvolutionError> {
        let hits = self
            .readings
            .iter()
            .filter(|s| (activate(&self.spec, genes, &network_inputs(s))[0] >= 0.5) == s.motion)
            .count();
        Ok(hits as f64 / self.readings.len() as f64)
    }
}

fn criterion_6() -> Check {
    let spec = NetworkSpec::default();
    let mut r = rng(2718);
    let task = Imitation {
        spec,
        readings: (0..200).map(|_| random_reading(&mut r)).collect(),
    };

    let cfg = EvolutionConfig {
        population_size: 16,
        generations: 50,
        rng_seed: 3,
        ..Default::default()
    };
    let (_, log) = evolve(&cfg, &spec, &task).map_err(|e| e.to_string())?;
    ensure(log.generations.len() == 50, || "log length".into())?;
    ensure(log.generations.windows(2).all(|w| w[1].best_fitness >= w[0].best_fitness), || {
        "best-so-far decreased".into()
    })?;

    let evaluator = ScenarioEvaluator {
        scenario: builtin_scenario("scenario1").unwrap(),
        spec,
        weights: FitnessWeights::default(),
    };
    let mut a = init_population(&EvolutionConfig { population_size: 20, ..Default::default() }, &spec);
    let mut b = a.clone();
    evaluate_population(&mut a, &evaluator, true).map_err(|e| e.to_string())?;
    evaluate_population(&mut b, &evaluator, false).map_err(|e| e.to_string())?;
    let fa: Vec<u64> = a.iter().map(|g| g.fitness.unwrap().to_bits()).collect();
    let fb: Vec<u64> = b.iter().map(|g| g.fitness.unwrap().to_bits()).collect();
    ensure(fa == fb, || "parallel and sequential fitness differ".into())?;

    let mut converged = Vec::new();
    for seed in 1..=5 {
        let cfg = EvolutionConfig {
            population_size: 30,
            generations: 100,
            rng_seed: seed,
            ..Default::default()
        };
        let (best, _) = evolve(&cfg, &spec, &task).map_err(|e| e.to_string())?;
        converged.push(best.fitness.unwrap());
    }
    let ok = converged.iter().filter(|&&f| f >= 0.95).count();
    ensure(ok >= 4, || format!("imitation agreement per seed {converged:?}"))
}

fn llm_fixture(name: &str) -> ReplayProvider {
    let path = manifest_dir().join("../llm/fixtures").join(name);
    ReplayProvider::from_jsonl(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn system_prompt() -> String {
    let s = builtin_scenario("scenario1").unwrap();
    build_initial_prompt(&describe_scenario(&s, &FitnessWeights::default()), &default_dsl_reference()).unwrap()
}

fn criterion_7() -> Check {
    let mut provider = llm_fixture("three_iter.jsonl");
    let cfg = LoopConfig {
        provider: "replay".into(),
        ..Default::default()
    };
    let t = run_loop(&cfg, &mut provider, &CalibrationStub::reference(), &system_prompt(), None)
        .map_err(|e| e.to_string())?;
    ensure(t.status == LoopStatus::ThresholdMet && t.records.len() == 3, || {
        format!("status {:?} after {} iterations", t.status, t.records.len())
    })?;
    let fitness: Vec<f64> = t.records.iter().map(|r| r.metrics.unwrap().fitness).collect();
    ensure(fitness == [29.49, 61.2, 62.44], || format!("trajectory {fitness:?}"))?;
    ensure(t.records[2].outcome == Outcome::Accepted, || "third record not accepted".into())?;
    for i in 1..3 {
        let rendered = render_metrics(&t.records[i - 1].metrics.unwrap());
        ensure(provider.received[i].messages[1].content.contains(&rendered), || {
            format!("feedback prompt {} lacks the previous metrics", i + 1)
        })?;
    }
    Ok(())
}

fn criterion_8() -> Check {
    let cfg = LoopConfig {
        provider: "replay".into(),
        max_iterations: 1,
        ..Default::default()
    };
    let mut provider = llm_fixture("repair.jsonl");
    let t = run_loop(&cfg, &mut provider, &CalibrationStub::reference(), &system_prompt(), None)
        .map_err(|e| e.to_string())?;
    let r = &t.records[0];
    ensure(r.repair_attempts == 1 && r.program.is_some(), || {
        format!("repair attempts {}, program {:?}", r.repair_attempts, r.program)
    })?;

    let mut provider = llm_fixture("no_block.jsonl");
    let t = run_loop(&cfg, &mut provider, &CalibrationStub::reference(), &system_prompt(), None)
        .map_err(|e| e.to_string())?;
    let r = &t.records[0];
    ensure(r.outcome == Outcome::ParseFailed && r.repair_attempts == cfg.max_repair_attempts, || {
        format!("outcome {:?} after {} repairs", r.outcome, r.repair_attempts)
    })
}

fn criterion_9() -> Check {
    let out_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = Command::new(env!("CARGO_BIN_EXE_lumenloop"))
        .arg("--out-dir")
        .arg(out_dir.path())
        .args(["compare", "--controller"])
        .args(BUILTIN_PROGRAMS)
        .args(["--scenario", "scenario1", "scenario2"])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    ensure(header == ["scenario", "solution", "energy", "people", "trip", "fitness"], || format!("header {header:?}"))?;
    let rows: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    ensure(rows.len() == 10, || format!("{} rows", rows.len()))?;
    let num = |r: &csv::StringRecord, i: usize| r[i].parse::<f64>().unwrap();
    for r in &rows {
        let recomputed = num(r, 3) - 0.4 * num(r, 2) - 0.6 * num(r, 4);
        ensure((recomputed - num(r, 5)).abs() <= 1e-9, || format!("fitness mismatch in {r:?}"))?;
    }
    for scenario in ["scenario1", "scenario2"] {
        let energy = |solution: &str| {
            rows.iter().find(|r| &r[0] == scenario && &r[1] == solution).map(|r| num(r, 2)).unwrap()
        };
        ensure(energy("always_on") > energy("always_off"), || format!("{scenario}: always_on not above always_off"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [(u32, &str, Duration, Option<fn() -> Check>); 9] = [
        (1, "fitness formula reproduces all 10 table rows within 0.03", Duration::from_secs(1), Some(criterion_1)),
        (2, "least-squares weights within 0.01 of (1, 0.4, 0.6); pair check", Duration::from_secs(1), Some(criterion_2)),
        (3, "absolute table metrics need the original geometry; covered by 4-9 instead", Duration::ZERO, None),
        (4, "simulator properties", Duration::from_secs(5), Some(criterion_4)),
        (5, "rule language round trip, totality, oracle equivalence", Duration::from_secs(30), Some(criterion_5)),
        (6, "neuroevolution elitism, parallel equality, imitation", Duration::from_secs(60), Some(criterion_6)),
        (7, "three-iteration replay reaches the threshold", Duration::from_secs(1), Some(criterion_7)),
        (8, "repair path and exhausted repairs", Duration::from_secs(1), Some(criterion_8)),
        (9, "offline compare of 5 controllers on 2 scenarios", Duration::from_secs(10), Some(criterion_9)),
    ];
    let mut failures = 0;
    for (n, what, limit, check) in criteria {
        let Some(check) = check else {
            println!("criterion {n}: N/A   {what}");
            continue;
        };
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let verdict = match result {
            Ok(()) if elapsed <= limit => "PASS".to_string(),
            Ok(()) => format!("FAIL  over time limit {limit:?}"),
            Err(e) => format!("FAIL  {e}"),
        };
        if verdict != "PASS" {
            failures += 1;
        }
        println!("criterion {n}: {verdict:<5} {what} ({} ms)", elapsed.as_millis());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
