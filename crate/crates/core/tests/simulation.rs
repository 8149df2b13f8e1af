use std::sync::Arc;

use lumenloop_core::dsl::{builtin_program, parse_source};
use lumenloop_core::metrics::FitnessWeights;
use lumenloop_core::neuro::{Genome, NetworkSpec, NeuralController};
use lumenloop_core::scenario::{builtin_scenario, PoleId, ScenarioSpec};
use lumenloop_core::sim::{
    run_simulation, ActuatorCommand, ConstantController, Controller, ControllerFault, SensorReading,
    SimulationOutcome,
};
use lumenloop_core::simulate_program;
use lumenloop_testkit::{random_scenario, rng, two_pole_line};
use proptest::prelude::*;

fn run_const(s: &ScenarioSpec, light: f64, trace: bool) -> SimulationOutcome {
    let factory = move |_: PoleId| {
        ConstantController(ActuatorCommand {
            light,
            listen: true,
            broadcast: 0.0,
        })
    };
    run_simulation(s, &factory, &FitnessWeights::default(), trace).unwrap()
}

fn run_src(s: &ScenarioSpec, src: &str) -> SimulationOutcome {
    let program = Arc::new(parse_source(src).unwrap());
    simulate_program(s, &program, &FitnessWeights::default(), true).unwrap()
}

#[test]
fn full_light_lets_everyone_finish_on_builtins() {
    for name in ["scenario1", "scenario2"] {
        let s = builtin_scenario(name).unwrap();
        let m = run_const(&s, 1.0, false).metrics;
        assert_eq!(m.people_pct, 100.0, "{name}");
        assert_eq!(m.energy_pct, 100.0, "{name}");
    }
}

#[test]
fn darkness_strands_everyone() {
    let m = run_const(&two_pole_line(10), 0.0, false).metrics;
    assert_eq!((m.people_pct, m.energy_pct, m.trip_pct), (0.0, 0.0, 100.0));

    for name in ["scenario1", "scenario2"] {
        let s = builtin_scenario(name).unwrap();
        let m = run_const(&s, 0.0, false).metrics;
        assert_eq!(m.people_pct, 0.0);
        let waited: u32 = s.people.iter().map(|p| s.max_ticks - p.start_tick).sum();
        let expected = 100.0 * f64::from(waited) / (s.people.len() as f64 * f64::from(s.max_ticks));
        assert!((m.trip_pct - expected).abs() < 1e-12, "{name}: {} vs {expected}", m.trip_pct);
    }
}

#[test]
fn energy_grows_with_constant_level() {
    for name in ["scenario1", "scenario2"] {
        let s = builtin_scenario(name).unwrap();
        let e: Vec<f64> = [0.2, 0.5, 1.0].iter().map(|&l| run_const(&s, l, false).metrics.energy_pct).collect();
        assert!(e[0] < e[1] && e[1] < e[2], "{name}: {e:?}");
    }
}

/// Pole 0 broadcasts 0.8 exactly on tick 3; pole 1 runs `listen_rule`.
struct Beacon;
impl Controller for Beacon {
    fn decide(&mut self, r: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
        Ok(ActuatorCommand {
            light: 0.0,
            listen: true,
            broadcast: if r.tick == 3 { 0.8 } else { 0.0 },
        })
    }
}

fn signal_seen_by_pole1(listen_rule: fn(u32) -> bool) -> Vec<f64> {
    struct Listener(fn(u32) -> bool);
    impl Controller for Listener {
        fn decide(&mut self, r: &SensorReading) -> Result<ActuatorCommand, ControllerFault> {
            Ok(ActuatorCommand {
                light: 0.0,
                listen: (self.0)(r.tick),
                broadcast: 0.0,
            })
        }
    }
    let mut s = two_pole_line(8);
    s.people.clear();
    let factory = move |pole: PoleId| -> Box<dyn Controller> {
        if pole == 0 {
            Box::new(Beacon)
        } else {
            Box::new(Listener(listen_rule))
        }
    };
    let out = run_simulation(&s, &factory, &FitnessWeights::default(), true).unwrap();
    out.trace.unwrap().iter().map(|t| t.poles[1].reading.signal).collect()
}

#[test]
fn broadcasts_arrive_one_tick_later_only_when_listening() {
    let always = signal_seen_by_pole1(|_| true);
    assert_eq!(always, vec![0.0, 0.0, 0.0, 0.0, 0.8, 0.0, 0.0, 0.0]);
    let never = signal_seen_by_pole1(|_| false);
    assert!(never.iter().all(|&s| s == 0.0));
    // Listening switched off by the command issued on tick 3 blocks the tick-4 reading.
    let deaf_at_3 = signal_seen_by_pole1(|t| t != 3);
    assert!(deaf_at_3.iter().all(|&s| s == 0.0));
}

#[test]
fn zero_genome_matches_constant_program() {
    let s = builtin_scenario("scenario1").unwrap();
    let spec = NetworkSpec::default();
    let genome = Arc::new(Genome::new(vec![0.0; spec.genome_length()]));
    let factory = |_: PoleId| NeuralController::new(spec, Arc::clone(&genome)).unwrap();
    let nn = run_simulation(&s, &factory, &FitnessWeights::default(), false).unwrap();
    let dsl = run_src(&s, "light = 0.5  broadcast = 0.5  listen = 1");
    assert_eq!(nn.metrics, dsl.metrics);
}

#[test]
fn builtins_run_on_both_scenarios() {
    for name in ["scenario1", "scenario2"] {
        let s = builtin_scenario(name).unwrap();
        let on = run_src(&s, lumenloop_core::dsl::builtins::ALWAYS_ON).metrics;
        let off = run_src(&s, lumenloop_core::dsl::builtins::ALWAYS_OFF).metrics;
        assert!(on.energy_pct > off.energy_pct);
        for b in ["iteration1", "iteration2", "iteration3"] {
            let p = Arc::new(builtin_program(b).unwrap());
            let m = simulate_program(&s, &p, &FitnessWeights::default(), false).unwrap().metrics;
            assert!(m.fitness.is_finite());
        }
    }
}

#[test]
fn rule_controllers_keep_private_state() {
    // Each pole counts its own ticks; a shared counter would run n_poles times faster.
    let s = builtin_scenario("scenario1").unwrap();
    let out = run_src(&s, "mem.n = mem.n + 1  light = mem.n / 100");
    let last = out.trace.unwrap().pop().unwrap();
    assert!(last.poles.iter().all(|p| p.command.light == 0.6));
}

fn check_invariants(s: &ScenarioSpec, out: &SimulationOutcome) {
    let m = &out.metrics;
    assert!((0.0..=100.0).contains(&m.energy_pct));
    assert!((0.0..=100.0).contains(&m.trip_pct));
    let n = s.people.len();
    if n > 0 {
        let k = (m.people_pct * n as f64 / 100.0).round();
        assert!((100.0 * k / n as f64 - m.people_pct).abs() < 1e-9);
    } else {
        assert_eq!((m.people_pct, m.trip_pct), (100.0, 0.0));
    }
    let w = FitnessWeights::default();
    assert_eq!(m.fitness, m.people_pct - w.w_energy * m.energy_pct - w.w_trip * m.trip_pct);
    let trace = out.trace.as_ref().unwrap();
    assert_eq!(trace.len(), s.max_ticks as usize);
    for t in trace {
        for p in &t.poles {
            if p.reading.motion {
                assert_eq!(p.reading.ticks_since_motion, 0);
            }
            assert!((0.0..=1.0).contains(&p.command.light));
            assert!((0.0..=1.0).contains(&p.command.broadcast));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_scenarios_hold_invariants(seed in any::<u64>(), light in 0.0f64..=1.0) {
        let s = random_scenario(&mut rng(seed));
        s.validate().unwrap();
        let a = run_src(&s, &format!("light = {light:?}  broadcast = motion  if signal > 0 then light = 1 end"));
        let b = run_src(&s, &format!("light = {light:?}  broadcast = motion  if signal > 0 then light = 1 end"));
        check_invariants(&s, &a);
        prop_assert_eq!(&a, &b);
        let it3 = Arc::new(builtin_program("iteration3").unwrap());
        let c = simulate_program(&s, &it3, &FitnessWeights::default(), true).unwrap();
        check_invariants(&s, &c);
    }

    #[test]
    fn full_light_feasibility(seed in any::<u64>()) {
        let mut s = random_scenario(&mut rng(seed));
        let layout = s.layout().unwrap();
        // Keep only people whose route fits in the remaining ticks.
        let fits: Vec<bool> = s.people.iter().zip(&layout.routes)
            .map(|(p, r)| (r.len() - 1) as u32 <= s.max_ticks - p.start_tick)
            .collect();
        let mut i = 0;
        s.people.retain(|_| { i += 1; fits[i - 1] });
        prop_assert_eq!(run_const(&s, 1.0, false).metrics.people_pct, 100.0);
    }

    #[test]
    fn energy_monotone_in_constant_light(seed in any::<u64>(), a in 0.0f64..1.0, gap in 0.001f64..0.5) {
        let s = random_scenario(&mut rng(seed));
        let b = (a + gap).min(1.0);
        prop_assume!(a < b);
        prop_assert!(run_const(&s, a, false).metrics.energy_pct < run_const(&s, b, false).metrics.energy_pct);
    }
}
