//! Acceptance suite: one test per criterion, named `criterion_XX_*`. Each
//! prints a `criterion N: PASS` line (visible with `--nocapture`); the
//! heavyweight directional criteria (1-3) share one fixture of thirty
//! desk-scale evolutionary runs and are tagged `slow_` free so the whole
//! suite runs under plain `cargo test`.
//!
//! Fixture scale: population 24, 300 generations, 10 seeds per condition,
//! dt 0.01, 10,000-step trials.

use dyad_core::analysis::{heading_sample_entropy, sample_entropy, AnalysisConfig};
use dyad_core::entropy::Histogram3d;
use dyad_core::experiments::{
    evolve, make_ghost_test, run_trial_ghost, run_trial_interactive, ConditionKind, EvolveConfig,
    GhostTestReport, Playback, PlaybackProvenance, RunResult, TrialSettings, TrialSpec,
    TRIAL_ANGLES,
};
use dyad_core::genome::{
    decode, elite_count, next_generation, AgentParams, Genotype, ScalingSpec,
};
use dyad_core::neural::{ctrnn_step, CtrnnParams, NeuralState, NEURONS, SENSORS};
use dyad_core::physics::{
    resolve_collision, sensor_positions, shadow_factor, shielded_distance, BodyPose,
    PlateauReference, Vec2, AGENT_RADIUS,
};
use dyad_core::rng::derive_rng;
use rand::Rng;
use std::f64::consts::TAU;
use std::sync::OnceLock;

const SEED_COUNT: u64 = 10;

fn fixture_config(condition: ConditionKind, seed: u64) -> EvolveConfig {
    EvolveConfig {
        condition,
        population: 24,
        generations: 300,
        seed,
        trial: TrialSettings {
            dt: 0.01,
            duration_steps: 10_000,
            initial_distance: 20.0,
        },
        burn_in_steps: 0,
        plateau_reference: PlateauReference::EmitterToSensor,
    }
}

struct Fixture {
    interactive: Vec<RunResult>,
    ghost_evolution: Vec<RunResult>,
    isolated: Vec<RunResult>,
    ghost_tests: Vec<GhostTestReport>,
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let parallelism = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        let runs = |condition: ConditionKind, playback: Option<&Playback>| -> Vec<RunResult> {
            (1..=SEED_COUNT)
                .map(|seed| {
                    eprintln!("[fixture] {condition} seed {seed}");
                    evolve(&fixture_config(condition, seed), playback, parallelism, &mut ())
                        .expect("fixture run")
                })
                .collect()
        };

        let interactive = runs(ConditionKind::Interactive, None);
        let isolated = runs(ConditionKind::Isolated, None);

        // Ghost-evolution replays the partner of the best interactive run,
        // one fixed recording for all runs and generations.
        let best = interactive
            .iter()
            .max_by(|a, b| a.best_fitness.total_cmp(&b.best_fitness))
            .expect("ten runs");
        let playback = Playback::from_traces(
            &best.best_evaluation.traces,
            1,
            PlaybackProvenance {
                run_id: format!("fixture-seed-{}", best.config.seed),
                generation: best.history.len() - 1,
                agent_index: 1,
            },
        )
        .expect("playback from champion");
        let ghost_evolution = runs(ConditionKind::GhostEvolution, Some(&playback));

        let ghost_tests = interactive
            .iter()
            .map(|run| {
                make_ghost_test(run, 1, run.config.seed).expect("ghost test")
            })
            .collect();

        Fixture {
            interactive,
            ghost_evolution,
            isolated,
            ghost_tests,
        }
    })
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn best_fitnesses(runs: &[RunResult]) -> Vec<f64> {
    runs.iter().map(|r| r.best_fitness).collect()
}

#[test]
fn criterion_01_neural_entropy_ordering() {
    let f = fixture();
    let interactive = best_fitnesses(&f.interactive);
    let ghost_evolution = best_fitnesses(&f.ghost_evolution);
    let isolated = best_fitnesses(&f.isolated);

    let wins = |a: &[f64], b: &[f64]| a.iter().zip(b).filter(|(x, y)| x > y).count();
    let interactive_wins = wins(&interactive, &isolated);
    let ghost_wins = wins(&ghost_evolution, &isolated);
    let medians = (median(&interactive), median(&ghost_evolution), median(&isolated));

    println!(
        "criterion 1: medians interactive={:.4} ghost-evolution={:.4} isolated={:.4}; \
         seed-paired wins interactive>isolated {}/10, ghost-evolution>isolated {}/10",
        medians.0, medians.1, medians.2, interactive_wins, ghost_wins,
    );
    assert!(medians.0 > medians.2, "interactive median above isolated");
    assert!(medians.1 > medians.2, "ghost-evolution median above isolated");
    assert!(interactive_wins >= 8, "interactive beats isolated in >= 8/10 seed pairs");
    assert!(ghost_wins >= 8, "ghost-evolution beats isolated in >= 8/10 seed pairs");
    println!("criterion 1: PASS");
}

#[test]
fn criterion_02_ghost_test_complexity_loss() {
    let f = fixture();
    let mut order: Vec<usize> = (0..f.interactive.len()).collect();
    order.sort_by(|&a, &b| {
        f.interactive[b]
            .best_fitness
            .total_cmp(&f.interactive[a].best_fitness)
    });
    let mut reduced = 0;
    for &index in order.iter().take(5) {
        let report = &f.ghost_tests[index];
        println!(
            "criterion 2: seed {} ghost {:.4} vs interactive {:.4}",
            f.interactive[index].config.seed, report.pooled_entropy, report.interactive_entropy,
        );
        if report.pooled_entropy <= report.interactive_entropy {
            reduced += 1;
        }
    }
    println!("criterion 2: entropy reduced under ghost replay in {reduced}/5 best runs");
    assert!(reduced >= 4);
    println!("criterion 2: PASS");
}

#[test]
fn criterion_03_behavioral_entropy_isolated_lowest() {
    let f = fixture();
    let cfg = AnalysisConfig::default();
    let collect = |runs: &[RunResult]| -> Vec<f64> {
        runs.iter()
            .flat_map(|run| {
                run.best_evaluation
                    .traces
                    .iter()
                    .map(|trace| heading_sample_entropy(trace, 0, &cfg).expect("sampen"))
                    .collect::<Vec<f64>>()
            })
            .collect()
    };
    let interactive = collect(&f.interactive);
    let ghost_evolution = collect(&f.ghost_evolution);
    let isolated = collect(&f.isolated);
    let ghost_test: Vec<f64> = f
        .ghost_tests
        .iter()
        .flat_map(|report| {
            report
                .traces
                .iter()
                .map(|trace| heading_sample_entropy(trace, 0, &cfg).expect("sampen"))
                .collect::<Vec<f64>>()
        })
        .collect();

    let medians = [
        ("interactive", median(&interactive)),
        ("ghost-test", median(&ghost_test)),
        ("ghost-evolution", median(&ghost_evolution)),
        ("isolated", median(&isolated)),
    ];
    println!(
        "criterion 3: heading sample-entropy medians: {}",
        medians
            .iter()
            .map(|(name, value)| format!("{name}={value:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let isolated_median = medians[3].1;
    for (name, value) in &medians[..3] {
        assert!(
            isolated_median < *value,
            "isolated median {isolated_median} must be below {name} median {value}"
        );
    }
    println!("criterion 3: PASS");
}

#[test]
fn criterion_04_entropy_unit_values() {
    let mut single = Histogram3d::new();
    for _ in 0..100 {
        single.accumulate([0.25, 0.5, 0.75]);
    }
    assert_eq!(single.normalized_entropy(), Some(0.0));

    let mut uniform = Histogram3d::new();
    for i in 0..100 {
        for j in 0..100 {
            for k in 0..100 {
                let center = |n: usize| (n as f64 + 0.5) / 100.0;
                uniform.accumulate([center(i), center(j), center(k)]);
            }
        }
    }
    let full = uniform.normalized_entropy().unwrap();
    assert!((full - 1.0).abs() <= 1e-12, "uniform occupancy: {full}");

    let mut two = Histogram3d::new();
    for _ in 0..64 {
        two.accumulate([0.1, 0.1, 0.1]);
        two.accumulate([0.9, 0.9, 0.9]);
    }
    let pair = two.normalized_entropy().unwrap();
    assert!((pair - 0.050171).abs() <= 1e-6, "two equal bins: {pair}");
    println!("criterion 4: PASS (single-bin 0, uniform {full:.15}, two-bin {pair:.6})");
}

/// Independent chord estimate: dense scan for inside/outside flips refined
/// by bisection on the membership predicate.
fn shielded_distance_oracle(source: Vec2, sensor: Vec2, body: &BodyPose) -> f64 {
    let inside = |t: f64| {
        let p = source + (sensor - source) * t;
        p.distance(body.center) < body.radius
    };
    let length = source.distance(sensor);
    if length == 0.0 {
        return 0.0;
    }
    let samples = 4096;
    let mut boundaries = Vec::new();
    if inside(0.0) {
        boundaries.push(0.0);
    }
    let mut previous = inside(0.0);
    for i in 1..=samples {
        let t = i as f64 / samples as f64;
        let now = inside(t);
        if now != previous {
            let (mut lo, mut hi) = ((i - 1) as f64 / samples as f64, t);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) == previous {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            boundaries.push(0.5 * (lo + hi));
            previous = now;
        }
    }
    if inside(1.0) {
        boundaries.push(1.0);
    }
    boundaries
        .chunks(2)
        .filter(|pair| pair.len() == 2)
        .map(|pair| (pair[1] - pair[0]) * length)
        .sum()
}

#[test]
fn criterion_05_physics_conservation() {
    let mut rng = derive_rng(505, 0, 0);
    for _ in 0..100_000 {
        let mut a = BodyPose::at(Vec2::ZERO, rng.random_range(0.0..TAU));
        let mut b = BodyPose::at(
            Vec2::new(rng.random_range(-9.0..9.0), rng.random_range(-9.0..9.0)),
            rng.random_range(0.0..TAU),
        );
        a.velocity = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        b.velocity = Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let before = a.velocity.norm_sq() + b.velocity.norm_sq();
        let (ra, rb) = resolve_collision(&a, &b);
        let after = ra.velocity.norm_sq() + rb.velocity.norm_sq();
        assert_eq!(before.to_bits(), after.to_bits());
    }

    for _ in 0..100_000 {
        let shielded = rng.random_range(0.0..=2.0 * AGENT_RADIUS);
        let factor = shadow_factor(shielded);
        assert!((0.1..=1.0).contains(&factor), "factor {factor} at {shielded}");
    }

    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let center = Vec2::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        let body = BodyPose::at(center, rng.random_range(0.0..TAU));
        let sensor = match rng.random_range(0..3) {
            0 => sensor_positions(&body).left,
            1 => sensor_positions(&body).right,
            _ => center + Vec2::polar(AGENT_RADIUS, rng.random_range(0.0..TAU)),
        };
        let source = Vec2::new(rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0));
        let exact = shielded_distance(source, sensor, &body);
        let sampled = shielded_distance_oracle(source, sensor, &body);
        worst = worst.max((exact - sampled).abs());
    }
    assert!(worst <= 1e-6, "worst shielded-distance deviation {worst}");
    println!("criterion 5: PASS (worst shielded-distance deviation {worst:.2e})");
}

#[test]
fn criterion_06_ctrnn_numerics() {
    let euler_error = |tau: f64, dt: f64| -> f64 {
        let params = CtrnnParams {
            time_constant: tau,
            bias: 0.0,
            weights: [[0.0; NEURONS]; NEURONS],
            sensor_weights: [[0.0; SENSORS]; NEURONS],
        };
        let mut state = NeuralState { potentials: [1.0, 0.0, 0.0] };
        let steps = (10.0 / dt).round() as usize;
        let mut worst: f64 = 0.0;
        for step in 1..=steps {
            state = ctrnn_step(&state, [0.0; SENSORS], &params, dt);
            let t = step as f64 * dt;
            let exact = (-t / tau).exp();
            worst = worst.max((state.potentials[0] - exact).abs());
        }
        worst
    };

    for tau in [1.0, 1.37, 2.0] {
        let error = euler_error(tau, 0.01);
        assert!(error <= 1e-2, "tau {tau}: Euler error {error}");
    }

    let coarse = euler_error(1.0, 0.01);
    let fine = euler_error(1.0, 0.005);
    let ratio = coarse / fine;
    assert!(
        (1.8..=2.2).contains(&ratio),
        "step-halving error ratio {ratio} (coarse {coarse:.3e}, fine {fine:.3e})"
    );
    println!("criterion 6: PASS (max error {coarse:.2e}, halving ratio {ratio:.3})");
}

fn random_agent(seed: u64) -> AgentParams {
    let mut rng = derive_rng(seed, 7, 0);
    decode(&Genotype::random(1, &mut rng), &ScalingSpec::standard()).unwrap()[0]
}

/// Slow idler and fast charger; starting at relative angle π the charger
/// rams the idler, so replay covers collision steps.
fn collider_pair() -> (AgentParams, AgentParams) {
    let mut idler = random_agent(701);
    idler.actuator.gain = 1.0;
    idler.actuator.bias = -3.0;
    idler.actuator.weights = [[0.0; NEURONS]; 3];
    let mut charger = random_agent(702);
    charger.actuator.gain = 5.0;
    charger.actuator.bias = 3.0;
    charger.actuator.weights = [[0.0; NEURONS]; 3];
    (idler, charger)
}

#[test]
fn criterion_07_ghost_replay_bit_exact() {
    let pairs = [collider_pair(), (random_agent(703), random_agent(704))];
    for (live, partner) in &pairs {
        let spec = |angle: f64| TrialSpec {
            initial_distance: 20.0,
            relative_angle: angle,
            initial_heading: 0.0,
            duration_steps: 3000,
            dt: 0.01,
        };
        let traces: Vec<_> = TRIAL_ANGLES
            .iter()
            .map(|&angle| {
                run_trial_interactive(live, partner, &spec(angle), PlateauReference::default())
                    .unwrap()
            })
            .collect();
        let playback = Playback::from_traces(
            &traces,
            1,
            PlaybackProvenance {
                run_id: "acceptance".to_string(),
                generation: 0,
                agent_index: 1,
            },
        )
        .unwrap();
        for (trial, original) in traces.iter().enumerate() {
            let replay = run_trial_ghost(
                live,
                &playback,
                trial,
                &spec(TRIAL_ANGLES[trial]),
                PlateauReference::default(),
            )
            .unwrap();
            let (a, b) = (&replay.agents[0], &original.agents[0]);
            assert_eq!(a.len(), b.len());
            for step in 0..a.len() {
                assert_eq!(a.positions[step].x.to_bits(), b.positions[step].x.to_bits());
                assert_eq!(a.positions[step].y.to_bits(), b.positions[step].y.to_bits());
                assert_eq!(a.headings[step].to_bits(), b.headings[step].to_bits());
                assert_eq!(a.emissions[step].to_bits(), b.emissions[step].to_bits());
                for n in 0..NEURONS {
                    assert_eq!(
                        a.neuron_outputs[step][n].to_bits(),
                        b.neuron_outputs[step][n].to_bits()
                    );
                }
            }
        }
    }
    println!("criterion 7: PASS");
}

#[test]
fn criterion_08_ga_invariants() {
    assert_eq!(elite_count(96), 4, "population 96 keeps 4 elites");

    // Deterministic fitness: best-so-far never decreases.
    let mut rng = derive_rng(808, 0, 0);
    let fitness = |g: &Genotype| g.genes().iter().map(|&x| (13.0 * x).sin()).sum::<f64>();
    let mut population: Vec<Genotype> = (0..20).map(|_| Genotype::random(1, &mut rng)).collect();
    let mut previous_best = f64::NEG_INFINITY;
    for generation in 0..100 {
        let fitnesses: Vec<f64> = population.iter().map(&fitness).collect();
        let best = fitnesses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(
            best >= previous_best,
            "generation {generation}: best {best} dropped below {previous_best}"
        );
        previous_best = best;
        let mut reproduction = derive_rng(808, 1, generation as u64);
        population = next_generation(&population, &fitnesses, &mut reproduction).unwrap();
        for genotype in &population {
            assert!(genotype.genes().iter().all(|&x| (-1.0..=1.0).contains(&x)));
        }
    }
    println!("criterion 8: PASS (best monotone over 100 fuzzed generations, genes in range)");
}

#[test]
fn criterion_09_cli_determinism_across_parallelism() {
    let run = |parallelism: &str| -> String {
        let dir = tempfile::tempdir().unwrap();
        let output = std::process::Command::new(env!("CARGO_BIN_EXE_dyad"))
            .args([
                "evolve",
                "--condition",
                "interactive",
                "--pop",
                "8",
                "--gens",
                "6",
                "--seed",
                "909",
                "--duration",
                "1000",
                "--parallelism",
                parallelism,
                "--workspace",
                dir.path().to_str().unwrap(),
            ])
            .output()
            .expect("dyad runs");
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        let run_dir = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().path())
            .find(|p| p.is_dir())
            .unwrap();
        std::fs::read_to_string(run_dir.join("fitness_history.csv")).unwrap()
    };
    let serial = run("1");
    let parallel = run("4");
    assert_eq!(serial, parallel, "fitness CSVs must be byte-identical");
    println!("criterion 9: PASS");
}

/// Exhaustive warping-path enumeration for short series.
fn dtw_brute(a: &[Vec2], b: &[Vec2]) -> f64 {
    fn go(a: &[Vec2], b: &[Vec2], i: usize, j: usize) -> f64 {
        let cost = a[i].distance(b[j]);
        if i == a.len() - 1 && j == b.len() - 1 {
            return cost;
        }
        let mut best = f64::INFINITY;
        if i + 1 < a.len() {
            best = best.min(go(a, b, i + 1, j));
        }
        if j + 1 < b.len() {
            best = best.min(go(a, b, i, j + 1));
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            best = best.min(go(a, b, i + 1, j + 1));
        }
        cost + best
    }
    go(a, b, 0, 0)
}

/// Direct template-construction sample entropy.
fn sampen_oracle(series: &[f64], m: usize, r: f64) -> f64 {
    let templates = |w: usize| -> Vec<&[f64]> {
        (0..series.len() - m).map(|i| &series[i..i + w]).collect()
    };
    let count = |set: &[&[f64]]| -> u64 {
        let mut matches = 0;
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                if set[i].iter().zip(set[j]).all(|(a, b)| (a - b).abs() <= r) {
                    matches += 1;
                }
            }
        }
        matches
    };
    let b = count(&templates(m));
    let a = count(&templates(m + 1));
    if a == 0 || b == 0 {
        f64::INFINITY
    } else if a == b {
        0.0
    } else {
        -((a as f64 / b as f64).ln())
    }
}

#[test]
fn criterion_10_dtw_and_sampen_oracles() {
    let mut rng = derive_rng(1010, 0, 0);
    // DTW: every length combination up to 6, several random instances each.
    for n in 1..=6usize {
        for m in 1..=6usize {
            for _ in 0..8 {
                let a: Vec<Vec2> = (0..n)
                    .map(|_| Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                    .collect();
                let b: Vec<Vec2> = (0..m)
                    .map(|_| Vec2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                    .collect();
                let fast = dyad_core::analysis::dtw_distance(&a, &b).unwrap();
                let brute = dtw_brute(&a, &b);
                assert!((fast - brute).abs() <= 1e-12, "{n}x{m}: {fast} vs {brute}");
            }
        }
    }

    for case in 0..100 {
        let len = rng.random_range(30..150);
        let series: Vec<f64> = (0..len).map(|_| rng.random_range(-2.0..2.0)).collect();
        let r = rng.random_range(0.05..0.9);
        let ours = sample_entropy(&series, 2, r).unwrap();
        let oracle = sampen_oracle(&series, 2, r);
        if ours.is_infinite() {
            assert!(oracle.is_infinite(), "case {case}");
        } else {
            assert!((ours - oracle).abs() <= 1e-9, "case {case}: {ours} vs {oracle}");
        }
    }

    let noise: Vec<f64> = {
        let mut noise_rng = derive_rng(1010, 1, 0);
        (0..1000).map(|_| noise_rng.random_range(-1.0..1.0)).collect()
    };
    let sine: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.05).sin()).collect();
    let sd = |v: &[f64]| -> f64 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let h_noise = sample_entropy(&noise, 2, 0.2 * sd(&noise)).unwrap();
    let h_sine = sample_entropy(&sine, 2, 0.2 * sd(&sine)).unwrap();
    assert!(h_noise > h_sine, "noise {h_noise} must exceed sine {h_sine}");
    println!("criterion 10: PASS (noise SampEn {h_noise:.3} > sine {h_sine:.3})");
}
