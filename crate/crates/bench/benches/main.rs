use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use brl_core::config::AgentConfig;
use brl_core::harness::{TrainSetup, Trainer};
use brl_core::simworld::{build_track, render_semantic, CameraConfig, Scenario, TrackSpec};
use brl_core::perception::extract_state;

fn trained_trainer(steps: u64) -> Trainer {
    let cfg = AgentConfig {
        t_max: steps as u32,
        ..AgentConfig::default()
    };
    let mut t = Trainer::new(cfg, TrainSetup::new(17)).unwrap();
    t.run_to_completion().unwrap();
    t
}

fn bench_render(c: &mut Criterion) {
    let spec = TrackSpec::for_scenario(Scenario::RightTurn);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let world = build_track(&spec, &mut rng).unwrap();
    let cam = CameraConfig::default();
    c.bench_function("render_semantic_81x60", |b| {
        b.iter(|| render_semantic(&world, &cam))
    });
    let map = render_semantic(&world, &cam);
    c.bench_function("extract_state", |b| b.iter(|| extract_state(&map).unwrap()));
}

fn bench_agent(c: &mut Criterion) {
    let trainer = trained_trainer(300);
    let agent = trainer.agent().clone();
    let map = {
        let spec = TrackSpec::for_scenario(Scenario::Straight);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let world = build_track(&spec, &mut rng).unwrap();
        render_semantic(&world, &CameraConfig::default())
    };
    let s = extract_state(&map).unwrap();
    c.bench_function("action_posterior", |b| b.iter(|| agent.action_posterior(&s)));
}

fn bench_training_step(c: &mut Criterion) {
    c.bench_function("train_decision_step", |b| {
        b.iter_batched_ref(
            || trained_trainer(50),
            |t| t.train_steps(1).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, bench_render, bench_agent, bench_training_step);
criterion_main!(benches);
