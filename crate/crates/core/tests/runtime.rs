use std::fs;

use adames_core::network::{forward, param_count, Head, Model, NetworkSpec};
use adames_core::objectives::{Benchmark, ObjectiveSpec, ACT_DIM, OBS_DIM};
use adames_core::runtime::{
    load_checkpoint, read_metrics, train, AgentConfig, Algorithm, Callback, CheckpointCallback, EarlyStopCallback,
    Section, METRICS_FILE,
};

fn sphere(algorithm: Algorithm, iterations: usize) -> AgentConfig {
    AgentConfig::benchmark(
        ObjectiveSpec::benchmark(Benchmark::Sphere, 10),
        algorithm,
        iterations,
        0,
    )
}

#[test]
fn same_seed_same_history() {
    let cfg = sphere(Algorithm::Adames, 50);
    let a = train(&cfg, &mut []).unwrap();
    let b = train(&cfg, &mut []).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.final_params, b.final_params);
}

#[test]
fn one_record_of_each_kind_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = sphere(Algorithm::Es, 7);
    cfg.log_dir = Some(dir.path().to_path_buf());
    train(&cfg, &mut []).unwrap();
    let records = read_metrics(dir.path().join(METRICS_FILE)).unwrap();
    assert_eq!(records.len(), 7 * 5);
    for step in 0..7u64 {
        let at: Vec<_> = records.iter().filter(|r| r.step == step).collect();
        for (section, name) in [
            (Section::Reward, "mean_fitness"),
            (Section::Reward, "max_fitness"),
            (Section::Reward, "global_fitness"),
            (Section::Metrics, "divergence"),
            (Section::Metrics, "entropy"),
        ] {
            assert_eq!(at.iter().filter(|r| r.section == section && r.name == name).count(), 1);
        }
    }
}

#[test]
fn early_stop_halts_on_plateau() {
    let cfg = sphere(Algorithm::Es, 100);
    // A threshold no real iteration can clear makes every step stale.
    let mut stop = EarlyStopCallback::new("mean_fitness", 1e12, 3).unwrap();
    let run = train(&cfg, &mut [&mut stop]).unwrap();
    assert_eq!(run.iterations, 4);
    assert_eq!(run.history.len(), 4);
}

#[test]
fn early_stop_rejects_unknown_metric() {
    let cfg = sphere(Algorithm::Es, 5);
    let mut stop = EarlyStopCallback::new("no_such_metric", 0.0, 1).unwrap();
    assert!(train(&cfg, &mut [&mut stop]).is_err());
}

#[test]
fn checkpoint_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut ckpt = CheckpointCallback::new(1, dir.path()).unwrap();
    let run = train(&sphere(Algorithm::Adames, 3), &mut [&mut ckpt as &mut dyn Callback]).unwrap();
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);
    assert_eq!(run.saved_steps, vec![0, 1, 2]);

    let last = load_checkpoint(ckpt.path_for(3)).unwrap();
    assert_eq!(last.step, 3);
    let model = Model::Dummy { dim: 10 };
    let a = forward(&model, &last.params, &[]).unwrap();
    let b = forward(&model, &run.final_params, &[]).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn checkpoint_interval_longer_than_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut ckpt = CheckpointCallback::new(10, dir.path()).unwrap();
    let run = train(&sphere(Algorithm::Es, 3), &mut [&mut ckpt as &mut dyn Callback]).unwrap();
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    assert!(run.saved_steps.is_empty());
}

#[test]
fn sphere_improves_for_both_algorithms() {
    for algo in [Algorithm::Es, Algorithm::Adames] {
        let run = train(&sphere(algo, 200), &mut []).unwrap();
        let first = run.history.first().unwrap().global_value.unwrap();
        let last = run.history.last().unwrap().global_value.unwrap();
        assert!(last < first / 10.0, "{algo:?}: {first} -> {last}");
    }
}

#[test]
fn point_mass_run_is_finite_and_deterministic() {
    let net = NetworkSpec::new(OBS_DIM, vec![4], ACT_DIM).with_head(Head::TanhBounded);
    let model = Model::Network(net);
    let cfg = AgentConfig {
        objective: ObjectiveSpec::point_mass(param_count(&model), 30),
        model,
        init_range: 0.5,
        ..sphere(Algorithm::Adames, 10)
    };
    let a = train(&cfg, &mut []).unwrap();
    let b = train(&cfg, &mut []).unwrap();
    assert_eq!(a.history, b.history);
    assert!(a
        .history
        .iter()
        .all(|h| h.mean_fitness.is_finite() && h.global_value.is_none()));
}
