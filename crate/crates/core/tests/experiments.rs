use evoes::cli::preset;
use evoes::experiments::{adapt_best_of_k, sample_batch};
use evoes::runtime::WorkerPool;
use evoes::trainer::{init_checkpoint, run_generations, Checkpoint, Direction, TrainConfig};

fn train(config: &TrainConfig, pool: &WorkerPool) -> Checkpoint {
    run_generations(init_checkpoint(config).unwrap(), config.generations, pool, |_, _| Ok(()))
        .unwrap()
        .0
}

#[test]
fn adaptation_reaches_both_directions() {
    let pool = WorkerPool::new(1).unwrap();
    let ees = train(&preset("pointwalker-maxent").unwrap(), &pool);
    let es = train(&preset("pointwalker-es").unwrap(), &pool);
    let batch = sample_batch(&es, 500, &pool).unwrap();
    let es_fitness = batch.fitness().iter().sum::<f64>() / batch.len() as f64;
    for objective in [Direction::PosX, Direction::NegX] {
        let r = adapt_best_of_k(&ees, objective, 40, 10, 0).unwrap();
        assert!(
            r.best_score > 0.5 * es_fitness,
            "{objective}: {} vs standard ES {es_fitness}",
            r.best_score
        );
    }
}

#[test]
fn standard_es_improves_over_twenty_generation_windows() {
    let pool = WorkerPool::new(1).unwrap();
    let mut good = 0;
    for seed in 0..10 {
        let config = TrainConfig {
            run_seed: seed,
            population_size: 100,
            generations: 60,
            ..preset("pointwalker-es").unwrap()
        };
        let (_, stats) = run_generations(init_checkpoint(&config).unwrap(), 60, &pool, |_, _| Ok(())).unwrap();
        let f: Vec<f64> = stats.iter().map(|s| s.fitness_mean).collect();
        // evaluation noise at the fitness ceiling
        let tol = 0.01 * f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if f.windows(21).all(|w| w[20] >= w[0] - tol) {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10 seeds improve over every window");
}
