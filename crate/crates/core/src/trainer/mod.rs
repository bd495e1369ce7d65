//! The generation loop: sample, evaluate, shape, estimate, step.

mod checkpoint;
mod config;
mod optimizer;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION, MAGIC};
pub use config::{Algo, Direction, OptimizerKind, TrainConfig};
pub use optimizer::{OptimizerState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use crate::distributions::{GaussianMixture, IsoGaussian, ParamVec, PopulationDistribution};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::estimators::{
    es_gradient, maxent_gradient, maxvar_gradient_with, BcScaling, GradEstimate,
};
use crate::policy::{init_mlp, update_normalizer, ObsNormalizer};
use crate::runtime::{evaluate_population, EvalBatch, EvalRequest, WorkerPool};
use crate::seeding::mix;
use crate::shaping::{center, rank_normalize, whiten, BcMatrix};

/// Clip threshold as a multiple of the running median gradient norm.
pub const CLIP_MEDIAN_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GenStats {
    pub generation: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub bc_mean: Vec<f64>,
    pub bc_var_trace: f64,
    pub fitness_mean: f64,
    pub wall_ms: f64,
}

impl GenStats {
    pub fn csv_header(bc_dim: usize) -> String {
        let mut cols = vec!["generation".to_string(), "loss".into(), "grad_norm".into()];
        cols.extend((0..bc_dim).map(|i| format!("bc_mean_{i}")));
        cols.extend(["bc_var_trace".into(), "fitness_mean".into(), "wall_ms".into()]);
        cols.join(",")
    }

    pub fn csv_row(&self, with_wall_time: bool) -> String {
        let mut cols = vec![
            self.generation.to_string(),
            self.loss.to_string(),
            self.grad_norm.to_string(),
        ];
        cols.extend(self.bc_mean.iter().map(|v| v.to_string()));
        cols.push(self.bc_var_trace.to_string());
        cols.push(self.fitness_mean.to_string());
        cols.push(if with_wall_time {
            format!("{:.3}", self.wall_ms)
        } else {
            "0".into()
        });
        cols.join(",")
    }
}

/// Builds the environment a config describes.
pub fn environment_for(config: &TrainConfig) -> Result<Environment> {
    Environment::new(config.env, config.policy().as_ref(), Some(config.horizon))
}

/// Generation-0 state for a config.
pub fn init_checkpoint(config: &TrainConfig) -> Result<Checkpoint> {
    config.validate()?;
    let env = environment_for(config)?;
    let k = config.mixture_k;
    let means: Vec<ParamVec> = (0..k)
        .map(|c| match config.policy() {
            Some(spec) => {
                let seed = if k == 1 {
                    config.run_seed
                } else {
                    mix(config.run_seed, c as u64)
                };
                init_mlp(&spec, seed)
            }
            None => Ok(ParamVec::from_vec(vec![config.init_mean; env.genome_dim()])),
        })
        .collect::<Result<_>>()?;
    let dist = distribution_from_means(means, config.sigma)?;
    Ok(Checkpoint {
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        optimizer: OptimizerState::new(config.optimizer, k, env.genome_dim()),
        dist,
        normalizer: ObsNormalizer::new(env.obs_dim()),
        generation: 0,
        grad_norm_history: Vec::new(),
    })
}

pub(crate) fn distribution_from_means(
    means: Vec<ParamVec>,
    sigma: f64,
) -> Result<PopulationDistribution> {
    Ok(if means.len() == 1 {
        IsoGaussian::new(means.into_iter().next().expect("one mean"), sigma)?.into()
    } else {
        GaussianMixture::new(means, sigma)?.into()
    })
}

/// Fitness the trainer optimizes for one evaluated offspring.
pub fn training_fitness(config: &TrainConfig, bc: &[f64], env_fitness: f64) -> f64 {
    if config.env.uses_policy() {
        config.objective.score(bc)
    } else {
        env_fitness
    }
}

fn estimate(config: &TrainConfig, batch: &EvalBatch, dist: &PopulationDistribution) -> Result<(GradEstimate, Vec<f64>, BcMatrix)> {
    let scores: Vec<Vec<ParamVec>> = (0..batch.len())
        .map(|i| dist.score(&batch.genome(dist, i)))
        .collect::<Result<_>>()?;
    let bcs = batch.bc_matrix()?;
    let fitness: Vec<f64> = batch
        .offspring
        .iter()
        .map(|o| training_fitness(config, &o.bc, o.fitness))
        .collect();
    let est = match config.algo {
        Algo::StandardEs => es_gradient(&rank_normalize(&fitness), &scores)?,
        Algo::MaxvarEes => maxvar_gradient_with(&bcs, &scores, config.bc_scaling)?,
        Algo::MaxentEes => {
            let scaled = match config.bc_scaling {
                BcScaling::Whiten => whiten(&bcs)?.0,
                BcScaling::Center => center(&bcs),
            };
            maxent_gradient(&scaled, &scores, config.kernel_bandwidth)?
        }
    };
    Ok((est, fitness, bcs))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs one generation and returns the successor state.
pub fn train_generation(
    state: &Checkpoint,
    pool: &WorkerPool,
) -> Result<(Checkpoint, GenStats, EvalBatch)> {
    let start = Instant::now();
    let config = &state.config;
    let env = environment_for(config)?;
    let req = EvalRequest {
        mirrored: config.mirrored,
        ..EvalRequest::new(config.population_size, config.run_seed, state.generation)
    };
    let batch = evaluate_population(&state.dist, &env, &state.normalizer, &req, pool)?;
    let (mut est, fitness, bcs) = estimate(config, &batch, &state.dist)?;
    if !est.is_finite() {
        return Err(Error::NonFiniteGradient {
            generation: state.generation,
            detail: format!("loss {} grad norm {}", est.loss, est.norm()),
        });
    }

    let grad_norm = est.norm();
    let mut history = state.grad_norm_history.clone();
    if config.grad_clip && !history.is_empty() {
        let cap = CLIP_MEDIAN_FACTOR * median(&history);
        if grad_norm > cap && grad_norm > 0.0 {
            let k = cap / grad_norm;
            for g in &mut est.grad {
                g.iter_mut().for_each(|v| *v *= k);
            }
        }
    }
    history.push(grad_norm);

    let mut dist = state.dist.clone();
    let mut optimizer = state.optimizer.clone();
    optimizer.step(
        dist.means_mut(),
        &est.grad,
        config.learning_rate,
        config.l2_coef,
    );
    if dist.means().iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFiniteGradient {
            generation: state.generation,
            detail: "update produced a non-finite mean".into(),
        });
    }
    let normalizer = update_normalizer(&state.normalizer, &batch.sampled_states)?;

    let stats = GenStats {
        generation: state.generation,
        loss: est.loss,
        grad_norm,
        bc_mean: bcs.col_mean(),
        bc_var_trace: bcs.var_trace(),
        fitness_mean: fitness.iter().sum::<f64>() / fitness.len() as f64,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let next = Checkpoint {
        version: state.version,
        config: config.clone(),
        dist,
        optimizer,
        normalizer,
        generation: state.generation + 1,
        grad_norm_history: history,
    };
    Ok((next, stats, batch))
}

/// Runs `generations` generations in memory, calling `on_gen` after each.
pub fn run_generations(
    state: Checkpoint,
    generations: u64,
    pool: &WorkerPool,
    mut on_gen: impl FnMut(&Checkpoint, &GenStats) -> Result<()>,
) -> Result<(Checkpoint, Vec<GenStats>)> {
    let mut state = state;
    let mut all = Vec::with_capacity(generations as usize);
    for _ in 0..generations {
        let (next, stats, _) = train_generation(&state, pool)?;
        on_gen(&next, &stats)?;
        all.push(stats);
        state = next;
    }
    Ok((state, all))
}

/// Files written by [`train_run_detailed`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub log: PathBuf,
    pub checkpoints: Vec<PathBuf>,
    pub final_checkpoint: PathBuf,
}

pub const LOG_FILE: &str = "log.csv";
pub const FINAL_CHECKPOINT_FILE: &str = "checkpoint.eves";

pub fn train_run(config: &TrainConfig, workers: usize, out_dir: impl AsRef<Path>) -> Result<Checkpoint> {
    let state = init_checkpoint(config)?;
    let pool = WorkerPool::new(workers)?;
    let (cp, _, _) = train_run_detailed(state, config.generations, &pool, out_dir.as_ref())?;
    Ok(cp)
}

/// Continues `state` for `generations` generations, writing the run log,
/// periodic checkpoints, and a final checkpoint under `out_dir`.
pub fn train_run_detailed(
    state: Checkpoint,
    generations: u64,
    pool: &WorkerPool,
    out_dir: &Path,
) -> Result<(Checkpoint, Vec<GenStats>, RunArtifacts)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let log_path = out_dir.join(LOG_FILE);
    let file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut log = BufWriter::new(file);
    let bc_dim = state.config.env.bc_dim();
    writeln!(log, "{}", GenStats::csv_header(bc_dim)).map_err(|e| Error::io(&log_path, e))?;

    let every = state.config.checkpoint_every;
    let wall = state.config.log_wall_time;
    let mut checkpoints = Vec::new();
    let (final_state, stats) = run_generations(state, generations, pool, |next, s| {
        writeln!(log, "{}", s.csv_row(wall)).map_err(|e| Error::io(&log_path, e))?;
        if every > 0 && next.generation % every == 0 {
            let p = out_dir.join(format!("checkpoint_{:06}.eves", next.generation));
            save_checkpoint(next, &p)?;
            checkpoints.push(p);
        }
        Ok(())
    })?;
    log.flush().map_err(|e| Error::io(&log_path, e))?;

    let final_checkpoint = out_dir.join(FINAL_CHECKPOINT_FILE);
    save_checkpoint(&final_state, &final_checkpoint)?;
    Ok((
        final_state,
        stats,
        RunArtifacts {
            log: log_path,
            checkpoints,
            final_checkpoint,
        },
    ))
}
