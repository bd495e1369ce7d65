//! Parallel evaluation of an offspring batch.
//!
//! Workers receive `(index, seed)` tasks, regenerate the genome from the seed,
//! and roll it out. Results are gathered in index order before anything is
//! reduced, so a batch is bit-identical for any worker count.

use rayon::prelude::*;

use crate::distributions::{noise_stream, ParamVec, PopulationDistribution};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::ObsNormalizer;
use crate::seeding::{generation_seed, mix, offspring_seed, unit_uniform, SALT_NORMALIZER};
use crate::shaping::BcMatrix;

/// Probability that a rollout's states feed the observation normalizer.
pub const NORMALIZER_SAMPLE_PROB: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedOffspring {
    pub index: usize,
    pub component: usize,
    pub seed: u64,
    pub negated: bool,
    pub bc: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalBatch {
    pub generation: u64,
    /// Sorted by index, each of `0..n` exactly once.
    pub offspring: Vec<EvaluatedOffspring>,
    /// States from rollouts selected for normalizer statistics, in index order.
    pub sampled_states: Vec<Vec<f64>>,
}

impl EvalBatch {
    pub fn len(&self) -> usize {
        self.offspring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offspring.is_empty()
    }

    pub fn bc_matrix(&self) -> Result<BcMatrix> {
        let rows: Vec<&[f64]> = self.offspring.iter().map(|o| o.bc.as_slice()).collect();
        BcMatrix::from_rows(&rows)
    }

    pub fn fitness(&self) -> Vec<f64> {
        self.offspring.iter().map(|o| o.fitness).collect()
    }

    /// Rebuilds offspring `i`'s genome from its recorded seed.
    pub fn genome(&self, dist: &PopulationDistribution, i: usize) -> ParamVec {
        let o = &self.offspring[i];
        dist.regenerate(o.seed, o.negated).1
    }
}

/// A fixed-size worker pool.
pub struct WorkerPool {
    pool: rayon::ThreadPool,
    workers: usize,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidValue("workers must be >= 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidValue(format!("cannot start worker pool: {e}")))?;
        Ok(WorkerPool { pool, workers })
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalRequest {
    pub n: usize,
    pub run_seed: u64,
    pub generation: u64,
    pub mirrored: bool,
    /// Probability of recording a rollout's states (0 disables).
    pub state_sample_prob: f64,
}

impl EvalRequest {
    pub fn new(n: usize, run_seed: u64, generation: u64) -> Self {
        EvalRequest {
            n,
            run_seed,
            generation,
            mirrored: false,
            state_sample_prob: NORMALIZER_SAMPLE_PROB,
        }
    }
}

pub fn evaluate_population(
    dist: &PopulationDistribution,
    env: &Environment,
    normalizer: &ObsNormalizer,
    req: &EvalRequest,
    pool: &WorkerPool,
) -> Result<EvalBatch> {
    if req.n == 0 {
        return Err(Error::InvalidValue("population size must be >= 1".into()));
    }
    crate::error::check_dim("distribution vs environment genome", env.genome_dim(), dist.dim())?;
    let gen_seed = generation_seed(req.run_seed, req.generation);
    let record_any = env.obs_dim() > 0 && req.state_sample_prob > 0.0;

    let task = |index: usize| -> Result<(EvaluatedOffspring, Option<Vec<Vec<f64>>>)> {
        let (stream, negated) = noise_stream(index, req.mirrored);
        let seed = offspring_seed(gen_seed, stream as u64);
        let (component, genome) = dist.regenerate(seed, negated);
        let record = record_any
            && unit_uniform(mix(offspring_seed(gen_seed, index as u64), SALT_NORMALIZER))
                < req.state_sample_prob;
        let mut states = record.then(Vec::new);
        let r = env.rollout_recording(&genome, normalizer, states.as_mut())?;
        Ok((
            EvaluatedOffspring {
                index,
                component,
                seed,
                negated,
                bc: r.bc,
                fitness: r.fitness,
            },
            states,
        ))
    };

    let results: Vec<Result<_>> = pool
        .pool
        .install(|| (0..req.n).into_par_iter().map(task).collect());

    let mut offspring = Vec::with_capacity(req.n);
    let mut sampled_states = Vec::new();
    for r in results {
        let (o, states) = r?;
        offspring.push(o);
        if let Some(s) = states {
            sampled_states.extend(s);
        }
    }
    Ok(EvalBatch {
        generation: req.generation,
        offspring,
        sampled_states,
    })
}
