//! Finite-difference oracle for the score-function estimators.
//!
//! Each estimator is the gradient of an expectation whose batch statistics
//! (whitening mean and scale, fitness ranks) are held fixed at the sampling
//! point. The oracle evaluates the same Monte-Carlo objective at `mu +- h e_k`
//! with the statistics frozen and the standard-normal draws reused (common
//! random numbers), and takes central differences.

use serde::Serialize;

use crate::distributions::{sample_offspring, IsoGaussian, ParamVec, PopulationDistribution};
use crate::envs::interference_behavior;
use crate::error::{Error, Result};
use crate::estimators::{es_gradient, maxent_gradient, maxvar_gradient, EstimatorKind};
use crate::kde::entropy_estimate;
use crate::shaping::{rank_normalize, whiten, whiten_stats, BcMatrix, WhitenStats};

/// Behavior and fitness functions of a genome, used only by the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradTask {
    /// `B(z) = z`, `f(z) = sum z`.
    Identity,
    /// `B(z) = z^2` elementwise, `f(z) = sum z^2`.
    Square,
    /// 1-D interference behavior; fitness equals the behavior.
    Interference,
    /// `B(z) = z + z^2 / 2`, `f = B`.
    Synthetic1d,
    /// Five coupled quadratic behaviors, `f = sum B`.
    Synthetic5d,
}

const QUAD_5D: [f64; 5] = [0.5, 0.3, 0.4, 0.6, 0.2];
const COUPLING_5D: f64 = 0.2;

impl GradTask {
    pub fn name(self) -> &'static str {
        match self {
            GradTask::Identity => "identity",
            GradTask::Square => "square",
            GradTask::Interference => "interference",
            GradTask::Synthetic1d => "synthetic-1d",
            GradTask::Synthetic5d => "synthetic-5d",
        }
    }

    /// Genome dimension the task requires, if fixed.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            GradTask::Identity | GradTask::Square => None,
            GradTask::Interference | GradTask::Synthetic1d => Some(1),
            GradTask::Synthetic5d => Some(5),
        }
    }

    pub fn bc(self, z: &[f64]) -> Vec<f64> {
        match self {
            GradTask::Identity => z.to_vec(),
            GradTask::Square => z.iter().map(|v| v * v).collect(),
            GradTask::Interference => vec![interference_behavior(z[0])],
            GradTask::Synthetic1d => vec![z[0] + 0.5 * z[0] * z[0]],
            GradTask::Synthetic5d => (0..5)
                .map(|k| z[k] + QUAD_5D[k] * z[k] * z[k] + COUPLING_5D * z[(k + 1) % 5])
                .collect(),
        }
    }

    pub fn fitness(self, z: &[f64]) -> f64 {
        self.bc(z).iter().sum()
    }

    /// Sampling distribution used by the oracle suite.
    pub fn default_dist(self) -> IsoGaussian {
        let mean = match self {
            GradTask::Synthetic5d => vec![0.8, 0.4, 1.2, 0.6, 1.0],
            GradTask::Synthetic1d => vec![0.8],
            _ => vec![1.0],
        };
        IsoGaussian::new(ParamVec::new(mean).expect("finite"), 0.5).expect("valid sigma")
    }
}

/// What the ES oracle differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EsUtility {
    /// Raw fitness, `E[f(z)]`.
    Raw,
    /// Fitness passed through the base batch's rank normalization, linearly
    /// interpolated between the sorted base fitnesses.
    FrozenRank,
}

#[derive(Debug, Clone, Copy)]
pub struct FdOptions {
    pub n: usize,
    pub step: f64,
    pub seed: u64,
    pub bandwidth: f64,
    pub es_utility: EsUtility,
}

impl FdOptions {
    /// `step = sigma / 100`, frozen-rank ES utility, unit bandwidth.
    pub fn new(n: usize, sigma: f64, seed: u64) -> Self {
        FdOptions {
            n,
            step: sigma / 100.0,
            seed,
            bandwidth: 1.0,
            es_utility: EsUtility::FrozenRank,
        }
    }
}

struct Batch {
    eps: Vec<Vec<f64>>,
    base_bcs: BcMatrix,
    base_fitness: Vec<f64>,
}

fn draw(dist: &IsoGaussian, task: GradTask, n: usize, seed: u64) -> Result<Batch> {
    if let Some(d) = task.fixed_dim() {
        crate::error::check_dim("gradient-check task genome", d, dist.dim())?;
    }
    if n < 2 {
        return Err(Error::InvalidValue(format!("gradient check needs n >= 2, got {n}")));
    }
    let pd = PopulationDistribution::Iso(dist.clone());
    let offspring = sample_offspring(&pd, n, seed);
    let sigma = dist.sigma;
    let eps: Vec<Vec<f64>> = offspring
        .iter()
        .map(|o| {
            o.genome
                .iter()
                .zip(dist.mean.iter())
                .map(|(z, m)| if sigma > 0.0 { (z - m) / sigma } else { 0.0 })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = offspring.iter().map(|o| task.bc(&o.genome)).collect();
    Ok(Batch {
        base_bcs: BcMatrix::from_rows(&rows)?,
        base_fitness: offspring.iter().map(|o| task.fitness(&o.genome)).collect(),
        eps,
    })
}

fn genomes_at(mean: &[f64], sigma: f64, eps: &[Vec<f64>]) -> Vec<Vec<f64>> {
    eps.iter()
        .map(|e| mean.iter().zip(e).map(|(m, v)| m + sigma * v).collect())
        .collect()
}

/// Piecewise-linear map from fitness to the base batch's normalized ranks.
struct RankUtility {
    sorted: Vec<f64>,
    utility: Vec<f64>,
}

impl RankUtility {
    fn new(base: &[f64]) -> Self {
        let ranks = rank_normalize(base);
        let mut pairs: Vec<(f64, f64)> = base.iter().copied().zip(ranks).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.dedup_by(|a, b| a.0 == b.0);
        RankUtility {
            sorted: pairs.iter().map(|p| p.0).collect(),
            utility: pairs.iter().map(|p| p.1).collect(),
        }
    }

    fn eval(&self, f: f64) -> f64 {
        let n = self.sorted.len();
        let idx = self.sorted.partition_point(|v| *v < f);
        if idx == 0 {
            return self.utility[0];
        }
        if idx == n {
            return self.utility[n - 1];
        }
        let (x0, x1) = (self.sorted[idx - 1], self.sorted[idx]);
        let (u0, u1) = (self.utility[idx - 1], self.utility[idx]);
        u0 + (u1 - u0) * (f - x0) / (x1 - x0)
    }
}

fn objective(
    kind: EstimatorKind,
    task: GradTask,
    genomes: &[Vec<f64>],
    frozen: &WhitenStats,
    ranks: Option<&RankUtility>,
    bandwidth: f64,
) -> Result<f64> {
    let n = genomes.len() as f64;
    match kind {
        EstimatorKind::Es => Ok(genomes
            .iter()
            .map(|z| {
                let f = task.fitness(z);
                ranks.map_or(f, |r| r.eval(f))
            })
            .sum::<f64>()
            / n),
        EstimatorKind::MaxVar => {
            let rows: Vec<Vec<f64>> = genomes.iter().map(|z| task.bc(z)).collect();
            let bcs = frozen.apply(&BcMatrix::from_rows(&rows)?)?;
            Ok(bcs.var_trace())
        }
        EstimatorKind::MaxEnt => {
            let rows: Vec<Vec<f64>> = genomes.iter().map(|z| task.bc(z)).collect();
            let bcs = frozen.apply(&BcMatrix::from_rows(&rows)?)?;
            Ok(entropy_estimate(&bcs, bandwidth))
        }
    }
}

/// Central finite differences of the estimator's frozen-statistics objective
/// with common random numbers.
pub fn finite_difference_check(
    kind: EstimatorKind,
    dist: &IsoGaussian,
    task: GradTask,
    opts: &FdOptions,
) -> Result<ParamVec> {
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::InvalidValue(format!("step must be > 0, got {}", opts.step)));
    }
    let batch = draw(dist, task, opts.n, opts.seed)?;
    fd_from_batch(kind, dist, task, opts, &batch)
}

fn fd_from_batch(
    kind: EstimatorKind,
    dist: &IsoGaussian,
    task: GradTask,
    opts: &FdOptions,
    batch: &Batch,
) -> Result<ParamVec> {
    let frozen = whiten_stats(&batch.base_bcs);
    let ranks = (kind == EstimatorKind::Es && opts.es_utility == EsUtility::FrozenRank)
        .then(|| RankUtility::new(&batch.base_fitness));
    let mut grad = Vec::with_capacity(dist.dim());
    for k in 0..dist.dim() {
        let eval = |sign: f64| {
            let mut mean = dist.mean.to_vec();
            mean[k] += sign * opts.step;
            let genomes = genomes_at(&mean, dist.sigma, &batch.eps);
            objective(kind, task, &genomes, &frozen, ranks.as_ref(), opts.bandwidth)
        };
        let plus = eval(1.0)?;
        let minus = eval(-1.0)?;
        grad.push((plus - minus) / (2.0 * opts.step));
    }
    ParamVec::new(grad)
}

/// The estimator's own gradient on the oracle's base batch.
pub fn score_function_gradient(
    kind: EstimatorKind,
    dist: &IsoGaussian,
    task: GradTask,
    opts: &FdOptions,
) -> Result<ParamVec> {
    let batch = draw(dist, task, opts.n, opts.seed)?;
    sf_from_batch(kind, dist, opts, &batch)
}

fn sf_from_batch(kind: EstimatorKind, dist: &IsoGaussian, opts: &FdOptions, batch: &Batch) -> Result<ParamVec> {
    let pd = PopulationDistribution::Iso(dist.clone());
    let scores: Vec<Vec<ParamVec>> = genomes_at(&dist.mean, dist.sigma, &batch.eps)
        .into_iter()
        .map(|z| pd.score(&ParamVec::new(z)?))
        .collect::<Result<_>>()?;
    let est = match kind {
        EstimatorKind::Es => {
            let f = match opts.es_utility {
                EsUtility::Raw => batch.base_fitness.clone(),
                EsUtility::FrozenRank => rank_normalize(&batch.base_fitness),
            };
            es_gradient(&f, &scores)?
        }
        EstimatorKind::MaxVar => maxvar_gradient(&batch.base_bcs, &scores)?,
        EstimatorKind::MaxEnt => {
            let (w, _) = whiten(&batch.base_bcs)?;
            maxent_gradient(&w, &scores, opts.bandwidth)?
        }
    };
    Ok(est.grad.into_iter().next().expect("one component"))
}

pub const MIN_COSINE: f64 = 0.99;
pub const MAX_REL_MAGNITUDE_ERROR: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub estimator: &'static str,
    pub task: &'static str,
    pub n: usize,
    pub score_function: Vec<f64>,
    pub finite_difference: Vec<f64>,
    pub cosine: f64,
    /// `| |sf| - |fd| | / |fd|`.
    pub rel_magnitude_error: f64,
    pub passed: bool,
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Compares the score-function gradient against the oracle on one task.
pub fn compare(kind: EstimatorKind, task: GradTask, opts: &FdOptions) -> Result<GradCheckReport> {
    let dist = task.default_dist();
    compare_at(kind, &dist, task, opts)
}

pub fn compare_at(
    kind: EstimatorKind,
    dist: &IsoGaussian,
    task: GradTask,
    opts: &FdOptions,
) -> Result<GradCheckReport> {
    let batch = draw(dist, task, opts.n, opts.seed)?;
    let sf = sf_from_batch(kind, dist, opts, &batch)?.into_inner();
    let fd = fd_from_batch(kind, dist, task, opts, &batch)?.into_inner();
    let cosine = cosine_similarity(&sf, &fd);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rel = (norm(&sf) - norm(&fd)).abs() / norm(&fd);
    Ok(GradCheckReport {
        estimator: kind.name(),
        task: task.name(),
        n: opts.n,
        passed: cosine > MIN_COSINE && rel < MAX_REL_MAGNITUDE_ERROR,
        score_function: sf,
        finite_difference: fd,
        cosine,
        rel_magnitude_error: rel,
    })
}

/// Every estimator on the 1-D and 5-D synthetic tasks.
pub fn run_suite(n: usize, seed: u64) -> Result<Vec<GradCheckReport>> {
    let mut out = Vec::new();
    for task in [GradTask::Synthetic1d, GradTask::Synthetic5d] {
        for kind in [EstimatorKind::Es, EstimatorKind::MaxVar, EstimatorKind::MaxEnt] {
            let opts = FdOptions::new(n, task.default_dist().sigma, seed);
            out.push(compare(kind, task, &opts)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iso(mean: Vec<f64>, sigma: f64) -> IsoGaussian {
        IsoGaussian::new(ParamVec::new(mean).unwrap(), sigma).unwrap()
    }

    #[test]
    fn raw_es_oracle_on_square() {
        let opts = FdOptions {
            es_utility: EsUtility::Raw,
            ..FdOptions::new(100_000, 0.5, 1)
        };
        let g = finite_difference_check(EstimatorKind::Es, &iso(vec![1.0], 0.5), GradTask::Square, &opts).unwrap();
        assert!((g[0] - 2.0).abs() < 0.05, "{}", g[0]);
    }

    #[test]
    fn maxvar_oracle_on_identity_is_zero() {
        let opts = FdOptions::new(20_000, 0.5, 2);
        let g = finite_difference_check(EstimatorKind::MaxVar, &iso(vec![0.3, -1.0], 0.5), GradTask::Identity, &opts)
            .unwrap();
        assert!(g.norm() < 1e-9, "{:?}", g);
    }

    #[test]
    fn rank_utility_reproduces_ranks_at_base_points() {
        let base = [3.0, -1.0, 2.5, 7.0, 0.0];
        let u = RankUtility::new(&base);
        let ranks = rank_normalize(&base);
        for (f, r) in base.iter().zip(ranks.iter().copied()) {
            assert_eq!(u.eval(*f), r);
        }
        assert_eq!(u.eval(-10.0), -0.5);
        assert_eq!(u.eval(10.0), 0.5);
        assert!((u.eval(1.25) - ranks_between(&ranks)).abs() < 1e-12);
    }

    fn ranks_between(ranks: &[f64]) -> f64 {
        // Halfway between the values 0.0 (rank index 1) and 2.5 (index 2).
        0.5 * (ranks[4] + ranks[2])
    }

    #[test]
    fn es_and_maxvar_agree_with_oracle_in_5d() {
        for kind in [EstimatorKind::Es, EstimatorKind::MaxVar] {
            let r = compare(kind, GradTask::Synthetic5d, &FdOptions::new(100_000, 0.5, 7)).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn maxent_agrees_with_oracle_at_small_n() {
        let r = compare(EstimatorKind::MaxEnt, GradTask::Synthetic1d, &FdOptions::new(4_000, 0.5, 3)).unwrap();
        assert!(r.cosine > 0.99, "{r:?}");
        assert!(r.rel_magnitude_error < 0.1, "{r:?}");
    }

    #[test]
    fn maxvar_on_interference_points_uphill() {
        // The pathwise difference resolves the sin(20x) ripple, so a single
        // batch of 1e5 carries about 5% noise; the mean of 8 batches does not.
        let dist = iso(vec![1.0], 0.5);
        let (mut sf, mut fd) = (0.0, 0.0);
        for seed in 0..8 {
            let r = compare_at(EstimatorKind::MaxVar, &dist, GradTask::Interference, &FdOptions::new(100_000, 0.5, seed))
                .unwrap();
            assert!(r.score_function[0] > 0.0 && r.finite_difference[0] > 0.0);
            assert!(r.rel_magnitude_error < 0.1, "{r:?}");
            sf += r.score_function[0] / 8.0;
            fd += r.finite_difference[0] / 8.0;
        }
        assert!((sf - fd).abs() / fd < 0.05, "sf {sf} fd {fd}");
    }

    #[test]
    fn maxent_on_interference_agrees_in_sign() {
        for mu in [1.0, 4.0, 10.0] {
            let dist = iso(vec![mu], 0.5);
            let r = compare_at(EstimatorKind::MaxEnt, &dist, GradTask::Interference, &FdOptions::new(20_000, 0.5, 8))
                .unwrap();
            assert_eq!(
                r.score_function[0].signum(),
                r.finite_difference[0].signum(),
                "mu={mu}: {r:?}"
            );
        }
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let err = compare_at(
            EstimatorKind::Es,
            &iso(vec![0.0, 0.0], 0.5),
            GradTask::Synthetic1d,
            &FdOptions::new(10, 0.5, 0),
        );
        assert!(err.is_err());
    }
}
