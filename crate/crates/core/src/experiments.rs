//! Evaluation protocols built on the trainer: test-time adaptation, seeding
//! standard ES from a trained population, mixture speciation, and behavior
//! distribution summaries.

use std::fmt::Write as _;
use std::path::Path;

use crate::distributions::{split_population, PopulationDistribution};
use crate::error::{Error, Result};
use crate::runtime::{evaluate_population, EvalBatch, EvalRequest, WorkerPool};
use crate::seeding::{mix, offspring_seed, SALT_ADAPT};
use crate::trainer::{
    distribution_from_means, environment_for, init_checkpoint, run_generations, Algo, Checkpoint,
    Direction, GenStats, OptimizerState, TrainConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptReport {
    pub best_seed: u64,
    pub best_score: f64,
    pub all_scores: Vec<f64>,
    /// Index of the best mutation in `all_scores`.
    pub best_index: usize,
}

/// Seed of the `i`-th adaptation mutation. Seeds are nested: the first `k`
/// mutations are the same for every larger `k`.
pub fn adaptation_seed(seed: u64, i: usize) -> u64 {
    offspring_seed(mix(seed, SALT_ADAPT), i as u64)
}

/// Samples `k` mutations of the population, scores each along `objective`
/// (averaged over `n_eval` evaluations), and keeps the best.
pub fn adapt_best_of_k(
    state: &Checkpoint,
    objective: Direction,
    k: usize,
    n_eval: usize,
    seed: u64,
) -> Result<AdaptReport> {
    if k == 0 {
        return Err(Error::InvalidValue("adaptation needs k >= 1".into()));
    }
    if n_eval == 0 {
        return Err(Error::InvalidValue("adaptation needs n_eval >= 1".into()));
    }
    let env = environment_for(&state.config)?;
    check_objective(env.bc_dim(), objective)?;
    let mut all_scores = Vec::with_capacity(k);
    for i in 0..k {
        let (_, genome) = state.dist.regenerate(adaptation_seed(seed, i), false);
        let mut total = 0.0;
        for _ in 0..n_eval {
            let r = env.rollout(&genome, &state.normalizer)?;
            total += objective.score(&r.bc);
        }
        all_scores.push(total / n_eval as f64);
    }
    // First maximum wins, so the result is stable under nested seeds.
    let (best_index, best_score) = all_scores
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
    Ok(AdaptReport {
        best_seed: adaptation_seed(seed, best_index),
        best_score,
        all_scores,
        best_index,
    })
}

fn check_objective(bc_dim: usize, objective: Direction) -> Result<()> {
    if objective.axis() >= bc_dim {
        return Err(Error::InvalidValue(format!(
            "objective {objective} needs a {}-D behavior, environment has {bc_dim}",
            objective.axis() + 1
        )));
    }
    Ok(())
}

/// State for continuing `state` as standard ES on `objective`. The population
/// is kept; the optimizer restarts.
pub fn standard_es_state(state: &Checkpoint, objective: Direction) -> Result<Checkpoint> {
    check_objective(state.config.env.bc_dim(), objective)?;
    let mut config = state.config.clone();
    config.algo = Algo::StandardEs;
    config.objective = objective;
    config.validate()?;
    let k = state.dist.num_components();
    Ok(Checkpoint {
        optimizer: OptimizerState::new(config.optimizer, k, state.dist.dim()),
        config,
        grad_norm_history: Vec::new(),
        ..state.clone()
    })
}

/// Continues training from `state` with standard ES on `objective` and
/// returns the per-generation curve.
pub fn seed_standard_es(
    state: &Checkpoint,
    objective: Direction,
    generations: u64,
    workers: usize,
) -> Result<Vec<GenStats>> {
    let pool = WorkerPool::new(workers)?;
    let start = standard_es_state(state, objective)?;
    Ok(run_generations(start, generations, &pool, |_, _| Ok(()))?.1)
}

/// Fresh standard-ES state with the same config as `state`, for comparison
/// against [`seed_standard_es`].
pub fn fresh_standard_es_state(config: &TrainConfig, objective: Direction) -> Result<Checkpoint> {
    let fresh = init_checkpoint(config)?;
    standard_es_state(&fresh, objective)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedingComparison {
    pub seeded: Vec<GenStats>,
    pub fresh: Vec<GenStats>,
}

impl SeedingComparison {
    /// True when the seeded run's mean fitness beats the fresh run's at every
    /// listed generation.
    pub fn seeded_ahead_at(&self, generations: &[usize]) -> bool {
        generations.iter().all(|&g| {
            matches!((self.seeded.get(g), self.fresh.get(g)),
                (Some(s), Some(f)) if s.fitness_mean > f.fitness_mean)
        })
    }
}

/// Runs standard ES on `objective` twice with the same settings: once from
/// `trained` and once from a fresh initialization of `trained.config`.
/// `learning_rate` replaces the trained config's rate for both runs.
pub fn compare_seeding(
    trained: &Checkpoint,
    objective: Direction,
    generations: u64,
    learning_rate: f64,
    pool: &WorkerPool,
) -> Result<SeedingComparison> {
    let mut seeded = standard_es_state(trained, objective)?;
    let mut fresh = fresh_standard_es_state(&trained.config, objective)?;
    for s in [&mut seeded, &mut fresh] {
        s.config.learning_rate = learning_rate;
        s.config.validate()?;
    }
    Ok(SeedingComparison {
        seeded: run_generations(seeded, generations, pool, |_, _| Ok(()))?.1,
        fresh: run_generations(fresh, generations, pool, |_, _| Ok(()))?.1,
    })
}

/// Draws a large batch from the final population without advancing it.
pub fn sample_batch(state: &Checkpoint, n: usize, pool: &WorkerPool) -> Result<EvalBatch> {
    let env = environment_for(&state.config)?;
    let req = EvalRequest {
        state_sample_prob: 0.0,
        ..EvalRequest::new(n, state.config.run_seed, state.generation)
    };
    evaluate_population(&state.dist, &env, &state.normalizer, &req, pool)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimodalityMetrics {
    pub frac_positive: f64,
    pub mean_abs_bc: f64,
    pub var_trace: f64,
}

/// Smallest batch [`bimodality_metrics`] accepts.
pub const MIN_BIMODALITY_SAMPLES: usize = 100;

pub fn bimodality_metrics(batch: &EvalBatch) -> Result<BimodalityMetrics> {
    let n = batch.len();
    if n < MIN_BIMODALITY_SAMPLES {
        return Err(Error::InvalidValue(format!(
            "bimodality metrics need at least {MIN_BIMODALITY_SAMPLES} offspring, got {n}"
        )));
    }
    let bcs = batch.bc_matrix()?;
    let positive = bcs.iter_rows().filter(|r| r[0] > 0.0).count();
    let mean_abs = bcs
        .iter_rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum::<f64>()
        / n as f64;
    Ok(BimodalityMetrics {
        frac_positive: positive as f64 / n as f64,
        mean_abs_bc: mean_abs,
        var_trace: bcs.var_trace(),
    })
}

/// Histogram of behaviors over `[-range, range]^d`, `d` in {1, 2}.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub dims: usize,
    pub bins: usize,
    pub range: f64,
    pub n: usize,
    pub out_of_range: usize,
    /// Row-major; `bins` cells in 1-D, `bins * bins` in 2-D with the first
    /// behavior coordinate selecting the row.
    pub counts: Vec<u64>,
}

fn bin_of(x: f64, bins: usize, range: f64) -> Option<usize> {
    if !(x >= -range && x <= range) {
        return None;
    }
    // Negative values are binned as the mirror image of their magnitude so
    // that values on cell edges keep a symmetric batch symmetric.
    if x < 0.0 {
        return Some(bins - 1 - upper_bin(-x, bins, range));
    }
    Some(upper_bin(x, bins, range))
}

fn upper_bin(x: f64, bins: usize, range: f64) -> usize {
    let b = ((x + range) / (2.0 * range) * bins as f64).floor() as usize;
    b.min(bins - 1)
}

pub fn export_heatmap(batch: &EvalBatch, bins: usize, range: f64) -> Result<Heatmap> {
    if bins == 0 {
        return Err(Error::InvalidValue("heatmap needs bins >= 1".into()));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidValue(format!("heatmap range must be > 0, got {range}")));
    }
    let bcs = batch.bc_matrix()?;
    let dims = bcs.cols();
    if !(dims == 1 || dims == 2) {
        return Err(Error::InvalidValue(format!(
            "heatmaps cover 1-D or 2-D behaviors, got {dims}-D"
        )));
    }
    let mut counts = vec![0u64; bins.pow(dims as u32)];
    let mut out_of_range = 0;
    for row in bcs.iter_rows() {
        let cell = row
            .iter()
            .try_fold(0usize, |acc, &x| bin_of(x, bins, range).map(|b| acc * bins + b));
        match cell {
            Some(c) => counts[c] += 1,
            None => out_of_range += 1,
        }
    }
    Ok(Heatmap {
        dims,
        bins,
        range,
        n: bcs.rows(),
        out_of_range,
        counts,
    })
}

impl Heatmap {
    /// First line `bins,range,n,out_of_range,dims`; then one line per grid row.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{},{},{},{},{}\n",
            self.bins, self.range, self.n, self.out_of_range, self.dims
        );
        let width = self.bins;
        for row in self.counts.chunks(width) {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", cells.join(",")).expect("writing to a String");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Heatmap> {
        let bad = |m: String| Error::InvalidValue(format!("heatmap csv: {m}"));
        let mut lines = text.lines();
        let meta: Vec<&str> = lines
            .next()
            .ok_or_else(|| bad("empty".into()))?
            .split(',')
            .collect();
        if meta.len() != 5 {
            return Err(bad(format!("metadata row has {} fields, expected 5", meta.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));
        let bins = int(meta[0])?;
        let range: f64 = meta[1].parse().map_err(|e| bad(format!("`{}`: {e}", meta[1])))?;
        let n = int(meta[2])?;
        let out_of_range = int(meta[3])?;
        let dims = int(meta[4])?;
        if bins == 0 || !(dims == 1 || dims == 2) {
            return Err(bad(format!("bad shape bins={bins} dims={dims}")));
        }
        let counts = lines
            .flat_map(|l| l.split(','))
            .map(|c| c.parse::<u64>().map_err(|e| bad(format!("`{c}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if counts.len() != bins.pow(dims as u32) {
            return Err(bad(format!("{} cells for a {bins}^{dims} grid", counts.len())));
        }
        Ok(Heatmap {
            dims,
            bins,
            range,
            n,
            out_of_range,
            counts,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// How a two-component population is created.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeciationMode {
    /// Two independently initialized components from the start.
    Vanilla,
    /// A unimodal population trained for `split_at` generations, then split.
    Splitting { split_at: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeciationReport {
    /// Behavior of each component's mean genome.
    pub component_bcs: Vec<Vec<f64>>,
    pub separation: f64,
    pub speciated: bool,
    pub final_state: Checkpoint,
}

/// Minimum behavior distance counted as speciation when signs agree.
pub const SPECIATION_DISTANCE: f64 = 1.0;

/// True when two behaviors differ in the sign of the first coordinate or lie
/// at least [`SPECIATION_DISTANCE`] apart.
pub fn is_speciated(a: &[f64], b: &[f64]) -> bool {
    let sign_differs = (a[0] > 0.0) != (b[0] > 0.0);
    sign_differs || euclid(a, b) >= SPECIATION_DISTANCE
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Trains a two-component mixture population for `config.generations`
/// generations in total.
pub fn gmm_speciation(
    config: &TrainConfig,
    mode: SpeciationMode,
    pool: &WorkerPool,
) -> Result<SpeciationReport> {
    let final_state = match mode {
        SpeciationMode::Vanilla => {
            let config = TrainConfig {
                mixture_k: 2,
                ..config.clone()
            };
            let start = init_checkpoint(&config)?;
            run_generations(start, config.generations, pool, |_, _| Ok(()))?.0
        }
        SpeciationMode::Splitting { split_at } => {
            if split_at > config.generations {
                return Err(Error::config(
                    "split_at",
                    format!("{split_at} exceeds generations {}", config.generations),
                ));
            }
            let uni = TrainConfig {
                mixture_k: 1,
                ..config.clone()
            };
            let start = init_checkpoint(&uni)?;
            let (trained, _) = run_generations(start, split_at, pool, |_, _| Ok(()))?;
            let parent = match &trained.dist {
                PopulationDistribution::Iso(g) => g.clone(),
                PopulationDistribution::Mixture(_) => unreachable!("unimodal config"),
            };
            let mixture = split_population(&parent, 2, trained.config.run_seed)?;
            let split_config = TrainConfig {
                mixture_k: 2,
                ..uni
            };
            let means = (0..2).map(|c| mixture.component(c).mean).collect();
            let split = Checkpoint {
                dist: distribution_from_means(means, parent.sigma)?,
                optimizer: OptimizerState::new(split_config.optimizer, 2, parent.dim()),
                config: split_config,
                ..trained
            };
            let remaining = config.generations - split_at;
            run_generations(split, remaining, pool, |_, _| Ok(()))?.0
        }
    };
    let env = environment_for(&final_state.config)?;
    let component_bcs = final_state
        .dist
        .means()
        .iter()
        .map(|m| env.rollout(m, &final_state.normalizer).map(|r| r.bc))
        .collect::<Result<Vec<_>>>()?;
    let separation = euclid(&component_bcs[0], &component_bcs[1]);
    let speciated = is_speciated(&component_bcs[0], &component_bcs[1]);
    Ok(SpeciationReport {
        component_bcs,
        separation,
        speciated,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvKind;
    use crate::runtime::EvaluatedOffspring;

    fn batch_of(bcs: &[Vec<f64>]) -> EvalBatch {
        EvalBatch {
            generation: 0,
            offspring: bcs
                .iter()
                .enumerate()
                .map(|(i, bc)| EvaluatedOffspring {
                    index: i,
                    component: 0,
                    seed: i as u64,
                    negated: false,
                    bc: bc.clone(),
                    fitness: bc[0],
                })
                .collect(),
            sampled_states: vec![],
        }
    }

    fn walker_state() -> Checkpoint {
        init_checkpoint(&TrainConfig {
            env: EnvKind::PointWalker1d,
            sigma: 0.1,
            horizon: 30,
            run_seed: 4,
            ..TrainConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn all_positive_batch() {
        let m = bimodality_metrics(&batch_of(&vec![vec![1.0]; 100])).unwrap();
        assert_eq!(m.frac_positive, 1.0);
        assert_eq!(m.mean_abs_bc, 1.0);
        assert_eq!(m.var_trace, 0.0);
    }

    #[test]
    fn two_point_batch() {
        let bcs: Vec<Vec<f64>> = (0..100).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
        let m = bimodality_metrics(&batch_of(&bcs)).unwrap();
        assert_eq!(m.frac_positive, 0.5);
        assert_eq!(m.mean_abs_bc, 1.0);
        assert!((m.var_trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_batches_are_rejected() {
        assert!(bimodality_metrics(&batch_of(&vec![vec![1.0]; 99])).is_err());
    }

    #[test]
    fn origin_lands_in_center_cell() {
        for bins in [1, 2, 5, 10] {
            let h = export_heatmap(&batch_of(&[vec![0.0]]), bins, 3.0).unwrap();
            assert_eq!(h.counts[bins / 2], 1);
            let h2 = export_heatmap(&batch_of(&[vec![0.0, 0.0]]), bins, 3.0).unwrap();
            assert_eq!(h2.counts[(bins / 2) * bins + bins / 2], 1);
        }
    }

    #[test]
    fn counts_are_conserved_and_symmetric() {
        let bcs: Vec<Vec<f64>> = (0..101).map(|i| vec![(i as f64 - 50.0) * 0.1]).collect();
        let h = export_heatmap(&batch_of(&bcs), 8, 4.0).unwrap();
        assert_eq!(h.total() + h.out_of_range as u64, 101);
        assert_eq!(h.out_of_range, 20);
        let sym = export_heatmap(&batch_of(&[vec![1.0], vec![-1.0]]), 6, 3.0).unwrap();
        let rev: Vec<u64> = sym.counts.iter().rev().copied().collect();
        assert_eq!(sym.counts, rev);
    }

    #[test]
    fn heatmap_csv_round_trip() {
        let bcs: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64).sin() * 2.0, (i as f64 * 0.7).cos() * 3.5])
            .collect();
        let h = export_heatmap(&batch_of(&bcs), 7, 0.1 + 2.9).unwrap();
        let text = h.to_csv();
        let back = Heatmap::from_csv(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(back.range.to_bits(), h.range.to_bits());
        assert_eq!(back.to_csv(), text);
    }

    #[test]
    fn adapt_single_mutation_and_determinism() {
        let state = walker_state();
        let one = adapt_best_of_k(&state, Direction::PosX, 1, 3, 11).unwrap();
        assert_eq!(one.best_score, one.all_scores[0]);
        assert_eq!(one.best_seed, adaptation_seed(11, 0));
        let a = adapt_best_of_k(&state, Direction::NegX, 10, 2, 11).unwrap();
        let b = adapt_best_of_k(&state, Direction::NegX, 10, 2, 11).unwrap();
        assert_eq!(a, b);
        let top = a.all_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.best_score, top);
    }

    #[test]
    fn adapt_is_monotone_in_k() {
        let state = walker_state();
        let mut prev = f64::NEG_INFINITY;
        for k in [1, 2, 5, 10, 20] {
            let r = adapt_best_of_k(&state, Direction::PosX, k, 1, 5).unwrap();
            assert!(r.best_score >= prev);
            prev = r.best_score;
        }
    }

    #[test]
    fn adapt_rejects_missing_axis() {
        assert!(adapt_best_of_k(&walker_state(), Direction::PosY, 3, 1, 0).is_err());
    }

    #[test]
    fn seeding_for_zero_generations_is_empty() {
        assert!(seed_standard_es(&walker_state(), Direction::PosX, 0, 1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn speciation_predicate() {
        assert!(is_speciated(&[0.5], &[-0.5]));
        assert!(is_speciated(&[0.5], &[1.5]));
        assert!(!is_speciated(&[0.5], &[1.4]));
    }
}
