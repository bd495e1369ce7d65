//! Population distributions over genome space.
//!
//! The trainable parameters are the component means only. `sigma` is a fixed
//! hyperparameter and mixture weights are fixed and uniform.

use std::ops::{Deref, DerefMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::seeding::{mix, offspring_seed, rng_from_seed, SALT_SPLIT};

/// A flat, finite, real-valued point in genome space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVec(Vec<f64>);

impl ParamVec {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValue("ParamVec must have dim >= 1".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "ParamVec entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(ParamVec(values))
    }

    pub fn zeros(dim: usize) -> Self {
        ParamVec(vec![0.0; dim])
    }

    /// Skips the finiteness check. Callers guarantee the invariant.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        ParamVec(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for ParamVec {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVec {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Isotropic Gaussian `N(mean, sigma^2 I)`.
///
/// `sigma == 0` is accepted so that degenerate point populations can be
/// evaluated; `log_density` and `score` are only meaningful for `sigma > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoGaussian {
    pub mean: ParamVec,
    pub sigma: f64,
}

impl IsoGaussian {
    pub fn new(mean: ParamVec, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidValue(format!("sigma must be >= 0, got {sigma}")));
        }
        Ok(IsoGaussian { mean, sigma })
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    fn log_density_unnormalized(&self, z: &[f64]) -> f64 {
        let sq: f64 = z
            .iter()
            .zip(self.mean.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        -sq / (2.0 * self.sigma * self.sigma)
    }

    fn log_normalizer(&self) -> f64 {
        -0.5 * self.dim() as f64 * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).ln()
    }
}

/// Equal-weight mixture of isotropic Gaussians sharing one `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    means: Vec<ParamVec>,
    sigma: f64,
}

impl GaussianMixture {
    pub fn new(means: Vec<ParamVec>, sigma: f64) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::InvalidValue(format!(
                "a mixture needs at least 2 components, got {}",
                means.len()
            )));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidValue(format!("sigma must be >= 0, got {sigma}")));
        }
        let dim = means[0].dim();
        for m in &means[1..] {
            check_dim("mixture component mean", dim, m.dim())?;
        }
        Ok(GaussianMixture { means, sigma })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.k() as f64
    }

    pub fn component(&self, c: usize) -> IsoGaussian {
        IsoGaussian {
            mean: self.means[c].clone(),
            sigma: self.sigma,
        }
    }

    /// Posterior component probabilities at `z`, computed in log space.
    pub fn responsibilities(&self, z: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .means
            .iter()
            .map(|m| {
                let sq: f64 = z.iter().zip(m.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                -sq / (2.0 * self.sigma * self.sigma)
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PopulationDistribution {
    Iso(IsoGaussian),
    Mixture(GaussianMixture),
}

impl From<IsoGaussian> for PopulationDistribution {
    fn from(g: IsoGaussian) -> Self {
        PopulationDistribution::Iso(g)
    }
}

impl From<GaussianMixture> for PopulationDistribution {
    fn from(g: GaussianMixture) -> Self {
        PopulationDistribution::Mixture(g)
    }
}

/// One sampled genome.
#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub index: usize,
    pub component: usize,
    /// Seed of the noise stream that generated this genome.
    pub seed: u64,
    /// Mirrored partner: the noise was negated.
    pub negated: bool,
    pub genome: ParamVec,
}

impl PopulationDistribution {
    pub fn dim(&self) -> usize {
        self.means()[0].dim()
    }

    pub fn sigma(&self) -> f64 {
        match self {
            PopulationDistribution::Iso(g) => g.sigma,
            PopulationDistribution::Mixture(m) => m.sigma,
        }
    }

    pub fn num_components(&self) -> usize {
        self.means().len()
    }

    /// Trainable means, one per component.
    pub fn means(&self) -> &[ParamVec] {
        match self {
            PopulationDistribution::Iso(g) => std::slice::from_ref(&g.mean),
            PopulationDistribution::Mixture(m) => &m.means,
        }
    }

    pub fn means_mut(&mut self) -> &mut [ParamVec] {
        match self {
            PopulationDistribution::Iso(g) => std::slice::from_mut(&mut g.mean),
            PopulationDistribution::Mixture(m) => &mut m.means,
        }
    }

    /// Regenerates one genome from its noise seed.
    pub fn regenerate(&self, seed: u64, negated: bool) -> (usize, ParamVec) {
        let mut rng = rng_from_seed(seed);
        let k = self.num_components();
        let component = if k > 1 { rng.random_range(0..k) } else { 0 };
        let mean = &self.means()[component];
        let sigma = if negated { -self.sigma() } else { self.sigma() };
        let genome = mean
            .iter()
            .map(|m| {
                let eps: f64 = rng.sample(StandardNormal);
                m + sigma * eps
            })
            .collect();
        (component, ParamVec::from_vec(genome))
    }

    /// Log of the (mixture) density at `z`.
    pub fn log_density(&self, z: &ParamVec) -> Result<f64> {
        check_dim("log_density point", self.dim(), z.dim())?;
        Ok(match self {
            PopulationDistribution::Iso(g) => g.log_normalizer() + g.log_density_unnormalized(z),
            PopulationDistribution::Mixture(m) => {
                let comps: Vec<f64> = (0..m.k())
                    .map(|c| {
                        let g = IsoGaussian {
                            mean: m.means[c].clone(),
                            sigma: m.sigma,
                        };
                        g.log_normalizer() + g.log_density_unnormalized(z)
                    })
                    .collect();
                log_sum_exp(&comps) - (m.k() as f64).ln()
            }
        })
    }

    /// Gradient of `log_density` with respect to each component mean.
    pub fn score(&self, z: &ParamVec) -> Result<Vec<ParamVec>> {
        check_dim("score point", self.dim(), z.dim())?;
        let inv_var = 1.0 / (self.sigma() * self.sigma());
        Ok(match self {
            PopulationDistribution::Iso(g) => vec![ParamVec::from_vec(
                z.iter()
                    .zip(g.mean.iter())
                    .map(|(a, b)| (a - b) * inv_var)
                    .collect(),
            )],
            PopulationDistribution::Mixture(m) => {
                let r = m.responsibilities(z);
                m.means
                    .iter()
                    .zip(r)
                    .map(|(mean, rk)| {
                        ParamVec::from_vec(
                            z.iter()
                                .zip(mean.iter())
                                .map(|(a, b)| rk * (a - b) * inv_var)
                                .collect(),
                        )
                    })
                    .collect()
            }
        })
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Samples `n` offspring. Offspring `i` draws from the stream
/// `offspring_seed(seed, i)`.
pub fn sample_offspring(dist: &PopulationDistribution, n: usize, seed: u64) -> Vec<Offspring> {
    sample_offspring_with(dist, n, seed, false)
}

/// Like [`sample_offspring`]; with `mirrored`, offspring `2j` and `2j + 1`
/// share the stream of pair `j` with opposite noise signs.
pub fn sample_offspring_with(
    dist: &PopulationDistribution,
    n: usize,
    seed: u64,
    mirrored: bool,
) -> Vec<Offspring> {
    (0..n)
        .map(|index| {
            let (stream, negated) = noise_stream(index, mirrored);
            let s = offspring_seed(seed, stream as u64);
            let (component, genome) = dist.regenerate(s, negated);
            Offspring {
                index,
                component,
                seed: s,
                negated,
                genome,
            }
        })
        .collect()
}

pub(crate) fn noise_stream(index: usize, mirrored: bool) -> (usize, bool) {
    if mirrored {
        (index / 2, index % 2 == 1)
    } else {
        (index, false)
    }
}

/// Seeds a `k`-component mixture whose means are independent draws from `parent`.
pub fn split_population(parent: &IsoGaussian, k: usize, seed: u64) -> Result<GaussianMixture> {
    if k < 2 {
        return Err(Error::InvalidValue(format!("split needs k >= 2, got {k}")));
    }
    let dist = PopulationDistribution::Iso(parent.clone());
    let base = mix(seed, SALT_SPLIT);
    let means = (0..k)
        .map(|c| dist.regenerate(offspring_seed(base, c as u64), false).1)
        .collect();
    GaussianMixture::new(means, parent.sigma)
}
