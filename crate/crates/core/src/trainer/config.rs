use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::estimators::BcScaling;
use crate::policy::MlpSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    StandardEs,
    MaxvarEes,
    MaxentEes,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::StandardEs => "standard_es",
            Algo::MaxvarEes => "maxvar_ees",
            Algo::MaxentEes => "maxent_ees",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Signed displacement along one axis of the behavior space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

impl Direction {
    pub fn axis(self) -> usize {
        match self {
            Direction::PosX | Direction::NegX => 0,
            Direction::PosY | Direction::NegY => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Direction::PosX | Direction::PosY => 1.0,
            Direction::NegX | Direction::NegY => -1.0,
        }
    }

    pub fn score(self, bc: &[f64]) -> f64 {
        self.sign() * bc[self.axis()]
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::PosX => "+x",
            Direction::NegX => "-x",
            Direction::PosY => "+y",
            Direction::NegY => "-y",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+x" | "x" => Ok(Direction::PosX),
            "-x" => Ok(Direction::NegX),
            "+y" | "y" => Ok(Direction::PosY),
            "-y" => Ok(Direction::NegY),
            other => Err(Error::InvalidValue(format!(
                "unknown direction `{other}` (expected +x, -x, +y or -y)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub algo: Algo,
    pub env: EnvKind,
    pub population_size: usize,
    pub sigma: f64,
    pub learning_rate: f64,
    pub l2_coef: f64,
    pub kernel_bandwidth: f64,
    pub generations: u64,
    pub optimizer: OptimizerKind,
    pub mirrored: bool,
    pub run_seed: u64,
    /// Policy architecture for the walker environments; `None` uses the desk default.
    pub mlp: Option<MlpSpec>,
    /// Number of mixture components; 1 is a unimodal population.
    pub mixture_k: usize,
    /// Behavior standardization applied before the diversity estimators.
    pub bc_scaling: BcScaling,
    /// Fitness for standard ES on the walker environments.
    pub objective: Direction,
    /// Starting mean for environments without a policy network.
    pub init_mean: f64,
    /// Walker episode length.
    pub horizon: usize,
    /// Write an intermediate checkpoint every this many generations (0: final only).
    pub checkpoint_every: u64,
    /// Clip gradient norms at 10x the running median.
    pub grad_clip: bool,
    /// Record measured wall time in the run log (otherwise the column is 0).
    pub log_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algo: Algo::MaxvarEes,
            env: EnvKind::Interference,
            population_size: 500,
            sigma: 0.5,
            learning_rate: 0.03,
            l2_coef: 0.0,
            kernel_bandwidth: 1.0,
            generations: 300,
            optimizer: OptimizerKind::Sgd,
            mirrored: false,
            run_seed: 0,
            mlp: None,
            mixture_k: 1,
            bc_scaling: BcScaling::Whiten,
            objective: Direction::PosX,
            init_mean: 1.0,
            horizon: 100,
            checkpoint_every: 0,
            grad_clip: false,
            log_wall_time: false,
        }
    }
}

fn constraint(key: &str, message: impl Into<String>) -> Error {
    Error::config(key, message)
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(constraint("population_size", "must be >= 2"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(constraint("sigma", "must be > 0"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(constraint("learning_rate", "must be > 0"));
        }
        if !(self.l2_coef >= 0.0 && self.l2_coef.is_finite()) {
            return Err(constraint("l2_coef", "must be >= 0"));
        }
        if !(self.kernel_bandwidth > 0.0 && self.kernel_bandwidth.is_finite()) {
            return Err(constraint("kernel_bandwidth", "must be > 0"));
        }
        if self.mixture_k == 0 {
            return Err(constraint("mixture_k", "must be >= 1"));
        }
        if !self.init_mean.is_finite() {
            return Err(constraint("init_mean", "must be finite"));
        }
        if self.horizon == 0 {
            return Err(constraint("horizon", "must be >= 1"));
        }
        if self.mirrored && self.population_size % 2 != 0 {
            return Err(constraint(
                "population_size",
                "must be even when mirrored sampling is on",
            ));
        }
        if self.objective.axis() >= self.env.bc_dim() {
            return Err(constraint(
                "objective",
                format!("{} has no axis for {}", self.env, self.objective),
            ));
        }
        if let Some(mlp) = &self.mlp {
            if !self.env.uses_policy() {
                return Err(constraint("mlp", format!("{} does not use a policy", self.env)));
            }
            mlp.validate().map_err(|e| constraint("mlp", e.to_string()))?;
            let dims = self.env.bc_dim();
            if mlp.input_dim != 2 * dims + 1 || mlp.output_dim != dims {
                return Err(constraint(
                    "mlp",
                    format!(
                        "{} needs input_dim {} and output_dim {}",
                        self.env,
                        2 * dims + 1,
                        dims
                    ),
                ));
            }
        }
        Ok(())
    }

    /// Policy architecture actually used for a walker environment.
    pub fn policy(&self) -> Option<MlpSpec> {
        if !self.env.uses_policy() {
            return None;
        }
        let dims = self.env.bc_dim();
        Some(
            self.mlp
                .clone()
                .unwrap_or_else(|| MlpSpec::desk(2 * dims + 1, dims)),
        )
    }
}
