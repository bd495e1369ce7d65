//! Deterministic evaluation environments: genome -> (behavior, fitness).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::policy::{Mlp, MlpSpec, ObsNormalizer};

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub bc: Vec<f64>,
    pub fitness: f64,
    pub steps: usize,
}

/// `5 sin(x/5) sin(20x)`.
pub fn interference_behavior(x: f64) -> f64 {
    5.0 * (x / 5.0).sin() * (20.0 * x).sin()
}

/// Point-mass walker driven by a policy's acceleration commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointWalkerSpec {
    pub dims: usize,
    pub horizon: usize,
    pub dt: f64,
    pub accel_bound: f64,
    pub speed_bound: f64,
}

impl PointWalkerSpec {
    pub fn new(dims: usize) -> Self {
        PointWalkerSpec {
            dims,
            horizon: 100,
            dt: 0.1,
            accel_bound: 1.0,
            speed_bound: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dims == 1 || self.dims == 2) {
            return Err(Error::InvalidValue(format!(
                "pointwalker dims must be 1 or 2, got {}",
                self.dims
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidValue("pointwalker horizon must be >= 1".into()));
        }
        for (name, v) in [
            ("dt", self.dt),
            ("accel_bound", self.accel_bound),
            ("speed_bound", self.speed_bound),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidValue(format!("pointwalker {name} must be > 0")));
            }
        }
        Ok(())
    }

    /// Position, velocity, and elapsed fraction of the episode.
    pub fn obs_dim(&self) -> usize {
        2 * self.dims + 1
    }

    /// Largest distance from the origin any rollout can reach.
    pub fn reach(&self) -> f64 {
        self.speed_bound * self.dt * self.horizon as f64
    }

    fn check_policy(&self, spec: &MlpSpec) -> Result<()> {
        check_dim("pointwalker policy input", self.obs_dim(), spec.input_dim)?;
        check_dim("pointwalker policy output", self.dims, spec.output_dim)
    }
}

/// Runs one episode from rest at the origin.
pub fn pointwalker_rollout(
    env: &PointWalkerSpec,
    spec: &MlpSpec,
    params: &[f64],
    normalizer: &ObsNormalizer,
) -> Result<RolloutResult> {
    pointwalker_run(env, spec, params, normalizer, None)
}

fn pointwalker_run(
    env: &PointWalkerSpec,
    spec: &MlpSpec,
    params: &[f64],
    normalizer: &ObsNormalizer,
    mut states: Option<&mut Vec<Vec<f64>>>,
) -> Result<RolloutResult> {
    env.validate()?;
    env.check_policy(spec)?;
    let d = env.dims;
    let mut net = Mlp::new(spec, params, normalizer)?;
    let mut pos = vec![0.0; d];
    let mut vel = vec![0.0; d];
    let mut obs = vec![0.0; env.obs_dim()];
    let mut action = vec![0.0; d];
    for t in 0..env.horizon {
        obs[..d].copy_from_slice(&pos);
        obs[d..2 * d].copy_from_slice(&vel);
        obs[2 * d] = t as f64 / env.horizon as f64;
        if let Some(s) = states.as_deref_mut() {
            s.push(obs.clone());
        }
        net.forward(&obs, &mut action)?;
        for (v, a) in vel.iter_mut().zip(&action) {
            *v += env.accel_bound * a * env.dt;
        }
        let speed = vel.iter().map(|v| v * v).sum::<f64>().sqrt();
        if speed > env.speed_bound {
            let k = env.speed_bound / speed;
            vel.iter_mut().for_each(|v| *v *= k);
        }
        for (p, v) in pos.iter_mut().zip(&vel) {
            *p += v * env.dt;
        }
    }
    Ok(RolloutResult {
        fitness: pos[0],
        bc: pos,
        steps: env.horizon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvKind {
    #[serde(rename = "interference")]
    Interference,
    #[serde(rename = "pointwalker1d")]
    PointWalker1d,
    #[serde(rename = "pointwalker2d")]
    PointWalker2d,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [
        EnvKind::Interference,
        EnvKind::PointWalker1d,
        EnvKind::PointWalker2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Interference => "interference",
            EnvKind::PointWalker1d => "pointwalker1d",
            EnvKind::PointWalker2d => "pointwalker2d",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownEnv(name.to_string()))
    }

    pub fn bc_dim(self) -> usize {
        match self {
            EnvKind::Interference | EnvKind::PointWalker1d => 1,
            EnvKind::PointWalker2d => 2,
        }
    }

    pub fn uses_policy(self) -> bool {
        !matches!(self, EnvKind::Interference)
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully specified environment: kind plus the policy and walker settings.
#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    Interference,
    PointWalker {
        walker: PointWalkerSpec,
        policy: MlpSpec,
    },
}

impl Environment {
    pub fn new(kind: EnvKind, policy: Option<&MlpSpec>, horizon: Option<usize>) -> Result<Self> {
        match kind {
            EnvKind::Interference => Ok(Environment::Interference),
            EnvKind::PointWalker1d | EnvKind::PointWalker2d => {
                let mut walker = PointWalkerSpec::new(kind.bc_dim());
                if let Some(h) = horizon {
                    walker.horizon = h;
                }
                walker.validate()?;
                let policy = policy
                    .cloned()
                    .unwrap_or_else(|| MlpSpec::desk(walker.obs_dim(), walker.dims));
                walker.check_policy(&policy)?;
                Ok(Environment::PointWalker { walker, policy })
            }
        }
    }

    pub fn genome_dim(&self) -> usize {
        match self {
            Environment::Interference => 1,
            Environment::PointWalker { policy, .. } => policy.param_count(),
        }
    }

    pub fn bc_dim(&self) -> usize {
        match self {
            Environment::Interference => 1,
            Environment::PointWalker { walker, .. } => walker.dims,
        }
    }

    /// Observation dimension seen by the policy; 0 when there is none.
    pub fn obs_dim(&self) -> usize {
        match self {
            Environment::Interference => 0,
            Environment::PointWalker { walker, .. } => walker.obs_dim(),
        }
    }

    pub fn rollout(&self, genome: &[f64], normalizer: &ObsNormalizer) -> Result<RolloutResult> {
        self.rollout_recording(genome, normalizer, None)
    }

    /// Rollout that optionally records every observation it produced.
    pub fn rollout_recording(
        &self,
        genome: &[f64],
        normalizer: &ObsNormalizer,
        states: Option<&mut Vec<Vec<f64>>>,
    ) -> Result<RolloutResult> {
        check_dim("genome", self.genome_dim(), genome.len())?;
        match self {
            Environment::Interference => Ok(RolloutResult {
                bc: vec![interference_behavior(genome[0])],
                fitness: 0.0,
                steps: 0,
            }),
            Environment::PointWalker { walker, policy } => {
                pointwalker_run(walker, policy, genome, normalizer, states)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::Activation;
    use std::f64::consts::PI;

    #[test]
    fn interference_examples() {
        assert_eq!(interference_behavior(0.0), 0.0);
        assert!(interference_behavior(5.0 * PI / 2.0).abs() < 1e-12);
        let expected = 5.0 * 0.02f64.sin() * 2.0f64.sin();
        assert!((interference_behavior(0.1) - expected).abs() < 1e-15);
        assert!((interference_behavior(0.1) - 0.090_93).abs() < 1e-5);
    }

    #[test]
    fn interference_is_even() {
        for i in 0..1000 {
            let x = i as f64 * 0.0137;
            assert!((interference_behavior(-x) - interference_behavior(x)).abs() < 1e-12);
        }
    }

    fn bias_only_policy(dims: usize) -> MlpSpec {
        MlpSpec {
            input_dim: 2 * dims + 1,
            output_dim: dims,
            hidden: vec![],
            activation: Activation::Tanh,
            output_activation: Activation::Linear,
        }
    }

    #[test]
    fn zero_policy_stays_home() {
        let env = PointWalkerSpec::new(2);
        let spec = MlpSpec::desk(5, 2);
        let r = pointwalker_rollout(&env, &spec, &vec![0.0; spec.param_count()], &ObsNormalizer::new(5))
            .unwrap();
        assert_eq!(r.bc, vec![0.0, 0.0]);
        assert_eq!(r.fitness, 0.0);
        assert_eq!(r.steps, 100);
    }

    #[test]
    fn constant_acceleration_integrates_exactly() {
        let mut env = PointWalkerSpec::new(1);
        env.horizon = 10;
        let spec = bias_only_policy(1);
        // weights 0, bias 1: unit acceleration every step
        let params = [0.0, 0.0, 0.0, 1.0];
        let r = pointwalker_rollout(&env, &spec, &params, &ObsNormalizer::new(3)).unwrap();
        assert!((r.bc[0] - 0.55).abs() < 1e-12, "{}", r.bc[0]);
    }

    #[test]
    fn reach_bound_holds() {
        let env = PointWalkerSpec::new(2);
        let spec = bias_only_policy(2);
        let params = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 50.0, 50.0];
        let r = pointwalker_rollout(&env, &spec, &params, &ObsNormalizer::new(5)).unwrap();
        let dist = (r.bc[0].powi(2) + r.bc[1].powi(2)).sqrt();
        assert!(dist <= env.reach() + 1e-9);
        assert!(dist > 0.5 * env.reach());
    }

    #[test]
    fn mismatched_policy_is_rejected() {
        let env = PointWalkerSpec::new(1);
        let spec = MlpSpec::desk(5, 2);
        let err = pointwalker_rollout(&env, &spec, &vec![0.0; spec.param_count()], &ObsNormalizer::new(5));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rollouts_are_pure() {
        let env = Environment::new(EnvKind::PointWalker2d, None, None).unwrap();
        let genome_a = crate::policy::init_mlp(&MlpSpec::desk(5, 2), 1).unwrap();
        let genome_b = crate::policy::init_mlp(&MlpSpec::desk(5, 2), 2).unwrap();
        let norm = ObsNormalizer::new(5);
        let a1 = env.rollout(&genome_a, &norm).unwrap();
        let b1 = env.rollout(&genome_b, &norm).unwrap();
        let a2 = env.rollout(&genome_a, &norm).unwrap();
        let b2 = env.rollout(&genome_b, &norm).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn registry_names() {
        for k in EnvKind::ALL {
            assert_eq!(EnvKind::from_name(k.name()).unwrap(), k);
        }
        assert!(matches!(EnvKind::from_name("cheetah"), Err(Error::UnknownEnv(_))));
    }
}
