//! Score-function (likelihood-ratio) gradient estimators.
//!
//! Each estimator returns the derivative, at the sampling distribution, of a
//! surrogate of the form `(1/n) sum_i w_i L(z_i; theta)` where `L` is the
//! likelihood ratio (equal to 1 at the sampling parameters). Its gradient is
//! `(1/n) sum_i w_i s_i` with `s_i` the score of offspring `i`; for mixtures
//! `s_i` holds one responsibility-weighted vector per component.
//!
//! Reductions always run in offspring-index order.

use serde::{Deserialize, Serialize};

use crate::distributions::ParamVec;
use crate::error::{check_dim, Error, Result};
use crate::kde;
use crate::shaping::{center, whiten, BcMatrix};

/// Per-offspring score vectors: `scores[i][k]` is the score of offspring `i`
/// with respect to component mean `k`.
pub type Scores = [Vec<ParamVec>];

#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate {
    pub loss: f64,
    /// One gradient per trainable component mean.
    pub grad: Vec<ParamVec>,
    pub n_samples: usize,
}

impl GradEstimate {
    pub fn norm(&self) -> f64 {
        self.grad
            .iter()
            .map(|g| g.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.grad.iter().all(|g| g.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Es,
    MaxVar,
    MaxEnt,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Es => "es",
            EstimatorKind::MaxVar => "maxvar",
            EstimatorKind::MaxEnt => "maxent",
        }
    }
}

/// How behaviors are standardized before a diversity gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcScaling {
    /// Zero mean, unit population std per column.
    #[default]
    Whiten,
    /// Zero mean only; keeps the raw variance scale.
    Center,
}

fn check_scores(n: usize, scores: &Scores) -> Result<(usize, usize)> {
    check_dim("scores per offspring", n, scores.len())?;
    let first = scores
        .first()
        .ok_or_else(|| Error::InvalidValue("empty offspring batch".into()))?;
    let k = first.len();
    let dim = first.first().map(|s| s.dim()).unwrap_or(0);
    for s in scores {
        check_dim("score components", k, s.len())?;
        for v in s {
            check_dim("score dimension", dim, v.dim())?;
        }
    }
    Ok((k, dim))
}

/// `(1/n) sum_i weights_i * scores_i`, per component, accumulated in index order.
pub fn weighted_score_sum(weights: &[f64], scores: &Scores) -> Result<Vec<ParamVec>> {
    let n = weights.len();
    let (k, dim) = check_scores(n, scores)?;
    let mut grad = vec![vec![0.0; dim]; k];
    for (w, s) in weights.iter().zip(scores) {
        for (g, sk) in grad.iter_mut().zip(s) {
            for (gv, sv) in g.iter_mut().zip(sk.iter()) {
                *gv += w * sv;
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    Ok(grad
        .into_iter()
        .map(|g| ParamVec::from_vec(g.into_iter().map(|v| v * inv_n).collect()))
        .collect())
}

/// Standard ES: ascent on the expected (shaped) fitness.
pub fn es_gradient(shaped_fitness: &[f64], scores: &Scores) -> Result<GradEstimate> {
    let grad = weighted_score_sum(shaped_fitness, scores)?;
    let n = shaped_fitness.len();
    Ok(GradEstimate {
        loss: shaped_fitness.iter().sum::<f64>() / n as f64,
        grad,
        n_samples: n,
    })
}

/// MaxVar with whitened behaviors.
pub fn maxvar_gradient(bcs: &BcMatrix, scores: &Scores) -> Result<GradEstimate> {
    maxvar_gradient_with(bcs, scores, BcScaling::Whiten)
}

/// MaxVar: weights are the squared norms of the standardized behaviors. The
/// reported loss is the trace of the raw behavior covariance. The batch
/// statistics are treated as constants of the surrogate.
pub fn maxvar_gradient_with(
    bcs: &BcMatrix,
    scores: &Scores,
    scaling: BcScaling,
) -> Result<GradEstimate> {
    if bcs.rows() < 2 {
        return Err(Error::InvalidValue("MaxVar needs at least 2 offspring".into()));
    }
    let scaled = match scaling {
        BcScaling::Whiten => whiten(bcs)?.0,
        BcScaling::Center => center(bcs),
    };
    let weights: Vec<f64> = scaled
        .iter_rows()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect();
    let grad = weighted_score_sum(&weights, scores)?;
    Ok(GradEstimate {
        loss: bcs.var_trace(),
        grad,
        n_samples: bcs.rows(),
    })
}

/// MaxEnt: gradient of the kernel-density entropy surrogate.
///
/// With `p_i = (1/n) sum_j phi(B_j - B_i)` the loss is `-(1/n) sum_i ln p_i`
/// and the gradient is
/// `-(1/n) sum_i [ln p_i s_i + (1/p_i)(1/n) sum_j phi_ij s_j]`.
/// Behaviors are expected to be whitened by the caller.
pub fn maxent_gradient(bcs: &BcMatrix, scores: &Scores, bandwidth: f64) -> Result<GradEstimate> {
    if bcs.rows() < 2 {
        return Err(Error::InvalidValue("MaxEnt needs at least 2 offspring".into()));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "kernel bandwidth must be > 0, got {bandwidth}"
        )));
    }
    let n = bcs.rows();
    check_scores(n, scores)?;
    let nf = n as f64;
    let p = kde::densities(bcs, bandwidth);
    let inv_p: Vec<f64> = p.iter().map(|v| 1.0 / v).collect();
    // t_j = sum_i phi_ij / p_i (phi is symmetric).
    let t = kde::kernel_sums(bcs, bandwidth, Some(&inv_p));
    let weights: Vec<f64> = p
        .iter()
        .zip(&t)
        .map(|(pj, tj)| -(pj.ln() + tj / nf))
        .collect();
    let grad = weighted_score_sum(&weights, scores)?;
    let loss = -p.iter().map(|v| v.ln()).sum::<f64>() / nf;
    Ok(GradEstimate {
        loss,
        grad,
        n_samples: n,
    })
}
