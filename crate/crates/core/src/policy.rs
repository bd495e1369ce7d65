//! Feedforward policies whose flattened weights form the genome.
//!
//! Flat layout, layer by layer: the `out x in` weight matrix in row-major
//! order followed by the `out` biases.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::ParamVec;
use crate::error::{check_dim, Error, Result};
use crate::seeding::{mix, rng_from_seed, SALT_INIT};

/// Lower bound on normalizer standard deviations.
pub const NORMALIZER_STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Linear => x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_activation: Activation,
}

/// Shape of one dense layer inside the flat genome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub inputs: usize,
    pub outputs: usize,
    pub offset: usize,
    pub activation: Activation,
}

impl LayerShape {
    pub fn weight_count(&self) -> usize {
        self.inputs * self.outputs
    }

    pub fn len(&self) -> usize {
        self.weight_count() + self.outputs
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MlpSpec {
    /// Desk-scale default: two hidden layers of 16 tanh units, tanh output.
    pub fn desk(input_dim: usize, output_dim: usize) -> Self {
        MlpSpec {
            input_dim,
            output_dim,
            hidden: vec![16, 16],
            activation: Activation::Tanh,
            output_activation: Activation::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidValue(format!(
                "MLP widths must be >= 1: {}->{:?}->{}",
                self.input_dim, self.hidden, self.output_dim
            )));
        }
        Ok(())
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        let last = widths.len() - 2;
        let mut offset = 0;
        widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let shape = LayerShape {
                    inputs: w[0],
                    outputs: w[1],
                    offset,
                    activation: if l == last {
                        self.output_activation
                    } else {
                        self.activation
                    },
                };
                offset += shape.len();
                shape
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|l| l.len()).sum()
    }
}

/// Weights `~ N(0, 1/fan_in)`, biases zero.
pub fn init_mlp(spec: &MlpSpec, seed: u64) -> Result<ParamVec> {
    spec.validate()?;
    let mut rng = rng_from_seed(mix(seed, SALT_INIT));
    let mut params = Vec::with_capacity(spec.param_count());
    for layer in spec.layers() {
        let scale = 1.0 / (layer.inputs as f64).sqrt();
        for _ in 0..layer.weight_count() {
            let e: f64 = rng.sample(StandardNormal);
            params.push(e * scale);
        }
        params.extend(std::iter::repeat_n(0.0, layer.outputs));
    }
    Ok(ParamVec::from_vec(params))
}

/// One dense layer's weights (`outputs` rows of `inputs` columns) and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Splits a flat genome into per-layer weight matrices and biases.
pub fn unflatten(spec: &MlpSpec, params: &[f64]) -> Result<Vec<DenseParams>> {
    spec.validate()?;
    check_dim("policy parameters", spec.param_count(), params.len())?;
    Ok(spec
        .layers()
        .iter()
        .map(|l| {
            let w = &params[l.offset..l.offset + l.weight_count()];
            DenseParams {
                weights: w.chunks_exact(l.inputs).map(<[f64]>::to_vec).collect(),
                bias: params[l.offset + l.weight_count()..l.offset + l.len()].to_vec(),
            }
        })
        .collect())
}

/// Inverse of [`unflatten`].
pub fn flatten(spec: &MlpSpec, layers: &[DenseParams]) -> Result<ParamVec> {
    spec.validate()?;
    let shapes = spec.layers();
    check_dim("policy layers", shapes.len(), layers.len())?;
    let mut out = Vec::with_capacity(spec.param_count());
    for (shape, layer) in shapes.iter().zip(layers) {
        check_dim("layer rows", shape.outputs, layer.weights.len())?;
        for row in &layer.weights {
            check_dim("layer columns", shape.inputs, row.len())?;
            out.extend_from_slice(row);
        }
        check_dim("layer bias", shape.outputs, layer.bias.len())?;
        out.extend_from_slice(&layer.bias);
    }
    ParamVec::new(out)
}

/// Running mean and second central moment of observed states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub count: u64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl ObsNormalizer {
    pub fn new(dim: usize) -> Self {
        ObsNormalizer {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Population standard deviation, floored.
    pub fn std(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![1.0; self.dim()];
        }
        self.m2
            .iter()
            .map(|m| (m / self.count as f64).sqrt().max(NORMALIZER_STD_FLOOR))
            .collect()
    }

    pub fn normalize_into(&self, obs: &[f64], out: &mut [f64]) {
        if self.count == 0 {
            out.copy_from_slice(obs);
            return;
        }
        for (((o, x), m), m2) in out.iter_mut().zip(obs).zip(&self.mean).zip(&self.m2) {
            let sd = (m2 / self.count as f64).sqrt().max(NORMALIZER_STD_FLOOR);
            *o = (x - m) / sd;
        }
    }

    /// Merges another set of statistics (Chan et al. parallel update).
    pub fn merge(&self, other: &ObsNormalizer) -> ObsNormalizer {
        if other.count == 0 {
            return self.clone();
        }
        if self.count == 0 {
            return other.clone();
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let mut mean = Vec::with_capacity(self.dim());
        let mut m2 = Vec::with_capacity(self.dim());
        for c in 0..self.dim() {
            let delta = other.mean[c] - self.mean[c];
            mean.push(self.mean[c] + delta * nb / n);
            m2.push(self.m2[c] + other.m2[c] + delta * delta * na * nb / n);
        }
        ObsNormalizer {
            count: self.count + other.count,
            mean,
            m2,
        }
    }

    /// Direct two-pass statistics of a batch of states.
    pub fn from_states<S: AsRef<[f64]>>(dim: usize, states: &[S]) -> Result<ObsNormalizer> {
        let mut out = ObsNormalizer::new(dim);
        if states.is_empty() {
            return Ok(out);
        }
        for s in states {
            check_dim("normalizer state", dim, s.as_ref().len())?;
        }
        let n = states.len() as f64;
        for s in states {
            for (m, x) in out.mean.iter_mut().zip(s.as_ref()) {
                *m += x;
            }
        }
        out.mean.iter_mut().for_each(|m| *m /= n);
        for s in states {
            for ((q, x), m) in out.m2.iter_mut().zip(s.as_ref()).zip(&out.mean) {
                *q += (x - m) * (x - m);
            }
        }
        out.count = states.len() as u64;
        Ok(out)
    }
}

pub fn update_normalizer<S: AsRef<[f64]>>(
    normalizer: &ObsNormalizer,
    states: &[S],
) -> Result<ObsNormalizer> {
    let batch = ObsNormalizer::from_states(normalizer.dim(), states)?;
    Ok(normalizer.merge(&batch))
}

/// Evaluates a policy. Buffers are reused across calls through [`Mlp`].
pub fn mlp_forward(
    spec: &MlpSpec,
    params: &[f64],
    obs: &[f64],
    normalizer: &ObsNormalizer,
) -> Result<Vec<f64>> {
    let mut net = Mlp::new(spec, params, normalizer)?;
    let mut out = vec![0.0; spec.output_dim];
    net.forward(obs, &mut out)?;
    Ok(out)
}

/// A policy bound to its parameters, with scratch buffers for repeated calls.
pub struct Mlp<'a> {
    layers: Vec<LayerShape>,
    params: &'a [f64],
    normalizer: &'a ObsNormalizer,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> Mlp<'a> {
    pub fn new(spec: &MlpSpec, params: &'a [f64], normalizer: &'a ObsNormalizer) -> Result<Self> {
        spec.validate()?;
        check_dim("MLP parameters", spec.param_count(), params.len())?;
        if normalizer.count > 0 {
            check_dim("normalizer", spec.input_dim, normalizer.dim())?;
        }
        let widest = spec
            .hidden
            .iter()
            .copied()
            .chain([spec.input_dim, spec.output_dim])
            .max()
            .unwrap_or(1);
        Ok(Mlp {
            layers: spec.layers(),
            params,
            normalizer,
            a: vec![0.0; widest],
            b: vec![0.0; widest],
        })
    }

    pub fn forward(&mut self, obs: &[f64], out: &mut [f64]) -> Result<()> {
        let first = self.layers[0];
        check_dim("observation", first.inputs, obs.len())?;
        let last = self.layers[self.layers.len() - 1];
        check_dim("policy output", last.outputs, out.len())?;
        self.normalizer
            .normalize_into(obs, &mut self.a[..first.inputs]);
        for layer in &self.layers {
            let w = &self.params[layer.offset..layer.offset + layer.weight_count()];
            let bias = &self.params[layer.offset + layer.weight_count()..layer.offset + layer.len()];
            let input = &self.a[..layer.inputs];
            for (o, (row, bv)) in self.b[..layer.outputs]
                .iter_mut()
                .zip(w.chunks_exact(layer.inputs).zip(bias))
            {
                let mut s = *bv;
                for (wv, x) in row.iter().zip(input) {
                    s += wv * x;
                }
                *o = layer.activation.apply(s);
            }
            std::mem::swap(&mut self.a, &mut self.b);
        }
        out.copy_from_slice(&self.a[..last.outputs]);
        Ok(())
    }
}
