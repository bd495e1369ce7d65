//! Checkpoint file format (all integers and floats little-endian):
//!
//! ```text
//! b"EVES"            magic
//! u32                format version
//! u32                header length in bytes
//! [u8; len]          JSON header (config, generation, shapes, counters)
//! f64 arrays, in order:
//!   component means          k * dim
//!   adam first moments       k * dim   (adam only)
//!   adam second moments      k * dim   (adam only)
//!   normalizer mean          obs_dim
//!   normalizer m2            obs_dim
//!   gradient-norm history    history_len
//! ```
//!
//! The file must end exactly after the last array.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::optimizer::OptimizerState;
use crate::distributions::{GaussianMixture, IsoGaussian, ParamVec, PopulationDistribution};
use crate::error::{Error, Result};
use crate::policy::ObsNormalizer;

pub const MAGIC: &[u8; 4] = b"EVES";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub dist: PopulationDistribution,
    pub optimizer: OptimizerState,
    pub normalizer: ObsNormalizer,
    pub generation: u64,
    /// Gradient norms seen so far; feeds the optional median clip.
    pub grad_norm_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    config: TrainConfig,
    generation: u64,
    distribution: DistHeader,
    optimizer: OptHeader,
    normalizer: NormHeader,
    history_len: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistHeader {
    mixture: bool,
    components: usize,
    dim: usize,
    sigma: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptHeader {
    adam: bool,
    step: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NormHeader {
    count: u64,
    dim: usize,
}

fn put_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let k = self.dist.num_components();
        let dim = self.dist.dim();
        let (adam, step) = match &self.optimizer {
            OptimizerState::Sgd => (false, 0),
            OptimizerState::Adam { step, .. } => (true, *step),
        };
        let header = Header {
            config: self.config.clone(),
            generation: self.generation,
            distribution: DistHeader {
                mixture: matches!(self.dist, PopulationDistribution::Mixture(_)),
                components: k,
                dim,
                sigma: self.dist.sigma(),
            },
            optimizer: OptHeader { adam, step },
            normalizer: NormHeader {
                count: self.normalizer.count,
                dim: self.normalizer.dim(),
            },
            history_len: self.grad_norm_history.len(),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::InvalidValue(format!("cannot encode checkpoint header: {e}")))?;
        let mut buf = Vec::with_capacity(12 + json.len() + 8 * (3 * k * dim + 16));
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&self.version.to_le_bytes());
        buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
        buf.extend_from_slice(&json);
        for m in self.dist.means() {
            put_f64s(&mut buf, m);
        }
        if let OptimizerState::Adam { m, v, .. } = &self.optimizer {
            for x in m.iter().chain(v) {
                put_f64s(&mut buf, x);
            }
        }
        put_f64s(&mut buf, &self.normalizer.mean);
        put_f64s(&mut buf, &self.normalizer.m2);
        put_f64s(&mut buf, &self.grad_norm_history);
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::CorruptCheckpoint("bad magic (not an EVES file)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnknownVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let len = r.u32()? as usize;
        let header: Header = serde_json::from_slice(r.take(len)?)
            .map_err(|e| Error::CorruptCheckpoint(format!("header: {e}")))?;

        let DistHeader {
            mixture,
            components: k,
            dim,
            sigma,
        } = header.distribution;
        if k == 0 || dim == 0 || (mixture && k < 2) || (!mixture && k != 1) {
            return Err(Error::CorruptCheckpoint(format!(
                "inconsistent distribution shape: mixture={mixture}, k={k}, dim={dim}"
            )));
        }
        let means = r.vecs(k, dim)?;
        let dist = if mixture {
            GaussianMixture::new(means, sigma)
                .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?
                .into()
        } else {
            let mean = means.into_iter().next().expect("k == 1");
            IsoGaussian::new(mean, sigma)
                .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?
                .into()
        };
        let optimizer = if header.optimizer.adam {
            OptimizerState::Adam {
                step: header.optimizer.step,
                m: r.vecs(k, dim)?,
                v: r.vecs(k, dim)?,
            }
        } else {
            OptimizerState::Sgd
        };
        let nd = header.normalizer.dim;
        let normalizer = ObsNormalizer {
            count: header.normalizer.count,
            mean: r.f64s(nd)?,
            m2: r.f64s(nd)?,
        };
        let grad_norm_history = r.f64s(header.history_len)?;
        if r.pos != bytes.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        let cp = Checkpoint {
            version,
            config: header.config,
            dist,
            optimizer,
            normalizer,
            generation: header.generation,
            grad_norm_history,
        };
        cp.config
            .validate()
            .map_err(|e| Error::CorruptCheckpoint(format!("stored config is invalid: {e}")))?;
        Ok(cp)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| {
                Error::CorruptCheckpoint(format!(
                    "truncated: needed {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ))
            })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| {
            Error::CorruptCheckpoint(format!("array length {n} overflows"))
        })?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn vecs(&mut self, k: usize, dim: usize) -> Result<Vec<ParamVec>> {
        (0..k)
            .map(|_| {
                ParamVec::new(self.f64s(dim)?).map_err(|e| Error::CorruptCheckpoint(e.to_string()))
            })
            .collect()
    }
}

pub fn save_checkpoint(state: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = state.to_bytes()?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}
