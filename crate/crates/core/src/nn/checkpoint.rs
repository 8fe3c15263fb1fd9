//! Versioned little-endian binary checkpoint.
//!
//! Layout: magic `QUADTUNE`, `u32` version, length-prefixed UTF-8 label and
//! experiment config (TOML), `u64` timesteps and iterations, actor and critic
//! networks (`u32` layer count, then per layer `u32` inputs/outputs, row-major
//! weights, bias), `u32`-prefixed log-std, and an optional Adam state.

use std::path::Path;

use super::adam::AdamState;
use super::mlp::{Dense, MlpParameters};
use super::policy::PolicyParameters;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"QUADTUNE";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Preset name or `custom`.
    pub label: String,
    /// Experiment config that produced the policy, as TOML.
    pub config: String,
    pub timesteps: u64,
    pub iterations: u64,
    pub policy: PolicyParameters,
    pub optimizer: Option<AdamState>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(CHECKPOINT_VERSION);
        w.string(&self.label);
        w.string(&self.config);
        w.u64(self.timesteps);
        w.u64(self.iterations);
        w.mlp(&self.policy.actor);
        w.mlp(&self.policy.critic);
        w.floats(&self.policy.log_std);
        match &self.optimizer {
            None => w.0.push(0),
            Some(s) => {
                w.0.push(1);
                w.u64(s.step);
                w.floats(&s.m);
                w.floats(&s.v);
            }
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let label = r.string()?;
        let config = r.string()?;
        let timesteps = r.u64()?;
        let iterations = r.u64()?;
        let actor = r.mlp()?;
        let critic = r.mlp()?;
        let log_std = r.floats()?;
        let policy = PolicyParameters {
            actor,
            critic,
            log_std,
        };
        let optimizer = match r.u8()? {
            0 => None,
            1 => {
                let step = r.u64()?;
                let m = r.floats()?;
                let v = r.floats()?;
                if m.len() != policy.num_parameters() || v.len() != m.len() {
                    return Err(Error::Checkpoint("optimizer state size mismatch".into()));
                }
                Some(AdamState { step, m, v })
            }
            t => return Err(Error::Checkpoint(format!("bad optimizer tag {t}"))),
        };
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        policy.validate()?;
        Ok(Self {
            label,
            config,
            timesteps,
            iterations,
            policy,
            optimizer,
        })
    }

    /// Writes through a temporary file so an existing checkpoint is only
    /// replaced by a complete one.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes()).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u32(u32::try_from(n).expect("length fits in u32"));
    }

    fn string(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn raw_floats(&mut self, v: &[f64]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn floats(&mut self, v: &[f64]) {
        self.len(v.len());
        self.raw_floats(v);
    }

    fn mlp(&mut self, net: &MlpParameters) {
        self.len(net.layers.len());
        for l in &net.layers {
            self.len(l.inputs);
            self.len(l.outputs);
            self.raw_floats(&l.weights);
            self.raw_floats(&l.bias);
        }
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
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Checkpoint("invalid UTF-8 string".into()))
    }

    fn raw_floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("bad length".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn floats(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        self.raw_floats(n)
    }

    fn mlp(&mut self) -> Result<MlpParameters> {
        let n = self.len()?;
        let mut layers = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let inputs = self.len()?;
            let outputs = self.len()?;
            let weights = self.raw_floats(inputs * outputs)?;
            let bias = self.raw_floats(outputs)?;
            if let Some(prev) = layers.last() {
                let prev: &Dense = prev;
                if prev.outputs != inputs {
                    return Err(Error::Checkpoint("inconsistent layer sizes".into()));
                }
            }
            layers.push(Dense {
                inputs,
                outputs,
                weights,
                bias,
            });
        }
        if layers.is_empty() {
            return Err(Error::Checkpoint("network has no layers".into()));
        }
        Ok(MlpParameters { layers })
    }
}
