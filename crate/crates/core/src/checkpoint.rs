//! Binary checkpoint: a versioned map from parameter name to array, plus
//! the configuration and vocabularies needed to rebuild the model.
//!
//! Layout (little-endian):
//! `"ESCMCKPT"`, `u32` version, `u64` metadata length, metadata JSON,
//! `u32` tensor count, then per tensor `u32` name length, name,
//! `u64` rows, `u64` cols and `rows * cols` `f64` values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::TrainConfig;
use crate::corpus::{RelationSet, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::tensor::Matrix;

const MAGIC: &[u8; 8] = b"ESCMCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub train_config: TrainConfig,
    pub vocab: Vocabulary,
    pub relations: RelationSet,
    pub model: Model,
    /// Iterations completed when the checkpoint was taken.
    pub iteration: usize,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    train_config: TrainConfig,
    model_config: ModelConfig,
    vocab: Vocabulary,
    relations: RelationSet,
    iteration: usize,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&Metadata {
            train_config: self.train_config.clone(),
            model_config: self.model.config.clone(),
            vocab: self.vocab.clone(),
            relations: self.relations.clone(),
            iteration: self.iteration,
        })?;
        let mut out = Vec::with_capacity(meta.len() + self.model.params.num_scalars() * 8 + 1024);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.model.params.len() as u32).to_le_bytes());
        for (_, name, m) in self.model.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let meta_len = r.u64()? as usize;
        let meta: Metadata = serde_json::from_slice(r.take(meta_len)?)?;
        let mut model = Model::new(meta.model_config, 0, None, None)?;
        let count = r.u32()? as usize;
        if count != model.params.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {count} arrays, model expects {}",
                model.params.len()
            )));
        }
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?
                .to_string();
            let rows = r.u64()? as usize;
            let cols = r.u64()? as usize;
            let raw = r.take(rows * cols * 8)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            let id = model
                .params
                .id(&name)
                .ok_or_else(|| Error::Checkpoint(format!("unknown parameter {name}")))?;
            if model.params.get(id).shape() != (rows, cols) {
                return Err(Error::Checkpoint(format!(
                    "parameter {name} is {rows}x{cols}, model expects {:?}",
                    model.params.get(id).shape()
                )));
            }
            *model.params.get_mut(id) = Matrix::from_vec(rows, cols, data);
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes after last array".into()));
        }
        Ok(Checkpoint {
            train_config: meta.train_config,
            vocab: meta.vocab,
            relations: meta.relations,
            model,
            iteration: meta.iteration,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
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

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
