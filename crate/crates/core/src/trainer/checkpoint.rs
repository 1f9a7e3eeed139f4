//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes   "RCRCCKPT"
//! version      u32       1
//! header_len   u64
//! header       JSON      scalar state (config, step size, counters, RNG position, history)
//! blob_count   u32
//! blobs        blob_count x { name_len u16, name utf-8, count u64, count x f64 }
//! digest       32 bytes  SHA-256 of every preceding byte
//! ```
//!
//! Floats in the JSON header are written with round-trip precision, so the
//! state read back is bit-identical to the state written.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::GenerationStats;
use crate::cmaes::CmaSnapshot;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RCRCCKPT";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct RunCheckpoint {
    pub config: RunConfig,
    pub cma: CmaSnapshot,
    pub best: Option<BestCandidate>,
    pub history: Vec<GenerationStats>,
}

/// Highest mean score seen so far and the weights that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestCandidate {
    pub weights: Vec<f64>,
    pub score: f64,
    pub generation: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: RunConfig,
    cma: CmaSnapshot,
    best_score: Option<f64>,
    best_generation: Option<u64>,
    extractor_seed: u64,
    reservoir_seed: u64,
    history: Vec<GenerationStats>,
}

impl RunCheckpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            config: self.config.clone(),
            cma: self.cma.clone(),
            best_score: self.best.as_ref().map(|b| b.score),
            best_generation: self.best.as_ref().map(|b| b.generation),
            extractor_seed: self.config.extractor_seed(),
            reservoir_seed: self.config.reservoir_seed(),
            history: self.history.clone(),
        };
        let json = serde_json::to_vec(&header).map_err(|e| Error::Numerical(e.to_string()))?;
        let mut blobs: Vec<(&str, &[f64])> = vec![
            ("cma.mean", &self.cma.mean),
            ("cma.cov", &self.cma.cov),
            ("cma.p_sigma", &self.cma.p_sigma),
            ("cma.p_c", &self.cma.p_c),
            ("cma.eigen_vectors", &self.cma.eigen_vectors),
            ("cma.eigen_values", &self.cma.eigen_values),
        ];
        if let Some(b) = &self.best {
            blobs.push(("best_weights", &b.weights));
        }

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(blobs.len() as u32).to_le_bytes());
        for (name, values) in blobs {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(values.len() as u64).to_le_bytes());
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 32 {
            return Err(Error::format(bytes.len() as u64, "file too short for a checkpoint"));
        }
        let body_len = bytes.len() - 32;
        let digest = Sha256::digest(&bytes[..body_len]);
        if digest.as_slice() != &bytes[body_len..] {
            return Err(Error::format(body_len as u64, "checksum mismatch"));
        }
        let mut r = Reader {
            bytes: &bytes[..body_len],
            pos: 0,
        };
        if r.take(8)? != MAGIC {
            return Err(Error::format(0, "bad magic, not a checkpoint"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(8, format!("unsupported version {version}")));
        }
        let header_len = r.u64()? as usize;
        let header_at = r.pos;
        let header: Header = serde_json::from_slice(r.take(header_len)?)
            .map_err(|e| Error::format(header_at as u64, format!("header: {e}")))?;

        let count = r.u32()?;
        let mut cma = header.cma;
        let mut best_weights = None;
        for _ in 0..count {
            let at = r.pos as u64;
            let name_len = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::format(at, "blob name is not utf-8"))?
                .to_string();
            let n = r.u64()? as usize;
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::format(at, "blob too large"))?)?;
            let values: Vec<f64> = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 byte chunk")))
                .collect();
            match name.as_str() {
                "cma.mean" => cma.mean = values,
                "cma.cov" => cma.cov = values,
                "cma.p_sigma" => cma.p_sigma = values,
                "cma.p_c" => cma.p_c = values,
                "cma.eigen_vectors" => cma.eigen_vectors = values,
                "cma.eigen_values" => cma.eigen_values = values,
                "best_weights" => best_weights = Some(values),
                other => return Err(Error::format(at, format!("unknown blob {other:?}"))),
            }
        }
        if r.pos != r.bytes.len() {
            return Err(Error::format(r.pos as u64, "trailing bytes before checksum"));
        }
        let config = header.config;
        if config.extractor_seed() != header.extractor_seed || config.reservoir_seed() != header.reservoir_seed {
            return Err(Error::format(header_at as u64, "model seeds disagree with the stored config"));
        }
        let best = match (best_weights, header.best_score, header.best_generation) {
            (Some(weights), Some(score), Some(generation)) => Some(BestCandidate {
                weights,
                score,
                generation,
            }),
            (None, None, None) => None,
            _ => {
                return Err(Error::format(
                    header_at as u64,
                    "best candidate is only partially stored",
                ))
            }
        };
        Ok(Self {
            config,
            cma,
            best,
            history: header.history,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                self.pos as u64,
                format!("truncated: wanted {n} bytes, {} left", self.bytes.len() - self.pos),
            )),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
