//! Text embeddings behind a small backend enum, plus the cosine kernel.
//!
//! The hashed backend maps lowercase word unigrams and bigrams into `dim`
//! buckets with a signed FNV-1a hash. The precomputed backend looks vectors up
//! by the SHA-256 of the text, so vectors produced by an external sentence
//! encoder can be dropped in.
//!
//! Binary index layout (all integers and reals little-endian):
//!
//! ```text
//! magic   b"TSVX"
//! version u32 = 1
//! dim     u32
//! count   u64
//! count × { sha256: [u8; 32], values: [f64; dim] }
//! ```
//!
//! A JSONL variant with one `{"hash": "<hex>", "vector": [..]}` or
//! `{"text": "..", "vector": [..]}` object per line is also accepted.

use crate::text;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::File;
use std::hash::Hasher;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

pub const DEFAULT_DIM: usize = 1024;
pub const DEFAULT_SEED: u64 = 0x7468_7265_6164;
const MAGIC: &[u8; 4] = b"TSVX";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no precomputed vector for content hash {0}")]
    Missing(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("bad vector index: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        EmbeddingVector { values, norm }
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector { values: vec![0.0; dim], norm: 0.0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    pub fn normalized(mut self) -> Self {
        if self.norm > 0.0 {
            let n = self.norm;
            self.values.iter_mut().for_each(|v| *v /= n);
            self.norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        self
    }

    /// Element-wise mean of non-empty input; zero vector for none.
    pub fn mean(vectors: &[EmbeddingVector], dim: usize) -> EmbeddingVector {
        let mut acc = vec![0.0; dim];
        for v in vectors {
            for (a, x) in acc.iter_mut().zip(&v.values) {
                *a += x;
            }
        }
        if !vectors.is_empty() {
            let n = vectors.len() as f64;
            acc.iter_mut().for_each(|a| *a /= n);
        }
        EmbeddingVector::new(acc)
    }
}

/// `dot(a,b) / (|a||b|)`, defined as 0 when either norm is 0.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch(a.dim(), b.dim()));
    }
    if a.norm == 0.0 || b.norm == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (a.norm * b.norm)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedNGram {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashedNGram {
    fn default() -> Self {
        HashedNGram { dim: DEFAULT_DIM, seed: DEFAULT_SEED }
    }
}

pub(crate) fn fnv(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::with_key(0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    h.write(bytes);
    h.finish()
}

impl HashedNGram {
    /// Bucket index and sign for one n-gram.
    pub fn slot(&self, gram: &str) -> (usize, f64) {
        let idx = (fnv(self.seed, gram.as_bytes()) % self.dim as u64) as usize;
        let sign = if fnv(self.seed ^ 0x5bd1_e995, gram.as_bytes()) & 1 == 0 { 1.0 } else { -1.0 };
        (idx, sign)
    }

    pub fn grams(text: &str) -> Vec<String> {
        let toks = text::tokens(text);
        let mut grams: Vec<String> = toks.clone();
        grams.extend(toks.windows(2).map(|w| format!("{} {}", w[0], w[1])));
        grams
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut values = vec![0.0; self.dim];
        for g in Self::grams(text) {
            let (i, s) = self.slot(&g);
            values[i] += s;
        }
        EmbeddingVector::new(values).normalized()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedIndex {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl PrecomputedIndex {
    pub fn new(dim: usize) -> Self {
        PrecomputedIndex { dim, vectors: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert_text(&mut self, text: &str, values: Vec<f64>) -> Result<(), EmbedError> {
        self.insert_hash(text::content_hash(text), values)
    }

    pub fn insert_hash(&mut self, hash: String, values: Vec<f64>) -> Result<(), EmbedError> {
        if values.len() != self.dim {
            return Err(EmbedError::DimensionMismatch(values.len(), self.dim));
        }
        self.vectors.insert(hash, values);
        Ok(())
    }

    pub fn get(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let h = text::content_hash(text);
        self.vectors
            .get(&h)
            .map(|v| EmbeddingVector::new(v.clone()))
            .ok_or(EmbedError::Missing(h))
    }

    pub fn write_binary<W: Write>(&self, w: W) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(w);
        w.write_all(MAGIC)?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.vectors.len() as u64).to_le_bytes())?;
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort();
        for k in keys {
            let raw = hex::decode(k).map_err(|e| EmbedError::Format(e.to_string()))?;
            if raw.len() != 32 {
                return Err(EmbedError::Format(format!("hash {k} is not 32 bytes")));
            }
            w.write_all(&raw)?;
            for x in &self.vectors[k] {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(r: R) -> Result<Self, EmbedError> {
        let mut r = BufReader::new(r);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(EmbedError::Format("bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != 1 {
            return Err(EmbedError::Format("unsupported version".into()));
        }
        r.read_exact(&mut b4)?;
        let dim = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let count = u64::from_le_bytes(b8);
        let mut idx = PrecomputedIndex::new(dim);
        for _ in 0..count {
            let mut hash = [0u8; 32];
            r.read_exact(&mut hash)?;
            let mut values = Vec::with_capacity(dim);
            for _ in 0..dim {
                r.read_exact(&mut b8)?;
                values.push(f64::from_le_bytes(b8));
            }
            idx.vectors.insert(hex::encode(hash), values);
        }
        Ok(idx)
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, EmbedError> {
        #[derive(Deserialize)]
        struct Line {
            hash: Option<String>,
            text: Option<String>,
            vector: Vec<f64>,
        }
        let mut idx: Option<PrecomputedIndex> = None;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let l: Line = serde_json::from_str(&line).map_err(|e| EmbedError::Format(format!("line {}: {e}", i + 1)))?;
            let ix = idx.get_or_insert_with(|| PrecomputedIndex::new(l.vector.len()));
            let hash = match (l.hash, l.text) {
                (Some(h), _) => h,
                (None, Some(t)) => text::content_hash(&t),
                (None, None) => return Err(EmbedError::Format(format!("line {}: needs hash or text", i + 1))),
            };
            ix.insert_hash(hash, l.vector)?;
        }
        idx.ok_or_else(|| EmbedError::Format("empty index".into()))
    }

    /// Loads either layout, sniffing the magic bytes.
    pub fn load(path: &Path) -> Result<Self, EmbedError> {
        let mut f = File::open(path)?;
        let mut head = [0u8; 4];
        let n = f.read(&mut head)?;
        drop(f);
        let f = File::open(path)?;
        if n == 4 && &head == MAGIC {
            Self::read_binary(f)
        } else {
            Self::read_jsonl(BufReader::new(f))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbeddingBackend {
    HashedNGram(HashedNGram),
    Precomputed(Arc<PrecomputedIndex>),
}

impl Default for EmbeddingBackend {
    fn default() -> Self {
        EmbeddingBackend::HashedNGram(HashedNGram::default())
    }
}

impl EmbeddingBackend {
    pub fn hashed(dim: usize, seed: u64) -> Self {
        EmbeddingBackend::HashedNGram(HashedNGram { dim, seed })
    }

    pub fn dim(&self) -> usize {
        match self {
            EmbeddingBackend::HashedNGram(h) => h.dim,
            EmbeddingBackend::Precomputed(p) => p.dim,
        }
    }

    pub fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        match self {
            EmbeddingBackend::HashedNGram(h) => Ok(h.embed(text)),
            EmbeddingBackend::Precomputed(p) => p.get(text),
        }
    }

    /// Embeds, substituting the zero vector on a precomputed miss.
    pub fn embed_or_zero(&self, text: &str) -> EmbeddingVector {
        self.embed_text(text).unwrap_or_else(|e| {
            log::debug!("{e}; using zero vector");
            EmbeddingVector::zeros(self.dim())
        })
    }
}
