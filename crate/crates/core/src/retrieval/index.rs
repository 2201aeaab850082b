//! Exact cosine top-k over unit-norm vectors, stored in the TTIX format.
//!
//! TTIX layout, all integers little-endian:
//!
//! ```text
//! "TTIX" | u32 version | u32 dim | u64 count |
//!     count × ( u16 id_len | id_len bytes UTF-8 id | dim × f32 )
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{Embedder, ProviderError};

pub const TTIX_MAGIC: &[u8; 4] = b"TTIX";
pub const TTIX_VERSION: u32 = 1;

/// Stored vectors are renormalized only when their norm is further than this
/// from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Below this many entries the scan runs on one thread.
const PARALLEL_THRESHOLD: usize = 16_384;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not a TTIX file")]
    BadMagic,
    #[error("unsupported TTIX version {0}")]
    UnsupportedVersion(u32),
    #[error("index dimension must be positive")]
    ZeroDimension,
    #[error("file truncated in entry {entry}")]
    Truncated { entry: u64 },
    #[error("{0} trailing bytes after the last entry")]
    TrailingBytes(u64),
    #[error("entry {entry}: id is not valid UTF-8")]
    InvalidId { entry: u64 },
    #[error("id {0:?} is longer than 65535 bytes")]
    IdTooLong(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("vector {id:?} has non-finite components")]
    NonFinite { id: String },
    #[error("vector {id:?} has zero norm")]
    ZeroVector { id: String },
    #[error("dimension mismatch: index has {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("metadata line {line}: {reason}")]
    Metadata { line: usize, reason: String },
    #[error("embedding provider: {0}")]
    Provider(#[from] ProviderError),
}

/// One retrieved image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub image_id: String,
    /// Cosine similarity in `[-1, 1]`.
    pub score: f64,
}

/// Hits ordered by descending score, ties by ascending id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub hits: Vec<Hit>,
}

/// In-memory table of unit-norm image embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingIndex {
    dim: usize,
    ids: Vec<String>,
    /// Row-major, `ids.len() × dim`.
    vectors: Vec<f32>,
    /// f64 norms of the stored rows, which are unit only to f32 precision.
    norms: Vec<f64>,
    positions: HashMap<String, usize>,
    attribution: HashMap<String, String>,
}

impl EmbeddingIndex {
    pub fn new(dim: usize) -> Result<Self, IndexError> {
        if dim == 0 {
            return Err(IndexError::ZeroDimension);
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            norms: Vec::new(),
            positions: HashMap::new(),
            attribution: HashMap::new(),
        })
    }

    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut index = Self::new(dim)?;
        for (id, v) in entries {
            index.insert(id, &v)?;
        }
        Ok(index)
    }

    /// Adds a vector, normalizing it when its norm is not already 1.
    pub fn insert(&mut self, id: impl Into<String>, vector: &[f32]) -> Result<(), IndexError> {
        let id = id.into();
        if vector.len() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if id.len() > usize::from(u16::MAX) {
            return Err(IndexError::IdTooLong(id));
        }
        if self.positions.contains_key(&id) {
            return Err(IndexError::DuplicateId(id));
        }
        let unit = unit_vector(vector).map_err(|e| match e {
            VectorProblem::NonFinite => IndexError::NonFinite { id: id.clone() },
            VectorProblem::Zero => IndexError::ZeroVector { id: id.clone() },
        })?;
        self.positions.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.norms.push(norm(&unit));
        self.vectors.extend_from_slice(&unit);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    pub fn vector(&self, id: &str) -> Option<&[f32]> {
        self.positions.get(id).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn attribution(&self, id: &str) -> Option<&str> {
        self.attribution.get(id).map(String::as_str)
    }

    pub fn set_attribution(&mut self, id: impl Into<String>, text: impl Into<String>) {
        self.attribution.insert(id.into(), text.into());
    }

    /// Reads `id \t attribution` lines. Ids missing from the index are skipped
    /// with a warning.
    pub fn read_attribution(&mut self, reader: impl BufRead) -> Result<usize, IndexError> {
        let mut n = 0;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (id, text) = line.split_once('\t').ok_or_else(|| IndexError::Metadata {
                line: i + 1,
                reason: "expected `id<TAB>attribution`".into(),
            })?;
            if !self.contains(id) {
                log::warn!("attribution for unknown image {id:?} ignored");
                continue;
            }
            self.set_attribution(id, text);
            n += 1;
        }
        Ok(n)
    }

    pub fn read_from(reader: impl Read) -> Result<Self, IndexError> {
        let mut r = BufReader::new(reader);
        let mut magic = [0u8; 4];
        read_or(&mut r, &mut magic, || IndexError::BadMagic)?;
        if &magic != TTIX_MAGIC {
            return Err(IndexError::BadMagic);
        }
        let mut header = [0u8; 16];
        read_or(&mut r, &mut header, || IndexError::Truncated { entry: 0 })?;
        let version = u32::from_le_bytes(header[0..4].try_into().unwrap());
        if version != TTIX_VERSION {
            return Err(IndexError::UnsupportedVersion(version));
        }
        let dim = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(header[8..16].try_into().unwrap());
        let mut index = Self::new(dim)?;
        let mut floats = vec![0u8; dim * 4];
        for entry in 0..count {
            let truncated = || IndexError::Truncated { entry };
            let mut len = [0u8; 2];
            read_or(&mut r, &mut len, truncated)?;
            let mut id = vec![0u8; usize::from(u16::from_le_bytes(len))];
            read_or(&mut r, &mut id, truncated)?;
            let id = String::from_utf8(id).map_err(|_| IndexError::InvalidId { entry })?;
            read_or(&mut r, &mut floats, truncated)?;
            let v: Vec<f32> = floats
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            index.insert(id, &v)?;
        }
        let trailing = io::copy(&mut r, &mut io::sink())?;
        if trailing > 0 {
            return Err(IndexError::TrailingBytes(trailing));
        }
        Ok(index)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        Self::read_from(File::open(path)?)
    }

    pub fn write_to(&self, writer: impl Write) -> Result<(), IndexError> {
        let mut w = BufWriter::new(writer);
        w.write_all(TTIX_MAGIC)?;
        w.write_all(&TTIX_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (i, id) in self.ids.iter().enumerate() {
            w.write_all(&(id.len() as u16).to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for x in self.row(i) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        self.write_to(File::create(path)?)
    }

    /// Exact top-`k` by cosine similarity. `k` larger than the index returns
    /// every entry.
    pub fn retrieve(&self, query: &[f32], k: usize) -> Result<RetrievalResult, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query.len() != self.dim {
            return Err(IndexError::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        if query.iter().any(|x| !x.is_finite()) {
            return Err(IndexError::NonFinite { id: "<query>".into() });
        }
        let qn = norm(query);
        if qn == 0.0 {
            return Err(IndexError::ZeroVector { id: "<query>".into() });
        }
        let q: Vec<f64> = query.iter().map(|&x| f64::from(x) / qn).collect();
        let score = |(row, n): (&[f32], &f64)| dot(row, &q) / n;
        let scores: Vec<f64> = if self.len() >= PARALLEL_THRESHOLD {
            self.vectors
                .par_chunks_exact(self.dim)
                .zip(&self.norms)
                .map(score)
                .collect()
        } else {
            self.vectors
                .chunks_exact(self.dim)
                .zip(&self.norms)
                .map(score)
                .collect()
        };
        let mut order: Vec<usize> = (0..self.len()).collect();
        let cmp = |&a: &usize, &b: &usize| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| self.ids[a].cmp(&self.ids[b]))
        };
        let k = k.min(order.len());
        if k < order.len() {
            order.select_nth_unstable_by(k, cmp);
            order.truncate(k);
        }
        order.sort_unstable_by(cmp);
        Ok(RetrievalResult {
            hits: order
                .into_iter()
                .map(|i| Hit {
                    image_id: self.ids[i].clone(),
                    score: scores[i].clamp(-1.0, 1.0),
                })
                .collect(),
        })
    }

    /// Embeds `text` with `embedder` and retrieves against it.
    pub fn retrieve_text(&self, text: &str, embedder: &dyn Embedder, k: usize) -> Result<RetrievalResult, IndexError> {
        let q = embed_query(text, embedder, self.dim)?;
        self.retrieve(&q, k)
    }
}

fn read_or<R: Read>(r: &mut R, buf: &mut [u8], err: impl Fn() -> IndexError) -> Result<(), IndexError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            err()
        } else {
            IndexError::Io(e)
        }
    })
}

enum VectorProblem {
    NonFinite,
    Zero,
}

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn unit_vector(v: &[f32]) -> Result<Vec<f32>, VectorProblem> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(VectorProblem::NonFinite);
    }
    let norm = norm(v);
    if norm == 0.0 {
        return Err(VectorProblem::Zero);
    }
    if (norm - 1.0).abs() <= NORM_TOLERANCE {
        return Ok(v.to_vec());
    }
    Ok(v.iter().map(|&x| (f64::from(x) / norm) as f32).collect())
}

fn dot(row: &[f32], q: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let mut rows = row.chunks_exact(4);
    let mut qs = q.chunks_exact(4);
    for (r, q) in (&mut rows).zip(&mut qs) {
        for l in 0..4 {
            acc[l] += f64::from(r[l]) * q[l];
        }
    }
    let mut tail = 0.0;
    for (r, q) in rows.remainder().iter().zip(qs.remainder()) {
        tail += f64::from(*r) * q;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Unit-norm embedding of `text`, checked against the index dimension.
pub fn embed_query(text: &str, embedder: &dyn Embedder, dim: usize) -> Result<Vec<f32>, IndexError> {
    let mut vs = embedder.embed(&[text.to_owned()])?;
    let v = vs
        .pop()
        .ok_or_else(|| IndexError::Provider(ProviderError::Protocol("embedder returned no vector".into())))?;
    if v.len() != dim {
        return Err(IndexError::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    unit_vector(&v).map_err(|_| IndexError::Provider(ProviderError::Protocol("embedding is zero or non-finite".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::HashingEmbedder;

    fn two_d() -> EmbeddingIndex {
        EmbeddingIndex::from_entries(2, [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]).unwrap()
    }

    #[test]
    fn exact_match() {
        let r = two_d().retrieve(&[1.0, 0.0], 1).unwrap();
        assert_eq!(
            r.hits,
            vec![Hit {
                image_id: "a".into(),
                score: 1.0
            }]
        );
    }

    #[test]
    fn dot_products_by_hand() {
        let r = two_d().retrieve(&[0.6, 0.8], 2).unwrap();
        assert_eq!(r.hits[0].image_id, "b");
        assert_eq!(r.hits[1].image_id, "a");
        assert!((r.hits[0].score - 0.8).abs() < 1e-6);
        assert!((r.hits[1].score - 0.6).abs() < 1e-6);
    }

    #[test]
    fn ties_by_ascending_id_and_k_clamped() {
        let idx =
            EmbeddingIndex::from_entries(2, [("z", vec![1.0, 0.0]), ("m", vec![2.0, 0.0]), ("c", vec![0.0, 1.0])])
                .unwrap();
        let r = idx.retrieve(&[1.0, 0.0], 10).unwrap();
        let ids: Vec<&str> = r.hits.iter().map(|h| h.image_id.as_str()).collect();
        assert_eq!(ids, vec!["m", "z", "c"]);
    }

    #[test]
    fn query_errors() {
        let idx = two_d();
        assert!(matches!(
            idx.retrieve(&[1.0], 1),
            Err(IndexError::DimensionMismatch { .. })
        ));
        assert!(matches!(idx.retrieve(&[1.0, 0.0], 0), Err(IndexError::InvalidK)));
        assert!(matches!(
            idx.retrieve(&[0.0, 0.0], 1),
            Err(IndexError::ZeroVector { .. })
        ));
    }

    #[test]
    fn insert_validation() {
        let mut idx = EmbeddingIndex::new(2).unwrap();
        assert!(matches!(
            idx.insert("n", &[f32::NAN, 1.0]),
            Err(IndexError::NonFinite { .. })
        ));
        assert!(matches!(
            idx.insert("z", &[0.0, 0.0]),
            Err(IndexError::ZeroVector { .. })
        ));
        assert!(matches!(
            idx.insert("d", &[1.0]),
            Err(IndexError::DimensionMismatch { .. })
        ));
        idx.insert("a", &[3.0, 4.0]).unwrap();
        assert_eq!(idx.vector("a").unwrap(), &[0.6, 0.8]);
        assert!(matches!(idx.insert("a", &[1.0, 0.0]), Err(IndexError::DuplicateId(_))));
        assert!(matches!(EmbeddingIndex::new(0), Err(IndexError::ZeroDimension)));
    }

    fn encode(dim: u32, entries: &[(&str, Vec<f32>)]) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend_from_slice(b"TTIX");
        b.extend_from_slice(&1u32.to_le_bytes());
        b.extend_from_slice(&dim.to_le_bytes());
        b.extend_from_slice(&(entries.len() as u64).to_le_bytes());
        for (id, v) in entries {
            b.extend_from_slice(&(id.len() as u16).to_le_bytes());
            b.extend_from_slice(id.as_bytes());
            for x in v {
                b.extend_from_slice(&x.to_le_bytes());
            }
        }
        b
    }

    #[test]
    fn reads_hand_encoded_file() {
        let bytes = encode(
            4,
            &[
                ("x", vec![1.0, 0.0, 0.0, 0.0]),
                ("y", vec![0.0, 2.0, 0.0, 0.0]),
                ("zz", vec![0.5, 0.5, 0.5, 0.5]),
            ],
        );
        let idx = EmbeddingIndex::read_from(&bytes[..]).unwrap();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.dim(), 4);
        assert_eq!(idx.vector("y").unwrap(), &[0.0, 1.0, 0.0, 0.0]);
        let mut out = Vec::new();
        EmbeddingIndex::from_entries(
            4,
            [
                ("x", vec![1.0, 0.0, 0.0, 0.0]),
                ("y", vec![0.0, 1.0, 0.0, 0.0]),
                ("zz", vec![0.5; 4]),
            ],
        )
        .unwrap()
        .write_to(&mut out)
        .unwrap();
        assert_eq!(
            out,
            encode(
                4,
                &[
                    ("x", vec![1.0, 0.0, 0.0, 0.0]),
                    ("y", vec![0.0, 1.0, 0.0, 0.0]),
                    ("zz", vec![0.5; 4])
                ]
            )
        );
    }

    #[test]
    fn load_errors_are_distinct() {
        let good = encode(2, &[("a", vec![1.0, 0.0])]);
        assert!(matches!(
            EmbeddingIndex::read_from(&b"NOPE"[..]),
            Err(IndexError::BadMagic)
        ));
        assert!(matches!(
            EmbeddingIndex::read_from(&good[..good.len() - 1]),
            Err(IndexError::Truncated { entry: 0 })
        ));
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(
            EmbeddingIndex::read_from(&trailing[..]),
            Err(IndexError::TrailingBytes(1))
        ));
        let nan = encode(2, &[("a", vec![f32::NAN, 0.0])]);
        assert!(matches!(
            EmbeddingIndex::read_from(&nan[..]),
            Err(IndexError::NonFinite { .. })
        ));
        let mut v2 = good.clone();
        v2[4] = 2;
        assert!(matches!(
            EmbeddingIndex::read_from(&v2[..]),
            Err(IndexError::UnsupportedVersion(2))
        ));
        let zero_dim = encode(0, &[]);
        assert!(matches!(
            EmbeddingIndex::read_from(&zero_dim[..]),
            Err(IndexError::ZeroDimension)
        ));
        let mut bad_utf8 = encode(2, &[("a", vec![1.0, 0.0])]);
        bad_utf8[22] = 0xff;
        assert!(matches!(
            EmbeddingIndex::read_from(&bad_utf8[..]),
            Err(IndexError::InvalidId { entry: 0 })
        ));
    }

    #[test]
    fn attribution_tsv() {
        let mut idx = two_d();
        let n = idx
            .read_attribution("a\tPhoto by Ann\nq\tunknown\n".as_bytes())
            .unwrap();
        assert_eq!(n, 1);
        assert_eq!(idx.attribution("a"), Some("Photo by Ann"));
        assert!(idx.read_attribution("no tab here\n".as_bytes()).is_err());
    }

    #[test]
    fn text_queries_use_the_embedder() {
        let e = HashingEmbedder::new(32);
        let idx = EmbeddingIndex::from_entries(
            32,
            [
                ("fox", e.embed_one("a red fox in the snowy forest").unwrap()),
                ("ship", e.embed_one("a tall ship on a stormy sea").unwrap()),
            ],
        )
        .unwrap();
        let r = idx.retrieve_text("The fox crept through the forest.", &e, 1).unwrap();
        assert_eq!(r.hits[0].image_id, "fox");
        let small = HashingEmbedder::new(8);
        assert!(matches!(
            idx.retrieve_text("fox", &small, 1),
            Err(IndexError::DimensionMismatch { expected: 32, found: 8 })
        ));
    }
}
