use super::{Embedder, ProviderError};
use crate::text::{tokenize, StopWords};

/// 64-bit FNV-1a hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Offline bag-of-words projector.
///
/// Each lowercased content word `w` adds ±1 to bucket
/// `fnv1a64(w) mod dim`, with sign − when the hash's top bit is set; the sum
/// is L2-normalized. Texts with no content words cannot be embedded.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    dim: usize,
    stop_words: StopWords,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self {
            dim,
            stop_words: StopWords::builtin(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embed_one(&self, text: &str) -> Result<Vec<f32>, ProviderError> {
        let t = tokenize(text, &self.stop_words);
        let mut acc = vec![0.0f64; self.dim];
        for w in &t.filtered_words {
            let h = fnv1a64(w.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            acc[bucket] += if h >> 63 == 1 { -1.0 } else { 1.0 };
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(ProviderError::Generation(format!(
                "no content words to embed in {text:?}"
            )));
        }
        Ok(acc.into_iter().map(|x| (x / norm) as f32).collect())
    }
}

impl Embedder for HashingEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }
}
