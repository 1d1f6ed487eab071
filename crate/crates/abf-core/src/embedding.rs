//! Deterministic text embedding and similarity.
//!
//! Scores, traces, and reports must be bit-reproducible across runs, threads,
//! and platforms, so there is no learned model here: text is tokenized by an
//! ASCII rule, tokens are hashed with 64-bit FNV-1a into a fixed-dimension
//! count vector, and the vector is L2-normalized. The
//! (tokenize, FNV-1a, dimension) triple is normative — changing any of them
//! changes trace semantics and must bump the snapshot/trace `version` field.

use serde::{Deserialize, Serialize};

/// FNV-1a 64-bit offset basis.
pub const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
/// FNV-1a 64-bit prime.
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Default embedding dimension.
pub const DEFAULT_DIMENSION: usize = 256;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EmbeddingError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Embedder parameters. The hash constants are fixed by contract and not
/// configurable; only the dimension varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderConfig {
    pub dimension: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            dimension: DEFAULT_DIMENSION,
        }
    }
}

impl EmbedderConfig {
    pub fn new(dimension: usize) -> Self {
        Self { dimension }
    }
}

/// 64-bit FNV-1a over a byte string.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET_BASIS;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Bucket index a token hashes to for the given dimension.
pub fn token_index(token: &str, dimension: usize) -> usize {
    (fnv1a64(token.as_bytes()) % dimension as u64) as usize
}

/// Lowercase (ASCII case folding only) and split on every character that is
/// not an ASCII letter or digit, dropping empty fragments.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_lowercase())
        .collect()
}

/// Hashed bag-of-words embedding: each token adds 1.0 at
/// `fnv1a64(token) mod dimension`, then the count vector is L2-normalized.
/// Text with no tokens yields the all-zero vector.
pub fn embed(text: &str, config: &EmbedderConfig) -> Vec<f64> {
    assert!(config.dimension >= 1, "embedding dimension must be >= 1");
    let mut vector = vec![0.0_f64; config.dimension];
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return vector;
    }
    for token in &tokens {
        vector[token_index(token, config.dimension)] += 1.0;
    }
    let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut vector {
        *x /= norm;
    }
    vector
}

/// Cosine similarity, clamped to `[-1, 1]` against rounding. Returns 0.0 when
/// either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_splits_on_non_alphanumeric() {
        assert_eq!(
            tokenize("Hotel in Cambridge!"),
            ["hotel", "in", "cambridge"]
        );
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("a--b  42"), ["a", "b", "42"]);
    }

    #[test]
    fn tokenize_treats_non_ascii_as_separator() {
        assert_eq!(tokenize("caf\u{e9} bar"), ["caf", "bar"]);
    }

    #[test]
    fn empty_text_embeds_to_zero_vector() {
        let config = EmbedderConfig::default();
        let v = embed("", &config);
        assert_eq!(v.len(), 256);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_token_lands_on_fnv_index() {
        // Index frozen from an independent FNV-1a implementation:
        // fnv1a64("memory") = 0x2e78eb99a1612fee, mod 256 = 238.
        assert_eq!(fnv1a64(b"memory"), 0x2e78_eb99_a161_2fee);
        let config = EmbedderConfig::default();
        let v = embed("memory", &config);
        assert_eq!(v[238], 1.0);
        let nonzero = v.iter().filter(|&&x| x != 0.0).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn repeated_token_normalizes_to_same_vector() {
        let config = EmbedderConfig::default();
        assert_eq!(embed("memory memory", &config), embed("memory", &config));
    }

    #[test]
    fn nonempty_embedding_is_unit_norm() {
        let config = EmbedderConfig::default();
        let v = embed("the hotel name is seagull", &config);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn cosine_self_similarity_is_one() {
        let config = EmbedderConfig::default();
        let v = embed("budget memory agent", &config);
        assert_eq!(cosine(&v, &v).unwrap(), 1.0);
    }

    #[test]
    fn cosine_of_disjoint_one_hots_is_zero() {
        // "memory" -> index 238, "train" -> index 9 (independent FNV oracle).
        let config = EmbedderConfig::default();
        let a = embed("memory", &config);
        let b = embed("train", &config);
        assert_eq!(cosine(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cosine_with_zero_vector_is_zero() {
        let config = EmbedderConfig::default();
        let v = embed("memory", &config);
        let zero = vec![0.0; 256];
        assert_eq!(cosine(&v, &zero).unwrap(), 0.0);
    }

    #[test]
    fn cosine_rejects_length_mismatch() {
        let err = cosine(&[1.0, 0.0], &[1.0]).unwrap_err();
        assert_eq!(err, EmbeddingError::LengthMismatch { left: 2, right: 1 });
    }
}
