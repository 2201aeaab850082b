//! Sentence coherency: LSA projection of a per-sentence tf-idf matrix, then
//! the summed cosine similarity of the first sentence against the others.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::text::{words, TokenizedText};

/// Upper bound on the LSA rank.
pub const MAX_LSA_RANK: usize = 32;

/// Inverse document frequency `ln(n / df) + 1`.
///
/// The `+ 1` keeps terms that occur in every document from vanishing; without
/// it a text of repeated sentences would have an all-zero matrix.
pub fn idf(n_docs: usize, df: usize) -> f64 {
    (n_docs as f64 / df.max(1) as f64).ln() + 1.0
}

/// Sentence × term tf-idf matrix with raw term counts. Terms are the
/// lowercased words of each sentence, ordered alphabetically.
pub fn tfidf_matrix(sentences: &[&str]) -> DMatrix<f64> {
    let docs: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| words(s).into_iter().map(str::to_lowercase).collect())
        .collect();
    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        for w in doc {
            vocab.entry(w.as_str()).or_insert(0);
        }
    }
    for (i, col) in vocab.values_mut().enumerate() {
        *col = i;
    }
    let mut counts = DMatrix::<f64>::zeros(docs.len(), vocab.len());
    for (row, doc) in docs.iter().enumerate() {
        for w in doc {
            counts[(row, vocab[w.as_str()])] += 1.0;
        }
    }
    for col in 0..counts.ncols() {
        let df = counts.column(col).iter().filter(|&&c| c > 0.0).count();
        let weight = idf(docs.len(), df);
        counts.column_mut(col).scale_mut(weight);
    }
    counts
}

/// Rows of `U_r Σ_r` for the rank-`r` truncated SVD of `m`, with
/// `r = min(rows, cols, MAX_LSA_RANK)`.
///
/// Computed from the eigendecomposition of the sentence Gram matrix `m mᵀ`
/// (eigenvectors `U`, eigenvalues `σ²`): the bidiagonal SVD loses accuracy on
/// the rank-deficient matrices repeated sentences produce, the symmetric
/// eigensolver does not. Columns are determined up to sign, which leaves
/// row cosines unchanged. Eigenvalues at rounding level count as zero.
pub fn lsa_embeddings(m: &DMatrix<f64>) -> DMatrix<f64> {
    let rank = m.nrows().min(m.ncols()).min(MAX_LSA_RANK);
    if rank == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let eig = (m * m.transpose()).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let floor = top * f64::EPSILON * m.nrows().max(m.ncols()) as f64;
    let mut out = DMatrix::zeros(m.nrows(), rank);
    for (j, &k) in order.iter().take(rank).enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda <= floor {
            continue;
        }
        let sigma = lambda.sqrt();
        for i in 0..m.nrows() {
            out[(i, j)] = eig.eigenvectors[(i, k)] * sigma;
        }
    }
    out
}

fn row_cosine(m: &DMatrix<f64>, a: usize, b: usize) -> f64 {
    let ra = m.row(a);
    let rb = m.row(b);
    let na = ra.norm();
    let nb = rb.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    ra.dot(&rb) / (na * nb)
}

/// Sum of cosine similarities between the first sentence and every later
/// sentence in LSA space. Texts with fewer than two sentences score 0.
pub fn coherency(t: &TokenizedText) -> f64 {
    let sentences: Vec<&str> = t.sentences.iter().map(String::as_str).collect();
    coherency_of_sentences(&sentences)
}

pub fn coherency_of_sentences(sentences: &[&str]) -> f64 {
    if sentences.len() < 2 {
        return 0.0;
    }
    let m = tfidf_matrix(sentences);
    if m.ncols() == 0 {
        return 0.0;
    }
    let emb = lsa_embeddings(&m);
    (1..emb.nrows()).map(|j| row_cosine(&emb, 0, j)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{tokenize, StopWords};

    fn score(s: &str) -> f64 {
        coherency(&tokenize(s, &StopWords::builtin()))
    }

    #[test]
    fn single_sentence_is_zero() {
        assert_eq!(score("Once upon a time there was a king."), 0.0);
        assert_eq!(score(""), 0.0);
    }

    #[test]
    fn identical_sentences() {
        for k in 2..=6 {
            let text = vec!["The old king sang."; k].join(" ");
            assert!((score(&text) - (k as f64 - 1.0)).abs() < 1e-6, "k = {k}");
        }
    }

    #[test]
    fn embeddings_reproduce_the_gram_matrix() {
        let sentences = [
            "The king sang.",
            "The queen sang loudly.",
            "A fox ran.",
            "The king ran home.",
        ];
        let m = tfidf_matrix(&sentences);
        let e = lsa_embeddings(&m);
        let diff = &e * e.transpose() - &m * m.transpose();
        assert!(diff.abs().max() < 1e-9);
        // Repeated sentences once tripped the bidiagonal SVD.
        assert!((score(&vec!["Snow fell on the quiet lake!"; 7].join(" ")) - 6.0).abs() < 1e-6);
    }

    #[test]
    fn disjoint_vocabularies_are_orthogonal() {
        assert!(score("Red fox jumps. Blue whale sings.").abs() < 1e-6);
    }

    #[test]
    fn full_rank_projection_preserves_cosines() {
        // Two sentences sharing one of three terms each.
        let sentences = ["king sings loudly.", "king dances slowly."];
        let m = tfidf_matrix(&sentences);
        let direct = {
            let a = m.row(0);
            let b = m.row(1);
            a.dot(&b) / (a.norm() * b.norm())
        };
        assert!((coherency_of_sentences(&sentences) - direct).abs() < 1e-9);
    }

    #[test]
    fn stop_word_only_sentences_count_as_orthogonal() {
        // Zero rows never happen with the +1 idf, but a sentence of pure
        // punctuation has no terms at all.
        assert!(score("... The king sang.").abs() < 1e-12);
    }
}
