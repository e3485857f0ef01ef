use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;

const ALPHABET: [char; 4] = ['A', 'C', 'G', 'T'];

/// Number of k-mer columns for `k = 1..=max_k`: `4 + 16 + ... + 4^max_k`.
pub fn kmer_count(max_k: usize) -> usize {
    (1..=max_k).map(|k| 4usize.pow(k as u32)).sum()
}

/// Column names in feature order: all 1-mers, then all 2-mers, and so on,
/// each block in lexicographic `ACGT` order.
pub fn kmer_names(max_k: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(kmer_count(max_k));
    for k in 1..=max_k {
        for code in 0..4usize.pow(k as u32) {
            names.push(
                (0..k)
                    .rev()
                    .map(|p| ALPHABET[(code >> (2 * p)) & 3])
                    .collect(),
            );
        }
    }
    names
}

fn base_code(c: char) -> Option<usize> {
    match c.to_ascii_uppercase() {
        'A' => Some(0),
        'C' => Some(1),
        'G' => Some(2),
        'T' => Some(3),
        _ => None,
    }
}

/// Overlapping k-mer counts for every sequence; column order as in [`kmer_names`].
/// Lowercase bases are accepted. Rows in errors are 0-based sequence indices.
pub fn featurize_kmers<S: AsRef<str>>(sequences: &[S], max_k: usize) -> Result<DesignMatrix> {
    if max_k == 0 || max_k > 12 {
        return Err(Error::InvalidConfig(format!(
            "k-mer length must be between 1 and 12, got {max_k}"
        )));
    }
    let width = kmer_count(max_k);
    let mut data = vec![0.0; sequences.len() * width];
    for (row, (seq, out)) in sequences.iter().zip(data.chunks_exact_mut(width)).enumerate() {
        let codes = seq
            .as_ref()
            .chars()
            .enumerate()
            .map(|(position, ch)| base_code(ch).ok_or(Error::InvalidAlphabet { row, position, ch }))
            .collect::<Result<Vec<_>>>()?;
        let mut offset = 0;
        for k in 1..=max_k {
            let mask = (1usize << (2 * k)) - 1;
            let mut code = 0;
            for (i, c) in codes.iter().enumerate() {
                code = ((code << 2) | c) & mask;
                if i + 1 >= k {
                    out[offset + code] += 1.0;
                }
            }
            offset += 1 << (2 * k);
        }
    }
    DesignMatrix::new(sequences.len(), width, data)
}
