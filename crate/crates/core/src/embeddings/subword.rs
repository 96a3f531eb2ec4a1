use std::collections::HashMap;

use crate::linalg::Matrix;

pub const BOW: char = '<';
pub const EOW: char = '>';

/// Character n-grams (`n_min..=n_max`) of `<word>`. The whole wrapped word
/// appears among them whenever its length is within range.
///
/// ```
/// let grams = stackner::embeddings::extract_ngrams("a", 3, 6);
/// assert_eq!(grams, ["<a>"]);
/// ```
pub fn extract_ngrams(word: &str, n_min: usize, n_max: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once(BOW)
        .chain(word.chars())
        .chain(std::iter::once(EOW))
        .collect();
    let mut out = Vec::new();
    for n in n_min..=n_max {
        if n > wrapped.len() {
            break;
        }
        for start in 0..=wrapped.len() - n {
            out.push(wrapped[start..start + n].iter().collect());
        }
    }
    out
}

/// 32-bit FNV-1a, used for bucketed n-gram ids.
pub fn fnv1a(s: &str) -> u32 {
    let mut h: u32 = 2_166_136_261;
    for b in s.bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(16_777_619);
    }
    h
}

/// N-gram → row mapping plus the n-gram vectors.
///
/// With `buckets == None` every n-gram seen in training gets its own row;
/// otherwise ids are `fnv1a(ngram) % buckets` and collisions share rows.
#[derive(Clone, Debug, PartialEq)]
pub struct SubwordIndex {
    pub n_min: usize,
    pub n_max: usize,
    pub buckets: Option<usize>,
    ngram_to_id: HashMap<String, usize>,
    pub matrix: Matrix,
}

impl SubwordIndex {
    /// Exact dictionary built from the n-grams of `words`, ids assigned in
    /// first-seen order.
    pub fn exact<'a>(words: impl IntoIterator<Item = &'a str>, n_min: usize, n_max: usize, dim: usize) -> Self {
        let mut ngram_to_id = HashMap::new();
        for w in words {
            for g in extract_ngrams(w, n_min, n_max) {
                let next = ngram_to_id.len();
                ngram_to_id.entry(g).or_insert(next);
            }
        }
        let rows = ngram_to_id.len();
        SubwordIndex {
            n_min,
            n_max,
            buckets: None,
            ngram_to_id,
            matrix: Matrix::zeros(rows, dim),
        }
    }

    pub fn hashed(buckets: usize, n_min: usize, n_max: usize, dim: usize) -> Self {
        SubwordIndex {
            n_min,
            n_max,
            buckets: Some(buckets),
            ngram_to_id: HashMap::new(),
            matrix: Matrix::zeros(buckets, dim),
        }
    }

    pub fn from_parts(n_min: usize, n_max: usize, ngram_to_id: HashMap<String, usize>, matrix: Matrix) -> Self {
        SubwordIndex {
            n_min,
            n_max,
            buckets: None,
            ngram_to_id,
            matrix,
        }
    }

    pub fn id(&self, ngram: &str) -> Option<usize> {
        match self.buckets {
            Some(b) => Some(fnv1a(ngram) as usize % b),
            None => self.ngram_to_id.get(ngram).copied(),
        }
    }

    /// Row ids of the known n-grams of `word` and the total n-gram count.
    pub fn ids_for(&self, word: &str) -> (Vec<usize>, usize) {
        let grams = extract_ngrams(word, self.n_min, self.n_max);
        let total = grams.len();
        (grams.iter().filter_map(|g| self.id(g)).collect(), total)
    }

    pub fn len(&self) -> usize {
        self.matrix.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.rows() == 0
    }

    /// `(ngram, id)` pairs sorted by id (exact mode only).
    pub fn entries(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.ngram_to_id.iter().map(|(g, &i)| (g.as_str(), i)).collect();
        v.sort_by_key(|&(_, i)| i);
        v
    }

    pub fn compose(&self, word: &str) -> (Vec<f64>, usize) {
        let (ids, _) = self.ids_for(word);
        let mut v = vec![0.0; self.matrix.cols()];
        for &id in &ids {
            crate::linalg::axpy(1.0, self.matrix.row(id), &mut v);
        }
        (v, ids.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn oral_ngrams() {
        let grams = extract_ngrams("oral", 3, 6);
        let expect = [
            "<or", "ora", "ral", "al>", "<ora", "oral", "ral>", "<oral", "oral>", "<oral>",
        ];
        assert_eq!(grams, expect);
    }

    #[test]
    fn single_letter() {
        assert_eq!(extract_ngrams("a", 3, 6), ["<a>"]);
    }

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 32-bit test vectors
        assert_eq!(fnv1a(""), 0x811c9dc5);
        assert_eq!(fnv1a("a"), 0xe40c292c);
        assert_eq!(fnv1a("foobar"), 0xbf9cf968);
    }

    proptest! {
        #[test]
        fn count_matches_closed_form(word in "\\PC{1,20}") {
            let l = word.chars().count() + 2;
            let expected: usize = (3..=6).map(|n| (l + 1).saturating_sub(n)).sum();
            prop_assert_eq!(extract_ngrams(&word, 3, 6).len(), expected);
            for g in extract_ngrams(&word, 3, 6) {
                let n = g.chars().count();
                prop_assert!((3..=6).contains(&n));
            }
        }
    }
}
