//! word2vec text format (`count dim` header, then `word v1 … vdim`) and the
//! n-gram sidecar (`ngram<TAB>id` lines).

use std::collections::{BTreeMap, HashMap};

use super::{EmbeddingTable, SubwordIndex, Variant, Vocab};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn format_row(out: &mut String, key: &str, row: &[f64]) {
    out.push_str(key);
    for v in row {
        out.push(' ');
        out.push_str(&format!("{v:.6}"));
    }
    out.push('\n');
}

pub fn save_word2vec(table: &EmbeddingTable) -> String {
    let mut out = format!("{} {}\n", table.vocab.len(), table.dim());
    for (id, w) in table.vocab.words().iter().enumerate() {
        format_row(&mut out, w, table.input.row(id));
    }
    out
}

fn parse_rows(content: &str) -> Result<(usize, Vec<(String, Vec<f64>)>)> {
    let mut lines = content.lines().enumerate();
    let bad = |line: usize, reason: String| Error::MalformedEmbeddingFile { line, reason };
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let [count, dim] = h[..] else {
        return Err(bad(1, "header must be `count dim`".into()));
    };
    let count: usize = count.parse().map_err(|_| bad(1, "count is not an integer".into()))?;
    let dim: usize = dim.parse().map_err(|_| bad(1, "dim is not an integer".into()))?;
    let mut rows = Vec::with_capacity(count);
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap().to_string();
        let values: Vec<f64> = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(idx + 1, format!("non-numeric component for {word:?}")))?;
        if values.len() != dim {
            return Err(bad(
                idx + 1,
                format!("row for {word:?} has {} components, header says {dim}", values.len()),
            ));
        }
        rows.push((word, values));
    }
    if rows.len() != count {
        return Err(bad(0, format!("header says {count} rows, found {}", rows.len())));
    }
    Ok((dim, rows))
}

/// Loads a table; ids follow file order and counts are unknown (set to 1).
pub fn load_word2vec(content: &str, variant: Variant) -> Result<EmbeddingTable> {
    let (dim, rows) = parse_rows(content)?;
    let mut seen = HashMap::new();
    for (i, (w, _)) in rows.iter().enumerate() {
        if seen.insert(w.clone(), i).is_some() {
            return Err(Error::MalformedEmbeddingFile {
                line: i + 2,
                reason: format!("duplicate word {w:?}"),
            });
        }
    }
    // counts decrease with file order so the vocabulary keeps that order
    let n = rows.len() as u64;
    let vocab = Vocab::from_counts(
        rows.iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), n - i as u64))
            .collect(),
    );
    let mut input = Matrix::zeros(rows.len(), dim);
    for (w, values) in &rows {
        input.row_mut(vocab.id(w).unwrap()).copy_from_slice(values);
    }
    Ok(EmbeddingTable {
        vocab,
        input,
        variant,
        subword: None,
        metadata: BTreeMap::new(),
    })
}

/// Returns `(sidecar, vectors)`: `ngram<TAB>id` lines, and the n-gram
/// matrix in word2vec text format keyed by id.
pub fn save_ngram_index(index: &SubwordIndex) -> (String, String) {
    let mut sidecar = String::new();
    for (g, id) in index.entries() {
        sidecar.push_str(&format!("{g}\t{id}\n"));
    }
    let mut vectors = format!("{} {}\n", index.matrix.rows(), index.matrix.cols());
    for id in 0..index.matrix.rows() {
        format_row(&mut vectors, &id.to_string(), index.matrix.row(id));
    }
    (sidecar, vectors)
}

pub fn load_ngram_index(sidecar: &str, vectors: &str, n_min: usize, n_max: usize) -> Result<SubwordIndex> {
    let (dim, rows) = parse_rows(vectors)?;
    let mut matrix = Matrix::zeros(rows.len(), dim);
    for (line, (key, values)) in rows.iter().enumerate() {
        let id: usize = key.parse().ok().filter(|&i| i < rows.len()).ok_or_else(|| {
            Error::MalformedEmbeddingFile {
                line: line + 2,
                reason: format!("bad n-gram id {key:?}"),
            }
        })?;
        matrix.row_mut(id).copy_from_slice(values);
    }
    let mut map = HashMap::new();
    for (idx, line) in sidecar.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = || Error::MalformedEmbeddingFile {
            line: idx + 1,
            reason: "expected `ngram<TAB>id`".into(),
        };
        let (g, id) = line.rsplit_once('\t').ok_or_else(bad)?;
        let id: usize = id.parse().map_err(|_| bad())?;
        if id >= matrix.rows() {
            return Err(bad());
        }
        map.insert(g.to_string(), id);
    }
    Ok(SubwordIndex::from_parts(n_min, n_max, map, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable {
            vocab: Vocab::from_counts(vec![("uno".into(), 3), ("dos".into(), 2), ("tres".into(), 1)]),
            input: Matrix::from_rows(&[
                vec![0.1234567, -2.5, 1e-7],
                vec![3.0, 0.0, -0.333333333],
                vec![-1.0, 42.25, 0.5],
            ]),
            variant: Variant::Plain,
            subword: None,
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn round_trip_within_tolerance() {
        let t = table();
        let text = save_word2vec(&t);
        assert!(text.starts_with("3 3\nuno "));
        let back = load_word2vec(&text, Variant::Plain).unwrap();
        assert_eq!(back.vocab.words(), t.vocab.words());
        for w in t.vocab.words() {
            for (a, b) in t.lookup(w).iter().zip(back.lookup(w)) {
                assert!((a - b).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn dim_mismatch_is_malformed() {
        let err = load_word2vec("2 3\na 1 2 3\nb 1 2\n", Variant::Plain).unwrap_err();
        assert!(matches!(err, Error::MalformedEmbeddingFile { line: 3, .. }));
        assert!(load_word2vec("", Variant::Plain).is_err());
        assert!(load_word2vec("3 1\na 1\n", Variant::Plain).is_err());
        assert!(load_word2vec("2 1\na 1\na 2\n", Variant::Plain).is_err());
    }

    #[test]
    fn ngram_index_round_trip() {
        let mut idx = SubwordIndex::exact(["oral"], 3, 6, 2);
        for (i, v) in idx.matrix.as_mut_slice().iter_mut().enumerate() {
            *v = i as f64 * 0.25;
        }
        let (side, vecs) = save_ngram_index(&idx);
        assert!(side.starts_with("<or\t0\n"));
        let back = load_ngram_index(&side, &vecs, 3, 6).unwrap();
        assert_eq!(back, idx);
    }
}
