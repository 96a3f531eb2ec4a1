//! Byte-pair encoding: merge learning, segmentation and piece-vector pooling.
//!
//! Words are lowercased and the first character carries the word-initial
//! marker `_`, so `"Amoxicilina"` starts as `["_a", "m", "o", …]`.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::embeddings::{self, SkipGramConfig, Variant};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const WORD_MARKER: char = '_';

pub fn initial_symbols(word: &str) -> Vec<String> {
    let lower = word.to_lowercase();
    let mut out: Vec<String> = lower.chars().map(String::from).collect();
    if let Some(first) = out.first_mut() {
        first.insert(0, WORD_MARKER);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    ranks: HashMap<(String, String), usize>,
    pub target_vocab_size: usize,
}

impl MergeTable {
    pub fn new(merges: Vec<(String, String)>, target_vocab_size: usize) -> Self {
        let mut ranks = HashMap::with_capacity(merges.len());
        for (i, m) in merges.iter().enumerate() {
            ranks.entry(m.clone()).or_insert(i);
        }
        MergeTable {
            merges,
            ranks,
            target_vocab_size,
        }
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// One `left right` pair per line, in learning order.
    pub fn to_text(&self) -> String {
        self.merges.iter().map(|(l, r)| format!("{l} {r}\n")).collect()
    }

    pub fn from_text(content: &str) -> Result<Self> {
        let mut merges = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with("#version") {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [l, r] = parts[..] else {
                return Err(Error::InvalidConfig(format!(
                    "merges line {}: expected `left right`",
                    idx + 1
                )));
            };
            merges.push((l.to_string(), r.to_string()));
        }
        let n = merges.len();
        Ok(MergeTable::new(merges, n))
    }
}

/// Learns merges from word frequencies: repeatedly merge the most frequent
/// adjacent symbol pair (ties: lexicographically smallest pair) until the
/// symbol inventory reaches `target_vocab_size` or no pair occurs twice.
pub fn learn_bpe(word_freq: &HashMap<String, u64>, target_vocab_size: usize) -> Result<MergeTable> {
    let mut merged_freq: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for (w, &f) in word_freq {
        let syms = initial_symbols(w);
        if f > 0 && !syms.is_empty() {
            *merged_freq.entry(syms).or_default() += f;
        }
    }
    if merged_freq.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut words: Vec<(Vec<String>, u64)> = merged_freq.into_iter().collect();
    let base: HashSet<&String> = words.iter().flat_map(|(s, _)| s).collect();
    let base_size = base.len();

    let mut pair_counts: HashMap<(String, String), i64> = HashMap::new();
    let mut pair_words: HashMap<(String, String), HashSet<usize>> = HashMap::new();
    for (wi, (syms, f)) in words.iter().enumerate() {
        for p in syms.windows(2) {
            let key = (p[0].clone(), p[1].clone());
            *pair_counts.entry(key.clone()).or_default() += *f as i64;
            pair_words.entry(key).or_default().insert(wi);
        }
    }

    let mut merges = Vec::new();
    while base_size + merges.len() < target_vocab_size {
        let best = pair_counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .max_by(|(ka, ca), (kb, cb)| ca.cmp(cb).then_with(|| kb.cmp(ka)));
        let Some((pair, &count)) = best else { break };
        if count < 2 {
            break;
        }
        let pair = pair.clone();
        let joined = format!("{}{}", pair.0, pair.1);
        let mut affected: Vec<usize> = pair_words.get(&pair).map(|s| s.iter().copied().collect()).unwrap_or_default();
        affected.sort_unstable();
        for wi in affected {
            let (syms, f) = &mut words[wi];
            let f = *f as i64;
            for p in syms.windows(2) {
                *pair_counts.get_mut(&(p[0].clone(), p[1].clone())).unwrap() -= f;
            }
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(std::mem::take(&mut syms[i]));
                    i += 1;
                }
            }
            *syms = out;
            for p in syms.windows(2) {
                let key = (p[0].clone(), p[1].clone());
                *pair_counts.entry(key.clone()).or_default() += f;
                pair_words.entry(key).or_default().insert(wi);
            }
        }
        pair_counts.retain(|_, c| *c > 0);
        merges.push(pair);
    }
    Ok(MergeTable::new(merges, target_vocab_size))
}

/// Word frequencies of a token stream.
pub fn word_frequencies<'a>(tokens: impl IntoIterator<Item = &'a str>) -> HashMap<String, u64> {
    let mut m = HashMap::new();
    for t in tokens {
        *m.entry(t.to_string()).or_default() += 1;
    }
    m
}

/// Segments a word by applying merges in learning order.
pub fn segment(word: &str, merges: &MergeTable) -> Vec<String> {
    let mut syms = initial_symbols(word);
    // the next applicable merge is the lowest-ranked present pair after the
    // last one applied
    let mut last_rank: Option<usize> = None;
    loop {
        let next = syms
            .windows(2)
            .filter_map(|p| merges.ranks.get(&(p[0].clone(), p[1].clone())).copied())
            .filter(|&r| last_rank.map_or(true, |l| r > l))
            .min();
        let Some(rank) = next else { break };
        let (l, r) = &merges.merges[rank];
        let mut out = Vec::with_capacity(syms.len());
        let mut i = 0;
        while i < syms.len() {
            if i + 1 < syms.len() && &syms[i] == l && &syms[i + 1] == r {
                out.push(format!("{l}{r}"));
                i += 2;
            } else {
                out.push(std::mem::take(&mut syms[i]));
                i += 1;
            }
        }
        syms = out;
        last_rank = Some(rank);
    }
    syms
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Pooling {
    #[default]
    Mean,
    /// First and last piece vectors concatenated (twice the piece dim).
    FirstLast,
}

impl Pooling {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mean" => Some(Pooling::Mean),
            "first-last" | "first_last" => Some(Pooling::FirstLast),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pooling::Mean => "mean",
            Pooling::FirstLast => "first-last",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PieceEmbeddingTable {
    piece_to_id: HashMap<String, usize>,
    pieces: Vec<String>,
    pub matrix: Matrix,
    pub unknown: Vec<f64>,
}

impl PieceEmbeddingTable {
    pub fn new(pieces: Vec<String>, matrix: Matrix, unknown: Vec<f64>) -> Self {
        assert_eq!(pieces.len(), matrix.rows());
        assert_eq!(unknown.len(), matrix.cols());
        let piece_to_id = pieces.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        PieceEmbeddingTable {
            piece_to_id,
            pieces,
            matrix,
            unknown,
        }
    }

    /// From a word2vec text table; a `<unk>` row, if present, becomes the
    /// unknown vector (zeros otherwise).
    pub fn from_embedding_table(table: &embeddings::EmbeddingTable) -> Self {
        let pieces = table.vocab.words().to_vec();
        let unknown = table
            .vocab
            .id("<unk>")
            .map_or_else(|| vec![0.0; table.dim()], |i| table.input.row(i).to_vec());
        PieceEmbeddingTable::new(pieces, table.input.clone(), unknown)
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn vector(&self, piece: &str) -> &[f64] {
        match self.piece_to_id.get(piece) {
            Some(&i) => self.matrix.row(i),
            None => &self.unknown,
        }
    }
}

/// Pools the piece vectors of `word` into one token vector.
pub fn token_vector(word: &str, merges: &MergeTable, table: &PieceEmbeddingTable, pooling: Pooling) -> Vec<f64> {
    let pieces = segment(word, merges);
    if pieces.is_empty() {
        return match pooling {
            Pooling::Mean => table.unknown.clone(),
            Pooling::FirstLast => [table.unknown.clone(), table.unknown.clone()].concat(),
        };
    }
    match pooling {
        Pooling::Mean => {
            let mut v = vec![0.0; table.dim()];
            for p in &pieces {
                crate::linalg::axpy(1.0, table.vector(p), &mut v);
            }
            let n = pieces.len() as f64;
            v.iter_mut().for_each(|x| *x /= n);
            v
        }
        Pooling::FirstLast => {
            let mut v = table.vector(&pieces[0]).to_vec();
            v.extend_from_slice(table.vector(pieces.last().unwrap()));
            v
        }
    }
}

/// Trains piece vectors with skip-gram over the BPE-segmented corpus.
pub fn train_piece_embeddings(
    corpus: &[Vec<String>],
    merges: &MergeTable,
    config: &SkipGramConfig,
) -> Result<PieceEmbeddingTable> {
    let segmented: Vec<Vec<String>> = corpus
        .iter()
        .map(|s| s.iter().flat_map(|w| segment(w, merges)).collect())
        .collect();
    let model = embeddings::train_skipgram(&segmented, config)?;
    let mut table = model.table;
    table.variant = Variant::Plain;
    Ok(PieceEmbeddingTable::from_embedding_table(&table))
}

/// Piece vectors as word2vec text, with the unknown vector as a `<unk>` row
/// when the table has no such piece.
pub fn save_pieces(table: &PieceEmbeddingTable) -> String {
    let has_unk = table.piece_to_id.contains_key("<unk>");
    let rows = table.pieces.len() + usize::from(!has_unk);
    let mut out = format!("{rows} {}\n", table.dim());
    let mut line = |name: &str, v: &[f64]| {
        out.push_str(name);
        for x in v {
            out.push_str(&format!(" {x:.6}"));
        }
        out.push('\n');
    };
    for (i, p) in table.pieces.iter().enumerate() {
        line(p, table.matrix.row(i));
    }
    if !has_unk {
        line("<unk>", &table.unknown);
    }
    out
}

pub fn load_pieces(content: &str) -> Result<PieceEmbeddingTable> {
    let table = embeddings::load_word2vec(content, Variant::Plain)?;
    Ok(PieceEmbeddingTable::from_embedding_table(&table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn freq(pairs: &[(&str, u64)]) -> HashMap<String, u64> {
        pairs.iter().map(|(w, f)| (w.to_string(), *f)).collect()
    }

    #[test]
    fn pieces_round_trip() {
        let t = PieceEmbeddingTable::new(
            vec!["_am".into(), "ox".into()],
            Matrix::from_rows(&[vec![0.25, -1.0], vec![2.0, 0.5]]),
            vec![0.0, 0.0],
        );
        let back = load_pieces(&save_pieces(&t)).unwrap();
        assert_eq!(back.vector("ox"), t.vector("ox"));
        assert_eq!(back.vector("zz"), &[0.0, 0.0]);
    }

    fn pair(l: &str, r: &str) -> (String, String) {
        (l.into(), r.into())
    }

    #[test]
    fn toy_vocabulary_first_merges() {
        let f = freq(&[("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]);
        let table = learn_bpe(&f, 1000).unwrap();
        // (e,s) and (s,t) both occur 9 times; the smaller pair wins
        assert_eq!(table.merges()[0], pair("e", "s"));
        assert_eq!(table.merges()[1], pair("es", "t"));
    }

    #[test]
    fn no_pair_occurs_twice() {
        let table = learn_bpe(&freq(&[("ab", 1)]), 100).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn target_equal_to_base_inventory() {
        let f = freq(&[("low", 5), ("lower", 2)]);
        // base symbols: _l o w e r
        assert!(learn_bpe(&f, 5).unwrap().is_empty());
        assert_eq!(learn_bpe(&f, 6).unwrap().len(), 1);
    }

    #[test]
    fn empty_corpus() {
        assert!(matches!(learn_bpe(&HashMap::new(), 10), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn reference_segmentation() {
        let merges = MergeTable::from_text("_a m\n_am o\ni c\nic i\nl i\nli n\nlin a\n").unwrap();
        assert_eq!(segment("amoxicilina", &merges), ["_amo", "x", "ici", "lina"]);
        assert_eq!(segment("Amoxicilina", &merges), ["_amo", "x", "ici", "lina"]);
    }

    #[test]
    fn no_merges_gives_characters() {
        let merges = MergeTable::new(Vec::new(), 0);
        assert_eq!(segment("oral", &merges), ["_o", "r", "a", "l"]);
        assert!(segment("", &merges).is_empty());
    }

    #[test]
    fn merges_apply_in_learned_order_only() {
        // "abc" is created by the last merge; (abc, d) was learned earlier
        // and must not fire afterwards
        let merges = MergeTable::from_text("b c\na b\nab c\nabc d\na bc\n").unwrap();
        assert_eq!(segment("xabcd", &merges), ["_x", "abc", "d"]);
    }

    #[test]
    fn pooling() {
        let merges = MergeTable::from_text("_o r\n_or a\n_ora l\n").unwrap();
        let table = PieceEmbeddingTable::new(
            vec!["_oral".into(), "_a".into(), "b".into()],
            Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 4.0], vec![2.0, 0.0]]),
            vec![-1.0, -1.0],
        );
        assert_eq!(token_vector("oral", &merges, &table, Pooling::Mean), vec![1.0, 2.0]);
        assert_eq!(token_vector("ab", &merges, &table, Pooling::Mean), vec![1.0, 2.0]);
        assert_eq!(token_vector("zz", &merges, &table, Pooling::Mean), vec![-1.0, -1.0]);
        assert_eq!(
            token_vector("ab", &merges, &table, Pooling::FirstLast),
            vec![0.0, 4.0, 2.0, 0.0]
        );
    }

    #[test]
    fn merges_file_round_trip() {
        let f = freq(&[("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]);
        let table = learn_bpe(&f, 1000).unwrap();
        let back = MergeTable::from_text(&table.to_text()).unwrap();
        assert_eq!(back.merges(), table.merges());
    }

    proptest! {
        #[test]
        fn segmentation_is_invertible(word in "\\PC{1,16}") {
            let f = freq(&[("amoxicilina", 4), ("clavulánico", 3), ("oral", 5), (&word, 2)]);
            let merges = learn_bpe(&f, 60).unwrap();
            let pieces = segment(&word, &merges);
            let joined: String = pieces.concat();
            let stripped = joined.strip_prefix(WORD_MARKER).unwrap();
            prop_assert_eq!(stripped, word.to_lowercase());
        }

        #[test]
        fn larger_targets_extend_smaller_runs(extra in 1usize..20) {
            let f = freq(&[("low", 5), ("lower", 2), ("newest", 6), ("widest", 3), ("lowest", 2)]);
            let small = learn_bpe(&f, 12).unwrap();
            let large = learn_bpe(&f, 12 + extra).unwrap();
            prop_assert_eq!(&large.merges()[..small.len()], small.merges());
        }
    }
}
