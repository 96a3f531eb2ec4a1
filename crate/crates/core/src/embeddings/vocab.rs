use std::collections::HashMap;

/// Word inventory with dense ids ordered by descending count, then
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Vocab {
    word_to_id: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<u64>,
    total_tokens: u64,
}

impl Vocab {
    /// Builds a vocabulary from `(word, count)` pairs already filtered.
    pub fn from_counts(mut entries: Vec<(String, u64)>) -> Self {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let total_tokens = entries.iter().map(|e| e.1).sum();
        let word_to_id = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Vocab {
            word_to_id,
            words,
            counts,
            total_tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of the retained words' counts.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }
}

/// Counts tokens and keeps those occurring at least `min_count` times.
pub fn build_vocab<'a, I>(tokens: I, min_count: u64) -> Vocab
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *counts.entry(t).or_default() += 1;
    }
    Vocab::from_counts(
        counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(w, c)| (w.to_string(), c))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn min_count_filters() {
        let v = build_vocab(["a", "a", "b"], 2);
        assert_eq!(v.len(), 1);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.count(0), 2);
        assert_eq!(v.id("b"), None);
    }

    #[test]
    fn empty_stream() {
        assert!(build_vocab(std::iter::empty::<&str>(), 1).is_empty());
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = build_vocab(["b", "a", "b", "a", "b", "a", "c"], 1);
        assert_eq!(v.words(), ["a", "b", "c"]);
        assert_eq!(v.total_tokens(), 7);
    }
}
