//! Two-column CoNLL (`token tag`) plus the `.offsets` sidecar, which carries
//! one `start end` pair per token line with the same blank-line structure.

use super::{TaggedSentence, Token};
use crate::error::{Error, Result};

pub fn write_conll(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            out.push_str(&tok.surface);
            out.push(' ');
            out.push_str(tag);
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

pub fn write_offsets(sentences: &[TaggedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for tok in &s.tokens {
            out.push_str(&format!("{} {}\n", tok.start, tok.end));
        }
        out.push('\n');
    }
    out
}

fn blocks(content: &str) -> Vec<Vec<(usize, &str)>> {
    let mut blocks = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
        } else {
            current.push((idx + 1, line));
        }
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}

/// Reads CoNLL without offsets. Token offsets are synthesized as if the
/// sentence's tokens were joined by single spaces.
pub fn read_conll(content: &str) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    for block in blocks(content) {
        let mut tokens = Vec::new();
        let mut tags = Vec::new();
        let mut pos = 0;
        for (line_no, line) in block {
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.first() == Some(&"-DOCSTART-") {
                continue;
            }
            if cols.len() != 2 {
                return Err(Error::MalformedConll {
                    line: line_no,
                    reason: format!("expected 2 columns, found {}", cols.len()),
                });
            }
            let len = cols[0].chars().count();
            tokens.push(Token::new(cols[0], pos, pos + len));
            tags.push(cols[1].to_string());
            pos += len + 1;
        }
        if !tokens.is_empty() {
            sentences.push(TaggedSentence::new(tokens, tags));
        }
    }
    Ok(sentences)
}

pub fn read_offsets(content: &str) -> Result<Vec<Vec<(usize, usize)>>> {
    blocks(content)
        .into_iter()
        .map(|block| {
            block
                .into_iter()
                .map(|(line_no, line)| {
                    let bad = |reason: &str| Error::MalformedOffsets {
                        line: line_no,
                        reason: reason.to_string(),
                    };
                    let cols: Vec<&str> = line.split_whitespace().collect();
                    let [s, e] = cols[..] else {
                        return Err(bad("expected `start end`"));
                    };
                    let s = s.parse().map_err(|_| bad("start is not an integer"))?;
                    let e = e.parse().map_err(|_| bad("end is not an integer"))?;
                    Ok((s, e))
                })
                .collect()
        })
        .collect()
}

/// Reads a CoNLL file together with its offsets sidecar.
pub fn read_conll_with_offsets(conll: &str, offsets: &str) -> Result<Vec<TaggedSentence>> {
    let mut sentences = read_conll(conll)?;
    let offsets = read_offsets(offsets)?;
    if offsets.len() != sentences.len() {
        return Err(Error::MalformedOffsets {
            line: 0,
            reason: format!(
                "{} sentences in offsets, {} in CoNLL",
                offsets.len(),
                sentences.len()
            ),
        });
    }
    for (i, (sent, offs)) in sentences.iter_mut().zip(offsets).enumerate() {
        if sent.len() != offs.len() {
            return Err(Error::MalformedOffsets {
                line: 0,
                reason: format!("sentence {} has {} tokens but {} offsets", i + 1, sent.len(), offs.len()),
            });
        }
        for (tok, (s, e)) in sent.tokens.iter_mut().zip(offs) {
            if e < s || e - s != tok.surface.chars().count() {
                return Err(Error::MalformedOffsets {
                    line: 0,
                    reason: format!("offsets {s} {e} do not fit token {:?}", tok.surface),
                });
            }
            tok.start = s;
            tok.end = e;
        }
    }
    Ok(sentences)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn fig1() -> TaggedSentence {
        let tags = ["O", "B-NORM", "I-NORM", "I-NORM", "O"].map(String::from).to_vec();
        TaggedSentence::new(tokenize("tratamiento amoxicilina - clavulánico oral"), tags)
    }

    #[test]
    fn writes_worked_example() {
        let out = write_conll(&[fig1()]);
        assert_eq!(
            out,
            "tratamiento O\namoxicilina B-NORM\n- I-NORM\nclavulánico I-NORM\noral O\n\n"
        );
        assert_eq!(write_conll(&[]), "");
    }

    #[test]
    fn read_back_with_and_without_offsets() {
        let s = fig1();
        let conll = write_conll(&[s.clone(), s.clone()]);
        let plain = read_conll(&conll).unwrap();
        assert_eq!(plain.len(), 2);
        assert_eq!(plain[0].tags, s.tags);
        assert_eq!(plain[0].surfaces(), s.surfaces());
        let exact = read_conll_with_offsets(&conll, &write_offsets(&[s.clone(), s.clone()])).unwrap();
        assert_eq!(exact[1], s);
    }

    #[test]
    fn one_column_is_malformed() {
        assert!(matches!(
            read_conll("tratamiento O\namoxicilina\n"),
            Err(Error::MalformedConll { line: 2, .. })
        ));
    }

    #[test]
    fn offsets_must_match_shape() {
        let conll = write_conll(&[fig1()]);
        assert!(read_conll_with_offsets(&conll, "0 11\n").is_err());
        assert!(read_conll_with_offsets(&conll, "0 11\n12 23\n24 25\n26 37\n38 41\n\n").is_err());
    }

    #[test]
    fn tolerates_docstart_and_extra_blank_lines() {
        let s = read_conll("-DOCSTART- O\n\n\na O\n\n\nb B-X\n").unwrap();
        assert_eq!(s.len(), 2);
    }
}
