use super::Token;

/// Whitespace tokenization with every maximal alphanumeric run and every
/// other non-whitespace character emitted as its own token.
///
/// ```
/// use stackner::corpus::tokenize;
/// let toks: Vec<_> = tokenize("pH7,4").into_iter().map(|t| t.surface).collect();
/// assert_eq!(toks, ["pH7", ",", "4"]);
/// ```
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run = String::new();
    let mut run_start = 0;
    for (pos, ch) in text.chars().enumerate() {
        if ch.is_alphanumeric() {
            if run.is_empty() {
                run_start = pos;
            }
            run.push(ch);
            continue;
        }
        if !run.is_empty() {
            let end = run_start + run.chars().count();
            tokens.push(Token::new(std::mem::take(&mut run), run_start, end));
        }
        if !ch.is_whitespace() {
            tokens.push(Token::new(ch.to_string(), pos, pos + 1));
        }
    }
    if !run.is_empty() {
        let end = run_start + run.chars().count();
        tokens.push(Token::new(run, run_start, end));
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn worked_example_sentence() {
        assert_eq!(
            surfaces("tratamiento amoxicilina - clavulánico oral"),
            ["tratamiento", "amoxicilina", "-", "clavulánico", "oral"]
        );
    }

    #[test]
    fn splits_on_punctuation() {
        assert_eq!(surfaces("pH7,4"), ["pH7", ",", "4"]);
        assert_eq!(surfaces("a--b"), ["a", "-", "-", "b"]);
        assert_eq!(surfaces("(IL-2)."), ["(", "IL", "-", "2", ")", "."]);
    }

    #[test]
    fn empty_and_blank() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t ").is_empty());
    }

    #[test]
    fn offsets_count_characters_not_bytes() {
        let toks = tokenize("ñandú 5mg");
        assert_eq!(toks[0], Token::new("ñandú", 0, 5));
        assert_eq!(toks[1], Token::new("5mg", 6, 9));
    }

    proptest! {
        #[test]
        fn every_non_whitespace_char_in_exactly_one_token(text in "\\PC{0,60}") {
            let chars: Vec<char> = text.chars().collect();
            let toks = tokenize(&text);
            let mut covered = vec![0usize; chars.len()];
            let mut last_end = 0;
            for t in &toks {
                prop_assert!(t.start < t.end);
                prop_assert!(t.start >= last_end);
                last_end = t.end;
                let slice: String = chars[t.start..t.end].iter().collect();
                prop_assert_eq!(&slice, &t.surface);
                prop_assert!(!t.surface.chars().any(char::is_whitespace));
                for c in &mut covered[t.start..t.end] {
                    *c += 1;
                }
            }
            for (i, ch) in chars.iter().enumerate() {
                let expected = usize::from(!ch.is_whitespace());
                prop_assert_eq!(covered[i], expected);
            }
        }
    }
}
