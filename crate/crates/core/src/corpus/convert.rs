use super::{
    align_bio, char_slice, decode_bio, parse_brat, tokenize, write_brat, AlignWarning,
    AnnotatedDocument, EntityAnnotation, LabeledSpan, OverlapPolicy, TaggedSentence, Token,
};
use crate::eos::SentenceSplitter;
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct Converted {
    pub document: AnnotatedDocument,
    pub warnings: Vec<AlignWarning>,
}

/// Joins adjacent sentence spans whenever an entity crosses the boundary
/// between them, so that every entity lives inside one sentence.
pub fn merge_spans_across_entities(
    spans: &[(usize, usize)],
    entities: &[EntityAnnotation],
) -> Vec<(usize, usize)> {
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    for &(start, end) in spans {
        if let Some(last) = merged.last_mut() {
            let crosses = entities
                .iter()
                .any(|e| e.start < last.1 && e.end > start && e.start < start);
            if crosses {
                last.1 = last.1.max(end);
                continue;
            }
        }
        merged.push((start, end));
    }
    merged
}

/// brat pair → tokenized, sentence-split, BIO-tagged document.
pub fn convert_document(
    doc_id: &str,
    txt: &str,
    ann: &str,
    splitter: &dyn SentenceSplitter,
    policy: OverlapPolicy,
) -> Result<Converted> {
    let mut document = parse_brat(doc_id, txt, ann)?;
    let spans = merge_spans_across_entities(&splitter.split(txt), &document.entities);
    let tokens = tokenize(txt);

    let mut groups: Vec<Vec<Token>> = vec![Vec::new(); spans.len()];
    let mut stray = Vec::new();
    let mut si = 0;
    for tok in tokens {
        while si < spans.len() && spans[si].1 <= tok.start {
            si += 1;
        }
        match spans.get(si) {
            Some(&(s, _)) if tok.start >= s => groups[si].push(tok),
            _ => stray.push(tok),
        }
    }
    // splitters cover all non-whitespace text; anything left over forms its own sentence
    if !stray.is_empty() {
        groups.push(stray);
    }
    groups.retain(|g| !g.is_empty());

    let (sentences, warnings) = align_bio(&document, &groups, policy)?;
    document.sentences = sentences;
    Ok(Converted { document, warnings })
}

/// Tagged sentences → brat `.ann`. With the original text the surfaces are
/// exact; without it, gaps between tokens are rendered as single spaces.
pub fn export_document(sentences: &[TaggedSentence], text: Option<&str>) -> String {
    let spans: Vec<LabeledSpan> = sentences.iter().flat_map(decode_bio).collect();
    match text {
        Some(text) => write_brat(&spans, |s| char_slice(text, s.start, s.end)),
        None => {
            let tokens: Vec<&Token> = sentences.iter().flat_map(|s| &s.tokens).collect();
            write_brat(&spans, |span| {
                let mut out = String::new();
                let mut cursor = span.start;
                for t in tokens.iter().filter(|t| t.start >= span.start && t.end <= span.end) {
                    out.extend(std::iter::repeat(' ').take(t.start.saturating_sub(cursor)));
                    out.push_str(&t.surface);
                    cursor = t.end;
                }
                out
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_brat;
    use crate::eos::RuleSplitter;

    #[test]
    fn entity_across_split_point_merges_sentences() {
        let txt = "Se administró Dr. Fármaco X diario. Bien.";
        // "Dr. Fármaco" crosses the rule splitter's boundary after "Dr."
        let ann = "T1\tNORM 14 25\tDr. Fármaco";
        let conv = convert_document("d", txt, ann, &RuleSplitter::default(), OverlapPolicy::Reject).unwrap();
        assert!(conv.warnings.is_empty());
        let spans: Vec<_> = conv.document.sentences.iter().flat_map(decode_bio).collect();
        assert_eq!(spans, vec![LabeledSpan { start: 14, end: 25, label: "NORM".into() }]);
    }

    #[test]
    fn export_round_trip_with_and_without_text() {
        let txt = "Recibió ácido  fólico.\nSin cambios.";
        let ann = "T1\tNORM 8 21\tácido  fólico";
        let conv = convert_document("d", txt, ann, &RuleSplitter::default(), OverlapPolicy::Reject).unwrap();
        assert_eq!(conv.document.sentences.len(), 2);
        let out = export_document(&conv.document.sentences, Some(txt));
        assert_eq!(out, "T1\tNORM 8 21\tácido  fólico\n");
        assert!(parse_brat("d", txt, &out).is_ok());
        let approx = export_document(&conv.document.sentences, None);
        assert_eq!(approx, "T1\tNORM 8 21\tácido  fólico\n");
    }
}
