use log::warn;

use super::{AnnotatedDocument, EntityAnnotation, LabeledSpan, TaggedSentence, Token};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OverlapPolicy {
    #[default]
    Reject,
    KeepLongest,
}

/// An entity edge that falls strictly inside a token, or a token claimed by
/// more than one entity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignWarning {
    pub doc_id: String,
    pub ann_id: String,
    pub entity_start: usize,
    pub entity_end: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub reason: &'static str,
}

/// Checks entities (sorted by start) for overlaps. Under `KeepLongest` the
/// shorter of each overlapping pair is dropped (ties keep the earlier one).
pub fn resolve_overlaps(
    doc_id: &str,
    entities: &[EntityAnnotation],
    policy: OverlapPolicy,
) -> Result<Vec<EntityAnnotation>> {
    let mut sorted = entities.to_vec();
    sorted.sort_by(|a, b| (a.start, a.end).cmp(&(b.start, b.end)));
    let mut kept: Vec<EntityAnnotation> = Vec::with_capacity(sorted.len());
    for e in sorted {
        match kept.last() {
            Some(prev) if e.start < prev.end => match policy {
                OverlapPolicy::Reject => {
                    return Err(Error::OverlappingEntities {
                        doc_id: doc_id.to_string(),
                        first: prev.ann_id.clone(),
                        second: e.ann_id.clone(),
                    })
                }
                OverlapPolicy::KeepLongest => {
                    if e.end - e.start > prev.end - prev.start {
                        kept.pop();
                        kept.push(e);
                    }
                }
            },
            _ => kept.push(e),
        }
    }
    Ok(kept)
}

/// Assigns BIO tags to the given sentences from the document's entities.
///
/// A token is tagged when its span overlaps an entity; the entity's first
/// overlapping token in each sentence gets `B-`, later ones `I-`.
pub fn align_bio(
    doc: &AnnotatedDocument,
    sentence_token_spans: &[Vec<Token>],
    policy: OverlapPolicy,
) -> Result<(Vec<TaggedSentence>, Vec<AlignWarning>)> {
    let doc_id = &doc.doc.doc_id;
    let entities = resolve_overlaps(doc_id, &doc.entities, policy)?;

    let mut sentences: Vec<TaggedSentence> = sentence_token_spans
        .iter()
        .map(|toks| TaggedSentence::untagged(toks.clone()))
        .collect();

    // flat (sentence, token) index ordered by token start
    let mut flat: Vec<(usize, usize)> = sentences
        .iter()
        .enumerate()
        .flat_map(|(s, sent)| (0..sent.len()).map(move |t| (s, t)))
        .collect();
    flat.sort_by_key(|&(s, t)| sentences[s].tokens[t].start);
    let starts: Vec<usize> = flat.iter().map(|&(s, t)| sentences[s].tokens[t].start).collect();

    let mut taken = vec![false; flat.len()];
    let mut warnings = Vec::new();
    for e in &entities {
        // tokens whose start precedes e.end; walk back from there while they overlap
        let upper = starts.partition_point(|&st| st < e.end);
        let mut first_idx = upper;
        while first_idx > 0 {
            let (s, t) = flat[first_idx - 1];
            if sentences[s].tokens[t].end > e.start {
                first_idx -= 1;
            } else {
                break;
            }
        }
        let mut current_sentence = None;
        for (k, &(s, t)) in flat.iter().enumerate().take(upper).skip(first_idx) {
            let tok = &sentences[s].tokens[t];
            let mut warn_for = |reason| {
                let w = AlignWarning {
                    doc_id: doc_id.clone(),
                    ann_id: e.ann_id.clone(),
                    entity_start: e.start,
                    entity_end: e.end,
                    token_start: tok.start,
                    token_end: tok.end,
                    reason,
                };
                warn!(
                    "{}: entity {} ({}..{}) vs token {}..{}: {}",
                    w.doc_id, w.ann_id, w.entity_start, w.entity_end, w.token_start, w.token_end, reason
                );
                warnings.push(w);
            };
            let inside = |x: usize| x > tok.start && x < tok.end;
            if inside(e.start) || inside(e.end) {
                warn_for("entity boundary inside token");
            }
            if taken[k] {
                warn_for("token already tagged by another entity");
                continue;
            }
            let prefix = if current_sentence == Some(s) { "I" } else { "B" };
            if current_sentence.is_some() && current_sentence != Some(s) {
                warn_for("entity crosses a sentence boundary");
            }
            current_sentence = Some(s);
            taken[k] = true;
            sentences[s].tags[t] = format!("{prefix}-{}", e.label);
        }
    }
    Ok((sentences, warnings))
}

/// Repairs model output into valid BIO: an `I-X` that does not continue an
/// `X` run is promoted to `B-X`; anything that is not `B-`/`I-` becomes `O`.
pub fn repair_bio(tags: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(tags.len());
    let mut prev: Option<String> = None;
    for tag in tags {
        if let Some(label) = tag.strip_prefix("I-") {
            if prev.as_deref() == Some(label) {
                out.push(tag.clone());
            } else {
                out.push(format!("B-{label}"));
            }
            prev = Some(label.to_string());
        } else if let Some(label) = tag.strip_prefix("B-") {
            out.push(tag.clone());
            prev = Some(label.to_string());
        } else {
            out.push("O".to_string());
            prev = None;
        }
    }
    out
}

/// Decodes maximal BIO runs into character spans (after [`repair_bio`]).
pub fn decode_bio(sentence: &TaggedSentence) -> Vec<LabeledSpan> {
    let tags = repair_bio(&sentence.tags);
    let mut spans = Vec::new();
    let mut open: Option<LabeledSpan> = None;
    for (tok, tag) in sentence.tokens.iter().zip(&tags) {
        if let Some(label) = tag.strip_prefix("B-") {
            spans.extend(open.take());
            open = Some(LabeledSpan {
                start: tok.start,
                end: tok.end,
                label: label.to_string(),
            });
        } else if tag.starts_with("I-") {
            if let Some(span) = open.as_mut() {
                span.end = tok.end;
            }
        } else {
            spans.extend(open.take());
        }
    }
    spans.extend(open);
    spans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{is_valid_bio, parse_brat, tokenize};
    use proptest::prelude::*;

    const FIG1: &str = "tratamiento amoxicilina - clavulánico oral";

    fn fig1_doc() -> AnnotatedDocument {
        parse_brat("fig1", FIG1, "T1\tNORM 12 37\tamoxicilina - clavulánico").unwrap()
    }

    fn tags(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn worked_example_alignment() {
        let doc = fig1_doc();
        let (sents, warnings) = align_bio(&doc, &[tokenize(FIG1)], OverlapPolicy::Reject).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(sents[0].tags, tags(&["O", "B-NORM", "I-NORM", "I-NORM", "O"]));
        let spans = decode_bio(&sents[0]);
        assert_eq!(spans, vec![LabeledSpan { start: 12, end: 37, label: "NORM".into() }]);
    }

    #[test]
    fn no_entities_all_outside() {
        let doc = parse_brat("d", FIG1, "").unwrap();
        let (sents, _) = align_bio(&doc, &[tokenize(FIG1)], OverlapPolicy::Reject).unwrap();
        assert!(sents[0].tags.iter().all(|t| t == "O"));
    }

    #[test]
    fn partial_overlap_warns() {
        let doc = parse_brat("d", FIG1, "T1\tNORM 13 16\tmox").unwrap();
        let (sents, warnings) = align_bio(&doc, &[tokenize(FIG1)], OverlapPolicy::Reject).unwrap();
        assert_eq!(sents[0].tags[1], "B-NORM");
        assert_eq!(warnings.len(), 1);
        assert_eq!((warnings[0].entity_start, warnings[0].token_start), (13, 12));
    }

    #[test]
    fn overlapping_entities_rejected_or_pruned() {
        let ann = "T1\tA 0 11\ttratamiento\nT2\tB 0 23\ttratamiento amoxicilina";
        let doc = parse_brat("d", FIG1, ann).unwrap();
        assert!(matches!(
            align_bio(&doc, &[tokenize(FIG1)], OverlapPolicy::Reject),
            Err(Error::OverlappingEntities { .. })
        ));
        let (sents, _) = align_bio(&doc, &[tokenize(FIG1)], OverlapPolicy::KeepLongest).unwrap();
        assert_eq!(sents[0].tags[..2], tags(&["B-B", "I-B"]));
    }

    #[test]
    fn decode_repairs_leading_inside() {
        let sent = TaggedSentence::new(tokenize("a b"), tags(&["O", "I-NORM"]));
        assert_eq!(repair_bio(&sent.tags), tags(&["O", "B-NORM"]));
        assert_eq!(decode_bio(&sent).len(), 1);
        let all_o = TaggedSentence::untagged(tokenize("a b c"));
        assert!(decode_bio(&all_o).is_empty());
    }

    #[test]
    fn label_change_inside_run_starts_new_mention() {
        let sent = TaggedSentence::new(tokenize("a b c"), tags(&["B-X", "I-Y", "I-Y"]));
        let spans = decode_bio(&sent);
        assert_eq!(spans.len(), 2);
        assert_eq!((spans[1].start, spans[1].end, spans[1].label.as_str()), (2, 5, "Y"));
    }

    #[test]
    fn adjacent_entities_stay_separate() {
        let text = "ab cd";
        let doc = parse_brat("d", text, "T1\tX 0 2\tab\nT2\tX 3 5\tcd").unwrap();
        let (sents, _) = align_bio(&doc, &[tokenize(text)], OverlapPolicy::Reject).unwrap();
        assert_eq!(sents[0].tags, tags(&["B-X", "B-X"]));
        assert_eq!(decode_bio(&sents[0]).len(), 2);
    }

    fn entity_layout() -> impl Strategy<Value = (Vec<String>, Vec<(usize, usize, bool)>)> {
        // words, then (start_word, len_words, label_is_a) entity picks
        (
            proptest::collection::vec("[a-z]{1,5}|[-,.]", 1..25),
            proptest::collection::vec((0usize..25, 1usize..4, any::<bool>()), 0..6),
        )
    }

    proptest! {
        #[test]
        fn align_yields_valid_bio_and_round_trips((words, picks) in entity_layout()) {
            let text = words.join(" ");
            let toks = tokenize(&text);
            // non-overlapping entities on token boundaries
            let mut used = vec![false; toks.len()];
            let mut ann = String::new();
            let mut expected = Vec::new();
            for (i, (s, len, a)) in picks.into_iter().enumerate() {
                if s >= toks.len() { continue; }
                let e = (s + len).min(toks.len());
                if used[s..e].iter().any(|&u| u) { continue; }
                used[s..e].iter_mut().for_each(|u| *u = true);
                let (cs, ce) = (toks[s].start, toks[e - 1].end);
                let label = if a { "A" } else { "B" };
                let surface = crate::corpus::char_slice(&text, cs, ce);
                ann.push_str(&format!("T{}\t{} {} {}\t{}\n", i + 1, label, cs, ce, surface));
                expected.push(LabeledSpan { start: cs, end: ce, label: label.into() });
            }
            let doc = parse_brat("p", &text, &ann).unwrap();
            // split into two sentences at an arbitrary point to exercise boundaries
            let mid = toks.len() / 2;
            let sents_in = vec![toks[..mid].to_vec(), toks[mid..].to_vec()];
            let (sents, _) = align_bio(&doc, &sents_in, OverlapPolicy::Reject).unwrap();
            for s in &sents {
                prop_assert!(is_valid_bio(&s.tags));
            }
            // single-sentence alignment round-trips exactly
            let (one, warnings) = align_bio(&doc, &[toks.clone()], OverlapPolicy::Reject).unwrap();
            prop_assert!(warnings.is_empty());
            let mut decoded = decode_bio(&one[0]);
            decoded.sort();
            expected.sort();
            prop_assert_eq!(decoded, expected);
        }

        #[test]
        fn repair_always_valid(raw in proptest::collection::vec(prop_oneof!["O", "B-X", "I-X", "B-Y", "I-Y", "junk"], 0..20)) {
            let raw: Vec<String> = raw;
            prop_assert!(is_valid_bio(&repair_bio(&raw)));
        }
    }
}
