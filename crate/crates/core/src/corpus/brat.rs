use super::{AnnotatedDocument, EntityAnnotation, LabeledSpan, RawDocument};
use crate::error::{Error, Result};

/// Parses a brat `.txt`/`.ann` pair. Only text-bound (`T`) lines are read;
/// relations, events, attributes and notes are skipped.
pub fn parse_brat(doc_id: &str, txt_content: &str, ann_content: &str) -> Result<AnnotatedDocument> {
    let doc = RawDocument::new(doc_id, txt_content);
    let chars: Vec<char> = txt_content.chars().collect();
    let mut entities = Vec::new();

    for (idx, line) in ann_content.lines().enumerate() {
        let line_no = idx + 1;
        if !line.starts_with('T') {
            continue;
        }
        let malformed = |reason: &str| Error::MalformedAnnotation {
            line: line_no,
            reason: reason.to_string(),
        };
        let mut fields = line.splitn(3, '\t');
        let ann_id = fields.next().unwrap_or_default();
        let spec = fields.next().ok_or_else(|| malformed("missing label/offset field"))?;
        let surface = fields.next().ok_or_else(|| malformed("missing surface field"))?;
        if spec.contains(';') {
            return Err(malformed("discontinuous spans are not supported"));
        }
        let parts: Vec<&str> = spec.split(' ').collect();
        let [label, start, end] = parts[..] else {
            return Err(malformed("expected `LABEL START END`"));
        };
        let start: usize = start.parse().map_err(|_| malformed("start is not an integer"))?;
        let end: usize = end.parse().map_err(|_| malformed("end is not an integer"))?;
        if start >= end {
            return Err(malformed("start must be smaller than end"));
        }
        if end > chars.len() {
            return Err(Error::OffsetOutOfRange {
                ann_id: ann_id.to_string(),
                end,
                len: chars.len(),
            });
        }
        let slice: String = chars[start..end].iter().collect();
        if slice != surface {
            return Err(Error::SurfaceMismatch {
                ann_id: ann_id.to_string(),
                surface: surface.to_string(),
                slice,
            });
        }
        entities.push(EntityAnnotation {
            ann_id: ann_id.to_string(),
            label: label.to_string(),
            start,
            end,
            surface: slice,
        });
    }

    entities.sort_by(|a, b| (a.start, a.end).cmp(&(b.start, b.end)));
    Ok(AnnotatedDocument {
        doc,
        entities,
        sentences: Vec::new(),
    })
}

/// Renders spans as brat text-bound lines `T<n>\tLABEL START END\tSURFACE`,
/// numbered from 1 in offset order. `surface_of` supplies the surface text.
pub fn write_brat<F>(spans: &[LabeledSpan], mut surface_of: F) -> String
where
    F: FnMut(&LabeledSpan) -> String,
{
    let mut sorted: Vec<&LabeledSpan> = spans.iter().collect();
    sorted.sort();
    let mut out = String::new();
    for (i, span) in sorted.into_iter().enumerate() {
        out.push_str(&format!(
            "T{}\t{} {} {}\t{}\n",
            i + 1,
            span.label,
            span.start,
            span.end,
            surface_of(span)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_entity() {
        let doc = parse_brat(
            "d",
            "tratamiento amoxicilina",
            "T1\tNORMALIZABLES 12 23\tamoxicilina",
        )
        .unwrap();
        assert_eq!(doc.entities.len(), 1);
        let e = &doc.entities[0];
        assert_eq!((e.start, e.end, e.label.as_str()), (12, 23, "NORMALIZABLES"));
    }

    #[test]
    fn empty_annotation_file() {
        let doc = parse_brat("d", "anything at all", "").unwrap();
        assert!(doc.entities.is_empty());
    }

    #[test]
    fn offset_out_of_range() {
        let err = parse_brat("d", "0123456789", "T1\tX 2 99\tfoo").unwrap_err();
        assert!(matches!(err, Error::OffsetOutOfRange { end: 99, len: 10, .. }));
    }

    #[test]
    fn surface_mismatch_and_malformed() {
        assert!(matches!(
            parse_brat("d", "abcdef", "T1\tX 0 3\tabd"),
            Err(Error::SurfaceMismatch { .. })
        ));
        assert!(matches!(
            parse_brat("d", "abcdef", "T1\tX 0\tab"),
            Err(Error::MalformedAnnotation { line: 1, .. })
        ));
        assert!(matches!(
            parse_brat("d", "abcdef", "T1\tX zero 3\tabc"),
            Err(Error::MalformedAnnotation { .. })
        ));
        assert!(matches!(
            parse_brat("d", "abcdef", "T1 X 0 3 abc"),
            Err(Error::MalformedAnnotation { .. })
        ));
    }

    #[test]
    fn skips_non_textbound_lines_and_sorts() {
        let ann = "T2\tB 5 7\tef\n#1\tAnnotatorNotes T1\tnote\nR1\tRel Arg1:T1 Arg2:T2\nT1\tA 0 2\tab\n";
        let doc = parse_brat("d", "ab cdef", ann).unwrap();
        let ids: Vec<_> = doc.entities.iter().map(|e| e.ann_id.as_str()).collect();
        assert_eq!(ids, ["T1", "T2"]);
    }

    #[test]
    fn character_offsets_with_accents() {
        let doc = parse_brat("d", "ácido fólico", "T1\tX 6 12\tfólico").unwrap();
        assert_eq!(doc.entities[0].surface, "fólico");
    }

    #[test]
    fn write_then_parse() {
        let text = "ab cd ef";
        let spans = vec![
            LabeledSpan { start: 6, end: 8, label: "Y".into() },
            LabeledSpan { start: 0, end: 5, label: "X".into() },
        ];
        let ann = write_brat(&spans, |s| super::super::char_slice(text, s.start, s.end));
        assert_eq!(ann, "T1\tX 0 5\tab cd\nT2\tY 6 8\tef\n");
        let doc = parse_brat("d", text, &ann).unwrap();
        assert_eq!(doc.entities.len(), 2);
    }
}
