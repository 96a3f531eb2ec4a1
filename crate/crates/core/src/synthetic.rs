//! Small seeded generators of Spanish clinical-style text used by the
//! examples and tests: labeled sentences for boundary detection, BIO-tagged
//! sentences for the tagger, and brat document pairs for conversion.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{tokenize, TaggedSentence};

const OPENERS: &[&str] = &[
    "El", "La", "Los", "Se", "Tras", "Durante", "Paciente", "Presenta", "Ingresa", "Hola",
    "Qué", "Mujer", "Varón", "Control",
];

const WORDS: &[&str] = &[
    "paciente", "presenta", "dolor", "abdominal", "fiebre", "tratamiento", "control", "semanas",
    "mejoría", "clínica", "analítica", "normal", "sin", "con", "de", "la", "el", "en", "tras",
    "días", "ingreso", "alta", "consulta", "hospital", "pruebas", "imagen", "lesión", "estudio",
    "oral", "dosis", "cada", "horas", "evolución", "favorable", "tal", "bien", "cuadro",
];

pub const DRUGS: &[&str] = &[
    "amoxicilina", "paracetamol", "ibuprofeno", "omeprazol", "metformina", "insulina",
    "heparina", "warfarina", "prednisona", "ciprofloxacino", "vancomicina", "cisplatino",
];

pub const MULTI_DRUGS: &[&[&str]] = &[
    &["amoxicilina", "-", "clavulánico"],
    &["ácido", "fólico"],
    &["sulfato", "ferroso"],
    &["cloruro", "potásico"],
];

pub const PROTEINS: &[&str] = &["albúmina", "ferritina", "troponina", "hemoglobina", "creatinina"];

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Sentences whose only boundary-like characters inside the sentence are
/// decimal points and lowercase-followed `:`/`;`; every sentence ends in
/// `.`, `?` or `!` and starts with an uppercase letter.
pub fn eos_sentences(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut s = OPENERS.choose(&mut rng).unwrap().to_string();
            let len = rng.gen_range(2..9);
            for i in 0..len {
                s.push(' ');
                s.push_str(WORDS.choose(&mut rng).unwrap());
                if i + 1 < len {
                    match rng.gen_range(0..10) {
                        0 => s.push_str(&format!(" {}.{} mg", rng.gen_range(1..10), rng.gen_range(0..10))),
                        1 => s.push(':'),
                        2 => s.push(';'),
                        _ => {}
                    }
                }
            }
            s.push(*['.', '.', '.', '?', '!'].choose(&mut rng).unwrap());
            s
        })
        .collect()
}

/// A BIO-tagged sentence built from a template; labels are
/// `NORMALIZABLES` for drugs and `PROTEINAS` for proteins.
fn ner_sentence(rng: &mut ChaCha8Rng) -> TaggedSentence {
    let mut words: Vec<(String, String)> = Vec::new();
    let push_plain = |words: &mut Vec<(String, String)>, w: &str| words.push((w.to_string(), "O".into()));
    let opener = *["Se", "Inicia", "Recibe", "Presenta", "Tras"].choose(rng).unwrap();
    push_plain(&mut words, opener);
    let filler = rng.gen_range(1..4);
    for _ in 0..filler {
        push_plain(&mut words, WORDS.choose(rng).unwrap());
    }
    let n_entities = rng.gen_range(1..3);
    for k in 0..n_entities {
        if k > 0 {
            push_plain(&mut words, "y");
        }
        match rng.gen_range(0..5) {
            0 | 1 => {
                words.push((DRUGS.choose(rng).unwrap().to_string(), "B-NORMALIZABLES".into()));
            }
            2 => {
                let parts = MULTI_DRUGS.choose(rng).unwrap();
                for (i, p) in parts.iter().enumerate() {
                    let tag = if i == 0 { "B-NORMALIZABLES" } else { "I-NORMALIZABLES" };
                    words.push((p.to_string(), tag.into()));
                }
            }
            _ => {
                push_plain(&mut words, "de");
                words.push((PROTEINS.choose(rng).unwrap().to_string(), "B-PROTEINAS".into()));
            }
        }
        push_plain(&mut words, WORDS.choose(rng).unwrap());
    }
    push_plain(&mut words, ".");
    let text: Vec<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
    let tokens = tokenize(&text.join(" "));
    debug_assert_eq!(tokens.len(), words.len());
    TaggedSentence::new(tokens, words.into_iter().map(|(_, t)| t).collect())
}

pub fn ner_corpus(n: usize, seed: u64) -> Vec<TaggedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| ner_sentence(&mut rng)).collect()
}

/// Plain text of tagged sentences, one per line.
pub fn corpus_text(sentences: &[TaggedSentence]) -> String {
    sentences
        .iter()
        .map(|s| s.surfaces().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A brat document: `(doc_id, txt, ann, entity count)`.
pub type BratFixture = (String, String, String, usize);

/// Multi-sentence brat documents whose entities all sit on token
/// boundaries. Sentences are separated by `". "` + capitalized opener or by
/// line breaks, and use irregular spacing.
pub fn brat_documents(n_docs: usize, sentences_per_doc: usize, seed: u64) -> Vec<BratFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|d| {
            let mut text = String::new();
            let mut ann = String::new();
            let mut len = 0usize;
            let mut count = 0usize;
            let append = |text: &mut String, len: &mut usize, s: &str| {
                text.push_str(s);
                *len += s.chars().count();
            };
            for si in 0..sentences_per_doc {
                if si > 0 {
                    let sep = *[" ", "  ", "\n", "\n\n"].choose(&mut rng).unwrap();
                    append(&mut text, &mut len, sep);
                }
                let sent = ner_sentence(&mut rng);
                let mut open: Option<(usize, String)> = None;
                for (ti, (tok, tag)) in sent.tokens.iter().zip(&sent.tags).enumerate() {
                    let word = if ti == 0 { capitalize(&tok.surface) } else { tok.surface.clone() };
                    if ti > 0 {
                        let gap = if tok.surface == "." { "" } else { *[" ", " ", "  "].choose(&mut rng).unwrap() };
                        // close before the gap so the entity never ends in whitespace
                        if !tag.starts_with("I-") {
                            if let Some((start, label)) = open.take() {
                                count += 1;
                                let surface = crate::corpus::char_slice(&text, start, len);
                                ann.push_str(&format!("T{count}\t{label} {start} {len}\t{surface}\n"));
                            }
                        }
                        append(&mut text, &mut len, gap);
                    }
                    let start = len;
                    append(&mut text, &mut len, &word);
                    if let Some(label) = tag.strip_prefix("B-") {
                        open = Some((start, label.to_string()));
                    }
                }
                if let Some((start, label)) = open.take() {
                    count += 1;
                    let surface = crate::corpus::char_slice(&text, start, len);
                    ann.push_str(&format!("T{count}\t{label} {start} {len}\t{surface}\n"));
                }
            }
            (format!("doc{d:03}"), text, ann, count)
        })
        .collect()
}

/// `"abc"` repeated to `len` characters.
pub fn periodic_text(pattern: &str, len: usize) -> String {
    pattern.chars().cycle().take(len).collect()
}
