//! Strict entity-level evaluation: a predicted mention is correct only when
//! document, start, end and label all equal a gold mention.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::corpus::{decode_bio, TaggedSentence};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityMention {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntityMention {
    pub fn new(doc_id: impl Into<String>, start: usize, end: usize, label: impl Into<String>) -> Self {
        EntityMention {
            doc_id: doc_id.into(),
            start,
            end,
            label: label.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchMode {
    #[default]
    Strict,
    /// Same document and label with overlapping spans, matched one-to-one.
    Overlap,
}

/// Counts and percentage scores for one label or for the micro average.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let (precision, recall, f1) = prf(tp, fp, fn_);
        Scores {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub micro: Scores,
    pub per_label: BTreeMap<String, Scores>,
}

impl EvalReport {
    pub fn f1(&self) -> f64 {
        self.micro.f1
    }

    /// `"F1 / P / R"` with two decimals, the order used in results tables.
    pub fn triple(&self) -> String {
        format!(
            "{} / {} / {}",
            format_pct(self.micro.f1),
            format_pct(self.micro.precision),
            format_pct(self.micro.recall)
        )
    }

    /// Machine-readable summary, one `key=value` per line.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let m = &self.micro;
        let _ = writeln!(out, "tp={}\nfp={}\nfn={}", m.tp, m.fp, m.fn_);
        let _ = writeln!(out, "precision={:.4}\nrecall={:.4}\nf1={:.4}", m.precision, m.recall, m.f1);
        for (label, s) in &self.per_label {
            let _ = writeln!(
                out,
                "{label}.tp={}\n{label}.fp={}\n{label}.fn={}\n{label}.precision={:.4}\n{label}.recall={:.4}\n{label}.f1={:.4}",
                s.tp, s.fp, s.fn_, s.precision, s.recall, s.f1
            );
        }
        out
    }
}

/// Precision, recall and F1 in percent; every zero denominator yields 0.
pub fn prf(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64) {
    let pct = |num: usize, den: usize| if den == 0 { 0.0 } else { 100.0 * num as f64 / den as f64 };
    let p = pct(tp, tp + fp);
    let r = pct(tp, tp + fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Two decimals, rounding halves up.
pub fn format_pct(x: f64) -> String {
    if !x.is_finite() {
        return "0.00".into();
    }
    let cents = (x * 100.0 + 0.5 + 1e-9).floor() as i64;
    let sign = if cents < 0 { "-" } else { "" };
    let cents = cents.abs();
    format!("{sign}{}.{:02}", cents / 100, cents % 100)
}

fn unique(mentions: &[EntityMention], side: &str) -> Result<BTreeSet<EntityMention>> {
    let mut set = BTreeSet::new();
    for m in mentions {
        if !set.insert(m.clone()) {
            return Err(Error::DuplicateMention(format!(
                "{side}: {} {} {} {}",
                m.doc_id, m.start, m.end, m.label
            )));
        }
    }
    Ok(set)
}

pub fn evaluate(gold: &[EntityMention], pred: &[EntityMention]) -> Result<EvalReport> {
    evaluate_with(gold, pred, MatchMode::Strict)
}

pub fn evaluate_with(gold: &[EntityMention], pred: &[EntityMention], mode: MatchMode) -> Result<EvalReport> {
    let gold = unique(gold, "gold")?;
    let pred = unique(pred, "pred")?;
    let matched: Vec<EntityMention> = match mode {
        MatchMode::Strict => gold.intersection(&pred).cloned().collect(),
        MatchMode::Overlap => overlap_matches(&gold, &pred),
    };

    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    for m in &gold {
        counts.entry(m.label.clone()).or_default().2 += 1;
    }
    for m in &pred {
        counts.entry(m.label.clone()).or_default().1 += 1;
    }
    for m in &matched {
        let c = counts.get_mut(&m.label).unwrap();
        c.0 += 1;
        c.1 -= 1;
        c.2 -= 1;
    }
    let per_label: BTreeMap<String, Scores> = counts
        .into_iter()
        .map(|(l, (tp, fp, fn_))| (l, Scores::from_counts(tp, fp, fn_)))
        .collect();
    let (tp, fp, fn_) = per_label
        .values()
        .fold((0, 0, 0), |acc, s| (acc.0 + s.tp, acc.1 + s.fp, acc.2 + s.fn_));
    Ok(EvalReport {
        micro: Scores::from_counts(tp, fp, fn_),
        per_label,
    })
}

// Greedy one-to-one matching in sorted order; returns the matched gold side.
fn overlap_matches(gold: &BTreeSet<EntityMention>, pred: &BTreeSet<EntityMention>) -> Vec<EntityMention> {
    let mut used = BTreeSet::new();
    let mut out = Vec::new();
    for p in pred {
        let hit = gold.iter().find(|g| {
            !used.contains(*g) && g.doc_id == p.doc_id && g.label == p.label && g.start < p.end && p.start < g.end
        });
        if let Some(g) = hit {
            used.insert(g.clone());
            out.push(g.clone());
        }
    }
    out
}

/// Aligned text table with F1, Precision and Recall columns.
pub fn report_table(rows: &[(String, EvalReport)]) -> String {
    let width = rows.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}  {:>8}  {:>9}  {:>8}\n", "Model", "F1", "Precision", "Recall");
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>9}  {:>8}",
            name,
            format_pct(r.micro.f1),
            format_pct(r.micro.precision),
            format_pct(r.micro.recall)
        );
    }
    out
}

/// Text-bound mentions of a brat `.ann` file, without checking surfaces.
pub fn mentions_from_ann(doc_id: &str, ann: &str) -> Result<Vec<EntityMention>> {
    let mut out = Vec::new();
    for (idx, line) in ann.lines().enumerate() {
        if !line.starts_with('T') {
            continue;
        }
        let malformed = |reason: &str| Error::MalformedAnnotation {
            line: idx + 1,
            reason: reason.into(),
        };
        let spec = line.split('\t').nth(1).ok_or_else(|| malformed("missing label/offset field"))?;
        let parts: Vec<&str> = spec.split(' ').collect();
        let [label, start, end] = parts[..] else {
            return Err(malformed("expected `LABEL START END`"));
        };
        let start = start.parse().map_err(|_| malformed("start is not an integer"))?;
        let end = end.parse().map_err(|_| malformed("end is not an integer"))?;
        out.push(EntityMention::new(doc_id, start, end, label));
    }
    Ok(out)
}

/// Mentions decoded from BIO-tagged sentences.
pub fn mentions_from_sentences(doc_id: &str, sentences: &[TaggedSentence]) -> Vec<EntityMention> {
    sentences
        .iter()
        .flat_map(decode_bio)
        .map(|s| EntityMention::new(doc_id, s.start, s.end, s.label))
        .collect()
}
