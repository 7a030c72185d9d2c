//! Evaluation report rendering and the prototype similarity CSV.

use std::fmt::Write as _;

use emotrans_core::{EvalReport, LabelSet, Matrix};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct LabelRecord<'a> {
    pub label: &'a str,
    pub support: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Machine-readable form of an [`EvalReport`] with label words.
#[derive(Debug, Serialize)]
pub struct ReportRecord<'a> {
    pub total: usize,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub labels: Vec<&'a str>,
    pub per_label: Vec<LabelRecord<'a>>,
    pub confusion: &'a [Vec<usize>],
}

pub fn report_record<'a>(report: &'a EvalReport, labels: &'a LabelSet) -> ReportRecord<'a> {
    let word = |id: usize| labels.word(id).unwrap_or("?");
    ReportRecord {
        total: report.total,
        weighted_precision: report.weighted_precision,
        weighted_recall: report.weighted_recall,
        weighted_f1: report.weighted_f1,
        labels: labels.words().iter().map(String::as_str).collect(),
        per_label: report
            .per_label
            .iter()
            .map(|l| LabelRecord {
                label: word(l.label),
                support: l.support,
                precision: l.precision,
                recall: l.recall,
                f1: l.f1,
            })
            .collect(),
        confusion: &report.confusion,
    }
}

pub fn report_json(report: &EvalReport, labels: &LabelSet) -> String {
    let mut s =
        serde_json::to_string_pretty(&report_record(report, labels)).expect("report serializes");
    s.push('\n');
    s
}

pub fn report_text(report: &EvalReport, labels: &LabelSet) -> String {
    let width = labels
        .words()
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = String::new();
    writeln!(s, "evaluated utterances: {}", report.total).unwrap();
    writeln!(s, "weighted precision:   {:.4}", report.weighted_precision).unwrap();
    writeln!(s, "weighted recall:      {:.4}", report.weighted_recall).unwrap();
    writeln!(s, "weighted F1:          {:.4}", report.weighted_f1).unwrap();
    writeln!(s).unwrap();
    writeln!(
        s,
        "{:<width$}  {:>7}  {:>9}  {:>6}  {:>6}",
        "label", "support", "precision", "recall", "f1"
    )
    .unwrap();
    for l in &report.per_label {
        writeln!(
            s,
            "{:<width$}  {:>7}  {:>9.4}  {:>6.4}  {:>6.4}",
            labels.word(l.label).unwrap_or("?"),
            l.support,
            l.precision,
            l.recall,
            l.f1
        )
        .unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "confusion (rows gold, columns predicted):").unwrap();
    for (i, row) in report.confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
        writeln!(
            s,
            "{:<width$}  {}",
            labels.word(i).unwrap_or("?"),
            cells.join(" ")
        )
        .unwrap();
    }
    s
}

/// Square matrix as CSV with a header row and a key column.
pub fn matrix_csv<S: AsRef<str>>(keys: &[S], m: &Matrix) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![String::new()];
    header.extend(keys.iter().map(|k| k.as_ref().to_string()));
    w.write_record(&header).expect("in-memory write");
    for (k, row) in keys.iter().zip(m.iter_rows()) {
        let mut rec = vec![k.as_ref().to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}
