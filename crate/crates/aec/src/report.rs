//! Fixed-width accuracy tables in three layouts: input features by splice
//! count, transforms by classifier, and methods by noise condition.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::EvalReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportStyle {
    /// Rows: spliced frames; columns: network input type.
    Table2,
    /// Rows: transform; columns: classifier.
    Table3,
    /// Rows: method; columns: noise condition.
    Table4,
}

impl ReportStyle {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "table2" => Some(Self::Table2),
            "table3" => Some(Self::Table3),
            "table4" => Some(Self::Table4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub values: Vec<Option<f64>>,
}

impl ReportRow {
    /// Unweighted mean over the columns that have a value.
    pub fn average(&self) -> Option<f64> {
        let present: Vec<f64> = self.values.iter().flatten().copied().collect();
        (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub style: ReportStyle,
    pub title: String,
    /// Optional spanning headers as `(label, number of columns)`.
    #[serde(default)]
    pub groups: Vec<(String, usize)>,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.1}"))
}

/// Renders the table with a trailing unweighted average column.
pub fn render_report(table: &ReportTable) -> Result<String> {
    if table.rows.is_empty() || table.columns.is_empty() {
        return Err(Error::EmptyReport);
    }
    let label_w = table.rows.iter().map(|r| r.label.len()).chain([table.title.len().min(24), 6]).max().unwrap_or(6);
    let mut widths: Vec<usize> = table.columns.iter().map(|c| c.len().max(5)).collect();
    // widen columns so each group label fits over its span
    let mut at = 0;
    for (g, span) in &table.groups {
        let span = (*span).min(widths.len().saturating_sub(at));
        if span > 0 {
            let have: usize = widths[at..at + span].iter().sum::<usize>() + 2 * (span - 1);
            if g.len() > have {
                widths[at + span - 1] += g.len() - have;
            }
        }
        at += span;
    }
    let avg_w = "Average".len();
    let mut s = String::new();
    writeln!(s, "{}", table.title).expect("string write");
    if !table.groups.is_empty() {
        let mut line = format!("{:label_w$}", "");
        let mut at = 0;
        for (g, span) in &table.groups {
            let span = (*span).min(widths.len().saturating_sub(at));
            if span == 0 {
                continue;
            }
            let w: usize = widths[at..at + span].iter().sum::<usize>() + 2 * (span - 1);
            write!(line, "  {g:<w$}").expect("string write");
            at += span;
        }
        writeln!(s, "{}", line.trim_end()).expect("string write");
    }
    let mut header = format!("{:label_w$}", "");
    for (c, w) in table.columns.iter().zip(&widths) {
        write!(header, "  {c:>w$}").expect("string write");
    }
    write!(header, "  {:>avg_w$}", "Average").expect("string write");
    writeln!(s, "{header}").expect("string write");
    writeln!(s, "{}", "-".repeat(header.len())).expect("string write");
    for row in &table.rows {
        let mut line = format!("{:label_w$}", row.label);
        for (i, w) in widths.iter().enumerate() {
            write!(line, "  {:>w$}", cell(row.values.get(i).copied().flatten())).expect("string write");
        }
        write!(line, "  {:>avg_w$}", cell(row.average())).expect("string write");
        writeln!(s, "{line}").expect("string write");
    }
    Ok(s)
}

/// Splits a condition tag like `office_5dB` into `("office", "5")`.
fn split_condition(name: &str) -> (String, String) {
    if name == "clean" {
        return ("Clean".into(), String::new());
    }
    match name.rsplit_once('_') {
        Some((noise, snr)) if snr.ends_with("dB") => (noise.into(), snr.trim_end_matches("dB").into()),
        _ => (name.into(), String::new()),
    }
}

const INPUT_MODES: [(&str, &str); 4] =
    [("dft_mag", "(1)"), ("waveform", "(2)"), ("dft_real_imag", "(3)"), ("concat", "(1)+(2)+(3)")];
const TRANSFORMS: [(&str, &str); 3] = [("none", "W/o transformation"), ("dct", "With DCT"), ("pca", "With PCA")];
const CLASSIFIERS: [(&str, &str); 3] = [("gmm", "GMM"), ("svm", "SVM"), ("dnn", "DNN")];

fn grid_table(
    style: ReportStyle,
    title: &str,
    reports: &[EvalReport],
    row_key: impl Fn(&EvalReport) -> String,
    col_key: impl Fn(&EvalReport) -> String,
    known_cols: &[(&str, &str)],
    row_label: impl Fn(&str) -> String,
) -> ReportTable {
    let cols: Vec<&(&str, &str)> = known_cols.iter().filter(|(k, _)| reports.iter().any(|r| col_key(r) == *k)).collect();
    let mut row_keys: Vec<String> = reports.iter().map(&row_key).collect();
    row_keys.sort();
    row_keys.dedup();
    let rows = row_keys
        .iter()
        .map(|rk| ReportRow {
            label: row_label(rk),
            values: cols
                .iter()
                .map(|(ck, _)| reports.iter().find(|r| &row_key(r) == rk && col_key(r) == *ck).map(|r| r.grand_average))
                .collect(),
        })
        .collect();
    ReportTable {
        style,
        title: title.into(),
        groups: Vec::new(),
        columns: cols.iter().map(|(_, l)| (*l).to_string()).collect(),
        rows,
    }
}

/// Arranges evaluation reports in the requested layout.
pub fn table_from_reports(reports: &[EvalReport], style: ReportStyle) -> Result<ReportTable> {
    if reports.is_empty() {
        return Err(Error::EmptyReport);
    }
    Ok(match style {
        ReportStyle::Table2 => grid_table(
            style,
            "Average segment accuracy [%] by network input and spliced frames",
            reports,
            |r| format!("{:03}", r.splice_context),
            |r| r.input_mode.clone(),
            &INPUT_MODES,
            |k| k.trim_start_matches('0').to_string(),
        ),
        ReportStyle::Table3 => {
            let order = |t: &str| TRANSFORMS.iter().position(|(k, _)| *k == t).unwrap_or(TRANSFORMS.len());
            grid_table(
                style,
                "Average segment accuracy [%] by transform and classifier",
                reports,
                |r| format!("{}:{}", order(&r.transform), r.transform),
                |r| r.classifier.clone(),
                &CLASSIFIERS,
                |k| {
                    let t = k.split_once(':').map_or(k, |(_, t)| t);
                    TRANSFORMS.iter().find(|(key, _)| *key == t).map_or_else(|| t.to_string(), |(_, l)| (*l).to_string())
                },
            )
        }
        ReportStyle::Table4 => {
            let mut names: Vec<String> = Vec::new();
            for r in reports {
                for c in &r.conditions {
                    if !names.contains(&c.name) {
                        names.push(c.name.clone());
                    }
                }
            }
            if let Some(p) = names.iter().position(|n| n == "clean") {
                let c = names.remove(p);
                names.push(c);
            }
            let mut groups: Vec<(String, usize)> = Vec::new();
            let mut columns = Vec::new();
            for n in &names {
                let (g, c) = split_condition(n);
                match groups.last_mut() {
                    Some((last, span)) if *last == g => *span += 1,
                    _ => groups.push((g, 1)),
                }
                columns.push(c);
            }
            let rows = reports
                .iter()
                .map(|r| ReportRow {
                    label: r.method.clone(),
                    values: names.iter().map(|n| r.condition(n).map(|c| c.accuracy)).collect(),
                })
                .collect();
            ReportTable {
                style,
                title: "Segment accuracy [%] per condition (SNR in dB)".into(),
                groups,
                columns,
                rows,
            }
        }
    })
}
