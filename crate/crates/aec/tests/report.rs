use aec::pipeline::{ConditionResult, EvalReport};
use aec::report::{render_report, table_from_reports, ReportRow, ReportStyle, ReportTable};

fn condition(name: &str, accuracy: f64) -> ConditionResult {
    ConditionResult {
        name: name.into(),
        n_segments: 10,
        accuracy,
        macro_accuracy: accuracy,
        per_class: vec![Some(accuracy)],
        confusion: vec![vec![10]],
    }
}

fn report(method: &str, mode: &str, splice: usize, transform: &str, classifier: &str, conds: &[(&str, f64)]) -> EvalReport {
    let conditions: Vec<ConditionResult> = conds.iter().map(|(n, a)| condition(n, *a)).collect();
    let grand = conditions.iter().map(|c| c.accuracy).sum::<f64>() / conditions.len() as f64;
    EvalReport {
        method: method.into(),
        variant: "C".into(),
        input_mode: mode.into(),
        splice_context: splice,
        transform: transform.into(),
        classifier: classifier.into(),
        config_fingerprint: "00".into(),
        seed: 0,
        classes: vec!["a".into()],
        conditions,
        grand_average: grand,
        grand_average_macro: grand,
    }
}

fn last_cell(text: &str, label: &str) -> String {
    let line = text.lines().find(|l| l.starts_with(label)).unwrap_or_else(|| panic!("no row {label}:\n{text}"));
    line.split_whitespace().last().unwrap().to_string()
}

#[test]
fn reference_rows_average_to_88_5_and_95_8() {
    let mfcc = [79.7, 85.5, 94.5, 81.1, 87.6, 95.1, 96.1];
    let proposed = [92.5, 96.3, 96.3, 93.7, 96.5, 96.5, 98.9];
    let names = ["living_5dB", "living_10dB", "living_15dB", "office_5dB", "office_10dB", "office_15dB", "clean"];
    let rows: Vec<EvalReport> = [("MFCC", mfcc), ("[C] Proposed features", proposed)]
        .iter()
        .map(|(m, v)| report(m, "dft_mag", 3, "dct", "svm", &names.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>()))
        .collect();
    let text = render_report(&table_from_reports(&rows, ReportStyle::Table4).unwrap()).unwrap();
    assert_eq!(last_cell(&text, "MFCC"), "88.5");
    assert_eq!(last_cell(&text, "[C]"), "95.8");
    let header = text.lines().nth(1).unwrap();
    assert!(header.contains("living") && header.contains("office") && header.trim_end().ends_with("Clean"), "{text}");
}

#[test]
fn clean_goes_last_and_missing_cells_are_dashes() {
    let a = report("a", "dft_mag", 3, "dct", "svm", &[("clean", 90.0), ("office_5dB", 70.0)]);
    let b = report("b", "dft_mag", 3, "dct", "svm", &[("clean", 80.0)]);
    let t = table_from_reports(&[a, b], ReportStyle::Table4).unwrap();
    assert_eq!(t.columns, vec!["5".to_string(), String::new()]);
    assert_eq!(t.rows[1].values, vec![None, Some(80.0)]);
    let text = render_report(&t).unwrap();
    assert_eq!(last_cell(&text, "a "), "80.0");
    assert!(text.lines().find(|l| l.starts_with("b ")).unwrap().contains(" - "));
}

#[test]
fn grid_layouts_place_reports_by_setting() {
    let reps = vec![
        report("x", "dft_mag", 1, "dct", "svm", &[("clean", 80.0)]),
        report("x", "dft_mag", 3, "dct", "svm", &[("clean", 90.0)]),
        report("x", "waveform", 3, "pca", "gmm", &[("clean", 60.0)]),
    ];
    let t2 = table_from_reports(&reps, ReportStyle::Table2).unwrap();
    assert_eq!(t2.columns, vec!["(1)".to_string(), "(2)".to_string()]);
    assert_eq!(t2.rows.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(), ["1", "3"]);
    assert_eq!(t2.rows[1].values, vec![Some(90.0), Some(60.0)]);
    let t3 = table_from_reports(&reps[1..], ReportStyle::Table3).unwrap();
    assert_eq!(t3.columns, vec!["GMM".to_string(), "SVM".to_string()]);
    assert_eq!(t3.rows[0].label, "With DCT");
    assert_eq!(t3.rows[0].values, vec![None, Some(90.0)]);
}

#[test]
fn tables_survive_json() {
    let t = ReportTable {
        style: ReportStyle::Table3,
        title: "t".into(),
        groups: vec![],
        columns: vec!["GMM".into()],
        rows: vec![ReportRow { label: "r".into(), values: vec![Some(1.25)] }],
    };
    let back: ReportTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
    assert_eq!(back, t);
}
