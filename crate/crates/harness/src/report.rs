//! Plain-text rendering of an [`AnalysisReport`].

use std::fmt::Write;

use stereo_core::stats::{AnalysisReport, Comparison, ComparisonKind, GroupSummary, TestKind};

fn median_cell(g: Option<&GroupSummary>) -> String {
    match g {
        None => "-".into(),
        Some(g) => {
            let body = match g.summary {
                Some(s) => format!("{} [{} to {}]", num(s.median), num(s.q1), num(s.q3)),
                None => "-".into(),
            };
            if g.n_outside_limits > 0 {
                format!("{body} (OL {})", g.n_outside_limits)
            } else {
                body
            }
        }
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Three decimals without a negative zero.
fn dec3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn wilcoxon_cell(c: &Comparison) -> String {
    c.wilcoxon.map_or("-".into(), |w| format!("z={}, p={}", dec3(w.z), dec3(w.p_two_sided)))
}

fn kappa_cell(c: &Comparison) -> String {
    c.kappa.map_or("-".into(), |k| {
        let flag = if k.near_band_edge { "*" } else { "" };
        format!("{} ({}, {}) {}{flag}", dec3(k.kappa), dec3(k.ci95_low), dec3(k.ci95_high), k.label)
    })
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |out: &mut String, cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(out, header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    let _ = writeln!(out, "{}", rule.join("  "));
    for row in rows {
        line(out, &row.iter().map(String::as_str).collect::<Vec<_>>());
    }
}

pub fn render_text(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} records, {} subjects\n", report.n_records, report.n_subjects);

    let group = |t: TestKind, day: u8| report.groups.iter().find(|g| g.test == t && g.day == day);
    let between_days = |t: TestKind| {
        report.comparisons.iter().find(|c| c.kind == ComparisonKind::BetweenDays && c.first.0 == t)
    };
    let rows: Vec<Vec<String>> = TestKind::ALL
        .iter()
        .filter(|&&t| group(t, 1).is_some() || group(t, 2).is_some())
        .map(|&t| {
            let c = between_days(t);
            vec![
                t.to_string(),
                median_cell(group(t, 1)),
                median_cell(group(t, 2)),
                c.map_or("-".into(), wilcoxon_cell),
                c.map_or("-".into(), kappa_cell),
            ]
        })
        .collect();
    let _ = writeln!(out, "Median (arcsec) [interquartile range]");
    table(&mut out, &["Test", "Day 1", "Day 2", "Wilcoxon", "Kappa (95% CI)"], &rows);

    let instruments: Vec<Vec<String>> = report
        .comparisons
        .iter()
        .filter(|c| c.kind == ComparisonKind::BetweenInstruments)
        .map(|c| vec![c.title(), c.n_paired.to_string(), wilcoxon_cell(c), kappa_cell(c)])
        .collect();
    if !instruments.is_empty() {
        let _ = writeln!(out, "\nBetween instruments");
        table(&mut out, &["Comparison", "Pairs", "Wilcoxon", "Kappa (95% CI)"], &instruments);
    }

    let max_categories = report.cumulative.iter().map(|c| c.percent_at_or_below.len()).max().unwrap_or(0);
    if max_categories > 0 {
        let _ = writeln!(out, "\nCumulative % of subjects at or below each level");
        let labels: Vec<String> = (1..=max_categories).map(|k| k.to_string()).collect();
        let mut header = vec!["Test", "Day", "n"];
        header.extend(labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = report
            .cumulative
            .iter()
            .map(|c| {
                let mut row = vec![c.test.to_string(), c.day.to_string(), c.n_subjects.to_string()];
                row.extend(c.percent_at_or_below.iter().map(|p| format!("{p:.1}")));
                row
            })
            .collect();
        table(&mut out, &header, &rows);
    }

    if report.comparisons.iter().any(|c| c.kappa.is_some_and(|k| k.near_band_edge)) {
        let _ = writeln!(out, "\n* kappa within 0.01 of an agreement band edge");
    }
    if !report.warnings.is_empty() {
        let _ = writeln!(out, "\nWarnings");
        for w in &report.warnings {
            let _ = writeln!(out, "  {w}");
        }
    }
    out
}
