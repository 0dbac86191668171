use std::collections::BTreeSet;
use std::fmt::Write;

use super::McReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TextTable,
    Json,
    Csv,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "text-table" | "table" => Some(ReportFormat::TextTable),
            "json" => Some(ReportFormat::Json),
            "csv" => Some(ReportFormat::Csv),
            _ => None,
        }
    }
}

pub fn emit_report(report: &McReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::TextTable => text_table(report),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => csv(report),
    }
}

/// `.049` style, as printed in rejection-probability tables.
fn short(p: f64) -> String {
    let s = format!("{p:.3}");
    s.strip_prefix('0').map(str::to_string).unwrap_or(s)
}

fn pct(alpha: f64) -> String {
    format!("{}%", (alpha * 1000.0).round() / 10.0)
}

// Rows are distinct model labels, column groups are sample sizes.
fn text_table(report: &McReport) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for c in &report.cells {
        if !labels.contains(&c.label.as_str()) {
            labels.push(&c.label);
        }
    }
    let ns: BTreeSet<usize> = report.cells.iter().map(|c| c.model.n).collect();
    let alphas_for = |n: usize| -> Vec<f64> {
        report
            .cells
            .iter()
            .find(|c| c.model.n == n)
            .map(|c| c.alphas.clone())
            .unwrap_or_default()
    };
    let label_w = labels.iter().map(|l| l.len()).max().unwrap_or(5).max(5);
    let col_w = 7;
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "model");
    for &n in &ns {
        let width = col_w * alphas_for(n).len();
        let _ = write!(out, " | {:<width$}", format!("n = {n}"));
    }
    out.push('\n');
    let _ = write!(out, "{:label_w$}", "");
    for &n in &ns {
        out.push_str(" | ");
        for a in alphas_for(n) {
            let _ = write!(out, "{:>col_w$}", pct(a));
        }
    }
    out.push('\n');
    for label in &labels {
        let _ = write!(out, "{label:label_w$}");
        for &n in &ns {
            out.push_str(" | ");
            let cell = report.cells.iter().find(|c| c.label == *label && c.model.n == n);
            for (k, _) in alphas_for(n).iter().enumerate() {
                let v = cell.and_then(|c| c.frequencies.get(k)).map(|&p| short(p)).unwrap_or_default();
                let _ = write!(out, "{v:>col_w$}");
            }
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "\nruns = {}, B = {}, v = {}, seed = {}, kernel = {}{}",
        report.runs,
        report.replicates,
        report.smoothing_v,
        report.master_seed,
        report.kernel,
        if report.weighted { ", weighted" } else { "" }
    );
    for c in &report.cells {
        let se: Vec<String> = c.std_errors.iter().map(|&s| short(s)).collect();
        let _ = writeln!(
            out,
            "{:label_w$} n={:<4} completed {}/{}  mean c2_hat {}  se [{}]",
            c.label,
            c.model.n,
            c.completed,
            c.runs,
            c.mean_c2_hat.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into()),
            se.join(" ")
        );
    }
    out
}

fn csv(report: &McReport) -> String {
    let mut out = String::from(
        "cell,model,c,theta0,theta1,n,runs,completed,failures,alpha,rejections,frequency,std_error,mean_c2_hat\n",
    );
    for c in &report.cells {
        for k in 0..c.alphas.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.index,
                c.model.id.name(),
                c.model.c,
                c.model.theta0,
                c.model.theta1,
                c.model.n,
                c.runs,
                c.completed,
                c.failures,
                c.alphas[k],
                c.rejections[k],
                c.frequencies[k],
                c.std_errors[k],
                c.mean_c2_hat.map(|v| v.to_string()).unwrap_or_default()
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{ModelId, ModelSpec};
    use crate::harness::{CellReport, SCHEMA_VERSION};

    fn report(cells: Vec<CellReport>) -> McReport {
        McReport {
            schema: SCHEMA_VERSION,
            master_seed: 3,
            runs: 10,
            replicates: 100,
            smoothing_v: 0.1,
            weighted: false,
            kernel: "epanechnikov".into(),
            cells,
        }
    }

    fn cell() -> CellReport {
        CellReport {
            index: 0,
            label: "s6 c=1".into(),
            model: ModelSpec::regression(ModelId::S6, 1.0, 100),
            runs: 10,
            completed: 10,
            failures: 0,
            alphas: vec![0.05, 0.1],
            rejections: vec![1, 2],
            frequencies: vec![0.1, 0.2],
            std_errors: vec![(0.09f64 / 10.0).sqrt(), (0.16f64 / 10.0).sqrt()],
            mean_c2_hat: Some(0.987654321),
            first_failure: None,
        }
    }

    #[test]
    fn empty_report() {
        let r = report(vec![]);
        let json: serde_json::Value = serde_json::from_str(&emit_report(&r, ReportFormat::Json)).unwrap();
        assert_eq!(json["cells"], serde_json::json!([]));
        assert_eq!(json["schema"], 1);
        assert_eq!(emit_report(&r, ReportFormat::Csv).lines().count(), 1);
        assert!(emit_report(&r, ReportFormat::TextTable).starts_with("model"));
    }

    #[test]
    fn one_cell_row() {
        let r = report(vec![cell()]);
        let text = emit_report(&r, ReportFormat::TextTable);
        let row = text.lines().nth(2).unwrap();
        assert!(row.starts_with("s6 c=1"));
        assert!(row.contains(".100") && row.contains(".200"));
        assert!(text.contains("completed 10/10"));
        let csv = emit_report(&r, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().starts_with("0,s6,1,0,0,100,10,10,0,0.05,1,0.1,"));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let r = report(vec![cell()]);
        let first = emit_report(&r, ReportFormat::Json);
        let parsed: McReport = serde_json::from_str(&first).unwrap();
        assert_eq!(parsed, r);
        assert_eq!(emit_report(&parsed, ReportFormat::Json), first);
    }

    #[test]
    fn format_names() {
        assert_eq!(ReportFormat::parse("json"), Some(ReportFormat::Json));
        assert_eq!(ReportFormat::parse("text-table"), Some(ReportFormat::TextTable));
        assert_eq!(ReportFormat::parse("xml"), None);
    }
}
