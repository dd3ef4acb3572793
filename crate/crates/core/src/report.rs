//! Rendering of ranking reports as aligned tables, CSV or JSON, and of
//! step-by-step solve traces.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::enumeration::{Outcome, RankingReport, SubsetRecord};
use crate::moments::{AssetStats, MomentEstimate};
use crate::solver::{trace_system, Method, PortfolioSolution, SolveError, SystemTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

/// Header of the CSV report. Every row has exactly these columns.
pub const CSV_HEADER: [&str; 10] = [
    "ordinal", "row", "asset", "mean", "std_dev", "rar", "variance", "w_mv", "w_mrar", "note",
];

pub fn render_report(report: &RankingReport, stats: &[AssetStats], format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => render_table(report, stats),
        OutputFormat::Csv => render_csv(report, stats),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report_json(report, stats)).expect("report serializes");
            s.push('\n');
            s
        }
    }
}

/// Eight significant digits, switching to exponent form for very small or
/// very large magnitudes.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-6..9).contains(&exp) {
        return format!("{x:.7e}");
    }
    let decimals = (7 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

fn opt_sig(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".into(), format_sig)
}

fn solution_json(outcome: Option<&Outcome>) -> Value {
    match outcome {
        None => Value::Null,
        Some(Ok(s)) => json!({
            "weights": s.weights.as_slice(),
            "mean": s.mean,
            "variance": s.variance,
            "std_dev": s.std_dev,
            "rar": s.rar,
            "warning": s.warning.map(|w| w.message()),
        }),
        Some(Err(e)) => json!({ "error": e.to_string() }),
    }
}

fn report_json(report: &RankingReport, stats: &[AssetStats]) -> Value {
    let assets: Vec<Value> = stats
        .iter()
        .map(|a| json!({ "name": a.name, "mean": a.mean, "std_dev": a.std_dev, "rar": a.rar }))
        .collect();
    let portfolios: Vec<Value> = report
        .records
        .iter()
        .map(|r| {
            json!({
                "ordinal": r.subset.ordinal,
                "indices": r.subset.indices(),
                "mv": solution_json(r.mv.as_ref()),
                "mrar": solution_json(r.mrar.as_ref()),
            })
        })
        .collect();
    json!({
        "assets": assets,
        "portfolios": portfolios,
        "best_mv": report.best_mv,
        "best_mrar": report.best_mrar,
        "P": report.portfolio_count,
    })
}

fn csv_float(x: f64) -> String {
    x.to_string()
}

fn render_csv(report: &RankingReport, stats: &[AssetStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for record in &report.records {
        let ordinal = record.subset.ordinal.to_string();
        for (k, &pos) in record.subset.positions().iter().enumerate() {
            let a = &stats[pos];
            let weight = |m: Method| {
                record
                    .solution(m)
                    .map_or_else(String::new, |s| csv_float(s.weights.as_slice()[k]))
            };
            w.write_record([
                ordinal.clone(),
                "asset".into(),
                a.name.clone(),
                csv_float(a.mean),
                csv_float(a.std_dev),
                a.rar.map_or_else(String::new, csv_float),
                csv_float(a.std_dev * a.std_dev),
                weight(Method::Mv),
                weight(Method::Mrar),
                String::new(),
            ])
            .expect("in-memory write");
        }
        for method in Method::ALL {
            let Some(outcome) = record.outcome(method) else {
                continue;
            };
            let row = match outcome {
                Ok(s) => [
                    ordinal.clone(),
                    method.label().into(),
                    String::new(),
                    csv_float(s.mean),
                    csv_float(s.std_dev),
                    s.rar.map_or_else(String::new, csv_float),
                    csv_float(s.variance),
                    String::new(),
                    String::new(),
                    s.warning.map_or_else(String::new, |w| w.message().into()),
                ],
                Err(e) => [
                    ordinal.clone(),
                    method.label().into(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    e.to_string(),
                ],
            };
            w.write_record(row).expect("in-memory write");
        }
    }
    let best = |o: Option<usize>| o.map_or_else(String::new, |o| o.to_string());
    w.write_record([
        String::new(),
        "summary".into(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        best(report.best_mv),
        best(report.best_mrar),
        format!("P={}", report.portfolio_count),
    ])
    .expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

fn push_aligned(out: &mut String, rows: &[Vec<String>]) {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                let _ = write!(line, "{cell:<width$}", width = widths[c]);
            } else {
                let _ = write!(line, "  {cell:>width$}", width = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}

fn portfolio_row(label: &str, outcome: Option<&Outcome>) -> Option<Vec<String>> {
    match outcome? {
        Ok(s) => {
            let mut row = vec![
                label.to_owned(),
                format_sig(s.mean),
                format_sig(s.std_dev),
                opt_sig(s.rar),
            ];
            if let Some(w) = s.warning {
                row.push(String::new());
                row.push(String::new());
                row.push(format!("warning: {}", w.message()));
            }
            Some(row)
        }
        Err(e) => Some(vec![label.to_owned(), format!("failed: {e}")]),
    }
}

fn render_record_table(out: &mut String, record: &SubsetRecord, stats: &[AssetStats]) {
    let _ = writeln!(
        out,
        "Portfolio - {} ({} assets: {})",
        record.subset.ordinal,
        record.subset.len(),
        record.asset_names.join(", ")
    );
    let mut rows = vec![vec![
        "Assets".to_owned(),
        "Average Return".into(),
        "SD".into(),
        "Risk Adjusted Return".into(),
        "w for MV".into(),
        "w for MRAR".into(),
    ]];
    for (k, &pos) in record.subset.positions().iter().enumerate() {
        let a = &stats[pos];
        let weight = |m: Method| match record.outcome(m) {
            Some(Ok(s)) => format_sig(s.weights.as_slice()[k]),
            Some(Err(_)) => "failed".into(),
            None => "-".into(),
        };
        rows.push(vec![
            a.name.clone(),
            format_sig(a.mean),
            format_sig(a.std_dev),
            opt_sig(a.rar),
            weight(Method::Mv),
            weight(Method::Mrar),
        ]);
    }
    rows.extend(portfolio_row(
        "Portfolio - Minimum Variance (MV)",
        record.mv.as_ref(),
    ));
    rows.extend(portfolio_row(
        "Portfolio - Maximum Risk Adjusted Return (MRAR)",
        record.mrar.as_ref(),
    ));
    push_aligned(out, &rows);
}

fn render_table(report: &RankingReport, stats: &[AssetStats]) -> String {
    let mut out = String::new();
    for (i, record) in report.records.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        render_record_table(&mut out, record, stats);
    }
    if report.portfolio_count > 1 {
        let _ = writeln!(
            out,
            "\nRisk adjusted return by portfolio ({} portfolios)",
            report.portfolio_count
        );
        let mut rows = vec![vec!["Portfolio".to_owned(), "MV".into(), "MRAR".into()]];
        for r in &report.records {
            let cell = |m: Method| match r.outcome(m) {
                Some(Ok(s)) => opt_sig(s.rar),
                Some(Err(_)) => "failed".into(),
                None => "-".into(),
            };
            rows.push(vec![
                format!("Portfolio - {}", r.subset.ordinal),
                cell(Method::Mv),
                cell(Method::Mrar),
            ]);
        }
        push_aligned(&mut out, &rows);
    }
    let _ = writeln!(out, "\nPortfolio with the highest RAR");
    for method in report.methods.methods() {
        let line = match report.best(method) {
            Some(o) => {
                let rar = report.record(o).and_then(|r| r.rar(method));
                format!("  {:<5} Portfolio {o} (RAR {})", method.label(), opt_sig(rar))
            }
            None => format!("  {:<5} none", method.label()),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Step-by-step record of one portfolio: its sub-moments, and for each
/// requested criterion the constraint system and the final solution.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub ordinal: usize,
    pub indices: Vec<usize>,
    pub systems: Vec<(SystemTrace, Option<Result<PortfolioSolution, SolveError>>)>,
}

/// Collect traces for every record of a report. Solutions are taken from the
/// report itself so traced output can never disagree with the untraced run.
pub fn build_traces(report: &RankingReport, moments: &MomentEstimate) -> Vec<TraceRecord> {
    report
        .records
        .iter()
        .map(|r| {
            let sub = moments.select(r.subset.positions());
            let systems = report
                .methods
                .methods()
                .filter_map(|m| {
                    let trace = trace_system(&sub, m).ok()?;
                    Some((trace, r.outcome(m).cloned()))
                })
                .collect();
            TraceRecord {
                ordinal: r.subset.ordinal,
                indices: r.subset.indices(),
                systems,
            }
        })
        .collect()
}

fn push_matrix(out: &mut String, label: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "  {label} ({}x{}):", m.nrows(), m.ncols());
    let rows: Vec<Vec<String>> = m
        .row_iter()
        .map(|r| {
            std::iter::once(String::from("   "))
                .chain(r.iter().map(|&v| format_sig(v)))
                .collect()
        })
        .collect();
    push_aligned(out, &rows);
}

pub fn emit_trace(traces: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in traces {
        let indices: Vec<String> = record.indices.iter().map(usize::to_string).collect();
        let _ = writeln!(
            out,
            "=== Portfolio {} (assets {}) ===",
            record.ordinal,
            indices.join(", ")
        );
        let Some((first, _)) = record.systems.first() else {
            continue;
        };
        let _ = writeln!(out, "  assets: {}", first.asset_names.join(", "));
        let means: Vec<String> = first.means.iter().map(|&v| format_sig(v)).collect();
        let _ = writeln!(out, "  means: {}", means.join(", "));
        push_matrix(&mut out, "covariance", &first.covariance);
        for (trace, outcome) in &record.systems {
            let (block, stacked) = trace.method.matrix_names();
            let _ = writeln!(out, "  --- {} ---", trace.method.label());
            push_matrix(&mut out, block, &trace.system.block());
            push_matrix(&mut out, stacked, trace.system.matrix());
            if let Some(d) = &trace.diagnostics {
                let _ = writeln!(out, "  |{stacked}| = {}", format_sig(d.determinant));
            }
            if let Some(c) = &trace.cramer {
                for (j, n) in c.numerators.iter().enumerate() {
                    let _ = writeln!(out, "  numerator w{} = {}", j + 1, format_sig(*n));
                }
            } else if let Some(d) = &trace.diagnostics {
                let order: Vec<String> = d.row_order.iter().map(|r| (r + 1).to_string()).collect();
                let pivots: Vec<String> = d.pivots.iter().map(|&p| format_sig(p)).collect();
                let _ = writeln!(out, "  elimination row order: {}", order.join(", "));
                let _ = writeln!(out, "  equilibrated pivots: {}", pivots.join(", "));
            }
            if let Some(d) = &trace.diagnostics {
                let _ = writeln!(out, "  condition estimate: {}", format_sig(d.condition_estimate));
            }
            match outcome {
                Some(Ok(s)) => {
                    let w: Vec<String> = s.weights.as_slice().iter().map(|&v| format_sig(v)).collect();
                    let _ = writeln!(out, "  w = ({})", w.join(", "));
                    let _ = writeln!(
                        out,
                        "  F(w) = {}  V(w) = {}  RAR = {}",
                        format_sig(s.mean),
                        format_sig(s.variance),
                        opt_sig(s.rar)
                    );
                    if let Some(warn) = s.warning {
                        let _ = writeln!(out, "  warning: {}", warn.message());
                    }
                }
                Some(Err(e)) => {
                    let _ = writeln!(out, "  failed: {e}");
                }
                None => {}
            }
        }
        out.push('\n');
    }
    out
}
