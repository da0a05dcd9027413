// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::aggregate::AggregateReport;
use super::classify::OutcomeCategory;

pub const CSV_FILES: [&str; 4] =
    ["pattern_rates.csv", "predominant_alternatives.csv", "reason_rollup.csv", "agreement.csv"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            other => Err(format!("unknown report format '{other}' (expected csv or text)")),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn pct(x: f64) -> String {
    format!("{:.1}%", x * 100.0)
}

fn opt_pct(x: Option<f64>) -> String {
    x.map(pct).unwrap_or_else(|| "-".into())
}

/// Writes one CSV per table into `dir` (created if needed).
pub fn write_csv_reports(report: &AggregateReport, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = CSV_FILES.iter().map(|f| dir.join(f)).collect();

    let mut w = csv::Writer::from_path(&paths[0])?;
    let mut header = vec!["pattern", "backend", "n", "baseline_correct", "cpmr_correct", "cpmr_aao_equals_eao", "misidentified"];
    header.extend(OutcomeCategory::ALL.iter().map(|c| c.as_str()));
    w.write_record(&header)?;
    for r in &report.rates {
        let mut row = vec![
            r.pattern.to_string(),
            r.backend.clone(),
            r.n.to_string(),
            opt_num(r.baseline_correct),
            opt_num(r.cpmr_correct),
            opt_num(r.cpmr_aao_equals_eao),
            opt_num(r.misidentified),
        ];
        match r.categories {
            Some(c) => row.extend(c.iter().map(|x| num(*x))),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record(["pattern", "alternative", "mean_share"])?;
    for a in &report.alternatives {
        for (alt, share) in &a.alternatives {
            w.write_record([a.pattern.to_string(), alt.to_string(), num(*share)])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[2])?;
    w.write_record(["pattern", "n", "no_failure", "user", "llm", "pattern_ambiguity"])?;
    for r in &report.rollup {
        let x = &r.rollup;
        w.write_record([
            r.pattern.to_string(),
            x.n.to_string(),
            num(x.no_failure),
            num(x.user),
            num(x.llm),
            num(x.pattern_ambiguity),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&paths[3])?;
    w.write_record(["backend", "n", "agreement"])?;
    for r in &report.agreement {
        w.write_record([r.backend.clone(), r.n.to_string(), num(r.rate)])?;
    }
    w.flush()?;

    Ok(paths)
}

pub fn render_text(report: &AggregateReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Backends: {}", report.backends.join(", "));

    let _ = writeln!(out, "\nAAO == EAO and outcome shares per pattern");
    let _ = writeln!(
        out,
        "{:<6} {:<14} {:>4} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "cp", "backend", "n", "baseline", "cpmr", "cpmr-eao", "notid", "noderiv", "correct", "impl", "app/id", "critical"
    );
    for r in &report.rates {
        let _ = write!(
            out,
            "{:<6} {:<14} {:>4} {:>9} {:>9} {:>9}",
            r.pattern.as_str(),
            r.backend,
            r.n,
            opt_pct(r.baseline_correct),
            opt_pct(r.cpmr_correct),
            opt_pct(r.cpmr_aao_equals_eao)
        );
        for i in 0..6 {
            let _ = write!(out, " {:>8}", opt_pct(r.categories.map(|c| c[i])));
        }
        out.push('\n');
    }

    let _ = writeln!(out, "\nPredominant alternative patterns");
    if report.alternatives.is_empty() {
        let _ = writeln!(out, "  (none)");
    }
    for a in &report.alternatives {
        let alts: Vec<String> = a.alternatives.iter().map(|(p, s)| format!("{p} ({})", pct(*s))).collect();
        let _ = writeln!(out, "  {:<6} {}", a.pattern.as_str(), alts.join(", "));
    }

    let _ = writeln!(out, "\nDistribution of reasons");
    let _ = writeln!(out, "{:<6} {:>10} {:>8} {:>8} {:>10}", "cp", "no-failure", "user", "llm", "ambiguity");
    for r in &report.rollup {
        let x = &r.rollup;
        let _ = writeln!(
            out,
            "{:<6} {:>10} {:>8} {:>8} {:>10}",
            r.pattern.as_str(),
            pct(x.no_failure),
            pct(x.user),
            pct(x.llm),
            pct(x.pattern_ambiguity)
        );
    }

    let _ = writeln!(out, "\nBaseline / pipeline agreement");
    for r in &report.agreement {
        let _ = writeln!(out, "  {:<14} {:>4} {:>8}", r.backend, r.n, pct(r.rate));
    }
    out
}
