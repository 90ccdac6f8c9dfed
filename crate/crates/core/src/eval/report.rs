use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::search::{Family, PreparedCase};
use crate::eval::{auc, roc_curve, RocCurve};
use crate::fsutil;
use crate::scalar::{mean, population_variance, Real};
use crate::svm::{train, KernelSpec, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub id: String,
    pub auc: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_support: usize,
    pub roc: RocCurve,
}

/// Mean and population standard deviation of the per-case AUCs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportSummary {
    pub mean: f64,
    pub std: f64,
}

impl std::fmt::Display for ReportSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} (+/-{:.3})", self.mean, self.std)
    }
}

pub fn summarize(aucs: &[f64]) -> ReportSummary {
    ReportSummary { mean: mean(aucs), std: population_variance(aucs).sqrt() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub family: Family,
    pub parameter: f64,
    pub cases: Vec<CaseResult>,
    pub summary: ReportSummary,
    pub timings: Vec<StageTiming>,
}

impl CvReport {
    pub fn aucs(&self) -> Vec<f64> {
        self.cases.iter().map(|c| c.auc).collect()
    }
}

/// Retrains each case on its training part with `param` and scores its test part.
///
/// On a training failure the error names the case and carries the AUCs already computed.
pub fn evaluate_cases<T: Real>(
    cases: &[PreparedCase<T>],
    family: Family,
    param: f64,
    kernel: &KernelSpec<T>,
    cfg: &SolverConfig,
) -> Result<CvReport> {
    let mut results = Vec::with_capacity(cases.len());
    let mut timings = Vec::with_capacity(cases.len());
    for case in cases {
        let start = Instant::now();
        let outcome = (|| {
            let model = train(&case.train_x, &case.train_y, family.formulation(T::of(param)), kernel, cfg)?;
            let (tx, ty) = case.test();
            let scores: Vec<f64> = model.decision_values(tx)?.iter().map(|v| v.as_f64()).collect();
            let roc = roc_curve(&scores, ty)?;
            Ok::<_, Error>(CaseResult {
                id: case.id.to_string(),
                auc: auc(&roc),
                n_train: case.train_y.len(),
                n_test: ty.len(),
                n_support: model.n_support(),
                roc,
            })
        })();
        match outcome {
            Ok(r) => results.push(r),
            Err(source) => {
                return Err(Error::Evaluation {
                    case: case.id.to_string(),
                    completed: results.iter().map(|r: &CaseResult| (r.id.clone(), r.auc)).collect(),
                    source: Box::new(source),
                })
            }
        }
        timings.push(StageTiming { stage: format!("case {}", case.id), seconds: start.elapsed().as_secs_f64() });
    }
    let summary = summarize(&results.iter().map(|r| r.auc).collect::<Vec<_>>());
    Ok(CvReport { family, parameter: param, cases: results, summary, timings })
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRow {
    case: String,
    auc: String,
}

/// `case,auc` rows, then `mean`, `std`, the chosen parameter and the formatted summary.
pub fn write_report_csv(path: &Path, report: &CvReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.cases {
        w.serialize(ReportRow { case: c.id.clone(), auc: format!("{}", c.auc) })?;
    }
    w.serialize(ReportRow { case: "mean".into(), auc: format!("{}", report.summary.mean) })?;
    w.serialize(ReportRow { case: "std".into(), auc: format!("{}", report.summary.std) })?;
    w.serialize(ReportRow { case: format!("best_{}", report.family.param_name()), auc: format!("{}", report.parameter) })?;
    w.serialize(ReportRow { case: "summary".into(), auc: report.summary.to_string() })?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fsutil::write_atomic(path, |f| std::io::Write::write_all(f, &bytes))
}

/// Per-case AUCs and the stored summary from a report file.
pub fn read_report_csv(path: &Path) -> Result<(Vec<(String, f64)>, ReportSummary)> {
    let mut r = csv::Reader::from_path(path)?;
    let mut cases = Vec::new();
    let (mut m, mut s) = (None, None);
    for row in r.deserialize::<ReportRow>() {
        let row = row?;
        let num = || row.auc.parse::<f64>().map_err(|_| Error::format(format!("bad value `{}` in report", row.auc)));
        match row.case.as_str() {
            "mean" => m = Some(num()?),
            "std" => s = Some(num()?),
            "summary" => {}
            c if c.starts_with("best_") => {}
            _ => cases.push((row.case.clone(), num()?)),
        }
    }
    match (m, s) {
        (Some(mean), Some(std)) => Ok((cases, ReportSummary { mean, std })),
        _ => Err(Error::format("report lacks mean/std rows")),
    }
}

pub fn write_roc_csv(path: &Path, curve: &RocCurve) -> Result<()> {
    let mut out = String::from("fpr,tpr,threshold\n");
    for (&(f, t), th) in curve.points.iter().zip(&curve.thresholds) {
        let _ = writeln!(out, "{f},{t},{th}");
    }
    fsutil::write_string_atomic(path, &out)
}

const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// All case curves on one unit square, with the chance diagonal and a legend.
pub fn render_roc_svg(report: &CvReport, title: &str) -> String {
    let (size, pad) = (480.0, 60.0);
    let px = |x: f64| pad + x * size;
    let py = |y: f64| pad + (1.0 - y) * size;
    let mut s = String::new();
    let total = size + 2.0 * pad;
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#, px(0.0), py(0.0), px(1.0), py(1.0));
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{v:.1}</text>"#, px(v), py(0.0) + 18.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#, px(0.0) - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#, px(0.5), total - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">True positive rate</text>"#,
        py(0.5),
        py(0.5)
    );
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{}</text>"#, px(0.5), escape(title));
    for (k, c) in report.cases.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = c.roc.points.iter().map(|&(f, t)| format!("{:.2},{:.2}", px(f), py(t))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = py(0.0) - 20.0 - 16.0 * (report.cases.len() - 1 - k) as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, px(0.55), px(0.62));
        let _ = writeln!(s, r#"<text x="{}" y="{}">Case {} (AUC {:.4})</text>"#, px(0.64), ly + 4.0, c.id, c.auc);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
