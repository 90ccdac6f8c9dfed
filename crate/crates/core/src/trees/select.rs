use std::io::Write;
use std::path::Path;

use crate::cnn::FeatureMatrix;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::scalar::Real;

pub const DEFAULT_THRESHOLD: f64 = 0.95;
/// Relative slack on the cumulative comparison, absorbing summation rounding.
const SUM_SLACK: f64 = 1e-12;

/// Nonnegative per-feature importance scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceVector<T> {
    pub scores: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Feature indices by descending importance (ties by ascending index).
    pub selected_indices: Vec<usize>,
    /// Fraction of total importance captured by the selection.
    pub captured_importance: f64,
    pub threshold: f64,
}

fn reaches(cum: f64, target: f64) -> bool {
    cum >= target - SUM_SLACK * target.abs()
}

/// Ranks features and keeps the shortest prefix whose importance reaches `threshold` of the total.
pub fn select_cumulative<T: Real>(imp: &ImportanceVector<T>, threshold: f64) -> Result<SelectionResult> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Selection(format!("threshold {threshold} outside (0, 1]")));
    }
    let scores: Vec<f64> = imp.scores.iter().map(|v| v.as_f64()).collect();
    if scores.iter().any(|&s| s < 0.0 || !s.is_finite()) {
        return Err(Error::Selection("importances must be finite and nonnegative".into()));
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Err(Error::Selection("all importances are zero; nothing to rank".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let target = threshold * total;
    let mut cum = 0.0;
    let mut selected = Vec::new();
    for &j in &order {
        selected.push(j);
        cum += scores[j];
        if reaches(cum, target) {
            break;
        }
    }
    Ok(SelectionResult { selected_indices: selected, captured_importance: cum / total, threshold })
}

/// Keeps the selected columns in selection order.
pub fn project<T: Real>(fm: &FeatureMatrix<T>, sel: &SelectionResult) -> Result<FeatureMatrix<T>> {
    if sel.selected_indices.is_empty() {
        return Err(Error::Selection("empty selection".into()));
    }
    FeatureMatrix::new(fm.values.select_cols(&sel.selected_indices)?, fm.labels.clone(), fm.provenance.clone())
}

/// Comma-separated report of the selected features with a `#` header line.
pub fn write_selection_report<T: Real>(path: &Path, imp: &ImportanceVector<T>, sel: &SelectionResult) -> Result<()> {
    let total: f64 = imp.scores.iter().map(|v| v.as_f64()).sum();
    let mut out = format!(
        "# threshold={} captured={} selected={} total_features={}\nfeature_index,importance,cumulative_importance\n",
        sel.threshold,
        sel.captured_importance,
        sel.selected_indices.len(),
        imp.scores.len()
    );
    let mut cum = 0.0;
    for &j in &sel.selected_indices {
        let s = imp.scores[j].as_f64();
        cum += s;
        out.push_str(&format!("{j},{s:e},{:e}\n", cum / total));
    }
    fsutil::write_atomic(path, |f| f.write_all(out.as_bytes()))
}

pub fn read_selection_report(path: &Path) -> Result<SelectionResult> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format("empty selection report"))?;
    let field = |key: &str| -> Result<f64> {
        header
            .trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(format!("selection report header lacks `{key}`")))
    };
    let threshold = field("threshold")?;
    let captured_importance = field("captured")?;
    lines.next();
    let selected_indices = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::format(format!("bad selection line `{l}`")))
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok(SelectionResult { selected_indices, captured_importance, threshold })
}
