use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnn::FeatureMatrix;
use crate::error::{Error, Result};
use crate::eval::{roc_auc, SplitCase};
use crate::fsutil;
use crate::label::Label;
use crate::matrix::Matrix;
use crate::scalar::Real;
use crate::svm::{train, Formulation, KernelSpec, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    CSvm,
    NuSvm,
}

impl Family {
    pub fn formulation<T: Real>(self, param: T) -> Formulation<T> {
        match self {
            Family::CSvm => Formulation::CSvm { c: param },
            Family::NuSvm => Formulation::NuSvm { nu: param },
        }
    }

    pub fn param_name(self) -> &'static str {
        match self {
            Family::CSvm => "C",
            Family::NuSvm => "nu",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::CSvm => "c-svm",
            Family::NuSvm => "nu-svm",
        }
    }
}

/// Candidate values for each formulation's penalty parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    pub nu_values: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c_values: (-3..=4).map(|e| 10f64.powi(e)).collect(),
            nu_values: vec![0.001, 0.005, 0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9],
        }
    }
}

impl GridSpec {
    pub fn values(&self, family: Family) -> &[f64] {
        match family {
            Family::CSvm => &self.c_values,
            Family::NuSvm => &self.nu_values,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_values.is_empty() || self.nu_values.is_empty() {
            return Err(Error::domain("grids must be nonempty"));
        }
        if let Some(c) = self.c_values.iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
            return Err(Error::domain(format!("grid C value {c} is not positive")));
        }
        if let Some(nu) = self.nu_values.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::domain(format!("grid nu value {nu} outside (0, 1)")));
        }
        Ok(())
    }
}

/// One rotation's data. The test part is only reachable through [`PreparedCase::test`],
/// which counts every access.
#[derive(Debug)]
pub struct PreparedCase<T> {
    pub id: &'static str,
    pub train_x: Matrix<T>,
    pub train_y: Vec<Label>,
    pub validation_x: Matrix<T>,
    pub validation_y: Vec<Label>,
    test_x: Matrix<T>,
    test_y: Vec<Label>,
    test_reads: AtomicUsize,
}

impl<T: Real> PreparedCase<T> {
    pub fn test(&self) -> (&Matrix<T>, &[Label]) {
        self.test_reads.fetch_add(1, Ordering::SeqCst);
        (&self.test_x, &self.test_y)
    }

    pub fn test_reads(&self) -> usize {
        self.test_reads.load(Ordering::SeqCst)
    }

    pub fn test_len(&self) -> usize {
        self.test_y.len()
    }
}

pub fn prepare_cases<T: Real>(fm: &FeatureMatrix<T>, cases: &[SplitCase]) -> Vec<PreparedCase<T>> {
    let part = |idx: &[usize]| (fm.values.select_rows(idx), idx.iter().map(|&i| fm.labels[i]).collect::<Vec<_>>());
    cases
        .iter()
        .map(|c| {
            let (train_x, train_y) = part(&c.train);
            let (validation_x, validation_y) = part(&c.validation);
            let (test_x, test_y) = part(&c.test);
            PreparedCase { id: c.id, train_x, train_y, validation_x, validation_y, test_x, test_y, test_reads: AtomicUsize::new(0) }
        })
        .collect()
}

/// One grid value evaluated on every case.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub param: f64,
    /// Validation AUC per case (`None` where training failed).
    pub case_aucs: Vec<Option<f64>>,
    /// Validation decision values per case, kept for independent re-scoring.
    pub validation_scores: Vec<Vec<f64>>,
    pub failures: Vec<String>,
}

impl GridCell {
    /// Mean validation AUC, defined only when every case trained.
    pub fn mean_auc(&self) -> Option<f64> {
        let aucs: Option<Vec<f64>> = self.case_aucs.iter().copied().collect();
        aucs.map(|a| a.iter().sum::<f64>() / a.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub family: Family,
    pub cells: Vec<GridCell>,
    pub best_param: f64,
    pub best_mean_auc: f64,
}

/// Trains every (value, case) pair on the training part, scores the validation part, and
/// returns the value with the highest mean validation AUC (ties go to the smaller value).
///
/// A value counts only if all cases train. When no value does, the error is the solver's
/// convergence error if every failure was one, and [`Error::Search`] otherwise. Test data
/// is never touched.
pub fn grid_search<T: Real>(
    cases: &[PreparedCase<T>],
    family: Family,
    values: &[f64],
    kernel: &KernelSpec<T>,
    cfg: &SolverConfig,
) -> Result<GridResult> {
    if values.is_empty() {
        return Err(Error::Search("empty grid".into()));
    }
    if cases.is_empty() {
        return Err(Error::Search("no cases to search over".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let jobs: Vec<(usize, usize)> = (0..sorted.len()).flat_map(|p| (0..cases.len()).map(move |c| (p, c))).collect();
    let outcomes: Vec<Result<(f64, Vec<f64>)>> = jobs
        .par_iter()
        .map(|&(p, c)| {
            let case = &cases[c];
            let model = train(&case.train_x, &case.train_y, family.formulation(T::of(sorted[p])), kernel, cfg)?;
            let scores: Vec<f64> = model.decision_values(&case.validation_x)?.iter().map(|v| v.as_f64()).collect();
            Ok((roc_auc(&scores, &case.validation_y)?, scores))
        })
        .collect();
    let mut cells: Vec<GridCell> = sorted
        .iter()
        .map(|&param| GridCell { param, case_aucs: Vec::new(), validation_scores: Vec::new(), failures: Vec::new() })
        .collect();
    let mut first_convergence = None;
    let mut other_failure = false;
    for (&(p, c), outcome) in jobs.iter().zip(outcomes) {
        let cell = &mut cells[p];
        match outcome {
            Ok((auc, scores)) => {
                cell.case_aucs.push(Some(auc));
                cell.validation_scores.push(scores);
            }
            Err(e) => {
                cell.case_aucs.push(None);
                cell.validation_scores.push(Vec::new());
                cell.failures.push(format!("case {}: {e}", cases[c].id));
                if matches!(e, Error::Convergence { .. }) {
                    first_convergence.get_or_insert(e);
                } else {
                    other_failure = true;
                }
            }
        }
    }
    let mut best: Option<(f64, f64)> = None;
    for cell in &cells {
        if let Some(m) = cell.mean_auc() {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((cell.param, m));
            }
        }
    }
    if best.is_none() && !other_failure {
        if let Some(e) = first_convergence {
            return Err(e);
        }
    }
    let (best_param, best_mean_auc) = best.ok_or_else(|| {
        let reasons: Vec<&str> = cells.iter().flat_map(|c| c.failures.iter().map(String::as_str)).take(3).collect();
        Error::Search(format!("every grid cell failed; first failures: {}", reasons.join("; ")))
    })?;
    Ok(GridResult { family, cells, best_param, best_mean_auc })
}

#[derive(Debug, Serialize, Deserialize)]
struct GridRecord {
    family: Family,
    param: f64,
    case: String,
    validation_auc: Option<f64>,
    error: Option<String>,
}

/// Long-format table: one line per (value, case) plus a `mean` line per value.
pub fn write_grid_csv(path: &Path, results: &[GridResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        for cell in &r.cells {
            for (k, auc) in cell.case_aucs.iter().enumerate() {
                let error = auc.is_none().then(|| cell.failures.iter().find(|f| f.starts_with(&format!("case {}:", crate::eval::CASE_IDS[k]))).cloned().unwrap_or_default());
                w.serialize(GridRecord { family: r.family, param: cell.param, case: crate::eval::CASE_IDS[k].to_string(), validation_auc: *auc, error })?;
            }
            w.serialize(GridRecord { family: r.family, param: cell.param, case: "mean".into(), validation_auc: cell.mean_auc(), error: None })?;
        }
        w.serialize(GridRecord { family: r.family, param: r.best_param, case: "best".into(), validation_auc: Some(r.best_mean_auc), error: None })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    fsutil::write_atomic(path, |f| std::io::Write::write_all(f, &bytes))
}

/// Best `(family, parameter, mean validation AUC)` entries from a grid table.
pub fn read_grid_csv(path: &Path) -> Result<Vec<(Family, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.deserialize::<GridRecord>() {
        let rec = rec?;
        if rec.case == "best" {
            let auc = rec.validation_auc.ok_or_else(|| Error::format("best row without an AUC"))?;
            out.push((rec.family, rec.param, auc));
        }
    }
    Ok(out)
}
