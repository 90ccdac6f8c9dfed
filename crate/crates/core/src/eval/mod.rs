//! Rotating five-fold evaluation: leak-free groups, the five train/validation/test
//! rotations, ROC/AUC, hyper-parameter search and the aggregated report.

mod folds;
mod report;
mod roc;
mod search;

pub use folds::{build_cases, partition_groups, read_groups, write_groups, FoldGroups, GroupingMode, SplitCase, CASE_IDS, GROUP_NAMES};
pub use report::{
    evaluate_cases, read_report_csv, render_roc_svg, summarize, write_report_csv, write_roc_csv, CaseResult, CvReport, ReportSummary,
    StageTiming,
};
pub use roc::{auc, roc_auc, roc_curve, RocCurve};
pub use search::{grid_search, prepare_cases, read_grid_csv, write_grid_csv, Family, GridCell, GridResult, GridSpec, PreparedCase};
