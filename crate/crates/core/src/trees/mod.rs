//! Randomized tree ensembles for impurity-based feature importance, and
//! cumulative-importance feature selection.

mod ensemble;
mod select;
mod tree;

pub use ensemble::{fit_ensemble, importances, Ensemble, EnsembleConfig, Splitter};
pub use select::{
    project, read_selection_report, select_cumulative, write_selection_report, ImportanceVector, SelectionResult,
    DEFAULT_THRESHOLD,
};
pub use tree::{gini, Tree, TreeNode};
