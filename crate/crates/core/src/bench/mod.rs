//! Evaluation: classification metrics, stratified folds, the peak-feature rim
//! classifier and the synthetic benchmark that ties them together.

mod classifier;
mod folds;
mod metrics;
mod synthetic;

pub use classifier::{peak_feature_classifier, peak_feature_score, CENTER_WINDOW};
pub use folds::{count_group, stratified_folds, FoldAssignment, FoldEntry, NUM_GROUPS};
pub use metrics::{
    best_f1_threshold, classify_scores, f1_score, mean_squared_error, partial_roc_auc, pearson,
    pr_auc, roc_auc, roc_points, subject_counts, Confusion, CountAgreement, LesionOutcome,
    MetricsReport, PARTIAL_FPR,
};
pub use synthetic::{
    generate_dataset, run_benchmark, subject_of, BenchCase, BenchConfig, BenchResult, FoldMetrics,
    SyntheticCase, RIM_CONTRAST,
};
