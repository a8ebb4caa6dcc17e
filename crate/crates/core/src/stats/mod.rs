//! Metrics, fold summaries, ranking, paired tests and learning curves.

mod curve;
mod fdr;
mod metrics;
mod rank;
mod signrank;
mod summary;

pub use curve::{default_sizes, learning_curve, CurvePoint, DEFAULT_REPS};
pub use fdr::{fdr_correct, fdr_correct_with, FdrMethod, FdrResult};
pub use metrics::{argmax_rows, auc, average_ranks, multiclass_accuracy, Metric};
pub use rank::{rank_models, RankTable};
pub use signrank::{signrank_test, signrank_test_with, SignRank, SignRankMethod, EXACT_MAX_N};
pub use summary::{summarize, MetricSummary};
