//! Rolling-origin validation, backtesting, metrics and rank aggregation.

mod ensemble;
mod metrics;
mod rank;
mod splits;

pub use self::ensemble::{
    backtest, cv_fit_ensemble, evaluate_holdout, BacktestReport, BacktestWindow, CvEnsemble, CvSettings,
    Experiment, FoldReport, HoldoutResult,
};
pub use self::metrics::{compute_metrics, score_forecast, Metrics, Score};
pub use self::rank::{
    average_ranks, comparison_groups, median, rank_table, rank_table_lenient, RankCell, RankRow,
};
pub use self::splits::{make_cv_splits, CvScheme, Fold, SplitPlan};
