//! Boundary benchmark: tolerance matching, threshold sweeps, ODS/OIS/AP and
//! reports.

mod harness;
mod matching;
mod pr;
mod report;

pub use harness::{evaluate_method, summarize, EvalItem};
pub use matching::{greedy_pairs, match_boundaries, match_pairs, match_radius, MatchCounts, DEFAULT_MAX_DIST};
pub use pr::{
    best_f_per_image, compute_ap, compute_ods, compute_ois, default_grid, f_measure, pooled_curve, pr_at_threshold,
    pr_curve, pr_of_binary, threshold_grid, PRPoint,
};
pub use report::{per_image_csv, pr_csv, pr_svg, summary_csv, summary_table, EvalSummary};
