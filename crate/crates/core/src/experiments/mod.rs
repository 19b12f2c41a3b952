//! Monte-Carlo experiments, theory checks and robust-regression outliers.

mod harness;
mod metrics;
mod outliers;
mod spec;
mod theory;

pub use harness::{draw_instance, run_experiment, ExperimentReport, Instance};
pub use metrics::{quantile_sorted, BoxStats, SelectorSummary, TrialMetrics};
pub use outliers::{
    load_dataset_csv, outlier_detect, parse_dataset, Bundled, LoadOptions, OutlierReport,
    RegressionDataset, MIN_PROJECTED_NORM,
};
pub use spec::{parse_selectors, ExperimentSpec, SelectorSpec};
pub use theory::{
    simulate_traces, validate_appendix_b, validate_thm1, validate_thm2, validate_thm4,
    validate_thm6, AppendixBResult, CoverageRow, GammaPoint, HadamardSetup, KminRow, Regime,
    RrtErrorRow, SimulatedTrace,
};
