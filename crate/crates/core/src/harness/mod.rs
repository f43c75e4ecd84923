//! Seeded Monte Carlo experiments over the mean channel-to-noise ratio and
//! plot-ready export of their results.

mod config;
mod emit;
mod gap;
mod spec;
mod sweep;

pub use config::{
    load_config_file, parse_algorithms, parse_config_str, parse_power_budget, parse_snr_grid,
    Overrides,
};
pub use emit::{emit, read_records, write_records, OutputFormat};
pub use gap::{relative_gap, run_gap_study, GapRow, GapStudy, GapSummary};
pub use spec::{linspace, Algorithm, ExperimentSpec, LoadingSettings, SnrAxis};
pub use sweep::{
    analytic_table, run_sweep, run_sweep_traced, AnalyticRow, SweepRecord, SweepTrace,
};
