//! The convergence experiment: sample the parameter space, solve each
//! instance from seeded random starting points, and summarize iteration
//! counts per parameter value.

mod csv;
mod plot;
mod stats;
mod sweep;

pub use self::csv::{csv_header, write_csv, write_csv_string};
pub use self::plot::{emit_boxplot, render_boxplot};
pub use self::stats::{quantile, summarize, GroupSummary, SweptParameter};
pub use self::sweep::{
    derive_run_seed, random_init, run_single, run_sweep, run_sweep_with, FixedExtras, SweepGrid, SweepOptions,
    SweepRecord, INIT_MARGIN,
};
