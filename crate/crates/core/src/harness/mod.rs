//! Scenario orchestration: references, the closed loop, metrics and reporting.

pub mod config;
pub mod metrics;
pub mod reference;
pub mod run;

pub use config::{PerChannel, ScenarioConfig};
pub use metrics::{default_band, rmse, settle_time, steady_offset, Settle};
pub use reference::{ReferenceKind, ReferenceProfile};
pub use run::{
    replay, run_scenario, simulate, sweep, ChannelMetrics, RunMetrics, SimLog, SweepParam, SweepRow,
};
