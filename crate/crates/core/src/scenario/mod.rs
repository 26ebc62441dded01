//! Declarative scenarios: JSON configuration, the Monte-Carlo driver and
//! result serialization used by the `mimo-sim` binary.

mod config;
mod output;
mod runner;

pub use config::{
    build_network, parse_scenario, ArchitectureKind, ArrayConfig, ArrayKind, ChannelConfig, ChannelKind, DeviceConfig,
    DirectionConfig, GlobalConfig, HybridConfig, MaskKind, PairConfig, PathLossConfig, PathLossKind, RunConfig,
    ScenarioConfig, StrategyConfig, SweepConfig, SweepParameter,
};
pub use output::{
    emit_results, format_float, read_csv, write_channels_csv, write_csv, write_json, write_pattern_csv, OutputFormat,
    CSV_HEADER,
};
pub use runner::{run_monte_carlo, ChannelDump, MetricsRecord, RunOptions, RunOutput};

/// Failure of a scenario run, split by the exit status it maps to.
#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Runtime {
        context: String,
        #[source]
        source: crate::Error,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl ScenarioError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        ScenarioError::Config(msg.into())
    }

    pub(crate) fn runtime(context: impl Into<String>, source: crate::Error) -> Self {
        ScenarioError::Runtime {
            context: context.into(),
            source,
        }
    }
}
