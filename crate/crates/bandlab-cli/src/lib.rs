//! Library half of the `bandlab` binary: config files, experiment loops,
//! and atomic CSV/JSON emission. Kept as a library so integration tests can
//! drive the harness without shelling out.

pub mod config;
pub mod emit;
pub mod harness;

pub use config::{load_config, EquivConfig, FloorConfig, NamedLearner, SweepConfig, TargetSpec};
pub use harness::{
    equiv_csv, floor_csv, run_equivalence, run_floor_demo, run_sweep, sweep_csv, EquivOutput,
    EquivRecord, FloorOutput, FloorRecord, SweepOutput, TrialRecord, EQUIV_CSV_HEADER,
    FLOOR_CSV_HEADER, SWEEP_CSV_HEADER,
};

/// CLI-level error: everything the library can signal, plus file IO.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lab(#[from] bandlab::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Stable machine-readable kind for the error JSON on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Lab(e) => match e {
                bandlab::Error::DimensionMismatch(_) => "dimension_mismatch",
                bandlab::Error::InvalidParameter(_) => "invalid_parameter",
                bandlab::Error::Capacity(_) => "capacity",
                bandlab::Error::Conditioning(_) => "conditioning",
                bandlab::Error::Serialization(_) => "serialization",
            },
            CliError::Io { .. } => "io",
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
