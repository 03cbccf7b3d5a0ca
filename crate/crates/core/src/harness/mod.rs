//! Seeded simulation runs, regret bookkeeping, CSV logs and the statistics
//! used to judge them.

pub mod acceptance;
pub mod config;
pub mod csv_io;
pub mod regret;
pub mod run;
pub mod stats;

use thiserror::Error;

use crate::auction::AuctionError;
use crate::env::EnvError;
use crate::strategy::StrategyError;

pub use config::{RegretMode, RunConfig};
pub use run::{run_all, run_replication, ReplicationLog, ReplicationSummary, RoundRecord, RunLog, RunOptions};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(String),
    #[error("fit: {0}")]
    Fit(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl HarnessError {
    /// Short stable tag for machine-readable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Auction(_) => "auction",
            HarnessError::Env(_) => "environment",
            HarnessError::Strategy(_) => "strategy",
            HarnessError::Io(_) => "io",
            HarnessError::Csv(_) => "csv",
            HarnessError::Fit(_) => "fit",
            HarnessError::ThreadPool(_) => "thread_pool",
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e.to_string())
    }
}
