//! The environment interface: anything that can execute a workload against a
//! SUT and report a performance measurement. The simulator and the HTTP
//! driver both implement it, so agents and strategies are written once.

use crate::domain::{PerfMeasurement, TransactionCatalog, Workload};

/// Position of an environment call within a run: which episode, and which
/// step inside it. Keys replayable noise and log context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StepKey {
    pub episode: u64,
    pub step: u64,
}

/// Errors an environment can raise while executing a workload.
#[derive(Debug, thiserror::Error)]
pub enum ActuatorError {
    #[error("workload is empty: at least one virtual user is required")]
    EmptyWorkload,
    #[error("transaction {name:?} carries load but has no script")]
    MissingScript { name: String },
    #[error("cannot reach SUT at {url}: {reason}")]
    ConnectFailure { url: String, reason: String },
    #[error("workload has {got} entries but the catalog has {expected}")]
    CatalogMismatch { got: usize, expected: usize },
    #[error("load driver failure: {0}")]
    Driver(String),
}

/// An executable environment for one SUT.
///
/// Episodes are sequential by design: callers make one `run` call at a time.
pub trait Actuator {
    /// The transactions this environment knows how to drive.
    fn catalog(&self) -> &TransactionCatalog;

    /// Executes the workload and returns the aggregate measurement.
    fn run(&mut self, w: &Workload, key: StepKey) -> Result<PerfMeasurement, ActuatorError>;
}
