//! Policy persistence: a snapshot bundles the learned values with everything
//! needed to reuse them safely (catalog, thresholds, objective, episode count)
//! and round-trips through JSON without loss.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::dqn::QNetwork;
use crate::agent::qtable::QTable;
use crate::domain::{StateThresholds, TestObjective, TransactionCatalog};

/// Current snapshot format version; files carrying any other version are
/// rejected at load time.
pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("policy file: {0}")]
    Io(#[from] std::io::Error),
    #[error("policy format: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported snapshot format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
}

/// The learned policy itself, tagged by agent kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    Tabular { q_table: QTable },
    Dqn { network: QNetwork },
}

/// Everything persisted about a trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub format_version: u32,
    pub policy: PolicyKind,
    pub catalog: TransactionCatalog,
    pub thresholds: StateThresholds,
    /// The objective in force when the snapshot was taken.
    pub objective: TestObjective,
    /// Total episodes of experience behind this policy.
    pub episodes: u64,
}

/// Serializes a snapshot to pretty JSON at `path`. Numbers are written with
/// the shortest representation that round-trips exactly, so save followed by
/// load reproduces every value bit for bit.
pub fn save_policy(snapshot: &PolicySnapshot, path: &Path) -> Result<(), PolicyError> {
    let text = serde_json::to_string_pretty(snapshot)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Loads a snapshot, checking the format version before touching the rest of
/// the document.
pub fn load_policy(path: &Path) -> Result<PolicySnapshot, PolicyError> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .map(|v| v as u32)
        .unwrap_or(0);
    if found != SNAPSHOT_FORMAT_VERSION {
        return Err(PolicyError::VersionMismatch { found, expected: SNAPSHOT_FORMAT_VERSION });
    }
    Ok(serde_json::from_value(value)?)
}
