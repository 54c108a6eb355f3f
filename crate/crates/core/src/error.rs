use thiserror::Error;

use crate::device::TrackId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("track {track}: shifting to offset {offset} leaves the overflow region (limit {limit})")]
    BoundaryViolation { track: TrackId, offset: i64, limit: i64 },

    #[error("track {track}: port {port} out of range ({ports} ports)")]
    PortOutOfRange { track: TrackId, port: u32, ports: u32 },

    #[error("track {0} does not exist")]
    UnknownTrack(TrackId),

    #[error("track {track}, port {port}: inject onto a cell that already holds a skyrmion")]
    DoubleInjection { track: TrackId, port: u32 },

    #[error("permutation write supports a single word per update, got a batch of {0}")]
    UnsupportedParallelPw(usize),

    #[error("batch words must share one track alignment: {0}")]
    Alignment(String),

    #[error("track pool exhausted: {0}")]
    Capacity(String),

    #[error("node {0} has not been placed")]
    UnknownNode(u32),

    #[error("value arena full ({capacity} slots)")]
    ArenaFull { capacity: u32 },

    #[error("tree structure corrupted: {0}")]
    Corruption(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("read of key {key:#x} returned {got:?}, oracle expected {expected:?}")]
    OracleMismatch {
        key: u64,
        got: Option<u64>,
        expected: Option<u64>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
