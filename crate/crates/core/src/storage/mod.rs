//! Binary dataset storage: one manifest plus one data file per record
//! kind, loadable lazily one `(grid, day)` block at a time.
//!
//! Files are `manifest.btd`, `weather.btd` and `speed.btd`, all little
//! endian with unsigned LEB128 varints and zig-zag signed deltas; the
//! exact byte layout is documented in `docs/format.md`. Datasets are
//! write-once, read-many: any number of concurrent readers, never a
//! writer alongside them. Opening a dataset reads only the manifest —
//! record blocks are fetched on demand, one index probe and one block
//! read per query.

mod block;
mod codec;
mod manifest;
mod reader;
mod varint;
mod writer;

pub use codec::Codec;
pub use manifest::{BlockEntry, CountyMeta, DatasetManifest, GridMeta};
pub use reader::{Dataset, DatasetStats, IoStats, KindStats};
pub use writer::{fuse_speed, DatasetWriter, FusionWriter};

use std::path::Path;

use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.btd";
pub const WEATHER_FILE: &str = "weather.btd";
pub const SPEED_FILE: &str = "speed.btd";

pub const MAGIC: [u8; 4] = *b"BTD1";
pub const FORMAT_VERSION: u16 = 1;

/// Fixed-point scale for record numerics: two decimal digits.
pub const DECIMAL_PRECISION: u8 = 2;
pub(crate) const SCALE: f64 = 100.0;

/// Record kind stored in a data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Weather,
    Speed,
}

impl RecordKind {
    pub fn file_name(self) -> &'static str {
        match self {
            RecordKind::Weather => WEATHER_FILE,
            RecordKind::Speed => SPEED_FILE,
        }
    }

    pub(crate) fn file_kind_byte(self) -> u8 {
        match self {
            RecordKind::Weather => 1,
            RecordKind::Speed => 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Format { path: String, detail: String },
    #[error("corrupt block (grid {grid}, day {day}) in {path}: {detail}")]
    CorruptBlock { path: String, grid: u64, day: i64, detail: String },
    #[error("record for unknown grid {grid}")]
    UnknownGrid { grid: u64 },
    #[error("blocks must be added in ascending (grid, day) order: ({grid}, {day}) after ({prev_grid}, {prev_day})")]
    OutOfOrder { grid: u64, day: i64, prev_grid: u64, prev_day: i64 },
    #[error("{0}")]
    InvalidRecords(String),
    #[error("dataset already contains {0} data")]
    KindExists(&'static str),
}

impl StorageError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> StorageError {
        StorageError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn format(path: &Path, detail: impl Into<String>) -> StorageError {
        StorageError::Format { path: path.display().to_string(), detail: detail.into() }
    }
}
