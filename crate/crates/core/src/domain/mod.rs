//! Domain model: the county → grid → record hierarchy that programs
//! query, plus calendar utilities and dataset validation.
//!
//! All types here are immutable after construction and safe to share
//! across concurrent map tasks. Missing numeric weather fields are
//! `None`, never a sentinel value; aggregations skip absent values.

mod dates;
mod validate;

pub use dates::{parse_date, DateError, DayIndex};
pub use validate::{validate_dataset, Violation};

/// Seconds in a UTC day; record times are grouped into blocks by
/// `time.div_euclid(SECONDS_PER_DAY)`.
pub const SECONDS_PER_DAY: i64 = 86_400;

/// Top-level partition of a dataset and unit of parallel evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct County {
    /// Agency code, unique within a dataset (e.g. "077").
    pub county_code: String,
    /// Human-readable name, non-empty.
    pub county_name: String,
    /// Grids in the county, in declared order.
    pub grids: Vec<Grid>,
}

/// Atomic spatial cell. Grid ids are unique across the whole dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub id: u64,
    /// Latitude in degrees, within [-90, 90].
    pub lat: f64,
    /// Longitude in degrees, within [-180, 180].
    pub lon: f64,
    /// True iff at least one weather block exists for this grid.
    /// Programs observe this as `def(grid.weatherRoot)`.
    pub has_weather: bool,
    /// True iff at least one speed block exists for this grid.
    pub has_speed: bool,
}

impl Grid {
    /// Location key used by programs to index outputs by grid,
    /// e.g. `"(41.974, -93.57)"`.
    pub fn location_string(&self) -> String {
        format!("({}, {})", self.lat, self.lon)
    }
}

/// One weather reading. All numeric fields other than `time` are
/// optional; `wawa`/`ptype` are empty strings when not reported.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherRecord {
    /// Air temperature 2 m above ground, °C.
    pub tmpc: Option<f64>,
    /// Watches/warnings/advisories code.
    pub wawa: String,
    /// Precipitation type.
    pub ptype: String,
    /// Dew point, °C.
    pub dwpc: Option<f64>,
    /// Wind speed, m/s, ≥ 0.
    pub smps: Option<f64>,
    /// Wind direction, degrees, normalized into [0, 360).
    pub drct: Option<f64>,
    /// Horizontal visibility, km, ≥ 0.
    pub vsby: Option<f64>,
    /// Pavement surface temperature, °C.
    pub roadtmpc: Option<f64>,
    /// Solar radiation, W/m², ≥ 0.
    pub srad: Option<f64>,
    /// Snow fall depth, ≥ 0 (opaque units).
    pub snwd: Option<f64>,
    /// Precipitation accumulation, ≥ 0 (opaque units).
    pub pcpn: Option<f64>,
    /// Seconds since the Unix epoch, UTC.
    pub time: i64,
}

/// One speed detector reading. All fields are required.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRecord {
    pub detectorcode: String,
    /// Vehicle/detector type.
    pub vtype: String,
    /// Measured speed, mph, finite and ≥ 0.
    pub speed: f64,
    /// Free-flow reference speed, mph, finite and ≥ 0.
    pub reference: f64,
    /// Seconds since the Unix epoch, UTC.
    pub time: i64,
    pub roadname: String,
}

impl WeatherRecord {
    pub fn day(&self) -> DayIndex {
        DayIndex::new(self.time.div_euclid(SECONDS_PER_DAY))
    }
}

impl SpeedRecord {
    pub fn day(&self) -> DayIndex {
        DayIndex::new(self.time.div_euclid(SECONDS_PER_DAY))
    }
}
