//! Runtime values. Domain values share their backing storage through
//! `Arc`, so cloning during evaluation is cheap and map tasks can hold
//! the same county hierarchy concurrently.

use std::sync::Arc;

use crate::domain::{County, SpeedRecord, WeatherRecord};

#[derive(Debug)]
pub(crate) struct CountyVal {
    pub code: Arc<str>,
    pub name: Arc<str>,
    pub grids: Arc<Vec<Arc<GridVal>>>,
}

#[derive(Debug)]
pub(crate) struct GridVal {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
    pub location: Arc<str>,
    pub has_weather: bool,
    pub has_speed: bool,
}

impl CountyVal {
    pub fn from_domain(counties: &[County]) -> Vec<Arc<CountyVal>> {
        counties
            .iter()
            .map(|c| {
                Arc::new(CountyVal {
                    code: c.county_code.as_str().into(),
                    name: c.county_name.as_str().into(),
                    grids: Arc::new(
                        c.grids
                            .iter()
                            .map(|g| {
                                Arc::new(GridVal {
                                    id: g.id,
                                    lat: g.lat,
                                    lon: g.lon,
                                    location: g.location_string().into(),
                                    has_weather: g.has_weather,
                                    has_speed: g.has_speed,
                                })
                            })
                            .collect(),
                    ),
                })
            })
            .collect()
    }
}

/// A value during evaluation. `Absent` marks missing optional data; it
/// propagates through field access and arithmetic, turns `def` false,
/// and makes emissions no-ops.
#[derive(Debug, Clone)]
pub(crate) enum Value {
    Absent,
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(Arc<str>),
    County(Arc<CountyVal>),
    Grid(Arc<GridVal>),
    Grids(Arc<Vec<Arc<GridVal>>>),
    /// A weather root and its record list are the same value.
    WeatherList(Arc<Vec<WeatherRecord>>),
    SpeedList(Arc<Vec<SpeedRecord>>),
    WeatherRec(Arc<Vec<WeatherRecord>>, usize),
    SpeedRec(Arc<Vec<SpeedRecord>>, usize),
}

impl Value {
    pub fn is_absent(&self) -> bool {
        matches!(self, Value::Absent)
    }

    /// Length when the value is a list, for `foreach` scans.
    pub fn list_len(&self) -> Option<usize> {
        match self {
            Value::Grids(g) => Some(g.len()),
            Value::WeatherList(w) => Some(w.len()),
            Value::SpeedList(s) => Some(s.len()),
            _ => None,
        }
    }
}
