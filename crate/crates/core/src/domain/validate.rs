use std::collections::HashSet;
use std::fmt;

use super::County;

/// One invariant violation, as data. `path` names the offending entity,
/// e.g. `county[077].grid[12]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Checks every dataset-level invariant over a county list and returns
/// all violations found; empty iff the hierarchy is valid.
pub fn validate_dataset(counties: &[County]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut codes = HashSet::new();
    let mut grid_ids = HashSet::new();
    for county in counties {
        let cpath = format!("county[{}]", county.county_code);
        if county.county_name.is_empty() {
            out.push(Violation { path: cpath.clone(), message: "empty county name".into() });
        }
        if !codes.insert(county.county_code.clone()) {
            out.push(Violation {
                path: cpath.clone(),
                message: format!("duplicate county code {:?}", county.county_code),
            });
        }
        let mut local_ids = HashSet::new();
        for grid in &county.grids {
            let gpath = format!("{}.grid[{}]", cpath, grid.id);
            if !local_ids.insert(grid.id) {
                out.push(Violation {
                    path: gpath.clone(),
                    message: format!("duplicate grid id {} within county", grid.id),
                });
            } else if !grid_ids.insert(grid.id) {
                out.push(Violation {
                    path: gpath.clone(),
                    message: format!("grid id {} already used by another county", grid.id),
                });
            }
            if !(-90.0..=90.0).contains(&grid.lat) {
                out.push(Violation {
                    path: gpath.clone(),
                    message: format!("latitude {} out of [-90, 90]", grid.lat),
                });
            }
            if !(-180.0..=180.0).contains(&grid.lon) {
                out.push(Violation {
                    path: gpath,
                    message: format!("longitude {} out of [-180, 180]", grid.lon),
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Grid;

    fn grid(id: u64, lat: f64, lon: f64) -> Grid {
        Grid { id, lat, lon, has_weather: false, has_speed: false }
    }

    fn county(code: &str, name: &str, grids: Vec<Grid>) -> County {
        County { county_code: code.into(), county_name: name.into(), grids }
    }

    #[test]
    fn empty_dataset_is_valid() {
        assert!(validate_dataset(&[]).is_empty());
    }

    #[test]
    fn duplicate_county_code_reported_once() {
        let cs = vec![county("077", "Polk", vec![]), county("077", "Story", vec![])];
        let v = validate_dataset(&cs);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("duplicate county code"));
    }

    #[test]
    fn latitude_out_of_range() {
        let cs = vec![county("077", "Polk", vec![grid(1, 91.0, -93.5)])];
        let v = validate_dataset(&cs);
        assert_eq!(v.len(), 1);
        assert!(v[0].path.contains("grid[1]"));
        assert!(v[0].message.contains("latitude"));
    }

    #[test]
    fn grid_id_shared_across_counties() {
        let cs = vec![
            county("077", "Polk", vec![grid(5, 41.0, -93.0)]),
            county("085", "Story", vec![grid(5, 42.0, -93.2)]),
        ];
        let v = validate_dataset(&cs);
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("already used"));
    }
}
