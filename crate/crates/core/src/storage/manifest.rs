//! Dataset manifest: county and grid tables plus the per-kind block
//! indexes. The manifest is read fully at open; block indexes are
//! binary-searched per query.

use std::path::Path;

use crate::domain::DayIndex;

use super::varint::{self, Cursor};
use super::{Codec, StorageError, DECIMAL_PRECISION};

#[derive(Debug, Clone, PartialEq)]
pub struct CountyMeta {
    pub code: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeta {
    pub id: u64,
    pub lat: f64,
    pub lon: f64,
    pub county_code: String,
}

/// One `(grid, day)` block in a data file. `offset`/`len` locate the
/// stored (post-codec) bytes; `crc32` covers exactly those bytes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockEntry {
    pub grid_id: u64,
    pub day: DayIndex,
    pub offset: u64,
    pub len: u32,
    pub record_count: u32,
    pub codec: Codec,
    pub crc32: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub precision: u8,
    /// Sorted by code; codes unique.
    pub counties: Vec<CountyMeta>,
    /// Sorted by id; ids unique.
    pub grids: Vec<GridMeta>,
    /// Raw source sizes recorded at ingest (0 = unknown); lets
    /// `inspect` report compression without re-reading the feeds.
    pub raw_weather_bytes: u64,
    pub raw_speed_bytes: u64,
    /// Sorted by (grid, day).
    pub weather_index: Vec<BlockEntry>,
    pub speed_index: Vec<BlockEntry>,
}

impl DatasetManifest {
    pub fn encode_body(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.push(self.precision);
        varint::write_u64(&mut out, self.counties.len() as u64);
        for c in &self.counties {
            varint::write_str(&mut out, &c.code);
            varint::write_str(&mut out, &c.name);
        }
        varint::write_u64(&mut out, self.grids.len() as u64);
        for g in &self.grids {
            varint::write_u64(&mut out, g.id);
            varint::write_f64(&mut out, g.lat);
            varint::write_f64(&mut out, g.lon);
            varint::write_str(&mut out, &g.county_code);
        }
        varint::write_u64(&mut out, self.raw_weather_bytes);
        varint::write_u64(&mut out, self.raw_speed_bytes);
        encode_index(&mut out, &self.weather_index);
        encode_index(&mut out, &self.speed_index);
        out
    }

    pub fn decode_body(body: &[u8], path: &Path) -> Result<DatasetManifest, StorageError> {
        let fail = |detail: String| StorageError::format(path, detail);
        let mut c = Cursor::new(body);
        let manifest = (|| -> Result<DatasetManifest, String> {
            let precision = c.read_u8()?;
            let county_count = c.read_u64()? as usize;
            let mut counties = Vec::with_capacity(county_count.min(1 << 16));
            for _ in 0..county_count {
                let code = c.read_str()?;
                let name = c.read_str()?;
                counties.push(CountyMeta { code, name });
            }
            let grid_count = c.read_u64()? as usize;
            let mut grids = Vec::with_capacity(grid_count.min(1 << 20));
            for _ in 0..grid_count {
                grids.push(GridMeta {
                    id: c.read_u64()?,
                    lat: c.read_f64()?,
                    lon: c.read_f64()?,
                    county_code: c.read_str()?,
                });
            }
            let raw_weather_bytes = c.read_u64()?;
            let raw_speed_bytes = c.read_u64()?;
            let weather_index = decode_index(&mut c)?;
            let speed_index = decode_index(&mut c)?;
            if c.remaining() != 0 {
                return Err("trailing bytes after manifest".into());
            }
            Ok(DatasetManifest {
                precision,
                counties,
                grids,
                raw_weather_bytes,
                raw_speed_bytes,
                weather_index,
                speed_index,
            })
        })()
        .map_err(fail)?;
        manifest.check_invariants(path)?;
        Ok(manifest)
    }

    /// Structural invariants: sorted unique tables, sorted indexes,
    /// non-overlapping offsets, every indexed grid known.
    pub fn check_invariants(&self, path: &Path) -> Result<(), StorageError> {
        let fail = |detail: String| StorageError::format(path, detail);
        if self.precision != DECIMAL_PRECISION {
            return Err(fail(format!(
                "unsupported decimal precision {} (expected {})",
                self.precision, DECIMAL_PRECISION
            )));
        }
        for pair in self.counties.windows(2) {
            if pair[0].code >= pair[1].code {
                return Err(fail("county table not sorted by unique code".into()));
            }
        }
        for c in &self.counties {
            if c.name.is_empty() {
                return Err(fail(format!("county {} has an empty name", c.code)));
            }
        }
        for pair in self.grids.windows(2) {
            if pair[0].id >= pair[1].id {
                return Err(fail("grid table not sorted by unique id".into()));
            }
        }
        for g in &self.grids {
            if self.counties.binary_search_by(|c| c.code.as_str().cmp(&g.county_code)).is_err() {
                return Err(fail(format!("grid {} names unknown county {}", g.id, g.county_code)));
            }
            if !(-90.0..=90.0).contains(&g.lat) || !(-180.0..=180.0).contains(&g.lon) {
                return Err(fail(format!("grid {} has out-of-range coordinates", g.id)));
            }
        }
        for (name, index) in [("weather", &self.weather_index), ("speed", &self.speed_index)] {
            let mut end_of_prev = 0u64;
            for pair in index.windows(2) {
                if (pair[0].grid_id, pair[0].day) >= (pair[1].grid_id, pair[1].day) {
                    return Err(fail(format!("{name} index not sorted by (grid, day)")));
                }
            }
            for e in index.iter() {
                if self.grids.binary_search_by(|g| g.id.cmp(&e.grid_id)).is_err() {
                    return Err(fail(format!("{name} index references unknown grid {}", e.grid_id)));
                }
                if e.offset < end_of_prev {
                    return Err(fail(format!("{name} index has overlapping blocks")));
                }
                end_of_prev = e.offset + e.len as u64;
            }
        }
        Ok(())
    }

    pub fn find_block(&self, index: &[BlockEntry], grid: u64, day: DayIndex) -> Option<BlockEntry> {
        index
            .binary_search_by(|e| (e.grid_id, e.day).cmp(&(grid, day)))
            .ok()
            .map(|i| index[i])
    }
}

fn encode_index(out: &mut Vec<u8>, index: &[BlockEntry]) {
    varint::write_u64(out, index.len() as u64);
    for e in index {
        varint::write_u64(out, e.grid_id);
        varint::write_i64(out, e.day.days());
        varint::write_u64(out, e.offset);
        varint::write_u64(out, e.len as u64);
        varint::write_u64(out, e.record_count as u64);
        out.push(e.codec.id());
        out.extend_from_slice(&e.crc32.to_le_bytes());
    }
}

fn decode_index(c: &mut Cursor) -> Result<Vec<BlockEntry>, String> {
    let count = c.read_u64()? as usize;
    let mut out = Vec::with_capacity(count.min(1 << 22));
    for _ in 0..count {
        let grid_id = c.read_u64()?;
        let day = DayIndex::new(c.read_i64()?);
        let offset = c.read_u64()?;
        let len = c.read_u32()?;
        let record_count = c.read_u32()?;
        let codec_id = c.read_u8()?;
        let codec = Codec::from_id(codec_id).ok_or(format!("unknown codec id {codec_id}"))?;
        let crc32 = u32::from_le_bytes(c.read_bytes(4)?.try_into().unwrap());
        out.push(BlockEntry { grid_id, day, offset, len, record_count, codec, crc32 });
    }
    Ok(out)
}
