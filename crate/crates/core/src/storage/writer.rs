//! Dataset writing. Blocks stream to temporary files in index order;
//! `finish` patches headers and renames everything into place, the
//! manifest last, so a crashed write never leaves an openable dataset.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::domain::{DayIndex, SpeedRecord, WeatherRecord};

use super::manifest::{BlockEntry, CountyMeta, DatasetManifest, GridMeta};
use super::{block, Codec, RecordKind, StorageError, DECIMAL_PRECISION, FORMAT_VERSION, MAGIC};

pub(crate) const HEADER_LEN: u64 = 20;
const MANIFEST_KIND_BYTE: u8 = 0;

fn header_bytes(kind: u8, body_len: u64, body_crc: u32) -> [u8; HEADER_LEN as usize] {
    let mut h = [0u8; HEADER_LEN as usize];
    h[0..4].copy_from_slice(&MAGIC);
    h[4] = kind;
    h[5..7].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    h[7] = 0; // reserved
    h[8..16].copy_from_slice(&body_len.to_le_bytes());
    h[16..20].copy_from_slice(&body_crc.to_le_bytes());
    h
}

/// Writes a whole `.btd` file (header + body) via a temp file rename.
pub(crate) fn write_btd_file(path: &Path, kind: u8, body: &[u8]) -> Result<(), StorageError> {
    let tmp = tmp_path(path);
    let io = |e| StorageError::io(&tmp, e);
    let mut f = File::create(&tmp).map_err(io)?;
    f.write_all(&header_bytes(kind, body.len() as u64, crc32fast::hash(body))).map_err(io)?;
    f.write_all(body).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| StorageError::io(path, e))?;
    Ok(())
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = std::ffi::OsString::from(".");
    name.push(path.file_name().expect("btd paths have file names"));
    name.push(".tmp");
    path.with_file_name(name)
}

/// Streams one kind's blocks to a temp data file.
struct BlockFileWriter {
    kind: RecordKind,
    final_path: PathBuf,
    tmp: PathBuf,
    file: Option<File>,
    offset: u64,
    crc: crc32fast::Hasher,
    entries: Vec<BlockEntry>,
}

impl BlockFileWriter {
    fn new(dir: &Path, kind: RecordKind) -> BlockFileWriter {
        let final_path = dir.join(kind.file_name());
        BlockFileWriter {
            kind,
            tmp: tmp_path(&final_path),
            final_path,
            file: None,
            offset: HEADER_LEN,
            crc: crc32fast::Hasher::new(),
            entries: Vec::new(),
        }
    }

    fn add(
        &mut self,
        grid: u64,
        day: DayIndex,
        payload: Vec<u8>,
        record_count: u32,
        codec: Codec,
    ) -> Result<(), StorageError> {
        if let Some(prev) = self.entries.last() {
            if (grid, day) <= (prev.grid_id, prev.day) {
                return Err(StorageError::OutOfOrder {
                    grid,
                    day: day.days(),
                    prev_grid: prev.grid_id,
                    prev_day: prev.day.days(),
                });
            }
        }
        if self.file.is_none() {
            let mut f = File::create(&self.tmp).map_err(|e| StorageError::io(&self.tmp, e))?;
            // Placeholder header; patched with length and checksum at finish.
            f.write_all(&header_bytes(self.kind.file_kind_byte(), 0, 0))
                .map_err(|e| StorageError::io(&self.tmp, e))?;
            self.file = Some(f);
        }
        let stored = codec.compress(&payload);
        let crc32 = crc32fast::hash(&stored);
        let file = self.file.as_mut().expect("opened above");
        file.write_all(&stored).map_err(|e| StorageError::io(&self.tmp, e))?;
        self.crc.update(&stored);
        self.entries.push(BlockEntry {
            grid_id: grid,
            day,
            offset: self.offset,
            len: stored.len() as u32,
            record_count,
            codec,
            crc32,
        });
        self.offset += stored.len() as u64;
        Ok(())
    }

    /// Patches the header and renames into place. No-op (and no file)
    /// when no blocks were added.
    fn finish(mut self) -> Result<Vec<BlockEntry>, StorageError> {
        if let Some(mut file) = self.file.take() {
            let io = |e| StorageError::io(&self.tmp, e);
            let body_len = self.offset - HEADER_LEN;
            let crc = std::mem::take(&mut self.crc).finalize();
            file.seek(SeekFrom::Start(0)).map_err(io)?;
            file.write_all(&header_bytes(self.kind.file_kind_byte(), body_len, crc)).map_err(io)?;
            file.sync_all().map_err(io)?;
            drop(file);
            fs::rename(&self.tmp, &self.final_path)
                .map_err(|e| StorageError::io(&self.final_path, e))?;
        }
        Ok(std::mem::take(&mut self.entries))
    }
}

impl Drop for BlockFileWriter {
    fn drop(&mut self) {
        if self.file.is_some() {
            let _ = fs::remove_file(&self.tmp);
        }
    }
}

/// Builds a fresh dataset directory. Blocks must arrive grouped by
/// kind in ascending `(grid, day)` order; `finish` writes the manifest.
pub struct DatasetWriter {
    dir: PathBuf,
    counties: Vec<CountyMeta>,
    grids: Vec<GridMeta>,
    codec: Codec,
    weather: BlockFileWriter,
    speed: BlockFileWriter,
    raw_weather_bytes: u64,
    raw_speed_bytes: u64,
}

impl DatasetWriter {
    pub fn create(
        dir: &Path,
        mut counties: Vec<CountyMeta>,
        mut grids: Vec<GridMeta>,
        codec: Codec,
    ) -> Result<DatasetWriter, StorageError> {
        fs::create_dir_all(dir).map_err(|e| StorageError::io(dir, e))?;
        counties.sort_by(|a, b| a.code.cmp(&b.code));
        grids.sort_by_key(|g| g.id);
        for pair in counties.windows(2) {
            if pair[0].code == pair[1].code {
                return Err(StorageError::InvalidRecords(format!(
                    "duplicate county code {:?}",
                    pair[0].code
                )));
            }
        }
        for pair in grids.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(StorageError::InvalidRecords(format!(
                    "duplicate grid id {}",
                    pair[0].id
                )));
            }
        }
        for g in &grids {
            if counties.binary_search_by(|c| c.code.as_str().cmp(&g.county_code)).is_err() {
                return Err(StorageError::InvalidRecords(format!(
                    "grid {} names unknown county {:?}",
                    g.id, g.county_code
                )));
            }
        }
        Ok(DatasetWriter {
            counties,
            grids,
            codec,
            weather: BlockFileWriter::new(dir, RecordKind::Weather),
            speed: BlockFileWriter::new(dir, RecordKind::Speed),
            raw_weather_bytes: 0,
            raw_speed_bytes: 0,
            dir: dir.to_path_buf(),
        })
    }

    fn check_grid(&self, grid: u64) -> Result<(), StorageError> {
        match self.grids.binary_search_by(|g| g.id.cmp(&grid)) {
            Ok(_) => Ok(()),
            Err(_) => Err(StorageError::UnknownGrid { grid }),
        }
    }

    pub fn add_weather_block(
        &mut self,
        grid: u64,
        day: DayIndex,
        records: &[WeatherRecord],
    ) -> Result<(), StorageError> {
        self.check_grid(grid)?;
        let payload = block::encode_weather(records, day).map_err(StorageError::InvalidRecords)?;
        self.weather.add(grid, day, payload, records.len() as u32, self.codec)
    }

    pub fn add_speed_block(
        &mut self,
        grid: u64,
        day: DayIndex,
        records: &[SpeedRecord],
    ) -> Result<(), StorageError> {
        self.check_grid(grid)?;
        let payload = block::encode_speed(records, day).map_err(StorageError::InvalidRecords)?;
        self.speed.add(grid, day, payload, records.len() as u32, self.codec)
    }

    /// Records raw feed sizes so `inspect` can report compression.
    pub fn set_raw_bytes(&mut self, weather: u64, speed: u64) {
        self.raw_weather_bytes = weather;
        self.raw_speed_bytes = speed;
    }

    pub fn finish(self) -> Result<(), StorageError> {
        let weather_index = self.weather.finish()?;
        let speed_index = self.speed.finish()?;
        let manifest = DatasetManifest {
            precision: DECIMAL_PRECISION,
            counties: self.counties,
            grids: self.grids,
            raw_weather_bytes: self.raw_weather_bytes,
            raw_speed_bytes: self.raw_speed_bytes,
            weather_index,
            speed_index,
        };
        let path = self.dir.join(super::MANIFEST_FILE);
        manifest.check_invariants(&path)?;
        write_btd_file(&path, MANIFEST_KIND_BYTE, &manifest.encode_body())
    }
}

/// Adds speed data to a dataset that has none, leaving the existing
/// weather file bytes untouched. The manifest is rewritten atomically
/// with the new speed index.
pub struct FusionWriter {
    dir: PathBuf,
    manifest: DatasetManifest,
    speed: BlockFileWriter,
    raw_speed_bytes: u64,
}

impl FusionWriter {
    pub fn open(dir: &Path) -> Result<FusionWriter, StorageError> {
        let manifest = super::reader::read_manifest_file(&dir.join(super::MANIFEST_FILE))?;
        if !manifest.speed_index.is_empty() || dir.join(super::SPEED_FILE).exists() {
            return Err(StorageError::KindExists("speed"));
        }
        Ok(FusionWriter {
            manifest,
            speed: BlockFileWriter::new(dir, RecordKind::Speed),
            raw_speed_bytes: 0,
            dir: dir.to_path_buf(),
        })
    }

    pub fn grids(&self) -> &[GridMeta] {
        &self.manifest.grids
    }

    pub fn counties(&self) -> &[CountyMeta] {
        &self.manifest.counties
    }

    pub fn add_speed_block(
        &mut self,
        grid: u64,
        day: DayIndex,
        records: &[SpeedRecord],
        codec: Codec,
    ) -> Result<(), StorageError> {
        if self.manifest.grids.binary_search_by(|g| g.id.cmp(&grid)).is_err() {
            return Err(StorageError::UnknownGrid { grid });
        }
        let payload = block::encode_speed(records, day).map_err(StorageError::InvalidRecords)?;
        self.speed.add(grid, day, payload, records.len() as u32, codec)
    }

    pub fn set_raw_speed_bytes(&mut self, bytes: u64) {
        self.raw_speed_bytes = bytes;
    }

    pub fn finish(mut self) -> Result<(), StorageError> {
        self.manifest.speed_index = self.speed.finish()?;
        self.manifest.raw_speed_bytes = self.raw_speed_bytes;
        let path = self.dir.join(super::MANIFEST_FILE);
        self.manifest.check_invariants(&path)?;
        write_btd_file(&path, MANIFEST_KIND_BYTE, &self.manifest.encode_body())
    }
}

/// Convenience for tests and small tools: fuse pre-grouped speed
/// blocks into an existing weather-only dataset.
pub fn fuse_speed(
    dir: &Path,
    blocks: &BTreeMap<(u64, DayIndex), Vec<SpeedRecord>>,
    raw_speed_bytes: u64,
    codec: Codec,
) -> Result<(), StorageError> {
    let mut w = FusionWriter::open(dir)?;
    for ((grid, day), records) in blocks {
        w.add_speed_block(*grid, *day, records, codec)?;
    }
    w.set_raw_speed_bytes(raw_speed_bytes);
    w.finish()
}
