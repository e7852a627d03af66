//! Read side: the dataset handle. Opening reads and verifies only the
//! manifest; record blocks are read on demand with one positioned read
//! per block, so concurrent map tasks share a handle freely.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use crate::domain::{County, DayIndex, Grid, SpeedRecord, WeatherRecord};

use super::manifest::{BlockEntry, DatasetManifest};
use super::writer::HEADER_LEN;
use super::{block, RecordKind, StorageError, FORMAT_VERSION, MAGIC, MANIFEST_FILE};

/// Parses and verifies a `.btd` header; returns the declared body length.
fn parse_header(header: &[u8], expect_kind: u8, path: &Path) -> Result<(u64, u32), StorageError> {
    if header.len() < HEADER_LEN as usize || header[0..4] != MAGIC {
        return Err(StorageError::format(path, "bad magic bytes (not a BTD file)"));
    }
    if header[4] != expect_kind {
        return Err(StorageError::format(
            path,
            format!("wrong file kind {} (expected {})", header[4], expect_kind),
        ));
    }
    let version = u16::from_le_bytes(header[5..7].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(StorageError::format(
            path,
            format!("format version {} not supported (expected {})", version, FORMAT_VERSION),
        ));
    }
    let body_len = u64::from_le_bytes(header[8..16].try_into().unwrap());
    let body_crc = u32::from_le_bytes(header[16..20].try_into().unwrap());
    Ok((body_len, body_crc))
}

/// Reads and fully verifies a manifest file.
pub(crate) fn read_manifest_file(path: &Path) -> Result<DatasetManifest, StorageError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| StorageError::io(path, e))?;
    if bytes.len() < HEADER_LEN as usize {
        return Err(StorageError::format(path, "file shorter than its header"));
    }
    let (body_len, body_crc) = parse_header(&bytes[..HEADER_LEN as usize], 0, path)?;
    let body = &bytes[HEADER_LEN as usize..];
    if body.len() as u64 != body_len {
        return Err(StorageError::format(
            path,
            format!("body length {} does not match header ({})", body.len(), body_len),
        ));
    }
    if crc32fast::hash(body) != body_crc {
        return Err(StorageError::format(path, "manifest checksum mismatch"));
    }
    DatasetManifest::decode_body(body, path)
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> std::io::Result<()> {
    std::os::unix::fs::FileExt::read_exact_at(file, buf, offset)
}

#[cfg(windows)]
fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> std::io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "unexpected end of file",
                ))
            }
            n => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}

/// One open data file plus its I/O accounting. The header is verified
/// on the first block read, not at open, so untouched kinds cost zero
/// reads.
#[derive(Debug)]
struct DataFile {
    path: PathBuf,
    file: File,
    header_checked: AtomicBool,
    kind_byte: u8,
    bytes_read: AtomicU64,
    block_reads: AtomicU64,
}

impl DataFile {
    fn read_block(&self, entry: &BlockEntry) -> Result<Vec<u8>, StorageError> {
        if !self.header_checked.load(Ordering::Acquire) {
            let mut header = [0u8; HEADER_LEN as usize];
            read_exact_at(&self.file, &mut header, 0)
                .map_err(|e| StorageError::io(&self.path, e))?;
            self.bytes_read.fetch_add(HEADER_LEN, Ordering::Relaxed);
            parse_header(&header, self.kind_byte, &self.path)?;
            self.header_checked.store(true, Ordering::Release);
        }
        let mut stored = vec![0u8; entry.len as usize];
        read_exact_at(&self.file, &mut stored, entry.offset)
            .map_err(|e| StorageError::io(&self.path, e))?;
        self.bytes_read.fetch_add(entry.len as u64, Ordering::Relaxed);
        self.block_reads.fetch_add(1, Ordering::Relaxed);
        if crc32fast::hash(&stored) != entry.crc32 {
            return Err(StorageError::CorruptBlock {
                path: self.path.display().to_string(),
                grid: entry.grid_id,
                day: entry.day.days(),
                detail: "checksum mismatch".into(),
            });
        }
        entry.codec.decompress(&stored).map_err(|detail| StorageError::CorruptBlock {
            path: self.path.display().to_string(),
            grid: entry.grid_id,
            day: entry.day.days(),
            detail,
        })
    }
}

/// Bytes and block reads performed per kind since open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IoStats {
    pub weather_bytes_read: u64,
    pub weather_block_reads: u64,
    pub speed_bytes_read: u64,
    pub speed_block_reads: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindStats {
    pub data_bytes: u64,
    pub block_count: u64,
    pub record_count: u64,
    pub raw_bytes: u64,
}

impl KindStats {
    /// Raw-to-stored compression ratio, when both sides are known.
    pub fn ratio(&self) -> Option<f64> {
        (self.raw_bytes > 0 && self.data_bytes > 0)
            .then(|| self.raw_bytes as f64 / self.data_bytes as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    pub manifest_bytes: u64,
    pub weather: KindStats,
    pub speed: KindStats,
}

impl DatasetStats {
    pub fn total_stored_bytes(&self) -> u64 {
        self.manifest_bytes + self.weather.data_bytes + self.speed.data_bytes
    }

    pub fn total_raw_bytes(&self) -> u64 {
        self.weather.raw_bytes + self.speed.raw_bytes
    }

    pub fn overall_ratio(&self) -> Option<f64> {
        let raw = self.total_raw_bytes();
        let stored = self.total_stored_bytes();
        (raw > 0 && stored > 0).then(|| raw as f64 / stored as f64)
    }
}

/// Open dataset handle: manifest in memory, data files lazily read.
#[derive(Debug)]
pub struct Dataset {
    dir: PathBuf,
    manifest: DatasetManifest,
    manifest_bytes: u64,
    weather: Option<DataFile>,
    speed: Option<DataFile>,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Dataset, StorageError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let manifest = read_manifest_file(&manifest_path)?;
        let manifest_bytes = std::fs::metadata(&manifest_path)
            .map_err(|e| StorageError::io(&manifest_path, e))?
            .len();
        let open_kind = |kind: RecordKind, index: &[BlockEntry]| -> Result<Option<DataFile>, StorageError> {
            if index.is_empty() {
                return Ok(None);
            }
            let path = dir.join(kind.file_name());
            let file = File::open(&path).map_err(|e| StorageError::io(&path, e))?;
            Ok(Some(DataFile {
                path,
                file,
                header_checked: AtomicBool::new(false),
                kind_byte: kind.file_kind_byte(),
                bytes_read: AtomicU64::new(0),
                block_reads: AtomicU64::new(0),
            }))
        };
        let weather = open_kind(RecordKind::Weather, &manifest.weather_index)?;
        let speed = open_kind(RecordKind::Speed, &manifest.speed_index)?;
        Ok(Dataset { dir: dir.to_path_buf(), manifest, manifest_bytes, weather, speed })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    /// Materializes the county → grid hierarchy, with lazy-link
    /// presence flags derived from the block indexes.
    pub fn counties(&self) -> Vec<County> {
        let has_blocks = |index: &[BlockEntry], grid: u64| {
            let start = index.partition_point(|e| e.grid_id < grid);
            index.get(start).is_some_and(|e| e.grid_id == grid)
        };
        self.manifest
            .counties
            .iter()
            .map(|c| County {
                county_code: c.code.clone(),
                county_name: c.name.clone(),
                grids: self
                    .manifest
                    .grids
                    .iter()
                    .filter(|g| g.county_code == c.code)
                    .map(|g| Grid {
                        id: g.id,
                        lat: g.lat,
                        lon: g.lon,
                        has_weather: has_blocks(&self.manifest.weather_index, g.id),
                        has_speed: has_blocks(&self.manifest.speed_index, g.id),
                    })
                    .collect(),
            })
            .collect()
    }

    /// Decoded weather records for exactly one `(grid, day)`, sorted by
    /// time; an absent block yields an empty list. Costs one index
    /// probe and one block read.
    pub fn get_weather(&self, grid: u64, day: DayIndex) -> Result<Vec<WeatherRecord>, StorageError> {
        let Some(entry) = self.manifest.find_block(&self.manifest.weather_index, grid, day) else {
            return Ok(Vec::new());
        };
        let file = self.weather.as_ref().expect("index entries imply an open file");
        let payload = file.read_block(&entry)?;
        let records = block::decode_weather(&payload, day).map_err(|detail| {
            StorageError::CorruptBlock {
                path: file.path.display().to_string(),
                grid,
                day: day.days(),
                detail,
            }
        })?;
        if records.len() as u32 != entry.record_count {
            return Err(StorageError::CorruptBlock {
                path: file.path.display().to_string(),
                grid,
                day: day.days(),
                detail: format!(
                    "decoded {} records, index says {}",
                    records.len(),
                    entry.record_count
                ),
            });
        }
        Ok(records)
    }

    pub fn get_speed(&self, grid: u64, day: DayIndex) -> Result<Vec<SpeedRecord>, StorageError> {
        let Some(entry) = self.manifest.find_block(&self.manifest.speed_index, grid, day) else {
            return Ok(Vec::new());
        };
        let file = self.speed.as_ref().expect("index entries imply an open file");
        let payload = file.read_block(&entry)?;
        let records = block::decode_speed(&payload, day).map_err(|detail| {
            StorageError::CorruptBlock {
                path: file.path.display().to_string(),
                grid,
                day: day.days(),
                detail,
            }
        })?;
        if records.len() as u32 != entry.record_count {
            return Err(StorageError::CorruptBlock {
                path: file.path.display().to_string(),
                grid,
                day: day.days(),
                detail: format!(
                    "decoded {} records, index says {}",
                    records.len(),
                    entry.record_count
                ),
            });
        }
        Ok(records)
    }

    /// Days with weather blocks for a grid, ascending.
    pub fn weather_days(&self, grid: u64) -> Vec<DayIndex> {
        days_of(&self.manifest.weather_index, grid)
    }

    pub fn speed_days(&self, grid: u64) -> Vec<DayIndex> {
        days_of(&self.manifest.speed_index, grid)
    }

    pub fn io_stats(&self) -> IoStats {
        let read = |f: &Option<DataFile>| {
            f.as_ref()
                .map(|d| {
                    (d.bytes_read.load(Ordering::Relaxed), d.block_reads.load(Ordering::Relaxed))
                })
                .unwrap_or((0, 0))
        };
        let (wb, wr) = read(&self.weather);
        let (sb, sr) = read(&self.speed);
        IoStats {
            weather_bytes_read: wb,
            weather_block_reads: wr,
            speed_bytes_read: sb,
            speed_block_reads: sr,
        }
    }

    /// Size and count summary. `raw_override` replaces the raw byte
    /// figures recorded in the manifest.
    pub fn stats(&self, raw_override: Option<(u64, u64)>) -> DatasetStats {
        let (raw_w, raw_s) = raw_override
            .unwrap_or((self.manifest.raw_weather_bytes, self.manifest.raw_speed_bytes));
        let kind = |index: &[BlockEntry], file: &Option<DataFile>, raw: u64| KindStats {
            data_bytes: file
                .as_ref()
                .and_then(|f| std::fs::metadata(&f.path).ok())
                .map(|m| m.len())
                .unwrap_or(0),
            block_count: index.len() as u64,
            record_count: index.iter().map(|e| e.record_count as u64).sum(),
            raw_bytes: raw,
        };
        DatasetStats {
            manifest_bytes: self.manifest_bytes,
            weather: kind(&self.manifest.weather_index, &self.weather, raw_w),
            speed: kind(&self.manifest.speed_index, &self.speed, raw_s),
        }
    }
}

fn days_of(index: &[BlockEntry], grid: u64) -> Vec<DayIndex> {
    let start = index.partition_point(|e| e.grid_id < grid);
    index[start..]
        .iter()
        .take_while(|e| e.grid_id == grid)
        .map(|e| e.day)
        .collect()
}
