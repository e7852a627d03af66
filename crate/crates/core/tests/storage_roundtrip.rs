//! End-to-end storage checks over real files: round trips, lazy reads,
//! fault injection, and fusion.

use std::collections::BTreeMap;
use std::fs;

use boat_core::domain::{DayIndex, SpeedRecord, WeatherRecord};
use boat_core::storage::{
    fuse_speed, Codec, CountyMeta, Dataset, DatasetWriter, GridMeta, StorageError, MANIFEST_FILE,
    SPEED_FILE, WEATHER_FILE,
};
use proptest::prelude::*;

fn day() -> DayIndex {
    DayIndex::new(17_297)
}

fn meta() -> (Vec<CountyMeta>, Vec<GridMeta>) {
    let counties = vec![
        CountyMeta { code: "077".into(), name: "Polk".into() },
        CountyMeta { code: "085".into(), name: "Story".into() },
    ];
    let grids = vec![
        GridMeta { id: 1, lat: 41.6, lon: -93.6, county_code: "077".into() },
        GridMeta { id: 2, lat: 41.7, lon: -93.5, county_code: "077".into() },
        GridMeta { id: 42, lat: 42.0, lon: -93.6, county_code: "085".into() },
    ];
    (counties, grids)
}

fn weather_record_on(d: DayIndex, i: usize) -> WeatherRecord {
    WeatherRecord {
        tmpc: Some(10.0 + i as f64),
        wawa: String::new(),
        ptype: String::new(),
        dwpc: Some(2.5),
        smps: Some(4.0),
        drct: Some(180.0),
        vsby: Some(16.0),
        roadtmpc: Some(12.0),
        srad: Some(300.0),
        snwd: Some(0.0),
        pcpn: Some(0.0),
        time: d.epoch_seconds() + i as i64 * 300,
    }
}

fn weather_record(i: usize) -> WeatherRecord {
    weather_record_on(day(), i)
}

fn speed_record(i: usize) -> SpeedRecord {
    SpeedRecord {
        detectorcode: "D001".into(),
        vtype: "passenger".into(),
        speed: 64.0 + (i % 5) as f64,
        reference: 65.0,
        time: day().epoch_seconds() + i as i64 * 20,
        roadname: "I-35".into(),
    }
}

fn build_sample(dir: &std::path::Path, codec: Codec) {
    let (counties, grids) = meta();
    let mut w = DatasetWriter::create(dir, counties, grids, codec).unwrap();
    let records: Vec<_> = (0..3).map(weather_record).collect();
    let next_day = DayIndex::new(day().days() + 1);
    let next_day_records: Vec<_> = (0..3).map(|i| weather_record_on(next_day, i)).collect();
    w.add_weather_block(1, day(), &records).unwrap();
    w.add_weather_block(2, day(), &records[..2]).unwrap();
    w.add_weather_block(2, next_day, &next_day_records).unwrap();
    let speeds: Vec<_> = (0..5).map(speed_record).collect();
    w.add_speed_block(1, day(), &speeds).unwrap();
    w.set_raw_bytes(1000, 500);
    w.finish().unwrap();
}

#[test]
fn write_then_open_round_trips_tables_and_records() {
    for codec in [Codec::Identity, Codec::Deflate] {
        let dir = tempfile::tempdir().unwrap();
        build_sample(dir.path(), codec);

        let ds = Dataset::open(dir.path()).unwrap();
        let counties = ds.counties();
        assert_eq!(counties.len(), 2);
        assert_eq!(counties[0].county_name, "Polk");
        assert_eq!(counties[0].grids.len(), 2);
        assert!(counties[0].grids[0].has_weather);
        assert!(counties[0].grids[0].has_speed);
        assert!(!counties[0].grids[1].has_speed);
        // Grid 42 never got records: both links absent.
        assert!(!counties[1].grids[0].has_weather);

        let records = ds.get_weather(1, day()).unwrap();
        assert_eq!(records, (0..3).map(weather_record).collect::<Vec<_>>());
        let speeds = ds.get_speed(1, day()).unwrap();
        assert_eq!(speeds, (0..5).map(speed_record).collect::<Vec<_>>());
    }
}

#[test]
fn absent_blocks_are_empty_lists() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let ds = Dataset::open(dir.path()).unwrap();
    assert!(ds.get_weather(42, day()).unwrap().is_empty());
    assert!(ds.get_weather(1, DayIndex::new(123)).unwrap().is_empty());
    assert!(ds.get_speed(2, day()).unwrap().is_empty());
    // Absent probes cost no I/O at all.
    assert_eq!(ds.io_stats().weather_bytes_read, 0);
    assert_eq!(ds.io_stats().speed_bytes_read, 0);
}

#[test]
fn each_get_reads_exactly_one_block() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let ds = Dataset::open(dir.path()).unwrap();
    assert_eq!(ds.io_stats().weather_block_reads, 0);
    ds.get_weather(1, day()).unwrap();
    assert_eq!(ds.io_stats().weather_block_reads, 1);
    ds.get_weather(2, day()).unwrap();
    assert_eq!(ds.io_stats().weather_block_reads, 2);
    // Speed side untouched so far.
    assert_eq!(ds.io_stats().speed_block_reads, 0);

    // Bytes read are bounded by the block size plus the one-time header.
    let stats = ds.stats(None);
    assert!(ds.io_stats().weather_bytes_read <= stats.weather.data_bytes);
}

#[test]
fn open_reads_no_record_blocks() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let ds = Dataset::open(dir.path()).unwrap();
    let io = ds.io_stats();
    assert_eq!(io.weather_bytes_read + io.speed_bytes_read, 0);
}

#[test]
fn wrong_magic_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let path = dir.path().join(MANIFEST_FILE);
    let mut bytes = fs::read(&path).unwrap();
    bytes[0..4].copy_from_slice(b"NOPE");
    fs::write(&path, bytes).unwrap();
    let err = Dataset::open(dir.path()).unwrap_err();
    assert!(matches!(err, StorageError::Format { .. }), "{err}");
}

#[test]
fn corrupt_manifest_checksum_detected() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let path = dir.path().join(MANIFEST_FILE);
    let mut bytes = fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0xff;
    fs::write(&path, bytes).unwrap();
    let err = Dataset::open(dir.path()).unwrap_err();
    assert!(err.to_string().contains("checksum"), "{err}");
}

#[test]
fn truncated_data_file_opens_but_fails_on_read() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let path = dir.path().join(WEATHER_FILE);
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();

    let ds = Dataset::open(dir.path()).expect("open is lazy; truncation surfaces on read");
    // The second grid's second day sits in the truncated tail.
    let err = ds.get_weather(2, DayIndex::new(day().days() + 1)).unwrap_err();
    assert!(matches!(err, StorageError::Io { .. }), "{err}");
}

#[test]
fn flipped_block_byte_fails_its_checksum() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let path = dir.path().join(WEATHER_FILE);
    let mut bytes = fs::read(&path).unwrap();
    bytes[25] ^= 0x01; // inside the first block's payload
    fs::write(&path, bytes).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    let err = ds.get_weather(1, day()).unwrap_err();
    assert!(matches!(err, StorageError::CorruptBlock { grid: 1, .. }), "{err}");
}

#[test]
fn out_of_order_blocks_rejected_at_write() {
    let dir = tempfile::tempdir().unwrap();
    let (counties, grids) = meta();
    let mut w = DatasetWriter::create(dir.path(), counties, grids, Codec::Identity).unwrap();
    w.add_weather_block(2, day(), &[weather_record(0)]).unwrap();
    let err = w.add_weather_block(1, day(), &[weather_record(0)]).unwrap_err();
    assert!(matches!(err, StorageError::OutOfOrder { .. }));
}

#[test]
fn unknown_grid_rejected_at_write() {
    let dir = tempfile::tempdir().unwrap();
    let (counties, grids) = meta();
    let mut w = DatasetWriter::create(dir.path(), counties, grids, Codec::Identity).unwrap();
    let err = w.add_weather_block(9999, day(), &[weather_record(0)]).unwrap_err();
    assert!(matches!(err, StorageError::UnknownGrid { grid: 9999 }));
}

#[test]
fn empty_dataset_is_valid_and_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let (counties, grids) = meta();
    DatasetWriter::create(dir.path(), counties, grids, Codec::Identity)
        .unwrap()
        .finish()
        .unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    let stats = ds.stats(None);
    assert_eq!(stats.weather.record_count + stats.speed.record_count, 0);
    assert_eq!(stats.weather.data_bytes + stats.speed.data_bytes, 0);
    assert!(stats.manifest_bytes > 0);
    assert!(!dir.path().join(WEATHER_FILE).exists());
}

#[test]
fn stats_report_counts_and_ratios() {
    let dir = tempfile::tempdir().unwrap();
    build_sample(dir.path(), Codec::Identity);
    let ds = Dataset::open(dir.path()).unwrap();
    let stats = ds.stats(None);
    assert_eq!(stats.weather.block_count, 3);
    assert_eq!(stats.weather.record_count, 8);
    assert_eq!(stats.speed.block_count, 1);
    assert_eq!(stats.speed.record_count, 5);
    assert_eq!(stats.weather.raw_bytes, 1000);
    let with_override = ds.stats(Some((2000, 500)));
    assert_eq!(with_override.weather.raw_bytes, 2000);
    assert!(with_override.weather.ratio().unwrap() > stats.weather.ratio().unwrap());
}

#[test]
fn fusion_leaves_weather_bytes_and_results_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let (counties, grids) = meta();
    let mut w = DatasetWriter::create(dir.path(), counties, grids, Codec::Deflate).unwrap();
    let records: Vec<_> = (0..10).map(weather_record).collect();
    w.add_weather_block(1, day(), &records).unwrap();
    w.add_weather_block(42, day(), &records[..4]).unwrap();
    w.set_raw_bytes(4321, 0);
    w.finish().unwrap();

    let weather_before = fs::read(dir.path().join(WEATHER_FILE)).unwrap();
    let query_before = {
        let ds = Dataset::open(dir.path()).unwrap();
        (ds.get_weather(1, day()).unwrap(), ds.get_weather(42, day()).unwrap())
    };

    let mut blocks = BTreeMap::new();
    blocks.insert((2u64, day()), (0..7).map(speed_record).collect::<Vec<_>>());
    fuse_speed(dir.path(), &blocks, 777, Codec::Deflate).unwrap();

    let weather_after = fs::read(dir.path().join(WEATHER_FILE)).unwrap();
    assert_eq!(weather_before, weather_after, "fusion must not rewrite weather bytes");

    let ds = Dataset::open(dir.path()).unwrap();
    assert_eq!(query_before.0, ds.get_weather(1, day()).unwrap());
    assert_eq!(query_before.1, ds.get_weather(42, day()).unwrap());
    assert_eq!(ds.get_speed(2, day()).unwrap().len(), 7);
    assert_eq!(ds.manifest().raw_weather_bytes, 4321);
    assert_eq!(ds.manifest().raw_speed_bytes, 777);

    // A second fusion attempt must refuse: datasets are write-once.
    let err = fuse_speed(dir.path(), &blocks, 0, Codec::Deflate).unwrap_err();
    assert!(matches!(err, StorageError::KindExists("speed")));
    assert!(dir.path().join(SPEED_FILE).exists());
}

#[test]
fn index_probes_find_every_present_key_and_reject_absent_ones() {
    let dir = tempfile::tempdir().unwrap();
    let counties = vec![CountyMeta { code: "001".into(), name: "Adair".into() }];
    let grids: Vec<_> = (0..40u64)
        .map(|id| GridMeta { id, lat: 41.0, lon: -94.0, county_code: "001".into() })
        .collect();
    let mut w = DatasetWriter::create(dir.path(), counties, grids, Codec::Identity).unwrap();
    let mut present = Vec::new();
    for grid in (0..40u64).step_by(3) {
        for d in 0..4 {
            if (grid + d as u64) % 2 == 0 {
                let day = DayIndex::new(17_297 + d);
                w.add_weather_block(grid, day, &[weather_record_on(day, 0)]).unwrap();
                present.push((grid, day));
            }
        }
    }
    w.finish().unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    for (grid, day) in &present {
        assert_eq!(ds.get_weather(*grid, *day).unwrap().len(), 1, "({grid}, {day:?})");
    }
    let mut absent_checked = 0;
    for grid in 0..50u64 {
        for d in 0..25 {
            let key = (grid, DayIndex::new(17_297 + d));
            if !present.contains(&key) {
                assert!(ds.get_weather(key.0, key.1).unwrap().is_empty());
                absent_checked += 1;
            }
        }
    }
    assert!(absent_checked >= 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Lossless round trip for random two-decimal records through a
    /// real on-disk dataset.
    #[test]
    fn random_records_round_trip(
        tmpc_cents in proptest::collection::vec(proptest::option::of(-4000i64..4000), 1..80),
        speeds_cents in proptest::collection::vec(0i64..12000, 1..80),
        gaps in proptest::collection::vec(0i64..500, 0..80),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let counties = vec![CountyMeta { code: "001".into(), name: "Adair".into() }];
        let grids = vec![GridMeta { id: 7, lat: 41.0, lon: -94.0, county_code: "001".into() }];

        let mut t = day().epoch_seconds();
        let weather: Vec<WeatherRecord> = tmpc_cents
            .iter()
            .enumerate()
            .map(|(i, cents)| {
                t += gaps.get(i).copied().unwrap_or(1).min(200);
                let mut r = weather_record(0);
                r.time = t;
                r.tmpc = cents.map(|c| c as f64 / 100.0);
                r.pcpn = Some((i as f64 * 0.07 * 100.0).round() / 100.0);
                r
            })
            .collect();
        let mut ts = day().epoch_seconds();
        let speed: Vec<SpeedRecord> = speeds_cents
            .iter()
            .map(|cents| {
                ts += 20;
                let mut r = speed_record(0);
                r.time = ts;
                r.speed = *cents as f64 / 100.0;
                r
            })
            .collect();

        let mut w = DatasetWriter::create(dir.path(), counties, grids, Codec::Deflate).unwrap();
        w.add_weather_block(7, day(), &weather).unwrap();
        w.add_speed_block(7, day(), &speed).unwrap();
        w.finish().unwrap();

        let ds = Dataset::open(dir.path()).unwrap();
        prop_assert_eq!(ds.get_weather(7, day()).unwrap(), weather);
        prop_assert_eq!(ds.get_speed(7, day()).unwrap(), speed);
    }
}
