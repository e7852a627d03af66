//! Record block encoding: per-field streams with delta-encoded
//! timestamps, presence bitmaps plus zig-zag varint deltas of 2-decimal
//! fixed-point numerics, and per-block string dictionaries. The encoded
//! payload is then passed through the block codec.

use crate::domain::{DayIndex, SpeedRecord, WeatherRecord, SECONDS_PER_DAY};

use super::varint::{self, Cursor};
use super::SCALE;

/// Scales to 2-decimal fixed point. Values round-trip exactly when
/// they carry at most two decimals and |v| ≤ ~7·10¹³.
fn scale(v: f64) -> Result<i64, String> {
    if !v.is_finite() {
        return Err(format!("non-finite value {v}"));
    }
    let scaled = (v * SCALE).round();
    if scaled.abs() >= 9.0e15 {
        return Err(format!("value {v} out of fixed-point range"));
    }
    Ok(scaled as i64)
}

fn unscale(v: i64) -> f64 {
    v as f64 / SCALE
}

fn encode_times(out: &mut Vec<u8>, times: impl Iterator<Item = i64>, day: DayIndex) -> Result<(), String> {
    let day_start = day.epoch_seconds();
    let mut prev = day_start;
    for t in times {
        if t < prev {
            return Err("record times are not sorted".into());
        }
        if t - day_start >= SECONDS_PER_DAY {
            return Err(format!("time {t} outside day {day}"));
        }
        varint::write_u64(out, (t - prev) as u64);
        prev = t;
    }
    Ok(())
}

fn decode_times(c: &mut Cursor, count: usize, day: DayIndex) -> Result<Vec<i64>, String> {
    let day_start = day.epoch_seconds();
    let mut prev = day_start;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let delta = c.read_u64()?;
        prev = prev
            .checked_add(i64::try_from(delta).map_err(|_| "time delta overflow".to_string())?)
            .ok_or_else(|| "time delta overflow".to_string())?;
        if prev - day_start >= SECONDS_PER_DAY {
            return Err("decoded time outside its day".into());
        }
        out.push(prev);
    }
    Ok(out)
}

/// Presence bitmap (LSB-first) followed by deltas over present values.
fn encode_optional_column(
    out: &mut Vec<u8>,
    values: impl Iterator<Item = Option<f64>>,
    count: usize,
) -> Result<(), String> {
    let mut bitmap = vec![0u8; count.div_ceil(8)];
    let mut deltas = Vec::new();
    let mut prev: i64 = 0;
    for (i, v) in values.enumerate() {
        if let Some(v) = v {
            bitmap[i / 8] |= 1 << (i % 8);
            let s = scale(v)?;
            varint::write_i64(&mut deltas, s - prev);
            prev = s;
        }
    }
    out.extend_from_slice(&bitmap);
    out.extend_from_slice(&deltas);
    Ok(())
}

fn decode_optional_column(c: &mut Cursor, count: usize) -> Result<Vec<Option<f64>>, String> {
    let bitmap = c.read_bytes(count.div_ceil(8))?.to_vec();
    let mut out = Vec::with_capacity(count);
    let mut prev: i64 = 0;
    for i in 0..count {
        if bitmap[i / 8] & (1 << (i % 8)) != 0 {
            prev = prev
                .checked_add(c.read_i64()?)
                .ok_or_else(|| "numeric delta overflow".to_string())?;
            out.push(Some(unscale(prev)));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

fn encode_required_column(
    out: &mut Vec<u8>,
    values: impl Iterator<Item = f64>,
) -> Result<(), String> {
    let mut prev: i64 = 0;
    for v in values {
        let s = scale(v)?;
        varint::write_i64(out, s - prev);
        prev = s;
    }
    Ok(())
}

fn decode_required_column(c: &mut Cursor, count: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(count);
    let mut prev: i64 = 0;
    for _ in 0..count {
        prev = prev
            .checked_add(c.read_i64()?)
            .ok_or_else(|| "numeric delta overflow".to_string())?;
        out.push(unscale(prev));
    }
    Ok(out)
}

/// Dictionary in first-appearance order, then one index per record.
fn encode_string_column<'a>(out: &mut Vec<u8>, values: impl Iterator<Item = &'a str> + Clone) {
    let mut dict: Vec<&str> = Vec::new();
    let mut indexes = Vec::new();
    for v in values {
        let idx = match dict.iter().position(|d| *d == v) {
            Some(i) => i,
            None => {
                dict.push(v);
                dict.len() - 1
            }
        };
        indexes.push(idx as u64);
    }
    varint::write_u64(out, dict.len() as u64);
    for entry in dict {
        varint::write_str(out, entry);
    }
    for idx in indexes {
        varint::write_u64(out, idx);
    }
}

fn decode_string_column(c: &mut Cursor, count: usize) -> Result<Vec<String>, String> {
    let dict_len = c.read_u64()? as usize;
    if dict_len > count.max(1) {
        return Err("string dictionary larger than block".into());
    }
    let mut dict = Vec::with_capacity(dict_len);
    for _ in 0..dict_len {
        dict.push(c.read_str()?);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let idx = c.read_u64()? as usize;
        let entry = dict.get(idx).ok_or_else(|| "string index out of dictionary".to_string())?;
        out.push(entry.clone());
    }
    Ok(out)
}

pub fn encode_weather(records: &[WeatherRecord], day: DayIndex) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let n = records.len();
    varint::write_u64(&mut out, n as u64);
    encode_times(&mut out, records.iter().map(|r| r.time), day)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.tmpc), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.dwpc), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.smps), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.drct), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.vsby), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.roadtmpc), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.srad), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.snwd), n)?;
    encode_optional_column(&mut out, records.iter().map(|r| r.pcpn), n)?;
    encode_string_column(&mut out, records.iter().map(|r| r.wawa.as_str()));
    encode_string_column(&mut out, records.iter().map(|r| r.ptype.as_str()));
    Ok(out)
}

pub fn decode_weather(payload: &[u8], day: DayIndex) -> Result<Vec<WeatherRecord>, String> {
    let mut c = Cursor::new(payload);
    let n = c.read_u64()? as usize;
    if n > payload.len().saturating_mul(8).saturating_add(64) {
        return Err("record count implausibly large".into());
    }
    let times = decode_times(&mut c, n, day)?;
    let tmpc = decode_optional_column(&mut c, n)?;
    let dwpc = decode_optional_column(&mut c, n)?;
    let smps = decode_optional_column(&mut c, n)?;
    let drct = decode_optional_column(&mut c, n)?;
    let vsby = decode_optional_column(&mut c, n)?;
    let roadtmpc = decode_optional_column(&mut c, n)?;
    let srad = decode_optional_column(&mut c, n)?;
    let snwd = decode_optional_column(&mut c, n)?;
    let pcpn = decode_optional_column(&mut c, n)?;
    let wawa = decode_string_column(&mut c, n)?;
    let ptype = decode_string_column(&mut c, n)?;
    if c.remaining() != 0 {
        return Err(format!("{} trailing bytes after block payload", c.remaining()));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(WeatherRecord {
            tmpc: tmpc[i],
            wawa: wawa[i].clone(),
            ptype: ptype[i].clone(),
            dwpc: dwpc[i],
            smps: smps[i],
            drct: drct[i],
            vsby: vsby[i],
            roadtmpc: roadtmpc[i],
            srad: srad[i],
            snwd: snwd[i],
            pcpn: pcpn[i],
            time: times[i],
        });
    }
    Ok(out)
}

pub fn encode_speed(records: &[SpeedRecord], day: DayIndex) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let n = records.len();
    varint::write_u64(&mut out, n as u64);
    encode_times(&mut out, records.iter().map(|r| r.time), day)?;
    encode_required_column(&mut out, records.iter().map(|r| r.speed))?;
    encode_required_column(&mut out, records.iter().map(|r| r.reference))?;
    encode_string_column(&mut out, records.iter().map(|r| r.detectorcode.as_str()));
    encode_string_column(&mut out, records.iter().map(|r| r.vtype.as_str()));
    encode_string_column(&mut out, records.iter().map(|r| r.roadname.as_str()));
    Ok(out)
}

pub fn decode_speed(payload: &[u8], day: DayIndex) -> Result<Vec<SpeedRecord>, String> {
    let mut c = Cursor::new(payload);
    let n = c.read_u64()? as usize;
    if n > payload.len().saturating_mul(8).saturating_add(64) {
        return Err("record count implausibly large".into());
    }
    let times = decode_times(&mut c, n, day)?;
    let speed = decode_required_column(&mut c, n)?;
    let reference = decode_required_column(&mut c, n)?;
    let detectorcode = decode_string_column(&mut c, n)?;
    let vtype = decode_string_column(&mut c, n)?;
    let roadname = decode_string_column(&mut c, n)?;
    if c.remaining() != 0 {
        return Err(format!("{} trailing bytes after block payload", c.remaining()));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(SpeedRecord {
            detectorcode: detectorcode[i].clone(),
            vtype: vtype[i].clone(),
            speed: speed[i],
            reference: reference[i],
            time: times[i],
            roadname: roadname[i].clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day() -> DayIndex {
        DayIndex::new(17_297)
    }

    fn sample_weather(i: usize) -> WeatherRecord {
        WeatherRecord {
            tmpc: if i % 7 == 3 { None } else { Some(10.0 + i as f64 * 0.25) },
            wawa: if i % 5 == 0 { "WW.Y".into() } else { String::new() },
            ptype: if i % 3 == 0 { "rain".into() } else { String::new() },
            dwpc: Some(4.5),
            smps: Some(3.75 + (i % 4) as f64),
            drct: Some((i % 360) as f64),
            vsby: if i % 11 == 0 { None } else { Some(14.2) },
            roadtmpc: Some(12.01),
            srad: Some(451.25),
            snwd: Some(0.0),
            pcpn: if i % 2 == 0 { Some(0.25) } else { Some(0.0) },
            time: day().epoch_seconds() + (i as i64) * 300,
        }
    }

    #[test]
    fn weather_block_round_trips() {
        let records: Vec<_> = (0..288).map(sample_weather).collect();
        let payload = encode_weather(&records, day()).unwrap();
        let decoded = decode_weather(&payload, day()).unwrap();
        assert_eq!(decoded, records);
    }

    #[test]
    fn speed_block_round_trips() {
        let records: Vec<_> = (0..100)
            .map(|i| SpeedRecord {
                detectorcode: format!("D{:03}", i % 3),
                vtype: "passenger".into(),
                speed: 65.0 + (i % 10) as f64 * 0.5,
                reference: 65.0,
                time: day().epoch_seconds() + (i as i64) * 20,
                roadname: "I-35".into(),
            })
            .collect();
        let payload = encode_speed(&records, day()).unwrap();
        assert_eq!(decode_speed(&payload, day()).unwrap(), records);
    }

    #[test]
    fn empty_block_round_trips() {
        let payload = encode_weather(&[], day()).unwrap();
        assert_eq!(decode_weather(&payload, day()).unwrap(), vec![]);
    }

    #[test]
    fn unsorted_times_are_rejected() {
        let mut records: Vec<_> = (0..2).map(sample_weather).collect();
        records.swap(0, 1);
        assert!(encode_weather(&records, day()).unwrap_err().contains("not sorted"));
    }

    #[test]
    fn out_of_day_times_are_rejected() {
        let mut r = sample_weather(0);
        r.time = day().epoch_seconds() + SECONDS_PER_DAY;
        assert!(encode_weather(&[r], day()).is_err());
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut r = sample_weather(0);
        r.tmpc = Some(f64::NAN);
        assert!(encode_weather(&[r], day()).is_err());
    }

    #[test]
    fn negative_two_decimal_values_survive() {
        let mut r = sample_weather(0);
        r.tmpc = Some(-17.83);
        r.dwpc = Some(-0.01);
        let decoded = decode_weather(&encode_weather(&[r.clone()], day()).unwrap(), day()).unwrap();
        assert_eq!(decoded[0].tmpc, Some(-17.83));
        assert_eq!(decoded[0].dwpc, Some(-0.01));
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let records: Vec<_> = (0..10).map(sample_weather).collect();
        let payload = encode_weather(&records, day()).unwrap();
        assert!(decode_weather(&payload[..payload.len() - 3], day()).is_err());
    }

    #[test]
    fn trailing_garbage_is_an_error() {
        let records: Vec<_> = (0..4).map(sample_weather).collect();
        let mut payload = encode_weather(&records, day()).unwrap();
        payload.push(0);
        assert!(decode_weather(&payload, day()).unwrap_err().contains("trailing"));
    }
}
