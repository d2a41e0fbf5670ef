//! Timeline exports: CSV and the binary snapshot used by the service cache.
//!
//! Binary layout (all integers little-endian):
//!
//! | offset | size | field                                          |
//! |--------|------|------------------------------------------------|
//! | 0      | 4    | magic `CTLN`                                   |
//! | 4      | 2    | format version, `1`                            |
//! | 6      | 2    | reserved, zero                                 |
//! | 8      | 4    | video id length `N` in bytes                   |
//! | 12     | N    | video id, UTF-8                                |
//! | +0     | 4    | `computed_at`, days since 1970-01-01 (i32)     |
//! | +4     | 8    | `event_horizon`, ms since the Unix epoch (i64) |
//! | +12    | 4    | bin count `B`                                  |
//! | +16    | 8·B  | raw scores, f64                                |
//! | ...    | 8·B  | normalized scores, f64                         |

use std::io::Write;
use std::path::Path;

use chrono::{DateTime, NaiveDate, TimeDelta};

use crate::error::{CoreError, Result};
use crate::model::BinScoreTimeline;

pub const MAGIC: &[u8; 4] = b"CTLN";
pub const VERSION: u16 = 1;

fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("valid date")
}

pub fn encode(t: &BinScoreTimeline) -> Vec<u8> {
    let id = t.video_id.as_bytes();
    let bins = t.raw.len();
    let mut out = Vec::with_capacity(32 + id.len() + 16 * bins);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    out.extend_from_slice(&(id.len() as u32).to_le_bytes());
    out.extend_from_slice(id);
    let days = (t.computed_at - epoch()).num_days() as i32;
    out.extend_from_slice(&days.to_le_bytes());
    out.extend_from_slice(&t.event_horizon.timestamp_millis().to_le_bytes());
    out.extend_from_slice(&(bins as u32).to_le_bytes());
    for v in t.raw.iter().chain(&t.normalized) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| CoreError::Snapshot(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}

pub fn decode(buf: &[u8]) -> Result<BinScoreTimeline> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(CoreError::Snapshot("bad magic".into()));
    }
    let version = u16::from_le_bytes(c.array()?);
    if version != VERSION {
        return Err(CoreError::Snapshot(format!("unsupported version {version}")));
    }
    c.take(2)?;
    let id_len = u32::from_le_bytes(c.array()?) as usize;
    let video_id = std::str::from_utf8(c.take(id_len)?)
        .map_err(|e| CoreError::Snapshot(e.to_string()))?
        .to_string();
    let days = i32::from_le_bytes(c.array()?);
    let computed_at = epoch()
        .checked_add_signed(TimeDelta::days(i64::from(days)))
        .ok_or_else(|| CoreError::Snapshot("computed_at out of range".into()))?;
    let horizon_ms = i64::from_le_bytes(c.array()?);
    let event_horizon = DateTime::from_timestamp_millis(horizon_ms)
        .ok_or_else(|| CoreError::Snapshot("event_horizon out of range".into()))?;
    let bins = u32::from_le_bytes(c.array()?) as usize;
    let mut read_f64s = |n: usize| -> Result<Vec<f64>> {
        (0..n).map(|_| Ok(f64::from_le_bytes(c.array()?))).collect()
    };
    let raw = read_f64s(bins)?;
    let normalized = read_f64s(bins)?;
    if c.pos != buf.len() {
        return Err(CoreError::Snapshot("trailing bytes".into()));
    }
    Ok(BinScoreTimeline {
        video_id,
        raw,
        normalized,
        computed_at,
        event_horizon,
    })
}

/// Writes a snapshot via a temporary file and rename, so readers see either
/// the old file or the new one.
pub fn write_atomic(path: &Path, t: &BinScoreTimeline) -> Result<()> {
    write_bytes_atomic(path, &encode(t))
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<BinScoreTimeline> {
    decode(&std::fs::read(path)?)
}

/// `bin_index,raw,normalized`, one row per second.
pub fn write_csv<W: Write>(mut w: W, t: &BinScoreTimeline) -> Result<()> {
    writeln!(w, "bin_index,raw,normalized")?;
    for (i, (r, n)) in t.raw.iter().zip(&t.normalized).enumerate() {
        writeln!(w, "{i},{r},{n}")?;
    }
    w.flush()?;
    Ok(())
}
