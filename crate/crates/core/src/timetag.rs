//! Time-tagged click records: the TTG2 binary format, its CSV twin, and
//! conversion between tags and windowed click series.
//!
//! TTG2 layout, all little-endian, no padding:
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `b"TTG2"`                        |
//! | 4      | 4    | version (u32, must be 1)               |
//! | 8      | 8    | resolution, picoseconds per tick (u64) |
//! | 16     | 4    | channel count (u32)                    |
//! | 20     | 9·k  | records: timestamp ticks (u64), channel (u8) |

use std::fmt::Write as _;
use std::io::{self, Write};

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::{WindowGrid, WindowWeights};
use crate::hbt::{ClickSeries, SimError};

pub const MAGIC: [u8; 4] = *b"TTG2";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
pub const RECORD_LEN: usize = 9;
pub const CSV_HEADER: &str = "timestamp_ps,channel";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeTagRecord {
    pub timestamp: u64,
    pub channel: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeTagHeader {
    pub resolution_ps: u64,
    pub channel_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    BadMagic,
    UnsupportedVersion(u32),
    TruncatedHeader,
    TruncatedRecord,
    TimestampRegression { previous: u64, found: u64 },
    ChannelOutOfRange { channel: u8, channel_count: u32 },
    ZeroResolution,
}

/// A malformed TTG2 stream, addressed by byte offset.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("{kind:?} at byte offset {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CsvErrorKind {
    MissingHeader,
    BadHeader(String),
    FieldCount(usize),
    BadTimestamp(String),
    BadChannel(String),
    TimestampRegression { previous: u64, found: u64 },
}

/// A malformed CSV document, addressed by 1-based line number.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{kind:?} on line {line}")]
pub struct CsvError {
    pub kind: CsvErrorKind,
    pub line: usize,
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("record {index} is earlier than its predecessor")]
    Unsorted { index: usize },
    #[error("record {index} uses channel {channel} but the header declares {channel_count}")]
    ChannelOverflow {
        index: usize,
        channel: u8,
        channel_count: u32,
    },
    #[error("resolution must be at least 1 ps")]
    ZeroResolution,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BinError {
    #[error("record {index} at {time_ps} ps lies beyond the {span_ps} ps grid")]
    BeyondGrid { index: usize, time_ps: f64, span_ps: f64 },
    #[error("record {index} uses unmapped channel {channel}")]
    UnmappedChannel { index: usize, channel: u8 },
    #[error("weights were computed for {weights} windows, grid has {grid}")]
    GridMismatch { weights: u64, grid: u64 },
    #[error("window of {window_ps} ps is not a whole number of {resolution_ps} ps ticks")]
    TickMismatch { window_ps: f64, resolution_ps: u64 },
    #[error("{0} detectors exceed the 256 available channels")]
    TooManyChannels(usize),
    #[error(transparent)]
    Series(#[from] SimError),
}

/// What to do with tags past the end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutOfRange {
    #[default]
    Error,
    Discard,
}

fn check_records(records: &[TimeTagRecord], channel_count: u32) -> Result<(), WriteError> {
    for (index, pair) in records.windows(2).enumerate() {
        if pair[1].timestamp < pair[0].timestamp {
            return Err(WriteError::Unsorted { index: index + 1 });
        }
    }
    if let Some((index, r)) = records
        .iter()
        .enumerate()
        .find(|(_, r)| r.channel as u32 >= channel_count)
    {
        return Err(WriteError::ChannelOverflow {
            index,
            channel: r.channel,
            channel_count,
        });
    }
    Ok(())
}

/// Writes a TTG2 stream and returns the number of bytes written.
pub fn write_binary<W: Write>(
    records: &[TimeTagRecord],
    header: &TimeTagHeader,
    mut sink: W,
) -> Result<usize, WriteError> {
    if header.resolution_ps == 0 {
        return Err(WriteError::ZeroResolution);
    }
    check_records(records, header.channel_count)?;
    let mut buf = Vec::with_capacity(HEADER_LEN + RECORD_LEN * records.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&header.resolution_ps.to_le_bytes());
    buf.extend_from_slice(&header.channel_count.to_le_bytes());
    for r in records {
        buf.extend_from_slice(&r.timestamp.to_le_bytes());
        buf.push(r.channel);
    }
    sink.write_all(&buf)?;
    Ok(buf.len())
}

pub fn parse_binary(bytes: &[u8]) -> Result<(TimeTagHeader, Vec<TimeTagRecord>), ParseError> {
    let err = |kind, offset| ParseError { kind, offset };
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(err(ParseErrorKind::BadMagic, 0));
    }
    if bytes.len() < HEADER_LEN {
        return Err(err(ParseErrorKind::TruncatedHeader, bytes.len().min(4)));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(err(ParseErrorKind::UnsupportedVersion(version), 4));
    }
    let resolution_ps = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if resolution_ps == 0 {
        return Err(err(ParseErrorKind::ZeroResolution, 8));
    }
    let channel_count = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let header = TimeTagHeader {
        resolution_ps,
        channel_count,
    };

    let body = &bytes[HEADER_LEN..];
    let whole = body.len() / RECORD_LEN;
    if !body.len().is_multiple_of(RECORD_LEN) {
        return Err(err(
            ParseErrorKind::TruncatedRecord,
            HEADER_LEN + whole * RECORD_LEN,
        ));
    }
    let mut records = Vec::with_capacity(whole);
    let mut previous = 0u64;
    for (i, chunk) in body.chunks_exact(RECORD_LEN).enumerate() {
        let offset = HEADER_LEN + i * RECORD_LEN;
        let timestamp = u64::from_le_bytes(chunk[..8].try_into().unwrap());
        let channel = chunk[8];
        if timestamp < previous {
            return Err(err(
                ParseErrorKind::TimestampRegression {
                    previous,
                    found: timestamp,
                },
                offset,
            ));
        }
        if channel as u32 >= channel_count {
            return Err(err(
                ParseErrorKind::ChannelOutOfRange {
                    channel,
                    channel_count,
                },
                offset + 8,
            ));
        }
        previous = timestamp;
        records.push(TimeTagRecord { timestamp, channel });
    }
    Ok((header, records))
}

/// Parses `timestamp_ps,channel` lines. Timestamps are in picoseconds;
/// blank lines are skipped.
pub fn parse_csv(text: &str) -> Result<Vec<TimeTagRecord>, CsvError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let header = lines.find(|(_, l)| !l.trim().is_empty());
    match header {
        None => {
            return Err(CsvError {
                kind: CsvErrorKind::MissingHeader,
                line: 1,
            })
        }
        Some((line, h)) if h.trim() != CSV_HEADER => {
            return Err(CsvError {
                kind: CsvErrorKind::BadHeader(h.to_string()),
                line,
            })
        }
        Some(_) => {}
    }
    let mut records = Vec::new();
    let mut previous = 0u64;
    for (line, text) in lines {
        if text.trim().is_empty() {
            continue;
        }
        let err = |kind| CsvError { kind, line };
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(err(CsvErrorKind::FieldCount(fields.len())));
        }
        let timestamp: u64 = fields[0]
            .parse()
            .map_err(|_| err(CsvErrorKind::BadTimestamp(fields[0].to_string())))?;
        let channel: u8 = fields[1]
            .parse()
            .map_err(|_| err(CsvErrorKind::BadChannel(fields[1].to_string())))?;
        if timestamp < previous {
            return Err(err(CsvErrorKind::TimestampRegression {
                previous,
                found: timestamp,
            }));
        }
        previous = timestamp;
        records.push(TimeTagRecord { timestamp, channel });
    }
    Ok(records)
}

/// CSV rendering of records whose timestamps are ticks of `resolution_ps`.
pub fn write_csv(records: &[TimeTagRecord], resolution_ps: u64) -> String {
    let mut out = String::with_capacity(24 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{}", r.timestamp * resolution_ps, r.channel);
    }
    out
}

/// Converts picosecond CSV records to ticks of `resolution_ps`.
/// Timestamps that are not whole ticks are rejected with their record index.
pub fn ps_to_ticks(records: &[TimeTagRecord], resolution_ps: u64) -> Result<Vec<TimeTagRecord>, usize> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if resolution_ps == 0 || r.timestamp % resolution_ps != 0 {
                Err(i)
            } else {
                Ok(TimeTagRecord {
                    timestamp: r.timestamp / resolution_ps,
                    channel: r.channel,
                })
            }
        })
        .collect()
}

/// Whole ticks per window, when the window is an integer multiple of the tick.
fn window_ticks(grid: &WindowGrid, resolution_ps: u64) -> Option<u64> {
    let ticks = grid.window_duration() / resolution_ps as f64;
    (ticks >= 1.0 && ticks.fract() == 0.0 && ticks < 2f64.powi(63)).then_some(ticks as u64)
}

/// Collapses time tags onto the window grid.
///
/// Detector `d` listens on channel `channel_map[d]`. A tag at `t` ticks
/// falls in window `floor(t * resolution / window_duration)`; a tag on a
/// window boundary belongs to the later window. Repeated tags of one
/// detector inside one window register a single click and bump the
/// collision count. Returns the series and the number of discarded tags.
pub fn bin_to_windows(
    records: &[TimeTagRecord],
    resolution_ps: u64,
    weights: &WindowWeights,
    channel_map: &[u8],
    out_of_range: OutOfRange,
) -> Result<(ClickSeries, u64), BinError> {
    let grid = weights.grid();
    let n = grid.window_count();
    if weights.window_count() != n {
        return Err(BinError::GridMismatch {
            weights: weights.window_count(),
            grid: n,
        });
    }
    let exact_ticks = window_ticks(grid, resolution_ps);
    let exact_ps = {
        let w = grid.window_duration();
        (w.fract() == 0.0 && w < 2f64.powi(63)).then_some(w as u64)
    };
    let mut lookup = [None; 256];
    for (d, &ch) in channel_map.iter().enumerate() {
        lookup[ch as usize] = Some(d);
    }
    let mut clicks: Vec<BitVec<u64, Lsb0>> = (0..channel_map.len())
        .map(|_| BitVec::repeat(false, n as usize))
        .collect();
    let mut collisions = 0u64;
    let mut discarded = 0u64;
    for (index, r) in records.iter().enumerate() {
        let Some(d) = lookup[r.channel as usize] else {
            return Err(BinError::UnmappedChannel {
                index,
                channel: r.channel,
            });
        };
        let window = match (exact_ticks, exact_ps) {
            (Some(t), _) => r.timestamp / t,
            (None, Some(w)) => ((r.timestamp as u128 * resolution_ps as u128) / w as u128) as u64,
            _ => ((r.timestamp as f64 * resolution_ps as f64) / grid.window_duration()).floor() as u64,
        };
        if window >= n {
            match out_of_range {
                OutOfRange::Discard => {
                    discarded += 1;
                    continue;
                }
                OutOfRange::Error => {
                    return Err(BinError::BeyondGrid {
                        index,
                        time_ps: r.timestamp as f64 * resolution_ps as f64,
                        span_ps: grid.span(),
                    })
                }
            }
        }
        let mut bit = clicks[d].get_mut(window as usize).expect("window < n");
        if *bit {
            collisions += 1;
        } else {
            *bit = true;
        }
    }
    let series = ClickSeries::new(clicks, weights.mask().to_bitvec(), 0, collisions)?;
    Ok((series, discarded))
}

/// One tag per click, stamped at the start of its window on channel
/// `d` for detector `d`, sorted by time then channel.
pub fn export_timetags(
    series: &ClickSeries,
    grid: &WindowGrid,
    resolution_ps: u64,
) -> Result<(TimeTagHeader, Vec<TimeTagRecord>), BinError> {
    let ticks = window_ticks(grid, resolution_ps).ok_or(BinError::TickMismatch {
        window_ps: grid.window_duration(),
        resolution_ps,
    })?;
    let detectors = series.detector_count();
    if detectors > 256 {
        return Err(BinError::TooManyChannels(detectors));
    }
    let mut records: Vec<TimeTagRecord> = series
        .detectors()
        .enumerate()
        .flat_map(|(d, bits)| {
            bits.iter_ones().map(move |w| TimeTagRecord {
                timestamp: w as u64 * ticks,
                channel: d as u8,
            })
        })
        .collect();
    records.sort_unstable();
    Ok((
        TimeTagHeader {
            resolution_ps,
            channel_count: detectors as u32,
        },
        records,
    ))
}
