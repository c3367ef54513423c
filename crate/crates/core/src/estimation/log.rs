//! Tick event log: one row per order book event with the Level-I state after it.
//!
//! ```text
//! timestamp,side,kind,bid_queue_after,ask_queue_after,bid_price_after
//! 0.0012,ask,limit,4,6,100.00
//! ```
//!
//! Input may be gzip-compressed; compression is detected from the magic bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EventKind, Side};

pub const LOG_HEADER: [&str; 6] = [
    "timestamp",
    "side",
    "kind",
    "bid_queue_after",
    "ask_queue_after",
    "bid_price_after",
];

/// Fraction of malformed rows above which parsing aborts.
pub const MAX_MALFORMED_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub timestamp: f64,
    pub side: Side,
    pub kind: EventKind,
    pub bid_queue_after: u32,
    pub ask_queue_after: u32,
    pub bid_price_after: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Shares per batch; raw queue sizes are divided by this and rounded.
    pub batch_size: u32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { batch_size: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MalformedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
    pub malformed: Vec<MalformedRow>,
}

fn rescale(q: u32, batch: u32) -> u32 {
    if batch <= 1 {
        q
    } else {
        (q + batch / 2) / batch
    }
}

/// Parses an event log from any reader, transparently un-gzipping. Lines
/// starting with `#` are comments.
pub fn parse_event_log<R: Read>(reader: R, opts: ParseOptions) -> Result<EventLog> {
    if opts.batch_size == 0 {
        return Err(Error::Domain("batch size must be >= 1".into()));
    }
    let mut buffered = BufReader::new(reader);
    let is_gzip = buffered.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    let source: Box<dyn Read> = if is_gzip {
        Box::new(MultiGzDecoder::new(buffered))
    } else {
        Box::new(buffered)
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(source);

    let mut log = EventLog::default();
    let mut total = 0usize;
    let mut last_ts = f64::NEG_INFINITY;
    for row in rdr.records() {
        let row = row?;
        total += 1;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(total + 1);
        match row.deserialize::<EventRecord>(None) {
            Ok(mut rec) => {
                if !rec.timestamp.is_finite() || !rec.bid_price_after.is_finite() {
                    log.malformed.push(MalformedRow {
                        line,
                        reason: "non-finite number".into(),
                    });
                } else if rec.timestamp < last_ts {
                    log.malformed.push(MalformedRow {
                        line,
                        reason: format!("timestamp {} precedes {}", rec.timestamp, last_ts),
                    });
                } else {
                    last_ts = rec.timestamp;
                    rec.bid_queue_after = rescale(rec.bid_queue_after, opts.batch_size);
                    rec.ask_queue_after = rescale(rec.ask_queue_after, opts.batch_size);
                    log.records.push(rec);
                }
            }
            Err(e) => log.malformed.push(MalformedRow {
                line,
                reason: e.to_string(),
            }),
        }
    }
    if total > 0 && log.malformed.len() as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        let first = &log.malformed[0];
        return Err(Error::MalformedLog {
            bad: log.malformed.len(),
            total,
            first_line: first.line,
            first_reason: first.reason.clone(),
        });
    }
    for bad in &log.malformed {
        log::warn!("skipping malformed row at line {}: {}", bad.line, bad.reason);
    }
    Ok(log)
}

pub fn read_event_log_file(path: &Path, opts: ParseOptions) -> Result<EventLog> {
    parse_event_log(File::open(path)?, opts)
}

pub fn write_event_log<W: Write>(records: &[EventRecord], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(LOG_HEADER)?;
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;

    const FIXTURE: &str = "timestamp,side,kind,bid_queue_after,ask_queue_after,bid_price_after
0.5,bid,limit,3,2,100.0
0.75,ask,market,3,1,100.0
1.25,ask,cancel,4,6,100.01
";

    #[test]
    fn empty_input() {
        let log = parse_event_log("".as_bytes(), ParseOptions::default()).unwrap();
        assert!(log.records.is_empty());
        let log = parse_event_log(FIXTURE.lines().next().unwrap().as_bytes(), ParseOptions::default()).unwrap();
        assert!(log.records.is_empty());
    }

    #[test]
    fn fixture_fields() {
        let log = parse_event_log(FIXTURE.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(log.records.len(), 3);
        assert_eq!(
            log.records[2],
            EventRecord {
                timestamp: 1.25,
                side: Side::Ask,
                kind: EventKind::Cancel,
                bid_queue_after: 4,
                ask_queue_after: 6,
                bid_price_after: 100.01,
            }
        );
        let mut buf = Vec::new();
        write_event_log(&log.records, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), FIXTURE.replace("100.0\n", "100.0\n"));
    }

    #[test]
    fn gzip_input() {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(FIXTURE.as_bytes()).unwrap();
        let bytes = enc.finish().unwrap();
        let log = parse_event_log(bytes.as_slice(), ParseOptions::default()).unwrap();
        assert_eq!(log.records.len(), 3);
    }

    #[test]
    fn batch_rescale() {
        let text = "timestamp,side,kind,bid_queue_after,ask_queue_after,bid_price_after\n0,bid,limit,250,149,1\n";
        let log = parse_event_log(text.as_bytes(), ParseOptions { batch_size: 100 }).unwrap();
        assert_eq!((log.records[0].bid_queue_after, log.records[0].ask_queue_after), (3, 1));
    }

    #[test]
    fn malformed_rows() {
        let mut text = String::from("timestamp,side,kind,bid_queue_after,ask_queue_after,bid_price_after\n");
        for i in 0..300 {
            text.push_str(&format!("{i},bid,limit,1,1,1\n"));
        }
        text.push_str("301,middle,limit,1,1,1\n");
        let log = parse_event_log(text.as_bytes(), ParseOptions::default()).unwrap();
        assert_eq!(log.records.len(), 300);
        assert_eq!(log.malformed.len(), 1);
        assert_eq!(log.malformed[0].line, 302);

        text.push_str("1.0,bid,limit,1,1,1\n");
        text.push_str("302,bid,limit,x,1,1\n");
        text.push_str("303,bid,limit,1,1\n");
        match parse_event_log(text.as_bytes(), ParseOptions::default()) {
            Err(Error::MalformedLog { bad, total, first_line, .. }) => {
                assert_eq!((bad, total, first_line), (4, 304, 302));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
