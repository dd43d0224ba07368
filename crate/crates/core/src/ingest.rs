//! Interaction log parsing and streaming.
//!
//! A log is UTF-8 text with one impression per line and exactly five
//! comma-separated columns:
//!
//! ```text
//! user_id,item_id,timestamp,clicked,dwell_time_s
//! u1,i9,1700000000,1,42.5
//! u1,i7,1700000031,0,0
//! ```
//!
//! `clicked` is `0` or `1`; `dwell_time_s` is a decimal with `.` as the
//! separator and must be `0` on unclicked rows. Ids are opaque tokens and may
//! not contain commas.
//!
//! Canonical formatting (what [`format_event`] writes): dwell times use the
//! shortest decimal that round-trips through `f64` with no exponent, so
//! `42.0` is written as `42` and `0.125` as `0.125`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, ParseReason, Result};

pub const LOG_HEADER: &str = "user_id,item_id,timestamp,clicked,dwell_time_s";

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionEvent {
    pub user_id: String,
    pub item_id: String,
    pub timestamp: i64,
    pub clicked: bool,
    pub dwell_time_s: f64,
}

impl InteractionEvent {
    pub fn click(user: &str, item: &str, timestamp: i64, dwell_time_s: f64) -> Self {
        InteractionEvent {
            user_id: user.to_string(),
            item_id: item.to_string(),
            timestamp,
            clicked: true,
            dwell_time_s,
        }
    }

    pub fn impression(user: &str, item: &str, timestamp: i64) -> Self {
        InteractionEvent {
            user_id: user.to_string(),
            item_id: item.to_string(),
            timestamp,
            clicked: false,
            dwell_time_s: 0.0,
        }
    }
}

/// Which pass over the log a scan belongs to. Both passes read the same
/// file; the tag only shows up in scan summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pass {
    Stats,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanOptions {
    pub has_header: bool,
    /// Bad lines tolerated before the scan fails. 0 means strict.
    pub bad_line_budget: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            has_header: false,
            bad_line_budget: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScanOutput {
    pub pass: Pass,
    pub events: Vec<InteractionEvent>,
    pub skipped: usize,
}

impl ScanOutput {
    pub fn count(&self) -> usize {
        self.events.len()
    }
}

pub(crate) fn split_fields(record: &str) -> Vec<&str> {
    record.trim_end_matches(['\r', '\n']).split(',').collect()
}

/// Parses one log record. `line` is the 1-based line number used in errors.
pub fn parse_event(record: &str, line: usize) -> Result<InteractionEvent> {
    let fields = split_fields(record);
    if fields.len() != 5 {
        return Err(Error::Parse {
            line,
            reason: ParseReason::FieldCount(fields.len()),
        });
    }
    parse_fields(&fields, line)
}

pub(crate) fn parse_fields(fields: &[&str], line: usize) -> Result<InteractionEvent> {
    let fail = |reason| Error::Parse { line, reason };
    let user_id = fields[0];
    let item_id = fields[1];
    if user_id.is_empty() {
        return Err(fail(ParseReason::EmptyToken("user_id")));
    }
    if item_id.is_empty() {
        return Err(fail(ParseReason::EmptyToken("item_id")));
    }
    let timestamp: i64 = fields[2]
        .parse()
        .ok()
        .filter(|ts| *ts > 0)
        .ok_or_else(|| fail(ParseReason::Timestamp(fields[2].to_string())))?;
    let clicked = match fields[3] {
        "1" => true,
        "0" => false,
        other => return Err(fail(ParseReason::Clicked(other.to_string()))),
    };
    let dwell: f64 = fields[4]
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| fail(ParseReason::DwellNotNumeric(fields[4].to_string())))?;
    if dwell < 0.0 {
        return Err(fail(ParseReason::NegativeDwell(dwell)));
    }
    // -0.0 normalizes to 0.0
    let dwell = dwell + 0.0;
    if !clicked && dwell > 0.0 {
        return Err(fail(ParseReason::DwellWithoutClick(dwell)));
    }
    Ok(InteractionEvent {
        user_id: user_id.to_string(),
        item_id: item_id.to_string(),
        timestamp,
        clicked,
        dwell_time_s: dwell,
    })
}

pub fn format_dwell(t: f64) -> String {
    format!("{t}")
}

/// Canonical record for `e`, without a trailing newline.
pub fn format_event(e: &InteractionEvent) -> String {
    format!(
        "{},{},{},{},{}",
        e.user_id,
        e.item_id,
        e.timestamp,
        u8::from(e.clicked),
        format_dwell(e.dwell_time_s)
    )
}

pub fn write_events<'a, W: Write>(
    mut out: W,
    events: impl IntoIterator<Item = &'a InteractionEvent>,
    header: bool,
) -> Result<()> {
    if header {
        writeln!(out, "{LOG_HEADER}")?;
    }
    for e in events {
        writeln!(out, "{}", format_event(e))?;
    }
    out.flush()?;
    Ok(())
}

/// Streaming reader over a log. Yields events in file order and skips bad
/// lines until the budget is spent, at which point it yields the error.
pub struct EventReader<R> {
    lines: std::io::Lines<R>,
    opts: ScanOptions,
    line_no: usize,
    skipped: usize,
    first_bad: Option<usize>,
    done: bool,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(reader: R, opts: ScanOptions) -> Self {
        EventReader {
            lines: reader.lines(),
            opts,
            line_no: 0,
            skipped: 0,
            first_bad: None,
            done: false,
        }
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<InteractionEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            if self.line_no == 1 && self.opts.has_header {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            match parse_event(&line, self.line_no) {
                Ok(e) => return Some(Ok(e)),
                Err(err) => {
                    self.skipped += 1;
                    self.first_bad.get_or_insert(self.line_no);
                    if self.skipped > self.opts.bad_line_budget {
                        self.done = true;
                        if self.opts.bad_line_budget == 0 {
                            return Some(Err(err));
                        }
                        return Some(Err(Error::BadLineBudget {
                            skipped: self.skipped,
                            budget: self.opts.bad_line_budget,
                            first_line: self.first_bad.unwrap_or(self.line_no),
                        }));
                    }
                }
            }
        }
    }
}

pub fn open_log(path: &Path, opts: ScanOptions) -> Result<EventReader<BufReader<File>>> {
    let file = File::open(path)?;
    Ok(EventReader::new(BufReader::new(file), opts))
}

pub fn scan_reader<R: BufRead>(reader: R, pass: Pass, opts: ScanOptions) -> Result<ScanOutput> {
    let mut it = EventReader::new(reader, opts);
    let mut events = Vec::new();
    for e in &mut it {
        events.push(e?);
    }
    Ok(ScanOutput {
        pass,
        events,
        skipped: it.skipped(),
    })
}

/// Reads a whole log file into memory, in file order.
pub fn scan_log(path: &Path, pass: Pass, opts: ScanOptions) -> Result<ScanOutput> {
    let file = File::open(path)?;
    scan_reader(BufReader::new(file), pass, opts)
}

/// Scans several files back to back. Each file gets its own bad-line budget
/// and header handling.
pub fn scan_logs(paths: &[PathBuf], pass: Pass, opts: ScanOptions) -> Result<ScanOutput> {
    let mut out = ScanOutput {
        pass,
        events: Vec::new(),
        skipped: 0,
    };
    for p in paths {
        let part = scan_log(p, pass, opts)?;
        out.events.extend(part.events);
        out.skipped += part.skipped;
    }
    Ok(out)
}
