//! Sparse source-to-destination transfer tasks and their canonical job
//! enumeration.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use crate::error::ParseError;
use crate::plate::{PlateFormat, Well};

pub const TASK_HEADER: &str = "src_well,dst_well,volume_uL";
pub const FORMAT_VERSION: u32 = 1;

/// A combinatorial transfer task: nonzero entries of the
/// `n_src x n_dst` volume matrix, keyed by (source well, destination well).
#[derive(Debug, Clone, PartialEq)]
pub struct TaskMatrix {
    src_plate: PlateFormat,
    dst_plate: PlateFormat,
    entries: BTreeMap<(Well, Well), f64>,
}

impl TaskMatrix {
    pub fn new(src_plate: PlateFormat, dst_plate: PlateFormat) -> Self {
        Self {
            src_plate,
            dst_plate,
            entries: BTreeMap::new(),
        }
    }

    pub fn src_plate(&self) -> PlateFormat {
        self.src_plate
    }

    pub fn dst_plate(&self) -> PlateFormat {
        self.dst_plate
    }

    /// Sets the volume of one transfer, returning the previous volume.
    /// No range checks; see [`validate_task`].
    pub fn insert(&mut self, src: Well, dst: Well, volume: f64) -> Option<f64> {
        self.entries.insert((src, dst), volume)
    }

    pub fn get(&self, src: Well, dst: Well) -> Option<f64> {
        self.entries.get(&(src, dst)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in (src, dst) ascending order.
    pub fn iter(&self) -> impl Iterator<Item = (Well, Well, f64)> + '_ {
        self.entries.iter().map(|(&(s, d), &v)| (s, d, v))
    }

    /// Serializes to the task CSV format, plates included as comments.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "#version={FORMAT_VERSION}").unwrap();
        writeln!(out, "#src_plate={}", self.src_plate).unwrap();
        writeln!(out, "#dst_plate={}", self.dst_plate).unwrap();
        writeln!(out, "{TASK_HEADER}").unwrap();
        for (s, d, v) in self.iter() {
            writeln!(out, "{s},{d},{}", format_volume(v)).unwrap();
        }
        out
    }
}

/// Volumes are written with at most three decimals.
pub fn format_volume(v: f64) -> String {
    let rounded = (v * 1000.0).round() / 1000.0;
    format!("{rounded}")
}

/// One transfer: aspirate `volume` µL from `src`, dispense it into `dst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub src: Well,
    pub dst: Well,
    pub volume: f64,
}

/// Jobs of a task in canonical (src, dst) order. Job indices are 1-based;
/// index 0 is reserved for the depot.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSet {
    src_plate: PlateFormat,
    dst_plate: PlateFormat,
    jobs: Vec<Job>,
}

impl JobSet {
    pub fn from_jobs(src_plate: PlateFormat, dst_plate: PlateFormat, jobs: Vec<Job>) -> Self {
        Self {
            src_plate,
            dst_plate,
            jobs,
        }
    }

    pub fn src_plate(&self) -> PlateFormat {
        self.src_plate
    }

    pub fn dst_plate(&self) -> PlateFormat {
        self.dst_plate
    }

    /// Number of jobs `m`.
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// Job by 1-based index.
    pub fn job(&self, index: usize) -> &Job {
        &self.jobs[index - 1]
    }

    pub fn as_slice(&self) -> &[Job] {
        &self.jobs
    }
}

/// Canonical enumeration: row-major over the task matrix, i.e. sorted by
/// source well then destination well.
pub fn jobs_of(task: &TaskMatrix) -> JobSet {
    let jobs = task
        .iter()
        .map(|(src, dst, volume)| Job { src, dst, volume })
        .collect();
    JobSet::from_jobs(task.src_plate, task.dst_plate, jobs)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveVolume { src: Well, dst: Well, volume: f64 },
    SrcOutOfRange { src: Well, dst: Well, wells: u32 },
    DstOutOfRange { src: Well, dst: Well, wells: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveVolume { src, dst, volume } => {
                write!(f, "transfer ({src},{dst}): volume {volume} must be > 0")
            }
            Violation::SrcOutOfRange { src, dst, wells } => {
                write!(f, "transfer ({src},{dst}): source well {src} outside 1..={wells}")
            }
            Violation::DstOutOfRange { src, dst, wells } => write!(
                f,
                "transfer ({src},{dst}): destination well {dst} outside 1..={wells}"
            ),
        }
    }
}

/// Lists every invariant violation of `task`; empty means valid.
pub fn validate_task(task: &TaskMatrix) -> Vec<Violation> {
    let mut report = Vec::new();
    for (src, dst, volume) in task.iter() {
        if !task.src_plate.contains(src) {
            report.push(Violation::SrcOutOfRange {
                src,
                dst,
                wells: task.src_plate.wells(),
            });
        }
        if !task.dst_plate.contains(dst) {
            report.push(Violation::DstOutOfRange {
                src,
                dst,
                wells: task.dst_plate.wells(),
            });
        }
        if volume <= 0.0 || !volume.is_finite() {
            report.push(Violation::NonPositiveVolume { src, dst, volume });
        }
    }
    report
}

/// Reads the `#key=value` comment lines of a CSV file.
pub(crate) fn comment_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let body = line.strip_prefix('#')?.trim();
    let (k, v) = body.split_once('=')?;
    (k.trim() == key).then(|| v.trim())
}

pub(crate) fn parse_plate_comment(
    line: &str,
    key: &str,
    lineno: usize,
) -> Result<Option<PlateFormat>, ParseError> {
    match comment_value(line, key) {
        Some(spec) => spec
            .parse()
            .map(Some)
            .map_err(|source| ParseError::Plate {
                line: lineno,
                source,
            }),
        None => Ok(None),
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    name: &str,
    lineno: usize,
) -> Result<T, ParseError> {
    let raw = field.ok_or_else(|| ParseError::Malformed {
        line: lineno,
        message: format!("missing field `{name}`"),
    })?;
    raw.trim().parse().map_err(|_| ParseError::Malformed {
        line: lineno,
        message: format!("bad `{name}` value \"{}\"", raw.trim()),
    })
}

/// Parses a task CSV. Plates passed as arguments take precedence over the
/// file's `#src_plate=` / `#dst_plate=` comments.
pub fn parse_task_csv(
    raw: &[u8],
    src_plate: Option<PlateFormat>,
    dst_plate: Option<PlateFormat>,
) -> Result<TaskMatrix, ParseError> {
    let text = std::str::from_utf8(raw).map_err(|e| ParseError::Malformed {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut src_comment = None;
    let mut dst_comment = None;
    let mut header_seen = false;
    let mut rows: Vec<(usize, Well, Well, f64)> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(p) = parse_plate_comment(line, "src_plate", lineno)? {
                src_comment = Some(p);
            }
            if let Some(p) = parse_plate_comment(line, "dst_plate", lineno)? {
                dst_comment = Some(p);
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != TASK_HEADER {
                return Err(ParseError::MissingHeader(TASK_HEADER));
            }
            header_seen = true;
            continue;
        }
        let mut fields = line.split(',');
        let src: Well = parse_field(fields.next(), "src_well", lineno)?;
        let dst: Well = parse_field(fields.next(), "dst_well", lineno)?;
        let volume: f64 = parse_field(fields.next(), "volume_uL", lineno)?;
        if fields.next().is_some() {
            return Err(ParseError::Malformed {
                line: lineno,
                message: "expected 3 fields".into(),
            });
        }
        rows.push((lineno, src, dst, volume));
    }
    if !header_seen {
        return Err(ParseError::MissingHeader(TASK_HEADER));
    }

    let src_plate = src_plate
        .or(src_comment)
        .ok_or(ParseError::MissingPlate("src"))?;
    let dst_plate = dst_plate
        .or(dst_comment)
        .ok_or(ParseError::MissingPlate("dst"))?;
    let mut task = TaskMatrix::new(src_plate, dst_plate);
    for (line, src, dst, volume) in rows {
        if !src_plate.contains(src) {
            return Err(ParseError::OutOfRange {
                line,
                side: "source",
                well: src,
                wells: src_plate.wells(),
            });
        }
        if !dst_plate.contains(dst) {
            return Err(ParseError::OutOfRange {
                line,
                side: "destination",
                well: dst,
                wells: dst_plate.wells(),
            });
        }
        if volume <= 0.0 || !volume.is_finite() {
            return Err(ParseError::NonPositiveVolume { line, volume });
        }
        if task.insert(src, dst, volume).is_some() {
            return Err(ParseError::Duplicate { line, src, dst });
        }
    }
    Ok(task)
}
