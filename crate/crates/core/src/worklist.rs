//! Executable work lists: ordered transfers grouped into tip cycles.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::cost::JobDistanceMatrix;
use crate::error::{ParseError, ScheduleError};
use crate::plate::PlateFormat;
use crate::task::{self, format_volume, Job, JobSet, FORMAT_VERSION};

pub const WORKLIST_HEADER: &str = "cycle,tip_order,src_well,dst_well,volume_uL";

/// Scheduling methods exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    RowMajor,
    Lap,
    Greedy,
    Cvrp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::RowMajor, Method::Lap, Method::Greedy, Method::Cvrp];

    pub fn name(self) -> &'static str {
        match self {
            Method::RowMajor => "row-major",
            Method::Lap => "lap",
            Method::Greedy => "greedy",
            Method::Cvrp => "cvrp",
        }
    }

    /// Label used in benchmark reports. LAP carries its iteration rule.
    pub fn report_label(self) -> &'static str {
        match self {
            Method::Lap => "lap(sweep)",
            other => other.name(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "row-major" => Ok(Method::RowMajor),
            "lap" | "lap(sweep)" => Ok(Method::Lap),
            "greedy" => Ok(Method::Greedy),
            "cvrp" => Ok(Method::Cvrp),
            other => Err(format!(
                "unknown method `{other}` (expected row-major, lap, greedy or cvrp)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub method: Method,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkList {
    src_plate: PlateFormat,
    dst_plate: PlateFormat,
    cycles: Vec<Vec<Job>>,
    pub provenance: Option<Provenance>,
}

impl WorkList {
    pub fn from_cycles(
        src_plate: PlateFormat,
        dst_plate: PlateFormat,
        cycles: Vec<Vec<Job>>,
        provenance: Option<Provenance>,
    ) -> Self {
        Self {
            src_plate,
            dst_plate,
            cycles,
            provenance,
        }
    }

    /// Builds a work list from job-index cycles over `jobs`.
    pub fn from_job_cycles<C: AsRef<[usize]>>(
        jobs: &JobSet,
        cycles: &[C],
        provenance: Option<Provenance>,
    ) -> Result<Self, ScheduleError> {
        let m = jobs.len();
        let cycles = cycles
            .iter()
            .map(|c| {
                c.as_ref()
                    .iter()
                    .map(|&i| {
                        if i == 0 || i > m {
                            Err(ScheduleError::JobOutOfRange { index: i, m })
                        } else {
                            Ok(*jobs.job(i))
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_cycles(
            jobs.src_plate(),
            jobs.dst_plate(),
            cycles,
            provenance,
        ))
    }

    /// Builds a work list from a flat job order cut into batches of
    /// `capacity`.
    pub fn from_order(
        jobs: &JobSet,
        order: &[usize],
        capacity: usize,
        provenance: Option<Provenance>,
    ) -> Result<Self, ScheduleError> {
        if capacity == 0 {
            return Err(ScheduleError::ZeroCapacity);
        }
        let cycles: Vec<&[usize]> = order.chunks(capacity).collect();
        Self::from_job_cycles(jobs, &cycles, provenance)
    }

    pub fn src_plate(&self) -> PlateFormat {
        self.src_plate
    }

    pub fn dst_plate(&self) -> PlateFormat {
        self.dst_plate
    }

    pub fn cycles(&self) -> &[Vec<Job>] {
        &self.cycles
    }

    pub fn len(&self) -> usize {
        self.cycles.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Transfers in execution order.
    pub fn transfers(&self) -> impl Iterator<Item = &Job> + '_ {
        self.cycles.iter().flatten()
    }

    /// Maps every transfer back to its 1-based index in `jobs`, keeping the
    /// cycle structure. Fails unless the work list is a permutation of the
    /// job set.
    pub fn job_cycles(&self, jobs: &JobSet) -> Result<Vec<Vec<usize>>, ScheduleError> {
        let m = jobs.len();
        let index: HashMap<(u32, u32), usize> = jobs
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, j)| ((j.src, j.dst), i + 1))
            .collect();
        let mut seen = vec![false; m + 1];
        let mut out = Vec::with_capacity(self.cycles.len());
        for cycle in &self.cycles {
            let mut ids = Vec::with_capacity(cycle.len());
            for t in cycle {
                let id = *index.get(&(t.src, t.dst)).ok_or_else(|| {
                    ScheduleError::NotPermutation {
                        m,
                        reason: format!("transfer ({},{}) not in the task", t.src, t.dst),
                    }
                })?;
                if (jobs.job(id).volume - t.volume).abs() > 1e-9 {
                    return Err(ScheduleError::NotPermutation {
                        m,
                        reason: format!("transfer ({},{}) has a different volume", t.src, t.dst),
                    });
                }
                if std::mem::replace(&mut seen[id], true) {
                    return Err(ScheduleError::NotPermutation {
                        m,
                        reason: format!("transfer ({},{}) repeated", t.src, t.dst),
                    });
                }
                ids.push(id);
            }
            out.push(ids);
        }
        if let Some(missing) = (1..=m).find(|&i| !seen[i]) {
            let j = jobs.job(missing);
            return Err(ScheduleError::NotPermutation {
                m,
                reason: format!("transfer ({},{}) missing", j.src, j.dst),
            });
        }
        Ok(out)
    }

    /// Computed execution time of this work list against its job set.
    pub fn computed_time(&self, jobs: &JobSet, d: &JobDistanceMatrix) -> Result<f64, ScheduleError> {
        Ok(d.cycles_cost(&self.job_cycles(jobs)?))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "#version={FORMAT_VERSION}").unwrap();
        writeln!(out, "#src_plate={}", self.src_plate).unwrap();
        writeln!(out, "#dst_plate={}", self.dst_plate).unwrap();
        if let Some(p) = self.provenance {
            writeln!(out, "#method={}", p.method).unwrap();
            if let Some(seed) = p.seed {
                writeln!(out, "#seed={seed}").unwrap();
            }
        }
        writeln!(out, "{WORKLIST_HEADER}").unwrap();
        for (c, cycle) in self.cycles.iter().enumerate() {
            for (t, job) in cycle.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    c + 1,
                    t + 1,
                    job.src,
                    job.dst,
                    format_volume(job.volume)
                )
                .unwrap();
            }
        }
        out
    }
}

/// Parses a work-list CSV. Cycles must be numbered 1, 2, ... and tip order
/// must restart at 1 in each cycle.
pub fn parse_worklist_csv(
    raw: &[u8],
    src_plate: Option<PlateFormat>,
    dst_plate: Option<PlateFormat>,
) -> Result<WorkList, ParseError> {
    let text = std::str::from_utf8(raw).map_err(|e| ParseError::Malformed {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })?;
    let mut src_comment = None;
    let mut dst_comment = None;
    let mut method = None;
    let mut seed = None;
    let mut header_seen = false;
    let mut rows = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(p) = task::parse_plate_comment(line, "src_plate", lineno)? {
                src_comment = Some(p);
            }
            if let Some(p) = task::parse_plate_comment(line, "dst_plate", lineno)? {
                dst_comment = Some(p);
            }
            if let Some(m) = task::comment_value(line, "method") {
                method = m.parse::<Method>().ok();
            }
            if let Some(s) = task::comment_value(line, "seed") {
                seed = s.parse::<u64>().ok();
            }
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != WORKLIST_HEADER {
                return Err(ParseError::MissingHeader(WORKLIST_HEADER));
            }
            header_seen = true;
            continue;
        }
        let mut f = line.split(',');
        let cycle: usize = task::parse_field(f.next(), "cycle", lineno)?;
        let tip: usize = task::parse_field(f.next(), "tip_order", lineno)?;
        let src: u32 = task::parse_field(f.next(), "src_well", lineno)?;
        let dst: u32 = task::parse_field(f.next(), "dst_well", lineno)?;
        let volume: f64 = task::parse_field(f.next(), "volume_uL", lineno)?;
        if f.next().is_some() {
            return Err(ParseError::Malformed {
                line: lineno,
                message: "expected 5 fields".into(),
            });
        }
        rows.push((lineno, cycle, tip, Job { src, dst, volume }));
    }
    if !header_seen {
        return Err(ParseError::MissingHeader(WORKLIST_HEADER));
    }
    let src_plate = src_plate
        .or(src_comment)
        .ok_or(ParseError::MissingPlate("src"))?;
    let dst_plate = dst_plate
        .or(dst_comment)
        .ok_or(ParseError::MissingPlate("dst"))?;

    let mut cycles: Vec<Vec<Job>> = Vec::new();
    for (line, cycle, tip, job) in rows {
        if !src_plate.contains(job.src) {
            return Err(ParseError::OutOfRange {
                line,
                side: "source",
                well: job.src,
                wells: src_plate.wells(),
            });
        }
        if !dst_plate.contains(job.dst) {
            return Err(ParseError::OutOfRange {
                line,
                side: "destination",
                well: job.dst,
                wells: dst_plate.wells(),
            });
        }
        if job.volume <= 0.0 || !job.volume.is_finite() {
            return Err(ParseError::NonPositiveVolume {
                line,
                volume: job.volume,
            });
        }
        if cycle == cycles.len() + 1 {
            cycles.push(Vec::new());
        }
        if cycle != cycles.len() {
            return Err(ParseError::Malformed {
                line,
                message: format!("cycle {cycle} out of sequence"),
            });
        }
        let current = cycles.last_mut().expect("pushed above");
        if tip != current.len() + 1 {
            return Err(ParseError::Malformed {
                line,
                message: format!("tip_order {tip} out of sequence in cycle {cycle}"),
            });
        }
        current.push(job);
    }
    let provenance = method.map(|method| Provenance { method, seed });
    Ok(WorkList::from_cycles(src_plate, dst_plate, cycles, provenance))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jobs() -> JobSet {
        let p = PlateFormat::named(12).unwrap();
        JobSet::from_jobs(
            p,
            p,
            vec![
                Job { src: 1, dst: 2, volume: 30.0 },
                Job { src: 1, dst: 5, volume: 50.0 },
                Job { src: 3, dst: 1, volume: 20.5 },
            ],
        )
    }

    #[test]
    fn csv_round_trip() {
        let jobs = jobs();
        let wl = WorkList::from_order(
            &jobs,
            &[3, 1, 2],
            2,
            Some(Provenance { method: Method::Greedy, seed: Some(7) }),
        )
        .unwrap();
        let text = wl.to_csv();
        assert!(text.starts_with("#version=1\n"));
        assert!(text.contains("\n2,1,1,5,50\n"));
        let back = parse_worklist_csv(text.as_bytes(), None, None).unwrap();
        assert_eq!(back, wl);
        assert_eq!(back.job_cycles(&jobs).unwrap(), vec![vec![3, 1], vec![2]]);
    }

    #[test]
    fn rejects_out_of_sequence_rows() {
        let raw = format!("#src_plate=12\n#dst_plate=12\n{WORKLIST_HEADER}\n1,1,1,2,30\n1,3,1,5,50\n");
        let err = parse_worklist_csv(raw.as_bytes(), None, None).unwrap_err();
        assert!(matches!(err, ParseError::Malformed { line: 5, .. }), "{err}");
        let raw = format!("#src_plate=12\n#dst_plate=12\n{WORKLIST_HEADER}\n2,1,1,2,30\n");
        assert!(parse_worklist_csv(raw.as_bytes(), None, None).is_err());
    }

    #[test]
    fn job_cycles_detects_non_permutations() {
        let jobs = jobs();
        let p = jobs.src_plate();
        let missing = WorkList::from_cycles(p, p, vec![vec![*jobs.job(1), *jobs.job(2)]], None);
        assert!(missing.job_cycles(&jobs).is_err());
        let repeated = WorkList::from_cycles(
            p,
            p,
            vec![vec![*jobs.job(1), *jobs.job(2), *jobs.job(1), *jobs.job(3)]],
            None,
        );
        assert!(repeated.job_cycles(&jobs).is_err());
        assert!(WorkList::from_order(&jobs, &[1, 4], 8, None).is_err());
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(Method::Lap.report_label(), "lap(sweep)");
        assert!("column-major".parse::<Method>().is_err());
    }
}
