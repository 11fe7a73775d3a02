//! Trajectory CSV files and SVG phase portraits.

mod svg;

pub use svg::{PhasePortrait, PortraitCurve};

use std::io::{Read, Write};

use crate::dynamics::{Mode, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::verify::Certificate;

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Header `t, <labels>, [V], mode`, one row per sample.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    trajectory: &Trajectory,
    labels: &[String],
    certificate: Option<&Certificate>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(labels.iter().cloned());
    if certificate.is_some() {
        header.push("V".into());
    }
    header.push("mode".into());
    w.write_record(&header).map_err(csv_err)?;
    for s in &trajectory.samples {
        if s.x.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: s.x.len(),
            });
        }
        let mut row = vec![fmt_f64(s.t)];
        row.extend(s.x.iter().map(|v| fmt_f64(*v)));
        if let Some(c) = certificate {
            row.push(fmt_f64(c.value(&s.x)));
        }
        row.push(s.mode.as_str().into());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_csv_string(trajectory: &Trajectory, labels: &[String], certificate: Option<&Certificate>) -> Result<String> {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, trajectory, labels, certificate)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Parsed trajectory file.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub labels: Vec<String>,
    pub samples: Vec<Sample>,
    /// Certificate column, when the file has one.
    pub v: Option<Vec<f64>>,
}

impl TrajectoryTable {
    pub fn states(&self) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.x.clone()).collect()
    }
}

fn parse_f64(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("row {row}: bad number {field:?}")))
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<TrajectoryTable> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.len() < 3 || header[0] != "t" || header.last().map(String::as_str) != Some("mode") {
        return Err(Error::Parse("header must be t, <coordinates>, [V], mode".into()));
    }
    let has_v = header[header.len() - 2] == "V";
    let n_state = header.len() - 2 - usize::from(has_v);
    if n_state == 0 {
        return Err(Error::Parse("no state columns".into()));
    }
    let labels = header[1..1 + n_state].to_vec();
    let mut samples = Vec::new();
    let mut v = has_v.then(Vec::new);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = i + 2;
        if rec.len() != header.len() {
            return Err(Error::Parse(format!("row {row}: expected {} fields, got {}", header.len(), rec.len())));
        }
        let t = parse_f64(&rec[0], row)?;
        let x = (1..=n_state).map(|c| parse_f64(&rec[c], row)).collect::<Result<Vec<_>>>()?;
        if let Some(v) = v.as_mut() {
            v.push(parse_f64(&rec[n_state + 1], row)?);
        }
        let mode_s = &rec[rec.len() - 1];
        let mode = Mode::parse(mode_s).ok_or_else(|| Error::Parse(format!("row {row}: unknown mode {mode_s:?}")))?;
        samples.push(Sample { t, x, mode });
    }
    Ok(TrajectoryTable { labels, samples, v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TerminalStatus;

    fn traj() -> Trajectory {
        Trajectory {
            samples: vec![
                Sample {
                    t: 0.0,
                    x: vec![0.1, -1.0 / 3.0],
                    mode: Mode::Minus,
                },
                Sample {
                    t: 1e-7,
                    x: vec![std::f64::consts::PI, 1e-300],
                    mode: Mode::Sliding,
                },
            ],
            events: vec![],
            status: TerminalStatus::HorizonReached,
            failure: None,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let labels = vec!["x1".to_string(), "x2".to_string()];
        let s = trajectory_csv_string(&traj(), &labels, None).unwrap();
        assert!(s.starts_with("t,x1,x2,mode\n"));
        let back = read_trajectory_csv(s.as_bytes()).unwrap();
        assert_eq!(back.samples, traj().samples);
        assert_eq!(back.labels, labels);
        assert!(back.v.is_none());
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_trajectory_csv("t,x1,mode\n0,abc,plus\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("t,x1,mode\n0,1,upward\n".as_bytes()).is_err());
        assert!(read_trajectory_csv("a,b\n".as_bytes()).is_err());
    }
}
