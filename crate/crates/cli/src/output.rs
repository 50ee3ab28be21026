//! Atomic file output and the CSV layouts.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

pub const TRAJECTORY_HEADER: [&str; 6] = ["t", "u_l2", "x_norm", "V", "x_bound", "u_bound"];

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One trajectory sample; unavailable quantities are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub u_l2: f64,
    pub x_norm: f64,
    pub v: f64,
    pub x_bound: f64,
    pub u_bound: f64,
}

/// Floats use the shortest representation that parses back exactly.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in rows {
        w.serialize((r.t, r.u_l2, r.x_norm, r.v, r.x_bound, r.u_bound))?;
    }
    Ok(w.into_inner()?)
}

pub fn table_csv(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(w.into_inner()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_and_nan_is_spelled_out() {
        let row = TrajectoryRow { t: 0.1, u_l2: 1.0 / 3.0, x_norm: 2.5e-17, v: f64::NAN, x_bound: 1e300, u_bound: 7.0 };
        let text = String::from_utf8(trajectory_csv(&[row]).unwrap()).unwrap();
        let line = text.lines().nth(1).unwrap();
        let parsed: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed[1], 1.0 / 3.0);
        assert_eq!(parsed[2], 2.5e-17);
        assert!(parsed[3].is_nan());
        assert_eq!(parsed[4], 1e300);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
