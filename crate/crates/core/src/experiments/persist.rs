//! Report persistence: structured-text summary, CSV series/metrics files and
//! the binary snapshot format.
//!
//! Snapshot layout (little-endian): magic `F4NS`, format version `u32`,
//! `ndim: u32`, per-axis `N: u32`, per-axis `L: f64`, time `t: f64`, then
//! interleaved `(re, im)` `f64` samples, row-major. Round-trips bit-exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::grid::{make_grid, ComplexField, Space};

use super::ExperimentReport;

const SNAPSHOT_MAGIC: &[u8; 4] = b"F4NS";
const SNAPSHOT_VERSION: u32 = 1;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CoreError + '_ {
    move |source| CoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a field snapshot; the field must be in physical space.
pub fn write_snapshot(path: &Path, field: &ComplexField, t: f64) -> Result<()> {
    field.expect_space(Space::Physical)?;
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    let g = field.grid();
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.ndim() as u32).to_le_bytes());
    for &n in g.points() {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in g.half_width() {
        buf.extend_from_slice(&l.to_le_bytes());
    }
    buf.extend_from_slice(&t.to_le_bytes());
    for c in field.samples() {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a snapshot back as `(field, t)`.
pub fn read_snapshot(path: &Path) -> Result<(ComplexField, f64)> {
    let mut r = BufReader::new(File::open(path).map_err(io_err(path))?);
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err(path))?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if *pos + n > bytes.len() {
            return Err(CoreError::SnapshotFormat(format!(
                "truncated snapshot {path:?} at offset {pos}"
            )));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let magic = take(&mut pos, 4)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(CoreError::SnapshotFormat(format!(
            "bad magic {magic:?} in {path:?}"
        )));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(CoreError::SnapshotFormat(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let ndim = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    if !(1..=3).contains(&ndim) {
        return Err(CoreError::SnapshotFormat(format!("bad ndim {ndim}")));
    }
    let mut points = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        points.push(u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize);
    }
    let mut half_width = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        half_width.push(f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()));
    }
    let t = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
    let grid = Arc::new(make_grid(ndim, &points, &half_width)?);
    let count = grid.len();
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let im = f64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap());
        samples.push(Complex64::new(re, im));
    }
    if pos != bytes.len() {
        return Err(CoreError::SnapshotFormat(format!(
            "{} trailing bytes in {path:?}",
            bytes.len() - pos
        )));
    }
    Ok((ComplexField::from_samples(&grid, samples, Space::Physical)?, t))
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the report summary, one CSV per series, the metrics table and all
/// snapshots; returns the written paths.
///
/// Everything is deterministic except the labelled timestamp line in the
/// summary.
pub fn persist_report(report: &ExperimentReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();

    let summary_path = out_dir.join("report.txt");
    {
        let mut s = String::new();
        s.push_str(&format!("experiment: {}\n", report.kind));
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        s.push_str(&format!(
            "timestamp_unix_seconds: {stamp}  # nondeterministic, ignore when diffing\n"
        ));
        for (k, v) in &report.config_echo {
            s.push_str(&format!("config.{k}: {v}\n"));
        }
        s.push_str(&format!(
            "provenance.grid_points: {:?}\n",
            report.provenance.grid_points
        ));
        s.push_str(&format!(
            "provenance.half_width: {:?}\n",
            report.provenance.half_width
        ));
        if let Some(dt) = report.provenance.dt {
            s.push_str(&format!("provenance.dt: {}\n", fmt17(dt)));
        }
        if let Some(seed) = report.provenance.seed {
            s.push_str(&format!("provenance.seed: {seed}\n"));
        }
        for (name, value, stderr) in &report.fitted {
            s.push_str(&format!(
                "fitted.{name}: {} (stderr {})\n",
                fmt17(*value),
                fmt17(*stderr)
            ));
        }
        for v in &report.verdicts {
            s.push_str(&format!(
                "verdict.{}: {} (measured {}, tolerance {}) {}\n",
                v.criterion,
                if v.pass { "PASS" } else { "FAIL" },
                fmt17(v.measured),
                fmt17(v.tolerance),
                v.detail
            ));
        }
        s.push_str(&format!(
            "overall: {}\n",
            if report.all_pass() { "PASS" } else { "FAIL" }
        ));
        std::fs::write(&summary_path, s).map_err(io_err(&summary_path))?;
    }
    written.push(summary_path);

    for (name, series) in &report.series {
        let path = out_dir.join(format!("series_{name}.csv"));
        let mut s = String::from("t,value\n");
        for (&t, &v) in series.times().iter().zip(series.values()) {
            s.push_str(&format!("{},{}\n", fmt17(t), fmt17(v)));
        }
        std::fs::write(&path, s).map_err(io_err(&path))?;
        written.push(path);
    }

    if let Some(metrics) = &report.metrics {
        let path = out_dir.join("metrics.csv");
        let mut s = format!("t,mass,energy,h2,linf,weak_lp_{}\n", metrics.weak_p);
        for row in &metrics.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt17(row.t),
                fmt17(row.mass),
                fmt17(row.energy),
                fmt17(row.h2),
                fmt17(row.linf),
                fmt17(row.weak_lp)
            ));
        }
        std::fs::write(&path, s).map_err(io_err(&path))?;
        written.push(path);
    }

    for (i, (t, field)) in report.snapshots.iter().enumerate() {
        let path = out_dir.join(format!("snapshot_{i:04}.f4ns"));
        write_snapshot(&path, field, *t)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{MetricsRow, MetricsTable, Provenance, Verdict};
    use crate::grid::random_bandlimited;

    fn tempdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("f4ns_persist_{tag}_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempdir("roundtrip");
        let grid = Arc::new(make_grid(2, &[16, 32], &[2.0, 3.5]).unwrap());
        let field = random_bandlimited(&grid, 7, 0.4);
        let path = dir.join("field.f4ns");
        write_snapshot(&path, &field, 1.25).unwrap();
        let (back, t) = read_snapshot(&path).unwrap();
        assert_eq!(t.to_bits(), 1.25f64.to_bits());
        assert_eq!(back.grid().points(), grid.points());
        assert!(field
            .samples()
            .iter()
            .zip(back.samples())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn corrupted_snapshots_are_rejected() {
        let dir = tempdir("corrupt");
        let grid = Arc::new(make_grid(1, &[16], &[2.0]).unwrap());
        let field = ComplexField::zeros(&grid);
        let path = dir.join("field.f4ns");
        write_snapshot(&path, &field, 0.0).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            read_snapshot(&path),
            Err(CoreError::SnapshotFormat(_))
        ));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn report_files_have_expected_shape() {
        let dir = tempdir("report");
        let grid = Arc::new(make_grid(1, &[16], &[2.0]).unwrap());
        let mut report = super::super::ExperimentReport::new(
            "unit_test",
            Provenance::from_grid(&grid),
        );
        report.echo("alpha", 2.0);
        report.series.push((
            "demo".into(),
            crate::analysis::NormSeries::new(
                vec![1.0, 2.0],
                vec![0.5, 0.25],
                crate::analysis::NormKind::Linf,
            )
            .unwrap(),
        ));
        report.verdicts.push(Verdict::new("demo check", true, 0.25, 0.5, ""));
        report.metrics = Some(MetricsTable {
            weak_p: 3.6,
            rows: vec![MetricsRow {
                t: 0.0,
                mass: 1.0,
                energy: -0.5,
                h2: 2.0,
                linf: 1.0,
                weak_lp: 0.7,
            }],
        });
        let paths = persist_report(&report, &dir).unwrap();
        assert_eq!(paths.len(), 3);
        let summary = std::fs::read_to_string(&paths[0]).unwrap();
        assert!(summary.contains("overall: PASS"));
        assert!(summary.contains("timestamp_unix_seconds"));
        let series = std::fs::read_to_string(&paths[1]).unwrap();
        assert_eq!(series.lines().count(), 3); // header + 2 rows
        let metrics = std::fs::read_to_string(&paths[2]).unwrap();
        assert!(metrics.starts_with("t,mass,energy,h2,linf,weak_lp_3.6"));
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn persisted_values_reparse_exactly() {
        // 17 significant digits survive a text round trip
        let vals = [std::f64::consts::PI, 1.0 / 3.0, 2.2250738585072014e-308];
        for v in vals {
            let s = fmt17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "value {v} reparsed as {back}");
        }
    }
}
