//! Diagnostics CSV files. Reals use Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRow;
use crate::error::FlowError;
use crate::toy2d::ToyRow;

pub const FLOW_HEADER: &str =
    "step,t,dt,energy,weighted_l2,weighted_h1,min_rho,max_rho,nodal_fraction,resA_l2,resA_linf,energy_gap";

pub const TOY_HEADER: &str = "step,t,dt,linf_err,l2_err,mass,detg_min,detg_max";

/// Something that serialises to one CSV record.
pub trait CsvRecord {
    const HEADER: &'static str;
    fn record(&self) -> String;
}

impl CsvRecord for DiagnosticsRow {
    const HEADER: &'static str = FLOW_HEADER;

    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.t,
            self.dt,
            self.energy,
            self.weighted_l2,
            self.weighted_h1,
            self.min_rho,
            self.max_rho,
            self.nodal_fraction,
            self.res_a_l2,
            self.res_a_linf,
            self.energy_gap
        )
    }
}

impl CsvRecord for ToyRow {
    const HEADER: &'static str = TOY_HEADER;

    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step, self.t, self.dt, self.linf_err, self.l2_err, self.mass, self.detg_min, self.detg_max
        )
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> FlowError + '_ {
    move |source| FlowError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Row-at-a-time CSV output.
pub struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    pub fn create<R: CsvRecord>(path: &Path) -> Result<CsvWriter, FlowError> {
        let file = File::create(path).map_err(io_error(path))?;
        let mut w = CsvWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(R::HEADER)?;
        Ok(w)
    }

    fn line(&mut self, s: &str) -> Result<(), FlowError> {
        self.out.write_all(s.as_bytes()).map_err(io_error(&self.path))?;
        self.out.write_all(b"\n").map_err(io_error(&self.path))
    }

    pub fn write<R: CsvRecord>(&mut self, row: &R) -> Result<(), FlowError> {
        self.line(&row.record())
    }

    pub fn flush(&mut self) -> Result<(), FlowError> {
        self.out.flush().map_err(io_error(&self.path))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

pub fn write_csv<R: CsvRecord>(rows: &[R], path: &Path) -> Result<(), FlowError> {
    let mut w = CsvWriter::create::<R>(path)?;
    for r in rows {
        w.write(r)?;
    }
    w.flush()
}

pub fn write_diagnostics_csv(rows: &[DiagnosticsRow], path: &Path) -> Result<(), FlowError> {
    write_csv(rows, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> DiagnosticsRow {
        DiagnosticsRow {
            step: 3,
            t: 0.1,
            dt: 1e-3,
            energy: 0.0,
            weighted_l2: 2.5,
            weighted_h1: 1.0 / 3.0,
            min_rho: 1.0,
            max_rho: 1.0,
            nodal_fraction: 0.0,
            res_a_l2: 0.0,
            res_a_linf: 0.0,
            energy_gap: f64::NAN,
            monotonicity_flag: true,
            dissipation: 0.0,
            weighted_rate: f64::NAN,
        }
    }

    #[test]
    fn record_format() {
        assert_eq!(row().record(), "3,0.1,0.001,0,2.5,0.3333333333333333,1,1,0,0,0,NaN");
        let cols = row().record().split(',').count();
        assert_eq!(cols, FLOW_HEADER.split(',').count());
        for r in row().record().split(',').skip(1).filter(|s| *s != "NaN") {
            let v: f64 = r.parse().unwrap();
            assert_eq!(v.to_string(), r);
        }
    }

    #[test]
    fn empty_file_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diagnostics.csv");
        write_diagnostics_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{FLOW_HEADER}\n"));
    }

    #[test]
    fn io_error_carries_path() {
        let err = write_diagnostics_csv(&[row()], Path::new("/nonexistent/dir/d.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/d.csv"));
    }
}
