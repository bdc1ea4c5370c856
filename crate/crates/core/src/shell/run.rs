//! Run orchestration: output directory, manifest, CSV streaming, snapshots.

use std::path::{Path, PathBuf};

use crate::diagnostics::DiagnosticsRow;
use crate::error::FlowError;
use crate::flow::{self, FlowConfig, RunObserver, Termination};
use crate::grid::SpinorField;
use crate::shell::config::{ResolvedConfig, RunConfig};
use crate::shell::csv::CsvWriter;
use crate::shell::manifest::RunManifest;
use crate::shell::snapshot::{snapshot_path, write_snapshot};
use crate::toy2d::{self, ToyRow};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub termination: Termination,
    pub steps: u64,
    pub t: f64,
    /// NaN unless a flow run measured it.
    pub sup_weighted_rate: f64,
    pub outdir: PathBuf,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.termination == Termination::Completed
    }
}

struct FileObserver {
    csv: CsvWriter,
    outdir: PathBuf,
}

impl RunObserver for FileObserver {
    fn row(&mut self, row: &DiagnosticsRow) -> Result<(), FlowError> {
        self.csv.write(row)
    }

    fn snapshot(&mut self, step: u64, psi: &SpinorField) -> Result<(), FlowError> {
        Ok(write_snapshot(psi, &snapshot_path(&self.outdir, step))?)
    }
}

fn create_dir(dir: &Path) -> Result<(), FlowError> {
    std::fs::create_dir_all(dir).map_err(|source| FlowError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs the configured mode, writing `diagnostics.csv`, `manifest.txt` and
/// snapshots under the output directory.
pub fn execute(cfg: &ResolvedConfig) -> Result<RunReport, FlowError> {
    match &cfg.run {
        RunConfig::Flow(f) => run_flow(f, cfg),
        RunConfig::Toy2d(t) => run_toy(t, cfg),
    }
}

fn run_flow(fc: &FlowConfig, cfg: &ResolvedConfig) -> Result<RunReport, FlowError> {
    fc.validate()?;
    create_dir(&cfg.outdir)?;
    let manifest_path = cfg.outdir.join(MANIFEST_FILE);
    let mut manifest = RunManifest::start(cfg.echo(), Some(fc.seed));
    manifest.write(&manifest_path)?;

    let csv_path = cfg.outdir.join(DIAGNOSTICS_FILE);
    let mut observer = FileObserver {
        csv: CsvWriter::create::<DiagnosticsRow>(&csv_path)?,
        outdir: cfg.outdir.clone(),
    };
    let outcome = flow::run(fc, &mut observer);
    observer.csv.flush()?;
    let outcome = outcome?;

    manifest.results.push(("steps".into(), outcome.state.step.to_string()));
    manifest.results.push(("t_final".into(), outcome.state.t.to_string()));
    manifest
        .results
        .push(("sup_weighted_rate".into(), outcome.sup_weighted_rate.to_string()));
    manifest.finish(outcome.termination.to_string());
    manifest.write(&manifest_path)?;
    Ok(RunReport {
        termination: outcome.termination,
        steps: outcome.state.step,
        t: outcome.state.t,
        sup_weighted_rate: outcome.sup_weighted_rate,
        outdir: cfg.outdir.clone(),
    })
}

fn run_toy(tc: &toy2d::ToyConfig, cfg: &ResolvedConfig) -> Result<RunReport, FlowError> {
    tc.validate()?;
    create_dir(&cfg.outdir)?;
    let manifest_path = cfg.outdir.join(MANIFEST_FILE);
    let mut manifest = RunManifest::start(cfg.echo(), None);
    manifest.write(&manifest_path)?;

    let mut csv = CsvWriter::create::<ToyRow>(&cfg.outdir.join(DIAGNOSTICS_FILE))?;
    let (termination, steps, t) = match toy2d::toy_run(tc) {
        Ok(out) => {
            for r in &out.rows {
                csv.write(r)?;
            }
            let last = out.rows.last().expect("initial row");
            manifest.results.push(("linf_err".into(), last.linf_err.to_string()));
            manifest.results.push(("l2_err".into(), last.l2_err.to_string()));
            manifest.results.push(("mass".into(), last.mass.to_string()));
            (Termination::Completed, last.step, out.t)
        }
        Err(FlowError::Diverged { step, node }) => (Termination::Diverged { step, node }, step, f64::NAN),
        Err(e) => return Err(e),
    };
    csv.flush()?;
    manifest.finish(termination.to_string());
    manifest.write(&manifest_path)?;
    Ok(RunReport {
        termination,
        steps,
        t,
        sup_weighted_rate: f64::NAN,
        outdir: cfg.outdir.clone(),
    })
}
