use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::FlowError;

pub const ARTIFACT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Status a manifest carries until the run that owns it finishes.
pub const INCOMPLETE: &str = "incomplete";

/// `manifest.txt`: resolved config echo, version, seed, wall times and the
/// termination status, as `key = value` lines.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub config: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub start_time: f64,
    pub end_time: Option<f64>,
    pub status: String,
    /// Extra result lines, e.g. the largest weighted-rate constant.
    pub results: Vec<(String, String)>,
}

pub fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(config: Vec<(String, String)>, seed: Option<u64>) -> RunManifest {
        RunManifest {
            config,
            seed,
            start_time: unix_time(),
            end_time: None,
            status: INCOMPLETE.to_string(),
            results: Vec::new(),
        }
    }

    pub fn finish(&mut self, status: impl Into<String>) {
        self.end_time = Some(unix_time());
        self.status = status.into();
    }

    pub fn is_final(&self) -> bool {
        self.status != INCOMPLETE
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("artifact_version = {ARTIFACT_VERSION}\n"));
        for (k, v) in &self.config {
            s.push_str(&format!("config.{k} = {v}\n"));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed = {seed}\n"));
        }
        s.push_str(&format!("start_time = {:.3}\n", self.start_time));
        match self.end_time {
            Some(t) => s.push_str(&format!("end_time = {t:.3}\n")),
            None => s.push_str("end_time = -\n"),
        }
        s.push_str(&format!("status = {}\n", self.status));
        for (k, v) in &self.results {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), FlowError> {
        std::fs::write(path, self.render()).map_err(|source| FlowError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Reads the `status` line of a manifest; `None` if absent or unreadable.
pub fn read_status(path: &Path) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    text.lines()
        .find_map(|l| l.strip_prefix("status = "))
        .map(str::to_string)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lifecycle() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        let mut m = RunManifest::start(vec![("mode".into(), "flow".into())], Some(7));
        m.write(&path).unwrap();
        assert_eq!(read_status(&path).as_deref(), Some("incomplete"));
        assert!(!m.is_final());
        m.finish("completed");
        m.results.push(("sup_weighted_rate".into(), "0".into()));
        m.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("config.mode = flow\nseed = 7\n"));
        assert!(text.ends_with("status = completed\nsup_weighted_rate = 0\n"));
        assert_eq!(read_status(&path).as_deref(), Some("completed"));
    }
}
