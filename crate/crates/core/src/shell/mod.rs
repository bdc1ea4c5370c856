//! Command-line plumbing: configuration files, output formats, run
//! orchestration and the verification runner.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod run;
pub mod snapshot;
pub mod verify;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
}

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SPINFLOW_THREADS";

/// Sizes the global worker pool from `SPINFLOW_THREADS` when set.
pub fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
