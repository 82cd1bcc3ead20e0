//! Run-directory layout. Every invocation gets its own
//! `<out_dir>/<UTC stamp>-<tag>/` holding a verbatim copy of the input
//! config, a results file, a timestamped log, and an `artifacts/` folder.
//! Timing and other wall-clock detail goes only to the log, so `results.txt`
//! is a pure function of the config and seeds and reruns reproduce it
//! byte for byte.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};

pub struct RunDir {
    pub root: PathBuf,
    log: File,
}

impl RunDir {
    /// Creates the directory tree and echoes the config bytes unmodified.
    /// Stamp collisions (reruns within one second) get a numeric suffix.
    pub fn create(out_dir: &Path, tag: &str, config_bytes: &[u8]) -> std::io::Result<RunDir> {
        let stamp = Utc::now().format("%Y%m%dT%H%M%SZ");
        let mut root = out_dir.join(format!("{stamp}-{tag}"));
        let mut n = 2;
        while root.exists() {
            root = out_dir.join(format!("{stamp}-{tag}-{n}"));
            n += 1;
        }
        fs::create_dir_all(root.join("artifacts"))?;
        fs::create_dir_all(root.join("logs"))?;
        fs::write(root.join("config.toml"), config_bytes)?;
        let log = File::create(root.join("logs").join("run.log"))?;
        Ok(RunDir { root, log })
    }

    /// Appends a timestamped line; logging failures never abort a run.
    pub fn log(&mut self, line: &str) {
        let now = Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true);
        let _ = writeln!(self.log, "[{now}] {line}");
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.root.join("artifacts").join(name)
    }

    /// Writes `results.txt`; called exactly once, after the command succeeds.
    pub fn finish(&mut self, results: &str) -> std::io::Result<()> {
        fs::write(self.root.join("results.txt"), results)?;
        self.log("results.txt written");
        Ok(())
    }
}
