//! Output directory bookkeeping: atomic file writes and cleanup on failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::Result;

/// Files written by one command invocation.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Mutex<Vec<PathBuf>>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Mutex::new(Vec::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Renders into memory, then writes `<rel>.tmp` and renames it into
    /// place, so a killed process never leaves a truncated file under `rel`.
    pub fn write<F>(&self, rel: &str, render: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension("csv.tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        self.written.lock().expect("output lock").push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> Vec<PathBuf> {
        self.written.lock().expect("output lock").clone()
    }

    /// Removes every file this invocation wrote.
    pub fn cleanup(&self) {
        for p in self.written.lock().expect("output lock").drain(..) {
            let _ = fs::remove_file(p);
        }
    }
}
