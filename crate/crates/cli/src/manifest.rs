use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{io_err, Result};

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Record of one run: what was configured, what was written, and what
/// went wrong along the way.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub method: String,
    /// File names relative to the output directory, sorted.
    pub files: Vec<String>,
    /// Wall-clock timings; the only field that varies between identical runs.
    pub timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
    /// Pipeline failures; outputs written before the failure are kept.
    pub errors: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Single writer for an output directory; remembers every file it emits.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeSet<String>,
    timings: Vec<StageTiming>,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<OutputDir> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(OutputDir { root: root.to_path_buf(), files: BTreeSet::new(), timings: Vec::new(), warnings: Vec::new(), errors: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        self.files.insert(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }

    /// Runs `f`, recording its duration under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.timings.push(StageTiming { stage: stage.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn files(&self) -> impl Iterator<Item = &String> {
        self.files.iter()
    }

    /// Writes `manifest.json`, listing itself among the files.
    pub fn finish(mut self, name: &str, config_hash: String, method: String) -> Result<RunManifest> {
        self.files.insert(MANIFEST_FILE.to_string());
        let manifest = RunManifest {
            name: name.to_string(),
            config_hash,
            method,
            files: self.files.iter().cloned().collect(),
            timings: std::mem::take(&mut self.timings),
            warnings: std::mem::take(&mut self.warnings),
            errors: std::mem::take(&mut self.errors),
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_written_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("b.csv", "x\n").unwrap();
        out.timed("stage", |o| o.write("a.csv", "y\n")).unwrap();
        let m = out.finish("t", "h".into(), "naive".into()).unwrap();
        assert_eq!(m.files, vec!["a.csv", "b.csv", "manifest.json"]);
        let on_disk: BTreeSet<String> =
            fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
        assert_eq!(on_disk.into_iter().collect::<Vec<_>>(), m.files);
        assert_eq!(m.timings.len(), 1);
    }
}
