use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, CliResult};

const MODULE: &str = "cli";

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(margin_scope::Error::Io {
        module: MODULE,
        source: std::io::Error::new(e.kind(), format!("{}: {e}", path.display())),
    })
}

/// Where a command writes: `--out` names a file when it has a known
/// extension and a directory otherwise.
#[derive(Debug, Clone)]
pub struct OutTarget {
    dir: PathBuf,
    primary: PathBuf,
    file_mode: bool,
    written: Vec<String>,
}

impl OutTarget {
    pub fn new(out: &Path, default_name: &str) -> CliResult<Self> {
        let file_mode = matches!(out.extension().and_then(|e| e.to_str()), Some("csv" | "json" | "svg"));
        let (dir, primary) = if file_mode {
            let dir = out
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            (dir, out.to_path_buf())
        } else {
            (out.to_path_buf(), out.join(default_name))
        };
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(OutTarget {
            dir,
            primary,
            file_mode,
            written: Vec::new(),
        })
    }

    pub fn primary(&self) -> &Path {
        &self.primary
    }

    /// `<stem>_<tag>.<ext>` next to the primary output.
    pub fn sibling(&self, tag: &str, ext: &str) -> PathBuf {
        let stem = self.primary.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
        self.dir.join(format!("{stem}_{tag}.{ext}"))
    }

    /// Writes a file through `f`, recording it for the manifest.
    pub fn write<F>(&mut self, path: &Path, f: F) -> CliResult<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
    {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w)?;
        w.flush().map_err(|e| io_err(path, e))?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        self.written.push(name);
        Ok(())
    }

    fn manifest_path(&self) -> PathBuf {
        if self.file_mode {
            let stem = self.primary.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
            self.dir.join(format!("{stem}.manifest.json"))
        } else {
            self.dir.join("manifest.json")
        }
    }

    /// Provenance record: subcommand, full flag values, seed and outputs.
    pub fn finish<A: Serialize>(
        mut self,
        subcommand: &str,
        seed: u64,
        flags: &A,
        notes: &[(&str, String)],
    ) -> CliResult<()> {
        let flags = serde_json::to_value(flags).map_err(|e| CliError::Internal(e.to_string()))?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            flags,
            outputs: std::mem::take(&mut self.written),
            notes: notes.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        };
        let path = self.manifest_path();
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    seed: u64,
    flags: serde_json::Value,
    outputs: Vec<String>,
    notes: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_directory_targets() {
        let dir = tempfile::tempdir().unwrap();
        let f = OutTarget::new(&dir.path().join("sub/r.csv"), "x.csv").unwrap();
        assert_eq!(f.primary(), dir.path().join("sub/r.csv"));
        assert_eq!(f.sibling("test", "csv"), dir.path().join("sub/r_test.csv"));
        assert_eq!(f.manifest_path(), dir.path().join("sub/r.manifest.json"));
        let d = OutTarget::new(&dir.path().join("o"), "fig3.csv").unwrap();
        assert_eq!(d.primary(), dir.path().join("o/fig3.csv"));
        assert_eq!(d.manifest_path(), dir.path().join("o/manifest.json"));
        assert!(dir.path().join("o").is_dir());
    }
}
