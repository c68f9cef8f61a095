//! Per-run output directories and their manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Directory collecting the artifacts of one command invocation.
pub struct RunDir {
    path: PathBuf,
    command: String,
    files: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    input: &'a str,
    exit_code: i32,
    files: &'a [String],
}

impl RunDir {
    /// Creates `<root>/<command>-<label>-<n>` with the first unused `n`.
    pub fn create(root: &Path, command: &str, label: &str) -> Result<RunDir> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let stem: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect();
        let path = (1..)
            .map(|n| root.join(format!("{command}-{stem}-{n:03}")))
            .find(|p| !p.exists())
            .expect("unbounded counter");
        fs::create_dir(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(RunDir { path, command: command.to_string(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let p = self.path.join(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        self.files.push(name.to_string());
        Ok(p)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self, input: &str, exit_code: i32) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: "srgkit",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            input,
            exit_code,
            files: &self.files,
        };
        let p = self.path.join("manifest.json");
        fs::write(&p, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(self.path)
    }
}
