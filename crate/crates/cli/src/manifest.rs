//! Run manifests and failure cleanup for command outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Resolved flags in declaration order; doubles as the manifest's config
/// section and the source of the replay command line.
#[derive(Default)]
pub struct FlagSet {
    pairs: Vec<(String, String)>,
}

impl FlagSet {
    pub fn new() -> Self {
        FlagSet::default()
    }

    pub fn add(&mut self, flag: &str, value: impl ToString) -> &mut Self {
        self.pairs.push((flag.to_string(), value.to_string()));
        self
    }

    /// Full command line that reproduces this run.
    pub fn replay(&self, command: &str) -> String {
        let mut line = format!("gammasep {command}");
        for (flag, value) in &self.pairs {
            let value = if value.chars().any(char::is_whitespace) {
                format!("{value:?}")
            } else {
                value.clone()
            };
            line.push_str(&format!(" --{flag} {value}"));
        }
        line
    }
}

/// Writes the run manifest: `format manifest v1`, the command, tool
/// version, creation time, every resolved flag, result facts, output
/// paths, and a replay line. `created_unix` is the only line two identical
/// runs disagree on; comparisons skip it.
pub struct RunManifest<'a> {
    command: &'a str,
    flags: &'a FlagSet,
    facts: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl<'a> RunManifest<'a> {
    pub fn new(command: &'a str, flags: &'a FlagSet) -> Self {
        RunManifest {
            command,
            flags,
            facts: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records a derived result (event counts, accuracy, …) — informative,
    /// not part of the replay line.
    pub fn fact(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.facts.push((key.to_string(), value.to_string()));
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "format manifest v1")?;
        writeln!(w, "command {}", self.command)?;
        writeln!(w, "version {}", env!("CARGO_PKG_VERSION"))?;
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(w, "created_unix {created}")?;
        for (flag, value) in &self.flags.pairs {
            writeln!(w, "flag_{} {}", flag.replace('-', "_"), value)?;
        }
        for (key, value) in &self.facts {
            writeln!(w, "{key} {value}")?;
        }
        for output in &self.outputs {
            writeln!(w, "output {output}")?;
        }
        writeln!(w, "replay {}", self.flags.replay(self.command))?;
        w.flush()?;
        Ok(())
    }
}

/// Deletes every tracked output when dropped, unless the command reached
/// `disarm` — a failed run leaves no partial files behind.
pub struct OutputGuard {
    paths: Vec<PathBuf>,
    armed: bool,
}

impl OutputGuard {
    pub fn new() -> Self {
        OutputGuard {
            paths: Vec::new(),
            armed: true,
        }
    }

    /// Registers an output path before anything is written to it.
    pub fn track(&mut self, path: PathBuf) -> PathBuf {
        self.paths.push(path.clone());
        path
    }

    pub fn disarm(mut self) {
        self.armed = false;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.armed {
            for path in &self.paths {
                let _ = fs::remove_file(path);
            }
        }
    }
}
