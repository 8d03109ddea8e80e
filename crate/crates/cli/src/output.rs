//! Atomic artifact writing and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: &str, text: String) -> Self {
        Artifact { name: name.to_string(), bytes: text.into_bytes() }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> Result<Self, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::io(format!("serializing {name}: {e}")))?;
        bytes.push(b'\n');
        Ok(Artifact { name: name.to_string(), bytes })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Versions {
    pub fluidex: &'static str,
    pub fluidex_cli: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub versions: Versions,
    pub command: &'static str,
    pub config_sha256: String,
    pub config: &'a Settings,
    pub outputs: Vec<OutputEntry>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to a temporary file in `dir` and renames it over `name`.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let target = dir.join(name);
    let mut tmp = tempfile::Builder::new()
        .prefix(&format!(".{name}."))
        .tempfile_in(dir)
        .map_err(|e| CliError::io(format!("creating a temporary file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(format!("writing {}: {e}", target.display())))?;
    tmp.persist(&target).map_err(|e| CliError::io(format!("renaming onto {}: {e}", target.display())))?;
    Ok(target)
}

/// Writes every artifact, then the manifest that lists them.
pub fn write_all(settings: &Settings, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let dir = settings.out_dir();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut outputs = Vec::new();
    for a in artifacts {
        if a.name == MANIFEST {
            return Err(CliError::io("an artifact may not be named manifest.json"));
        }
        written.push(write_atomic(&dir, &a.name, &a.bytes)?);
        outputs.push(OutputEntry { file: a.name.clone(), bytes: a.bytes.len(), sha256: sha256_hex(&a.bytes) });
    }
    let config_bytes = serde_json::to_vec(settings).map_err(|e| CliError::io(format!("serializing config: {e}")))?;
    let manifest = Manifest {
        tool: "fluidex",
        versions: Versions { fluidex: fluidex::VERSION, fluidex_cli: env!("CARGO_PKG_VERSION") },
        command: settings.command.as_str(),
        config_sha256: sha256_hex(&config_bytes),
        config: settings,
        outputs,
    };
    let m = Artifact::json(MANIFEST, &manifest)?;
    written.push(write_atomic(&dir, MANIFEST, &m.bytes)?);
    Ok(written)
}

/// Formats a float for CSV with full round-trip precision.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// A gnuplot script drawing columns of `csv` grouped by the first column.
pub fn gnuplot_grouped(csv: &str, title: &str, x_col: usize, y_col: usize, xlabel: &str, ylabel: &str, logscale: bool) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside\n");
    s.push_str(&format!("set title '{title}'\nset xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"));
    if logscale {
        s.push_str("set logscale xy\n");
    }
    s.push_str(&format!(
        "groups = system(\"tail -n +2 {csv} | cut -d, -f1 | uniq\")\n\
         plot for [g in groups] '{csv}' using (strcol(1) eq g ? ${x_col} : NaN):{y_col} with linespoints title g\n"
    ));
    s.push_str("pause mouse close\n");
    s
}
