//! Files written by the verbs, and the manifest that fingerprints them.

use std::path::Path;

use ftc_sensor::floquet::{CatPair, LmgParams};
use ftc_sensor::qfi::{Provenance, StateFamily};
use ftc_sensor::signal::SignalSpec;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Scenario;
use crate::run::{Item, Prepared};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ItemRecord {
    pub state: String,
    pub provenance: Provenance,
    /// Sweep point directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<String>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub scenario: &'a Scenario,
    pub outputs: Vec<OutputRecord>,
    pub items: Vec<ItemRecord>,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'static str, seed: Option<u64>, scenario: &'a Scenario) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            scenario,
            outputs: Vec::new(),
            items: Vec::new(),
        }
    }

    pub fn has_errors(&self) -> bool {
        self.items.iter().any(|i| i.status == "error")
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        write_file(&dir.join("manifest.json"), text.as_bytes()).map(|_| ())
    }
}

pub fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))
}

/// Writes `bytes` and returns their SHA-256 as lowercase hex.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    std::fs::write(path, bytes).map_err(io_error(path))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn relative(base: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

#[derive(Serialize)]
struct Sidecar<'a> {
    params: &'a LmgParams,
    state: &'a StateFamily,
    signal: &'a SignalSpec,
    provenance: Provenance,
    precision_bits: u32,
    /// Weight of the state on the cat doublets.
    p_cat: f64,
    pairs: &'a [CatPair],
    flagged: &'a [usize],
}

/// Writes one CSV and JSON sidecar per computed item into `dir`, recording
/// them (relative to `base`) in the manifest.
pub fn write_items(base: &Path, dir: &Path, scn: &Scenario, prep: &Prepared, items: &[Item], manifest: &mut Manifest) -> Result<(), CliError> {
    create_dir(dir)?;
    let (sig, _) = scn.dynamics()?;
    for item in items {
        let stem = format!("{}_{}", item.state.tag(), item.provenance);
        let mut record = ItemRecord {
            state: item.state.tag(),
            provenance: item.provenance,
            point: None,
            status: "ok",
            message: None,
            output: None,
        };
        match &item.outcome {
            Ok(c) => {
                let mut csv = Vec::new();
                c.series.write_csv(&mut csv).map_err(io_error(dir))?;
                let csv_path = dir.join(format!("{stem}.csv"));
                let sha = write_file(&csv_path, &csv)?;
                manifest.outputs.push(OutputRecord {
                    path: relative(base, &csv_path),
                    sha256: sha,
                });
                let side = Sidecar {
                    params: &scn.params,
                    state: &item.state,
                    signal: sig,
                    provenance: item.provenance,
                    precision_bits: prep.spec.bits(),
                    p_cat: item.p_cat,
                    pairs: prep.spec.pairs(),
                    flagged: &c.flagged,
                };
                let mut json = serde_json::to_string_pretty(&side).map_err(|e| CliError::Numerical(e.to_string()))?;
                json.push('\n');
                let json_path = dir.join(format!("{stem}.json"));
                let sha = write_file(&json_path, json.as_bytes())?;
                manifest.outputs.push(OutputRecord {
                    path: relative(base, &json_path),
                    sha256: sha,
                });
                if !c.flagged.is_empty() {
                    log::warn!("{stem}: {} oracle points flagged by the halving check", c.flagged.len());
                }
                record.output = Some(relative(base, &csv_path));
            }
            Err(e) => {
                log::warn!("{stem}: {}", e.message());
                record.status = e.status();
                record.message = Some(e.message().to_string());
            }
        }
        manifest.items.push(record);
    }
    Ok(())
}

pub fn record_output(base: &Path, path: &Path, sha256: String, manifest: &mut Manifest) {
    manifest.outputs.push(OutputRecord {
        path: relative(base, path),
        sha256,
    });
}
