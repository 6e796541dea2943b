//! Scenario documents (TOML) and command-line overrides.

use std::path::Path;

use ftc_sensor::floquet::LmgParams;
use ftc_sensor::oracle::PropagationConfig;
use ftc_sensor::precision::{Precision, DEFAULT_EXTENDED_BITS};
use ftc_sensor::qfi::{log_grid, Provenance, StateFamily};
use ftc_sensor::signal::SignalSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    pub n_max: usize,
    #[serde(default = "default_per_decade")]
    pub per_decade: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Points below `n_min` are dropped (`n = 0` is always kept).
    #[serde(default)]
    pub n_min: usize,
}

fn default_spacing() -> Spacing {
    Spacing::Log
}

fn default_per_decade() -> usize {
    20
}

fn default_stride() -> usize {
    1
}

impl GridSpec {
    pub fn indices(&self) -> Result<Vec<usize>, CliError> {
        let raw = match self.spacing {
            Spacing::Log => {
                if self.per_decade == 0 {
                    return Err(CliError::Usage("grid.per_decade must be positive".into()));
                }
                log_grid(self.n_max, self.per_decade)
            }
            Spacing::Linear => {
                if self.stride == 0 {
                    return Err(CliError::Usage("grid.stride must be positive".into()));
                }
                (0..=self.n_max).step_by(self.stride).collect()
            }
        };
        Ok(raw.into_iter().filter(|&n| n == 0 || n >= self.n_min).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    /// Largest spin count the oracle accepts.
    #[serde(default = "default_cap")]
    pub cap: usize,
    /// Largest number of periods the oracle propagates.
    #[serde(default = "default_max_periods")]
    pub max_periods: usize,
    #[serde(flatten)]
    pub propagation: PropagationConfig,
}

fn default_cap() -> usize {
    14
}

fn default_max_periods() -> usize {
    100_000
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec {
            cap: default_cap(),
            max_periods: default_max_periods(),
            propagation: PropagationConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(rename = "N", default)]
    pub n: Vec<usize>,
    #[serde(rename = "B", default)]
    pub b: Vec<f64>,
    /// Signal amplitudes.
    #[serde(default)]
    pub h: Vec<f64>,
    /// Stroboscopic indices tabulated in the sweep summary.
    #[serde(default)]
    pub summary_n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiclassicalSpec {
    #[serde(default = "default_levels")]
    pub k: Vec<usize>,
    #[serde(rename = "N", default = "default_sizes")]
    pub n: Vec<usize>,
    #[serde(default = "default_fields")]
    pub b: Vec<f64>,
}

fn default_levels() -> Vec<usize> {
    vec![0, 1, 2, 3]
}

fn default_sizes() -> Vec<usize> {
    vec![20, 40, 60]
}

fn default_fields() -> Vec<f64> {
    (0..=14).map(|i| 0.05 * i as f64).collect()
}

impl Default for SemiclassicalSpec {
    fn default() -> Self {
        SemiclassicalSpec {
            k: default_levels(),
            n: default_sizes(),
            b: default_fields(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_bits")]
    pub precision: u32,
    #[serde(default = "default_provenance")]
    pub provenance: Vec<Provenance>,
    pub params: LmgParams,
    pub signal: Option<SignalSpec>,
    #[serde(default)]
    pub states: Vec<StateFamily>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub oracle: OracleSpec,
    pub sweep: Option<SweepSpec>,
    pub semiclassical: Option<SemiclassicalSpec>,
}

fn default_bits() -> u32 {
    DEFAULT_EXTENDED_BITS
}

fn default_provenance() -> Vec<Provenance> {
    vec![Provenance::HsoFull]
}

/// Flags that take precedence over the document.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub precision: Option<u32>,
    pub provenance: Option<Vec<Provenance>>,
}

impl Scenario {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text, overrides).map_err(|e| match e {
            CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut s: Scenario = toml::from_str(text).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(bits) = overrides.precision {
            s.precision = bits;
        }
        if let Some(p) = &overrides.provenance {
            s.provenance = p.clone();
        }
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.precision_mode()?;
        if let Some(sig) = &self.signal {
            sig.validate(self.params.t).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if self.states.iter().any(|s| matches!(s, StateFamily::Custom)) {
            return Err(CliError::Usage("custom states cannot be given in a scenario".into()));
        }
        self.oracle
            .propagation
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(())
    }

    pub fn precision_mode(&self) -> Result<Precision, CliError> {
        Precision::from_bits(self.precision).map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Pieces every QFI verb needs.
    pub fn dynamics(&self) -> Result<(&SignalSpec, &GridSpec), CliError> {
        let sig = self
            .signal
            .as_ref()
            .ok_or_else(|| CliError::Usage("scenario has no [signal] section".into()))?;
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| CliError::Usage("scenario has no [grid] section".into()))?;
        if self.states.is_empty() {
            return Err(CliError::Usage("scenario lists no [[states]]".into()));
        }
        Ok((sig, grid))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProvenanceList(pub Vec<Provenance>);

pub fn parse_provenance_list(s: &str) -> Result<ProvenanceList, String> {
    s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>().map(ProvenanceList)
}
