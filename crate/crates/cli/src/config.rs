//! Run configuration. Values come from built-in defaults, then an optional
//! TOML file, then command-line flags; the merged result is echoed next to
//! every output.

use std::path::{Path, PathBuf};

use radpp_core::metrics::{MetricConfig, Region};
use radpp_core::morphology::Connectivity;
use radpp_core::policy::{FitConfig, Task};
use radpp_core::radiomics::ExtractionSettings;
use radpp_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Metric settings; `regions` falls back to the task's region set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub regions: Option<Vec<Region>>,
    pub tolerances: Vec<f64>,
    pub dilation_iters: usize,
    pub connectivity: Connectivity,
}

impl Default for MetricsSection {
    fn default() -> Self {
        let m = MetricConfig::default();
        Self {
            regions: None,
            tolerances: m.tolerances,
            dilation_iters: m.dilation_iters,
            connectivity: m.connectivity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub synth: SynthConfig,
    pub features: ExtractionSettings,
    pub metrics: MetricsSection,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::GliPre,
            synth: SynthConfig::default(),
            features: ExtractionSettings::default(),
            metrics: MetricsSection::default(),
            fit: FitConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig {
            regions: self.metrics.regions.clone().unwrap_or_else(|| self.task.regions()),
            tolerances: self.metrics.tolerances.clone(),
            dilation_iters: self.metrics.dilation_iters,
            connectivity: self.metrics.connectivity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.metric_config();
        if m.regions.is_empty() {
            return Err(CliError::config("metrics.regions must not be empty"));
        }
        if m.tolerances.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(CliError::config("metrics.tolerances must be positive"));
        }
        if self.features.bin_width.is_nan() || self.features.bin_width <= 0.0 || self.features.bin_count == 0 {
            return Err(CliError::config("features.bin_width and features.bin_count must be positive"));
        }
        if self.features.sequences.is_empty() {
            return Err(CliError::config("features.sequences must not be empty"));
        }
        Ok(())
    }

    /// Writes the effective configuration as TOML, tagged with the
    /// subcommand that produced it.
    pub fn echo(&self, command: &str, path: &Path) -> Result<()> {
        let body = toml::to_string(self).map_err(|e| CliError::config(format!("serializing config: {e}")))?;
        let text = format!("# effective configuration of `radpp {command}`\n{body}");
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

/// Where the echo of a run writing into `out` goes: inside an output
/// directory, or beside an output file.
pub fn echo_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("run-config.toml")
    } else {
        let name = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.with_file_name(format!("{name}.config.toml"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_keeps_other_defaults() {
        let cfg: RunConfig = toml::from_str("task = \"ssa\"\n[fit]\npcc_grid = [0, 10]\n").unwrap();
        assert_eq!(cfg.task, Task::Ssa);
        assert_eq!(cfg.fit.pcc_grid, vec![0, 10]);
        assert_eq!(cfg.fit.cutoff_grid, FitConfig::default().cutoff_grid);
        assert_eq!(cfg.metric_config().regions, Task::Ssa.regions());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[fit]\npcc = [0]\n").is_err());
    }

    #[test]
    fn echo_locations() {
        assert_eq!(echo_path(Path::new("/o"), true), Path::new("/o/run-config.toml"));
        assert_eq!(echo_path(Path::new("/o/m.csv"), false), Path::new("/o/m.config.toml"));
    }
}
